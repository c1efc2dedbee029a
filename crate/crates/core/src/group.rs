//! Real matrix Lie groups and their Lie algebras.
//!
//! Supported structure groups are `GL(k)`, `SO(k)` and `U(1)` realized as
//! `SO(2)`. Group and algebra elements are checked on construction.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

/// Orthogonality tolerance for `SO(k)` elements, `‖gᵀg − I‖_F`.
pub const ORTHOGONALITY_TOL: f64 = 1e-9;
/// Skew-symmetry tolerance for `so(k)` elements, `‖a + aᵀ‖_F`.
pub const SKEW_TOL: f64 = 1e-12;
/// Smallest admissible `|det g|` for `GL(k)` elements.
pub const DET_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StructureGroup {
    GL(usize),
    SO(usize),
    /// `U(1)` realized as `SO(2)`.
    U1,
}

impl StructureGroup {
    pub fn new_gl(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("GL(k) needs k ≥ 1".into()));
        }
        Ok(StructureGroup::GL(k))
    }

    pub fn new_so(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("SO(k) needs k ≥ 1".into()));
        }
        Ok(StructureGroup::SO(k))
    }

    /// Matrix size.
    pub fn k(self) -> usize {
        match self {
            StructureGroup::GL(k) | StructureGroup::SO(k) => k,
            StructureGroup::U1 => 2,
        }
    }

    pub fn is_orthogonal(self) -> bool {
        !matches!(self, StructureGroup::GL(_))
    }

    pub fn identity(self) -> GroupElement {
        GroupElement {
            g: Matrix::identity(self.k(), self.k()),
            group: self,
        }
    }
}

impl fmt::Display for StructureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StructureGroup::GL(k) => write!(f, "GL({k})"),
            StructureGroup::SO(k) => write!(f, "SO({k})"),
            StructureGroup::U1 => write!(f, "U(1)"),
        }
    }
}

impl std::str::FromStr for StructureGroup {
    type Err = Error;

    /// Accepts `SO(k)`, `GL(k)`, `U(1)` and `U1`, ignoring case and spaces.
    fn from_str(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_uppercase();
        if t == "U(1)" || t == "U1" {
            return Ok(StructureGroup::U1);
        }
        let bad = || Error::InvalidArgument(format!("unknown structure group `{s}`"));
        let (family, rest) = t.split_at(t.find('(').ok_or_else(bad)?);
        let k: usize = rest
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .and_then(|r| r.parse().ok())
            .ok_or_else(bad)?;
        match family {
            "SO" => StructureGroup::new_so(k),
            "GL" => StructureGroup::new_gl(k),
            _ => Err(bad()),
        }
    }
}

/// `‖gᵀg − I‖_F`.
pub fn orthogonality_defect(g: &Matrix) -> f64 {
    let k = g.nrows();
    (g.transpose() * g - Matrix::identity(k, k)).norm()
}

fn check_shape(m: &Matrix, group: StructureGroup) -> Result<()> {
    let k = group.k();
    if m.nrows() != k || m.ncols() != k {
        return Err(Error::InvalidArgument(format!(
            "expected a {k}×{k} matrix for {group}, got {}×{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// An element of a structure group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    g: Matrix,
    group: StructureGroup,
}

impl GroupElement {
    /// Checked constructor.
    pub fn new(g: Matrix, group: StructureGroup) -> Result<Self> {
        check_shape(&g, group)?;
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotInGroup {
                group: group.to_string(),
                reason: "non-finite entries".into(),
            });
        }
        let det = g.determinant();
        if group.is_orthogonal() {
            let defect = orthogonality_defect(&g);
            if defect > ORTHOGONALITY_TOL || det <= 0.0 {
                return Err(Error::NotInGroup {
                    group: group.to_string(),
                    reason: format!("‖gᵀg − I‖_F = {defect:.3e}, det = {det:.6}"),
                });
            }
        } else if det.abs() <= DET_FLOOR {
            return Err(Error::NotInGroup {
                group: group.to_string(),
                reason: format!("|det g| = {:.3e}", det.abs()),
            });
        }
        Ok(GroupElement { g, group })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.g
    }

    pub fn into_matrix(self) -> Matrix {
        self.g
    }

    pub fn group(&self) -> StructureGroup {
        self.group
    }

    pub fn inverse(&self) -> GroupElement {
        let g = if self.group.is_orthogonal() {
            self.g.transpose()
        } else {
            self.g.clone().try_inverse().expect("checked invertible")
        };
        GroupElement {
            g,
            group: self.group,
        }
    }

    /// Group product `self · rhs`; the result is re-projected onto the group.
    pub fn compose(&self, rhs: &GroupElement) -> Result<GroupElement> {
        project_to_group(&(&self.g * &rhs.g), self.group)
    }

    /// Rotation angle for `SO(2)`/`U(1)` (`atan2`, in `(−π, π]`) or `SO(3)`
    /// (trace formula, in `[0, π]`).
    pub fn rotation_angle(&self) -> Option<f64> {
        match self.group {
            StructureGroup::U1 | StructureGroup::SO(2) => {
                let a = self.g[(1, 0)].atan2(self.g[(0, 0)]);
                Some(if a <= -std::f64::consts::PI { a + 2.0 * std::f64::consts::PI } else { a })
            }
            StructureGroup::SO(3) => {
                let c = ((self.g.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
                Some(c.acos())
            }
            _ => None,
        }
    }

    pub fn orthogonality_defect(&self) -> f64 {
        orthogonality_defect(&self.g)
    }
}

/// An element of the Lie algebra of a structure group.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    a: Matrix,
    group: StructureGroup,
}

impl AlgebraElement {
    /// Checked constructor: skew-symmetry within [`SKEW_TOL`] for orthogonal
    /// groups.
    pub fn new(a: Matrix, group: StructureGroup) -> Result<Self> {
        check_shape(&a, group)?;
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotInAlgebra {
                group: group.to_string(),
                reason: "non-finite entries".into(),
            });
        }
        if group.is_orthogonal() {
            let skew = (&a + a.transpose()).norm();
            if skew > SKEW_TOL {
                return Err(Error::NotInAlgebra {
                    group: group.to_string(),
                    reason: format!("‖a + aᵀ‖_F = {skew:.3e}"),
                });
            }
        }
        Ok(AlgebraElement { a, group })
    }

    /// Nearest algebra element: the skew part for orthogonal groups. Used for
    /// values computed in floating point (logarithms, finite differences).
    pub fn projected(a: Matrix, group: StructureGroup) -> Result<Self> {
        check_shape(&a, group)?;
        let a = if group.is_orthogonal() {
            (&a - a.transpose()) * 0.5
        } else {
            a
        };
        AlgebraElement::new(a, group)
    }

    pub fn zero(group: StructureGroup) -> Self {
        AlgebraElement {
            a: Matrix::zeros(group.k(), group.k()),
            group,
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn into_matrix(self) -> Matrix {
        self.a
    }

    pub fn group(&self) -> StructureGroup {
        self.group
    }
}

fn one_norm(m: &Matrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

// Padé(13) coefficients and the scaling threshold θ₁₃ from Higham (2005).
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a Padé(13) approximant.
pub fn expm(a: &Matrix) -> Matrix {
    let k = a.nrows();
    let norm = one_norm(a);
    if norm == 0.0 {
        return Matrix::identity(k, k);
    }
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * 2f64.powi(-s);
    let b = &PADE13;
    let id = Matrix::identity(k, k);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &id * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &id * b[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .expect("Padé denominator is nonsingular for scaled arguments");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Principal square root by the Denman–Beavers iteration.
fn sqrtm(x: &Matrix) -> Option<Matrix> {
    let k = x.nrows();
    let mut y = x.clone();
    let mut z = Matrix::identity(k, k);
    for _ in 0..100 {
        let yi = y.clone().try_inverse()?;
        let zi = z.clone().try_inverse()?;
        let y_next = (&y + zi) * 0.5;
        let z_next = (&z + yi) * 0.5;
        let delta = (&y_next - &y).norm();
        y = y_next;
        z = z_next;
        if delta <= 1e-15 * y.norm().max(1.0) {
            return Some(y);
        }
    }
    Some(y)
}

/// Principal matrix logarithm by inverse scaling and squaring. Requires
/// `‖m − I‖_F < 1`.
pub fn logm(m: &Matrix) -> Result<Matrix> {
    let k = m.nrows();
    let id = Matrix::identity(k, k);
    let distance = (m - &id).norm();
    if !(distance < 1.0) {
        return Err(Error::OutOfBranch { distance });
    }
    let mut x = m.clone();
    let mut squarings = 0;
    while (&x - &id).norm() > 0.05 {
        x = sqrtm(&x).ok_or(Error::OutOfBranch { distance })?;
        squarings += 1;
    }
    // log(I + E) = E − E²/2 + E³/3 − …, with ‖E‖ ≤ 0.05.
    let e = &x - &id;
    let mut power = e.clone();
    let mut sum = e.clone();
    for n in 2..60 {
        power = &power * &e;
        let term = &power * (if n % 2 == 0 { -1.0 } else { 1.0 } / n as f64);
        sum += &term;
        if term.norm() < 1e-18 {
            break;
        }
    }
    Ok(sum * 2f64.powi(squarings))
}

/// Group exponential of an algebra element.
pub fn group_exp(a: &AlgebraElement) -> GroupElement {
    let g = expm(a.matrix());
    GroupElement::new(g, a.group()).expect("exponential of an algebra element lies in the group")
}

/// Principal-branch logarithm; `OutOfBranch` unless `‖g − I‖_F < 1`.
pub fn group_log(g: &GroupElement) -> Result<AlgebraElement> {
    let a = logm(g.matrix())?;
    AlgebraElement::projected(a, g.group())
}

/// Maps a raw matrix onto the group: the polar factor `U·Vᵀ` for orthogonal
/// groups, a determinant check for `GL(k)`.
pub fn project_to_group(m: &Matrix, group: StructureGroup) -> Result<GroupElement> {
    check_shape(m, group)?;
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularInput("non-finite entries".into()));
    }
    let det = m.determinant();
    if !group.is_orthogonal() {
        if det.abs() <= DET_FLOOR {
            return Err(Error::SingularInput(format!("|det| = {:.3e}", det.abs())));
        }
        return Ok(GroupElement {
            g: m.clone(),
            group,
        });
    }
    if det <= 0.0 {
        return Err(Error::SingularInput(format!(
            "det = {det:.3e} is not positive"
        )));
    }
    let svd = m.clone().svd(true, true);
    let smallest = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    if smallest <= 1e-12 {
        return Err(Error::SingularInput(format!(
            "smallest singular value {smallest:.3e}"
        )));
    }
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    GroupElement::new(u * v_t, group)
}

/// Standard basis of `so(3)`: `(L_i)_{jk} = −ε_{ijk}`, so `L_v w = v × w`.
pub fn so3_generator(i: usize) -> Matrix {
    let mut m = Matrix::zeros(3, 3);
    let (j, k) = match i {
        0 => (1, 2),
        1 => (2, 0),
        2 => (0, 1),
        _ => panic!("so(3) has three generators"),
    };
    m[(j, k)] = -1.0;
    m[(k, j)] = 1.0;
    m
}

/// `J = [[0, −1], [1, 0]]`, the generator of `so(2)`.
pub fn so2_generator() -> Matrix {
    Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])
}

pub fn rotation2(theta: f64) -> Matrix {
    let (s, c) = theta.sin_cos();
    Matrix::from_row_slice(2, 2, &[c, -s, s, c])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_names_parse() {
        assert_eq!("SO(3)".parse::<StructureGroup>().unwrap(), StructureGroup::SO(3));
        assert_eq!("u(1)".parse::<StructureGroup>().unwrap(), StructureGroup::U1);
        assert_eq!("GL( 2 )".parse::<StructureGroup>().unwrap(), StructureGroup::GL(2));
        assert!("SU(2)".parse::<StructureGroup>().is_err());
        assert!("SO(0)".parse::<StructureGroup>().is_err());
    }
    use std::f64::consts::PI;

    fn so2() -> StructureGroup {
        StructureGroup::U1
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let g = group_exp(&AlgebraElement::zero(StructureGroup::SO(3)));
        assert_eq!(g.matrix(), &Matrix::identity(3, 3));
    }

    #[test]
    fn exp_quarter_turn() {
        let a = AlgebraElement::new(so2_generator() * (PI / 2.0), so2()).unwrap();
        let g = group_exp(&a);
        let expected = Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!((g.matrix() - expected).norm() < 1e-15);
    }

    #[test]
    fn log_identity_and_small_rotation() {
        let l = group_log(&so2().identity()).unwrap();
        assert_eq!(l.matrix().norm(), 0.0);
        let g = GroupElement::new(rotation2(0.3), so2()).unwrap();
        let l = group_log(&g).unwrap();
        assert!((l.matrix() - so2_generator() * 0.3).norm() < 1e-12);
    }

    #[test]
    fn log_half_turn_is_out_of_branch() {
        let g = GroupElement::new(rotation2(PI), so2()).unwrap();
        assert!(matches!(group_log(&g), Err(Error::OutOfBranch { .. })));
    }

    #[test]
    fn exp_of_large_argument() {
        let a = so2_generator() * 40.0;
        assert!((expm(&a) - rotation2(40.0)).norm() < 1e-12);
    }

    #[test]
    fn log_of_general_linear_element() {
        let m = Matrix::from_row_slice(2, 2, &[1.2, 0.3, -0.1, 0.9]);
        let l = logm(&m).unwrap();
        assert!((expm(&l) - m).norm() < 1e-13);
    }

    #[test]
    fn projection_of_noisy_identity() {
        let noise = Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, -0.3]) * 1e-8;
        let g = project_to_group(&(Matrix::identity(2, 2) + noise), so2()).unwrap();
        assert!(g.orthogonality_defect() < 1e-14);
    }

    #[test]
    fn projection_rejects_singular_input() {
        let m = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        assert!(matches!(project_to_group(&m, so2()), Err(Error::SingularInput(_))));
        let reflection = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(project_to_group(&reflection, so2()).is_err());
    }

    #[test]
    fn checked_constructors() {
        assert!(GroupElement::new(Matrix::identity(2, 2) * 2.0, so2()).is_err());
        assert!(GroupElement::new(Matrix::identity(2, 2) * 2.0, StructureGroup::GL(2)).is_ok());
        assert!(GroupElement::new(Matrix::zeros(2, 2), StructureGroup::GL(2)).is_err());
        assert!(AlgebraElement::new(Matrix::identity(2, 2), so2()).is_err());
        assert!(AlgebraElement::new(Matrix::identity(3, 3), StructureGroup::GL(3)).is_ok());
        assert!(GroupElement::new(Matrix::identity(3, 3), so2()).is_err());
    }

    #[test]
    fn rotation_angles() {
        let g = GroupElement::new(rotation2(-1.5), so2()).unwrap();
        assert!((g.rotation_angle().unwrap() + 1.5).abs() < 1e-15);
        let g = GroupElement::new(rotation2(PI), so2()).unwrap();
        assert!((g.rotation_angle().unwrap() - PI).abs() < 1e-15);
        let a = AlgebraElement::new(so3_generator(2) * 0.4, StructureGroup::SO(3)).unwrap();
        assert!((group_exp(&a).rotation_angle().unwrap() - 0.4).abs() < 1e-14);
    }

    #[test]
    fn so3_generators_commute_like_the_cross_product() {
        let (l1, l2, l3) = (so3_generator(0), so3_generator(1), so3_generator(2));
        assert_eq!(&l1 * &l2 - &l2 * &l1, l3);
        let w = nalgebra::DVector::from_vec(vec![0.0, 1.0, 0.0]);
        // e1 × e2 = e3
        assert_eq!(l1 * w, nalgebra::DVector::from_vec(vec![0.0, 0.0, 1.0]));
    }
}
