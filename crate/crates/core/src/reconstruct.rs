//! Rebuilding a connection from a transport oracle.
//!
//! The lift of a tangent vector `v` at `(x, p)` is the velocity at `t = 0` of
//! the horizontal lift of any path with initial velocity `v`. Numerically it
//! is a symmetric difference of two short lifts through `p`,
//!
//! ```text
//! ξ = log(q(h) q(−h)⁻¹) / (2h),    q(±h) = lift of α|[0,±h] through p,
//! ```
//!
//! recorded in the right trivialization (`q̇ q⁻¹`). For the engine's
//! convention `U′ = −A(γ̇) U` this estimates `−A_x(v)`, with an `O(h²)` error.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::chart::{ChartPoint, TangentVector};
use crate::connection::ConnectionForm;
use crate::error::{Error, Result};
use crate::group::{logm, AlgebraElement, GroupElement, Matrix, StructureGroup};
use crate::path::PathSpec;
use crate::transport::{EngineOracle, SolverConfig, TransportOracle};

/// Admissible range of the difference step.
pub const H_RANGE: (f64, f64) = (1e-6, 1e-2);
/// Largest admissible condition number of a horizontal basis.
pub const MAX_CONDITION: f64 = 1e6;
/// Tolerance for the shared-velocity precondition of the independence check.
pub const VELOCITY_TOL: f64 = 1e-10;
/// Errors at or below this level count as exact (no measurable order).
pub const DEGENERATE_LEVEL: f64 = 1e-10;

fn algebra(m: Matrix, group: StructureGroup) -> Result<AlgebraElement> {
    if group.is_orthogonal() {
        AlgebraElement::projected(m, group)
    } else {
        AlgebraElement::new(m, group)
    }
}

/// A tangent vector at a point `p` of the fiber over `x`: a base component
/// and a vertical component in the right trivialization.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedVector {
    pub base_part: TangentVector,
    pub vertical_part: AlgebraElement,
    pub point: ChartPoint,
    pub fiber_point: GroupElement,
}

fn oracle_failure(e: Error) -> Error {
    match e {
        Error::OutOfBranch { .. } | Error::OracleFailure(_) => e,
        other => Error::OracleFailure(other.to_string()),
    }
}

fn check_h(h: f64) -> Result<()> {
    if !(H_RANGE.0..=H_RANGE.1).contains(&h) {
        return Err(Error::InvalidArgument(format!(
            "difference step h = {h} outside [{:e}, {:e}]",
            H_RANGE.0, H_RANGE.1
        )));
    }
    Ok(())
}

/// Right-trivialized velocity at `t = 0` of the horizontal lift of `curve`
/// through `p`, by a symmetric difference with step `h`. The curve's first
/// segment formula is continued to negative parameters.
pub fn lifted_velocity(
    oracle: &dyn TransportOracle,
    curve: &PathSpec,
    p: &GroupElement,
    h: f64,
) -> Result<Matrix> {
    let forward = curve.initial_extension(h)?;
    let backward = curve.initial_extension(-h)?;
    let qp = oracle.lift_endpoint(&forward, p).map_err(oracle_failure)?;
    let qm = oracle.lift_endpoint(&backward, p).map_err(oracle_failure)?;
    let ratio = qp.matrix() * qm.inverse().matrix();
    Ok(logm(&ratio)? / (2.0 * h))
}

/// Lift of `v` to `(x, p)` along the straight coordinate line `x + t v`.
pub fn lift_vector(
    oracle: &dyn TransportOracle,
    x: &ChartPoint,
    p: &GroupElement,
    v: &TangentVector,
    h: f64,
) -> Result<LiftedVector> {
    check_h(h)?;
    if v.base != *x {
        return Err(Error::InvalidArgument(
            "tangent vector is not based at the lift point".into(),
        ));
    }
    let vertical = if v.norm() == 0.0 {
        let k = oracle.group().k();
        Matrix::zeros(k, k)
    } else {
        let line = PathSpec::ray(x.chart, &x.coords, &v.components, 1.0)?;
        lifted_velocity(oracle, &line, p, h)?
    };
    Ok(LiftedVector {
        base_part: v.clone(),
        vertical_part: algebra(vertical, oracle.group())?,
        point: x.clone(),
        fiber_point: p.clone(),
    })
}

/// Lifts of the coordinate basis `e_1..e_n` at `(x, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizontalBasis {
    pub point: ChartPoint,
    pub fiber_point: GroupElement,
    pub lifts: Vec<LiftedVector>,
    /// Condition number of the stacked `n × (n + k²)` matrix of lifts.
    pub condition: f64,
}

impl HorizontalBasis {
    pub fn dim(&self) -> usize {
        self.lifts.len()
    }

    /// Vertical parts `ξ_μ` of the lifts.
    pub fn vertical_parts(&self) -> impl Iterator<Item = &Matrix> {
        self.lifts.iter().map(|l| l.vertical_part.matrix())
    }
}

fn condition_number(lifts: &[LiftedVector]) -> f64 {
    let n = lifts.len();
    let k2 = lifts.first().map_or(0, |l| l.vertical_part.matrix().len());
    let mut m = DMatrix::zeros(n, n + k2);
    for (row, l) in lifts.iter().enumerate() {
        for (c, v) in l.base_part.components.iter().enumerate() {
            m[(row, c)] = *v;
        }
        for (c, v) in l.vertical_part.matrix().iter().enumerate() {
            m[(row, n + c)] = *v;
        }
    }
    let s = m.singular_values();
    let max = s.max();
    let min = s.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Horizontal space at `(x, p)` spanned by the lifts of `e_1..e_n`.
pub fn horizontal_space(
    oracle: &dyn TransportOracle,
    x: &ChartPoint,
    p: &GroupElement,
    h: f64,
) -> Result<HorizontalBasis> {
    let n = x.dim();
    let lifts = (0..n)
        .map(|mu| {
            let mut e = vec![0.0; n];
            e[mu] = 1.0;
            lift_vector(oracle, x, p, &TangentVector::new(x.clone(), e)?, h)
        })
        .collect::<Result<Vec<_>>>()?;
    let condition = condition_number(&lifts);
    if !(condition < MAX_CONDITION) {
        return Err(Error::IllConditionedBasis { condition });
    }
    Ok(HorizontalBasis {
        point: x.clone(),
        fiber_point: p.clone(),
        lifts,
        condition,
    })
}

/// Largest `‖ξ_μ(x, p g) − ξ_μ(x, p)‖_F` over the coordinate directions.
///
/// Right translation by `g` maps the lift through `p` to the lift through
/// `p g`, and right-trivialized fiber velocities are unchanged by it, so an
/// equivariant oracle gives zero up to discretization.
pub fn equivariance_deviation(
    oracle: &dyn TransportOracle,
    x: &ChartPoint,
    p: &GroupElement,
    g: &GroupElement,
    h: f64,
) -> Result<f64> {
    let at_p = horizontal_space(oracle, x, p, h)?;
    let at_pg = horizontal_space(oracle, x, &p.compose(g)?, h)?;
    Ok(at_p
        .vertical_parts()
        .zip(at_pg.vertical_parts())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max))
}

/// Decomposition `w = Σ c_μ ṽ_μ + vertical`.
#[derive(Debug, Clone, PartialEq)]
pub struct Splitting {
    /// Coefficients `c_μ`; equal to the base components of `w`.
    pub coefficients: Vec<f64>,
    /// Fiber component of the horizontal part, `Σ c_μ ξ_μ`.
    pub horizontal_fiber: Matrix,
    pub vertical: AlgebraElement,
}

impl Splitting {
    /// Base and fiber components of `horizontal + vertical`.
    pub fn recompose(&self) -> (Vec<f64>, Matrix) {
        (
            self.coefficients.clone(),
            &self.horizontal_fiber + self.vertical.matrix(),
        )
    }
}

/// Splits a tangent vector `w = (base, fiber)` at the basis point into its
/// horizontal and vertical parts.
pub fn split_horizontal_vertical(
    basis: &HorizontalBasis,
    base: &[f64],
    fiber: &Matrix,
) -> Result<Splitting> {
    if !(basis.condition < MAX_CONDITION) {
        return Err(Error::IllConditionedBasis {
            condition: basis.condition,
        });
    }
    if base.len() != basis.dim() {
        return Err(Error::InvalidArgument(format!(
            "expected {} base components, got {}",
            basis.dim(),
            base.len()
        )));
    }
    let group = basis.fiber_point.group();
    let k = group.k();
    let horizontal_fiber = basis
        .vertical_parts()
        .zip(base)
        .fold(Matrix::zeros(k, k), |acc, (xi, c)| acc + xi * *c);
    let vertical = AlgebraElement::new(fiber - &horizontal_fiber, group)?;
    Ok(Splitting {
        coefficients: base.to_vec(),
        horizontal_fiber,
        vertical,
    })
}

/// Outcome of comparing lifted velocities of different curves with one
/// initial velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub hs: Vec<f64>,
    /// Largest pairwise deviation at each `h`.
    pub deviations: Vec<f64>,
    /// Log-log slope of deviation against `h`; `None` when all deviations
    /// are at rounding level.
    pub slope: Option<f64>,
    /// Largest pairwise deviation after second-order Richardson
    /// extrapolation of each curve's lifted velocity to `h = 0`.
    pub extrapolated_deviation: f64,
    /// Whether the deviations decrease strictly along the sweep.
    pub monotone: bool,
}

impl LemmaReport {
    pub fn degenerate(&self) -> bool {
        self.slope.is_none()
    }

    pub fn passes(&self, min_slope: f64, max_extrapolated: f64) -> bool {
        self.degenerate()
            || (self.monotone
                && self.slope.is_some_and(|s| s >= min_slope)
                && self.extrapolated_deviation <= max_extrapolated)
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn max_pairwise(values: &[Matrix]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            d = d.max((&values[i] - &values[j]).norm());
        }
    }
    d
}

/// Compares the lifted velocities obtained from several curves through `x`
/// with initial velocity `v`, over a sweep of difference steps.
pub fn lemma_independence_check(
    oracle: &dyn TransportOracle,
    x: &ChartPoint,
    p: &GroupElement,
    v: &TangentVector,
    curves: &[PathSpec],
    hs: &[f64],
) -> Result<LemmaReport> {
    if curves.len() < 2 || hs.len() < 2 {
        return Err(Error::InvalidArgument(
            "the independence check needs at least two curves and two step sizes".into(),
        ));
    }
    for h in hs {
        check_h(*h)?;
    }
    for c in curves {
        let start = c.start()?;
        let vel = c.velocity(0.0)?;
        let gap = start
            .coords
            .iter()
            .zip(&x.coords)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if start.chart != x.chart || gap > VELOCITY_TOL {
            return Err(Error::EndpointMismatch { gap });
        }
        let deviation = vel
            .components
            .iter()
            .zip(&v.components)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if deviation > VELOCITY_TOL {
            return Err(Error::VelocityMismatch { deviation });
        }
    }
    // xi[i][c]: lifted velocity of curve c at step hs[i].
    let xi = hs
        .iter()
        .map(|&h| {
            curves
                .iter()
                .map(|c| lifted_velocity(oracle, c, p, h))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let deviations: Vec<f64> = xi.iter().map(|row| max_pairwise(row)).collect();
    let m = hs.len();
    let r2 = (hs[m - 2] / hs[m - 1]).powi(2);
    let extrapolated: Vec<Matrix> = (0..curves.len())
        .map(|c| (&xi[m - 1][c] * r2 - &xi[m - 2][c]) / (r2 - 1.0))
        .collect();
    let degenerate = deviations.iter().all(|d| *d <= DEGENERATE_LEVEL);
    Ok(LemmaReport {
        hs: hs.to_vec(),
        slope: (!degenerate).then(|| log_log_slope(hs, &deviations)),
        monotone: degenerate || deviations.windows(2).all(|w| w[1] < w[0]),
        extrapolated_deviation: max_pairwise(&extrapolated),
        deviations,
    })
}

/// Reconstructed `Â_μ(x)` for every direction at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedPoint {
    pub point: ChartPoint,
    pub coefficients: Vec<Matrix>,
}

/// Reconstructed coefficient table on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionTable {
    pub h: f64,
    pub entries: Vec<ReconstructedPoint>,
    /// Grid points where the oracle failed, with the reason.
    pub dropped: Vec<(ChartPoint, String)>,
}

impl ReconstructionTable {
    /// CSV with columns `chart_id, x1..xn, mu, i, j, value, h`; `mu` counts
    /// from 1 like the coordinates, `i` and `j` from 0.
    pub fn to_csv(&self) -> String {
        let n = self.entries.first().map_or(0, |e| e.point.dim());
        let mut out = String::from("chart_id");
        for c in 1..=n {
            let _ = write!(out, ",x{c}");
        }
        out.push_str(",mu,i,j,value,h\n");
        for e in &self.entries {
            for (mu, a) in e.coefficients.iter().enumerate() {
                for i in 0..a.nrows() {
                    for j in 0..a.ncols() {
                        let _ = write!(out, "{}", e.point.chart);
                        for x in &e.point.coords {
                            let _ = write!(out, ",{x}");
                        }
                        let _ = writeln!(out, ",{},{i},{j},{},{}", mu + 1, a[(i, j)], self.h);
                    }
                }
            }
        }
        out
    }
}

/// `Â_μ(x) = −ξ(e_μ)` at `(x, I)` for every grid point, in parallel.
pub fn reconstruct_connection(
    oracle: &dyn TransportOracle,
    grid: &[ChartPoint],
    h: f64,
) -> Result<ReconstructionTable> {
    check_h(h)?;
    let identity = oracle.group().identity();
    let results: Vec<Result<ReconstructedPoint>> = grid
        .par_iter()
        .map(|x| {
            let n = x.dim();
            let coefficients = (0..n)
                .map(|mu| {
                    let mut e = vec![0.0; n];
                    e[mu] = 1.0;
                    let v = TangentVector::new(x.clone(), e)?;
                    Ok(-lift_vector(oracle, x, &identity, &v, h)?.vertical_part.into_matrix())
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ReconstructedPoint {
                point: x.clone(),
                coefficients,
            })
        })
        .collect();
    let mut table = ReconstructionTable {
        h,
        entries: Vec::new(),
        dropped: Vec::new(),
    };
    for (x, r) in grid.iter().zip(results) {
        match r {
            Ok(e) => table.entries.push(e),
            Err(e) => table.dropped.push((x.clone(), e.to_string())),
        }
    }
    Ok(table)
}

/// Uniform `m × m` grid over `[−1, 1]²` (or `[−1, 1]ⁿ` for other dimensions
/// with `m` points per axis) in the first chart, keeping points inside the box.
pub fn default_grid(conn: &ConnectionForm, m: usize) -> Vec<ChartPoint> {
    let chart = &conn.atlas().charts()[0];
    let n = chart.dim();
    let step = if m > 1 { 2.0 / (m - 1) as f64 } else { 0.0 };
    (0..m.pow(n as u32))
        .map(|mut idx| {
            (0..n)
                .map(|_| {
                    let i = idx % m;
                    idx /= m;
                    if m > 1 {
                        -1.0 + step * i as f64
                    } else {
                        0.0
                    }
                })
                .collect::<Vec<f64>>()
        })
        .filter(|x| chart.contains(x))
        .map(|x| ChartPoint::new(chart.id, x))
        .collect()
}

/// Largest `‖Â_μ(x) − A_μ(x)‖_F` over a table.
pub fn max_coefficient_error(conn: &ConnectionForm, table: &ReconstructionTable) -> Result<f64> {
    let mut err: f64 = 0.0;
    for e in &table.entries {
        let exact = conn.field(e.point.chart)?.eval(&e.point.coords)?;
        for (a, b) in e.coefficients.iter().zip(&exact) {
            err = err.max((a - b).norm());
        }
    }
    Ok(err)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundtripReport {
    pub hs: Vec<f64>,
    /// Maximal coefficient error at each `h`.
    pub errors: Vec<f64>,
    /// Log-log slope of error against `h`; `None` when degenerate.
    pub order: Option<f64>,
    /// All errors at rounding level, so no order can be measured.
    pub degenerate: bool,
    pub grid_points: usize,
    pub dropped: usize,
    pub pass: bool,
}

/// Minimal convergence order for a passing round trip.
pub const MIN_ORDER: f64 = 1.7;
/// Largest error at the smallest `h` for a passing round trip.
pub const MAX_ERROR: f64 = 1e-3;

/// Transports with the engine, reconstructs the coefficients on `grid` for
/// every `h`, and measures error and convergence order.
pub fn roundtrip_report(
    conn: &ConnectionForm,
    cfg: &SolverConfig,
    grid: &[ChartPoint],
    hs: &[f64],
) -> Result<RoundtripReport> {
    if hs.is_empty() {
        return Err(Error::InvalidArgument("the h sweep is empty".into()));
    }
    let oracle = EngineOracle::new(conn, *cfg);
    let mut errors = Vec::with_capacity(hs.len());
    let mut dropped = 0;
    for &h in hs {
        let table = reconstruct_connection(&oracle, grid, h)?;
        dropped = dropped.max(table.dropped.len());
        if table.entries.is_empty() {
            return Err(Error::OracleFailure(
                "every grid point was dropped".into(),
            ));
        }
        errors.push(max_coefficient_error(conn, &table)?);
    }
    let degenerate = errors.iter().all(|e| *e <= DEGENERATE_LEVEL);
    let order = (!degenerate && hs.len() > 1).then(|| log_log_slope(hs, &errors));
    let smallest = hs
        .iter()
        .zip(&errors)
        .min_by(|a, b| a.0.total_cmp(b.0))
        .map(|(_, e)| *e)
        .unwrap_or(f64::INFINITY);
    let pass = smallest <= MAX_ERROR && (degenerate || order.is_some_and(|o| o >= MIN_ORDER));
    Ok(RoundtripReport {
        hs: hs.to_vec(),
        errors,
        order,
        degenerate,
        grid_points: grid.len(),
        dropped,
        pass,
    })
}
