//! Built-in example connections.
//!
//! | name | group | curvature |
//! |------|-------|-----------|
//! | `flat-so2` | SO(2) | zero coefficients |
//! | `abelian-area(f)` | U(1) | `F₁₂ = f J` |
//! | `constant-so3(a1,a2)` | SO(3) | `F₁₂ = a1 a2 L₃` |
//! | `levi-civita-s2-stereo` | SO(2) | `F₁₂ = −4/(1+r²)² J` |
//! | `levi-civita-s2-twochart` | SO(2) | same, two charts |
//! | `pure-gauge` | U(1) | flat, `A = g⁻¹dg` for `g = exp(x1 x2 J)` |
//! | `pure-gauge-so3` | SO(3) | flat, non-commuting coefficients |
//!
//! Here `J = [[0,−1],[1,0]]` and `(L_i)_{jk} = −ε_{ijk}`. The sphere charts
//! are stereographic projections of the unit sphere: chart 0 from the north
//! pole, chart 1 in the coordinates `w = 1/z` with `z = x1 + i x2`.

use std::sync::Arc;

use crate::chart::{Atlas, ChartDomain, ChartId, CoordinateTransition};
use crate::error::{Error, Result};
use crate::expr::{Expr, MatrixExpr};
use crate::group::StructureGroup;

use super::{ConnectionForm, ExprCoefficients};

/// Default parameters of `constant-so3`.
pub const CONSTANT_SO3_DEFAULT: (f64, f64) = (0.8, 0.5);
/// Half-width of the coordinate box of the planar builtins.
pub const PLANE_HALF_WIDTH: f64 = 3.0;
/// Half-width of the stereographic chart boxes.
pub const SPHERE_HALF_WIDTH: f64 = 5.0;

/// Names accepted by [`builtin`], with their parameter lists.
pub const BUILTIN_NAMES: [&str; 7] = [
    "flat-so2",
    "abelian-area(f)",
    "constant-so3(a1,a2)",
    "levi-civita-s2-stereo",
    "levi-civita-s2-twochart",
    "pure-gauge",
    "pure-gauge-so3",
];

fn num(v: f64) -> String {
    format!("({v:?})")
}

/// Skew 2×2 matrix `c J` with `c` given as source text.
fn j_times(c: &str) -> Vec<Vec<String>> {
    vec![
        vec!["0".into(), format!("-({c})")],
        vec![format!("{c}"), "0".into()],
    ]
}

fn plane_connection(group: StructureGroup, coefficients: Vec<Vec<Vec<String>>>) -> Result<ConnectionForm> {
    let field = ExprCoefficients::parse(&coefficients)?;
    ConnectionForm::single_chart(
        group,
        ChartDomain::centered(ChartId(0), 2, PLANE_HALF_WIDTH),
        Arc::new(field),
    )
}

pub fn flat_so2() -> Result<ConnectionForm> {
    plane_connection(StructureGroup::SO(2), vec![j_times("0"), j_times("0")])
}

/// `A = (f/2)(x1 dx2 − x2 dx1) J`, curvature `f J`.
pub fn abelian_area(f: f64) -> Result<ConnectionForm> {
    let half = num(f / 2.0);
    plane_connection(
        StructureGroup::U1,
        vec![j_times(&format!("-{half}*x2")), j_times(&format!("{half}*x1"))],
    )
}

/// `A = λ J dx1`.
pub fn constant_abelian(lambda: f64) -> Result<ConnectionForm> {
    plane_connection(StructureGroup::U1, vec![j_times(&num(lambda)), j_times("0")])
}

/// Rows of `Σ_i c_i L_i` for source coefficients `c`.
fn so3_combination(c: [&str; 3]) -> Vec<Vec<String>> {
    let [c1, c2, c3] = c.map(|s| s.to_string());
    let neg = |s: &str| format!("-({s})");
    vec![
        vec!["0".into(), neg(&c3), c2.clone()],
        vec![c3, "0".into(), neg(&c1)],
        vec![neg(&c2), c1, "0".into()],
    ]
}

/// `A = a1 L1 dx1 + a2 L2 dx2`.
pub fn constant_so3(a1: f64, a2: f64) -> Result<ConnectionForm> {
    plane_connection(
        StructureGroup::SO(3),
        vec![
            so3_combination([&num(a1), "0", "0"]),
            so3_combination(["0", &num(a2), "0"]),
        ],
    )
}

/// `A = g⁻¹ dg` for `g = exp(x1 x2 J)`, i.e. `A = (x2 dx1 + x1 dx2) J`.
pub fn pure_gauge() -> Result<ConnectionForm> {
    plane_connection(StructureGroup::U1, vec![j_times("x2"), j_times("x1")])
}

/// `A = (cos x2 L1 + sin x2 L3) dx1 + L2 dx2`.
pub fn pure_gauge_so3() -> Result<ConnectionForm> {
    plane_connection(
        StructureGroup::SO(3),
        vec![
            so3_combination(["cos(x2)", "0", "sin(x2)"]),
            so3_combination(["0", "1", "0"]),
        ],
    )
}

/// Levi-Civita coefficients of the round unit sphere in a stereographic
/// chart, in the orthonormal frame along the coordinate axes.
fn sphere_coefficients() -> Vec<Vec<Vec<String>>> {
    let d = "(1 + x1^2 + x2^2)";
    vec![
        j_times(&format!("2*x2/{d}")),
        j_times(&format!("-2*x1/{d}")),
    ]
}

pub fn levi_civita_s2_stereo() -> Result<ConnectionForm> {
    let field = ExprCoefficients::parse(&sphere_coefficients())?;
    ConnectionForm::single_chart(
        StructureGroup::SO(2),
        ChartDomain::centered(ChartId(0), 2, SPHERE_HALF_WIDTH),
        Arc::new(field),
    )
}

pub fn levi_civita_s2_twochart() -> Result<ConnectionForm> {
    levi_civita_s2_twochart_with_boxes(SPHERE_HALF_WIDTH, SPHERE_HALF_WIDTH)
}

/// Two stereographic charts with boxes `(−half0, half0)²` and
/// `(−half1, half1)²`. The transition is `w = 1/z` in both directions with
/// gauge `R(2 arg z)`.
pub fn levi_civita_s2_twochart_with_boxes(half0: f64, half1: f64) -> Result<ConnectionForm> {
    let r2 = "(x1^2 + x2^2)";
    let map = vec![
        Expr::parse(&format!("x1/{r2}"), 2)?,
        Expr::parse(&format!("-x2/{r2}"), 2)?,
    ];
    let c = format!("(x1^2 - x2^2)/{r2}");
    let s = format!("2*x1*x2/{r2}");
    let gauge = MatrixExpr::parse(&[vec![c.clone(), format!("-{s}")], vec![s, c]], 2)?;
    let transitions = vec![
        CoordinateTransition {
            from: ChartId(0),
            to: ChartId(1),
            map: map.clone(),
        },
        CoordinateTransition {
            from: ChartId(1),
            to: ChartId(0),
            map,
        },
    ];
    let atlas = Atlas::new(
        vec![
            ChartDomain::centered(ChartId(0), 2, half0),
            ChartDomain::centered(ChartId(1), 2, half1),
        ],
        transitions,
    )?;
    let field = Arc::new(ExprCoefficients::parse(&sphere_coefficients())?);
    ConnectionForm::new(
        StructureGroup::SO(2),
        atlas,
        vec![field.clone(), field],
        vec![Arc::new(gauge.clone()), Arc::new(gauge)],
    )
}

fn parse_args(args: &str) -> Result<Vec<f64>> {
    args.split(',')
        .map(|a| {
            a.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::InvalidArgument(format!("bad builtin parameter `{}`", a.trim())))
        })
        .collect()
}

/// Builds a builtin connection from its name, e.g. `abelian-area(1.5)`.
pub fn builtin(name: &str) -> Result<ConnectionForm> {
    let name = name.trim();
    let (base, args) = match name.find('(') {
        Some(open) if name.ends_with(')') => {
            (name[..open].trim(), Some(&name[open + 1..name.len() - 1]))
        }
        Some(_) => return Err(Error::UnknownBuiltin(name.to_string())),
        None => (name, None),
    };
    let args = args.map(parse_args).transpose()?;
    let arity = |n: usize| -> Result<()> {
        match &args {
            Some(a) if a.len() != n => Err(Error::InvalidArgument(format!(
                "`{base}` takes {n} parameter(s), got {}",
                a.len()
            ))),
            _ => Ok(()),
        }
    };
    match base {
        "flat-so2" | "levi-civita-s2-stereo" | "levi-civita-s2-twochart" | "pure-gauge"
        | "pure-gauge-so3" => {
            if args.is_some() {
                return Err(Error::InvalidArgument(format!("`{base}` takes no parameters")));
            }
            match base {
                "flat-so2" => flat_so2(),
                "levi-civita-s2-stereo" => levi_civita_s2_stereo(),
                "levi-civita-s2-twochart" => levi_civita_s2_twochart(),
                "pure-gauge" => pure_gauge(),
                _ => pure_gauge_so3(),
            }
        }
        "abelian-area" => {
            arity(1)?;
            let f = args.ok_or_else(|| {
                Error::InvalidArgument("`abelian-area` needs its field strength, e.g. abelian-area(1.5)".into())
            })?;
            abelian_area(f[0])
        }
        "constant-so3" => {
            arity(2)?;
            let (a1, a2) = args.map_or(CONSTANT_SO3_DEFAULT, |a| (a[0], a[1]));
            constant_so3(a1, a2)
        }
        _ => Err(Error::UnknownBuiltin(name.to_string())),
    }
}
