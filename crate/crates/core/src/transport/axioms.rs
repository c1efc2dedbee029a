//! Checks of the three defining properties of a parallel transport map:
//! constant paths transport trivially, reparametrizations do not matter, and
//! juxtaposed paths transport by the product.

use std::f64::consts::PI;

use crate::chart::{Atlas, ChartPoint};
use crate::connection::finite_box;
use crate::error::Result;
use crate::expr::Expr;
use crate::group::Matrix;
use crate::path::PathSpec;

use super::{TransportOracle, TransportResult};

/// Paths on which the axioms are evaluated.
#[derive(Debug, Clone)]
pub struct AxiomSuite {
    pub atlas: Atlas,
    pub constants: Vec<ChartPoint>,
    /// Path and reparametrization `α`.
    pub reparametrizations: Vec<(PathSpec, Expr)>,
    /// `(γ₁, γ₂)`, checked as `P(γ₂ ⋆ γ₁) = P(γ₂) P(γ₁)`.
    pub juxtapositions: Vec<(PathSpec, PathSpec)>,
}

impl AxiomSuite {
    pub fn new(atlas: Atlas) -> Self {
        AxiomSuite {
            atlas,
            constants: Vec::new(),
            reparametrizations: Vec::new(),
            juxtapositions: Vec::new(),
        }
    }

    /// A standard suite around the center of the first chart: three constant
    /// paths, four paths under four reparametrizations each, and four
    /// juxtaposable pairs (including a corner and a path followed by its
    /// reverse).
    pub fn canned(atlas: &Atlas) -> Result<Self> {
        let chart = &atlas.charts()[0];
        let n = chart.dim();
        let (lo, hi) = finite_box(chart);
        let center: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect();
        let width = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| h - l)
            .fold(f64::INFINITY, f64::min);
        let r = (0.25 * width).min(0.5);
        let at = |a: f64, b: f64| -> Vec<f64> {
            let mut x = center.clone();
            x[0] += a * r;
            if n > 1 {
                x[1] += b * r;
            }
            x
        };
        let id = chart.id;
        let mut suite = AxiomSuite::new(atlas.clone());
        suite.constants = vec![
            ChartPoint::new(id, at(0.0, 0.0)),
            ChartPoint::new(id, at(0.5, -0.3)),
            ChartPoint::new(id, at(-0.7, 0.4)),
        ];

        let line = PathSpec::line(id, &at(-1.0, -0.5), &at(1.0, 0.5))?;
        let corner = PathSpec::polygon(id, &[at(-0.8, -0.8), at(0.8, -0.8), at(0.8, 0.8)], false)?;
        let square = PathSpec::polygon(
            id,
            &[at(-0.5, -0.5), at(0.5, -0.5), at(0.5, 0.5), at(-0.5, 0.5)],
            true,
        )?;
        let mut paths = vec![line.clone(), corner.clone(), square.clone()];
        if n > 1 {
            paths.push(PathSpec::arc(id, &center, 0.9 * r, 0.0, 1.5 * PI)?);
        }
        let alphas = [
            "x1^2",
            "(x1 + x1^3)/2",
            "sin(1.5707963267948966*x1)",
            "x1 + 0.2*sin(6.283185307179586*x1)/6.283185307179586",
        ]
        .map(|s| Expr::parse(s, 1).expect("valid reparametrization"));
        for p in &paths {
            for a in &alphas {
                suite.reparametrizations.push((p.clone(), a.clone()));
            }
        }

        let follow = PathSpec::line(id, &at(1.0, 0.5), &at(0.2, 0.9))?;
        suite.juxtapositions = vec![
            (line.clone(), follow),
            (corner.clone(), corner.reverse()),
            (square.clone(), square),
            (
                PathSpec::constant(&ChartPoint::new(id, at(-1.0, -0.5))),
                line,
            ),
        ];
        if n > 1 {
            let arc = PathSpec::arc(id, &center, 0.9 * r, 0.0, 0.75 * PI)?;
            let end = arc.end()?.coords;
            suite
                .juxtapositions
                .push((arc, PathSpec::line(id, &end, &center)?));
        }
        Ok(suite)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    /// `max ‖P(c_x) − I‖_F`.
    pub constant_deviation: f64,
    /// `max ‖P(γ∘α) − P(γ)‖_F`.
    pub reparametrization_deviation: f64,
    /// `max ‖P(γ₂⋆γ₁) − P(γ₂) P(γ₁)‖_F`.
    pub juxtaposition_deviation: f64,
    pub checks: usize,
    pub tol: f64,
    pub pass: bool,
    /// Oracle or path failures; any entry makes the report fail.
    pub failures: Vec<String>,
    pub notes: Vec<String>,
}

/// Brings `r.g` to the trivialization of chart `to` at the end point.
fn retarget(oracle: &dyn TransportOracle, r: &TransportResult, to: crate::chart::ChartId) -> Result<Matrix> {
    Ok(oracle.change_of_trivialization(&r.end, to)? * r.g.matrix())
}

/// Evaluates the three axioms of `oracle` on `suite`.
pub fn verify_axioms(oracle: &dyn TransportOracle, suite: &AxiomSuite, tol: f64) -> AxiomReport {
    let k = oracle.group().k();
    let identity = Matrix::identity(k, k);
    let mut report = AxiomReport {
        constant_deviation: 0.0,
        reparametrization_deviation: 0.0,
        juxtaposition_deviation: 0.0,
        checks: 0,
        tol,
        pass: false,
        failures: Vec::new(),
        notes: Vec::new(),
    };
    let mut all_identity = true;
    let mut note_identity = |g: &Matrix| {
        if (g - &identity).norm() > tol {
            all_identity = false;
        }
    };

    for x in &suite.constants {
        match oracle.transport(&PathSpec::constant(x)) {
            Ok(r) => {
                let d = (r.g.matrix() - &identity).norm();
                report.constant_deviation = report.constant_deviation.max(d);
                report.checks += 1;
            }
            Err(e) => report.failures.push(format!("constant path at {:?}: {e}", x.coords)),
        }
    }

    for (i, (path, alpha)) in suite.reparametrizations.iter().enumerate() {
        let outcome = (|| -> Result<f64> {
            let r = oracle.transport(path)?;
            let q = oracle.transport(&path.reparametrize(alpha)?)?;
            note_identity(r.g.matrix());
            let qm = retarget(oracle, &q, r.end.chart)?;
            Ok((qm - r.g.matrix()).norm())
        })();
        match outcome {
            Ok(d) => {
                report.reparametrization_deviation = report.reparametrization_deviation.max(d);
                report.checks += 1;
            }
            Err(e) => report
                .failures
                .push(format!("reparametrization #{i} (α = {alpha}): {e}")),
        }
    }

    for (i, (first, second)) in suite.juxtapositions.iter().enumerate() {
        let outcome = (|| -> Result<f64> {
            let r1 = oracle.transport(first)?;
            let r2 = oracle.transport(second)?;
            let joined = oracle.transport(&first.juxtapose_in(second, &suite.atlas)?)?;
            note_identity(joined.g.matrix());
            let bridge = oracle.change_of_trivialization(&r1.end, r2.start.chart)?;
            let product = r2.g.matrix() * bridge * r1.g.matrix();
            let jm = retarget(oracle, &joined, r2.end.chart)?;
            Ok((jm - product).norm())
        })();
        match outcome {
            Ok(d) => {
                report.juxtaposition_deviation = report.juxtaposition_deviation.max(d);
                report.checks += 1;
            }
            Err(e) => report.failures.push(format!("juxtaposition #{i}: {e}")),
        }
    }

    report.pass = report.failures.is_empty()
        && report.constant_deviation <= tol
        && report.reparametrization_deviation <= tol
        && report.juxtaposition_deviation <= tol;
    if all_identity && report.checks > 0 {
        report.notes.push(
            "every transport in the suite is the identity; this is a valid transport (that of a \
             flat structure) and the axioms alone do not constrain curvature"
                .into(),
        );
    }
    report
}
