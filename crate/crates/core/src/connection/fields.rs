//! Coefficient fields `x ↦ (A_1(x), …, A_n(x))` and gauge fields `x ↦ g(x)`.
//!
//! Fields written in the expression language differentiate exactly through
//! dual numbers. Fields produced numerically (gauge transforms, composed
//! transition gauges) differentiate with a five-point central stencil.

use std::fmt;
use std::sync::Arc;

use crate::chart::CoordinateTransition;
use crate::error::{Error, Result};
use crate::expr::MatrixExpr;
use crate::group::Matrix;

/// Step of the five-point stencil used by numerically realized fields.
pub const STENCIL_STEP: f64 = 1e-3;

/// Value `A_μ(x)` for every μ and the partials `∂_ν A_μ(x)` indexed `[μ][ν]`.
pub type CoefficientJet = (Vec<Matrix>, Vec<Vec<Matrix>>);

pub trait CoefficientField: Send + Sync + fmt::Debug {
    /// Chart dimension `n`.
    fn dim(&self) -> usize;
    /// Matrix size `k`.
    fn size(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Result<Vec<Matrix>>;

    fn eval_jet(&self, x: &[f64]) -> Result<CoefficientJet> {
        let value = self.eval(x)?;
        let n = self.dim();
        let mut partials = vec![Vec::with_capacity(n); n];
        for nu in 0..n {
            let d = stencil(x, nu, |y| self.eval(y))?;
            for (mu, m) in d.into_iter().enumerate() {
                partials[mu].push(m);
            }
        }
        Ok((value, partials))
    }

    /// The defining expressions, when the field has them.
    fn exprs(&self) -> Option<&[MatrixExpr]> {
        None
    }
}

/// Five-point central derivative of a matrix-list valued function along
/// coordinate `nu`.
fn stencil<F>(x: &[f64], nu: usize, f: F) -> Result<Vec<Matrix>>
where
    F: Fn(&[f64]) -> Result<Vec<Matrix>>,
{
    let h = STENCIL_STEP;
    let shifted = |k: f64| {
        let mut y = x.to_vec();
        y[nu] += k * h;
        f(&y)
    };
    let (p2, p1, m1, m2) = (shifted(2.0)?, shifted(1.0)?, shifted(-1.0)?, shifted(-2.0)?);
    Ok((0..p1.len())
        .map(|i| (&m2[i] - &p2[i] + (&p1[i] - &m1[i]) * 8.0) / (12.0 * h))
        .collect())
}

/// Coefficients given by one matrix of expressions per coordinate direction.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprCoefficients {
    components: Vec<MatrixExpr>,
}

impl ExprCoefficients {
    pub fn new(components: Vec<MatrixExpr>) -> Result<Self> {
        let n = components.len();
        if n == 0 {
            return Err(Error::InvalidArgument(
                "a connection needs one coefficient matrix per coordinate".into(),
            ));
        }
        let k = components[0].size();
        for (mu, c) in components.iter().enumerate() {
            if c.size() != k || c.dim() != n {
                return Err(Error::InvalidArgument(format!(
                    "coefficient A_{} must be {k}×{k} in {n} variables",
                    mu + 1
                )));
            }
        }
        Ok(ExprCoefficients { components })
    }

    /// Parses `sources[μ][i][j]`.
    pub fn parse<S: AsRef<str>>(sources: &[Vec<Vec<S>>]) -> Result<Self> {
        let n = sources.len();
        let components = sources
            .iter()
            .map(|m| MatrixExpr::parse(m, n))
            .collect::<Result<Vec<_>, _>>()?;
        ExprCoefficients::new(components)
    }

    pub fn zero(k: usize, n: usize) -> Self {
        ExprCoefficients {
            components: vec![MatrixExpr::zeros(k, n); n],
        }
    }
}

impl CoefficientField for ExprCoefficients {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn size(&self) -> usize {
        self.components[0].size()
    }

    fn eval(&self, x: &[f64]) -> Result<Vec<Matrix>> {
        self.components
            .iter()
            .map(|c| c.eval(x).map_err(Error::from))
            .collect()
    }

    fn eval_jet(&self, x: &[f64]) -> Result<CoefficientJet> {
        let mut value = Vec::with_capacity(self.components.len());
        let mut partials = Vec::with_capacity(self.components.len());
        for c in &self.components {
            let (v, p) = c.eval_jet(x)?;
            value.push(v);
            partials.push(p);
        }
        Ok((value, partials))
    }

    fn exprs(&self) -> Option<&[MatrixExpr]> {
        Some(&self.components)
    }
}

/// A matrix-valued function on a chart together with its partial derivatives.
pub trait GaugeField: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn size(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Result<Matrix>;
    /// Value and `∂_ν g` for every ν.
    fn eval_jet(&self, x: &[f64]) -> Result<(Matrix, Vec<Matrix>)>;
}

impl GaugeField for MatrixExpr {
    fn dim(&self) -> usize {
        MatrixExpr::dim(self)
    }

    fn size(&self) -> usize {
        MatrixExpr::size(self)
    }

    fn eval(&self, x: &[f64]) -> Result<Matrix> {
        Ok(MatrixExpr::eval(self, x)?)
    }

    fn eval_jet(&self, x: &[f64]) -> Result<(Matrix, Vec<Matrix>)> {
        Ok(MatrixExpr::eval_jet(self, x)?)
    }
}

pub(crate) fn invert(g: &Matrix) -> Result<Matrix> {
    let det = g.determinant();
    if !(det.abs() > 1e-9) {
        return Err(Error::SingularGauge(format!("det g = {det:.3e}")));
    }
    g.clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularGauge("matrix is not invertible".into()))
}

/// `x ↦ g(x)⁻¹`.
#[derive(Debug, Clone)]
pub struct InverseGauge(pub Arc<dyn GaugeField>);

impl GaugeField for InverseGauge {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn size(&self) -> usize {
        self.0.size()
    }

    fn eval(&self, x: &[f64]) -> Result<Matrix> {
        invert(&self.0.eval(x)?)
    }

    fn eval_jet(&self, x: &[f64]) -> Result<(Matrix, Vec<Matrix>)> {
        let (g, dg) = self.0.eval_jet(x)?;
        let inv = invert(&g)?;
        let d = dg.iter().map(|d| -(&inv * d * &inv)).collect();
        Ok((inv, d))
    }
}

/// `x ↦ a(x) b(x)`.
#[derive(Debug, Clone)]
pub struct ProductGauge(pub Arc<dyn GaugeField>, pub Arc<dyn GaugeField>);

impl GaugeField for ProductGauge {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn size(&self) -> usize {
        self.0.size()
    }

    fn eval(&self, x: &[f64]) -> Result<Matrix> {
        Ok(self.0.eval(x)? * self.1.eval(x)?)
    }

    fn eval_jet(&self, x: &[f64]) -> Result<(Matrix, Vec<Matrix>)> {
        let (a, da) = self.0.eval_jet(x)?;
        let (b, db) = self.1.eval_jet(x)?;
        let d = da
            .iter()
            .zip(&db)
            .map(|(da, db)| da * &b + &a * db)
            .collect();
        Ok((a * b, d))
    }
}

/// `x ↦ g(φ(x))` for a coordinate change `φ`.
#[derive(Debug, Clone)]
pub struct PulledBackGauge {
    pub gauge: Arc<dyn GaugeField>,
    pub map: CoordinateTransition,
}

impl GaugeField for PulledBackGauge {
    fn dim(&self) -> usize {
        self.map.map.first().map_or(0, |e| e.dim())
    }

    fn size(&self) -> usize {
        self.gauge.size()
    }

    fn eval(&self, x: &[f64]) -> Result<Matrix> {
        self.gauge.eval(&self.map.apply(x)?)
    }

    fn eval_jet(&self, x: &[f64]) -> Result<(Matrix, Vec<Matrix>)> {
        let duals = self
            .map
            .map
            .iter()
            .map(|e| e.eval_dual(x))
            .collect::<Result<Vec<_>, _>>()?;
        let y: Vec<f64> = duals.iter().map(|d| d.value).collect();
        let (g, dg) = self.gauge.eval_jet(&y)?;
        let k = g.nrows();
        let d = (0..x.len())
            .map(|mu| {
                duals
                    .iter()
                    .zip(&dg)
                    .fold(Matrix::zeros(k, k), |acc, (yd, dgn)| acc + dgn * yd.deriv[mu])
            })
            .collect();
        Ok((g, d))
    }
}

/// The coefficients `g⁻¹ A_μ g + g⁻¹ ∂_μ g` of a gauge-transformed field.
#[derive(Debug, Clone)]
pub struct GaugedCoefficients {
    pub inner: Arc<dyn CoefficientField>,
    pub gauge: Arc<dyn GaugeField>,
}

impl CoefficientField for GaugedCoefficients {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn size(&self) -> usize {
        self.inner.size()
    }

    fn eval(&self, x: &[f64]) -> Result<Vec<Matrix>> {
        let a = self.inner.eval(x)?;
        let (g, dg) = self.gauge.eval_jet(x)?;
        let inv = invert(&g)?;
        Ok(a
            .iter()
            .zip(&dg)
            .map(|(a, dg)| &inv * a * &g + &inv * dg)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;

    fn rotation_field() -> Arc<dyn GaugeField> {
        Arc::new(
            MatrixExpr::parse(
                &[
                    vec!["cos(x1*x2)", "-sin(x1*x2)"],
                    vec!["sin(x1*x2)", "cos(x1*x2)"],
                ],
                2,
            )
            .unwrap(),
        )
    }

    fn fd_check(g: &dyn GaugeField, x: &[f64]) {
        let (_, d) = g.eval_jet(x).unwrap();
        let h = 1e-6;
        for nu in 0..x.len() {
            let mut p = x.to_vec();
            let mut m = x.to_vec();
            p[nu] += h;
            m[nu] -= h;
            let fd = (g.eval(&p).unwrap() - g.eval(&m).unwrap()) / (2.0 * h);
            assert!((fd - &d[nu]).norm() < 1e-8, "direction {nu}");
        }
    }

    #[test]
    fn composite_gauges_differentiate_correctly() {
        let r = rotation_field();
        let x = [0.4, -0.7];
        fd_check(r.as_ref(), &x);
        fd_check(&InverseGauge(r.clone()), &x);
        fd_check(&ProductGauge(r.clone(), Arc::new(InverseGauge(r.clone()))), &x);
        let swap = CoordinateTransition {
            from: crate::chart::ChartId(0),
            to: crate::chart::ChartId(1),
            map: vec![
                Expr::parse("x2^2", 2).unwrap(),
                Expr::parse("x1 + x2", 2).unwrap(),
            ],
        };
        fd_check(&PulledBackGauge { gauge: r, map: swap }, &x);
    }

    #[test]
    fn stencil_jet_matches_exact_jet() {
        let exact = ExprCoefficients::parse(&[
            vec![vec!["0", "-x2*x1^2"], vec!["x2*x1^2", "0"]],
            vec![vec!["0", "sin(x1)"], vec!["-sin(x1)", "0"]],
        ])
        .unwrap();
        #[derive(Debug)]
        struct Numeric(ExprCoefficients);
        impl CoefficientField for Numeric {
            fn dim(&self) -> usize {
                self.0.dim()
            }
            fn size(&self) -> usize {
                self.0.size()
            }
            fn eval(&self, x: &[f64]) -> Result<Vec<Matrix>> {
                self.0.eval(x)
            }
        }
        let x = [0.3, 1.1];
        let (_, a) = exact.eval_jet(&x).unwrap();
        let (_, b) = Numeric(exact.clone()).eval_jet(&x).unwrap();
        for mu in 0..2 {
            for nu in 0..2 {
                assert!((&a[mu][nu] - &b[mu][nu]).norm() < 1e-10);
            }
        }
    }
}
