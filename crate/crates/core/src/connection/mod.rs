//! Local connection forms on an atlas of trivialized charts.
//!
//! In chart `a` the connection is a list of Lie-algebra valued coefficients
//! `A_μ(x)`. A transition `a → b` carries a coordinate map `φ` and a gauge
//! `g(x_a)` relating the local sections by `σ_b = σ_a · g`, so fiber
//! coordinates change as `u_b = g⁻¹ u_a` and the coefficients obey
//!
//! ```text
//! Σ_ν A^(b)_ν(φ(x)) ∂_μ φ^ν(x) = g⁻¹ A^(a)_μ g + g⁻¹ ∂_μ g .
//! ```

pub mod builtin;
pub mod fields;

use std::sync::Arc;

use crate::chart::{Atlas, ChartDomain, ChartId, ChartPoint, TangentVector};
use crate::error::{Error, Result};
use crate::group::{AlgebraElement, GroupElement, Matrix, StructureGroup};

pub use fields::{
    CoefficientField, ExprCoefficients, GaugeField, GaugedCoefficients, InverseGauge,
    ProductGauge, PulledBackGauge,
};

/// Number of overlap points at which transition compatibility is checked.
pub const COMPATIBILITY_SAMPLES: usize = 20;
/// Tolerance of the transition compatibility check.
pub const COMPATIBILITY_TOL: f64 = 1e-8;

/// A connection form on every chart of an atlas.
#[derive(Debug, Clone)]
pub struct ConnectionForm {
    group: StructureGroup,
    atlas: Atlas,
    /// Aligned with `atlas.charts()`.
    fields: Vec<Arc<dyn CoefficientField>>,
    /// Aligned with `atlas.transitions()`.
    gauges: Vec<Arc<dyn GaugeField>>,
}

impl ConnectionForm {
    /// Assembles and validates a connection: shapes, algebra membership of
    /// the coefficients at sampled points and the compatibility law on
    /// sampled overlap points.
    pub fn new(
        group: StructureGroup,
        atlas: Atlas,
        fields: Vec<Arc<dyn CoefficientField>>,
        gauges: Vec<Arc<dyn GaugeField>>,
    ) -> Result<Self> {
        let conn = ConnectionForm::unchecked(group, atlas, fields, gauges)?;
        conn.check_algebra()?;
        conn.check_compatibility()?;
        Ok(conn)
    }

    fn unchecked(
        group: StructureGroup,
        atlas: Atlas,
        fields: Vec<Arc<dyn CoefficientField>>,
        gauges: Vec<Arc<dyn GaugeField>>,
    ) -> Result<Self> {
        if fields.len() != atlas.charts().len() || gauges.len() != atlas.transitions().len() {
            return Err(Error::InvalidArgument(
                "one coefficient field per chart and one gauge per transition are required".into(),
            ));
        }
        let k = group.k();
        for (chart, f) in atlas.charts().iter().zip(&fields) {
            if f.dim() != chart.dim() || f.size() != k {
                return Err(Error::InvalidArgument(format!(
                    "chart {}: coefficients must be {k}×{k} in {} variables",
                    chart.id,
                    chart.dim()
                )));
            }
        }
        for (t, g) in atlas.transitions().iter().zip(&gauges) {
            let from = atlas.chart(t.from)?;
            if g.size() != k || g.dim() != from.dim() {
                return Err(Error::InvalidArgument(format!(
                    "transition {} -> {}: gauge must be {k}×{k} in {} variables",
                    t.from,
                    t.to,
                    from.dim()
                )));
            }
        }
        Ok(ConnectionForm {
            group,
            atlas,
            fields,
            gauges,
        })
    }

    /// Single-chart connection given by a coefficient field.
    pub fn single_chart(
        group: StructureGroup,
        domain: ChartDomain,
        field: Arc<dyn CoefficientField>,
    ) -> Result<Self> {
        ConnectionForm::new(group, Atlas::single(domain), vec![field], Vec::new())
    }

    pub fn group(&self) -> StructureGroup {
        self.group
    }

    pub fn atlas(&self) -> &Atlas {
        &self.atlas
    }

    pub fn dim(&self) -> usize {
        self.atlas.charts()[0].dim()
    }

    fn chart_index(&self, id: ChartId) -> Result<usize> {
        self.atlas
            .charts()
            .iter()
            .position(|c| c.id == id)
            .ok_or(Error::UnknownChart(id))
    }

    pub fn field(&self, id: ChartId) -> Result<&Arc<dyn CoefficientField>> {
        Ok(&self.fields[self.chart_index(id)?])
    }

    /// Gauge of the transition `from → to`.
    pub fn gauge(&self, from: ChartId, to: ChartId) -> Result<&Arc<dyn GaugeField>> {
        self.atlas
            .transitions()
            .iter()
            .position(|t| t.from == from && t.to == to)
            .map(|i| &self.gauges[i])
            .ok_or(Error::NoTransition { from, to })
    }

    /// `Σ_μ A_μ(x) v^μ` in chart `chart`, without the box check.
    pub(crate) fn contract(&self, chart: ChartId, x: &[f64], v: &[f64]) -> Result<Matrix> {
        let a = self.field(chart)?.eval(x)?;
        let k = self.group.k();
        Ok(a
            .iter()
            .zip(v)
            .fold(Matrix::zeros(k, k), |acc, (m, c)| acc + m * *c))
    }

    /// The matrix `M` with `u_to = M u_from` for fiber coordinates over `at`.
    pub fn change_of_trivialization(&self, at: &ChartPoint, to: ChartId) -> Result<Matrix> {
        if at.chart == to {
            return Ok(Matrix::identity(self.group.k(), self.group.k()));
        }
        fields::invert(&self.gauge(at.chart, to)?.eval(&at.coords)?)
    }

    fn check_algebra(&self) -> Result<()> {
        for (chart, f) in self.atlas.charts().iter().zip(&self.fields) {
            for x in sample_box(chart, COMPATIBILITY_SAMPLES) {
                let Ok(values) = f.eval(&x) else { continue };
                for a in values {
                    AlgebraElement::new(a, self.group)?;
                }
            }
        }
        Ok(())
    }

    /// Checks the transition law at sampled overlap points.
    pub fn check_compatibility(&self) -> Result<()> {
        for (t, g) in self.atlas.transitions().iter().zip(&self.gauges) {
            let from = self.atlas.chart(t.from)?;
            let to = self.atlas.chart(t.to)?;
            let fa = self.field(t.from)?;
            let fb = self.field(t.to)?;
            let incompatible = |reason: String| Error::IncompatibleTransition {
                from: t.from,
                to: t.to,
                reason,
            };
            let mut checked = 0;
            for x in sample_box(from, 100 * COMPATIBILITY_SAMPLES) {
                if checked == COMPATIBILITY_SAMPLES {
                    break;
                }
                let Ok(duals) = t
                    .map
                    .iter()
                    .map(|e| e.eval_dual(&x))
                    .collect::<Result<Vec<_>, _>>()
                else {
                    continue;
                };
                let y: Vec<f64> = duals.iter().map(|d| d.value).collect();
                if !to.contains(&y) {
                    continue;
                }
                let (Ok(ab), Ok(aa), Ok((gx, dg))) = (fb.eval(&y), fa.eval(&x), g.eval_jet(&x))
                else {
                    continue;
                };
                let Ok(inv) = fields::invert(&gx) else { continue };
                GroupElement::new(gx.clone(), self.group)
                    .map_err(|e| incompatible(format!("gauge at {x:?}: {e}")))?;
                for mu in 0..from.dim() {
                    let lhs = duals
                        .iter()
                        .zip(&ab)
                        .fold(Matrix::zeros(gx.nrows(), gx.nrows()), |acc, (d, a)| {
                            acc + a * d.deriv[mu]
                        });
                    let rhs = &inv * &aa[mu] * &gx + &inv * &dg[mu];
                    let dev = (&lhs - &rhs).norm();
                    if dev > COMPATIBILITY_TOL * rhs.norm().max(1.0) {
                        return Err(incompatible(format!(
                            "gauge law violated by {dev:.3e} at {x:?} in direction {}",
                            mu + 1
                        )));
                    }
                }
                checked += 1;
            }
            if checked == 0 {
                return Err(incompatible("no overlap points found".into()));
            }
        }
        Ok(())
    }
}

/// Deterministic low-discrepancy points (Halton sequence) strictly inside a
/// chart box. Unbounded directions are sampled within distance 1 of the
/// box center.
pub fn sample_box(domain: &ChartDomain, count: usize) -> Vec<Vec<f64>> {
    const PRIMES: [u32; 9] = [2, 3, 5, 7, 11, 13, 17, 19, 23];
    let (lo, hi) = finite_box(domain);
    (1..=count)
        .map(|i| {
            (0..domain.dim())
                .map(|d| {
                    let u = radical_inverse(i as u32, PRIMES[d % PRIMES.len()]);
                    lo[d] + (hi[d] - lo[d]) * (0.02 + 0.96 * u)
                })
                .collect()
        })
        .collect()
}

/// The chart box with unbounded sides replaced by `center ± 1`.
pub fn finite_box(domain: &ChartDomain) -> (Vec<f64>, Vec<f64>) {
    let c = domain.center();
    let lo = domain
        .lo
        .iter()
        .zip(&c)
        .map(|(l, c)| if l.is_finite() { *l } else { c - 1.0 })
        .collect();
    let hi = domain
        .hi
        .iter()
        .zip(&c)
        .map(|(h, c)| if h.is_finite() { *h } else { c + 1.0 })
        .collect();
    (lo, hi)
}

fn radical_inverse(mut i: u32, base: u32) -> f64 {
    let inv = 1.0 / f64::from(base);
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * f64::from(i % base);
        i /= base;
        f *= inv;
    }
    r
}

/// Pairs `Σ_μ A_μ(x) v^μ`.
pub fn eval_connection(
    conn: &ConnectionForm,
    x: &ChartPoint,
    v: &TangentVector,
) -> Result<AlgebraElement> {
    if v.base != *x {
        return Err(Error::InvalidArgument(
            "tangent vector is not based at the evaluation point".into(),
        ));
    }
    conn.atlas.check_inside(x)?;
    let a = conn.contract(x.chart, &x.coords, &v.components)?;
    AlgebraElement::new(a, conn.group)
}

/// Curvature components `F_μν` for `μ < ν` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureValue {
    pub base: ChartPoint,
    dim: usize,
    /// Upper-triangular components in row-major pair order.
    upper: Vec<AlgebraElement>,
}

impl CurvatureValue {
    fn pair_index(&self, mu: usize, nu: usize) -> usize {
        // Position of (mu, nu), mu < nu, in the row-major upper triangle.
        mu * (2 * self.dim - mu - 1) / 2 + (nu - mu - 1)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `F_μν` for any pair of zero-based indices.
    pub fn component(&self, mu: usize, nu: usize) -> Matrix {
        use std::cmp::Ordering;
        match mu.cmp(&nu) {
            Ordering::Less => self.upper[self.pair_index(mu, nu)].matrix().clone(),
            Ordering::Greater => -self.upper[self.pair_index(nu, mu)].matrix(),
            Ordering::Equal => {
                let k = self.upper.first().map_or(0, |a| a.matrix().nrows());
                Matrix::zeros(k, k)
            }
        }
    }

    /// Stored components with their index pairs.
    pub fn components(&self) -> impl Iterator<Item = ((usize, usize), &AlgebraElement)> {
        let n = self.dim;
        (0..n)
            .flat_map(move |mu| (mu + 1..n).map(move |nu| (mu, nu)))
            .zip(self.upper.iter())
    }

    /// Largest Frobenius norm among the components.
    pub fn max_norm(&self) -> f64 {
        self.upper
            .iter()
            .map(|a| a.matrix().norm())
            .fold(0.0, f64::max)
    }
}

/// `F_μν = ∂_μ A_ν − ∂_ν A_μ + [A_μ, A_ν]` at `x`.
pub fn curvature_at(conn: &ConnectionForm, x: &ChartPoint) -> Result<CurvatureValue> {
    conn.atlas.check_inside(x)?;
    curvature_unchecked(conn, x)
}

fn curvature_unchecked(conn: &ConnectionForm, x: &ChartPoint) -> Result<CurvatureValue> {
    let (a, d) = conn.field(x.chart)?.eval_jet(&x.coords)?;
    let n = a.len();
    let mut upper = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
    for mu in 0..n {
        for nu in mu + 1..n {
            let f = &d[nu][mu] - &d[mu][nu] + &a[mu] * &a[nu] - &a[nu] * &a[mu];
            upper.push(if conn.group.is_orthogonal() {
                AlgebraElement::projected(f, conn.group)?
            } else {
                AlgebraElement::new(f, conn.group)?
            });
        }
    }
    Ok(CurvatureValue {
        base: x.clone(),
        dim: n,
        upper,
    })
}

/// Result of a grid curvature scan.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatnessReport {
    pub flat: bool,
    pub max_norm: f64,
    pub argmax: Option<ChartPoint>,
    pub points_checked: usize,
    pub points_skipped: usize,
    pub tol: f64,
}

/// Scans `max ‖F_μν‖_F` over a cell-centered grid with `samples` points per
/// direction in every chart.
pub fn is_flat(conn: &ConnectionForm, samples: usize, tol: f64) -> Result<FlatnessReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let mut report = FlatnessReport {
        flat: true,
        max_norm: 0.0,
        argmax: None,
        points_checked: 0,
        points_skipped: 0,
        tol,
    };
    for chart in conn.atlas.charts() {
        for x in grid_points(chart, samples) {
            let p = ChartPoint::new(chart.id, x);
            match curvature_unchecked(conn, &p) {
                Ok(f) => {
                    report.points_checked += 1;
                    let m = f.max_norm();
                    if m >= report.max_norm || report.argmax.is_none() {
                        report.max_norm = m.max(report.max_norm);
                        report.argmax = Some(p);
                    }
                }
                Err(_) => report.points_skipped += 1,
            }
        }
    }
    report.flat = report.points_checked > 0 && report.max_norm <= tol;
    Ok(report)
}

/// Cell-centered grid with `samples` points per direction.
pub fn grid_points(domain: &ChartDomain, samples: usize) -> Vec<Vec<f64>> {
    let (lo, hi) = finite_box(domain);
    let n = domain.dim();
    let total = samples.pow(n as u32);
    (0..total)
        .map(|mut idx| {
            (0..n)
                .map(|d| {
                    let i = idx % samples;
                    idx /= samples;
                    lo[d] + (hi[d] - lo[d]) * (i as f64 + 0.5) / samples as f64
                })
                .collect()
        })
        .collect()
}

/// Regauges chart `chart` by `g`: `A ↦ g⁻¹ A g + g⁻¹ dg`, with the transition
/// gauges adjusted so that the result is again a consistent connection.
pub fn gauge_transform(
    conn: &ConnectionForm,
    chart: ChartId,
    g: Arc<dyn GaugeField>,
) -> Result<ConnectionForm> {
    let index = conn.chart_index(chart)?;
    let domain = &conn.atlas.charts()[index];
    if g.size() != conn.group.k() || g.dim() != domain.dim() {
        return Err(Error::InvalidArgument(
            "gauge has the wrong shape for this chart".into(),
        ));
    }
    for x in sample_box(domain, COMPATIBILITY_SAMPLES) {
        let m = g.eval(&x)?;
        fields::invert(&m)?;
        if conn.group.is_orthogonal() {
            GroupElement::new(m, conn.group)
                .map_err(|e| Error::SingularGauge(format!("gauge leaves the group: {e}")))?;
        }
    }
    let mut fields = conn.fields.clone();
    fields[index] = Arc::new(GaugedCoefficients {
        inner: conn.fields[index].clone(),
        gauge: g.clone(),
    });
    let inverse: Arc<dyn GaugeField> = Arc::new(InverseGauge(g.clone()));
    let gauges = conn
        .atlas
        .transitions()
        .iter()
        .zip(&conn.gauges)
        .map(|(t, old)| -> Arc<dyn GaugeField> {
            if t.from == chart {
                Arc::new(ProductGauge(inverse.clone(), old.clone()))
            } else if t.to == chart {
                Arc::new(ProductGauge(
                    old.clone(),
                    Arc::new(PulledBackGauge {
                        gauge: g.clone(),
                        map: t.clone(),
                    }),
                ))
            } else {
                old.clone()
            }
        })
        .collect();
    ConnectionForm::unchecked(conn.group, conn.atlas.clone(), fields, gauges)
}
