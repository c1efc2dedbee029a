//! Piecewise smooth parametric paths and the path algebra used by the
//! transport axioms: constant paths, juxtaposition, reparametrization and
//! reversal.
//!
//! A path is a list of segments. Each segment carries its own chart, one
//! expression per coordinate in the local parameter `x1`, and a local domain
//! `[u0, u1]` (which may run backwards). The global parameter `t ∈ [0, 1]` is
//! split into consecutive sub-intervals, one per segment, and mapped affinely
//! onto the local domains.

use std::f64::consts::TAU;

use crate::chart::{Atlas, ChartId, ChartPoint, TangentVector};
use crate::error::{Error, Result};
use crate::expr::{Expr, Node};

/// Tolerance for endpoint matching between consecutive segments.
pub const ENDPOINT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub chart: ChartId,
    /// Coordinate functions of the local parameter `x1`.
    pub coords: Vec<Expr>,
    pub u0: f64,
    pub u1: f64,
}

impl Segment {
    pub fn new(chart: ChartId, coords: Vec<Expr>, u0: f64, u1: f64) -> Result<Self> {
        if coords.is_empty() || coords.iter().any(|e| e.dim() != 1) {
            return Err(Error::InvalidArgument(
                "segment coordinates must be non-empty expressions in x1".into(),
            ));
        }
        if !(u0.is_finite() && u1.is_finite()) || u0 == u1 {
            return Err(Error::InvalidArgument(format!(
                "segment domain [{u0}, {u1}] is degenerate"
            )));
        }
        Ok(Segment {
            chart,
            coords,
            u0,
            u1,
        })
    }

    /// Parses coordinate sources written in the local parameter `x1`.
    pub fn parse<S: AsRef<str>>(chart: ChartId, coords: &[S], u0: f64, u1: f64) -> Result<Self> {
        let coords = coords
            .iter()
            .map(|s| Expr::parse(s.as_ref(), 1))
            .collect::<Result<Vec<_>, _>>()?;
        Segment::new(chart, coords, u0, u1)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Point at local parameter `u`.
    pub fn point_at(&self, u: f64) -> Result<Vec<f64>> {
        self.coords
            .iter()
            .map(|e| e.eval(&[u]).map_err(Error::from))
            .collect()
    }

    /// Point and derivative with respect to the local parameter `u`.
    pub fn jet_at(&self, u: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut x = Vec::with_capacity(self.dim());
        let mut dx = Vec::with_capacity(self.dim());
        for e in &self.coords {
            let (v, d) = e.eval_univariate(u)?;
            x.push(v);
            dx.push(d);
        }
        Ok((x, dx))
    }

    /// Point and derivative with respect to the normalized parameter
    /// `s ∈ [0, 1]`, where `u = u0 + s (u1 − u0)`.
    pub fn normalized_jet(&self, s: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let span = self.u1 - self.u0;
        let (x, mut dx) = self.jet_at(self.u0 + s * span)?;
        dx.iter_mut().for_each(|d| *d *= span);
        Ok((x, dx))
    }

    pub fn start(&self) -> Result<ChartPoint> {
        Ok(ChartPoint::new(self.chart, self.point_at(self.u0)?))
    }

    pub fn end(&self) -> Result<ChartPoint> {
        Ok(ChartPoint::new(self.chart, self.point_at(self.u1)?))
    }

    /// The same image traversed over `[u1, u0]`.
    pub fn reversed(&self) -> Segment {
        Segment {
            u0: self.u1,
            u1: self.u0,
            ..self.clone()
        }
    }
}

/// A piecewise smooth path on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    segments: Vec<Segment>,
    /// Global breakpoints `0 = b_0 < b_1 < … < b_m = 1`.
    breaks: Vec<f64>,
}

/// Which one-sided limit to take at a breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

fn affine(a: f64, b: f64, e: &Expr) -> Node {
    // a + b*e
    Node::Add(
        Box::new(Node::Num(a)),
        Box::new(Node::Mul(Box::new(Node::Num(b)), Box::new(e.root().clone()))),
    )
}

fn linear_coords(a: &[f64], b: &[f64]) -> Vec<Expr> {
    let t = Expr::var(0, 1);
    a.iter()
        .zip(b)
        .map(|(&p, &q)| Expr::from_node(affine(p, q - p, &t), 1).expect("valid tree"))
        .collect()
}

impl PathSpec {
    /// Builds a path whose global sub-intervals are proportional to the
    /// lengths of the local domains. All segments must share one chart.
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        Self::build(segments, None, None)
    }

    /// Like [`PathSpec::new`], allowing chart changes between segments; the
    /// endpoint check goes through the atlas transitions.
    pub fn new_in(segments: Vec<Segment>, atlas: &Atlas) -> Result<Self> {
        Self::build(segments, None, Some(atlas))
    }

    /// Builds a path with explicit global breakpoints.
    pub fn with_breaks(
        segments: Vec<Segment>,
        breaks: Vec<f64>,
        atlas: Option<&Atlas>,
    ) -> Result<Self> {
        Self::build(segments, Some(breaks), atlas)
    }

    fn build(segments: Vec<Segment>, breaks: Option<Vec<f64>>, atlas: Option<&Atlas>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidArgument("a path needs at least one segment".into()));
        }
        let dim = segments[0].dim();
        if segments.iter().any(|s| s.dim() != dim) {
            return Err(Error::InvalidArgument(
                "all segments of a path must have the same dimension".into(),
            ));
        }
        let breaks = match breaks {
            Some(b) => {
                let ok = b.len() == segments.len() + 1
                    && b[0] == 0.0
                    && *b.last().unwrap() == 1.0
                    && b.windows(2).all(|w| w[0] < w[1]);
                if !ok {
                    return Err(Error::InvalidArgument(
                        "breakpoints must increase strictly from 0 to 1".into(),
                    ));
                }
                b
            }
            None => {
                let lengths: Vec<f64> = segments.iter().map(|s| (s.u1 - s.u0).abs()).collect();
                let total: f64 = lengths.iter().sum();
                let mut b = Vec::with_capacity(segments.len() + 1);
                let mut acc = 0.0;
                b.push(0.0);
                for l in &lengths[..lengths.len() - 1] {
                    acc += l;
                    b.push(acc / total);
                }
                b.push(1.0);
                b
            }
        };
        for pair in segments.windows(2) {
            let end = pair[0].end()?;
            let start = pair[1].start()?;
            let gap = match atlas {
                Some(a) => a.gap(&end, &start)?,
                None if end.chart == start.chart => end
                    .coords
                    .iter()
                    .zip(&start.coords)
                    .map(|(p, q)| (p - q).abs())
                    .fold(0.0, f64::max),
                None => {
                    return Err(Error::NoTransition {
                        from: end.chart,
                        to: start.chart,
                    })
                }
            };
            if !(gap <= ENDPOINT_TOL) {
                return Err(Error::EndpointMismatch { gap });
            }
        }
        Ok(PathSpec { segments, breaks })
    }

    /// Straight coordinate line from `a` to `b`.
    pub fn line(chart: ChartId, a: &[f64], b: &[f64]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::InvalidArgument("line endpoints differ in dimension".into()));
        }
        PathSpec::new(vec![Segment::new(chart, linear_coords(a, b), 0.0, 1.0)?])
    }

    /// Straight line `x + t v` for `t` between 0 and `length` (which may be
    /// negative).
    pub fn ray(chart: ChartId, x: &[f64], v: &[f64], length: f64) -> Result<Self> {
        let end: Vec<f64> = x.iter().zip(v).map(|(p, q)| p + q).collect();
        PathSpec::new(vec![Segment::new(chart, linear_coords(x, &end), 0.0, length)?])
    }

    /// Polygon through `vertices` with one straight segment per edge; each
    /// edge receives an equal share of `[0, 1]`.
    pub fn polygon(chart: ChartId, vertices: &[Vec<f64>], closed: bool) -> Result<Self> {
        let mut pts: Vec<&Vec<f64>> = vertices.iter().collect();
        if closed {
            if let Some(first) = vertices.first() {
                pts.push(first);
            }
        }
        if pts.len() < 2 {
            return Err(Error::InvalidArgument("a polygon needs at least two vertices".into()));
        }
        let segments = pts
            .windows(2)
            .map(|w| {
                if w[0].len() != w[1].len() {
                    return Err(Error::InvalidArgument(
                        "polygon vertices differ in dimension".into(),
                    ));
                }
                Segment::new(chart, linear_coords(w[0], w[1]), 0.0, 1.0)
            })
            .collect::<Result<Vec<_>>>()?;
        PathSpec::new(segments)
    }

    /// Circular arc `center + r (cos θ, sin θ)` in the plane of the first two
    /// coordinates, for `θ` from `theta0` to `theta1`. Further coordinates
    /// stay at the center's values.
    pub fn arc(chart: ChartId, center: &[f64], radius: f64, theta0: f64, theta1: f64) -> Result<Self> {
        if center.len() < 2 {
            return Err(Error::InvalidArgument("arcs need at least two coordinates".into()));
        }
        let theta = Expr::var(0, 1);
        let trig = |f: crate::expr::Func| Node::Call(f, vec![theta.root().clone()]);
        let mut coords = Vec::with_capacity(center.len());
        for (i, &c) in center.iter().enumerate() {
            let node = match i {
                0 => Node::Add(
                    Box::new(Node::Num(c)),
                    Box::new(Node::Mul(
                        Box::new(Node::Num(radius)),
                        Box::new(trig(crate::expr::Func::Cos)),
                    )),
                ),
                1 => Node::Add(
                    Box::new(Node::Num(c)),
                    Box::new(Node::Mul(
                        Box::new(Node::Num(radius)),
                        Box::new(trig(crate::expr::Func::Sin)),
                    )),
                ),
                _ => Node::Num(c),
            };
            coords.push(Expr::from_node(node, 1).expect("valid tree"));
        }
        PathSpec::new(vec![Segment::new(chart, coords, theta0, theta1)?])
    }

    /// Full counter-clockwise circle starting at angle 0.
    pub fn circle(chart: ChartId, center: &[f64], radius: f64) -> Result<Self> {
        PathSpec::arc(chart, center, radius, 0.0, TAU)
    }

    /// The constant path at `x`.
    pub fn constant(x: &ChartPoint) -> Self {
        let coords = x.coords.iter().map(|&c| Expr::constant(c, 1)).collect();
        PathSpec {
            segments: vec![Segment {
                chart: x.chart,
                coords,
                u0: 0.0,
                u1: 1.0,
            }],
            breaks: vec![0.0, 1.0],
        }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn dim(&self) -> usize {
        self.segments[0].dim()
    }

    pub fn start(&self) -> Result<ChartPoint> {
        self.segments[0].start()
    }

    pub fn end(&self) -> Result<ChartPoint> {
        self.segments.last().expect("non-empty").end()
    }

    /// Whether every segment has constant coordinates.
    pub fn is_constant(&self) -> bool {
        self.segments
            .iter()
            .all(|s| s.coords.iter().all(|e| matches!(e.root(), Node::Num(_))))
    }

    fn locate(&self, t: f64, side: Side) -> Result<(usize, f64)> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OutOfRange(t));
        }
        let m = self.segments.len();
        let mut i = self.breaks[1..m].partition_point(|&b| b <= t);
        if side == Side::Left && i > 0 && t == self.breaks[i] {
            i -= 1;
        }
        if t == 1.0 {
            i = m - 1;
        }
        let (b0, b1) = (self.breaks[i], self.breaks[i + 1]);
        Ok((i, (t - b0) / (b1 - b0)))
    }

    fn point_and_velocity(&self, t: f64, side: Side) -> Result<(ChartPoint, Vec<f64>)> {
        let (i, s) = self.locate(t, side)?;
        let seg = &self.segments[i];
        let (x, mut dx) = seg.normalized_jet(s)?;
        let width = self.breaks[i + 1] - self.breaks[i];
        dx.iter_mut().for_each(|d| *d /= width);
        Ok((ChartPoint::new(seg.chart, x), dx))
    }

    /// Point at global parameter `t`; at a breakpoint the right segment wins
    /// (the left one at `t = 1`).
    pub fn point(&self, t: f64) -> Result<ChartPoint> {
        Ok(self.point_and_velocity(t, Side::Right)?.0)
    }

    /// Velocity at global parameter `t` with the same breakpoint rule as
    /// [`PathSpec::point`].
    pub fn velocity(&self, t: f64) -> Result<TangentVector> {
        self.velocity_from(t, Side::Right)
    }

    /// One-sided velocity at `t`.
    pub fn velocity_from(&self, t: f64, side: Side) -> Result<TangentVector> {
        let (p, v) = self.point_and_velocity(t, side)?;
        TangentVector::new(p, v)
    }

    /// Both one-sided velocities at `t`; they differ only at breakpoints.
    pub fn one_sided_velocities(&self, t: f64) -> Result<(TangentVector, TangentVector)> {
        Ok((
            self.velocity_from(t, Side::Left)?,
            self.velocity_from(t, Side::Right)?,
        ))
    }

    /// Runs `self` first, then `next`, packing them into `[0, ½]` and `[½, 1]`.
    pub fn juxtapose(&self, next: &PathSpec) -> Result<PathSpec> {
        self.juxtapose_impl(next, None)
    }

    /// [`PathSpec::juxtapose`] across a chart change.
    pub fn juxtapose_in(&self, next: &PathSpec, atlas: &Atlas) -> Result<PathSpec> {
        self.juxtapose_impl(next, Some(atlas))
    }

    fn juxtapose_impl(&self, next: &PathSpec, atlas: Option<&Atlas>) -> Result<PathSpec> {
        let mut segments = self.segments.clone();
        segments.extend(next.segments.iter().cloned());
        let mut breaks: Vec<f64> = self.breaks.iter().map(|b| 0.5 * b).collect();
        breaks.pop();
        breaks.extend(next.breaks.iter().map(|b| 0.5 + 0.5 * b));
        *breaks.last_mut().expect("non-empty") = 1.0;
        PathSpec::build(segments, Some(breaks), atlas)
    }

    /// The same image traversed backwards.
    pub fn reverse(&self) -> PathSpec {
        let segments = self.segments.iter().rev().map(Segment::reversed).collect();
        let breaks = self.breaks.iter().rev().map(|b| 1.0 - b).collect();
        PathSpec { segments, breaks }
    }

    /// The path `t ↦ γ(α(t))` for a monotone `α` with `α(0) = 0` and
    /// `α(1) = 1`.
    ///
    /// Monotonicity is checked on 101 samples: `α′ ≥ 0` everywhere and `α`
    /// strictly increasing from sample to sample. This admits `α(t) = t²`,
    /// whose derivative vanishes at 0.
    pub fn reparametrize(&self, alpha: &Expr) -> Result<PathSpec> {
        check_monotone(alpha)?;
        let m = self.segments.len();
        // New breakpoints are the preimages of the old ones under α.
        let mut tau = vec![0.0; m + 1];
        tau[m] = 1.0;
        for (i, &b) in self.breaks.iter().enumerate().take(m).skip(1) {
            tau[i] = invert_monotone(alpha, b)?;
        }
        if tau.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::NotMonotone(
                "reparametrization collapses a segment".into(),
            ));
        }
        let mut segments = Vec::with_capacity(m);
        for (i, seg) in self.segments.iter().enumerate() {
            let (b0, b1) = (self.breaks[i], self.breaks[i + 1]);
            // u = u0 + (α(t) − b0)/(b1 − b0) · (u1 − u0)
            let scale = (seg.u1 - seg.u0) / (b1 - b0);
            let inner = Expr::from_node(affine(seg.u0 - b0 * scale, scale, alpha), 1)
                .expect("valid tree");
            let coords = seg
                .coords
                .iter()
                .map(|e| e.substitute(std::slice::from_ref(&inner)))
                .collect();
            segments.push(Segment::new(seg.chart, coords, tau[i], tau[i + 1])?);
        }
        Ok(PathSpec {
            segments,
            breaks: tau,
        })
    }

    /// The portion of the path over the global parameter range `[a, b]`,
    /// renormalized to `[0, 1]`.
    pub fn restrict(&self, a: f64, b: f64) -> Result<PathSpec> {
        if !(0.0 <= a && a < b && b <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "cannot restrict a path to [{a}, {b}]"
            )));
        }
        let mut segments = Vec::new();
        let mut breaks = vec![0.0];
        for (i, seg) in self.segments.iter().enumerate() {
            let (b0, b1) = (self.breaks[i], self.breaks[i + 1]);
            let lo = b0.max(a);
            let hi = b1.min(b);
            if !(lo < hi) {
                continue;
            }
            let local = |t: f64| seg.u0 + (t - b0) / (b1 - b0) * (seg.u1 - seg.u0);
            segments.push(Segment {
                u0: local(lo),
                u1: local(hi),
                ..seg.clone()
            });
            breaks.push((hi - a) / (b - a));
        }
        *breaks.last_mut().expect("non-empty") = 1.0;
        Ok(PathSpec { segments, breaks })
    }

    /// The first segment's formula continued to global parameter `t`, which
    /// may lie outside `[0, 1]` as long as the formula stays defined there.
    pub fn initial_extension(&self, t: f64) -> Result<PathSpec> {
        if t == 0.0 {
            return Err(Error::InvalidArgument("extension length must be non-zero".into()));
        }
        let seg = &self.segments[0];
        let width = self.breaks[1] - self.breaks[0];
        let u1 = seg.u0 + t / width * (seg.u1 - seg.u0);
        PathSpec::new(vec![Segment {
            u1,
            ..seg.clone()
        }])
    }
}

/// Checks that `alpha` is a valid reparametrization of `[0, 1]`.
pub fn check_monotone(alpha: &Expr) -> Result<()> {
    if alpha.dim() != 1 {
        return Err(Error::NotMonotone("reparametrization must be a function of x1".into()));
    }
    let at = |t: f64| alpha.eval_univariate(t).map_err(|e| Error::NotMonotone(e.to_string()));
    let (a0, _) = at(0.0)?;
    let (a1, _) = at(1.0)?;
    if (a0 - 0.0).abs() > ENDPOINT_TOL || (a1 - 1.0).abs() > ENDPOINT_TOL {
        return Err(Error::NotMonotone(format!(
            "α(0) = {a0}, α(1) = {a1}; expected 0 and 1"
        )));
    }
    let mut prev = f64::NEG_INFINITY;
    for i in 0..=100 {
        let t = i as f64 / 100.0;
        let (v, d) = at(t)?;
        if d < 0.0 {
            return Err(Error::NotMonotone(format!("α′({t}) = {d} < 0")));
        }
        if !(v > prev) {
            return Err(Error::NotMonotone(format!("α is not increasing at t = {t}")));
        }
        prev = v;
    }
    Ok(())
}

/// Solves `α(t) = y` on `[0, 1]` by bisection.
fn invert_monotone(alpha: &Expr, y: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if alpha.eval(&[mid])? < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
