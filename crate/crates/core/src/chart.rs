//! Boxed coordinate charts, points, tangent vectors and coordinate changes.

use std::fmt;

use crate::error::{Error, Result};
use crate::expr::Expr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChartId(pub u32);

impl fmt::Display for ChartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint {
    pub chart: ChartId,
    pub coords: Vec<f64>,
}

impl ChartPoint {
    pub fn new(chart: ChartId, coords: Vec<f64>) -> Self {
        ChartPoint { chart, coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base: ChartPoint,
    pub components: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: ChartPoint, components: Vec<f64>) -> Result<Self> {
        if components.len() != base.dim() {
            return Err(Error::InvalidArgument(format!(
                "tangent vector has {} components at a point of dimension {}",
                components.len(),
                base.dim()
            )));
        }
        Ok(TangentVector { base, components })
    }

    pub fn norm(&self) -> f64 {
        self.components.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// An axis-aligned open box `lo < x < hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartDomain {
    pub id: ChartId,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ChartDomain {
    pub fn new(id: ChartId, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::InvalidArgument(format!(
                "chart {id}: domain bounds must be non-empty and of equal length"
            )));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l < h)) {
            return Err(Error::InvalidArgument(format!(
                "chart {id}: every lower bound must be below its upper bound"
            )));
        }
        Ok(ChartDomain { id, lo, hi })
    }

    /// The box `(−half, half)ⁿ`.
    pub fn centered(id: ChartId, dim: usize, half: f64) -> Self {
        ChartDomain::new(id, vec![-half; dim], vec![half; dim]).expect("valid box")
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Strict box membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (l, h))| l < v && v < h)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| match (l.is_finite(), h.is_finite()) {
                (true, true) => 0.5 * (l + h),
                (true, false) => l + 1.0,
                (false, true) => h - 1.0,
                (false, false) => 0.0,
            })
            .collect()
    }
}

/// Coordinate change `x_to = map(x_from)` on the overlap of two charts.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateTransition {
    pub from: ChartId,
    pub to: ChartId,
    pub map: Vec<Expr>,
}

impl CoordinateTransition {
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.map
            .iter()
            .map(|e| e.eval(x).map_err(Error::from))
            .collect()
    }

    /// Image of `x` together with the pushed-forward vector `D map(x) · v`.
    pub fn push_forward(&self, x: &[f64], v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut y = Vec::with_capacity(self.map.len());
        let mut w = Vec::with_capacity(self.map.len());
        for e in &self.map {
            let d = e.eval_dual(x)?;
            y.push(d.value);
            w.push(d.deriv.iter().zip(v).map(|(a, b)| a * b).sum());
        }
        Ok((y, w))
    }
}

/// A finite atlas of boxed charts and coordinate transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct Atlas {
    charts: Vec<ChartDomain>,
    transitions: Vec<CoordinateTransition>,
}

impl Atlas {
    pub fn new(charts: Vec<ChartDomain>, transitions: Vec<CoordinateTransition>) -> Result<Self> {
        if charts.is_empty() {
            return Err(Error::InvalidArgument("an atlas needs at least one chart".into()));
        }
        for (i, c) in charts.iter().enumerate() {
            if charts[..i].iter().any(|d| d.id == c.id) {
                return Err(Error::InvalidArgument(format!("duplicate chart id {}", c.id)));
            }
        }
        let atlas = Atlas {
            charts,
            transitions: Vec::new(),
        };
        for t in &transitions {
            let from = atlas.chart(t.from)?;
            let to = atlas.chart(t.to)?;
            if t.from == t.to {
                return Err(Error::InvalidArgument(format!(
                    "transition from chart {} to itself",
                    t.from
                )));
            }
            if t.map.len() != to.dim() || t.map.iter().any(|e| e.dim() != from.dim()) {
                return Err(Error::InvalidArgument(format!(
                    "transition {} -> {} has the wrong shape",
                    t.from, t.to
                )));
            }
        }
        Ok(Atlas {
            transitions,
            ..atlas
        })
    }

    /// A single chart with the given box.
    pub fn single(domain: ChartDomain) -> Self {
        Atlas {
            charts: vec![domain],
            transitions: Vec::new(),
        }
    }

    pub fn charts(&self) -> &[ChartDomain] {
        &self.charts
    }

    pub fn transitions(&self) -> &[CoordinateTransition] {
        &self.transitions
    }

    pub fn chart(&self, id: ChartId) -> Result<&ChartDomain> {
        self.charts
            .iter()
            .find(|c| c.id == id)
            .ok_or(Error::UnknownChart(id))
    }

    pub fn transition(&self, from: ChartId, to: ChartId) -> Result<&CoordinateTransition> {
        self.transitions
            .iter()
            .find(|t| t.from == from && t.to == to)
            .ok_or(Error::NoTransition { from, to })
    }

    pub fn transitions_from(&self, from: ChartId) -> impl Iterator<Item = &CoordinateTransition> {
        self.transitions.iter().filter(move |t| t.from == from)
    }

    pub fn contains(&self, p: &ChartPoint) -> bool {
        self.chart(p.chart).is_ok_and(|c| c.contains(&p.coords))
    }

    pub fn check_inside(&self, p: &ChartPoint) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::OutsideChart {
                chart: p.chart,
                coords: p.coords.clone(),
            })
        }
    }

    /// Expresses `p` in chart `to`.
    pub fn convert(&self, p: &ChartPoint, to: ChartId) -> Result<ChartPoint> {
        if p.chart == to {
            return Ok(p.clone());
        }
        let t = self.transition(p.chart, to)?;
        Ok(ChartPoint::new(to, t.apply(&p.coords)?))
    }

    /// Max-norm distance between two points after expressing `b` in `a`'s
    /// chart (or `a` in `b`'s when only that direction is available).
    pub fn gap(&self, a: &ChartPoint, b: &ChartPoint) -> Result<f64> {
        let dist = |x: &[f64], y: &[f64]| {
            x.iter()
                .zip(y)
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max)
        };
        if a.chart == b.chart {
            return Ok(dist(&a.coords, &b.coords));
        }
        if let Ok(t) = self.transition(a.chart, b.chart) {
            return Ok(dist(&t.apply(&a.coords)?, &b.coords));
        }
        let t = self.transition(b.chart, a.chart)?;
        Ok(dist(&a.coords, &t.apply(&b.coords)?))
    }
}
