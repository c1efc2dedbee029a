//! Loop holonomy, curvature from shrinking loops, and the comparison between
//! vanishing curvature and homotopy invariance of transport.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;

use crate::chart::{ChartId, ChartPoint};
use crate::connection::{finite_box, is_flat, ConnectionForm, FlatnessReport};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::group::{group_log, GroupElement, Matrix};
use crate::path::{PathSpec, Segment, ENDPOINT_TOL};
use crate::transport::{EngineOracle, SolverConfig, TransportOracle, TransportResult};

/// Threshold separating flat from curved in [`flatness_verdict`].
pub const FLATNESS_THRESHOLD: f64 = 1e-6;
/// Samples per direction of the curvature grid in [`flatness_verdict`].
pub const VERDICT_GRID: usize = 7;
/// Number of `s` samples of the canned homotopy families.
pub const DEFAULT_S_SAMPLES: usize = 11;
/// Samples used to check that a family keeps its endpoints fixed.
pub const ENDPOINT_SAMPLES: usize = 21;

#[derive(Debug, Clone, PartialEq)]
pub struct Holonomy {
    /// Transport around the loop, in the trivialization at the basepoint.
    pub g: GroupElement,
    /// Rotation angle for `SO(2)`, `U(1)` and `SO(3)`.
    pub angle: Option<f64>,
    pub transport: TransportResult,
}

/// Holonomy of a closed loop as seen by any oracle. When the loop ends in a
/// different chart than it starts, the result is brought back to the start
/// trivialization.
pub fn oracle_holonomy(oracle: &dyn TransportOracle, loop_: &PathSpec) -> Result<Holonomy> {
    let r = oracle.transport(loop_)?;
    let start = loop_.start()?;
    let g = if r.end.chart == start.chart {
        let gap = max_gap(&r.end.coords, &start.coords);
        if gap > ENDPOINT_TOL {
            return Err(Error::NotClosed { gap });
        }
        r.g.clone()
    } else {
        let back = oracle.change_of_trivialization(&r.end, start.chart)?;
        GroupElement::new(back * r.g.matrix(), oracle.group())?
    };
    Ok(Holonomy {
        angle: g.rotation_angle(),
        g,
        transport: r,
    })
}

/// Holonomy of `loop_` under the engine transport of `conn`.
pub fn holonomy(conn: &ConnectionForm, loop_: &PathSpec, cfg: &SolverConfig) -> Result<Holonomy> {
    let start = loop_.start()?;
    let end = loop_.end()?;
    let gap = if start.chart == end.chart {
        max_gap(&start.coords, &end.coords)
    } else {
        conn.atlas().gap(&start, &end)?
    };
    if gap > ENDPOINT_TOL {
        return Err(Error::NotClosed { gap });
    }
    oracle_holonomy(&EngineOracle::new(conn, *cfg), loop_)
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Distance between two angles on the circle.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureEstimate {
    pub mu: usize,
    pub nu: usize,
    pub eps: Vec<f64>,
    /// `log(H(∂R_ε)) / (−ε²)` for each `ε`.
    pub estimates: Vec<Matrix>,
    /// First-order Richardson extrapolation from the two smallest `ε`.
    pub extrapolated: Matrix,
    /// Observed convergence order in `ε`, from the last three estimates;
    /// `None` if the estimates agree to rounding.
    pub order: Option<f64>,
}

/// Estimates `F_μν(x)` from holonomies of the coordinate squares
/// `x, x + εe_μ, x + εe_μ + εe_ν, x + εe_ν` for each `ε` in `eps`
/// (given in decreasing order).
pub fn shrinking_loop_curvature(
    oracle: &dyn TransportOracle,
    x: &ChartPoint,
    mu: usize,
    nu: usize,
    eps: &[f64],
) -> Result<CurvatureEstimate> {
    let n = x.dim();
    if mu >= n || nu >= n || mu == nu {
        return Err(Error::InvalidArgument(format!(
            "need two distinct directions below {n}, got ({mu}, {nu})"
        )));
    }
    if eps.len() < 2 || eps.iter().any(|e| !(*e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "the ε sweep needs at least two positive, strictly decreasing values".into(),
        ));
    }
    let estimates = eps
        .iter()
        .map(|&e| {
            let corner = |a: f64, b: f64| {
                let mut p = x.coords.clone();
                p[mu] += a * e;
                p[nu] += b * e;
                p
            };
            let square = PathSpec::polygon(
                x.chart,
                &[corner(0.0, 0.0), corner(1.0, 0.0), corner(1.0, 1.0), corner(0.0, 1.0)],
                true,
            )?;
            let h = oracle_holonomy(oracle, &square)?;
            Ok(group_log(&h.g)?.into_matrix() / (-e * e))
        })
        .collect::<Result<Vec<Matrix>>>()?;
    let m = eps.len();
    let r = eps[m - 2] / eps[m - 1];
    let extrapolated = (&estimates[m - 1] * r - &estimates[m - 2]) / (r - 1.0);
    let order = (m >= 3)
        .then(|| {
            let d1 = (&estimates[m - 3] - &estimates[m - 2]).norm();
            let d2 = (&estimates[m - 2] - &estimates[m - 1]).norm();
            (d1 > 1e-12 && d2 > 1e-12).then(|| (d1 / d2).ln() / (eps[m - 3] / eps[m - 2]).ln())
        })
        .flatten();
    Ok(CurvatureEstimate {
        mu,
        nu,
        eps: eps.to_vec(),
        estimates,
        extrapolated,
        order,
    })
}

/// A family of paths `γ_s(t)`, `(t, s) ∈ [0,1]²`, with fixed endpoints.
/// The coordinate expressions use `x1` for `t` and `x2` for `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyFamily {
    pub chart: ChartId,
    pub coords: Vec<Expr>,
    pub s_samples: usize,
}

impl HomotopyFamily {
    pub fn new(chart: ChartId, coords: Vec<Expr>, s_samples: usize) -> Result<Self> {
        if coords.is_empty() || coords.iter().any(|e| e.dim() != 2) {
            return Err(Error::InvalidArgument(
                "family coordinates must be expressions in (x1 = t, x2 = s)".into(),
            ));
        }
        if s_samples < 2 {
            return Err(Error::InvalidArgument("a family needs at least two s samples".into()));
        }
        let family = HomotopyFamily {
            chart,
            coords,
            s_samples,
        };
        family.check_endpoints()?;
        Ok(family)
    }

    pub fn parse<S: AsRef<str>>(chart: ChartId, coords: &[S], s_samples: usize) -> Result<Self> {
        let coords = coords
            .iter()
            .map(|c| Expr::parse(c.as_ref(), 2))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        HomotopyFamily::new(chart, coords, s_samples)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn point(&self, t: f64, s: f64) -> Result<Vec<f64>> {
        Ok(self
            .coords
            .iter()
            .map(|c| c.eval(&[t, s]))
            .collect::<std::result::Result<Vec<_>, _>>()?)
    }

    fn check_endpoints(&self) -> Result<()> {
        let a = self.point(0.0, 0.0)?;
        let b = self.point(1.0, 0.0)?;
        for i in 1..ENDPOINT_SAMPLES {
            let s = i as f64 / (ENDPOINT_SAMPLES - 1) as f64;
            let gap = max_gap(&self.point(0.0, s)?, &a).max(max_gap(&self.point(1.0, s)?, &b));
            if gap > ENDPOINT_TOL {
                return Err(Error::EndpointMismatch { gap });
            }
        }
        Ok(())
    }

    /// Uniform grid of `s` values.
    pub fn s_values(&self) -> Vec<f64> {
        (0..self.s_samples)
            .map(|i| i as f64 / (self.s_samples - 1) as f64)
            .collect()
    }

    /// The path `t ↦ γ_s(t)`.
    pub fn path(&self, s: f64) -> Result<PathSpec> {
        let subs = [Expr::var(0, 1), Expr::constant(s, 1)];
        let coords = self.coords.iter().map(|c| c.substitute(&subs)).collect();
        PathSpec::new(vec![Segment::new(self.chart, coords, 0.0, 1.0)?])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyScan {
    pub s_values: Vec<f64>,
    pub transports: Vec<Matrix>,
    /// `max ‖P(γ_s) − P(γ_s′)‖_F`.
    pub spread: f64,
}

/// Transports every member of `family` (in parallel) and reports how much
/// the results differ.
pub fn homotopy_scan(oracle: &dyn TransportOracle, family: &HomotopyFamily) -> Result<HomotopyScan> {
    let s_values = family.s_values();
    let results = s_values
        .par_iter()
        .map(|&s| oracle.transport(&family.path(s)?))
        .collect::<Result<Vec<_>>>()?;
    let target = results[0].end.chart;
    let transports = results
        .iter()
        .map(|r| Ok(oracle.change_of_trivialization(&r.end, target)? * r.g.matrix()))
        .collect::<Result<Vec<_>>>()?;
    let mut spread: f64 = 0.0;
    for i in 0..transports.len() {
        for j in i + 1..transports.len() {
            spread = spread.max((&transports[i] - &transports[j]).norm());
        }
    }
    Ok(HomotopyScan {
        s_values,
        transports,
        spread,
    })
}

/// The family `(t, 6 s t (1 − t))` in chart `chart`, whose members enclose
/// area `s` with the segment from the origin to `(1, 0)`.
pub fn area_sweep_family(chart: ChartId) -> HomotopyFamily {
    HomotopyFamily::parse(chart, &["x1", "6*x2*x1*(1 - x1)"], DEFAULT_S_SAMPLES)
        .expect("valid family")
}

/// Three fixed-endpoint families around the center of the first chart.
pub fn canned_families(conn: &ConnectionForm) -> Result<Vec<(String, HomotopyFamily)>> {
    let chart = &conn.atlas().charts()[0];
    let n = chart.dim();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "homotopy families need at least two dimensions".into(),
        ));
    }
    let (lo, hi) = finite_box(chart);
    let center: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect();
    let width = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| h - l)
        .fold(f64::INFINITY, f64::min);
    let r = (0.25 * width).min(0.5);
    let (c1, c2) = (center[0], center[1]);
    let rest: Vec<String> = center[2..].iter().map(|c| format!("({c:?})")).collect();
    let shapes = [
        (
            "arc-up",
            format!("({c1:?}) + ({r:?})*(2*x1 - 1)"),
            format!("({c2:?}) + 1.2*({r:?})*x2*sin(pi*x1)"),
        ),
        (
            "arc-down-wiggle",
            format!("({c1:?}) + ({r:?})*(2*x1 - 1) + 0.3*({r:?})*x2*sin(2*pi*x1)"),
            format!("({c2:?}) - ({r:?})*x2*sin(pi*x1)"),
        ),
        (
            "diagonal-bulge",
            format!("({c1:?}) + ({r:?})*(2*x1 - 1) - ({r:?})*x2*sin(pi*x1)"),
            format!("({c2:?}) + ({r:?})*(2*x1 - 1) + ({r:?})*x2*sin(pi*x1)"),
        ),
    ];
    shapes
        .into_iter()
        .map(|(name, a, b)| {
            let coords: Vec<String> = [a, b]
                .into_iter()
                .chain(rest.iter().cloned())
                .map(|c| c.replace("pi", &format!("{PI:?}")))
                .collect();
            Ok((name.to_string(), HomotopyFamily::parse(chart.id, &coords, DEFAULT_S_SAMPLES)?))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Flat,
    Curved,
    /// The curvature grid and the homotopy scans disagree.
    Inconsistent,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Flat => "FLAT",
            Verdict::Curved => "CURVED",
            Verdict::Inconsistent => "INCONSISTENT",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatnessVerdict {
    pub verdict: Verdict,
    pub curvature: FlatnessReport,
    /// Spread of each canned family, by name.
    pub spreads: Vec<(String, f64)>,
    pub threshold: f64,
}

impl FlatnessVerdict {
    pub fn max_spread(&self) -> f64 {
        self.spreads.iter().map(|(_, s)| *s).fold(0.0, f64::max)
    }
}

/// Compares grid curvature with homotopy invariance on the canned families.
pub fn flatness_verdict(conn: &ConnectionForm, cfg: &SolverConfig) -> Result<FlatnessVerdict> {
    let curvature = is_flat(conn, VERDICT_GRID, FLATNESS_THRESHOLD)?;
    let oracle = EngineOracle::new(conn, *cfg);
    let spreads = canned_families(conn)?
        .into_iter()
        .map(|(name, fam)| Ok((name, homotopy_scan(&oracle, &fam)?.spread)))
        .collect::<Result<Vec<_>>>()?;
    let curved_grid = curvature.max_norm > FLATNESS_THRESHOLD;
    let curved_scan = spreads.iter().any(|(_, s)| *s > FLATNESS_THRESHOLD);
    let verdict = match (curved_grid, curved_scan) {
        (false, false) => Verdict::Flat,
        (true, true) => Verdict::Curved,
        _ => Verdict::Inconsistent,
    };
    Ok(FlatnessVerdict {
        verdict,
        curvature,
        spreads,
        threshold: FLATNESS_THRESHOLD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::builtin;

    const C: ChartId = ChartId(0);

    #[test]
    fn open_path_is_rejected() {
        let conn = builtin::flat_so2().unwrap();
        let line = PathSpec::line(C, &[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!(matches!(
            holonomy(&conn, &line, &SolverConfig::default()),
            Err(Error::NotClosed { .. })
        ));
    }

    #[test]
    fn unit_square_on_abelian_area() {
        let conn = builtin::abelian_area(1.5).unwrap();
        let square = PathSpec::polygon(
            C,
            &[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]],
            true,
        )
        .unwrap();
        let h = holonomy(&conn, &square, &SolverConfig::default()).unwrap();
        assert!((h.angle.unwrap() + 1.5).abs() < 1e-7);
    }

    #[test]
    fn family_endpoints_must_stay_fixed() {
        assert!(HomotopyFamily::parse(C, &["x1 + x2", "0"], 5).is_err());
        let f = area_sweep_family(C);
        let p = f.path(0.5).unwrap();
        assert!((p.point(0.5).unwrap().coords[1] - 0.75).abs() < 1e-14);
    }

    #[test]
    fn angle_distance_wraps() {
        assert!(angle_distance(PI, -PI) < 1e-15);
        assert!((angle_distance(0.1, 2.0 * PI - 0.1) - 0.2).abs() < 1e-14);
    }

    #[test]
    fn canned_families_are_valid() {
        let conn = builtin::levi_civita_s2_stereo().unwrap();
        let fams = canned_families(&conn).unwrap();
        assert_eq!(fams.len(), 3);
        for (_, f) in fams {
            assert_eq!(f.s_samples, DEFAULT_S_SAMPLES);
        }
    }
}
