//! Parallel transport by integrating `U′ = −A(γ̇) U`, `U(0) = I`.
//!
//! Each smooth segment is integrated separately in its normalized parameter
//! `s ∈ [0, 1]`, so corners never fall inside a step. When the path leaves
//! the current chart box the exit parameter is located by bisection, the
//! integration stops there, the fiber coordinates switch to a neighbouring
//! chart (`U ← g⁻¹ U`) and integration resumes in that chart.

pub mod axioms;
pub mod oracle;

use crate::chart::{ChartId, ChartPoint};
use crate::connection::ConnectionForm;
use crate::error::{Error, Result};
use crate::group::{project_to_group, GroupElement, Matrix, StructureGroup};
use crate::path::{PathSpec, Segment};

pub use axioms::{verify_axioms, AxiomReport, AxiomSuite};
pub use oracle::{EngineOracle, IdentityOracle, TransportOracle, TruncatingOracle};

/// Smallest step the step-doubling integrator may take.
pub const MIN_STEP: f64 = 1e-7;
/// Precision of the chart-exit bisection, in the segment parameter.
pub const EXIT_PRECISION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Classical RK4 with a fixed step.
    Rk4Fixed,
    /// RK4 with step-doubling error control.
    Rk4Doubling,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Rk4Fixed => "rk4-fixed",
            Method::Rk4Doubling => "rk4-doubling",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    /// Step in the normalized segment parameter; the initial step for
    /// [`Method::Rk4Doubling`].
    pub h: f64,
    pub project_every: usize,
    /// Per-step error tolerance of [`Method::Rk4Doubling`].
    pub tol: f64,
}

impl SolverConfig {
    pub fn new(method: Method, h: f64, project_every: usize, tol: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 0.1) {
            return Err(Error::InvalidArgument(format!("step h = {h} must lie in (0, 0.1]")));
        }
        if project_every == 0 {
            return Err(Error::InvalidArgument("project_every must be at least 1".into()));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
        }
        Ok(SolverConfig {
            method,
            h,
            project_every,
            tol,
        })
    }

    /// Fixed-step RK4 with projection every step.
    pub fn fixed(h: f64) -> Result<Self> {
        SolverConfig::new(Method::Rk4Fixed, h, 1, 1e-10)
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: Method::Rk4Fixed,
            h: 1e-3,
            project_every: 1,
            tol: 1e-10,
        }
    }
}

/// `P(γ)` expressed from the start trivialization to the end trivialization.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportResult {
    pub start: ChartPoint,
    pub end: ChartPoint,
    pub g: GroupElement,
    pub step_count: usize,
    /// Accumulated step-doubling estimate; zero for fixed steps.
    pub est_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftSample {
    pub t: f64,
    pub point: ChartPoint,
    pub u: GroupElement,
}

/// Horizontal lift of a path through a fiber point `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedPath {
    pub base: PathSpec,
    pub start_fiber_point: GroupElement,
    pub samples: Vec<LiftSample>,
}

struct Outcome {
    end: ChartPoint,
    u: Matrix,
    steps: usize,
    est_error: f64,
    samples: Vec<LiftSample>,
}

/// Point and rate matrix `−A(ẋ)` of a segment in the current chart.
struct Probe {
    x: Vec<f64>,
    inside: bool,
    rate: Option<Matrix>,
}

struct Integrator<'a> {
    conn: &'a ConnectionForm,
    cfg: SolverConfig,
    record: bool,
    chart: ChartId,
    u: Matrix,
    steps: usize,
    est_error: f64,
    samples: Vec<LiftSample>,
}

impl<'a> Integrator<'a> {
    fn group(&self) -> StructureGroup {
        self.conn.group()
    }

    /// Segment point and velocity in `chart`.
    fn jet_in(&self, seg: &Segment, chart: ChartId, s: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let (x, dx) = seg.normalized_jet(s)?;
        if chart == seg.chart {
            return Ok((x, dx));
        }
        self.conn
            .atlas()
            .transition(seg.chart, chart)?
            .push_forward(&x, &dx)
    }

    fn probe(&self, seg: &Segment, s: f64, with_rate: bool) -> Result<Probe> {
        let (x, dx) = self.jet_in(seg, self.chart, s)?;
        let inside = self.conn.atlas().chart(self.chart)?.contains(&x);
        let rate = if inside && with_rate {
            Some(-self.conn.contract(self.chart, &x, &dx)?)
        } else {
            None
        };
        Ok(Probe { x, inside, rate })
    }

    fn inside_at(&self, seg: &Segment, s: f64) -> Result<bool> {
        Ok(self.probe(seg, s, false)?.inside)
    }

    fn project(&mut self) -> Result<()> {
        if self.group().is_orthogonal() {
            self.u = project_to_group(&self.u, self.group())?.into_matrix();
        }
        Ok(())
    }

    fn record_sample(&mut self, b: (f64, f64), s: f64, x: Vec<f64>) -> Result<()> {
        if self.record {
            let u = project_to_group(&self.u, self.group())?;
            self.samples.push(LiftSample {
                t: b.0 + s * (b.1 - b.0),
                point: ChartPoint::new(self.chart, x),
                u,
            });
        }
        Ok(())
    }

    /// One classical RK4 step of `U′ = M(s) U` given the three rate samples.
    fn rk4(u: &Matrix, h: f64, m0: &Matrix, mh: &Matrix, m1: &Matrix) -> Matrix {
        let k1 = m0 * u;
        let k2 = mh * (u + &k1 * (0.5 * h));
        let k3 = mh * (u + &k2 * (0.5 * h));
        let k4 = m1 * (u + &k3 * h);
        u + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0)
    }

    fn rate(&self, seg: &Segment, s: f64) -> Result<Matrix> {
        let p = self.probe(seg, s, true)?;
        p.rate.ok_or(Error::OutsideChart {
            chart: self.chart,
            coords: p.x,
        })
    }

    /// Trial step from `s0` to `s1` (both inside the current chart): the new
    /// `U` and, for step doubling, the difference between one full step and
    /// two half steps.
    fn attempt(&self, seg: &Segment, s0: f64, s1: f64, m0: &Matrix) -> Result<(Matrix, f64)> {
        let h = s1 - s0;
        let mh = self.rate(seg, s0 + 0.5 * h)?;
        let m1 = self.rate(seg, s1)?;
        let full = Self::rk4(&self.u, h, m0, &mh, &m1);
        if self.cfg.method == Method::Rk4Fixed {
            return Ok((full, 0.0));
        }
        let mq1 = self.rate(seg, s0 + 0.25 * h)?;
        let mq3 = self.rate(seg, s0 + 0.75 * h)?;
        let half = Self::rk4(&self.u, 0.5 * h, m0, &mq1, &mh);
        let half = Self::rk4(&half, 0.5 * h, &mh, &mq3, &m1);
        let err = (&half - &full).norm();
        Ok((half, err))
    }

    /// Last parameter in `[s_in, s_out]` whose point is inside the current
    /// chart, given that `s_in` is inside and `s_out` is not.
    fn exit_parameter(&self, seg: &Segment, mut s_in: f64, mut s_out: f64) -> Result<f64> {
        while s_out - s_in > EXIT_PRECISION {
            let mid = 0.5 * (s_in + s_out);
            if mid <= s_in || mid >= s_out {
                break;
            }
            if self.inside_at(seg, mid)? {
                s_in = mid;
            } else {
                s_out = mid;
            }
        }
        Ok(s_in)
    }

    /// Switches to a neighbouring chart that contains the path at `s` and a
    /// little beyond, multiplying `U` by the inverse transition gauge.
    fn switch_chart(&mut self, seg: &Segment, s: f64, ahead: f64) -> Result<()> {
        let atlas = self.conn.atlas();
        let (x_c, _) = self.jet_in(seg, self.chart, s)?;
        let here = ChartPoint::new(self.chart, x_c.clone());
        for t in atlas.transitions_from(self.chart) {
            let d = t.to;
            if d != seg.chart && atlas.transition(seg.chart, d).is_err() {
                continue;
            }
            let box_d = atlas.chart(d)?;
            let fits = |s: f64| -> bool {
                self.jet_in(seg, d, s)
                    .map(|(y, _)| box_d.contains(&y))
                    .unwrap_or(false)
            };
            if fits(s) && fits(ahead) && fits(0.5 * (s + ahead)) {
                let m = self.conn.change_of_trivialization(&here, d)?;
                self.u = m * &self.u;
                self.chart = d;
                return Ok(());
            }
        }
        Err(Error::OutsideChart {
            chart: self.chart,
            coords: x_c,
        })
    }

    fn integrate_segment(&mut self, seg: &Segment, b: (f64, f64)) -> Result<()> {
        let fixed_h = 1.0 / (1.0 / self.cfg.h - 1e-9).ceil();
        let mut h = self.cfg.h;
        let mut s = 0.0;
        // Next node of the fixed grid.
        let mut node = 1usize;
        let mut stalled = 0;
        let mut m0 = self.rate(seg, 0.0)?;
        while s < 1.0 {
            let target = match self.cfg.method {
                Method::Rk4Fixed => (node as f64 * fixed_h).min(1.0),
                Method::Rk4Doubling => (s + h).min(1.0),
            };
            let mid = 0.5 * (s + target);
            let out = if !self.inside_at(seg, mid)? {
                Some(mid)
            } else if !self.inside_at(seg, target)? {
                Some(target)
            } else {
                None
            };
            if let Some(s_out) = out {
                let s_in = self.exit_parameter(seg, s, s_out)?;
                if s_in > s {
                    let (u, err) = self.attempt(seg, s, s_in, &m0)?;
                    self.u = u;
                    self.est_error += err / 15.0;
                    self.steps += 1;
                    stalled = 0;
                } else {
                    stalled += 1;
                    if stalled > 2 {
                        let (x, _) = self.jet_in(seg, self.chart, s)?;
                        return Err(Error::OutsideChart {
                            chart: self.chart,
                            coords: x,
                        });
                    }
                }
                s = s_in;
                self.switch_chart(seg, s, target)?;
                m0 = self.rate(seg, s)?;
                continue;
            }
            stalled = 0;
            let (u, err) = self.attempt(seg, s, target, &m0)?;
            if self.cfg.method == Method::Rk4Doubling {
                if err > self.cfg.tol {
                    h *= 0.5;
                    if h < MIN_STEP {
                        return Err(Error::StepUnderflow {
                            t: b.0 + s * (b.1 - b.0),
                            tol: self.cfg.tol,
                        });
                    }
                    continue;
                }
                self.est_error += err / 15.0;
                if err < self.cfg.tol / 32.0 {
                    h = (2.0 * h).min(0.1);
                }
            } else {
                node += 1;
            }
            self.u = u;
            s = target;
            self.steps += 1;
            if self.steps.is_multiple_of(self.cfg.project_every) {
                self.project()?;
            }
            let p = self.probe(seg, s, true)?;
            m0 = p.rate.ok_or_else(|| Error::OutsideChart {
                chart: self.chart,
                coords: p.x.clone(),
            })?;
            self.record_sample(b, s, p.x)?;
        }
        Ok(())
    }
}

fn run(
    conn: &ConnectionForm,
    path: &PathSpec,
    u0: Matrix,
    cfg: &SolverConfig,
    record: bool,
) -> Result<Outcome> {
    let k = conn.group().k();
    if u0.nrows() != k || u0.ncols() != k {
        return Err(Error::InvalidArgument(format!(
            "initial fiber point must be {k}×{k}"
        )));
    }
    if path.dim() != conn.dim() {
        return Err(Error::InvalidArgument(format!(
            "path of dimension {} on a base of dimension {}",
            path.dim(),
            conn.dim()
        )));
    }
    let start = path.start()?;
    conn.atlas().check_inside(&start)?;
    let mut it = Integrator {
        conn,
        cfg: *cfg,
        record,
        chart: start.chart,
        u: u0,
        steps: 0,
        est_error: 0.0,
        samples: Vec::new(),
    };
    let breaks = path.breaks();
    for (i, seg) in path.segments().iter().enumerate() {
        let b = (breaks[i], breaks[i + 1]);
        let x0 = seg.start()?;
        if it.chart != seg.chart {
            if conn.atlas().contains(&x0) {
                // Explicit chart change at a breakpoint: the previous
                // segment's end, expressed in the current chart, is the
                // switch point.
                let prev = &path.segments()[i - 1];
                let (x, _) = it.jet_in(prev, it.chart, 1.0)?;
                let m = conn.change_of_trivialization(&ChartPoint::new(it.chart, x), seg.chart)?;
                it.u = m * &it.u;
                it.chart = seg.chart;
            } else if !it.inside_at(seg, 0.0)? {
                // The segment starts outside its own chart; it can only be
                // followed from the chart the integrator is already in.
                conn.atlas().check_inside(&x0)?;
            }
        } else {
            conn.atlas().check_inside(&x0)?;
        }
        if i == 0 {
            it.record_sample(b, 0.0, x0.coords)?;
        }
        it.integrate_segment(seg, b)?;
    }
    it.project()?;
    let last = path.segments().last().expect("non-empty");
    let (x_end, _) = it.jet_in(last, it.chart, 1.0)?;
    Ok(Outcome {
        end: ChartPoint::new(it.chart, x_end),
        u: it.u,
        steps: it.steps,
        est_error: it.est_error,
        samples: it.samples,
    })
}

/// Parallel transport along `path`.
pub fn transport(conn: &ConnectionForm, path: &PathSpec, cfg: &SolverConfig) -> Result<TransportResult> {
    let k = conn.group().k();
    transport_from(conn, path, &Matrix::identity(k, k), cfg)
}

/// Integrates the transport equation starting from `u0` instead of `I`.
pub fn transport_from(
    conn: &ConnectionForm,
    path: &PathSpec,
    u0: &Matrix,
    cfg: &SolverConfig,
) -> Result<TransportResult> {
    let out = run(conn, path, u0.clone(), cfg, false)?;
    Ok(TransportResult {
        start: path.start()?,
        end: out.end,
        g: GroupElement::new(out.u, conn.group())?,
        step_count: out.steps,
        est_error: out.est_error,
    })
}

/// Horizontal lift of `path` through `p`, sampled at every integrator step.
pub fn lift_path(
    conn: &ConnectionForm,
    path: &PathSpec,
    p: &GroupElement,
    cfg: &SolverConfig,
) -> Result<LiftedPath> {
    let mut out = run(conn, path, p.matrix().clone(), cfg, true)?;
    // The first sample is the starting fiber point itself.
    if let Some(first) = out.samples.first_mut() {
        first.u = p.clone();
    }
    if let Some(last) = out.samples.last_mut() {
        last.u = GroupElement::new(out.u, conn.group())?;
    }
    Ok(LiftedPath {
        base: path.clone(),
        start_fiber_point: p.clone(),
        samples: out.samples,
    })
}

/// `‖P(γ⁻¹) P(γ) − I‖_F`, with the fiber coordinates brought back to the
/// start trivialization when the path ends in another chart.
pub fn inverse_path_check(conn: &ConnectionForm, path: &PathSpec, cfg: &SolverConfig) -> Result<f64> {
    let forward = transport(conn, path, cfg)?;
    let back = transport(conn, &path.reverse(), cfg)?;
    let k = conn.group().k();
    let bridge = conn.change_of_trivialization(&forward.end, back.start.chart)?;
    let total = back.g.matrix() * bridge * forward.g.matrix();
    let close = conn.change_of_trivialization(&back.end, forward.start.chart)?;
    Ok((close * total - Matrix::identity(k, k)).norm())
}
