//! Task execution.

use std::fmt::Write as _;
use std::path::PathBuf;

use holonome_core::chart::{ChartDomain, ChartId, ChartPoint};
use holonome_core::connection::curvature_at;
use holonome_core::holonomy::{
    angle_distance, flatness_verdict, holonomy, homotopy_scan, shrinking_loop_curvature, Verdict,
};
use holonome_core::reconstruct::{
    default_grid, max_coefficient_error, reconstruct_connection, roundtrip_report,
};
use holonome_core::transport::{lift_path, transport, verify_axioms, AxiomSuite, EngineOracle, LiftedPath};
use holonome_core::{ConnectionForm, Expr, GroupElement, Matrix, PathSpec};
use serde_json::{json, Map, Value};
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

use crate::report::{group_json, matrix_json, point_json, Report, Status, TaskEntry, REPORT_SCHEMA};
use crate::scenario::{GridDef, MatrixExpectation, Scenario, TaskDef, VerdictName};

/// Points per axis of the grid used when a reconstruction task names none.
pub const DEFAULT_GRID_POINTS: usize = 5;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Directory for `report.json` and CSV files; nothing is written when
    /// absent.
    pub out_dir: Option<PathBuf>,
    pub trace_csv: bool,
    /// Fixed timestamp, for reproducible output in tests.
    pub timestamp: Option<String>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: Report,
    pub exit_code: i32,
}

/// A file produced by a task, written once the task has finished.
struct Artifact {
    name: String,
    contents: String,
}

struct TaskOutput {
    result: Value,
    /// `None` when the task declares nothing to check.
    pass: Option<bool>,
    artifacts: Vec<Artifact>,
}

impl TaskOutput {
    fn new(result: Value, pass: Option<bool>) -> Self {
        TaskOutput {
            result,
            pass,
            artifacts: Vec::new(),
        }
    }
}

type TaskResult = Result<TaskOutput, String>;

/// Runs every task in order and writes the report. Task failures are
/// recorded in the report; only I/O problems with the output directory are
/// returned as errors.
pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> std::io::Result<RunOutcome> {
    if let Some(dir) = &opts.out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut entries = Vec::with_capacity(scenario.tasks().len());
    for (index, task) in scenario.tasks().iter().enumerate() {
        let inputs = task_inputs(scenario, task);
        let (result, status, error, artifacts) = match run_task(scenario, index, task, opts) {
            Ok(out) => {
                let status = match out.pass {
                    None => Status::Ok,
                    Some(true) => Status::Pass,
                    Some(false) => Status::Fail,
                };
                (out.result, status, None, out.artifacts)
            }
            Err(e) => (Value::Null, Status::Error, Some(e), Vec::new()),
        };
        let mut files = Vec::new();
        if let Some(dir) = &opts.out_dir {
            for a in artifacts {
                std::fs::write(dir.join(&a.name), a.contents)?;
                files.push(a.name);
            }
        }
        entries.push(TaskEntry {
            index,
            kind: task.kind().to_string(),
            inputs,
            result,
            status,
            error,
            files,
        });
    }
    let timestamp = opts.timestamp.clone().unwrap_or_else(|| {
        OffsetDateTime::now_utc()
            .format(&Rfc3339)
            .unwrap_or_else(|_| "unknown".into())
    });
    let report = Report {
        schema: REPORT_SCHEMA,
        scenario: scenario.name().map(str::to_string),
        timestamp,
        connection: serde_json::to_value(&scenario.file.connection).unwrap_or(Value::Null),
        solver: solver_json(scenario),
        tasks: entries,
    };
    if let Some(dir) = &opts.out_dir {
        std::fs::write(dir.join("report.json"), report.to_json())?;
    }
    let exit_code = report.exit_code();
    Ok(RunOutcome { report, exit_code })
}

fn solver_json(s: &Scenario) -> Value {
    json!({
        "method": s.solver.method.name(),
        "h": s.solver.h,
        "project_every": s.solver.project_every,
        "tol": s.solver.tol,
    })
}

/// Every numeric parameter that affects the task's result.
fn task_inputs(scenario: &Scenario, task: &TaskDef) -> Map<String, Value> {
    let mut inputs = match serde_json::to_value(task) {
        Ok(Value::Object(m)) => m,
        _ => Map::new(),
    };
    inputs.remove("kind");
    inputs.insert("solver".into(), solver_json(scenario));
    match task {
        TaskDef::Reconstruct { grid: None, .. } | TaskDef::Roundtrip { grid: None, .. } => {
            inputs.insert("grid".into(), json!({ "default_points_per_axis": DEFAULT_GRID_POINTS }));
        }
        TaskDef::HomotopyScan { family, .. } => {
            if let Some(f) = scenario.families.get(family) {
                inputs.insert("s_samples".into(), json!(f.s_samples));
            }
        }
        TaskDef::FlatnessVerdict { .. } => {
            inputs.insert("threshold".into(), json!(holonome_core::holonomy::FLATNESS_THRESHOLD));
            inputs.insert("grid_points".into(), json!(holonome_core::holonomy::VERDICT_GRID));
            inputs.insert("s_samples".into(), json!(holonome_core::holonomy::DEFAULT_S_SAMPLES));
        }
        _ => {}
    }
    inputs
}

fn run_task(s: &Scenario, index: usize, task: &TaskDef, opts: &RunOptions) -> TaskResult {
    let conn = &s.connection;
    match task {
        TaskDef::Transport { path, expect } => {
            let p = s.path(path).map_err(|e| e.to_string())?;
            let r = transport(conn, p, &s.solver).map_err(|e| e.to_string())?;
            let mut result = json!({
                "start": point_json(&r.start),
                "end": point_json(&r.end),
                "g": group_json(&r.g),
                "step_count": r.step_count,
                "est_error": r.est_error,
            });
            let pass = check_matrix(expect.as_ref(), &r.g, &mut result);
            let mut out = TaskOutput::new(result, pass);
            trace(s, index, path, p, opts, &mut out)?;
            Ok(out)
        }
        TaskDef::Holonomy { path, expect } => {
            let p = s.path(path).map_err(|e| e.to_string())?;
            let h = holonomy(conn, p, &s.solver).map_err(|e| e.to_string())?;
            let mut result = json!({
                "basepoint": point_json(&h.transport.start),
                "g": group_json(&h.g),
                "angle": h.angle,
                "step_count": h.transport.step_count,
                "est_error": h.transport.est_error,
            });
            let pass = check_matrix(expect.as_ref(), &h.g, &mut result);
            let mut out = TaskOutput::new(result, pass);
            trace(s, index, path, p, opts, &mut out)?;
            Ok(out)
        }
        TaskDef::VerifyAxioms {
            tol,
            canned,
            constants,
            reparametrizations,
            juxtapositions,
        } => {
            let mut suite = if *canned {
                AxiomSuite::canned(conn.atlas()).map_err(|e| e.to_string())?
            } else {
                AxiomSuite::new(conn.atlas().clone())
            };
            suite.constants.extend(constants.iter().map(|c| c.point()));
            for r in reparametrizations {
                let alpha = Expr::parse(&r.alpha, 1).map_err(|e| e.to_string())?;
                suite.reparametrizations.push((s.path(&r.path).map_err(|e| e.to_string())?.clone(), alpha));
            }
            for (a, b) in juxtapositions {
                let a = s.path(a).map_err(|e| e.to_string())?.clone();
                let b = s.path(b).map_err(|e| e.to_string())?.clone();
                suite.juxtapositions.push((a, b));
            }
            let oracle = EngineOracle::new(conn, s.solver);
            let r = verify_axioms(&oracle, &suite, *tol);
            let result = json!({
                "constant_deviation": r.constant_deviation,
                "reparametrization_deviation": r.reparametrization_deviation,
                "juxtaposition_deviation": r.juxtaposition_deviation,
                "checks": r.checks,
                "failures": r.failures,
                "notes": r.notes,
            });
            Ok(TaskOutput::new(result, Some(r.pass)))
        }
        TaskDef::Reconstruct { h, grid, expect } => {
            let points = grid_points(conn, grid.as_ref())?;
            let oracle = EngineOracle::new(conn, s.solver);
            let table = reconstruct_connection(&oracle, &points, *h).map_err(|e| e.to_string())?;
            let err = max_coefficient_error(conn, &table).map_err(|e| e.to_string())?;
            let dropped: Vec<Value> = table
                .dropped
                .iter()
                .map(|(p, why)| json!({ "point": point_json(p), "reason": why }))
                .collect();
            let result = json!({
                "grid_points": points.len(),
                "reconstructed": table.entries.len(),
                "dropped": dropped,
                "max_error": err,
            });
            let pass = expect.as_ref().map(|e| err <= e.tol);
            let mut out = TaskOutput::new(result, pass);
            out.artifacts.push(Artifact {
                name: format!("reconstruction-{index}.csv"),
                contents: table.to_csv(),
            });
            Ok(out)
        }
        TaskDef::Roundtrip { hs, grid } => {
            let points = grid_points(conn, grid.as_ref())?;
            let r = roundtrip_report(conn, &s.solver, &points, hs).map_err(|e| e.to_string())?;
            let result = json!({
                "errors": r.errors,
                "order": r.order,
                "degenerate": r.degenerate,
                "grid_points": r.grid_points,
                "dropped": r.dropped,
                "min_order": holonome_core::reconstruct::MIN_ORDER,
                "max_error": holonome_core::reconstruct::MAX_ERROR,
            });
            Ok(TaskOutput::new(result, Some(r.pass)))
        }
        TaskDef::ShrinkingCurvature { at, mu, nu, eps, expect } => {
            let x = at.point();
            let oracle = EngineOracle::new(conn, s.solver);
            let est = shrinking_loop_curvature(&oracle, &x, mu - 1, nu - 1, eps).map_err(|e| e.to_string())?;
            let exact = curvature_at(conn, &x).map_err(|e| e.to_string())?.component(mu - 1, nu - 1);
            let err = (&est.extrapolated - &exact).norm();
            let result = json!({
                "estimates": est.estimates.iter().map(matrix_json).collect::<Vec<_>>(),
                "extrapolated": matrix_json(&est.extrapolated),
                "exact": matrix_json(&exact),
                "error": err,
                "order": est.order,
            });
            let pass = expect.as_ref().map(|e| err <= e.tol);
            Ok(TaskOutput::new(result, pass))
        }
        TaskDef::HomotopyScan { family, expect } => {
            let fam = s
                .families
                .get(family)
                .ok_or_else(|| format!("undeclared family `{family}`"))?;
            let oracle = EngineOracle::new(conn, s.solver);
            let scan = homotopy_scan(&oracle, fam).map_err(|e| e.to_string())?;
            let result = json!({
                "s_values": scan.s_values,
                "transports": scan.transports.iter().map(matrix_json).collect::<Vec<_>>(),
                "spread": scan.spread,
            });
            let pass = expect.as_ref().map(|e| {
                e.max_spread.is_none_or(|m| scan.spread <= m) && e.min_spread.is_none_or(|m| scan.spread >= m)
            });
            let mut out = TaskOutput::new(result, pass);
            if opts.trace_csv {
                out.artifacts.push(Artifact {
                    name: format!("homotopy-{index}-{family}.csv"),
                    contents: scan_csv(&scan.s_values, &scan.transports),
                });
            }
            Ok(out)
        }
        TaskDef::FlatnessVerdict { expect } => {
            let v = flatness_verdict(conn, &s.solver).map_err(|e| e.to_string())?;
            let spreads: Map<String, Value> = v.spreads.iter().map(|(n, s)| (n.clone(), json!(s))).collect();
            let result = json!({
                "verdict": v.verdict.to_string(),
                "curvature_max_norm": v.curvature.max_norm,
                "curvature_argmax": v.curvature.argmax.as_ref().map(point_json),
                "curvature_points_checked": v.curvature.points_checked,
                "curvature_points_skipped": v.curvature.points_skipped,
                "spreads": spreads,
                "max_spread": v.max_spread(),
            });
            // An inconsistent verdict is always a failure.
            let pass = match expect {
                _ if v.verdict == Verdict::Inconsistent => Some(false),
                Some(want) => Some(verdict_name(v.verdict) == *want),
                None => None,
            };
            Ok(TaskOutput::new(result, pass))
        }
    }
}

fn verdict_name(v: Verdict) -> VerdictName {
    match v {
        Verdict::Flat => VerdictName::Flat,
        Verdict::Curved => VerdictName::Curved,
        Verdict::Inconsistent => VerdictName::Inconsistent,
    }
}

/// Compares against an expected matrix and/or angle, recording deviations
/// in `result`.
fn check_matrix(expect: Option<&MatrixExpectation>, g: &GroupElement, result: &mut Value) -> Option<bool> {
    let e = expect?;
    let mut pass = true;
    if let Some(m) = &e.matrix {
        let k = g.matrix().nrows();
        let want = Matrix::from_fn(k, k, |i, j| m[i][j]);
        let dev = (g.matrix() - want).norm();
        result["matrix_deviation"] = json!(dev);
        pass &= dev <= e.tol;
    }
    if let Some(a) = e.angle {
        match g.rotation_angle() {
            Some(got) => {
                let dev = angle_distance(got, a);
                result["angle_deviation"] = json!(dev);
                pass &= dev <= e.tol;
            }
            None => {
                result["angle_deviation"] = Value::Null;
                pass = false;
            }
        }
    }
    Some(pass)
}

fn grid_points(conn: &ConnectionForm, grid: Option<&GridDef>) -> Result<Vec<ChartPoint>, String> {
    let Some(g) = grid else {
        return Ok(default_grid(conn, DEFAULT_GRID_POINTS));
    };
    let chart: &ChartDomain = conn.atlas().chart(ChartId(g.chart)).map_err(|e| e.to_string())?;
    let n = g.lo.len();
    let mut points = Vec::new();
    for mut idx in 0..g.n.pow(n as u32) {
        let x: Vec<f64> = (0..n)
            .map(|a| {
                let i = idx % g.n;
                idx /= g.n;
                if g.n > 1 {
                    g.lo[a] + (g.hi[a] - g.lo[a]) * i as f64 / (g.n - 1) as f64
                } else {
                    0.5 * (g.lo[a] + g.hi[a])
                }
            })
            .collect();
        if chart.contains(&x) {
            points.push(ChartPoint::new(chart.id, x));
        }
    }
    Ok(points)
}

fn trace(s: &Scenario, index: usize, name: &str, path: &PathSpec, opts: &RunOptions, out: &mut TaskOutput) -> Result<(), String> {
    if !opts.trace_csv {
        return Ok(());
    }
    let p = s.connection.group().identity();
    let lift = lift_path(&s.connection, path, &p, &s.solver).map_err(|e| e.to_string())?;
    out.artifacts.push(Artifact {
        name: format!("trace-{index}-{name}.csv"),
        contents: trace_csv(&lift),
    });
    Ok(())
}

/// `t,chart,x1..xn,U[0][0],...` with `U` row-major.
pub fn trace_csv(lift: &LiftedPath) -> String {
    let n = lift.base.dim();
    let k = lift.start_fiber_point.matrix().nrows();
    let mut out = String::from("t,chart");
    for c in 1..=n {
        let _ = write!(out, ",x{c}");
    }
    for i in 0..k {
        for j in 0..k {
            let _ = write!(out, ",U[{i}][{j}]");
        }
    }
    out.push('\n');
    for s in &lift.samples {
        let _ = write!(out, "{},{}", s.t, s.point.chart);
        for x in &s.point.coords {
            let _ = write!(out, ",{x}");
        }
        write_matrix(&mut out, s.u.matrix());
        out.push('\n');
    }
    out
}

fn scan_csv(s_values: &[f64], transports: &[Matrix]) -> String {
    let k = transports.first().map_or(0, |m| m.nrows());
    let mut out = String::from("s");
    for i in 0..k {
        for j in 0..k {
            let _ = write!(out, ",U[{i}][{j}]");
        }
    }
    out.push('\n');
    for (s, m) in s_values.iter().zip(transports) {
        let _ = write!(out, "{s}");
        write_matrix(&mut out, m);
        out.push('\n');
    }
    out
}

fn write_matrix(out: &mut String, m: &Matrix) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let _ = write!(out, ",{}", m[(i, j)]);
        }
    }
}
