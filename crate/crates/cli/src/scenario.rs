//! Scenario files, schema version 1.
//!
//! A scenario names a connection (builtin or inline), a solver
//! configuration, named paths and homotopy families, and an ordered task
//! list. Loading is two-phase: the JSON is deserialized into the raw schema
//! types (errors carry a path into the document), then every reference is
//! resolved and the connection is built, so a scenario that loads is ready
//! to run.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use holonome_core::chart::{Atlas, ChartDomain, ChartId, ChartPoint, CoordinateTransition};
use holonome_core::connection::{builtin, CoefficientField, ExprCoefficients, GaugeField};
use holonome_core::holonomy::HomotopyFamily;
use holonome_core::path::{PathSpec, Segment};
use holonome_core::transport::{Method, SolverConfig};
use holonome_core::{ConnectionForm, Expr, MatrixExpr, StructureGroup};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl ToString) -> ScenarioError {
    ScenarioError::Validation {
        field: field.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub connection: ConnectionSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub paths: BTreeMap<String, PathDef>,
    #[serde(default)]
    pub families: BTreeMap<String, FamilyDef>,
    #[serde(default)]
    pub tasks: Vec<TaskDef>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ConnectionSpec {
    Builtin(String),
    Inline(InlineConnection),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineConnection {
    pub group: String,
    pub charts: Vec<ChartDef>,
    #[serde(default)]
    pub transitions: Vec<TransitionDef>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartDef {
    pub id: u32,
    pub domain: DomainDef,
    /// `coefficients[μ][i][j]`, expressions in `x1..xn`.
    pub coefficients: Vec<Vec<Vec<String>>>,
}

/// Box bounds; `null` marks an unbounded side.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainDef {
    pub lo: Vec<Option<f64>>,
    pub hi: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionDef {
    pub from: u32,
    pub to: u32,
    pub map: Vec<String>,
    pub gauge: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_method")]
    pub method: MethodName,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_project_every")]
    pub project_every: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MethodName {
    #[serde(rename = "rk4-fixed")]
    Rk4Fixed,
    #[serde(rename = "rk4-doubling")]
    Rk4Doubling,
}

fn default_method() -> MethodName {
    MethodName::Rk4Fixed
}
fn default_h() -> f64 {
    1e-3
}
fn default_project_every() -> usize {
    1
}
fn default_tol() -> f64 {
    1e-10
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            method: default_method(),
            h: default_h(),
            project_every: default_project_every(),
            tol: default_tol(),
        }
    }
}

impl SolverSpec {
    pub fn config(&self) -> Result<SolverConfig, ScenarioError> {
        let method = match self.method {
            MethodName::Rk4Fixed => Method::Rk4Fixed,
            MethodName::Rk4Doubling => Method::Rk4Doubling,
        };
        SolverConfig::new(method, self.h, self.project_every, self.tol).map_err(|e| invalid("solver", e))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentDef {
    pub chart: u32,
    pub coords: Vec<String>,
    #[serde(default)]
    pub u0: f64,
    #[serde(default = "one")]
    pub u1: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathDef {
    Segments {
        segments: Vec<SegmentDef>,
    },
    Line {
        chart: u32,
        from: Vec<f64>,
        to: Vec<f64>,
    },
    Polygon {
        chart: u32,
        vertices: Vec<Vec<f64>>,
        #[serde(default)]
        closed: bool,
    },
    Circle {
        chart: u32,
        center: Vec<f64>,
        radius: f64,
    },
    Arc {
        chart: u32,
        center: Vec<f64>,
        radius: f64,
        theta0: f64,
        theta1: f64,
    },
    Constant {
        chart: u32,
        at: Vec<f64>,
    },
    Juxtapose {
        paths: Vec<String>,
    },
    Reverse {
        path: String,
    },
    Reparametrize {
        path: String,
        alpha: String,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyDef {
    pub chart: u32,
    /// Expressions in `x1 = t` and `x2 = s`.
    pub coords: Vec<String>,
    #[serde(default = "default_s_samples")]
    pub s_samples: usize,
}

fn default_s_samples() -> usize {
    holonome_core::holonomy::DEFAULT_S_SAMPLES
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointDef {
    pub chart: u32,
    pub coords: Vec<f64>,
}

impl PointDef {
    pub fn point(&self) -> ChartPoint {
        ChartPoint::new(ChartId(self.chart), self.coords.clone())
    }
}

/// Uniform grid `m × … × m` over the box `[lo, hi]` in one chart.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDef {
    #[serde(default)]
    pub chart: u32,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixExpectation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    /// Rotation angle, compared modulo 2π.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
    #[serde(default = "default_expect_tol")]
    pub tol: f64,
}

fn default_expect_tol() -> f64 {
    1e-7
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpreadExpectation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_spread: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_spread: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceExpectation {
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VerdictName {
    Flat,
    Curved,
    Inconsistent,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReparametrizationDef {
    pub path: String,
    pub alpha: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskDef {
    Transport {
        path: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect: Option<MatrixExpectation>,
    },
    Holonomy {
        path: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect: Option<MatrixExpectation>,
    },
    VerifyAxioms {
        #[serde(default = "default_axiom_tol")]
        tol: f64,
        /// Include the standard suite around the first chart's center.
        #[serde(default = "yes")]
        canned: bool,
        #[serde(default)]
        constants: Vec<PointDef>,
        #[serde(default)]
        reparametrizations: Vec<ReparametrizationDef>,
        #[serde(default)]
        juxtapositions: Vec<(String, String)>,
    },
    Reconstruct {
        #[serde(default = "default_reconstruct_h")]
        h: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid: Option<GridDef>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect: Option<ToleranceExpectation>,
    },
    Roundtrip {
        #[serde(default = "default_hs")]
        hs: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid: Option<GridDef>,
    },
    ShrinkingCurvature {
        at: PointDef,
        /// One-based coordinate directions, like `x1..xn`.
        mu: usize,
        nu: usize,
        #[serde(default = "default_eps")]
        eps: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect: Option<ToleranceExpectation>,
    },
    HomotopyScan {
        family: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect: Option<SpreadExpectation>,
    },
    FlatnessVerdict {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect: Option<VerdictName>,
    },
}

fn default_axiom_tol() -> f64 {
    1e-7
}
fn yes() -> bool {
    true
}
fn default_reconstruct_h() -> f64 {
    1e-3
}
fn default_hs() -> Vec<f64> {
    vec![1e-2, 5e-3, 2.5e-3]
}
fn default_eps() -> Vec<f64> {
    vec![0.2, 0.1, 0.05]
}

impl TaskDef {
    pub fn kind(&self) -> &'static str {
        match self {
            TaskDef::Transport { .. } => "transport",
            TaskDef::Holonomy { .. } => "holonomy",
            TaskDef::VerifyAxioms { .. } => "verify_axioms",
            TaskDef::Reconstruct { .. } => "reconstruct",
            TaskDef::Roundtrip { .. } => "roundtrip",
            TaskDef::ShrinkingCurvature { .. } => "shrinking_curvature",
            TaskDef::HomotopyScan { .. } => "homotopy_scan",
            TaskDef::FlatnessVerdict { .. } => "flatness_verdict",
        }
    }
}

/// A validated scenario with every name resolved.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub connection: ConnectionForm,
    pub solver: SolverConfig,
    pub paths: BTreeMap<String, PathSpec>,
    pub families: BTreeMap<String, HomotopyFamily>,
}

impl Scenario {
    pub fn name(&self) -> Option<&str> {
        self.file.name.as_deref()
    }

    pub fn tasks(&self) -> &[TaskDef] {
        &self.file.tasks
    }

    pub fn path(&self, name: &str) -> Result<&PathSpec, ScenarioError> {
        self.paths
            .get(name)
            .ok_or_else(|| invalid("paths", format!("undeclared path `{name}`")))
    }

    /// Replaces the solver step and tolerance, as the CLI flags do.
    pub fn override_solver(&mut self, h: Option<f64>, tol: Option<f64>) -> Result<(), ScenarioError> {
        if let Some(h) = h {
            self.file.solver.h = h;
        }
        if let Some(tol) = tol {
            self.file.solver.tol = tol;
        }
        self.solver = self.file.solver.config()?;
        Ok(())
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}

/// Parses and validates scenario JSON.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| ScenarioError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    validate(file)
}

/// Resolves a deserialized scenario.
pub fn validate(file: ScenarioFile) -> Result<Scenario, ScenarioError> {
    if file.version != SCHEMA_VERSION {
        return Err(invalid(
            "version",
            format!("unsupported schema version {} (expected {SCHEMA_VERSION})", file.version),
        ));
    }
    let solver = file.solver.config()?;
    let connection = build_connection(&file.connection)?;
    let paths = resolve_paths(&file.paths, connection.atlas())?;
    let families = file
        .families
        .iter()
        .map(|(name, f)| {
            let field = format!("families.{name}");
            if f.coords.len() != connection.dim() {
                return Err(invalid(
                    field,
                    format!("expected {} coordinates, got {}", connection.dim(), f.coords.len()),
                ));
            }
            connection.atlas().chart(ChartId(f.chart)).map_err(|e| invalid(&field, e))?;
            let fam = HomotopyFamily::parse(ChartId(f.chart), &f.coords, f.s_samples).map_err(|e| invalid(&field, e))?;
            Ok((name.clone(), fam))
        })
        .collect::<Result<BTreeMap<_, _>, _>>()?;
    for (i, task) in file.tasks.iter().enumerate() {
        check_task(i, task, &connection, &paths, &families)?;
    }
    Ok(Scenario {
        file,
        connection,
        solver,
        paths,
        families,
    })
}

fn build_connection(spec: &ConnectionSpec) -> Result<ConnectionForm, ScenarioError> {
    let inline = match spec {
        ConnectionSpec::Builtin(name) => {
            return builtin::builtin(name).map_err(|e| invalid("connection.builtin", e));
        }
        ConnectionSpec::Inline(inline) => inline,
    };
    let group: StructureGroup = inline.group.parse().map_err(|e| invalid("connection.inline.group", e))?;
    if inline.charts.is_empty() {
        return Err(invalid("connection.inline.charts", "at least one chart is required"));
    }
    let mut domains = Vec::new();
    let mut fields: Vec<Arc<dyn CoefficientField>> = Vec::new();
    for (i, c) in inline.charts.iter().enumerate() {
        let field = format!("connection.inline.charts[{i}]");
        if c.domain.lo.len() != c.domain.hi.len() {
            return Err(invalid(format!("{field}.domain"), "lo and hi differ in length"));
        }
        let lo = c.domain.lo.iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect();
        let hi = c.domain.hi.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect();
        domains.push(ChartDomain::new(ChartId(c.id), lo, hi).map_err(|e| invalid(format!("{field}.domain"), e))?);
        if c.coefficients.len() != c.domain.lo.len() {
            return Err(invalid(
                format!("{field}.coefficients"),
                format!("expected one matrix per coordinate ({}), got {}", c.domain.lo.len(), c.coefficients.len()),
            ));
        }
        let coefficients = ExprCoefficients::parse(&c.coefficients).map_err(|e| invalid(format!("{field}.coefficients"), e))?;
        fields.push(Arc::new(coefficients));
    }
    let mut transitions = Vec::new();
    let mut gauges: Vec<Arc<dyn GaugeField>> = Vec::new();
    for (i, t) in inline.transitions.iter().enumerate() {
        let field = format!("connection.inline.transitions[{i}]");
        let dim = domains
            .iter()
            .find(|d| d.id == ChartId(t.from))
            .map(ChartDomain::dim)
            .ok_or_else(|| invalid(&field, format!("unknown chart {}", t.from)))?;
        let map = t
            .map
            .iter()
            .map(|m| Expr::parse(m, dim))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| invalid(format!("{field}.map"), e))?;
        transitions.push(CoordinateTransition {
            from: ChartId(t.from),
            to: ChartId(t.to),
            map,
        });
        let gauge = MatrixExpr::parse(&t.gauge, dim).map_err(|e| invalid(format!("{field}.gauge"), e))?;
        gauges.push(Arc::new(gauge));
    }
    let atlas = Atlas::new(domains, transitions).map_err(|e| invalid("connection.inline", e))?;
    ConnectionForm::new(group, atlas, fields, gauges).map_err(|e| invalid("connection.inline", e))
}

fn resolve_paths(defs: &BTreeMap<String, PathDef>, atlas: &Atlas) -> Result<BTreeMap<String, PathSpec>, ScenarioError> {
    let mut done = BTreeMap::new();
    for name in defs.keys() {
        resolve_path(name, defs, atlas, &mut done, &mut BTreeSet::new())?;
    }
    Ok(done)
}

fn resolve_path(
    name: &str,
    defs: &BTreeMap<String, PathDef>,
    atlas: &Atlas,
    done: &mut BTreeMap<String, PathSpec>,
    visiting: &mut BTreeSet<String>,
) -> Result<PathSpec, ScenarioError> {
    if let Some(p) = done.get(name) {
        return Ok(p.clone());
    }
    let field = format!("paths.{name}");
    let def = defs
        .get(name)
        .ok_or_else(|| invalid(&field, format!("undeclared path `{name}`")))?;
    if !visiting.insert(name.to_string()) {
        return Err(invalid(&field, format!("path `{name}` refers to itself")));
    }
    let mut sub = |other: &str| -> Result<PathSpec, ScenarioError> {
        if !defs.contains_key(other) {
            return Err(invalid(&field, format!("undeclared path `{other}`")));
        }
        resolve_path(other, defs, atlas, done, visiting)
    };
    let bad = |e: holonome_core::Error| invalid(&field, e);
    let check = |chart: u32| atlas.chart(ChartId(chart)).map(|_| ChartId(chart)).map_err(bad);
    let path = match def {
        PathDef::Segments { segments } => {
            let segs = segments
                .iter()
                .map(|s| {
                    let chart = check(s.chart)?;
                    Segment::parse(chart, &s.coords, s.u0, s.u1).map_err(bad)
                })
                .collect::<Result<Vec<_>, _>>()?;
            PathSpec::new_in(segs, atlas).map_err(bad)?
        }
        PathDef::Line { chart, from, to } => PathSpec::line(check(*chart)?, from, to).map_err(bad)?,
        PathDef::Polygon { chart, vertices, closed } => PathSpec::polygon(check(*chart)?, vertices, *closed).map_err(bad)?,
        PathDef::Circle { chart, center, radius } => PathSpec::circle(check(*chart)?, center, *radius).map_err(bad)?,
        PathDef::Arc {
            chart,
            center,
            radius,
            theta0,
            theta1,
        } => PathSpec::arc(check(*chart)?, center, *radius, *theta0, *theta1).map_err(bad)?,
        PathDef::Constant { chart, at } => PathSpec::constant(&ChartPoint::new(check(*chart)?, at.clone())),
        PathDef::Juxtapose { paths } => {
            let mut iter = paths.iter();
            let first = iter
                .next()
                .ok_or_else(|| invalid(&field, "juxtapose needs at least one path"))?;
            let mut acc = sub(first)?;
            for p in iter {
                acc = acc.juxtapose_in(&sub(p)?, atlas).map_err(bad)?;
            }
            acc
        }
        PathDef::Reverse { path } => sub(path)?.reverse(),
        PathDef::Reparametrize { path, alpha } => {
            let alpha = Expr::parse(alpha, 1).map_err(|e| invalid(&field, e))?;
            sub(path)?.reparametrize(&alpha).map_err(bad)?
        }
    };
    if path.dim() != atlas.charts()[0].dim() {
        return Err(invalid(&field, format!("path has dimension {}", path.dim())));
    }
    visiting.remove(name);
    done.insert(name.to_string(), path.clone());
    Ok(path)
}

fn check_task(
    index: usize,
    task: &TaskDef,
    conn: &ConnectionForm,
    paths: &BTreeMap<String, PathSpec>,
    families: &BTreeMap<String, HomotopyFamily>,
) -> Result<(), ScenarioError> {
    let field = format!("tasks[{index}]");
    let need_path = |name: &str| -> Result<(), ScenarioError> {
        if paths.contains_key(name) {
            Ok(())
        } else {
            Err(invalid(&field, format!("undeclared path `{name}`")))
        }
    };
    let check_grid = |grid: &Option<GridDef>| -> Result<(), ScenarioError> {
        if let Some(g) = grid {
            let chart = conn.atlas().chart(ChartId(g.chart)).map_err(|e| invalid(&field, e))?;
            if g.lo.len() != chart.dim() || g.hi.len() != chart.dim() || g.n == 0 {
                return Err(invalid(&field, "grid needs lo/hi of the chart dimension and n ≥ 1"));
            }
        }
        Ok(())
    };
    match task {
        TaskDef::Transport { path, expect } | TaskDef::Holonomy { path, expect } => {
            need_path(path)?;
            if let Some(MatrixExpectation { matrix: Some(m), .. }) = expect {
                let k = conn.group().k();
                if m.len() != k || m.iter().any(|r| r.len() != k) {
                    return Err(invalid(&field, format!("expected matrix must be {k}×{k}")));
                }
            }
        }
        TaskDef::VerifyAxioms {
            reparametrizations,
            juxtapositions,
            constants,
            ..
        } => {
            for r in reparametrizations {
                need_path(&r.path)?;
                Expr::parse(&r.alpha, 1).map_err(|e| invalid(&field, e))?;
            }
            for (a, b) in juxtapositions {
                need_path(a)?;
                need_path(b)?;
            }
            for c in constants {
                conn.atlas().check_inside(&c.point()).map_err(|e| invalid(&field, e))?;
            }
        }
        TaskDef::Reconstruct { grid, .. } | TaskDef::Roundtrip { grid, .. } => check_grid(grid)?,
        TaskDef::ShrinkingCurvature { at, mu, nu, .. } => {
            let n = conn.dim();
            if *mu == 0 || *nu == 0 || *mu > n || *nu > n || mu == nu {
                return Err(invalid(&field, format!("mu and nu must be distinct in 1..={n}")));
            }
            conn.atlas().check_inside(&at.point()).map_err(|e| invalid(&field, e))?;
        }
        TaskDef::HomotopyScan { family, .. } => {
            if !families.contains_key(family) {
                return Err(invalid(&field, format!("undeclared family `{family}`")));
            }
        }
        TaskDef::FlatnessVerdict { .. } => {}
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_scenario_loads() {
        let s = parse_scenario(
            r#"{"version": 1, "connection": {"builtin": "flat-so2"},
                "paths": {"a": {"kind": "line", "chart": 0, "from": [0, 0], "to": [1, 0]}},
                "tasks": [{"kind": "transport", "path": "a"}]}"#,
        )
        .unwrap();
        assert_eq!(s.tasks().len(), 1);
        assert_eq!(s.solver.h, 1e-3);
    }

    #[test]
    fn undeclared_names_are_reported() {
        let e = parse_scenario(
            r#"{"version": 1, "connection": {"builtin": "flat-so2"},
                "tasks": [{"kind": "transport", "path": "gamma9"}]}"#,
        )
        .unwrap_err();
        assert!(matches!(e, ScenarioError::Validation { .. }));
        assert!(e.to_string().contains("gamma9"));
    }

    #[test]
    fn schema_errors_carry_a_path() {
        let e = parse_scenario(
            r#"{"version": 1, "connection": {"builtin": "flat-so2"},
                "tasks": [{"kind": "transport", "path": "a", "bogus": 1}]}"#,
        )
        .unwrap_err();
        match e {
            ScenarioError::Schema { path, .. } => assert!(path.starts_with("tasks[0]"), "{path}"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn self_referencing_paths_are_rejected() {
        let e = parse_scenario(
            r#"{"version": 1, "connection": {"builtin": "flat-so2"},
                "paths": {"a": {"kind": "reverse", "path": "a"}}}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("itself"));
    }

    #[test]
    fn inline_connection_with_unbounded_chart() {
        let s = parse_scenario(
            r#"{"version": 1,
                "connection": {"inline": {"group": "U(1)", "charts": [
                    {"id": 0, "domain": {"lo": [null, -2], "hi": [null, 2]},
                     "coefficients": [[["0", "-0.7"], ["0.7", "0"]], [["0", "0"], ["0", "0"]]]}]}}}"#,
        )
        .unwrap();
        assert_eq!(s.connection.dim(), 2);
    }
}
