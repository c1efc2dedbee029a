//! The `report.json` document and its JSON helpers.

use std::fmt;

use holonome_core::{ChartPoint, GroupElement, Matrix};
use serde::Serialize;
use serde_json::{json, Map, Value};

pub const REPORT_SCHEMA: &str = "holonome-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    /// Completed, nothing to check.
    Ok,
    Pass,
    Fail,
    Error,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Ok => "OK",
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Error => "ERROR",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskEntry {
    pub index: usize,
    pub kind: String,
    pub inputs: Map<String, Value>,
    pub result: Value,
    pub status: Status,
    pub error: Option<String>,
    /// Extra files written for this task, relative to the output directory.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub scenario: Option<String>,
    pub timestamp: String,
    pub connection: Value,
    pub solver: Value,
    pub tasks: Vec<TaskEntry>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report values are plain JSON");
        s.push('\n');
        s
    }

    pub fn exit_code(&self) -> i32 {
        if self.tasks.iter().any(|t| t.status == Status::Error) {
            1
        } else if self.tasks.iter().any(|t| t.status == Status::Fail) {
            2
        } else {
            0
        }
    }
}

/// Row-major nested arrays.
pub fn matrix_json(m: &Matrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| json!(m[(i, j)])).collect()))
            .collect(),
    )
}

pub fn group_json(g: &GroupElement) -> Value {
    json!({
        "matrix": matrix_json(g.matrix()),
        "orthogonality_defect": g.orthogonality_defect(),
        "rotation_angle": g.rotation_angle(),
    })
}

pub fn point_json(p: &ChartPoint) -> Value {
    json!({ "chart": p.chart.0, "coords": p.coords })
}
