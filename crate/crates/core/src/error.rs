use thiserror::Error;

use crate::chart::ChartId;

/// Errors raised while parsing or evaluating coefficient expressions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("`{func}` takes {expected} argument(s), got {found} (byte {offset})")]
    Arity {
        func: &'static str,
        expected: usize,
        found: usize,
        offset: usize,
    },
    #[error("variable x{index} out of range for dimension {dim}")]
    Dimension { index: usize, dim: usize },
    #[error("expected a point with {expected} coordinates, got {found}")]
    PointDimension { expected: usize, found: usize },
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("matrix is not an element of {group}: {reason}")]
    NotInGroup { group: String, reason: String },
    #[error("matrix is not an element of the Lie algebra of {group}: {reason}")]
    NotInAlgebra { group: String, reason: String },
    #[error("logarithm outside the principal branch: ‖g − I‖_F = {distance:.3e} ≥ 1")]
    OutOfBranch { distance: f64 },
    #[error("singular input: {0}")]
    SingularInput(String),
    #[error("parameter {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("path endpoints do not match (gap {gap:.3e})")]
    EndpointMismatch { gap: f64 },
    #[error("reparametrization is not monotone: {0}")]
    NotMonotone(String),
    #[error("point {coords:?} lies outside chart {chart}")]
    OutsideChart { chart: ChartId, coords: Vec<f64> },
    #[error("unknown chart {0}")]
    UnknownChart(ChartId),
    #[error("no transition from chart {from} to chart {to}")]
    NoTransition { from: ChartId, to: ChartId },
    #[error("gauge map is singular: {0}")]
    SingularGauge(String),
    #[error("step size underflow at t = {t}: cannot meet tolerance {tol:e}")]
    StepUnderflow { t: f64, tol: f64 },
    #[error("transport oracle failed: {0}")]
    OracleFailure(String),
    #[error("paths do not share the initial velocity (deviation {deviation:.3e})")]
    VelocityMismatch { deviation: f64 },
    #[error("horizontal basis is ill conditioned (condition number {condition:.3e})")]
    IllConditionedBasis { condition: f64 },
    #[error("loop is not closed (gap {gap:.3e})")]
    NotClosed { gap: f64 },
    #[error("incompatible transition {from} -> {to}: {reason}")]
    IncompatibleTransition {
        from: ChartId,
        to: ChartId,
        reason: String,
    },
    #[error("unknown builtin connection `{0}`")]
    UnknownBuiltin(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
