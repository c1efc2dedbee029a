//! Numerical parallel transport on trivialized principal bundles.
//!
//! The crate computes parallel transport from a local connection form by
//! integrating the transport equation, and goes the other way as well: given
//! any transport oracle, it rebuilds lifted velocities, horizontal spaces and
//! connection coefficients. A holonomy toolkit ties both directions to
//! curvature and flatness.

// Negated comparisons are how NaN inputs get rejected alongside bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chart;
pub mod connection;
pub mod error;
pub mod expr;
pub mod group;
pub mod holonomy;
pub mod path;
pub mod reconstruct;
pub mod transport;

pub use chart::{Atlas, ChartDomain, ChartId, ChartPoint, CoordinateTransition, TangentVector};
pub use connection::{ConnectionForm, CurvatureValue};
pub use error::{Error, ExprError, Result};
pub use expr::{Dual, Expr, MatrixExpr};
pub use group::{AlgebraElement, GroupElement, Matrix, StructureGroup};
pub use holonomy::{HomotopyFamily, Verdict};
pub use path::{PathSpec, Segment};
pub use reconstruct::{HorizontalBasis, LiftedVector};
pub use transport::{SolverConfig, TransportOracle, TransportResult};
