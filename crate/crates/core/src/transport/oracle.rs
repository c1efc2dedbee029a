//! Transport oracles: anything that maps paths to transport results.
//!
//! The reconstruction and holonomy tools only talk to this interface, so the
//! engine's own integrator, external implementations and deliberately
//! broken stubs can all be examined the same way.

use crate::chart::{ChartId, ChartPoint};
use crate::connection::ConnectionForm;
use crate::error::{Error, Result};
use crate::group::{GroupElement, Matrix, StructureGroup};
use crate::path::PathSpec;

use super::{transport, transport_from, SolverConfig, TransportResult};

/// A parallel transport map. Implementations must be callable from several
/// threads at once.
pub trait TransportOracle: Sync {
    fn group(&self) -> StructureGroup;

    fn transport(&self, path: &PathSpec) -> Result<TransportResult>;

    /// Endpoint of the horizontal lift of `path` starting at `p`.
    fn lift_endpoint(&self, path: &PathSpec, p: &GroupElement) -> Result<GroupElement> {
        let r = self.transport(path)?;
        GroupElement::new(r.g.matrix() * p.matrix(), self.group())
    }

    /// The matrix `M` with `u_to = M u_at` for fiber coordinates over `at`.
    fn change_of_trivialization(&self, at: &ChartPoint, to: ChartId) -> Result<Matrix> {
        if at.chart == to {
            let k = self.group().k();
            Ok(Matrix::identity(k, k))
        } else {
            Err(Error::NoTransition { from: at.chart, to })
        }
    }
}

/// The engine's own integrator.
#[derive(Debug, Clone, Copy)]
pub struct EngineOracle<'a> {
    pub conn: &'a ConnectionForm,
    pub cfg: SolverConfig,
}

impl<'a> EngineOracle<'a> {
    pub fn new(conn: &'a ConnectionForm, cfg: SolverConfig) -> Self {
        EngineOracle { conn, cfg }
    }
}

impl TransportOracle for EngineOracle<'_> {
    fn group(&self) -> StructureGroup {
        self.conn.group()
    }

    fn transport(&self, path: &PathSpec) -> Result<TransportResult> {
        transport(self.conn, path, &self.cfg)
    }

    /// Integrates directly from `p`, so right equivariance of the lift is an
    /// observable property rather than an identity.
    fn lift_endpoint(&self, path: &PathSpec, p: &GroupElement) -> Result<GroupElement> {
        Ok(transport_from(self.conn, path, p.matrix(), &self.cfg)?.g)
    }

    fn change_of_trivialization(&self, at: &ChartPoint, to: ChartId) -> Result<Matrix> {
        self.conn.change_of_trivialization(at, to)
    }
}

/// Returns the identity for every path: the transport of the trivial flat
/// structure, whatever the connection.
#[derive(Debug, Clone, Copy)]
pub struct IdentityOracle {
    pub group: StructureGroup,
}

impl TransportOracle for IdentityOracle {
    fn group(&self) -> StructureGroup {
        self.group
    }

    fn transport(&self, path: &PathSpec) -> Result<TransportResult> {
        Ok(TransportResult {
            start: path.start()?,
            end: path.end()?,
            g: self.group.identity(),
            step_count: 0,
            est_error: 0.0,
        })
    }

    fn change_of_trivialization(&self, _at: &ChartPoint, _to: ChartId) -> Result<Matrix> {
        let k = self.group.k();
        Ok(Matrix::identity(k, k))
    }
}

/// A faulty oracle that only integrates the parameter range `[0, keep]` of
/// every path, so its answer depends on how the path is parametrized.
#[derive(Debug, Clone, Copy)]
pub struct TruncatingOracle<'a> {
    pub engine: EngineOracle<'a>,
    pub keep: f64,
}

impl TransportOracle for TruncatingOracle<'_> {
    fn group(&self) -> StructureGroup {
        self.engine.group()
    }

    fn transport(&self, path: &PathSpec) -> Result<TransportResult> {
        let mut r = self.engine.transport(&path.restrict(0.0, self.keep)?)?;
        r.end = path.end()?;
        Ok(r)
    }

    fn change_of_trivialization(&self, at: &ChartPoint, to: ChartId) -> Result<Matrix> {
        self.engine.change_of_trivialization(at, to)
    }
}
