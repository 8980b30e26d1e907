//! Compile linear network codes into QLNC circuits.
//!
//! Three schedules are provided: in-order evaluation along a topological
//! order, the constant-depth schedule driven by a vertex coloring and a
//! directed-edge coloring, and the sequential chain baseline. Phase
//! corrections after X measurements are fixed at compile time by a dry run
//! on a parity tableau: corrections are affine in the outcomes, so one run
//! with all-zero outcomes and one run per record with outcome 1 give the
//! exponents of every classically controlled Z.

pub(crate) mod builder;
mod chain;
mod constdepth;
mod independence;
pub(crate) mod inorder;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::circuit::{ClassicalParity, ExecError, QlncCircuit};
use crate::coloring::{DirectedEdgeColoring, VertexColoring};
use crate::network::{Network, NetworkError, NodeId};
use crate::tableau::TableauError;

pub use chain::{compile_chain_sequential, shortest_path};
pub use constdepth::{compile_constant_depth, compile_constant_depth_auto};
pub use independence::{check_independence, IndependenceError, IndependenceWitness};
pub use inorder::compile_inorder;

#[derive(Debug, Error)]
pub enum CompileError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("preconditions violated: {}", .0.join("; "))]
    Preconditions(Vec<String>),
    #[error("the code does not decode every receiver correctly")]
    InvalidCode,
    #[error("bad coloring: {0}")]
    Coloring(String),
    #[error("no path joins {0} and {1}")]
    Disconnected(NodeId, NodeId),
    #[error("X measurement of qubit {0} is deterministic; its correction would depend on earlier outcomes")]
    DeterministicMeasurement(NodeId),
    #[error("dry run diverged between outcome branches")]
    DryRunDiverged,
    #[error(transparent)]
    Tableau(#[from] TableauError),
    #[error(transparent)]
    Exec(#[from] ExecError),
}

/// Schedule used to build a circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Inorder,
    Constdepth,
    Chain,
}

/// The delayed X corrections of the constant-depth schedule: `offset[q]` is
/// the error on what relay `q` broadcast and `correction[q]` the sum of
/// weighted incoming offsets, evaluated in `order`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DelayedCorrectionPlan {
    pub order: Vec<NodeId>,
    pub offset: BTreeMap<NodeId, ClassicalParity>,
    pub correction: BTreeMap<NodeId, ClassicalParity>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Compiled {
    pub mode: Mode,
    pub circuit: QlncCircuit,
    /// Target grouping; each group should end in a Bell or GHZ state.
    pub groups: Vec<Vec<NodeId>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vertex_coloring: Option<VertexColoring>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge_coloring: Option<DirectedEdgeColoring>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<DelayedCorrectionPlan>,
    /// Sequential batches (chain mode only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batches: Option<usize>,
}

impl Compiled {
    pub fn depth(&self) -> usize {
        self.circuit.quantum_depth()
    }

    /// Colors in the vertex coloring (`A`).
    pub fn a(&self) -> Option<u32> {
        self.vertex_coloring.as_ref().map(VertexColoring::max_color)
    }

    /// Colors in the directed-edge coloring (`B`).
    pub fn b(&self) -> Option<u32> {
        self.edge_coloring.as_ref().map(DirectedEdgeColoring::max_color)
    }

    /// The depth guarantee for this schedule, if it has one.
    pub fn bound(&self) -> Option<usize> {
        match self.mode {
            Mode::Constdepth => Some(depth_bound(self.a()?.max(1), self.b()?.max(1))),
            Mode::Chain => self.batches.map(|k| 4 * k + 1),
            Mode::Inorder => None,
        }
    }
}

/// Compiler report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CompileReport {
    pub mode: Mode,
    pub depth: usize,
    pub bound: Option<usize>,
    #[serde(rename = "A")]
    pub a: Option<u32>,
    #[serde(rename = "B")]
    pub b: Option<u32>,
    pub branches_verified: Option<u64>,
    pub independence: Option<bool>,
}

impl CompileReport {
    pub fn new(c: &Compiled) -> Self {
        CompileReport {
            mode: c.mode,
            depth: c.depth(),
            bound: c.bound(),
            a: c.a(),
            b: c.b(),
            branches_verified: None,
            independence: None,
        }
    }
}

/// `2(A − 1)(B + 1) + 1`.
pub fn depth_bound(a: u32, b: u32) -> usize {
    assert!(a >= 1 && b >= 1, "depth bound needs A, B >= 1");
    2 * (a as usize - 1) * (b as usize + 1) + 1
}

pub(crate) fn check_code(net: &Network, code: &crate::network::LinearCode) -> Result<(), CompileError> {
    net.check_structure()?;
    let v = net.role_violations(code);
    if !v.is_empty() {
        return Err(CompileError::Preconditions(v));
    }
    if !net.validate_code(code) {
        return Err(CompileError::InvalidCode);
    }
    Ok(())
}

#[cfg(test)]
mod tests;
