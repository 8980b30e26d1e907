//! Quantum linear network coding: compile classical network codes into
//! shallow entanglement-distribution circuits and simulate them exactly
//! with parity function tableaus.

pub mod circuit;
pub mod coloring;
pub mod compiler;
pub mod examples;
pub mod field;
pub mod network;
pub mod oracle;
pub mod outcome;
pub mod stabref;
pub mod tableau;
pub mod verify;

pub use circuit::{ClassicalParity, ExecError, OpKind, OutcomeLog, QlncCircuit, QlncOp, RecordId, Violation};
pub use field::{check_prime, inverse, FieldElement, FieldError, Modulus};
pub use oracle::{dense_execute, equal_up_to_global_phase, group_fidelity, DenseState, OracleError};
pub use outcome::{OutcomeError, OutcomeSource};
pub use stabref::{stab_execute, StabError, StabilizerTableau};
pub use tableau::{Measurement, ParityTableau, Prep, QubitId, TableauError, TerminateMode, TerminationRecord};
