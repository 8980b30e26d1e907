//! QLNC circuit IR: time-scheduled preparations, Add/CNOT gates along graph
//! edges, classically controlled Paulis, measurements and terminations.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::Modulus;
use crate::oracle::OracleError;
use crate::outcome::OutcomeSource;
use crate::stabref::StabError;
use crate::tableau::{Measurement, ParityTableau, Prep, QubitId, TableauError, TerminateMode, TerminationRecord};

/// Identifier of a classical measurement record.
pub type RecordId = u32;

/// `constant + Σ multiplier · outcome(record)` over `Z_d`. An empty term list
/// makes the controlled gate unconditional.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClassicalParity {
    #[serde(default)]
    pub constant: u32,
    #[serde(default)]
    pub terms: Vec<(RecordId, u32)>,
}

impl ClassicalParity {
    pub fn constant(c: u32) -> Self {
        ClassicalParity { constant: c, terms: Vec::new() }
    }

    /// `multiplier · outcome(record)`.
    pub fn of(record: RecordId, multiplier: u32) -> Self {
        ClassicalParity { constant: 0, terms: vec![(record, multiplier)] }
    }

    pub fn records(&self) -> impl Iterator<Item = RecordId> + '_ {
        self.terms.iter().map(|&(r, _)| r)
    }

    /// Merge another parity into this one, collecting like terms.
    pub fn add_assign(&mut self, other: &ClassicalParity, d: Modulus) {
        self.constant = d.add(d.reduce(self.constant as u64), d.reduce(other.constant as u64));
        for &(r, m) in &other.terms {
            match self.terms.iter_mut().find(|(x, _)| *x == r) {
                Some((_, acc)) => *acc = d.add(d.reduce(*acc as u64), d.reduce(m as u64)),
                None => self.terms.push((r, d.reduce(m as u64))),
            }
        }
        self.terms.retain(|&(_, m)| m != 0);
        self.terms.sort_unstable();
    }

    pub fn evaluate(&self, d: Modulus, log: &OutcomeLog) -> Result<u32, ExecError> {
        let mut acc = d.reduce(self.constant as u64);
        for &(r, m) in &self.terms {
            let s = log.get(r).ok_or(ExecError::DanglingControl(r))?;
            acc = d.mul_add(acc, d.reduce(m as u64), s.outcome);
        }
        Ok(acc)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "args")]
pub enum OpKind {
    PrepZero { qubit: QubitId },
    PrepPlus { qubit: QubitId },
    /// `Add^weight` from control into target; a CNOT for `d = 2`.
    Cnot { control: QubitId, target: QubitId, weight: u32 },
    CtrlX { target: QubitId, parity: ClassicalParity },
    CtrlZ { target: QubitId, parity: ClassicalParity },
    /// `X^x Z^z` (Z applied first); the qubit case is a Y up to phase.
    CtrlXZ { target: QubitId, x: ClassicalParity, z: ClassicalParity },
    MeasureX { qubit: QubitId, record: RecordId },
    MeasureZ { qubit: QubitId, record: RecordId },
    /// X measurement followed by the phase corrections that return the
    /// qubit to `|+⟩` without leaving relative phases elsewhere.
    Terminate { qubit: QubitId, record: RecordId },
}

impl OpKind {
    /// Qubits the op acts on.
    pub fn qubits(&self) -> Vec<QubitId> {
        match *self {
            OpKind::PrepZero { qubit }
            | OpKind::PrepPlus { qubit }
            | OpKind::MeasureX { qubit, .. }
            | OpKind::MeasureZ { qubit, .. }
            | OpKind::Terminate { qubit, .. } => vec![qubit],
            OpKind::Cnot { control, target, .. } => vec![control, target],
            OpKind::CtrlX { target, .. } | OpKind::CtrlZ { target, .. } | OpKind::CtrlXZ { target, .. } => vec![target],
        }
    }

    /// Measurement record written by the op.
    pub fn record(&self) -> Option<RecordId> {
        match *self {
            OpKind::MeasureX { record, .. } | OpKind::MeasureZ { record, .. } | OpKind::Terminate { record, .. } => {
                Some(record)
            }
            _ => None,
        }
    }

    /// Records read by the op.
    pub fn controls(&self) -> Vec<RecordId> {
        match self {
            OpKind::CtrlX { parity, .. } | OpKind::CtrlZ { parity, .. } => parity.records().collect(),
            OpKind::CtrlXZ { x, z, .. } => x.records().chain(z.records()).collect(),
            _ => Vec::new(),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            OpKind::PrepZero { .. } => "PrepZero",
            OpKind::PrepPlus { .. } => "PrepPlus",
            OpKind::Cnot { .. } => "Cnot",
            OpKind::CtrlX { .. } => "CtrlX",
            OpKind::CtrlZ { .. } => "CtrlZ",
            OpKind::CtrlXZ { .. } => "CtrlXZ",
            OpKind::MeasureX { .. } => "MeasureX",
            OpKind::MeasureZ { .. } => "MeasureZ",
            OpKind::Terminate { .. } => "Terminate",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QlncOp {
    #[serde(flatten)]
    pub kind: OpKind,
    pub t: u32,
}

/// Undirected capability graph the CNOTs must respect.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphRef {
    pub name: String,
    pub edges: Vec<(QubitId, QubitId)>,
}

impl GraphRef {
    fn edge_set(&self) -> BTreeSet<(QubitId, QubitId)> {
        self.edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QlncCircuit {
    pub d: Modulus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphRef>,
    pub ops: Vec<QlncOp>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Violation {
    /// Two ops touch `qubit` at step `t` and not all of them are CtrlX.
    QubitConflict { t: u32, qubit: QubitId },
    /// An edge op shares step `t` with the termination of an endpoint.
    EdgeDuringTermination { t: u32, qubit: QubitId },
    NotAnEdge { t: u32, control: QubitId, target: QubitId },
    SelfLoop { t: u32, qubit: QubitId },
    ZeroWeight { t: u32, control: QubitId, target: QubitId },
    UnknownRecord { t: u32, record: RecordId },
    /// Control reads a record not measured at a strictly earlier step.
    ControlNotEarlier { t: u32, record: RecordId },
    DuplicateRecord { record: RecordId },
    UnpreparedQubit { t: u32, qubit: QubitId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::QubitConflict { t, qubit } => write!(f, "step {t}: qubit {qubit} used by more than one op"),
            Violation::EdgeDuringTermination { t, qubit } => {
                write!(f, "step {t}: edge op on qubit {qubit} while it is terminated")
            }
            Violation::NotAnEdge { t, control, target } => {
                write!(f, "step {t}: CNOT {control}->{target} is not an edge of the graph")
            }
            Violation::SelfLoop { t, qubit } => write!(f, "step {t}: CNOT from qubit {qubit} to itself"),
            Violation::ZeroWeight { t, control, target } => write!(f, "step {t}: CNOT {control}->{target} has weight 0"),
            Violation::UnknownRecord { t, record } => write!(f, "step {t}: record {record} is never measured"),
            Violation::ControlNotEarlier { t, record } => {
                write!(f, "step {t}: record {record} is not measured at an earlier step")
            }
            Violation::DuplicateRecord { record } => write!(f, "record {record} written twice"),
            Violation::UnpreparedQubit { t, qubit } => write!(f, "step {t}: qubit {qubit} used before preparation"),
        }
    }
}

/// Errors from executing a circuit on any engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecError {
    #[error("invalid circuit: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("classical control reads record {0}, which has not been measured")]
    DanglingControl(RecordId),
    #[error("too many branches: {count} exceeds limit {limit}")]
    TooManyBranches { count: u128, limit: u128 },
    #[error(transparent)]
    Tableau(#[from] TableauError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Stab(#[from] StabError),
}

impl From<crate::outcome::OutcomeError> for ExecError {
    fn from(e: crate::outcome::OutcomeError) -> Self {
        ExecError::Tableau(TableauError::Outcome(e))
    }
}

/// Outcomes keyed by record id.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OutcomeLog(BTreeMap<RecordId, Measurement>);

impl OutcomeLog {
    pub fn get(&self, r: RecordId) -> Option<Measurement> {
        self.0.get(&r).copied()
    }

    pub fn insert(&mut self, r: RecordId, m: Measurement) {
        self.0.insert(r, m);
    }

    pub fn iter(&self) -> impl Iterator<Item = (RecordId, Measurement)> + '_ {
        self.0.iter().map(|(&r, &m)| (r, m))
    }

    /// Outcomes of the random measurements, in execution order of records.
    pub fn outcomes(&self) -> BTreeMap<RecordId, u32> {
        self.0.iter().map(|(&r, m)| (r, m.outcome)).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A simulator that can run QLNC ops.
pub trait Engine {
    fn modulus(&self) -> Modulus;
    fn prepare(&mut self, q: QubitId, prep: Prep) -> Result<(), ExecError>;
    fn apply_x(&mut self, q: QubitId, e: u32) -> Result<(), ExecError>;
    fn apply_z(&mut self, q: QubitId, e: u32) -> Result<(), ExecError>;
    fn apply_add(&mut self, control: QubitId, target: QubitId, weight: u32) -> Result<(), ExecError>;
    fn measure_x(&mut self, q: QubitId, src: &mut OutcomeSource) -> Result<Measurement, ExecError>;
    fn measure_z(&mut self, q: QubitId, src: &mut OutcomeSource) -> Result<Measurement, ExecError>;
    /// Terminate `q`, leaving it in `|+⟩`.
    fn terminate(&mut self, q: QubitId, src: &mut OutcomeSource) -> Result<TerminationRecord, ExecError>;
}

impl Engine for ParityTableau {
    fn modulus(&self) -> Modulus {
        ParityTableau::modulus(self)
    }
    fn prepare(&mut self, q: QubitId, prep: Prep) -> Result<(), ExecError> {
        Ok(ParityTableau::prepare(self, q, prep)?)
    }
    fn apply_x(&mut self, q: QubitId, e: u32) -> Result<(), ExecError> {
        Ok(ParityTableau::apply_x(self, q, e)?)
    }
    fn apply_z(&mut self, q: QubitId, e: u32) -> Result<(), ExecError> {
        Ok(ParityTableau::apply_z(self, q, e)?)
    }
    fn apply_add(&mut self, control: QubitId, target: QubitId, weight: u32) -> Result<(), ExecError> {
        Ok(ParityTableau::apply_add(self, control, target, weight)?)
    }
    fn measure_x(&mut self, q: QubitId, src: &mut OutcomeSource) -> Result<Measurement, ExecError> {
        Ok(ParityTableau::measure_x(self, q, src)?)
    }
    fn measure_z(&mut self, q: QubitId, src: &mut OutcomeSource) -> Result<Measurement, ExecError> {
        Ok(ParityTableau::measure_z(self, q, src)?)
    }
    fn terminate(&mut self, q: QubitId, src: &mut OutcomeSource) -> Result<TerminationRecord, ExecError> {
        Ok(ParityTableau::terminate(self, q, src, TerminateMode::RetainPlus)?)
    }
}

/// A Pauli actually applied during execution.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AppliedPauli {
    pub t: u32,
    pub target: QubitId,
    pub x: u32,
    pub z: u32,
}

#[derive(Clone, Debug)]
pub struct Run<E> {
    pub state: E,
    pub log: OutcomeLog,
    /// Classically controlled Paulis with non-trivial exponents.
    pub applied: Vec<AppliedPauli>,
    /// Terminations in execution order.
    pub terminations: Vec<(RecordId, TerminationRecord)>,
}

/// Called by [`QlncCircuit::run_with`] after every op.
pub type OpHook<'a, E> = &'a mut dyn FnMut(&QlncOp, &E);

impl QlncCircuit {
    pub fn new(d: Modulus) -> Self {
        QlncCircuit { d, graph: None, ops: Vec::new() }
    }

    pub fn with_graph(mut self, graph: GraphRef) -> Self {
        self.graph = Some(graph);
        self
    }

    pub fn push(&mut self, t: u32, kind: OpKind) -> &mut Self {
        self.ops.push(QlncOp { kind, t });
        self
    }

    pub fn prep(&mut self, q: QubitId, prep: Prep) -> &mut Self {
        let kind = match prep {
            Prep::Zero => OpKind::PrepZero { qubit: q },
            Prep::Plus => OpKind::PrepPlus { qubit: q },
        };
        self.push(0, kind)
    }

    pub fn cnot(&mut self, t: u32, control: QubitId, target: QubitId, weight: u32) -> &mut Self {
        self.push(t, OpKind::Cnot { control, target, weight })
    }

    /// All qubits named by any op, ascending.
    pub fn qubits(&self) -> Vec<QubitId> {
        let set: BTreeSet<QubitId> = self.ops.iter().flat_map(|op| op.kind.qubits()).collect();
        set.into_iter().collect()
    }

    /// Ops sorted by time step; the sort is stable.
    pub fn scheduled(&self) -> Vec<&QlncOp> {
        let mut ops: Vec<&QlncOp> = self.ops.iter().collect();
        ops.sort_by_key(|op| op.t);
        ops
    }

    /// Every scheduling and locality violation; empty iff the circuit is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let edges = self.graph.as_ref().map(GraphRef::edge_set);

        let mut record_step: HashMap<RecordId, u32> = HashMap::new();
        for op in &self.ops {
            if let Some(r) = op.kind.record() {
                if record_step.insert(r, op.t).is_some() {
                    out.push(Violation::DuplicateRecord { record: r });
                }
            }
        }

        let mut by_step: BTreeMap<u32, Vec<&QlncOp>> = BTreeMap::new();
        for op in &self.ops {
            by_step.entry(op.t).or_default().push(op);
        }
        let mut prepared: BTreeSet<QubitId> = BTreeSet::new();
        for (&t, ops) in &by_step {
            let mut users: BTreeMap<QubitId, Vec<&OpKind>> = BTreeMap::new();
            for op in ops {
                for q in op.kind.qubits() {
                    users.entry(q).or_default().push(&op.kind);
                }
            }
            for (&q, kinds) in &users {
                if kinds.len() > 1 && !kinds.iter().all(|k| matches!(k, OpKind::CtrlX { .. })) {
                    let terminated = kinds.iter().any(|k| matches!(k, OpKind::Terminate { .. }));
                    let edge = kinds.iter().any(|k| matches!(k, OpKind::Cnot { .. }));
                    out.push(if terminated && edge {
                        Violation::EdgeDuringTermination { t, qubit: q }
                    } else {
                        Violation::QubitConflict { t, qubit: q }
                    });
                }
            }
            for op in ops {
                match op.kind {
                    OpKind::PrepZero { qubit } | OpKind::PrepPlus { qubit } => {
                        prepared.insert(qubit);
                    }
                    _ => {
                        for q in op.kind.qubits() {
                            if !prepared.contains(&q) {
                                out.push(Violation::UnpreparedQubit { t, qubit: q });
                            }
                        }
                    }
                }
                if let OpKind::Cnot { control, target, weight } = op.kind {
                    if control == target {
                        out.push(Violation::SelfLoop { t, qubit: control });
                    } else if let Some(edges) = &edges {
                        if !edges.contains(&(control.min(target), control.max(target))) {
                            out.push(Violation::NotAnEdge { t, control, target });
                        }
                    }
                    if self.d.reduce(weight as u64) == 0 {
                        out.push(Violation::ZeroWeight { t, control, target });
                    }
                }
                for r in op.kind.controls() {
                    match record_step.get(&r) {
                        None => out.push(Violation::UnknownRecord { t, record: r }),
                        Some(&s) if s >= t => out.push(Violation::ControlNotEarlier { t, record: r }),
                        _ => {}
                    }
                }
            }
        }
        out
    }

    /// Number of distinct time steps that hold an op.
    pub fn quantum_depth(&self) -> usize {
        self.ops.iter().map(|op| op.t).collect::<BTreeSet<_>>().len()
    }

    /// Merge CtrlX and CtrlZ ops that hit the same target at the same step
    /// into a single CtrlXZ. Multiple CtrlX on one target are merged too.
    pub fn merge_xz(&mut self) {
        let d = self.d;
        let mut merged: BTreeMap<(u32, QubitId), (Option<ClassicalParity>, Option<ClassicalParity>)> = BTreeMap::new();
        let mut rest = Vec::new();
        for op in self.ops.drain(..) {
            match op.kind {
                OpKind::CtrlX { target, parity } => {
                    merged.entry((op.t, target)).or_default().0.get_or_insert_with(Default::default).add_assign(&parity, d)
                }
                OpKind::CtrlZ { target, parity } => {
                    merged.entry((op.t, target)).or_default().1.get_or_insert_with(Default::default).add_assign(&parity, d)
                }
                OpKind::CtrlXZ { target, x, z } => {
                    let e = merged.entry((op.t, target)).or_default();
                    e.0.get_or_insert_with(Default::default).add_assign(&x, d);
                    e.1.get_or_insert_with(Default::default).add_assign(&z, d);
                }
                _ => rest.push(op),
            }
        }
        for ((t, target), (x, z)) in merged {
            let kind = match (x, z) {
                (Some(x), Some(z)) => OpKind::CtrlXZ { target, x, z },
                (Some(parity), None) => OpKind::CtrlX { target, parity },
                (None, Some(parity)) => OpKind::CtrlZ { target, parity },
                (None, None) => continue,
            };
            rest.push(QlncOp { kind, t });
        }
        rest.sort_by_key(|op| op.t);
        self.ops = rest;
    }

    /// Run on the parity-tableau engine.
    pub fn execute(&self, src: &mut OutcomeSource) -> Result<Run<ParityTableau>, ExecError> {
        self.run(ParityTableau::empty(self.d), src)
    }

    pub fn run<E: Engine>(&self, engine: E, src: &mut OutcomeSource) -> Result<Run<E>, ExecError> {
        self.run_with(engine, src, &mut |_, _| {})
    }

    /// Run on any engine, calling `hook` after every op.
    pub fn run_with<E: Engine>(
        &self,
        mut engine: E,
        src: &mut OutcomeSource,
        hook: OpHook<'_, E>,
    ) -> Result<Run<E>, ExecError> {
        let violations = self.validate();
        if !violations.is_empty() {
            return Err(ExecError::Invalid(violations));
        }
        let d = self.d;
        let mut log = OutcomeLog::default();
        let mut applied = Vec::new();
        let mut terminations = Vec::new();
        for op in self.scheduled() {
            match &op.kind {
                OpKind::PrepZero { qubit } => engine.prepare(*qubit, Prep::Zero)?,
                OpKind::PrepPlus { qubit } => engine.prepare(*qubit, Prep::Plus)?,
                OpKind::Cnot { control, target, weight } => engine.apply_add(*control, *target, *weight)?,
                OpKind::CtrlX { target, parity } => {
                    let x = parity.evaluate(d, &log)?;
                    if x != 0 {
                        engine.apply_x(*target, x)?;
                        applied.push(AppliedPauli { t: op.t, target: *target, x, z: 0 });
                    }
                }
                OpKind::CtrlZ { target, parity } => {
                    let z = parity.evaluate(d, &log)?;
                    if z != 0 {
                        engine.apply_z(*target, z)?;
                        applied.push(AppliedPauli { t: op.t, target: *target, x: 0, z });
                    }
                }
                OpKind::CtrlXZ { target, x, z } => {
                    let (x, z) = (x.evaluate(d, &log)?, z.evaluate(d, &log)?);
                    if z != 0 {
                        engine.apply_z(*target, z)?;
                    }
                    if x != 0 {
                        engine.apply_x(*target, x)?;
                    }
                    if x != 0 || z != 0 {
                        applied.push(AppliedPauli { t: op.t, target: *target, x, z });
                    }
                }
                OpKind::MeasureX { qubit, record } => {
                    let m = engine.measure_x(*qubit, src)?;
                    log.insert(*record, m);
                }
                OpKind::MeasureZ { qubit, record } => {
                    let m = engine.measure_z(*qubit, src)?;
                    log.insert(*record, m);
                }
                OpKind::Terminate { qubit, record } => {
                    let rec = engine.terminate(*qubit, src)?;
                    log.insert(*record, rec.measurement);
                    terminations.push((*record, rec));
                }
            }
            hook(op, &engine);
        }
        Ok(Run { state: engine, log, applied, terminations })
    }

    /// Number of random measurements on any branch. The count does not
    /// depend on outcomes, so one probe run with all-zero outcomes suffices.
    pub fn random_measurement_count(&self) -> Result<usize, ExecError> {
        let mut src = OutcomeSource::constant(0);
        self.execute(&mut src)?;
        Ok(src.drawn())
    }

    /// DOT rendering of the interaction graph; CNOT edges are labelled with
    /// the time steps at which they are used.
    pub fn to_dot(&self) -> String {
        let mut steps: BTreeMap<(QubitId, QubitId), Vec<u32>> = BTreeMap::new();
        for op in &self.ops {
            if let OpKind::Cnot { control, target, .. } = op.kind {
                steps.entry((control, target)).or_default().push(op.t);
            }
        }
        let mut s = String::from("digraph qlnc {\n  node [shape=circle];\n");
        for q in self.qubits() {
            let _ = writeln!(s, "  {q};");
        }
        for ((c, t), ts) in &steps {
            let label = ts.iter().map(u32::to_string).collect::<Vec<_>>().join(",");
            let _ = writeln!(s, "  {c} -> {t} [label=\"{label}\"];");
        }
        if let Some(g) = &self.graph {
            for &(a, b) in &g.edges {
                if !steps.contains_key(&(a, b)) && !steps.contains_key(&(b, a)) {
                    let _ = writeln!(s, "  {a} -> {b} [dir=none, style=dashed];");
                }
            }
        }
        s.push_str("}\n");
        s
    }

    /// One line per op, grouped by step.
    pub fn pretty(&self) -> String {
        let mut s = String::new();
        for op in self.scheduled() {
            let _ = writeln!(s, "t={:<3} {:<10} {:?}", op.t, op.kind.name(), op.kind);
        }
        s
    }
}
