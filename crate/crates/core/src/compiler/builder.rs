//! Circuit emission with a shadow tableau run on all-zero outcomes.

use std::collections::BTreeMap;

use crate::circuit::{ClassicalParity, GraphRef, OpKind, QlncCircuit, RecordId};
use crate::field::Modulus;
use crate::outcome::OutcomeSource;
use crate::tableau::{ParityTableau, Prep, QubitId};

use super::CompileError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Basis {
    X,
    Z,
}

pub(crate) struct Builder {
    pub circuit: QlncCircuit,
    dry: ParityTableau,
    next_record: RecordId,
}

/// Per-qubit Z exponents, affine in the records of one measurement batch.
pub(crate) type Corrections = BTreeMap<QubitId, ClassicalParity>;

impl Builder {
    pub fn new(d: Modulus, graph: GraphRef) -> Self {
        Builder { circuit: QlncCircuit::new(d).with_graph(graph), dry: ParityTableau::empty(d), next_record: 0 }
    }

    fn d(&self) -> Modulus {
        self.circuit.d
    }

    pub fn prep(&mut self, t: u32, q: QubitId, prep: Prep) -> Result<(), CompileError> {
        self.dry.prepare(q, prep)?;
        let kind = match prep {
            Prep::Zero => OpKind::PrepZero { qubit: q },
            Prep::Plus => OpKind::PrepPlus { qubit: q },
        };
        self.circuit.push(t, kind);
        Ok(())
    }

    pub fn cnot(&mut self, t: u32, control: QubitId, target: QubitId, weight: u32) -> Result<(), CompileError> {
        let weight = self.d().reduce(weight as u64);
        self.dry.apply_add(control, target, weight)?;
        self.circuit.cnot(t, control, target, weight);
        Ok(())
    }

    /// Classically controlled X; on the zero-outcome run only the constant acts.
    pub fn ctrl_x(&mut self, t: u32, q: QubitId, parity: ClassicalParity) -> Result<(), CompileError> {
        if parity.terms.is_empty() && parity.constant == 0 {
            return Ok(());
        }
        self.dry.apply_x(q, parity.constant)?;
        self.circuit.push(t, OpKind::CtrlX { target: q, parity });
        Ok(())
    }

    pub fn corrections(&mut self, t: u32, corr: Corrections) -> Result<(), CompileError> {
        for (q, parity) in corr {
            if parity.terms.is_empty() && parity.constant == 0 {
                continue;
            }
            self.dry.apply_z(q, parity.constant)?;
            self.circuit.push(t, OpKind::CtrlZ { target: q, parity });
        }
        Ok(())
    }

    fn measure(tab: &mut ParityTableau, q: QubitId, b: Basis, s: u32) -> Result<crate::tableau::Measurement, CompileError> {
        let mut src = OutcomeSource::constant(s);
        Ok(match b {
            Basis::X => tab.measure_x(q, &mut src)?,
            Basis::Z => tab.measure_z(q, &mut src)?,
        })
    }

    /// Emit a batch of measurements at step `t` and return the records with
    /// the Z corrections that remove the relative phases the batch induces.
    /// With `restore` unset, a measured qubit's own `|−⟩`-type phase is left
    /// alone (the qubit is garbage or about to be prepared again).
    pub fn measure_batch(
        &mut self,
        t: u32,
        items: &[(QubitId, Basis)],
        restore: bool,
    ) -> Result<(Vec<RecordId>, Corrections), CompileError> {
        let d = self.d();
        let records: Vec<RecordId> = items
            .iter()
            .map(|_| {
                self.next_record += 1;
                self.next_record - 1
            })
            .collect();
        for (&(q, b), &record) in items.iter().zip(&records) {
            self.circuit.push(
                t,
                match b {
                    Basis::X => OpKind::MeasureX { qubit: q, record },
                    Basis::Z => OpKind::MeasureZ { qubit: q, record },
                },
            );
        }

        let snapshot = self.dry.clone();
        let run = |hot: Option<usize>| -> Result<(ParityTableau, Vec<bool>), CompileError> {
            let mut tab = snapshot.clone();
            let mut random = Vec::with_capacity(items.len());
            for (i, &(q, b)) in items.iter().enumerate() {
                let m = Self::measure(&mut tab, q, b, u32::from(hot == Some(i)))?;
                if b == Basis::X && !m.random {
                    return Err(CompileError::DeterministicMeasurement(q));
                }
                random.push(m.random);
            }
            Ok((tab, random))
        };
        let (zero, random) = run(None)?;

        // rows that hold only a measured qubit's fresh symbol
        let own_rows: Vec<usize> = if restore {
            Vec::new()
        } else {
            let cols: Vec<usize> = items
                .iter()
                .filter(|(_, b)| *b == Basis::X)
                .filter_map(|&(q, _)| zero.labels().iter().position(|&l| l == q).map(|i| i + 1))
                .collect();
            zero.coefficient_rows()
                .iter()
                .enumerate()
                .skip(1)
                .filter(|(_, row)| {
                    let nz: Vec<usize> = (1..row.len()).filter(|&j| row[j] != 0).collect();
                    nz.len() == 1 && cols.contains(&nz[0])
                })
                .map(|(r, _)| r)
                .collect()
        };
        let masked = |mut v: Vec<u32>| {
            v[0] = 0;
            for &r in &own_rows {
                v[r] = 0;
            }
            v
        };

        let mut corr: Corrections = BTreeMap::new();
        for (q, e) in zero.phase_correction_for(&masked(zero.phase_vector().to_vec())) {
            corr.entry(q).or_default().constant = e;
        }
        for (i, &record) in records.iter().enumerate() {
            if !random[i] {
                continue;
            }
            let (hot, _) = run(Some(i))?;
            if hot.coefficient_rows()[1..] != zero.coefficient_rows()[1..] {
                return Err(CompileError::DryRunDiverged);
            }
            let delta: Vec<u32> =
                hot.phase_vector().iter().zip(zero.phase_vector()).map(|(&a, &b)| d.sub(a, b)).collect();
            for (q, e) in zero.phase_correction_for(&masked(delta)) {
                corr.entry(q).or_default().add_assign(&ClassicalParity::of(record, e), d);
            }
        }
        corr.retain(|_, p| p.constant != 0 || !p.terms.is_empty());
        self.dry = zero;
        Ok((records, corr))
    }

    pub fn finish(mut self) -> QlncCircuit {
        self.circuit.merge_xz();
        self.circuit
    }
}
