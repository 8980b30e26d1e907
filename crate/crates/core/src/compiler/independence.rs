//! Collapse-freeness of a circuit's Z measurements.
//!
//! Every qubit carries a label: an affine combination of formal symbols,
//! one symbol per `|+⟩` preparation or X measurement. CNOTs add labels,
//! classically controlled X gates add the label the controlling qubit had
//! when it was measured (deferred measurement), and each Z measurement
//! contributes its label as a row of `M`. The target grouping fixes one
//! final symbol per group. After rewriting `M` in a basis that contains the
//! group labels and putting the remaining ("non-final") coordinates first,
//! row reduction gives `M′`; the measurements leave the target untouched iff
//! every non-zero row of `M′` has a non-zero entry among the first `n_r`
//! columns.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::circuit::{ClassicalParity, OpKind, QlncCircuit, RecordId};
use crate::field::Modulus;
use crate::tableau::QubitId;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IndependenceError {
    #[error("group names qubit {0}, which the circuit never uses")]
    UnknownQubit(QubitId),
    #[error("qubit {0} appears in two groups")]
    RepeatedQubit(QubitId),
    #[error("record {0} is read before it is written")]
    UnknownRecord(RecordId),
    #[error("X correction on qubit {0} is controlled by an X-type outcome")]
    XControlledByX(QubitId),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IndependenceWitness {
    /// Number of formal symbols.
    pub symbols: usize,
    /// Rows of `M` over the original symbols, constant term dropped.
    pub m: Vec<Vec<u32>>,
    /// Reduced matrix with the `n_r` non-final coordinates first.
    pub m_prime: Vec<Vec<u32>>,
    pub n_r: usize,
    /// Every group shares one non-constant label, and those labels are
    /// independent across groups.
    pub target_labels_ok: bool,
    pub collapse_free: bool,
    /// First row of `M′` with no non-zero entry in the first `n_r` columns.
    pub offending_row: Option<usize>,
    pub verdict: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Sparse affine label: `constant + Σ coeff · symbol`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Label {
    constant: u32,
    coeffs: BTreeMap<usize, u32>,
}

impl Label {
    fn symbol(s: usize) -> Self {
        Label { constant: 0, coeffs: BTreeMap::from([(s, 1)]) }
    }

    fn add_scaled(&mut self, other: &Label, w: u32, d: Modulus) {
        self.constant = d.mul_add(self.constant, w, other.constant);
        for (&s, &c) in &other.coeffs {
            let e = self.coeffs.entry(s).or_insert(0);
            *e = d.mul_add(*e, w, c);
            if *e == 0 {
                self.coeffs.remove(&s);
            }
        }
    }

    fn dense(&self, n: usize) -> Vec<u32> {
        let mut v = vec![0; n];
        for (&s, &c) in &self.coeffs {
            v[s] = c;
        }
        v
    }
}

/// Reduced row echelon form over `Z_d`; returns the pivot columns.
pub(crate) fn rref(rows: &mut Vec<Vec<u32>>, d: Modulus) -> Vec<usize> {
    let cols = rows.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows.len()).find(|&i| rows[i][c] != 0) else { continue };
        rows.swap(r, p);
        let inv = d.inv(rows[r][c]).expect("prime modulus");
        for v in rows[r].iter_mut() {
            *v = d.mul(*v, inv);
        }
        for i in 0..rows.len() {
            if i != r && rows[i][c] != 0 {
                let f = d.neg(rows[i][c]);
                let pivot_row = rows[r].clone();
                for (x, &y) in rows[i].iter_mut().zip(&pivot_row) {
                    *x = d.mul_add(*x, f, y);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.retain(|row| row.iter().any(|&v| v != 0));
    pivots
}

/// Inverse of an invertible square matrix over `Z_d`.
fn invert(m: &[Vec<u32>], d: Modulus) -> Vec<Vec<u32>> {
    let n = m.len();
    let mut aug: Vec<Vec<u32>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| u32::from(i == j)));
            r
        })
        .collect();
    let pivots = rref(&mut aug, d);
    debug_assert_eq!(&pivots[..n], &(0..n).collect::<Vec<_>>()[..]);
    aug.into_iter().map(|r| r[n..].to_vec()).collect()
}

fn add_parity(label: &mut Label, parity: &ClassicalParity, records: &BTreeMap<RecordId, Option<Label>>, d: Modulus, q: QubitId) -> Result<(), IndependenceError> {
    label.constant = d.add(label.constant, d.reduce(parity.constant as u64));
    for &(r, m) in &parity.terms {
        match records.get(&r) {
            None => return Err(IndependenceError::UnknownRecord(r)),
            Some(None) => return Err(IndependenceError::XControlledByX(q)),
            Some(Some(l)) => label.add_scaled(l, d.reduce(m as u64), d),
        }
    }
    Ok(())
}

/// Build the witness for `c` against the declared `groups`.
pub fn check_independence(c: &QlncCircuit, groups: &[Vec<QubitId>]) -> Result<IndependenceWitness, IndependenceError> {
    let d = c.d;
    let used: BTreeSet<QubitId> = c.qubits().into_iter().collect();
    let mut grouped = BTreeSet::new();
    for g in groups {
        for &q in g {
            if !used.contains(&q) {
                return Err(IndependenceError::UnknownQubit(q));
            }
            if !grouped.insert(q) {
                return Err(IndependenceError::RepeatedQubit(q));
            }
        }
    }

    let mut n_sym = 0usize;
    let mut fresh = || {
        n_sym += 1;
        Label::symbol(n_sym - 1)
    };
    let mut labels: BTreeMap<QubitId, Label> = BTreeMap::new();
    // X-type records have no label
    let mut records: BTreeMap<RecordId, Option<Label>> = BTreeMap::new();
    let mut m_rows: Vec<Label> = Vec::new();
    let mut measured: BTreeSet<QubitId> = BTreeSet::new();

    for op in c.scheduled() {
        match &op.kind {
            OpKind::PrepZero { qubit } | OpKind::PrepPlus { qubit } => {
                if let Some(old) = labels.remove(qubit) {
                    if !measured.contains(qubit) {
                        m_rows.push(old);
                    }
                }
                measured.remove(qubit);
                let l = if matches!(op.kind, OpKind::PrepPlus { .. }) { fresh() } else { Label::default() };
                labels.insert(*qubit, l);
            }
            OpKind::Cnot { control, target, weight } => {
                let src = labels.get(control).cloned().unwrap_or_default();
                labels.entry(*target).or_default().add_scaled(&src, d.reduce(*weight as u64), d);
                measured.remove(target);
            }
            OpKind::CtrlX { target, parity } | OpKind::CtrlXZ { target, x: parity, .. } => {
                let l = labels.entry(*target).or_default();
                add_parity(l, parity, &records, d, *target)?;
                if !parity.terms.is_empty() || parity.constant != 0 {
                    measured.remove(target);
                }
            }
            OpKind::CtrlZ { .. } => {}
            OpKind::MeasureZ { qubit, record } => {
                let l = labels.get(qubit).cloned().unwrap_or_default();
                m_rows.push(l.clone());
                records.insert(*record, Some(l));
                measured.insert(*qubit);
            }
            OpKind::MeasureX { qubit, record } | OpKind::Terminate { qubit, record } => {
                let l = fresh();
                labels.insert(*qubit, l);
                records.insert(*record, None);
                measured.remove(qubit);
            }
        }
    }
    for (q, l) in &labels {
        if !grouped.contains(q) && !measured.contains(q) {
            m_rows.push(l.clone());
        }
    }

    let s = n_sym;
    let m: Vec<Vec<u32>> = m_rows.iter().map(|l| l.dense(s)).collect();

    // target labels
    let mut reason = None;
    let mut finals: Vec<Vec<u32>> = Vec::new();
    for g in groups {
        let first = &labels[&g[0]];
        if let Some(&bad) = g.iter().find(|q| labels[*q] != *first) {
            reason.get_or_insert_with(|| format!("qubits {} and {bad} carry different labels", g[0]));
        }
        if first.coeffs.is_empty() {
            reason.get_or_insert_with(|| format!("group of qubit {} has a constant label", g[0]));
        }
        finals.push(first.dense(s));
    }
    if reason.is_none() {
        let mut probe = finals.clone();
        if rref(&mut probe, d).len() < finals.len() {
            reason = Some("group labels are linearly dependent".into());
        }
    }
    let target_labels_ok = reason.is_none();

    // basis containing the group labels, then the coordinates of M in it
    let (m_prime, n_r, offending_row) = if target_labels_ok && s > 0 {
        let mut basis = finals.clone();
        for j in 0..s {
            let mut unit = vec![0; s];
            unit[j] = 1;
            let mut probe = basis.clone();
            probe.push(unit.clone());
            if rref(&mut probe, d).len() == basis.len() + 1 {
                basis.push(unit);
            }
            if basis.len() == s {
                break;
            }
        }
        let inv = invert(&basis, d);
        let k = finals.len();
        let n_r = s - k;
        let mut mp: Vec<Vec<u32>> = m
            .iter()
            .map(|row| {
                let coords: Vec<u32> =
                    (0..s).map(|j| (0..s).fold(0, |acc, i| d.mul_add(acc, row[i], inv[i][j]))).collect();
                coords[k..].iter().chain(&coords[..k]).copied().collect()
            })
            .collect();
        rref(&mut mp, d);
        let off = mp.iter().position(|row| row[..n_r].iter().all(|&v| v == 0));
        (mp, n_r, off)
    } else {
        (Vec::new(), 0, None)
    };
    let collapse_free = target_labels_ok && offending_row.is_none();
    if reason.is_none() {
        if let Some(r) = offending_row {
            reason = Some(format!("row {r} of M′ constrains only final symbols"));
        }
    }
    Ok(IndependenceWitness {
        symbols: s,
        m,
        m_prime,
        n_r,
        target_labels_ok,
        collapse_free,
        offending_row,
        verdict: target_labels_ok && collapse_free,
        reason,
    })
}
