//! Parity (linear) function tableaus.
//!
//! A state on `n` qudits is written as a uniform superposition
//!
//! ```text
//!   d^{-N/2} Σ_{x ∈ Z_d^N} ω^{φ(x)} |f_1(x)⟩ ⊗ … ⊗ |f_n(x)⟩
//! ```
//!
//! where every `f_j` and `φ` is an affine function of `N` indeterminates. The
//! tableau stores the `(N+1) × (n+1)` coefficient matrix `C` (row 0 holds the
//! constant terms, column 0 is fixed to `e0`) and the phase vector `p`.
//!
//! Unitary gates are column operations. Measurements first change variables
//! (left-multiplication by an invertible `Q` with `Q e0 = e0`) so that the
//! measured column is a pivot column, then add or remove one indeterminate row.
//! Every operation keeps `rank(C) = N + 1`.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldError, Modulus};
use crate::oracle::DenseState;
use crate::outcome::{OutcomeError, OutcomeSource};

/// External, stable identifier of a qudit. Columns move when qudits are
/// removed; identifiers never do.
pub type QubitId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableauError {
    #[error("unknown qubit {0}")]
    UnknownQubit(QubitId),
    #[error("qubit {0} is already live")]
    DuplicateQubit(QubitId),
    #[error("control and target are both qubit {0}")]
    SameQubit(QubitId),
    #[error("qubit {0} is entangled with the rest of the register")]
    Entangled(QubitId),
    #[error("expansion too large: {d}^{rows} basis terms exceeds cap {cap}")]
    ExpansionTooLarge { d: u32, rows: usize, cap: usize },
    #[error("invalid tableau: {0}")]
    Invalid(String),
    #[error(transparent)]
    Outcome(#[from] OutcomeError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Single-qudit preparations available to QLNC circuits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Prep {
    Zero,
    Plus,
}

/// What happens to a terminated qudit once its phase has been corrected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminateMode {
    /// Keep the qudit as `|+⟩` carrying a fresh indeterminate.
    RetainPlus,
    /// Remove the qudit from the tableau.
    Remove,
}

/// Result of a single measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Measurement {
    pub outcome: u32,
    /// Whether the outcome was drawn from the outcome source.
    pub random: bool,
}

/// Result of terminating a qudit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TerminationRecord {
    pub measurement: Measurement,
    /// `Z^e` corrections applied, as `(qubit, e)` with `e ≠ 0`.
    pub corrections: Vec<(QubitId, u32)>,
}

/// What an X measurement did to the tableau; needed to undo its phase.
struct XMeasureEffect {
    measurement: Measurement,
    /// Row that held the measured indeterminate before measurement.
    old_row: Option<usize>,
    /// Row appended for the post-measurement indeterminate.
    new_row: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParityTableau {
    d: Modulus,
    labels: Vec<QubitId>,
    index: HashMap<QubitId, usize>,
    /// `N + 1` rows of length `n + 1`.
    rows: Vec<Vec<u32>>,
    phase: Vec<u32>,
}

impl ParityTableau {
    /// The zero-qudit state: `C = [e0]`, `N = 0`.
    pub fn empty(d: Modulus) -> Self {
        ParityTableau { d, labels: Vec::new(), index: HashMap::new(), rows: vec![vec![1]], phase: vec![0] }
    }

    /// Fresh register with qudits labelled `1..=preps.len()`.
    pub fn new(d: Modulus, preps: &[Prep]) -> Self {
        let mut t = Self::empty(d);
        for (i, &prep) in preps.iter().enumerate() {
            t.prepare(i as QubitId + 1, prep).expect("fresh labels are distinct");
        }
        t
    }

    pub fn modulus(&self) -> Modulus {
        self.d
    }

    /// Number of live qudits.
    pub fn num_qubits(&self) -> usize {
        self.labels.len()
    }

    /// Number of indeterminates `N`.
    pub fn num_indeterminates(&self) -> usize {
        self.rows.len() - 1
    }

    /// Live qudit labels in column order.
    pub fn labels(&self) -> &[QubitId] {
        &self.labels
    }

    pub fn contains(&self, q: QubitId) -> bool {
        self.index.contains_key(&q)
    }

    /// Rows of `C`, each of length `n + 1`.
    pub fn coefficient_rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn phase_vector(&self) -> &[u32] {
        &self.phase
    }

    /// Coefficients `(c_0, …, c_N)` of the qudit's formula.
    pub fn formula(&self, q: QubitId) -> Result<Vec<u32>, TableauError> {
        let col = self.col(q)?;
        Ok(self.rows.iter().map(|r| r[col]).collect())
    }

    fn col(&self, q: QubitId) -> Result<usize, TableauError> {
        self.index.get(&q).map(|&j| j + 1).ok_or(TableauError::UnknownQubit(q))
    }

    fn rebuild_index(&mut self) {
        self.index = self.labels.iter().enumerate().map(|(j, &q)| (q, j)).collect();
    }

    // ---- preparation ------------------------------------------------------

    /// Prepare `q` in `|0⟩` or `|+⟩`. If `q` is already live it must be
    /// disentangled from the rest; it is then discarded and re-prepared.
    pub fn prepare(&mut self, q: QubitId, prep: Prep) -> Result<(), TableauError> {
        if self.contains(q) {
            self.discard(q)?;
        }
        for row in self.rows.iter_mut() {
            row.push(0);
        }
        if prep == Prep::Plus {
            let mut row = vec![0; self.labels.len() + 2];
            *row.last_mut().unwrap() = 1;
            self.rows.push(row);
            self.phase.push(0);
        }
        self.labels.push(q);
        self.index.insert(q, self.labels.len() - 1);
        Ok(())
    }

    // ---- unitary gates: column operations ---------------------------------

    /// `X^e`: `f_q ← f_q + e`.
    pub fn apply_x(&mut self, q: QubitId, e: u32) -> Result<(), TableauError> {
        let col = self.col(q)?;
        let d = self.d;
        self.rows[0][col] = d.add(self.rows[0][col], d.reduce(e as u64));
        Ok(())
    }

    /// `Z^e`: `φ ← φ + e·f_q`.
    pub fn apply_z(&mut self, q: QubitId, e: u32) -> Result<(), TableauError> {
        let col = self.col(q)?;
        let d = self.d;
        let e = d.reduce(e as u64);
        if e == 0 {
            return Ok(());
        }
        for (p, row) in self.phase.iter_mut().zip(&self.rows) {
            *p = d.mul_add(*p, e, row[col]);
        }
        Ok(())
    }

    /// `Add^e` (CNOT for qubits): `f_target ← f_target + e·f_control`.
    pub fn apply_add(&mut self, control: QubitId, target: QubitId, e: u32) -> Result<(), TableauError> {
        if control == target {
            return Err(TableauError::SameQubit(control));
        }
        let c = self.col(control)?;
        let t = self.col(target)?;
        let d = self.d;
        let e = d.reduce(e as u64);
        for row in self.rows.iter_mut() {
            row[t] = d.mul_add(row[t], e, row[c]);
        }
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: QubitId, target: QubitId) -> Result<(), TableauError> {
        self.apply_add(control, target, 1)
    }

    // ---- elimination ------------------------------------------------------

    fn add_row_multiple(&mut self, dst: usize, src: usize, factor: u32) {
        if factor == 0 {
            return;
        }
        let d = self.d;
        let (a, b) = if dst < src {
            let (lo, hi) = self.rows.split_at_mut(src);
            (&mut lo[dst], &hi[0])
        } else {
            let (lo, hi) = self.rows.split_at_mut(dst);
            (&mut hi[0], &lo[src])
        };
        for (x, &y) in a.iter_mut().zip(b.iter()) {
            if y != 0 {
                *x = d.mul_add(*x, factor, y);
            }
        }
        self.phase[dst] = d.mul_add(self.phase[dst], factor, self.phase[src]);
    }

    fn scale_row(&mut self, r: usize, factor: u32) {
        let d = self.d;
        for x in self.rows[r].iter_mut() {
            *x = d.mul(*x, factor);
        }
        self.phase[r] = d.mul(self.phase[r], factor);
    }

    /// Reduced row-echelon form of the indeterminate rows, with row 0 reduced
    /// against every pivot. Row 0 is never added to another row, so `Q e0 = e0`.
    /// Columns are scanned left to right, except that `first` (if given) is
    /// tried before all others. Returns the pivot column of rows `1..=N`.
    fn rref(&mut self, first: Option<usize>) -> Vec<usize> {
        let n_cols = self.labels.len() + 1;
        let order: Vec<usize> = first.into_iter().chain((1..n_cols).filter(|&c| Some(c) != first)).collect();
        self.rref_in_order(&order)
    }

    fn rref_in_order(&mut self, order: &[usize]) -> Vec<usize> {
        let n_rows = self.rows.len();
        let d = self.d;
        let order = order.iter().copied();
        let mut pivots = Vec::with_capacity(n_rows - 1);
        let mut next = 1;
        for col in order {
            if next >= n_rows {
                break;
            }
            let Some(r) = (next..n_rows).find(|&r| self.rows[r][col] != 0) else {
                continue;
            };
            self.rows.swap(r, next);
            self.phase.swap(r, next);
            let inv = d.inv(self.rows[next][col]).expect("pivot is non-zero");
            if inv != 1 {
                self.scale_row(next, inv);
            }
            for other in 0..n_rows {
                if other != next {
                    let v = self.rows[other][col];
                    if v != 0 {
                        self.add_row_multiple(other, next, d.neg(v));
                    }
                }
            }
            pivots.push(col);
            next += 1;
        }
        pivots
    }

    /// Rank of `C` computed on a scratch copy.
    pub fn rank(&self) -> usize {
        let mut scratch = self.clone();
        // row 0 is independent of the rest exactly when column 0 is e0
        1 + scratch.rref(None).len()
    }

    /// Check the structural invariants: column 0 is `e0`, and `C` has full row rank.
    pub fn check_invariants(&self) -> Result<(), TableauError> {
        let n_cols = self.labels.len() + 1;
        if self.rows.is_empty() || self.phase.len() != self.rows.len() {
            return Err(TableauError::Invalid("row count mismatch".into()));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(TableauError::Invalid(format!("row {i} has wrong length")));
            }
            if row.iter().chain(std::iter::once(&self.phase[i])).any(|&v| v >= self.d.get()) {
                return Err(TableauError::Invalid(format!("row {i} is not reduced")));
            }
            if row[0] != u32::from(i == 0) {
                return Err(TableauError::Invalid("column 0 is not e0".into()));
            }
        }
        if self.rank() != self.rows.len() {
            return Err(TableauError::Invalid(format!(
                "rank {} but {} rows",
                self.rank(),
                self.rows.len()
            )));
        }
        Ok(())
    }

    #[inline]
    fn debug_check(&self) {
        #[cfg(debug_assertions)]
        if let Err(e) = self.check_invariants() {
            panic!("tableau invariant broken: {e}");
        }
    }

    /// Put the tableau in RREF with column `col` as a pivot if possible and
    /// return the row holding that pivot, if any.
    fn pivot_on(&mut self, col: usize) -> Option<usize> {
        self.rref(Some(col));
        (1..self.rows.len()).find(|&r| self.rows[r][col] != 0)
    }

    fn remove_row(&mut self, r: usize) {
        self.rows.remove(r);
        self.phase.remove(r);
    }

    fn remove_column(&mut self, col: usize) {
        for row in self.rows.iter_mut() {
            row.remove(col);
        }
        self.labels.remove(col - 1);
        self.rebuild_index();
    }

    // ---- measurements -----------------------------------------------------

    fn measure_x_inner(&mut self, q: QubitId, src: &mut OutcomeSource) -> Result<XMeasureEffect, TableauError> {
        let col = self.col(q)?;
        let d = self.d;
        let g = self.pivot_on(col);
        if let Some(g) = g {
            let isolated = self.rows[g].iter().enumerate().all(|(j, &v)| j == col || v == 0);
            if isolated {
                // |f_q⟩ = Σ_x ω^{p_g x}|x⟩ is the X eigenstate with eigenvalue ω^{-p_g}
                return Ok(XMeasureEffect {
                    measurement: Measurement { outcome: d.neg(self.phase[g]), random: false },
                    old_row: Some(g),
                    new_row: None,
                });
            }
        }
        let s = src.draw(d)?;
        let n_cols = self.labels.len() + 1;
        let mut row = vec![0; n_cols];
        row[col] = 1;
        self.rows.push(row);
        self.phase.push(d.neg(s));
        let new_row = self.rows.len() - 1;
        if let Some(g) = g {
            self.rows[g][col] = d.sub(self.rows[g][col], 1);
            self.phase[g] = d.add(self.phase[g], s);
        }
        self.debug_check();
        Ok(XMeasureEffect { measurement: Measurement { outcome: s, random: true }, old_row: g, new_row: Some(new_row) })
    }

    /// Measure `X_d` on `q`. The outcome `s` means eigenvalue `ω^s`.
    pub fn measure_x(&mut self, q: QubitId, src: &mut OutcomeSource) -> Result<Measurement, TableauError> {
        Ok(self.measure_x_inner(q, src)?.measurement)
    }

    /// Measure `Z_d` on `q`; the outcome is the standard-basis value.
    pub fn measure_z(&mut self, q: QubitId, src: &mut OutcomeSource) -> Result<Measurement, TableauError> {
        let col = self.col(q)?;
        let d = self.d;
        let Some(g) = self.pivot_on(col) else {
            return Ok(Measurement { outcome: self.rows[0][col], random: false });
        };
        let b = src.draw(d)?;
        // Substitute a_g := b. Column col is e_g, so adding r·(b e0 − e_g) to
        // every column with r ≠ 0 in row g clears that row.
        let n_cols = self.labels.len() + 1;
        for j in 0..n_cols {
            let r = self.rows[g][j];
            if r != 0 {
                self.rows[0][j] = d.mul_add(self.rows[0][j], r, b);
                self.rows[g][j] = 0;
            }
        }
        let r = self.phase[g];
        self.phase[0] = d.mul_add(self.phase[0], r, b);
        self.phase[g] = 0;
        self.remove_row(g);
        self.debug_check();
        Ok(Measurement { outcome: b, random: true })
    }

    /// Z measurement that also removes the qudit. Rows left empty are dropped.
    pub fn measure_z_destructive(&mut self, q: QubitId, src: &mut OutcomeSource) -> Result<Measurement, TableauError> {
        let m = self.measure_z(q, src)?;
        let col = self.col(q)?;
        self.remove_column(col);
        self.drop_empty_rows();
        self.debug_check();
        Ok(m)
    }

    fn drop_empty_rows(&mut self) {
        let mut r = 1;
        while r < self.rows.len() {
            if self.rows[r].iter().all(|&v| v == 0) {
                debug_assert_eq!(self.phase[r], 0, "an empty row with a phase would mean a zero state");
                self.remove_row(r);
            } else {
                r += 1;
            }
        }
    }

    /// Whether `q` factors out of the state.
    pub fn is_disentangled(&self, q: QubitId) -> Result<bool, TableauError> {
        let mut scratch = self.clone();
        let col = scratch.col(q)?;
        Ok(match scratch.pivot_on(col) {
            None => true,
            Some(g) => scratch.rows[g].iter().enumerate().all(|(j, &v)| j == col || v == 0),
        })
    }

    /// Remove a qudit that is in a product state with the rest.
    pub fn discard(&mut self, q: QubitId) -> Result<(), TableauError> {
        let col = self.col(q)?;
        match self.pivot_on(col) {
            None => {}
            Some(g) => {
                if self.rows[g].iter().enumerate().any(|(j, &v)| j != col && v != 0) {
                    return Err(TableauError::Entangled(q));
                }
                self.remove_row(g);
            }
        }
        self.remove_column(col);
        self.debug_check();
        Ok(())
    }

    // ---- phase corrections ------------------------------------------------

    /// Exponents `e` (per qudit) such that applying `Z^e` adds `-v` to the
    /// indeterminate part of the phase vector. Only RREF pivot columns are
    /// used. `v` is indexed like the rows; `v[0]` is ignored.
    pub fn phase_correction_for(&self, v: &[u32]) -> Vec<(QubitId, u32)> {
        self.correction_for(v)
    }

    fn correction_for(&self, v: &[u32]) -> Vec<(QubitId, u32)> {
        let mut scratch = self.clone();
        scratch.phase = v.to_vec();
        // pivots on the smallest qubit label available
        let mut order: Vec<usize> = (1..=self.labels.len()).collect();
        order.sort_by_key(|&c| self.labels[c - 1]);
        let pivots = scratch.rref_in_order(&order);
        let d = self.d;
        let mut out: Vec<(QubitId, u32)> = pivots
            .iter()
            .enumerate()
            .filter_map(|(i, &col)| {
                let e = d.neg(scratch.phase[i + 1]);
                (e != 0).then(|| (scratch.labels[col - 1], e))
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// A set of `Z^e` gates that removes every relative phase.
    pub fn find_phase_correction(&self) -> Vec<(QubitId, u32)> {
        self.correction_for(&self.phase)
    }

    pub fn apply_corrections(&mut self, corrections: &[(QubitId, u32)]) -> Result<(), TableauError> {
        for &(q, e) in corrections {
            self.apply_z(q, e)?;
        }
        Ok(())
    }

    /// Whether every relative phase is zero (`p_0`, a global phase, is ignored).
    pub fn is_phase_free(&self) -> bool {
        self.phase[1..].iter().all(|&v| v == 0)
    }

    /// Drop the global phase term `p_0`.
    pub fn clear_global_phase(&mut self) {
        self.phase[0] = 0;
    }

    /// Measure `X` on `q` and cancel the phase that measurement induced,
    /// leaving `q` in `|+⟩` (or removing it). The correction set comes from
    /// the RREF pivot columns and is not claimed to be minimal.
    pub fn terminate(
        &mut self,
        q: QubitId,
        src: &mut OutcomeSource,
        mode: TerminateMode,
    ) -> Result<TerminationRecord, TableauError> {
        let effect = self.measure_x_inner(q, src)?;
        let d = self.d;
        let mut induced = vec![0; self.rows.len()];
        match (effect.old_row, effect.new_row) {
            (Some(g), None) => induced[g] = self.phase[g],
            (old, Some(new)) => {
                let s = effect.measurement.outcome;
                if let Some(g) = old {
                    induced[g] = s;
                }
                induced[new] = d.neg(s);
            }
            (None, None) => unreachable!("a measurement either isolates or adds a row"),
        }
        let corrections = if induced.iter().any(|&v| v != 0) { self.correction_for(&induced) } else { Vec::new() };
        self.apply_corrections(&corrections)?;
        if mode == TerminateMode::Remove {
            self.discard(q)?;
        }
        Ok(TerminationRecord { measurement: effect.measurement, corrections })
    }

    // ---- canonical form and expansion -------------------------------------

    /// Canonical representative of the state up to global phase: columns
    /// ordered by label, RREF with leftmost pivots, `p_0 = 0`. Two tableaus
    /// over the same labels describe the same state (up to a global phase)
    /// iff their canonical forms are equal.
    pub fn canonicalize(&self) -> ParityTableau {
        let mut order: Vec<usize> = (0..self.labels.len()).collect();
        order.sort_by_key(|&j| self.labels[j]);
        let rows = self
            .rows
            .iter()
            .map(|row| std::iter::once(row[0]).chain(order.iter().map(|&j| row[j + 1])).collect())
            .collect();
        let labels: Vec<QubitId> = order.iter().map(|&j| self.labels[j]).collect();
        let mut t = ParityTableau { d: self.d, labels, index: HashMap::new(), rows, phase: self.phase.clone() };
        t.rebuild_index();
        t.rref(None);
        t.phase[0] = 0;
        t
    }

    /// Exact amplitudes over the live qudits in ascending label order
    /// (first label = most significant digit).
    pub fn expand_amplitudes(&self, cap: usize) -> Result<DenseState, TableauError> {
        let d = self.d.get();
        let n_rows = self.rows.len() - 1;
        let too_large = || TableauError::ExpansionTooLarge { d, rows: n_rows, cap };
        let terms = (d as usize).checked_pow(n_rows as u32).ok_or_else(too_large)?;
        if terms > cap {
            return Err(too_large());
        }
        let n = self.labels.len();
        let dim = (d as usize).checked_pow(n as u32).ok_or_else(too_large)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&j| self.labels[j]);
        let mut qubits = self.labels.clone();
        qubits.sort_unstable();

        let m = self.d;
        let norm = 1.0 / (terms as f64).sqrt();
        let omega = std::f64::consts::TAU / d as f64;
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        let mut x = vec![0u32; n_rows];
        for _ in 0..terms {
            let mut index = 0usize;
            for &j in &order {
                let col = j + 1;
                let mut v = self.rows[0][col];
                for (h, &xh) in x.iter().enumerate() {
                    v = m.mul_add(v, self.rows[h + 1][col], xh);
                }
                index = index * d as usize + v as usize;
            }
            let mut phi = self.phase[0];
            for (h, &xh) in x.iter().enumerate() {
                phi = m.mul_add(phi, self.phase[h + 1], xh);
            }
            amps[index] += Complex64::from_polar(norm, omega * phi as f64);
            // next assignment
            for digit in x.iter_mut() {
                *digit += 1;
                if *digit < d {
                    break;
                }
                *digit = 0;
            }
        }
        Ok(DenseState::from_amplitudes(self.d, qubits, amps).expect("dimension matches"))
    }

    // ---- serialization ----------------------------------------------------

    pub fn to_json(&self) -> TableauJson {
        TableauJson { d: self.d, labels: self.labels.clone(), c: self.rows.clone(), p: self.phase.clone() }
    }

    pub fn from_json(json: TableauJson) -> Result<Self, TableauError> {
        let mut t = ParityTableau { d: json.d, labels: json.labels, index: HashMap::new(), rows: json.c, phase: json.p };
        t.rebuild_index();
        if t.index.len() != t.labels.len() {
            return Err(TableauError::Invalid("duplicate labels".into()));
        }
        t.check_invariants()?;
        Ok(t)
    }
}

/// Serialized tableau: `C` as row-major integer arrays.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableauJson {
    pub d: Modulus,
    pub labels: Vec<QubitId>,
    pub c: Vec<Vec<u32>>,
    pub p: Vec<u32>,
}

impl Serialize for ParityTableau {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ParityTableau {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let json = TableauJson::deserialize(de)?;
        ParityTableau::from_json(json).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests;
