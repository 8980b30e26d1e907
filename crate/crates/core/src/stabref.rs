//! Reference qubit stabilizer simulator with destabilizer rows
//! (Aaronson–Gottesman), plus the engine comparison benchmark.
//!
//! Rows `0..n` are destabilizers, `n..2n` stabilizers and row `2n` is
//! scratch space. Each row stores its X and Z bits packed into `u64` words.
//! A qubit with both bits set stands for `Y`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::time::Instant;

use thiserror::Error;

use crate::circuit::{Engine, ExecError, OpKind, QlncCircuit, Run};
use crate::field::Modulus;
use crate::outcome::{OutcomeError, OutcomeSource};
use crate::tableau::{Measurement, ParityTableau, Prep, QubitId, TerminationRecord};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StabError {
    #[error("the stabilizer reference only supports d = 2, got d = {0}")]
    NotQubit(u32),
    #[error("unknown qubit {0}")]
    UnknownQubit(QubitId),
    #[error("qubit {0} appears twice")]
    DuplicateQubit(QubitId),
    #[error("benchmark size {0} exceeds the memory guard of {MAX_BENCH_QUBITS} qubits")]
    TooLarge(usize),
    #[error("benchmark needs at least 4 qubits, got {0}")]
    TooSmall(usize),
    #[error(transparent)]
    Outcome(#[from] OutcomeError),
}

/// A Pauli string with a sign: `(-1)^sign · ⊗ P_j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pauli {
    pub x: Vec<bool>,
    pub z: Vec<bool>,
    pub sign: bool,
}

#[derive(Clone, Debug)]
pub struct StabilizerTableau {
    n: usize,
    words: usize,
    xs: Vec<u64>,
    zs: Vec<u64>,
    r: Vec<bool>,
    labels: Vec<QubitId>,
    index: HashMap<QubitId, usize>,
    live: Vec<bool>,
    /// 64-bit words read by measurements so far (row scans plus rowsums).
    word_ops: u64,
}

/// Exponent of `i` picked up when multiplying single-qubit Paulis
/// `(x1, z1) · (x2, z2)`.
pub fn g(x1: bool, z1: bool, x2: bool, z2: bool) -> i32 {
    let (x2, z2) = (x2 as i32, z2 as i32);
    match (x1, z1) {
        (false, false) => 0,
        (true, true) => z2 - x2,
        (true, false) => z2 * (2 * x2 - 1),
        (false, true) => x2 * (1 - 2 * z2),
    }
}

/// Multiply `(x1, z1) *= (x2, z2)` word-wise and return the exponent of `i`
/// (mod 4) picked up, using two popcount accumulators.
fn mul_words(x1: &mut [u64], z1: &mut [u64], x2: &[u64], z2: &[u64]) -> u32 {
    let mut cnt1 = 0u64;
    let mut cnt2 = 0u64;
    for w in 0..x1.len() {
        let (a_x, a_z, b_x, b_z) = (x1[w], z1[w], x2[w], z2[w]);
        let new_x = a_x ^ b_x;
        let new_z = a_z ^ b_z;
        let x1z2 = a_x & b_z;
        let anti = (b_x & a_z) ^ x1z2;
        cnt2 ^= (cnt1 ^ new_x ^ new_z ^ x1z2) & anti;
        cnt1 ^= anti;
        x1[w] = new_x;
        z1[w] = new_z;
    }
    (cnt1.count_ones() + 2 * cnt2.count_ones()) & 3
}

impl StabilizerTableau {
    /// All qubits in `|0⟩`, none of them live yet.
    pub fn new(labels: &[QubitId]) -> Result<Self, StabError> {
        let n = labels.len();
        let words = n.div_ceil(64).max(1);
        let rows = 2 * n + 1;
        let mut t = StabilizerTableau {
            n,
            words,
            xs: vec![0; rows * words],
            zs: vec![0; rows * words],
            r: vec![false; rows],
            labels: labels.to_vec(),
            index: HashMap::new(),
            live: vec![false; n],
            word_ops: 0,
        };
        for (i, &q) in labels.iter().enumerate() {
            if t.index.insert(q, i).is_some() {
                return Err(StabError::DuplicateQubit(q));
            }
            t.xs[i * words + i / 64] |= 1 << (i % 64);
            t.zs[(n + i) * words + i / 64] |= 1 << (i % 64);
        }
        Ok(t)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    /// Words touched by measurements since construction.
    pub fn word_ops(&self) -> u64 {
        self.word_ops
    }

    pub fn live_labels(&self) -> Vec<QubitId> {
        let mut v: Vec<QubitId> = (0..self.n).filter(|&i| self.live[i]).map(|i| self.labels[i]).collect();
        v.sort_unstable();
        v
    }

    fn idx(&self, q: QubitId) -> Result<usize, StabError> {
        self.index.get(&q).copied().ok_or(StabError::UnknownQubit(q))
    }

    #[inline]
    fn bit(&self, bits: &[u64], row: usize, q: usize) -> bool {
        bits[row * self.words + q / 64] >> (q % 64) & 1 == 1
    }

    pub fn h(&mut self, q: usize) {
        let (w, m) = (q / 64, 1u64 << (q % 64));
        for row in 0..2 * self.n {
            let i = row * self.words + w;
            let (x, z) = (self.xs[i] & m, self.zs[i] & m);
            if x != 0 && z != 0 {
                self.r[row] ^= true;
            }
            self.xs[i] = (self.xs[i] & !m) | z;
            self.zs[i] = (self.zs[i] & !m) | x;
        }
    }

    pub fn cnot(&mut self, a: usize, b: usize) {
        for row in 0..2 * self.n {
            let (xa, za) = (self.bit(&self.xs, row, a), self.bit(&self.zs, row, a));
            let (xb, zb) = (self.bit(&self.xs, row, b), self.bit(&self.zs, row, b));
            if xa && zb && (xb == za) {
                self.r[row] ^= true;
            }
            if xa {
                self.xs[row * self.words + b / 64] ^= 1 << (b % 64);
            }
            if zb {
                self.zs[row * self.words + a / 64] ^= 1 << (a % 64);
            }
        }
    }

    pub fn x(&mut self, q: usize) {
        for row in 0..2 * self.n {
            if self.bit(&self.zs, row, q) {
                self.r[row] ^= true;
            }
        }
    }

    pub fn z(&mut self, q: usize) {
        for row in 0..2 * self.n {
            if self.bit(&self.xs, row, q) {
                self.r[row] ^= true;
            }
        }
    }

    /// Row `h` ← row `h` · row `i`.
    fn rowsum(&mut self, h: usize, i: usize) {
        let w = self.words;
        let (hs, is) = (h * w, i * w);
        let (xh, xi) = split_pair(&mut self.xs, hs, is, w);
        let (zh, zi) = split_pair(&mut self.zs, hs, is, w);
        let e = mul_words(xh, zh, xi, zi);
        self.word_ops += 4 * w as u64;
        let total = (2 * self.r[h] as u32 + 2 * self.r[i] as u32 + e) & 3;
        self.r[h] = total == 2;
    }

    fn copy_row(&mut self, dst: usize, src: usize) {
        let w = self.words;
        self.xs.copy_within(src * w..(src + 1) * w, dst * w);
        self.zs.copy_within(src * w..(src + 1) * w, dst * w);
        self.r[dst] = self.r[src];
    }

    fn clear_row(&mut self, row: usize) {
        let w = self.words;
        self.xs[row * w..(row + 1) * w].fill(0);
        self.zs[row * w..(row + 1) * w].fill(0);
        self.r[row] = false;
    }

    /// Z measurement by index. Returns the stabilizer row that now holds
    /// `±Z_q` when the outcome was random.
    fn measure_z_idx(&mut self, q: usize, src: &mut OutcomeSource) -> Result<(Measurement, Option<usize>), StabError> {
        let n = self.n;
        self.word_ops += 2 * n as u64;
        if let Some(p) = (n..2 * n).find(|&p| self.bit(&self.xs, p, q)) {
            let s = src.draw(Modulus::QUBIT)?;
            for i in 0..2 * n {
                if i != p && self.bit(&self.xs, i, q) {
                    self.rowsum(i, p);
                }
            }
            self.copy_row(p - n, p);
            self.clear_row(p);
            self.zs[p * self.words + q / 64] |= 1 << (q % 64);
            self.r[p] = s == 1;
            Ok((Measurement { outcome: s, random: true }, Some(p)))
        } else {
            let scratch = 2 * n;
            self.clear_row(scratch);
            for i in 0..n {
                if self.bit(&self.xs, i, q) {
                    self.rowsum(scratch, i + n);
                }
            }
            Ok((Measurement { outcome: self.r[scratch] as u32, random: false }, None))
        }
    }

    pub fn measure_z(&mut self, q: QubitId, src: &mut OutcomeSource) -> Result<Measurement, StabError> {
        let i = self.idx(q)?;
        Ok(self.measure_z_idx(i, src)?.0)
    }

    pub fn measure_x(&mut self, q: QubitId, src: &mut OutcomeSource) -> Result<Measurement, StabError> {
        let i = self.idx(q)?;
        self.h(i);
        let m = self.measure_z_idx(i, src)?.0;
        self.h(i);
        Ok(m)
    }

    /// X measurement, then return the qubit to `|+⟩`: a random outcome just
    /// fixes the sign of the new `X_q` stabilizer, a deterministic `-1`
    /// needs a local `Z`.
    pub fn terminate(&mut self, q: QubitId, src: &mut OutcomeSource) -> Result<Measurement, StabError> {
        let i = self.idx(q)?;
        self.h(i);
        let (m, row) = self.measure_z_idx(i, src)?;
        match row {
            Some(p) => self.r[p] = false,
            None if m.outcome == 1 => self.x(i),
            None => {}
        }
        self.h(i);
        Ok(m)
    }

    pub fn prepare(&mut self, q: QubitId, prep: Prep) -> Result<(), StabError> {
        let i = self.idx(q)?;
        if self.live[i] {
            // reset: the qubit is assumed to be disentangled
            let (m, _) = self.measure_z_idx(i, &mut OutcomeSource::constant(0))?;
            if m.outcome == 1 {
                self.x(i);
            }
        }
        self.live[i] = true;
        if prep == Prep::Plus {
            self.h(i);
        }
        Ok(())
    }

    /// `+X` on `xs` times `Z` on `zs`, as a Pauli over this register.
    pub fn pauli_on(&self, xs: &[QubitId], zs: &[QubitId]) -> Result<Pauli, StabError> {
        let mut p = Pauli { x: vec![false; self.n], z: vec![false; self.n], sign: false };
        for &q in xs {
            p.x[self.idx(q)?] ^= true;
        }
        for &q in zs {
            p.z[self.idx(q)?] ^= true;
        }
        Ok(p)
    }

    /// Sign of `P` if `±P` is in the stabilizer group, `None` otherwise.
    pub fn expectation(&mut self, p: &Pauli) -> Option<bool> {
        let n = self.n;
        let w = self.words;
        let mut px = vec![0u64; w];
        let mut pz = vec![0u64; w];
        for j in 0..n {
            if p.x[j] {
                px[j / 64] |= 1 << (j % 64);
            }
            if p.z[j] {
                pz[j / 64] |= 1 << (j % 64);
            }
        }
        let anticommutes = |xs: &[u64], zs: &[u64], row: usize| -> bool {
            let mut acc = 0u32;
            for k in 0..w {
                acc += ((xs[row * w + k] & pz[k]) ^ (zs[row * w + k] & px[k])).count_ones();
            }
            acc % 2 == 1
        };
        if (n..2 * n).any(|row| anticommutes(&self.xs, &self.zs, row)) {
            return None;
        }
        let scratch = 2 * n;
        self.clear_row(scratch);
        for i in 0..n {
            if anticommutes(&self.xs, &self.zs, i) {
                self.rowsum(scratch, i + n);
            }
        }
        let same = self.xs[scratch * w..(scratch + 1) * w] == px[..] && self.zs[scratch * w..(scratch + 1) * w] == pz[..];
        debug_assert!(same, "a commuting Pauli must be generated by the stabilizers");
        same.then(|| self.r[scratch] ^ p.sign)
    }
}

fn split_pair(v: &mut [u64], a: usize, b: usize, len: usize) -> (&mut [u64], &[u64]) {
    if a < b {
        let (lo, hi) = v.split_at_mut(b);
        (&mut lo[a..a + len], &hi[..len])
    } else {
        let (lo, hi) = v.split_at_mut(a);
        (&mut hi[..len], &lo[b..b + len])
    }
}

impl Engine for StabilizerTableau {
    fn modulus(&self) -> Modulus {
        Modulus::QUBIT
    }
    fn prepare(&mut self, q: QubitId, prep: Prep) -> Result<(), ExecError> {
        Ok(StabilizerTableau::prepare(self, q, prep)?)
    }
    fn apply_x(&mut self, q: QubitId, e: u32) -> Result<(), ExecError> {
        let i = self.idx(q)?;
        if e % 2 == 1 {
            self.x(i);
        }
        Ok(())
    }
    fn apply_z(&mut self, q: QubitId, e: u32) -> Result<(), ExecError> {
        let i = self.idx(q)?;
        if e % 2 == 1 {
            self.z(i);
        }
        Ok(())
    }
    fn apply_add(&mut self, control: QubitId, target: QubitId, weight: u32) -> Result<(), ExecError> {
        let (a, b) = (self.idx(control)?, self.idx(target)?);
        if weight % 2 == 1 {
            self.cnot(a, b);
        }
        Ok(())
    }
    fn measure_x(&mut self, q: QubitId, src: &mut OutcomeSource) -> Result<Measurement, ExecError> {
        Ok(StabilizerTableau::measure_x(self, q, src)?)
    }
    fn measure_z(&mut self, q: QubitId, src: &mut OutcomeSource) -> Result<Measurement, ExecError> {
        Ok(StabilizerTableau::measure_z(self, q, src)?)
    }
    fn terminate(&mut self, q: QubitId, src: &mut OutcomeSource) -> Result<TerminationRecord, ExecError> {
        let measurement = StabilizerTableau::terminate(self, q, src)?;
        Ok(TerminationRecord { measurement, corrections: Vec::new() })
    }
}

/// Execute a qubit circuit on the stabilizer reference.
pub fn stab_execute(c: &QlncCircuit, src: &mut OutcomeSource) -> Result<Run<StabilizerTableau>, ExecError> {
    if c.d != Modulus::QUBIT {
        return Err(StabError::NotQubit(c.d.get()).into());
    }
    let tab = StabilizerTableau::new(&c.qubits())?;
    c.run(tab, src)
}

/// Null space of a GF(2) matrix given as rows of bits over `cols` columns.
fn gf2_null_space(rows: &[Vec<bool>], cols: usize) -> Vec<Vec<bool>> {
    let mut m: Vec<Vec<bool>> = rows.to_vec();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| m[i][c]) else { continue };
        m.swap(r, p);
        for i in 0..m.len() {
            if i != r && m[i][c] {
                let pivot_row = m[r].clone();
                for (a, b) in m[i].iter_mut().zip(pivot_row) {
                    *a ^= b;
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivot_cols.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![false; cols];
            v[f] = true;
            for (i, &pc) in pivot_cols.iter().enumerate() {
                v[pc] = m[i][f];
            }
            v
        })
        .collect()
}

/// Check that a stabilizer state equals the state of a qubit parity tableau
/// by testing that each generator of the tableau state stabilizes it with
/// the right sign. Row `h ≥ 1` gives `(-1)^{p_h} X^{row h}`; each null vector
/// `z` of the indeterminate rows gives `(-1)^{z·c_0} Z^z`.
pub fn agrees_with_tableau(stab: &mut StabilizerTableau, t: &ParityTableau) -> Result<bool, StabError> {
    if t.modulus() != Modulus::QUBIT {
        return Err(StabError::NotQubit(t.modulus().get()));
    }
    let mut labels = t.labels().to_vec();
    labels.sort_unstable();
    if labels != stab.live_labels() {
        return Ok(false);
    }
    let n = stab.n;
    let cols: Vec<usize> = t.labels().iter().map(|&q| stab.idx(q)).collect::<Result<_, _>>()?;
    let rows = t.coefficient_rows();
    let phase = t.phase_vector();
    let mut generators = Vec::new();
    for (h, row) in rows.iter().enumerate().skip(1) {
        let mut x = vec![false; n];
        for (j, &c) in cols.iter().enumerate() {
            x[c] = row[j + 1] == 1;
        }
        generators.push(Pauli { x, z: vec![false; n], sign: phase[h] == 1 });
    }
    let ind: Vec<Vec<bool>> = rows[1..].iter().map(|r| r[1..].iter().map(|&v| v == 1).collect()).collect();
    for v in gf2_null_space(&ind, cols.len()) {
        let mut z = vec![false; n];
        let mut sign = false;
        for (j, &c) in cols.iter().enumerate() {
            if v[j] {
                z[c] = true;
                sign ^= rows[0][j + 1] == 1;
            }
        }
        generators.push(Pauli { x: vec![false; n], z, sign });
    }
    Ok(generators.iter().all(|p| stab.expectation(p) == Some(false)))
}

// ---- benchmark -------------------------------------------------------------

/// Largest register the benchmark will allocate (the stabilizer tableau
/// needs about `n²/2` bytes).
pub const MAX_BENCH_QUBITS: usize = 16384;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchRow {
    pub engine: &'static str,
    pub n: usize,
    /// Indeterminates of the parity tableau for the instance.
    pub big_n: usize,
    pub op_counts: String,
    /// Mean wall time per measurement (best of the repetitions).
    pub wall_ns: u128,
    /// Mean words read per measurement (stabilizer engine only).
    pub word_ops: Option<u64>,
}

/// GHZ state over a chain of `n` qubits: one `|+⟩`, then CNOTs along the path.
pub fn ghz_chain(n: usize) -> QlncCircuit {
    let mut c = QlncCircuit::new(Modulus::QUBIT);
    c.prep(1, Prep::Plus);
    for q in 2..=n as QubitId {
        c.prep(q, Prep::Zero);
    }
    for q in 1..n as QubitId {
        c.cnot(q, q, q + 1, 1);
    }
    c
}

/// Time Z measurements of interior relays of a GHZ chain on both engines.
/// The number of indeterminates stays 1 while `n` grows. Each measurement
/// runs on a fresh clone of the prepared state; only the measurement itself
/// is timed.
pub fn bench_compare(sizes: &[usize], relays: usize, reps: usize) -> Result<Vec<BenchRow>, ExecError> {
    let mut out = Vec::new();
    for &n in sizes {
        if n > MAX_BENCH_QUBITS {
            return Err(StabError::TooLarge(n).into());
        }
        if n < 4 {
            return Err(StabError::TooSmall(n).into());
        }
        let c = ghz_chain(n);
        let cnots = c.ops.iter().filter(|op| matches!(op.kind, OpKind::Cnot { .. })).count();
        let targets: Vec<QubitId> =
            (0..relays).map(|i| (2 + i * (n - 3) / relays.max(1)) as QubitId).collect();
        let op_counts = format!("prep={n};cnot={cnots};measure_z={}", targets.len());

        let tab = c.execute(&mut OutcomeSource::constant(0))?.state;
        let big_n = tab.num_indeterminates();
        let tab_ns = time_measurements(reps, &targets, || tab.clone(), |t, q| {
            t.measure_z(q, &mut OutcomeSource::constant(0)).map(|_| ()).map_err(ExecError::from)
        })?;
        out.push(BenchRow { engine: "tableau", n, big_n, op_counts: op_counts.clone(), wall_ns: tab_ns, word_ops: None });

        let stab = stab_execute(&c, &mut OutcomeSource::constant(0))?.state;
        let stab_ns = time_measurements(reps, &targets, || stab.clone(), |s, q| {
            s.measure_z(q, &mut OutcomeSource::constant(0)).map(|_| ()).map_err(ExecError::from)
        })?;
        let mut words = 0;
        for &q in &targets {
            let mut s = stab.clone();
            let before = s.word_ops();
            s.measure_z(q, &mut OutcomeSource::constant(0))?;
            words += s.word_ops() - before;
        }
        let word_ops = words / targets.len().max(1) as u64;
        let op_counts = format!("{op_counts};word_ops={word_ops}");
        out.push(BenchRow { engine: "stabilizer", n, big_n, op_counts, wall_ns: stab_ns, word_ops: Some(word_ops) });
    }
    Ok(out)
}

fn time_measurements<S>(
    reps: usize,
    targets: &[QubitId],
    fresh: impl Fn() -> S,
    mut measure: impl FnMut(&mut S, QubitId) -> Result<(), ExecError>,
) -> Result<u128, ExecError> {
    let mut best = u128::MAX;
    for _ in 0..reps.max(1) {
        let mut total = 0u128;
        for &q in targets {
            let mut s = fresh();
            let start = Instant::now();
            measure(&mut s, q)?;
            total += start.elapsed().as_nanos();
            drop(s);
        }
        best = best.min(total / targets.len().max(1) as u128);
    }
    Ok(best)
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from("engine,n,N,op_counts,wall_ns\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{}", r.engine, r.n, r.big_n, r.op_counts, r.wall_ns);
    }
    s
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.max(1.0).ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
