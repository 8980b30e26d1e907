//! Dense state-vector simulator used as ground truth.
//!
//! Amplitudes live in a flat array indexed by base-`d` digit strings; the
//! first entry of `qubits` is the most significant digit.

use num_complex::Complex64;
use thiserror::Error;

use crate::circuit::{Engine, ExecError, QlncCircuit, Run};
use crate::field::Modulus;
use crate::outcome::{OutcomeError, OutcomeSource};
use crate::tableau::{Measurement, Prep, QubitId, TerminationRecord};

/// Largest state the oracle will hold: `d^n ≤ 2^22`.
pub const MAX_DENSE_DIM: usize = 1 << 22;

/// Probabilities below this are treated as zero.
pub const PROB_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("state too large: {d}^{n} amplitudes exceeds the dense limit")]
    TooLarge { d: u32, n: usize },
    #[error("forced outcome {outcome} on qubit {qubit} has probability zero")]
    ZeroProbability { qubit: QubitId, outcome: u32 },
    #[error("unknown qubit {0}")]
    UnknownQubit(QubitId),
    #[error("qubit {0} appears twice")]
    DuplicateQubit(QubitId),
    #[error("qubit {0} is entangled with the rest of the state")]
    Entangled(QubitId),
    #[error("groups overlap on qubit {0}")]
    OverlappingGroups(QubitId),
    #[error("amplitude vector has length {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("control and target are both qubit {0}")]
    SameQubit(QubitId),
    #[error(transparent)]
    Outcome(#[from] OutcomeError),
}

#[derive(Clone, Debug)]
pub struct DenseState {
    d: Modulus,
    qubits: Vec<QubitId>,
    amps: Vec<Complex64>,
}

fn omega_pow(d: u32, k: u32) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::TAU * (k % d) as f64 / d as f64)
}

impl DenseState {
    /// Zero qudits, amplitude 1.
    pub fn empty(d: Modulus) -> Self {
        DenseState { d, qubits: Vec::new(), amps: vec![Complex64::new(1.0, 0.0)] }
    }

    pub fn from_amplitudes(d: Modulus, qubits: Vec<QubitId>, amps: Vec<Complex64>) -> Result<Self, OracleError> {
        let expected = dim(d, qubits.len())?;
        if amps.len() != expected {
            return Err(OracleError::DimensionMismatch { got: amps.len(), expected });
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(&q) = qubits.iter().find(|&&q| !seen.insert(q)) {
            return Err(OracleError::DuplicateQubit(q));
        }
        Ok(DenseState { d, qubits, amps })
    }

    /// Product of GHZ states, one per group, over the qubits of `groups` in
    /// ascending label order. A two-qubit group is `|Φ+_d⟩`.
    pub fn ghz_product(d: Modulus, groups: &[Vec<QubitId>]) -> Result<Self, OracleError> {
        let mut qubits: Vec<QubitId> = groups.iter().flatten().copied().collect();
        qubits.sort_unstable();
        check_disjoint(groups)?;
        let n = qubits.len();
        let size = dim(d, n)?;
        let dd = d.get() as usize;
        let pos: Vec<Vec<usize>> =
            groups.iter().map(|g| g.iter().map(|q| qubits.binary_search(q).unwrap()).collect()).collect();
        let amp = Complex64::new((dd as f64).powi(groups.len() as i32).sqrt().recip(), 0.0);
        let mut amps = vec![Complex64::new(0.0, 0.0); size];
        let mut choice = vec![0usize; groups.len()];
        loop {
            let mut digits = vec![0usize; n];
            for (g, &v) in choice.iter().enumerate() {
                for &p in &pos[g] {
                    digits[p] = v;
                }
            }
            amps[digits.iter().fold(0, |acc, &x| acc * dd + x)] = amp;
            let mut i = 0;
            while i < choice.len() {
                choice[i] += 1;
                if choice[i] < dd {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
            if i == choice.len() {
                break;
            }
        }
        Ok(DenseState { d, qubits, amps })
    }

    pub fn modulus(&self) -> Modulus {
        self.d
    }

    pub fn qubits(&self) -> &[QubitId] {
        &self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn position(&self, q: QubitId) -> Result<usize, OracleError> {
        self.qubits.iter().position(|&x| x == q).ok_or(OracleError::UnknownQubit(q))
    }

    fn stride(&self, pos: usize) -> usize {
        (self.d.get() as usize).pow((self.qubits.len() - 1 - pos) as u32)
    }

    fn digit(&self, index: usize, stride: usize) -> usize {
        (index / stride) % self.d.get() as usize
    }

    /// Same state with qubits in ascending label order.
    pub fn sorted(&self) -> DenseState {
        let mut order = self.qubits.clone();
        order.sort_unstable();
        self.permuted(&order).expect("same qubit set")
    }

    /// Same state with qubits listed in `order`.
    pub fn permuted(&self, order: &[QubitId]) -> Result<DenseState, OracleError> {
        if order.len() != self.qubits.len() {
            return Err(OracleError::DimensionMismatch { got: order.len(), expected: self.qubits.len() });
        }
        let strides: Vec<usize> =
            order.iter().map(|&q| self.position(q).map(|p| self.stride(p))).collect::<Result<_, _>>()?;
        let dd = self.d.get() as usize;
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (new_index, slot) in amps.iter_mut().enumerate() {
            let mut rest = new_index;
            let mut old = 0;
            for s in strides.iter().rev() {
                old += (rest % dd) * s;
                rest /= dd;
            }
            *slot = self.amps[old];
        }
        Ok(DenseState { d: self.d, qubits: order.to_vec(), amps })
    }

    /// Tensor a fresh qudit onto the end of the register.
    pub fn prepare(&mut self, q: QubitId, prep: Prep) -> Result<(), OracleError> {
        if self.qubits.contains(&q) {
            self.discard(q)?;
        }
        let dd = self.d.get() as usize;
        dim(self.d, self.qubits.len() + 1)?;
        let local: Vec<Complex64> = match prep {
            Prep::Zero => (0..dd).map(|v| Complex64::new(if v == 0 { 1.0 } else { 0.0 }, 0.0)).collect(),
            Prep::Plus => vec![Complex64::new((dd as f64).sqrt().recip(), 0.0); dd],
        };
        self.amps = self.amps.iter().flat_map(|&a| local.iter().map(move |&l| a * l)).collect();
        self.qubits.push(q);
        Ok(())
    }

    /// `X^e`: `|v⟩ → |v + e⟩`.
    pub fn apply_x(&mut self, q: QubitId, e: u32) -> Result<(), OracleError> {
        let pos = self.position(q)?;
        let stride = self.stride(pos);
        let dd = self.d.get() as usize;
        let e = e as usize % dd;
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (i, &a) in self.amps.iter().enumerate() {
            let v = self.digit(i, stride);
            let w = (v + e) % dd;
            out[i - v * stride + w * stride] = a;
        }
        self.amps = out;
        Ok(())
    }

    /// `Z^e`: `|v⟩ → ω^{e v}|v⟩`.
    pub fn apply_z(&mut self, q: QubitId, e: u32) -> Result<(), OracleError> {
        let pos = self.position(q)?;
        let stride = self.stride(pos);
        let d = self.d.get();
        let phases: Vec<Complex64> = (0..d).map(|v| omega_pow(d, self.d.mul(e % d, v))).collect();
        for i in 0..self.amps.len() {
            let v = self.digit(i, stride);
            self.amps[i] *= phases[v];
        }
        Ok(())
    }

    /// `|x⟩|y⟩ → |x⟩|y + w x⟩`.
    pub fn apply_add(&mut self, control: QubitId, target: QubitId, w: u32) -> Result<(), OracleError> {
        if control == target {
            return Err(OracleError::SameQubit(control));
        }
        let (cs, ts) = (self.stride(self.position(control)?), self.stride(self.position(target)?));
        let dd = self.d.get() as usize;
        let w = w as usize % dd;
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (i, &a) in self.amps.iter().enumerate() {
            let x = self.digit(i, cs);
            let y = self.digit(i, ts);
            let y2 = (y + w * x) % dd;
            out[i - y * ts + y2 * ts] = a;
        }
        self.amps = out;
        Ok(())
    }

    /// Components of the state along each eigenvector of the measured
    /// observable: `comp[s][rest]` where `rest` indexes the other qudits.
    fn split(&self, pos: usize, x_basis: bool) -> Vec<Vec<Complex64>> {
        let d = self.d.get();
        let dd = d as usize;
        let stride = self.stride(pos);
        let rest_len = self.amps.len() / dd;
        let mut comp = vec![vec![Complex64::new(0.0, 0.0); rest_len]; dd];
        let scale = (dd as f64).sqrt().recip();
        for (i, &a) in self.amps.iter().enumerate() {
            let v = self.digit(i, stride);
            let hi = i / (stride * dd);
            let lo = i % stride;
            let rest = hi * stride + lo;
            if x_basis {
                // ⟨ψ_s|v⟩ = ω^{s v}/√d for the X eigenvector ψ_s
                for (s, c) in comp.iter_mut().enumerate() {
                    c[rest] += a * omega_pow(d, (s * v) as u32 % d) * scale;
                }
            } else {
                comp[v][rest] = a;
            }
        }
        comp
    }

    /// Rebuild the state from the qudit vector `local` and the rest vector.
    fn join(&mut self, pos: usize, local: &[Complex64], rest: &[Complex64]) {
        let dd = self.d.get() as usize;
        let stride = self.stride(pos);
        for (i, slot) in self.amps.iter_mut().enumerate() {
            let v = (i / stride) % dd;
            let hi = i / (stride * dd);
            let lo = i % stride;
            *slot = local[v] * rest[hi * stride + lo];
        }
    }

    fn x_eigenvector(&self, s: u32) -> Vec<Complex64> {
        let d = self.d.get();
        let scale = (d as f64).sqrt().recip();
        (0..d).map(|v| omega_pow(d, d - (s * v) % d) * scale).collect()
    }

    fn measure(&mut self, q: QubitId, src: &mut OutcomeSource, x_basis: bool) -> Result<Measurement, OracleError> {
        let pos = self.position(q)?;
        let comp = self.split(pos, x_basis);
        let probs: Vec<f64> = comp.iter().map(|c| c.iter().map(|a| a.norm_sqr()).sum()).collect();
        let possible: Vec<u32> = (0..probs.len() as u32).filter(|&s| probs[s as usize] > PROB_EPS).collect();
        let (s, random) = if possible.len() == 1 {
            (possible[0], false)
        } else {
            let s = src.draw(self.d)?;
            if probs[s as usize] <= PROB_EPS {
                return Err(OracleError::ZeroProbability { qubit: q, outcome: s });
            }
            (s, true)
        };
        let norm = probs[s as usize].sqrt();
        let rest: Vec<Complex64> = comp[s as usize].iter().map(|a| a / norm).collect();
        let local: Vec<Complex64> = if x_basis {
            self.x_eigenvector(s)
        } else {
            (0..self.d.get()).map(|v| Complex64::new(if v == s { 1.0 } else { 0.0 }, 0.0)).collect()
        };
        self.join(pos, &local, &rest);
        debug_assert!((self.norm_sqr() - 1.0).abs() < 1e-9);
        Ok(Measurement { outcome: s, random })
    }

    /// Projective `X_d` measurement; outcome `s` means eigenvalue `ω^s`.
    pub fn measure_x(&mut self, q: QubitId, src: &mut OutcomeSource) -> Result<Measurement, OracleError> {
        self.measure(q, src, true)
    }

    pub fn measure_z(&mut self, q: QubitId, src: &mut OutcomeSource) -> Result<Measurement, OracleError> {
        self.measure(q, src, false)
    }

    /// Measure `X` on `q`, then replace the post-measurement state with the
    /// outcome-0 branch: the pre-measurement state projected onto `|+⟩_q`.
    /// When that branch is impossible the qudit is an X eigenstate and a
    /// local `Z^s` returns it to `|+⟩`.
    pub fn terminate(&mut self, q: QubitId, src: &mut OutcomeSource) -> Result<Measurement, OracleError> {
        let pos = self.position(q)?;
        let before = self.split(pos, true);
        let m = self.measure_x(q, src)?;
        let plus_weight: f64 = before[0].iter().map(|a| a.norm_sqr()).sum();
        if plus_weight > PROB_EPS {
            let rest: Vec<Complex64> = before[0].iter().map(|a| a / plus_weight.sqrt()).collect();
            let local = self.x_eigenvector(0);
            self.join(pos, &local, &rest);
        } else {
            self.apply_z(q, m.outcome)?;
        }
        Ok(m)
    }

    /// Split off qudit `q` if the state is a product across it. Returns the
    /// qudit's local vector; the remaining state keeps its global phase.
    pub fn factor_out(&self, q: QubitId, tol: f64) -> Result<(Vec<Complex64>, DenseState), OracleError> {
        let pos = self.position(q)?;
        let comp = self.split(pos, false);
        let (best, best_norm) = comp
            .iter()
            .map(|c| c.iter().map(|a| a.norm_sqr()).sum::<f64>())
            .enumerate()
            .fold((0, -1.0), |acc, (i, n)| if n > acc.1 { (i, n) } else { acc });
        let rest: Vec<Complex64> = comp[best].iter().map(|a| a / best_norm.sqrt()).collect();
        let mut local = Vec::with_capacity(comp.len());
        let mut residual = 0.0;
        for c in &comp {
            let coef: Complex64 = rest.iter().zip(c).map(|(r, a)| r.conj() * a).sum();
            residual += c.iter().zip(&rest).map(|(a, r)| (a - coef * r).norm_sqr()).sum::<f64>();
            local.push(coef);
        }
        if residual > tol {
            return Err(OracleError::Entangled(q));
        }
        let mut qubits = self.qubits.clone();
        qubits.remove(pos);
        Ok((local, DenseState { d: self.d, qubits, amps: rest }))
    }

    /// Drop a qudit that is in a product state with the rest.
    pub fn discard(&mut self, q: QubitId) -> Result<(), OracleError> {
        let (_, rest) = self.factor_out(q, 1e-9)?;
        *self = rest;
        Ok(())
    }
}

fn dim(d: Modulus, n: usize) -> Result<usize, OracleError> {
    (d.get() as usize)
        .checked_pow(n as u32)
        .filter(|&s| s <= MAX_DENSE_DIM)
        .ok_or(OracleError::TooLarge { d: d.get(), n })
}

fn check_disjoint(groups: &[Vec<QubitId>]) -> Result<(), OracleError> {
    let mut seen = std::collections::HashSet::new();
    for &q in groups.iter().flatten() {
        if !seen.insert(q) {
            return Err(OracleError::OverlappingGroups(q));
        }
    }
    Ok(())
}

impl Engine for DenseState {
    fn modulus(&self) -> Modulus {
        self.d
    }
    fn prepare(&mut self, q: QubitId, prep: Prep) -> Result<(), ExecError> {
        Ok(DenseState::prepare(self, q, prep)?)
    }
    fn apply_x(&mut self, q: QubitId, e: u32) -> Result<(), ExecError> {
        Ok(DenseState::apply_x(self, q, e)?)
    }
    fn apply_z(&mut self, q: QubitId, e: u32) -> Result<(), ExecError> {
        Ok(DenseState::apply_z(self, q, e)?)
    }
    fn apply_add(&mut self, control: QubitId, target: QubitId, weight: u32) -> Result<(), ExecError> {
        Ok(DenseState::apply_add(self, control, target, weight)?)
    }
    fn measure_x(&mut self, q: QubitId, src: &mut OutcomeSource) -> Result<Measurement, ExecError> {
        Ok(DenseState::measure_x(self, q, src)?)
    }
    fn measure_z(&mut self, q: QubitId, src: &mut OutcomeSource) -> Result<Measurement, ExecError> {
        Ok(DenseState::measure_z(self, q, src)?)
    }
    fn terminate(&mut self, q: QubitId, src: &mut OutcomeSource) -> Result<TerminationRecord, ExecError> {
        let measurement = DenseState::terminate(self, q, src)?;
        Ok(TerminationRecord { measurement, corrections: Vec::new() })
    }
}

/// Execute a circuit on the dense simulator. The final state is returned in
/// ascending label order.
pub fn dense_execute(c: &QlncCircuit, src: &mut OutcomeSource) -> Result<Run<DenseState>, ExecError> {
    let n = c.qubits().len();
    dim(c.d, n)?;
    let mut run = c.run(DenseState::empty(c.d), src)?;
    run.state = run.state.sorted();
    Ok(run)
}

/// Whether `b = e^{iθ} a` component-wise within `tol`, with `θ` fixed by the
/// first amplitude of `a` whose magnitude exceeds `tol`. States over
/// different qubit orders are compared after sorting.
pub fn equal_up_to_global_phase(a: &DenseState, b: &DenseState, tol: f64) -> bool {
    if a.d != b.d {
        return false;
    }
    let (a, b) = (a.sorted(), b.sorted());
    if a.qubits != b.qubits {
        return false;
    }
    let Some(i) = a.amps.iter().position(|x| x.norm() > tol) else {
        return b.amps.iter().all(|x| x.norm() <= tol);
    };
    if b.amps[i].norm() <= tol {
        return false;
    }
    let phase = b.amps[i] / a.amps[i];
    let phase = phase / phase.norm();
    a.amps.iter().zip(&b.amps).all(|(x, y)| (y - phase * x).norm() <= tol)
}

/// `|⟨target|ψ⟩|²` where the target is a product of GHZ states over `groups`.
/// Qudits outside every group are factored out first and must be in a
/// product state with the rest.
pub fn group_fidelity(s: &DenseState, groups: &[Vec<QubitId>]) -> Result<f64, OracleError> {
    check_disjoint(groups)?;
    let members: std::collections::HashSet<QubitId> = groups.iter().flatten().copied().collect();
    for &q in &members {
        s.position(q)?;
    }
    let mut reduced = s.clone();
    for &q in s.qubits.iter().filter(|q| !members.contains(q)) {
        reduced = reduced.factor_out(q, 1e-9)?.1;
    }
    let target = DenseState::ghz_product(s.d, groups)?;
    let reduced = reduced.permuted(&target.qubits)?;
    let overlap: Complex64 = target.amps.iter().zip(&reduced.amps).map(|(t, a)| t.conj() * a).sum();
    Ok(overlap.norm_sqr())
}
