//! Random circuit generators and test-side linear algebra shared by the
//! integration tests and the CLI acceptance suite.
#![allow(dead_code)]

use qlnc::circuit::OpKind;
use qlnc::stabref::agrees_with_tableau;
use qlnc::{
    dense_execute, equal_up_to_global_phase, stab_execute, ClassicalParity, Modulus, OutcomeSource, ParityTableau,
    Prep, QlncCircuit, RecordId,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Largest dense dimension the equivalence suite generates.
pub const MAX_DIM: u64 = 1 << 14;

/// Most qubits allowed for `d` under the dense cap, and at most 8.
pub fn max_qubits(d: u32) -> u32 {
    let mut n = 1;
    while n < 8 && (d as u64).pow(n + 1) <= MAX_DIM {
        n += 1;
    }
    n
}

/// A random QLNC circuit: every op on its own step, all-to-all
/// connectivity, classical controls drawn from earlier records.
pub fn random_circuit(rng: &mut ChaCha8Rng, d: Modulus, n: u32, ops: usize) -> QlncCircuit {
    let mut c = QlncCircuit::new(d);
    for q in 1..=n {
        c.prep(q, if rng.random() { Prep::Plus } else { Prep::Zero });
    }
    let mut records: Vec<RecordId> = Vec::new();
    let dv = d.get();
    let mut t = 0;
    while c.ops.len() < n as usize + ops {
        t += 1;
        let q = rng.random_range(1..=n);
        let kind = match rng.random_range(0..12) {
            0..=3 => {
                let r = rng.random_range(1..=n);
                if r == q {
                    continue;
                }
                OpKind::Cnot { control: q, target: r, weight: rng.random_range(1..dv) }
            }
            4 => OpKind::CtrlX { target: q, parity: random_parity(rng, dv, &records) },
            5 => OpKind::CtrlZ { target: q, parity: random_parity(rng, dv, &records) },
            6 => OpKind::CtrlXZ {
                target: q,
                x: random_parity(rng, dv, &records),
                z: random_parity(rng, dv, &records),
            },
            7 | 8 => OpKind::MeasureX { qubit: q, record: records.len() as RecordId },
            9 | 10 => OpKind::MeasureZ { qubit: q, record: records.len() as RecordId },
            _ => OpKind::Terminate { qubit: q, record: records.len() as RecordId },
        };
        if let Some(r) = kind.record() {
            records.push(r);
        }
        c.push(t, kind);
    }
    c
}

fn random_parity(rng: &mut ChaCha8Rng, d: u32, records: &[RecordId]) -> ClassicalParity {
    let mut p = ClassicalParity::constant(rng.random_range(0..d));
    for &r in records {
        if rng.random_bool(0.3) {
            p.terms.push((r, rng.random_range(1..d)));
        }
    }
    p
}

/// `x^(p-2) mod p`.
pub fn inv_mod(x: u32, p: u32) -> u32 {
    let (mut base, mut e, mut acc) = (x as u64 % p as u64, p as u64 - 2, 1u64);
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p as u64;
        }
        base = base * base % p as u64;
        e >>= 1;
    }
    acc as u32
}

/// Rank over `Z_p` by plain Gaussian elimination.
pub fn rank_mod(rows: &[Vec<u32>], p: u32) -> usize {
    let mut m: Vec<Vec<u64>> = rows.iter().map(|r| r.iter().map(|&v| v as u64).collect()).collect();
    let p = p as u64;
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..m.len()).find(|&i| m[i][c] % p != 0) else { continue };
        m.swap(rank, piv);
        let inv = inv_mod(m[rank][c] as u32, p as u32) as u64;
        for v in m[rank].iter_mut() {
            *v = *v * inv % p;
        }
        for i in 0..m.len() {
            if i != rank && m[i][c] != 0 {
                let f = m[i][c];
                for k in 0..cols {
                    m[i][k] = (m[i][k] + (p - f) * m[rank][k]) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// The two structural invariants: full row rank and column 0 equal to `e0`.
pub fn structural_invariants(t: &ParityTableau) -> Result<(), String> {
    let rows = t.coefficient_rows();
    let d = t.modulus().get();
    for (i, r) in rows.iter().enumerate() {
        if r[0] != u32::from(i == 0) {
            return Err(format!("column 0 entry {} in row {i}", r[0]));
        }
    }
    let rank = rank_mod(rows, d);
    if rank != rows.len() {
        return Err(format!("rank {rank} with {} rows", rows.len()));
    }
    Ok(())
}

/// Uniform random outcome vectors for `r` random measurements.
pub fn outcome_vectors(rng: &mut ChaCha8Rng, d: u32, r: usize, count: usize) -> Vec<Vec<u32>> {
    (0..count).map(|_| (0..r).map(|_| rng.random_range(0..d)).collect()).collect()
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EquivStats {
    pub branches: usize,
    pub stab_branches: usize,
    pub ops_checked: usize,
}

/// Run one circuit on `branches` outcome vectors through the tableau engine,
/// the dense oracle and (for `d = 2`) the stabilizer simulator. Checks the
/// structural invariants and the indeterminate count after every op.
pub fn check_equivalence(c: &QlncCircuit, rng: &mut ChaCha8Rng, branches: usize) -> Result<EquivStats, String> {
    let d = c.d;
    let r = c.random_measurement_count().map_err(|e| e.to_string())?;
    let mut stats = EquivStats::default();
    let total = (d.get() as u64).checked_pow(r as u32).unwrap_or(u64::MAX);
    let vectors: Vec<Vec<u32>> = if total <= branches as u64 {
        (0..total)
            .map(|mut i| {
                (0..r)
                    .map(|_| {
                        let v = (i % d.get() as u64) as u32;
                        i /= d.get() as u64;
                        v
                    })
                    .collect()
            })
            .collect()
    } else {
        outcome_vectors(rng, d.get(), r, branches)
    };
    for outcomes in vectors {
        let mut trace: Vec<(OpKind, usize, Result<(), String>)> = Vec::new();
        let run = c
            .run_with(ParityTableau::empty(d), &mut OutcomeSource::forced(outcomes.clone()), &mut |op, t| {
                trace.push((op.kind.clone(), t.num_indeterminates(), structural_invariants(t)));
            })
            .map_err(|e| format!("tableau {outcomes:?}: {e}"))?;
        let mut prev = 0usize;
        for (kind, n, inv) in &trace {
            inv.clone().map_err(|e| format!("invariant: after {kind:?}: {e}"))?;
            let random = kind.record().and_then(|rec| run.log.get(rec)).is_some_and(|m| m.random);
            let expected = match kind {
                OpKind::PrepPlus { .. } => prev + 1,
                OpKind::MeasureX { .. } | OpKind::Terminate { .. } if random => prev + 1,
                OpKind::MeasureZ { .. } if random => prev - 1,
                _ => prev,
            };
            if *n != expected {
                return Err(format!("invariant: N went {prev} -> {n} on {kind:?}, expected {expected}"));
            }
            prev = *n;
        }
        stats.ops_checked += trace.len();

        let dense = dense_execute(c, &mut OutcomeSource::forced(outcomes.clone()))
            .map_err(|e| format!("dense {outcomes:?}: {e}"))?;
        if dense.log.outcomes() != run.log.outcomes() {
            return Err(format!("outcome logs differ on {outcomes:?}"));
        }
        let randomness = |log: &qlnc::OutcomeLog| log.iter().map(|(k, m)| (k, m.random)).collect::<Vec<_>>();
        if randomness(&dense.log) != randomness(&run.log) {
            return Err(format!("engines disagree on which measurements are random ({outcomes:?})"));
        }
        let expanded = run.state.expand_amplitudes(1 << 20).map_err(|e| e.to_string())?;
        if !equal_up_to_global_phase(&expanded, &dense.state, 1e-9) {
            return Err(format!("tableau and dense states differ on {outcomes:?}"));
        }
        if d == Modulus::QUBIT {
            let mut stab = stab_execute(c, &mut OutcomeSource::forced(outcomes.clone()))
                .map_err(|e| format!("stab {outcomes:?}: {e}"))?;
            if stab.log.outcomes() != run.log.outcomes() || randomness(&stab.log) != randomness(&run.log) {
                return Err(format!("stabilizer outcome log differs on {outcomes:?}"));
            }
            if !agrees_with_tableau(&mut stab.state, &run.state).map_err(|e| e.to_string())? {
                return Err(format!("stabilizer state differs on {outcomes:?}"));
            }
            stats.stab_branches += 1;
        }
        stats.branches += 1;
    }
    Ok(stats)
}

/// Phase vector after applying `Z^e` on each listed qubit, computed directly
/// from `[C | p]`: every row gains `e` times the qubit's column.
pub fn phases_after_z(t: &ParityTableau, corrections: &[(qlnc::QubitId, u32)]) -> Vec<u32> {
    let d = t.modulus().get() as u64;
    let rows = t.coefficient_rows();
    let mut p: Vec<u64> = t.phase_vector().iter().map(|&v| v as u64).collect();
    for &(q, e) in corrections {
        let col = 1 + t.labels().iter().position(|&l| l == q).expect("correction on unknown qubit");
        for (i, row) in rows.iter().enumerate() {
            p[i] = (p[i] + e as u64 * row[col] as u64) % d;
        }
    }
    p.into_iter().map(|v| v as u32).collect()
}

/// A circuit meant to leave GHZ states on `groups`, built from direct CNOTs,
/// terminated relays and entanglement swaps, then perturbed at random so
/// that roughly half the instances miss the target. Only preparations,
/// CNOTs, Z measurements, terminations and X corrections controlled by Z
/// records are emitted.
pub fn random_distribution_circuit(rng: &mut ChaCha8Rng, d: Modulus) -> (QlncCircuit, Vec<Vec<qlnc::QubitId>>) {
    use qlnc::QubitId;
    let dv = d.get();
    let mut c = QlncCircuit::new(d);
    let mut next_q: QubitId = 1;
    let mut t = 0u32;
    let mut rec: RecordId = 0;
    let mut z_records: Vec<RecordId> = Vec::new();
    let mut groups: Vec<Vec<QubitId>> = Vec::new();
    let mut body: Vec<(OpKind, bool)> = Vec::new(); // (op, removable)
    let mut alloc = |c: &mut QlncCircuit, prep: Prep| {
        let q = next_q;
        next_q += 1;
        c.prep(q, prep);
        q
    };
    for _ in 0..rng.random_range(1..=2) {
        let head = alloc(&mut c, Prep::Plus);
        let mut g = vec![head];
        for _ in 0..rng.random_range(1..=2) {
            let m = alloc(&mut c, Prep::Zero);
            g.push(m);
            match rng.random_range(0..3) {
                0 => body.push((OpKind::Cnot { control: head, target: m, weight: 1 }, true)),
                1 => {
                    let r = alloc(&mut c, Prep::Zero);
                    body.push((OpKind::Cnot { control: head, target: r, weight: 1 }, true));
                    body.push((OpKind::Cnot { control: r, target: m, weight: 1 }, true));
                    body.push((OpKind::Terminate { qubit: r, record: rec }, false));
                    rec += 1;
                }
                _ => {
                    let r = alloc(&mut c, Prep::Plus);
                    body.push((OpKind::Cnot { control: r, target: m, weight: d.neg(1) }, true));
                    body.push((OpKind::Cnot { control: head, target: r, weight: 1 }, true));
                    body.push((OpKind::MeasureZ { qubit: r, record: rec }, false));
                    body.push((OpKind::CtrlX { target: m, parity: ClassicalParity::of(rec, 1) }, true));
                    z_records.push(rec);
                    rec += 1;
                }
            }
        }
        groups.push(g);
    }
    if rng.random_bool(0.3) {
        let idle = alloc(&mut c, if rng.random() { Prep::Plus } else { Prep::Zero });
        if rng.random() {
            body.push((OpKind::MeasureZ { qubit: idle, record: rec }, false));
            z_records.push(rec);
            rec += 1;
        }
    }
    let members: Vec<QubitId> = groups.iter().flatten().copied().collect();
    let n = next_q - 1;

    if rng.random_bool(0.2) {
        let removable: Vec<usize> = (0..body.len()).filter(|&i| body[i].1).collect();
        if !removable.is_empty() {
            body.remove(removable[rng.random_range(0..removable.len())]);
        }
    }
    if dv > 2 && rng.random_bool(0.2) {
        for (op, _) in body.iter_mut() {
            if let OpKind::Cnot { weight, .. } = op {
                if rng.random_bool(0.5) {
                    *weight = rng.random_range(1..dv);
                }
            }
        }
    }
    if rng.random_bool(0.2) {
        let a = rng.random_range(1..=n);
        let b = rng.random_range(1..=n);
        if a != b {
            body.push((OpKind::Cnot { control: a, target: b, weight: rng.random_range(1..dv) }, false));
        }
    }
    if !z_records.is_empty() && rng.random_bool(0.2) {
        let m = members[rng.random_range(0..members.len())];
        let r = z_records[rng.random_range(0..z_records.len())];
        body.push((OpKind::CtrlX { target: m, parity: ClassicalParity::of(r, rng.random_range(1..dv)) }, false));
    }
    if rng.random_bool(0.15) {
        let m = members[rng.random_range(0..members.len())];
        body.push((OpKind::MeasureZ { qubit: m, record: rec }, false));
    } else if rng.random_bool(0.1) {
        let m = members[rng.random_range(0..members.len())];
        body.push((OpKind::Terminate { qubit: m, record: rec }, false));
    }
    for (op, _) in body {
        t += 1;
        c.push(t, op);
    }
    (c, groups)
}
