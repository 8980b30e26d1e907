//! Branch-by-branch verification of a circuit against a Bell/GHZ target.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{ExecError, QlncCircuit};
use crate::field::Modulus;
use crate::oracle::{dense_execute, group_fidelity};
use crate::outcome::OutcomeSource;
use crate::stabref::{agrees_with_tableau, stab_execute, StabilizerTableau};
use crate::tableau::{ParityTableau, Prep, QubitId, TableauError};

/// Exhaustive enumeration refuses more branches than this.
pub const MAX_EXHAUSTIVE_BRANCHES: u128 = 1 << 16;

/// Dense checks are skipped in auto mode above this many amplitudes.
pub const AUTO_DENSE_DIM: u128 = 1 << 18;

pub const FIDELITY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchMode {
    Exhaustive,
    Sample { count: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleChoice {
    Auto,
    Dense,
    Stab,
    Tableau,
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchResult {
    /// Forced outcomes, in execution order.
    pub outcomes: Vec<u32>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tableau_match: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stab_match: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Canonical tableau over the group qubits (non-group qubits discarded).
    #[serde(skip)]
    pub canonical: Option<ParityTableau>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub random_measurements: usize,
    pub branches: Vec<BranchResult>,
    pub pass: bool,
    pub first_failure: Option<Vec<u32>>,
    /// Every branch that reached the end gave the same canonical tableau.
    pub canonical_agree: bool,
}

impl VerifyReport {
    pub fn canonical(&self) -> Option<&ParityTableau> {
        self.branches.iter().find_map(|b| b.canonical.as_ref())
    }
}

/// The canonical tableau of `⊗_j GHZ(groups[j])`.
pub fn target_tableau(d: Modulus, groups: &[Vec<QubitId>]) -> Result<ParityTableau, TableauError> {
    let mut t = ParityTableau::empty(d);
    for g in groups {
        for (i, &q) in g.iter().enumerate() {
            t.prepare(q, if i == 0 { Prep::Plus } else { Prep::Zero })?;
            if i > 0 {
                t.apply_add(g[0], q, 1)?;
            }
        }
    }
    Ok(t.canonicalize())
}

/// Discard every non-group qubit (each must be disentangled) and return the
/// canonical form of what is left.
pub fn restrict_to_groups(t: &ParityTableau, groups: &[Vec<QubitId>]) -> Result<ParityTableau, TableauError> {
    let keep: BTreeSet<QubitId> = groups.iter().flatten().copied().collect();
    let mut t = t.clone();
    for q in t.labels().to_vec() {
        if !keep.contains(&q) {
            t.discard(q)?;
        }
    }
    Ok(t.canonicalize())
}

/// Whether the stabilizer state contains `X…X` and every `Z_i Z_j` on each group.
fn stab_has_target(s: &mut StabilizerTableau, groups: &[Vec<QubitId>]) -> Result<bool, ExecError> {
    for g in groups {
        let x = s.pauli_on(g, &[])?;
        if s.expectation(&x) != Some(false) {
            return Ok(false);
        }
        for w in g.windows(2) {
            let z = s.pauli_on(&[], w)?;
            if s.expectation(&z) != Some(false) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn branch_labels(c: &QlncCircuit, r: usize, mode: BranchMode) -> Result<Vec<Vec<u32>>, ExecError> {
    let d = c.d.get();
    match mode {
        BranchMode::Exhaustive => {
            let count = (d as u128).checked_pow(r as u32).unwrap_or(u128::MAX);
            if count > MAX_EXHAUSTIVE_BRANCHES {
                return Err(ExecError::TooManyBranches { count, limit: MAX_EXHAUSTIVE_BRANCHES });
            }
            Ok((0..count as u64)
                .map(|mut idx| {
                    let mut v = vec![0; r];
                    for slot in v.iter_mut().rev() {
                        *slot = (idx % d as u64) as u32;
                        idx /= d as u64;
                    }
                    v
                })
                .collect())
        }
        BranchMode::Sample { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let set: BTreeSet<Vec<u32>> =
                (0..count).map(|_| (0..r).map(|_| rng.random_range(0..d)).collect()).collect();
            Ok(set.into_iter().collect())
        }
    }
}

fn check_branch(
    c: &QlncCircuit,
    groups: &[Vec<QubitId>],
    outcomes: Vec<u32>,
    oracle: OracleChoice,
    target: &ParityTableau,
) -> BranchResult {
    let forced = outcomes.clone();
    let src = move || OutcomeSource::forced(forced.clone());
    let mut res = BranchResult {
        outcomes,
        pass: false,
        tableau_match: None,
        fidelity: None,
        stab_match: None,
        error: None,
        canonical: None,
    };
    let d = c.d;
    let n = c.qubits().len();
    let dense_fits = (d.get() as u128).checked_pow(n as u32).is_some_and(|x| x <= AUTO_DENSE_DIM);
    let use_tableau = oracle != OracleChoice::Dense;
    let use_dense = oracle == OracleChoice::Dense || (oracle == OracleChoice::Auto && dense_fits);
    let use_stab = d == Modulus::QUBIT && matches!(oracle, OracleChoice::Auto | OracleChoice::Stab);

    let mut ok = true;
    fn fail(res: &mut BranchResult, e: String) {
        res.error.get_or_insert(e);
    }

    let mut final_tableau = None;
    if use_tableau || use_stab {
        match c.execute(&mut src()) {
            Ok(run) => {
                let restricted = restrict_to_groups(&run.state, groups);
                match restricted {
                    Ok(canon) => {
                        let m = canon == *target;
                        ok &= m || !use_tableau;
                        if use_tableau {
                            res.tableau_match = Some(m);
                        }
                        res.canonical = Some(canon);
                    }
                    Err(e) => {
                        ok &= !use_tableau;
                        if use_tableau {
                            res.tableau_match = Some(false);
                            fail(&mut res, format!("tableau: {e}"));
                        }
                    }
                }
                final_tableau = Some(run.state);
            }
            Err(e) => {
                ok = false;
                fail(&mut res, format!("tableau: {e}"));
            }
        }
    }
    if use_dense {
        match dense_execute(c, &mut src()).map_err(|e| e.to_string()).and_then(|run| {
            group_fidelity(&run.state, groups).map_err(|e| e.to_string())
        }) {
            Ok(f) => {
                ok &= (1.0 - f).abs() <= FIDELITY_TOL;
                res.fidelity = Some(f);
            }
            Err(e) => {
                ok = false;
                res.fidelity = Some(0.0);
                fail(&mut res, format!("dense: {e}"));
            }
        }
    }
    if use_stab {
        let outcome = stab_execute(c, &mut src()).and_then(|mut run| {
            let target_ok = stab_has_target(&mut run.state, groups)?;
            let agree = match &final_tableau {
                Some(t) => agrees_with_tableau(&mut run.state, t)?,
                None => true,
            };
            Ok(target_ok && agree)
        });
        match outcome {
            Ok(m) => {
                ok &= m;
                res.stab_match = Some(m);
            }
            Err(e) => {
                ok = false;
                res.stab_match = Some(false);
                fail(&mut res, format!("stab: {e}"));
            }
        }
    }
    res.pass = ok;
    res
}

/// Run every requested branch and check the final state against the
/// product of GHZ states over `groups`. Branches run in parallel; results
/// are sorted by outcome vector.
pub fn verify_circuit(
    c: &QlncCircuit,
    groups: &[Vec<QubitId>],
    mode: BranchMode,
    oracle: OracleChoice,
) -> Result<VerifyReport, ExecError> {
    let violations = c.validate();
    if !violations.is_empty() {
        return Err(ExecError::Invalid(violations));
    }
    let r = c.random_measurement_count()?;
    let labels = branch_labels(c, r, mode)?;
    let target = target_tableau(c.d, groups)?;
    let mut branches: Vec<BranchResult> =
        labels.into_par_iter().map(|o| check_branch(c, groups, o, oracle, &target)).collect();
    branches.sort_by(|a, b| a.outcomes.cmp(&b.outcomes));
    let pass = !branches.is_empty() && branches.iter().all(|b| b.pass);
    let first_failure = branches.iter().find(|b| !b.pass).map(|b| b.outcomes.clone());
    let canon: Vec<&ParityTableau> = branches.iter().filter_map(|b| b.canonical.as_ref()).collect();
    let canonical_agree = canon.windows(2).all(|w| w[0] == w[1]);
    Ok(VerifyReport { random_measurements: r, branches, pass, first_failure, canonical_agree })
}
