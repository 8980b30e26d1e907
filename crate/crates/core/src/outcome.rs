//! Injectable supplier of measurement outcomes.
//!
//! Engines consult the source only when a measurement outcome is genuinely
//! random; deterministic outcomes never consume an entry. Outcomes are residues
//! `s` in `Z_d` meaning the eigenvalue `ω^s` (so for qubits `+1 ↦ 0`, `-1 ↦ 1`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::field::Modulus;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OutcomeError {
    #[error("forced outcomes exhausted after {0} random measurements")]
    Exhausted(usize),
    #[error("forced outcome {value} is not a residue mod {d}")]
    OutOfRange { value: u32, d: u32 },
}

#[derive(Debug, Clone)]
enum Mode {
    Seeded(ChaCha8Rng),
    Forced(Vec<u32>),
    Constant(u32),
}

#[derive(Debug, Clone)]
pub struct OutcomeSource {
    mode: Mode,
    drawn: usize,
}

impl OutcomeSource {
    /// Uniformly random outcomes from a seeded PRNG.
    pub fn seeded(seed: u64) -> Self {
        OutcomeSource { mode: Mode::Seeded(ChaCha8Rng::seed_from_u64(seed)), drawn: 0 }
    }

    /// An explicit branch label: the i-th random measurement gets `outcomes[i]`.
    pub fn forced(outcomes: impl IntoIterator<Item = u32>) -> Self {
        OutcomeSource { mode: Mode::Forced(outcomes.into_iter().collect()), drawn: 0 }
    }

    /// Every random measurement gets the same value. Used for probing how many
    /// random measurements a circuit performs.
    pub fn constant(value: u32) -> Self {
        OutcomeSource { mode: Mode::Constant(value), drawn: 0 }
    }

    /// Number of outcomes handed out so far.
    pub fn drawn(&self) -> usize {
        self.drawn
    }

    pub fn draw(&mut self, d: Modulus) -> Result<u32, OutcomeError> {
        let value = match &mut self.mode {
            Mode::Seeded(rng) => rng.random_range(0..d.get()),
            Mode::Forced(list) => *list.get(self.drawn).ok_or(OutcomeError::Exhausted(self.drawn))?,
            Mode::Constant(v) => *v,
        };
        if value >= d.get() {
            return Err(OutcomeError::OutOfRange { value, d: d.get() });
        }
        self.drawn += 1;
        Ok(value)
    }
}
