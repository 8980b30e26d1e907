//! Arithmetic over the prime field Z_d.
//!
//! Tableaus, circuits and codes store raw residues (`u32` in `[0, d)`) and do
//! their arithmetic through a [`Modulus`]. [`FieldElement`] pairs a residue
//! with its modulus for the places where values cross an API boundary.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("dimension must be prime, got {0}")]
    NotPrime(u64),
    #[error("no inverse of zero")]
    InverseOfZero,
    #[error("moduli differ: {0} vs {1}")]
    ModulusMismatch(u32, u32),
}

/// A prime qudit dimension `d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Modulus(u32);

/// Deterministic trial division; dimensions here are small.
fn is_prime(d: u64) -> bool {
    if d < 2 {
        return false;
    }
    if d < 4 {
        return true;
    }
    if d % 2 == 0 {
        return false;
    }
    let mut f = 3;
    while f * f <= d {
        if d % f == 0 {
            return false;
        }
        f += 2;
    }
    true
}

/// Validate a dimension and wrap it as a [`Modulus`].
pub fn check_prime(d: u64) -> Result<Modulus, FieldError> {
    if d > u32::MAX as u64 || !is_prime(d) {
        return Err(FieldError::NotPrime(d));
    }
    Ok(Modulus(d as u32))
}

impl Modulus {
    pub const QUBIT: Modulus = Modulus(2);

    pub fn new(d: u32) -> Result<Self, FieldError> {
        check_prime(d as u64)
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn reduce(self, a: u64) -> u32 {
        (a % self.0 as u64) as u32
    }

    /// Reduce a signed integer into `[0, d)`.
    #[inline]
    pub fn reduce_signed(self, a: i64) -> u32 {
        a.rem_euclid(self.0 as i64) as u32
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        let s = a as u64 + b as u64;
        if s >= self.0 as u64 {
            (s - self.0 as u64) as u32
        } else {
            s as u32
        }
    }

    #[inline]
    pub fn sub(self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + (self.0 - b)
        }
    }

    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.0 - a
        }
    }

    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.0 as u64) as u32
    }

    /// `a + c * b`, the row/column update used everywhere in elimination.
    #[inline]
    pub fn mul_add(self, a: u32, c: u32, b: u32) -> u32 {
        ((a as u64 + c as u64 * b as u64) % self.0 as u64) as u32
    }

    pub fn pow(self, mut base: u32, mut exp: u64) -> u32 {
        let mut acc = 1 % self.0;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inv(self, a: u32) -> Result<u32, FieldError> {
        let a = a % self.0;
        if a == 0 {
            return Err(FieldError::InverseOfZero);
        }
        Ok(self.pow(a, self.0 as u64 - 2))
    }

    pub fn element(self, value: u64) -> FieldElement {
        FieldElement { value: self.reduce(value), modulus: self }
    }
}

impl TryFrom<u32> for Modulus {
    type Error = FieldError;
    fn try_from(d: u32) -> Result<Self, Self::Error> {
        Modulus::new(d)
    }
}

impl From<Modulus> for u32 {
    fn from(m: Modulus) -> u32 {
        m.0
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A residue together with the modulus it lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u32,
    modulus: Modulus,
}

impl FieldElement {
    pub fn new(value: u64, modulus: Modulus) -> Self {
        modulus.element(value)
    }

    pub fn value(self) -> u32 {
        self.value
    }

    pub fn modulus(self) -> Modulus {
        self.modulus
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    pub fn inverse(self) -> Result<Self, FieldError> {
        inverse(self)
    }

    fn check(self, other: Self) -> Result<Modulus, FieldError> {
        if self.modulus != other.modulus {
            return Err(FieldError::ModulusMismatch(self.modulus.0, other.modulus.0));
        }
        Ok(self.modulus)
    }

    pub fn checked_add(self, rhs: Self) -> Result<Self, FieldError> {
        let m = self.check(rhs)?;
        Ok(FieldElement { value: m.add(self.value, rhs.value), modulus: m })
    }

    pub fn checked_mul(self, rhs: Self) -> Result<Self, FieldError> {
        let m = self.check(rhs)?;
        Ok(FieldElement { value: m.mul(self.value, rhs.value), modulus: m })
    }
}

/// Multiplicative inverse of a non-zero element.
pub fn inverse(a: FieldElement) -> Result<FieldElement, FieldError> {
    let value = a.modulus.inv(a.value)?;
    Ok(FieldElement { value, modulus: a.modulus })
}

impl Add for FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: Self) -> Self {
        self.checked_add(rhs).expect("field elements from different moduli")
    }
}

impl Sub for FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Mul for FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: Self) -> Self {
        self.checked_mul(rhs).expect("field elements from different moduli")
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> Self {
        FieldElement { value: self.modulus.neg(self.value), modulus: self.modulus }
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.modulus)
    }
}
