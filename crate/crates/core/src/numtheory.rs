//! Möbius and Mertens functions.
//!
//! Arguments never exceed a few thousand in practice: μ uses plain trial
//! division and M(n) sums a small sieve of μ.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum NumberTheoryError {
    #[error("argument must be a positive integer, got 0")]
    ZeroArgument,
}

/// A value of the Möbius function, always one of −1, 0 or +1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MoebiusValue(i8);

impl MoebiusValue {
    pub const MINUS_ONE: Self = Self(-1);
    pub const ZERO: Self = Self(0);
    pub const ONE: Self = Self(1);

    pub fn get(self) -> i8 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl From<MoebiusValue> for i64 {
    fn from(v: MoebiusValue) -> Self {
        v.0 as i64
    }
}

/// A value of the Mertens function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MertensValue(i64);

impl MertensValue {
    pub fn get(self) -> i64 {
        self.0
    }
}

/// μ(n): 0 when `n` has a squared prime factor, otherwise (−1)^ω(n).
pub fn moebius(n: u64) -> Result<MoebiusValue, NumberTheoryError> {
    if n == 0 {
        return Err(NumberTheoryError::ZeroArgument);
    }
    let mut rest = n;
    let mut distinct = 0u32;
    let mut p = 2u64;
    while p * p <= rest {
        if rest.is_multiple_of(p) {
            rest /= p;
            if rest.is_multiple_of(p) {
                return Ok(MoebiusValue::ZERO);
            }
            distinct += 1;
        }
        p += 1;
    }
    if rest > 1 {
        distinct += 1;
    }
    Ok(if distinct.is_multiple_of(2) {
        MoebiusValue::ONE
    } else {
        MoebiusValue::MINUS_ONE
    })
}

/// M(n) = μ(1) + … + μ(n).
pub fn mertens(n: u64) -> Result<MertensValue, NumberTheoryError> {
    if n == 0 {
        return Err(NumberTheoryError::ZeroArgument);
    }
    Ok(MertensValue(moebius_table(n as usize).iter().skip(1).sum()))
}

// Sieve of μ(0..=n), with μ(0) stored as 0.
fn moebius_table(n: usize) -> Vec<i64> {
    let mut mu = vec![1i64; n + 1];
    mu[0] = 0;
    let mut composite = vec![false; n + 1];
    for p in 2..=n {
        if composite[p] {
            continue;
        }
        for multiple in (p..=n).step_by(p) {
            if multiple > p {
                composite[multiple] = true;
            }
            mu[multiple] = -mu[multiple];
        }
        let square = p.saturating_mul(p);
        for multiple in (square..=n).step_by(square.max(1)) {
            mu[multiple] = 0;
        }
    }
    mu
}

/// μ(n) for `n ≥ 1` as a plain integer; callers guarantee the argument is positive.
pub(crate) fn mu(n: usize) -> i64 {
    i64::from(moebius(n as u64).expect("positive argument"))
}

/// M(n) for `n ≥ 1` as a plain integer.
pub(crate) fn big_m(n: usize) -> i64 {
    mertens(n as u64).expect("positive argument").get()
}
