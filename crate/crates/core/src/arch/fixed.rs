//! Two's-complement fixed-point words.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Widest word the simulator handles; raw values live in `i128`.
pub const MAX_TOTAL_BITS: u32 = 120;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FixedPointError {
    #[error("{value} does not fit in {total_bits} bits with {frac_bits} fractional bits")]
    Overflow {
        value: f64,
        total_bits: u32,
        frac_bits: u32,
    },
    #[error("invalid format: {total_bits} total bits with {frac_bits} fractional bits")]
    InvalidFormat { total_bits: u32, frac_bits: u32 },
    #[error("cannot quantize non-finite value {0}")]
    NotFinite(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rounding {
    /// Floor, i.e. truncation toward negative infinity.
    Truncate,
    /// Nearest, ties toward positive infinity.
    #[default]
    RoundHalfUp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OverflowMode {
    #[default]
    Error,
    Saturate,
}

/// A fixed-point value: `raw / 2^frac_bits`, with `raw` in `total_bits` bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedPointValue {
    raw: i128,
    total_bits: u32,
    frac_bits: u32,
}

impl FixedPointValue {
    pub fn new(raw: i128, total_bits: u32, frac_bits: u32) -> Result<Self, FixedPointError> {
        check_format(total_bits, frac_bits)?;
        if raw < min_raw(total_bits) || raw > max_raw(total_bits) {
            return Err(FixedPointError::Overflow {
                value: raw as f64 / pow2(frac_bits),
                total_bits,
                frac_bits,
            });
        }
        Ok(Self {
            raw,
            total_bits,
            frac_bits,
        })
    }

    pub fn raw(&self) -> i128 {
        self.raw
    }

    pub fn total_bits(&self) -> u32 {
        self.total_bits
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    pub fn to_f64(&self) -> f64 {
        self.raw as f64 / pow2(self.frac_bits)
    }
}

fn check_format(total_bits: u32, frac_bits: u32) -> Result<(), FixedPointError> {
    if total_bits == 0 || total_bits > MAX_TOTAL_BITS || total_bits < frac_bits + 1 {
        return Err(FixedPointError::InvalidFormat {
            total_bits,
            frac_bits,
        });
    }
    Ok(())
}

pub fn min_raw(total_bits: u32) -> i128 {
    -(1i128 << (total_bits - 1))
}

pub fn max_raw(total_bits: u32) -> i128 {
    (1i128 << (total_bits - 1)) - 1
}

pub(crate) fn pow2(bits: u32) -> f64 {
    2f64.powi(bits as i32)
}

/// Fits `raw` into `total_bits`, or reports `None` in error mode.
pub fn fit_raw(raw: i128, total_bits: u32, overflow: OverflowMode) -> Option<i128> {
    let (lo, hi) = (min_raw(total_bits), max_raw(total_bits));
    if (lo..=hi).contains(&raw) {
        return Some(raw);
    }
    match overflow {
        OverflowMode::Error => None,
        OverflowMode::Saturate => Some(raw.clamp(lo, hi)),
    }
}

/// Divides by `2^shift` with the given rounding. `None` only on `i128` overflow.
pub fn shift_right_rounded(value: i128, shift: u32, rounding: Rounding) -> Option<i128> {
    if shift == 0 {
        return Some(value);
    }
    match rounding {
        Rounding::Truncate => Some(value >> shift),
        Rounding::RoundHalfUp => value.checked_add(1i128 << (shift - 1)).map(|v| v >> shift),
    }
}

/// Rounds `x · 2^frac_bits` to an integer.
pub fn scale_to_raw(x: f64, frac_bits: u32, rounding: Rounding) -> Result<i128, FixedPointError> {
    if !x.is_finite() {
        return Err(FixedPointError::NotFinite(x));
    }
    let scaled = x * pow2(frac_bits);
    let rounded = match rounding {
        Rounding::Truncate => scaled.floor(),
        Rounding::RoundHalfUp => (scaled + 0.5).floor(),
    };
    if rounded.abs() >= 2f64.powi(126) {
        return Err(FixedPointError::Overflow {
            value: x,
            total_bits: MAX_TOTAL_BITS,
            frac_bits,
        });
    }
    Ok(rounded as i128)
}

/// Quantizes `x` to `total_bits` bits with `frac_bits` fractional bits.
pub fn quantize(
    x: f64,
    total_bits: u32,
    frac_bits: u32,
    rounding: Rounding,
    overflow: OverflowMode,
) -> Result<FixedPointValue, FixedPointError> {
    check_format(total_bits, frac_bits)?;
    let raw = scale_to_raw(x, frac_bits, rounding)?;
    match fit_raw(raw, total_bits, overflow) {
        Some(raw) => FixedPointValue::new(raw, total_bits, frac_bits),
        None => Err(FixedPointError::Overflow {
            value: x,
            total_bits,
            frac_bits,
        }),
    }
}
