//! Canonical signed-digit recoding of integer constants.

/// One nonzero CSD digit: `sign · 2^shift`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Digit {
    pub shift: u32,
    pub negative: bool,
}

/// Non-adjacent form of `c`, most significant digit first.
///
/// No two nonzero digits are adjacent, which minimises the nonzero count.
pub fn csd_digits(c: i64) -> Vec<Digit> {
    let flip = c < 0;
    let mut n = c.unsigned_abs() as i128;
    let mut shift = 0u32;
    let mut digits = Vec::new();
    while n != 0 {
        if n & 1 == 1 {
            // 1 when n ≡ 1 (mod 4), −1 when n ≡ 3 (mod 4)
            let d = 2 - (n & 3);
            n -= d;
            digits.push(Digit {
                shift,
                negative: (d < 0) != flip,
            });
        }
        n >>= 1;
        shift += 1;
    }
    digits.reverse();
    digits
}

/// Two-input adders needed for a shift-add realisation of `×c`.
pub fn adder_cost(c: i64) -> usize {
    csd_digits(c).len().saturating_sub(1)
}

pub fn digits_value(digits: &[Digit]) -> i64 {
    digits
        .iter()
        .map(|d| {
            if d.negative {
                -(1i64 << d.shift)
            } else {
                1i64 << d.shift
            }
        })
        .sum()
}
