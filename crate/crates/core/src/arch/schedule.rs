//! Per-node word lengths.
//!
//! Every node `i` gets `L + ΔL_i` total bits and `L − 1` fractional bits, so
//! values stay aligned and only the integer part grows along the datapath.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::fixed::OverflowMode;
use super::fixed::Rounding;
use super::graph::{Arch, ArchitectureGraph, Op, Stage};

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("malformed schedule: {0}")]
    Json(#[from] serde_json::Error),
    #[error("base word length must be at least 2, got {0}")]
    BaseTooSmall(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantizationSchedule {
    pub base_l: u32,
    #[serde(default)]
    pub rounding: Rounding,
    #[serde(default)]
    pub overflow: OverflowMode,
    pub deltas: BTreeMap<u32, u32>,
}

impl QuantizationSchedule {
    pub fn frac_bits(&self) -> u32 {
        self.base_l - 1
    }

    pub fn delta(&self, id: u32) -> Option<u32> {
        self.deltas.get(&id).copied()
    }

    pub fn total_bits(&self, id: u32) -> Option<u32> {
        self.delta(id).map(|d| self.base_l + d)
    }

    /// Same increments over a different base word length.
    pub fn with_base_l(&self, base_l: u32) -> Self {
        Self {
            base_l,
            ..self.clone()
        }
    }

    pub fn with_rounding(mut self, rounding: Rounding) -> Self {
        self.rounding = rounding;
        self
    }

    pub fn with_overflow(mut self, overflow: OverflowMode) -> Self {
        self.overflow = overflow;
        self
    }

    pub fn from_json(text: &str) -> Result<Self, ScheduleError> {
        let s: Self = serde_json::from_str(text)?;
        if s.base_l < 2 {
            return Err(ScheduleError::BaseTooSmall(s.base_l));
        }
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serialises")
    }
}

fn stage_delta(arch: Arch, stage: Stage) -> u32 {
    match stage {
        Stage::Input => 0,
        Stage::TapShift => 1,
        Stage::ChannelSum => 3,
        Stage::ChannelScale => 10,
        Stage::Mobius => 12,
        Stage::MeanProduct => 0,
        Stage::MeanSum => 2,
        Stage::MeanScale => 11,
        Stage::Correction => 13,
        Stage::DcScale => 14,
        Stage::Output => match arch {
            Arch::I => 12,
            Arch::II => 13,
        },
    }
}

/// The reference schedule: one increment per pipeline stage.
pub fn default_schedule(graph: &ArchitectureGraph, base_l: u32) -> QuantizationSchedule {
    QuantizationSchedule {
        base_l,
        rounding: Rounding::default(),
        overflow: OverflowMode::default(),
        deltas: graph
            .nodes
            .iter()
            .map(|n| (n.id.0, stage_delta(graph.arch, n.stage)))
            .collect(),
    }
}

fn shift_bound(v: &BigInt, shift: u32, rounding: Rounding) -> BigInt {
    if shift == 0 {
        return v.clone();
    }
    match rounding {
        Rounding::Truncate => v >> shift,
        Rounding::RoundHalfUp => (v + (BigInt::one() << (shift - 1))) >> shift,
    }
}

fn bits_for(lo: &BigInt, hi: &BigInt) -> u32 {
    let mut bits = 1u32;
    loop {
        let half = BigInt::one() << (bits - 1);
        if *lo >= -half.clone() && *hi < half {
            return bits;
        }
        bits += 1;
    }
}

/// Smallest `ΔL` per node such that no node can overflow for any input word,
/// by interval propagation over raw integer values.
pub fn required_deltas(
    graph: &ArchitectureGraph,
    base_l: u32,
    rounding: Rounding,
) -> BTreeMap<u32, u32> {
    let frac = base_l - 1;
    let in_hi: BigInt = (BigInt::one() << frac) - 1;
    let in_lo = -(BigInt::one() << frac);
    let mut bounds: Vec<(BigInt, BigInt)> = Vec::with_capacity(graph.nodes.len());
    let mut out = BTreeMap::new();
    for node in &graph.nodes {
        let get = |id: super::graph::NodeId| &bounds[id.0 as usize - 1];
        let (lo, hi) = match node.op {
            Op::Input { .. } => (in_lo.clone(), in_hi.clone()),
            Op::Shift { src, amount } => {
                let (l, h) = get(src);
                (l << amount, h << amount)
            }
            Op::Add { lhs, rhs } => {
                let (a, b) = (get(lhs), get(rhs));
                (&a.0 + &b.0, &a.1 + &b.1)
            }
            Op::Sub { lhs, rhs } => {
                let (a, b) = (get(lhs), get(rhs));
                (&a.0 - &b.1, &a.1 - &b.0)
            }
            Op::IntMul { src, constant } => scaled(get(src), &BigInt::from(constant)),
            Op::FracMul { src, constant } => {
                let c = super::fixed::scale_to_raw(constant, frac, Rounding::RoundHalfUp)
                    .expect("constants are small and finite");
                let (l, h) = scaled(get(src), &BigInt::from(c));
                (
                    shift_bound(&l, frac, rounding),
                    shift_bound(&h, frac, rounding),
                )
            }
            Op::Output { src, .. } => get(src).clone(),
        };
        let bits = bits_for(&lo, &hi);
        out.insert(node.id.0, bits.saturating_sub(base_l));
        bounds.push((lo, hi));
    }
    out
}

fn scaled(b: &(BigInt, BigInt), c: &BigInt) -> (BigInt, BigInt) {
    let (x, y) = (&b.0 * c, &b.1 * c);
    if c.is_negative() {
        (y, x)
    } else if c.is_zero() {
        (BigInt::zero(), BigInt::zero())
    } else {
        (x, y)
    }
}

/// Schedule built from [`required_deltas`]; overflow-free by construction.
pub fn minimal_schedule(
    graph: &ArchitectureGraph,
    base_l: u32,
    rounding: Rounding,
) -> QuantizationSchedule {
    QuantizationSchedule {
        base_l,
        rounding,
        overflow: OverflowMode::Error,
        deltas: required_deltas(graph, base_l, rounding),
    }
}
