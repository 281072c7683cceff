//! Bit-accurate evaluation of an architecture graph.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use serde::Serialize;
use thiserror::Error;

use super::fixed::{
    fit_raw, pow2, scale_to_raw, shift_right_rounded, OverflowMode, Rounding, MAX_TOTAL_BITS,
};
use super::graph::{ArchitectureGraph, GraphError, NodeId, Op, ARCH_N};
use super::schedule::QuantizationSchedule;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulationError {
    #[error("schedule has no word length for node {0}")]
    MissingDelta(NodeId),
    #[error("overflow at node {node} ({label})")]
    Overflow { node: NodeId, label: String },
    #[error("input {port} = {value} lies outside [-1, 1]")]
    InputOutOfRange { port: usize, value: f64 },
    #[error("expected {expected} input samples, got {actual}")]
    InputCount { expected: usize, actual: usize },
    #[error(transparent)]
    InvalidGraph(#[from] GraphError),
    #[error("node {node} needs {bits} bits; supported widths are 2..={max}", max = MAX_TOTAL_BITS)]
    UnsupportedWidth { node: NodeId, bits: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputValue {
    pub index: usize,
    pub raw: i128,
    /// `raw` descaled to the transform's own units.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub id: NodeId,
    pub label: String,
    pub total_bits: u32,
    pub raw: i128,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationResult {
    pub outputs: Vec<OutputValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceEntry>>,
}

impl SimulationResult {
    /// Coefficients `V_0..V_7`; indices the architecture does not produce are 0.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut v = vec![0.0; ARCH_N];
        for o in &self.outputs {
            v[o.index] = o.value;
        }
        v
    }
}

/// A graph paired with a schedule, checked once and reusable across inputs.
#[derive(Debug, Clone)]
pub struct Simulator<'g> {
    graph: &'g ArchitectureGraph,
    widths: Vec<u32>,
    constants: Vec<i128>,
    frac: u32,
    rounding: Rounding,
    overflow: OverflowMode,
}

impl<'g> Simulator<'g> {
    pub fn new(
        graph: &'g ArchitectureGraph,
        schedule: &QuantizationSchedule,
    ) -> Result<Self, SimulationError> {
        graph.validate()?;
        let frac = schedule.frac_bits();
        let mut widths = Vec::with_capacity(graph.nodes.len());
        let mut constants = Vec::with_capacity(graph.nodes.len());
        for node in &graph.nodes {
            let bits = schedule
                .total_bits(node.id.0)
                .ok_or(SimulationError::MissingDelta(node.id))?;
            if !(2..=MAX_TOTAL_BITS).contains(&bits) || schedule.base_l < 2 {
                return Err(SimulationError::UnsupportedWidth {
                    node: node.id,
                    bits,
                });
            }
            widths.push(bits);
            constants.push(match node.op {
                Op::FracMul { constant, .. } => scale_to_raw(constant, frac, Rounding::RoundHalfUp)
                    .map_err(|_| SimulationError::UnsupportedWidth {
                        node: node.id,
                        bits,
                    })?,
                _ => 0,
            });
        }
        Ok(Self {
            graph,
            widths,
            constants,
            frac,
            rounding: schedule.rounding,
            overflow: schedule.overflow,
        })
    }

    pub fn graph(&self) -> &ArchitectureGraph {
        self.graph
    }

    pub fn run(&self, samples: &[f64]) -> Result<SimulationResult, SimulationError> {
        self.execute(samples, false)
    }

    pub fn run_traced(&self, samples: &[f64]) -> Result<SimulationResult, SimulationError> {
        self.execute(samples, true)
    }

    fn execute(&self, samples: &[f64], traced: bool) -> Result<SimulationResult, SimulationError> {
        let g = self.graph;
        if samples.len() != g.inputs {
            return Err(SimulationError::InputCount {
                expected: g.inputs,
                actual: samples.len(),
            });
        }
        let mut raw: Vec<i128> = Vec::with_capacity(g.nodes.len());
        let mut outputs = Vec::new();
        let mut trace = traced.then(Vec::new);
        let scale = pow2(self.frac);
        for (i, node) in g.nodes.iter().enumerate() {
            let bits = self.widths[i];
            let overflow = || SimulationError::Overflow {
                node: node.id,
                label: node.label.clone(),
            };
            let at = |id: NodeId| raw[id.0 as usize - 1];
            let (value, mode) = match node.op {
                Op::Input { port } => {
                    let x = samples[port];
                    if !(-1.0..=1.0).contains(&x) {
                        return Err(SimulationError::InputOutOfRange { port, value: x });
                    }
                    let r = scale_to_raw(x, self.frac, self.rounding).map_err(|_| overflow())?;
                    // the converter clips at full scale
                    (Some(r), OverflowMode::Saturate)
                }
                Op::Shift { src, amount } => (at(src).checked_mul(1i128 << amount), self.overflow),
                Op::Add { lhs, rhs } => (at(lhs).checked_add(at(rhs)), self.overflow),
                Op::Sub { lhs, rhs } => (at(lhs).checked_sub(at(rhs)), self.overflow),
                Op::IntMul { src, constant } => {
                    (at(src).checked_mul(constant as i128), self.overflow)
                }
                Op::FracMul { src, .. } => {
                    (self.frac_product(at(src), self.constants[i]), self.overflow)
                }
                Op::Output { src, .. } => (Some(at(src)), self.overflow),
            };
            let fitted = value
                .and_then(|v| fit_raw(v, bits, mode))
                .ok_or_else(overflow)?;
            raw.push(fitted);
            if let Op::Output {
                index, scale: s, ..
            } = node.op
            {
                outputs.push(OutputValue {
                    index,
                    raw: fitted,
                    value: fitted as f64 / scale / s,
                });
            }
            if let Some(t) = trace.as_mut() {
                t.push(TraceEntry {
                    id: node.id,
                    label: node.label.clone(),
                    total_bits: bits,
                    raw: fitted,
                    value: fitted as f64 / scale,
                });
            }
        }
        outputs.sort_by_key(|o| o.index);
        Ok(SimulationResult { outputs, trace })
    }

    fn frac_product(&self, x: i128, c: i128) -> Option<i128> {
        match x.checked_mul(c) {
            Some(p) => shift_right_rounded(p, self.frac, self.rounding),
            None => {
                let mut p = BigInt::from(x) * BigInt::from(c);
                if self.rounding == Rounding::RoundHalfUp && self.frac > 0 {
                    p += BigInt::one() << (self.frac - 1);
                }
                (p >> self.frac).to_i128()
            }
        }
    }
}

pub fn simulate(
    graph: &ArchitectureGraph,
    samples: &[f64],
    schedule: &QuantizationSchedule,
) -> Result<SimulationResult, SimulationError> {
    Simulator::new(graph, schedule)?.run(samples)
}

pub fn simulate_traced(
    graph: &ArchitectureGraph,
    samples: &[f64],
    schedule: &QuantizationSchedule,
) -> Result<SimulationResult, SimulationError> {
    Simulator::new(graph, schedule)?.run_traced(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::act::{act_mertens, act_null_mean};
    use crate::arch::graph::{
        build_arch1_graph, build_arch2_graph, build_graph, Arch, Node, Stage,
    };
    use crate::arch::schedule::{default_schedule, minimal_schedule};
    use crate::sampling::{NonUniformSamples, SamplingGrid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn random_samples(seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..10).map(|_| rng.random_range(-1.0..=1.0)).collect()
    }

    fn float_reference(arch: Arch, x: &[f64]) -> Vec<f64> {
        let grid = Arc::new(SamplingGrid::build(8).unwrap());
        let s = NonUniformSamples::new(grid, x.to_vec()).unwrap();
        match arch {
            Arch::I => act_null_mean(&s).into_vec(),
            Arch::II => act_mertens(&s).unwrap().into_vec(),
        }
    }

    #[test]
    fn zero_in_zero_out() {
        for arch in [Arch::I, Arch::II] {
            let g = build_graph(arch);
            let r = simulate(&g, &[0.0; 10], &default_schedule(&g, 8)).unwrap();
            assert!(r.outputs.iter().all(|o| o.raw == 0));
            assert_eq!(r.outputs.len(), if arch == Arch::I { 7 } else { 8 });
        }
    }

    #[test]
    fn wide_words_match_floating_point() {
        for arch in [Arch::I, Arch::II] {
            let g = build_graph(arch);
            let sched = default_schedule(&g, 32);
            for seed in 0..20 {
                let x = random_samples(seed);
                let got = simulate(&g, &x, &sched).unwrap().spectrum();
                let want = float_reference(arch, &x);
                for k in arch.output_indices() {
                    assert!(
                        (got[k] - want[k]).abs() < 1e-6,
                        "{arch} k={k}: {} vs {}",
                        got[k],
                        want[k]
                    );
                }
            }
        }
    }

    #[test]
    fn very_wide_words_converge() {
        for arch in [Arch::I, Arch::II] {
            let g = build_graph(arch);
            let sched = minimal_schedule(&g, 50, Rounding::RoundHalfUp);
            let x = random_samples(99);
            let got = simulate(&g, &x, &sched).unwrap().spectrum();
            let want = float_reference(arch, &x);
            for k in arch.output_indices() {
                assert!((got[k] - want[k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn arch1_is_exact_on_quantized_inputs() {
        // no fractional multiplies: the only error is input quantization
        let g = build_arch1_graph();
        let sched = default_schedule(&g, 10);
        let x: Vec<f64> = random_samples(5)
            .iter()
            .map(|v| (v * 512.0).round() / 512.0)
            .collect();
        let got = simulate(&g, &x, &sched).unwrap().spectrum();
        let want = float_reference(Arch::I, &x);
        for k in 1..8 {
            assert!((got[k] - want[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn tiny_increments_overflow_with_node_named() {
        let g = build_arch1_graph();
        let mut sched = default_schedule(&g, 8);
        for d in sched.deltas.values_mut() {
            *d = 0;
        }
        let err = simulate(&g, &[1.0; 10], &sched).unwrap_err();
        match err {
            SimulationError::Overflow { node, label } => {
                assert!(node.0 > 10);
                assert_eq!(g.node(node).label, label);
            }
            other => panic!("unexpected {other:?}"),
        }
        let saturating = sched.with_overflow(OverflowMode::Saturate);
        assert!(simulate(&g, &[1.0; 10], &saturating).is_ok());
    }

    #[test]
    fn input_checks() {
        let g = build_arch1_graph();
        let s = default_schedule(&g, 8);
        assert!(matches!(
            simulate(&g, &[0.0; 9], &s),
            Err(SimulationError::InputCount {
                expected: 10,
                actual: 9
            })
        ));
        let mut x = [0.0; 10];
        x[3] = 1.5;
        assert!(matches!(
            simulate(&g, &x, &s),
            Err(SimulationError::InputOutOfRange { port: 3, .. })
        ));
        let mut missing = s.clone();
        missing.deltas.remove(&5);
        assert!(matches!(
            simulate(&g, &[0.0; 10], &missing),
            Err(SimulationError::MissingDelta(NodeId(5)))
        ));
        assert!(matches!(
            simulate(&g, &[0.0; 10], &s.with_base_l(110)),
            Err(SimulationError::UnsupportedWidth { .. })
        ));
    }

    #[test]
    fn full_scale_input_saturates() {
        let g = build_arch1_graph();
        let r = simulate_traced(&g, &[1.0; 10], &default_schedule(&g, 8)).unwrap();
        let trace = r.trace.unwrap();
        assert_eq!(trace[0].raw, 127);
    }

    #[test]
    fn deterministic() {
        let g = build_arch2_graph();
        let s = default_schedule(&g, 12);
        let x = random_samples(3);
        assert_eq!(simulate(&g, &x, &s).unwrap(), simulate(&g, &x, &s).unwrap());
    }

    #[test]
    fn integer_multiply_matches_shift_add_expansion() {
        // collapse channel 1's 420× chain into a single IntMul node
        let g = build_arch1_graph();
        let chain: Vec<&Node> = g
            .nodes
            .iter()
            .filter(|n| n.label.starts_with("420 * channel 1"))
            .collect();
        let last = chain.last().unwrap().id;
        let mut alt = g.clone();
        alt.nodes[last.0 as usize - 1].op = Op::IntMul {
            src: NodeId(1),
            constant: 420,
        };
        alt.nodes[last.0 as usize - 1].stage = Stage::ChannelScale;
        let s = default_schedule(&g, 12);
        for seed in 0..10 {
            let x = random_samples(seed);
            assert_eq!(
                simulate(&g, &x, &s).unwrap().outputs,
                simulate(&alt, &x, &s).unwrap().outputs
            );
        }
    }

    #[test]
    fn big_products_fall_back_to_bigint() {
        let g = build_arch2_graph();
        let sched = minimal_schedule(&g, 100, Rounding::Truncate);
        let x = random_samples(7);
        let got = simulate(&g, &x, &sched).unwrap().spectrum();
        let want = float_reference(Arch::II, &x);
        for k in 0..8 {
            assert!((got[k] - want[k]).abs() < 1e-9);
        }
    }
}
