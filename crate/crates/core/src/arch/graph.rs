//! Dataflow graphs of the two architectures.
//!
//! Node ids are 1-based and follow creation order, which is also a valid
//! evaluation order: inputs in grid order, then per-channel tap shifts, channel
//! sums and shift-add scaling, then the Möbius stage. Architecture II appends
//! the mean block, the Mertens correction stage and the `V_0` path, so its ids
//! continue where the shared null-mean block ends.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::csd::{adder_cost, csd_digits};
use crate::numtheory::{big_m, mu};
use crate::sampling::{mean_weights, SamplingGrid};

/// Transform length both architectures are built for.
pub const ARCH_N: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Arch {
    /// Null-mean, multiplier-free.
    I,
    /// Mean recovery plus Mertens correction.
    II,
}

impl Arch {
    /// Coefficient indices the architecture produces.
    pub fn output_indices(self) -> std::ops::Range<usize> {
        match self {
            Arch::I => 1..ARCH_N,
            Arch::II => 0..ARCH_N,
        }
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arch::I => "I",
            Arch::II => "II",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown architecture {0:?} (expected I or II)")]
pub struct ParseArchError(String);

impl FromStr for Arch {
    type Err = ParseArchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(Arch::I),
            "II" | "2" => Ok(Arch::II),
            _ => Err(ParseArchError(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Op {
    Input {
        port: usize,
    },
    /// Left shift, `× 2^amount`.
    Shift {
        src: NodeId,
        amount: u32,
    },
    Add {
        lhs: NodeId,
        rhs: NodeId,
    },
    Sub {
        lhs: NodeId,
        rhs: NodeId,
    },
    /// Integer constant multiply, costed as its CSD shift-add network.
    IntMul {
        src: NodeId,
        constant: i64,
    },
    FracMul {
        src: NodeId,
        constant: f64,
    },
    Output {
        src: NodeId,
        index: usize,
        scale: f64,
    },
}

impl Op {
    pub fn operands(&self) -> Vec<NodeId> {
        match *self {
            Op::Input { .. } => vec![],
            Op::Shift { src, .. }
            | Op::IntMul { src, .. }
            | Op::FracMul { src, .. }
            | Op::Output { src, .. } => vec![src],
            Op::Add { lhs, rhs } | Op::Sub { lhs, rhs } => vec![lhs, rhs],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Input,
    TapShift,
    ChannelSum,
    ChannelScale,
    Mobius,
    MeanProduct,
    MeanSum,
    MeanScale,
    Correction,
    DcScale,
    Output,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub stage: Stage,
    pub label: String,
    #[serde(flatten)]
    pub op: Op,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureGraph {
    pub arch: Arch,
    pub inputs: usize,
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("node at position {position} has id {id}, expected {expected}")]
    BadId {
        position: usize,
        id: NodeId,
        expected: NodeId,
    },
    #[error("node {node} reads {operand}, which is not an earlier node")]
    ForwardReference { node: NodeId, operand: NodeId },
    #[error("node {node} reads input port {port}, but the graph has {inputs} inputs")]
    BadPort {
        node: NodeId,
        port: usize,
        inputs: usize,
    },
    #[error("output index {0} is produced more than once")]
    DuplicateOutput(usize),
}

impl ArchitectureGraph {
    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0 as usize - 1]
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().map(|n| n.id)
    }

    /// Checks ids are sequential and every operand precedes its reader, which
    /// makes node order a topological order.
    pub fn validate(&self) -> Result<(), GraphError> {
        let mut outputs = BTreeMap::new();
        for (pos, node) in self.nodes.iter().enumerate() {
            let expected = NodeId(pos as u32 + 1);
            if node.id != expected {
                return Err(GraphError::BadId {
                    position: pos,
                    id: node.id,
                    expected,
                });
            }
            for operand in node.op.operands() {
                if operand.0 == 0 || operand.0 >= node.id.0 {
                    return Err(GraphError::ForwardReference {
                        node: node.id,
                        operand,
                    });
                }
            }
            match node.op {
                Op::Input { port } if port >= self.inputs => {
                    return Err(GraphError::BadPort {
                        node: node.id,
                        port,
                        inputs: self.inputs,
                    })
                }
                Op::Output { index, .. } if outputs.insert(index, node.id).is_some() => {
                    return Err(GraphError::DuplicateOutput(index));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn count(&self, pred: impl Fn(&Node) -> bool) -> usize {
        self.nodes.iter().filter(|n| pred(n)).count()
    }
}

struct Builder {
    nodes: Vec<Node>,
    shifts: HashMap<(NodeId, u32), NodeId>,
}

impl Builder {
    fn new() -> Self {
        Self {
            nodes: Vec::new(),
            shifts: HashMap::new(),
        }
    }

    fn push(&mut self, op: Op, stage: Stage, label: impl Into<String>) -> NodeId {
        let id = NodeId(self.nodes.len() as u32 + 1);
        self.nodes.push(Node {
            id,
            stage,
            label: label.into(),
            op,
        });
        id
    }

    fn shift(&mut self, src: NodeId, amount: u32, stage: Stage) -> NodeId {
        if amount == 0 {
            return src;
        }
        if let Some(&id) = self.shifts.get(&(src, amount)) {
            return id;
        }
        let label = format!("n{src} << {amount}");
        let id = self.push(Op::Shift { src, amount }, stage, label);
        self.shifts.insert((src, amount), id);
        id
    }

    /// `src × c` as a CSD shift-add chain, `c > 0`.
    fn csd_multiply(&mut self, src: NodeId, c: i64, stage: Stage, label: &str) -> NodeId {
        let digits = csd_digits(c);
        let mut acc = self.shift(src, digits[0].shift, stage);
        for d in &digits[1..] {
            let term = self.shift(src, d.shift, stage);
            let op = if d.negative {
                Op::Sub {
                    lhs: acc,
                    rhs: term,
                }
            } else {
                Op::Add {
                    lhs: acc,
                    rhs: term,
                }
            };
            acc = self.push(op, stage, format!("{label} partial"));
        }
        if let Some(last) = self.nodes.last_mut() {
            if last.id == acc {
                last.label = label.to_string();
            }
        }
        acc
    }

    fn finish(self, arch: Arch, inputs: usize) -> ArchitectureGraph {
        ArchitectureGraph {
            arch,
            inputs,
            nodes: self.nodes,
        }
    }
}

fn lcm_up_to(n: usize) -> i64 {
    (1..=n as i64).fold(1, num_integer::lcm)
}

/// Common scale of the integer channel weights, lcm(1..n−1) = 420 for n = 8.
pub fn channel_scale() -> i64 {
    lcm_up_to(ARCH_N - 1)
}

/// Scale carried by the AC outputs: lcm · √(2/n) = 210 for n = 8.
pub fn ac_output_scale() -> f64 {
    channel_scale() as f64 * (2.0 / ARCH_N as f64).sqrt()
}

struct NullMeanBlock {
    inputs: Vec<NodeId>,
    channels: Vec<NodeId>,
}

fn build_null_mean_block(b: &mut Builder, grid: &SamplingGrid) -> NullMeanBlock {
    let n = grid.n();
    let inputs: Vec<NodeId> = (0..grid.len())
        .map(|port| {
            let p = &grid.points()[port];
            b.push(
                Op::Input { port },
                Stage::Input,
                format!("x{port} at r = {p}"),
            )
        })
        .collect();

    let lcm = lcm_up_to(n - 1);
    let mut scaled = Vec::with_capacity(n - 1);
    for k in 1..n {
        let mut acc: Option<NodeId> = None;
        for (j, &x) in inputs.iter().enumerate() {
            let mult = grid.multiplicity(k, j) as i64;
            if mult == 0 {
                continue;
            }
            let term = if mult.count_ones() == 1 {
                b.shift(x, mult.trailing_zeros(), Stage::TapShift)
            } else {
                b.csd_multiply(x, mult, Stage::TapShift, &format!("{mult} * x{j}"))
            };
            acc = Some(match acc {
                None => term,
                Some(prev) => b.push(
                    Op::Add {
                        lhs: prev,
                        rhs: term,
                    },
                    Stage::ChannelSum,
                    format!("channel {k} sum"),
                ),
            });
        }
        let sum = acc.expect("every average has at least one tap");
        let weight = lcm / k as i64;
        scaled.push(b.csd_multiply(
            sum,
            weight,
            Stage::ChannelScale,
            &format!("{weight} * channel {k}"),
        ));
    }

    let last = n - 1;
    let channels = (1..n)
        .map(|k| {
            let mut acc = scaled[k - 1];
            for l in 2..=last / k {
                let op = match mu(l) {
                    1 => Op::Add {
                        lhs: acc,
                        rhs: scaled[k * l - 1],
                    },
                    -1 => Op::Sub {
                        lhs: acc,
                        rhs: scaled[k * l - 1],
                    },
                    _ => continue,
                };
                acc = b.push(
                    op,
                    Stage::Mobius,
                    format!("mobius {k} + mu({l}) * channel {}", k * l),
                );
            }
            acc
        })
        .collect();
    NullMeanBlock { inputs, channels }
}

fn grid8() -> SamplingGrid {
    SamplingGrid::build(ARCH_N).expect("n = 8 is a valid grid length")
}

/// Architecture I: integer channel weights `(420/k) · S_k`, realised with
/// shifts and adders, followed by the Möbius combination. Outputs carry scale
/// 210.
pub fn build_arch1_graph() -> ArchitectureGraph {
    let grid = grid8();
    let mut b = Builder::new();
    let block = build_null_mean_block(&mut b, &grid);
    let scale = ac_output_scale();
    for (i, &y) in block.channels.iter().enumerate() {
        let k = i + 1;
        b.push(
            Op::Output {
                src: y,
                index: k,
                scale,
            },
            Stage::Output,
            format!("V{k}"),
        );
    }
    b.finish(Arch::I, grid.len())
}

/// Architecture II: Architecture I plus the mean block (10 fractional
/// multipliers and an adder tree), the Mertens correction of each channel,
/// and `V_0 = √8 · mean` (the 11th fractional multiplier).
pub fn build_arch2_graph() -> ArchitectureGraph {
    let grid = grid8();
    let n = grid.n();
    let weights =
        mean_weights::<f64>(&grid).expect("the 8-point interpolation matrix has full column rank");
    let mut b = Builder::new();
    let block = build_null_mean_block(&mut b, &grid);

    let mut level: Vec<NodeId> = block
        .inputs
        .iter()
        .zip(&weights)
        .enumerate()
        .map(|(j, (&x, &w))| {
            b.push(
                Op::FracMul {
                    src: x,
                    constant: w,
                },
                Stage::MeanProduct,
                format!("w{j} * x{j}"),
            )
        })
        .collect();
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        for pair in level.chunks(2) {
            next.push(match *pair {
                [a, c] => b.push(Op::Add { lhs: a, rhs: c }, Stage::MeanSum, "mean tree"),
                [a] => a,
                _ => unreachable!(),
            });
        }
        level = next;
    }
    let mean = level[0];
    if let Some(node) = b.nodes.last_mut() {
        node.label = "mean".to_string();
    }

    let lcm = lcm_up_to(n - 1);
    let scaled_mean = b.csd_multiply(mean, lcm, Stage::MeanScale, &format!("{lcm} * mean"));

    let mut outputs = Vec::with_capacity(n);
    let dc = b.push(
        Op::FracMul {
            src: mean,
            constant: (n as f64).sqrt(),
        },
        Stage::DcScale,
        "sqrt(8) * mean",
    );
    outputs.push((0, dc, 1.0));

    for (i, &y) in block.channels.iter().enumerate() {
        let k = i + 1;
        // channel k gains −M(⌊7/k⌋) · lcm · mean
        let weight = -big_m((n - 1) / k);
        let corrected = if weight == 0 {
            y
        } else {
            let mag = weight.abs();
            let term = if mag.count_ones() == 1 {
                b.shift(scaled_mean, mag.trailing_zeros(), Stage::Correction)
            } else {
                b.csd_multiply(
                    scaled_mean,
                    mag,
                    Stage::Correction,
                    &format!("{mag} * scaled mean"),
                )
            };
            let op = if weight > 0 {
                Op::Add { lhs: y, rhs: term }
            } else {
                Op::Sub { lhs: y, rhs: term }
            };
            b.push(op, Stage::Correction, format!("corrected channel {k}"))
        };
        outputs.push((k, corrected, ac_output_scale()));
    }

    for (index, src, scale) in outputs {
        b.push(
            Op::Output { src, index, scale },
            Stage::Output,
            format!("V{index}"),
        );
    }
    b.finish(Arch::II, grid.len())
}

pub fn build_graph(arch: Arch) -> ArchitectureGraph {
    match arch {
        Arch::I => build_arch1_graph(),
        Arch::II => build_arch2_graph(),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCount {
    pub multipliers: usize,
    pub two_input_adders: usize,
    pub shifts: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub arch: Arch,
    pub multipliers: usize,
    pub two_input_adders: usize,
    pub shifts: usize,
    pub by_stage: BTreeMap<Stage, StageCount>,
}

/// Multipliers are fractional-constant multiplies. Adders include those
/// inside shift-add realisations of integer constants; shifts are reported
/// separately.
pub fn count_complexity(graph: &ArchitectureGraph) -> ComplexityReport {
    let mut by_stage: BTreeMap<Stage, StageCount> = BTreeMap::new();
    for node in &graph.nodes {
        let entry = by_stage.entry(node.stage).or_default();
        match node.op {
            Op::FracMul { .. } => entry.multipliers += 1,
            Op::Add { .. } | Op::Sub { .. } => entry.two_input_adders += 1,
            Op::Shift { .. } => entry.shifts += 1,
            Op::IntMul { constant, .. } => {
                entry.two_input_adders += adder_cost(constant);
                entry.shifts += csd_digits(constant).iter().filter(|d| d.shift > 0).count();
            }
            Op::Input { .. } | Op::Output { .. } => {}
        }
    }
    ComplexityReport {
        arch: graph.arch,
        multipliers: by_stage.values().map(|c| c.multipliers).sum(),
        two_input_adders: by_stage.values().map(|c| c.two_input_adders).sum(),
        shifts: by_stage.values().map(|c| c.shifts).sum(),
        by_stage,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graphs_are_valid_dags() {
        for arch in [Arch::I, Arch::II] {
            let g = build_graph(arch);
            g.validate().unwrap();
            assert_eq!(g.inputs, 10);
        }
    }

    #[test]
    fn multiplier_counts() {
        assert_eq!(count_complexity(&build_arch1_graph()).multipliers, 0);
        assert_eq!(count_complexity(&build_arch2_graph()).multipliers, 11);
        assert_eq!(
            build_arch1_graph().count(|n| matches!(n.op, Op::FracMul { .. })),
            0
        );
    }

    #[test]
    fn adder_breakdown() {
        let r1 = count_complexity(&build_arch1_graph());
        assert_eq!(r1.by_stage[&Stage::ChannelSum].two_input_adders, 12);
        assert_eq!(r1.by_stage[&Stage::ChannelScale].two_input_adders, 16);
        // nonzero off-diagonal Möbius entries: 5 + 2 + 1
        assert_eq!(r1.by_stage[&Stage::Mobius].two_input_adders, 8);
        assert_eq!(r1.two_input_adders, 36);

        let r2 = count_complexity(&build_arch2_graph());
        assert_eq!(r2.by_stage[&Stage::MeanSum].two_input_adders, 9);
        assert_eq!(r2.by_stage[&Stage::MeanScale].two_input_adders, 3);
        assert_eq!(r2.by_stage[&Stage::Correction].two_input_adders, 6);
        assert_eq!(r2.two_input_adders, 54);
    }

    #[test]
    fn scales() {
        assert_eq!(channel_scale(), 420);
        assert!((ac_output_scale() - 210.0).abs() < 1e-12);
    }

    #[test]
    fn first_channel_is_a_single_tap_times_420() {
        let g = build_arch1_graph();
        let chain: Vec<&Node> = g
            .nodes
            .iter()
            .filter(|n| n.label.contains("420 * channel 1"))
            .collect();
        assert_eq!(chain.len(), 3);
        assert!(chain
            .iter()
            .all(|n| matches!(n.op, Op::Add { .. } | Op::Sub { .. })));
    }

    #[test]
    fn seventh_channel_taps() {
        let g = build_arch1_graph();
        // 60 · [1,2,0,0,0,2,0,0,2,0]: one plain tap and three doubled taps
        let grid = grid8();
        let row: Vec<u32> = (0..10).map(|j| grid.multiplicity(7, j)).collect();
        assert_eq!(row, vec![1, 2, 0, 0, 0, 2, 0, 0, 2, 0]);
        let sums = g.count(|n| n.label == "channel 7 sum");
        assert_eq!(sums, 3);
        let doubled = g.count(|n| matches!(n.op, Op::Shift { amount: 1, src } if src.0 <= 10));
        assert!(doubled >= 3);
    }

    #[test]
    fn third_channel_is_not_corrected() {
        let g = build_arch2_graph();
        assert_eq!(g.count(|n| n.label == "corrected channel 3"), 0);
        assert_eq!(
            g.count(|n| n.stage == Stage::Correction && n.label.starts_with("corrected")),
            6
        );
    }

    #[test]
    fn arch2_extends_arch1_numbering() {
        let g1 = build_arch1_graph();
        let g2 = build_arch2_graph();
        let shared = g1.count(|n| n.stage != Stage::Output);
        assert_eq!(&g1.nodes[..shared], &g2.nodes[..shared]);
    }

    #[test]
    fn validation_catches_forward_refs() {
        let mut g = build_arch1_graph();
        g.nodes[12].op = Op::Shift {
            src: NodeId(40),
            amount: 1,
        };
        assert!(matches!(
            g.validate(),
            Err(GraphError::ForwardReference { .. })
        ));
    }

    #[test]
    fn json_dump_round_trips() {
        let g = build_arch2_graph();
        let json = serde_json::to_string(&g).unwrap();
        let back: ArchitectureGraph = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }

    #[test]
    fn arch_parsing() {
        assert_eq!("I".parse::<Arch>().unwrap(), Arch::I);
        assert_eq!("ii".parse::<Arch>().unwrap(), Arch::II);
        assert!("III".parse::<Arch>().is_err());
    }
}
