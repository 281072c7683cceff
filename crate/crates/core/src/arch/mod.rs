//! Bit-accurate models of the two hardware architectures for `N = 8`.

pub mod csd;
pub mod fixed;
pub mod graph;
pub mod schedule;
pub mod simulate;

pub use fixed::{quantize, FixedPointError, FixedPointValue, OverflowMode, Rounding};
pub use graph::{
    build_arch1_graph, build_arch2_graph, build_graph, count_complexity, Arch, ArchitectureGraph,
    ComplexityReport, Node, NodeId, Op, Stage,
};
pub use schedule::{
    default_schedule, minimal_schedule, required_deltas, QuantizationSchedule, ScheduleError,
};
pub use simulate::{simulate, simulate_traced, SimulationError, SimulationResult, Simulator};
