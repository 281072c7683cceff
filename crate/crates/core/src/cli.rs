//! The `act` command-line tool.
//!
//! [`run`] does all the work and returns the payload instead of printing it,
//! so commands can be tested in-process. Exit codes: 0 success, 1 other
//! failure, 2 usage or malformed input, 3 length mismatch, 4 fixed-point
//! overflow.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde::Serialize;
use serde_json::Value;

use crate::act::{
    act_mertens, act_null_mean, build_factorization, mertens_matrix, mobius_matrix,
    reciprocal_diagonal, selection_matrix, transform_via_t,
};
use crate::arch::{
    build_graph, count_complexity, default_schedule, minimal_schedule, Arch, QuantizationSchedule,
    Rounding, SimulationError, Simulator,
};
use crate::linalg::{pseudo_inverse, DenseMatrix};
use crate::metrics::{run_experiment, MetricsError, TrialConfig, DEFAULT_TRIALS};
use crate::sampling::{
    build_w, mean_weights, Interpolator, NonUniformSamples, RationalPoint, SamplingGrid,
    UniformSignal,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_LENGTH: i32 = 3;
pub const EXIT_OVERFLOW: i32 = 4;

const N: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandResult {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CommandResult {
    fn ok(stdout: String) -> Self {
        Self {
            exit_code: EXIT_OK,
            stdout,
            stderr: String::new(),
        }
    }

    fn fail(exit_code: i32, message: impl Into<String>) -> Self {
        let mut stderr = message.into();
        if !stderr.ends_with('\n') {
            stderr.push('\n');
        }
        Self {
            exit_code,
            stdout: String::new(),
            stderr,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "act", version, about = "Arithmetic cosine transform tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    NullMean,
    Mertens,
    Factorized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MatrixName {
    W,
    #[value(name = "Wplus")]
    Wplus,
    T,
    #[value(name = "Mo")]
    Mo,
    #[value(name = "D1")]
    D1,
    S,
    #[value(name = "Me")]
    Me,
    MeanWeights,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Transform one set of samples.
    Transform {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "mertens")]
        mode: Mode,
        /// The file holds 8 uniform samples to interpolate first.
        #[arg(long)]
        from_uniform: bool,
    },
    /// Print a transform matrix as CSV.
    Matrices {
        #[arg(value_enum, ignore_case = true)]
        which: MatrixName,
        /// Exact rationals (Mo, D1, S, Me only).
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        json: bool,
    },
    /// Run the bit-accurate simulator on one input.
    Simulate {
        #[arg(long)]
        arch: Arch,
        /// Base word length; defaults to the schedule's.
        #[arg(long)]
        l: Option<u32>,
        #[arg(long)]
        schedule: Option<PathBuf>,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        trace: bool,
    },
    /// Word-length sweep over random inputs.
    Sweep {
        #[arg(long)]
        arch: Arch,
        #[arg(long, value_delimiter = ',', default_value = "8,12,16,20,24,28,32")]
        word_lengths: Vec<u32>,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Schedule template; its increments are reused at every L.
        #[arg(long)]
        schedule: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Evaluate trials on one thread.
        #[arg(long)]
        serial: bool,
        #[arg(long)]
        json: bool,
    },
    /// Multiplier and adder counts.
    Complexity {
        #[arg(long)]
        arch: Arch,
    },
    /// Sampling grid as JSON.
    Grid {
        #[arg(long, default_value_t = N)]
        n: usize,
    },
    /// Default or minimal schedule as JSON.
    Schedule {
        #[arg(long)]
        arch: Arch,
        #[arg(long)]
        l: u32,
        #[arg(long)]
        minimal: bool,
        #[arg(long, value_enum, default_value = "round-half-up")]
        rounding: RoundingArg,
    },
    /// Dataflow graph as JSON.
    Graph {
        #[arg(long)]
        arch: Arch,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RoundingArg {
    Truncate,
    RoundHalfUp,
}

impl From<RoundingArg> for Rounding {
    fn from(r: RoundingArg) -> Self {
        match r {
            RoundingArg::Truncate => Rounding::Truncate,
            RoundingArg::RoundHalfUp => Rounding::RoundHalfUp,
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, S>(args: I) -> CommandResult
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                CommandResult::ok(text)
            } else {
                CommandResult::fail(code, text)
            };
        }
    };
    let outcome = match cli.command {
        Command::Transform {
            input,
            mode,
            from_uniform,
        } => cmd_transform(&input, mode, from_uniform),
        Command::Matrices { which, exact, json } => cmd_matrices(which, exact, json),
        Command::Simulate {
            arch,
            l,
            schedule,
            input,
            trace,
        } => cmd_simulate(arch, l, schedule.as_deref(), &input, trace),
        Command::Sweep {
            arch,
            word_lengths,
            trials,
            seed,
            schedule,
            out,
            serial,
            json,
        } => cmd_sweep(
            arch,
            word_lengths,
            trials,
            seed,
            schedule.as_deref(),
            out.as_deref(),
            serial,
            json,
        ),
        Command::Complexity { arch } => Ok(to_json(&count_complexity(&build_graph(arch)))),
        Command::Grid { n } => SamplingGrid::build(n)
            .map(|g| to_json(&g.export()))
            .map_err(|e| Failure::new(EXIT_USAGE, e.to_string())),
        Command::Schedule {
            arch,
            l,
            minimal,
            rounding,
        } => cmd_schedule(arch, l, minimal, rounding.into()),
        Command::Graph { arch } => Ok(to_json(&build_graph(arch))),
    };
    match outcome {
        Ok(stdout) => CommandResult::ok(stdout),
        Err(f) => CommandResult::fail(f.code, f.message),
    }
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

type Outcome = Result<String, Failure>;

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("payload serialises");
    s.push('\n');
    s
}

fn grid8() -> Arc<SamplingGrid> {
    Arc::new(SamplingGrid::build(N).expect("n = 8 grid"))
}

/// Reads a sample file: a bare JSON array, or `{"grid": [...], "samples": [...]}`
/// where the optional grid must match the transform's own.
fn read_samples(path: &Path, expected: usize, check_grid: bool) -> Result<Vec<f64>, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", path.display())))?;
    let malformed = |msg: String| Failure::new(EXIT_USAGE, format!("{}: {msg}", path.display()));
    let value: Value = serde_json::from_str(&text).map_err(|e| malformed(e.to_string()))?;
    let samples = match value {
        Value::Array(_) => value,
        Value::Object(mut map) => {
            if let Some(grid) = map.remove("grid") {
                let points: Vec<RationalPoint> =
                    serde_json::from_value(grid).map_err(|e| malformed(format!("grid: {e}")))?;
                let points: Option<Vec<BigRational>> =
                    points.into_iter().map(|p| p.to_rational()).collect();
                let points =
                    points.ok_or_else(|| malformed("grid point with zero denominator".into()))?;
                if check_grid && points != grid8().points() {
                    return Err(malformed(
                        "embedded grid differs from the 8-point sampling grid".into(),
                    ));
                }
            }
            map.remove("samples")
                .ok_or_else(|| malformed("missing \"samples\"".into()))?
        }
        _ => return Err(malformed("expected an array or an object".into())),
    };
    let values: Vec<f64> =
        serde_json::from_value(samples).map_err(|e| malformed(format!("samples: {e}")))?;
    if values.len() != expected {
        return Err(Failure::new(
            EXIT_LENGTH,
            format!(
                "{}: expected {expected} samples, got {}",
                path.display(),
                values.len()
            ),
        ));
    }
    Ok(values)
}

fn cmd_transform(input: &Path, mode: Mode, from_uniform: bool) -> Outcome {
    let grid = grid8();
    let samples = if from_uniform {
        let v = read_samples(input, N, false)?;
        Interpolator::<f64>::new(Arc::clone(&grid))
            .interpolate(&UniformSignal::new(v))
            .map_err(|e| Failure::new(EXIT_FAILURE, e.to_string()))?
    } else {
        let v = read_samples(input, grid.len(), true)?;
        NonUniformSamples::new(Arc::clone(&grid), v)
            .map_err(|e| Failure::new(EXIT_LENGTH, e.to_string()))?
    };
    let internal = |e: crate::act::ActError| Failure::new(EXIT_FAILURE, e.to_string());
    let coeffs: Vec<f64> = match mode {
        Mode::NullMean => act_null_mean(&samples).ac().to_vec(),
        Mode::Mertens => act_mertens(&samples).map_err(internal)?.into_vec(),
        Mode::Factorized => {
            let bundle = build_factorization::<f64>(&grid).map_err(internal)?;
            transform_via_t(&samples, &bundle)
                .map_err(internal)?
                .ac()
                .to_vec()
        }
    };
    let mut out = serde_json::to_string(&coeffs).expect("finite coefficients");
    out.push('\n');
    Ok(out)
}

fn float_csv(m: &DenseMatrix<f64>) -> String {
    m.to_csv_with(|x| format!("{x:?}"))
}

fn cmd_matrices(which: MatrixName, exact: bool, json: bool) -> Outcome {
    let grid = grid8();
    let rational = match which {
        MatrixName::Mo => Some(mobius_matrix(N)),
        MatrixName::D1 => Some(reciprocal_diagonal(N)),
        MatrixName::S => Some(selection_matrix(&grid)),
        MatrixName::Me => mertens_matrix(N),
        _ => None,
    };
    if exact {
        let m = rational
            .ok_or_else(|| Failure::new(EXIT_USAGE, format!("{which:?} has no exact form")))?;
        return Ok(if json {
            let rows: Vec<Vec<String>> = (0..m.rows())
                .map(|i| m.row(i).iter().map(|x| x.to_string()).collect())
                .collect();
            to_json(&rows)
        } else {
            m.to_csv_with(|x| x.to_string())
        });
    }
    let internal = |e: String| Failure::new(EXIT_FAILURE, e);
    let m: DenseMatrix<f64> = match (which, rational) {
        (_, Some(r)) => r.map(crate::scalar::Scalar::to_f64),
        (MatrixName::W, _) => build_w(&grid),
        (MatrixName::Wplus, _) => {
            pseudo_inverse(&build_w::<f64>(&grid)).map_err(|e| internal(e.to_string()))?
        }
        (MatrixName::T, _) => {
            build_factorization::<f64>(&grid)
                .map_err(|e| internal(e.to_string()))?
                .t
        }
        (MatrixName::MeanWeights, _) => {
            let w = mean_weights::<f64>(&grid).map_err(|e| internal(e.to_string()))?;
            DenseMatrix::new(1, w.len(), w).expect("row vector")
        }
        _ => unreachable!("exact matrices are handled above"),
    };
    Ok(if json {
        let rows: Vec<Vec<f64>> = (0..m.rows()).map(|i| m.row(i).to_vec()).collect();
        to_json(&rows)
    } else {
        float_csv(&m)
    })
}

fn load_schedule(path: &Path) -> Result<QuantizationSchedule, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", path.display())))?;
    QuantizationSchedule::from_json(&text)
        .map_err(|e| Failure::new(EXIT_USAGE, format!("{}: {e}", path.display())))
}

fn simulation_failure(e: SimulationError) -> Failure {
    let code = match e {
        SimulationError::Overflow { .. } => EXIT_OVERFLOW,
        SimulationError::InputCount { .. } => EXIT_LENGTH,
        SimulationError::MissingDelta(_)
        | SimulationError::InputOutOfRange { .. }
        | SimulationError::UnsupportedWidth { .. } => EXIT_USAGE,
        SimulationError::InvalidGraph(_) => EXIT_FAILURE,
    };
    Failure::new(code, e.to_string())
}

#[derive(Serialize)]
struct SimulateOutput<'a> {
    arch: Arch,
    l: u32,
    #[serde(flatten)]
    result: &'a crate::arch::SimulationResult,
}

fn cmd_simulate(
    arch: Arch,
    l: Option<u32>,
    schedule: Option<&Path>,
    input: &Path,
    trace: bool,
) -> Outcome {
    let graph = build_graph(arch);
    let schedule = match schedule {
        Some(path) => {
            let s = load_schedule(path)?;
            if let Some(l) = l.filter(|&l| l != s.base_l) {
                return Err(Failure::new(
                    EXIT_USAGE,
                    format!("--l {l} disagrees with the schedule's base_l {}", s.base_l),
                ));
            }
            s
        }
        None => {
            let l =
                l.ok_or_else(|| Failure::new(EXIT_USAGE, "either --l or --schedule is required"))?;
            if l < 2 {
                return Err(Failure::new(EXIT_USAGE, "word length must be at least 2"));
            }
            default_schedule(&graph, l)
        }
    };
    let samples = read_samples(input, graph.inputs, true)?;
    let sim = Simulator::new(&graph, &schedule).map_err(simulation_failure)?;
    let result = if trace {
        sim.run_traced(&samples)
    } else {
        sim.run(&samples)
    }
    .map_err(simulation_failure)?;
    Ok(to_json(&SimulateOutput {
        arch,
        l: schedule.base_l,
        result: &result,
    }))
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    arch: Arch,
    word_lengths: Vec<u32>,
    trials: usize,
    seed: u64,
    schedule: Option<&Path>,
    out: Option<&Path>,
    serial: bool,
    json: bool,
) -> Outcome {
    let graph = build_graph(arch);
    let template = match schedule {
        Some(path) => load_schedule(path)?,
        None => default_schedule(&graph, word_lengths.first().copied().unwrap_or(8).max(2)),
    };
    let mut cfg = TrialConfig::new(arch, word_lengths, trials, seed);
    cfg.parallel = !serial;
    let report = run_experiment(&cfg, &template).map_err(|e| match e {
        MetricsError::Config(_) => Failure::new(EXIT_USAGE, e.to_string()),
        MetricsError::Simulation {
            source: SimulationError::Overflow { .. },
            ..
        } => Failure::new(EXIT_OVERFLOW, e.to_string()),
        other => Failure::new(EXIT_FAILURE, other.to_string()),
    })?;
    let payload = if json {
        let mut s = report.to_json();
        s.push('\n');
        s
    } else {
        report.to_csv()
    };
    match out {
        Some(path) => {
            fs::write(path, &payload)
                .map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display())))?;
            Ok(String::new())
        }
        None => Ok(payload),
    }
}

fn cmd_schedule(arch: Arch, l: u32, minimal: bool, rounding: Rounding) -> Outcome {
    if l < 2 {
        return Err(Failure::new(EXIT_USAGE, "word length must be at least 2"));
    }
    let graph = build_graph(arch);
    let s = if minimal {
        minimal_schedule(&graph, l, rounding)
    } else {
        default_schedule(&graph, l).with_rounding(rounding)
    };
    let mut text = s.to_json();
    text.push('\n');
    Ok(text)
}
