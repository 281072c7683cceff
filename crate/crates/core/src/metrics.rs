//! Error metrics and the randomized word-length experiment.
//!
//! Trial `t` draws its signal from `ChaCha8Rng::seed_from_u64(seed)` switched
//! to stream `t`, taking eight `random_range(-1.0..=1.0)` values. Signals do
//! not depend on `L` or on evaluation order, so serial and parallel runs see
//! the same inputs and reduce them in the same (trial) order.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::act::{dct2_oracle, ActError, SpectralCoefficients};
use crate::arch::{build_graph, Arch, QuantizationSchedule, SimulationError, Simulator};
use crate::sampling::{Interpolator, SamplingGrid, UniformSignal};

/// PSNR reported when the error is exactly zero.
pub const PSNR_CAP_DB: f64 = 400.0;
/// Reference maxima below this make the percentage error 0.
pub const PCT_REFERENCE_FLOOR: f64 = 1e-12;
pub const DEFAULT_TRIALS: usize = 10_000;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("estimate has {estimate} coefficients, reference has {reference}")]
    LengthMismatch { estimate: usize, reference: usize },
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error("trial {trial} at L = {l}: {source}")]
    Simulation {
        trial: usize,
        l: u32,
        #[source]
        source: SimulationError,
    },
    #[error(transparent)]
    Transform(#[from] ActError),
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<(), MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch {
            estimate: a.len(),
            reference: b.len(),
        });
    }
    Ok(())
}

fn pct_slices(est: &[f64], reference: &[f64]) -> f64 {
    let peak = reference.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak < PCT_REFERENCE_FLOOR || est.is_empty() {
        return 0.0;
    }
    let sum: f64 = est.iter().zip(reference).map(|(e, r)| e - r).sum();
    100.0 * sum / est.len() as f64 / peak
}

/// Signed `100 · mean_k (V̂_k − V_k) / max_j |V_j|`.
pub fn pct_error(
    estimate: &SpectralCoefficients<f64>,
    reference: &SpectralCoefficients<f64>,
) -> Result<f64, MetricsError> {
    check_lengths(estimate.values(), reference.values())?;
    Ok(pct_slices(estimate.values(), reference.values()))
}

/// `10 · log10(peak² / mse)`, capped at [`PSNR_CAP_DB`].
pub fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse <= 0.0 {
        return PSNR_CAP_DB;
    }
    (10.0 * (peak * peak / mse).log10()).min(PSNR_CAP_DB)
}

pub fn psnr(
    estimate: &SpectralCoefficients<f64>,
    reference: &SpectralCoefficients<f64>,
    peak: f64,
) -> Result<f64, MetricsError> {
    check_lengths(estimate.values(), reference.values())?;
    let n = estimate.len().max(1) as f64;
    let mse = estimate
        .values()
        .iter()
        .zip(reference.values())
        .map(|(e, r)| (e - r) * (e - r))
        .sum::<f64>()
        / n;
    Ok(psnr_from_mse(mse, peak))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub arch: Arch,
    pub word_lengths: Vec<u32>,
    pub trials: usize,
    pub seed: u64,
    pub input_range: [f64; 2],
    pub peak: f64,
    /// Evaluate trials on the rayon pool. Does not change results.
    #[serde(skip)]
    pub parallel: bool,
}

impl TrialConfig {
    pub fn new(arch: Arch, word_lengths: Vec<u32>, trials: usize, seed: u64) -> Self {
        Self {
            arch,
            word_lengths,
            trials,
            seed,
            input_range: [-1.0, 1.0],
            peak: 1.0,
            parallel: true,
        }
    }

    pub fn serial(mut self) -> Self {
        self.parallel = false;
        self
    }

    fn validate(&self) -> Result<(), MetricsError> {
        if self.trials == 0 {
            return Err(MetricsError::Config("trials must be at least 1".into()));
        }
        if self.word_lengths.is_empty() {
            return Err(MetricsError::Config("no word lengths given".into()));
        }
        if let Some(l) = self.word_lengths.iter().find(|&&l| l < 2) {
            return Err(MetricsError::Config(format!("word length {l} is below 2")));
        }
        if self.peak.is_nan() || self.peak <= 0.0 {
            return Err(MetricsError::Config("peak must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub l: u32,
    pub avg_pct_error: f64,
    pub psnr_db: f64,
    pub mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub config: TrialConfig,
    pub schedule: QuantizationSchedule,
    pub rows: Vec<MetricsRow>,
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "L,arch,avg_pct_error,psnr_db,trials,seed";

    pub fn row(&self, l: u32) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.l == l)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.l,
                self.config.arch,
                r.avg_pct_error,
                r.psnr_db,
                self.config.trials,
                self.config.seed
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// One trial's input and reference, shared by every word length.
#[derive(Debug, Clone)]
pub struct PreparedTrial {
    pub samples: Vec<f64>,
    pub reference: Vec<f64>,
}

/// The uniform signal of trial `trial`, before mean removal or scaling.
pub fn trial_signal(seed: u64, trial: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    (0..8).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

/// Builds the simulator input for one trial: mean removal for Arch I,
/// interpolation onto the grid, then joint rescaling so no sample exceeds
/// full scale.
pub fn prepare_trial(
    arch: Arch,
    interpolator: &Interpolator<f64>,
    seed: u64,
    trial: usize,
) -> PreparedTrial {
    let mut signal = UniformSignal::new(trial_signal(seed, trial));
    if arch == Arch::I {
        signal = signal.without_mean();
    }
    let samples = interpolator
        .interpolate(&signal)
        .expect("an 8-point signal fits the 8-point grid");
    let peak = samples.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (signal, mut samples) = if peak > 1.0 {
        (
            UniformSignal::new(signal.values().iter().map(|v| v / peak).collect()),
            samples
                .values()
                .iter()
                .map(|v| v / peak)
                .collect::<Vec<_>>(),
        )
    } else {
        (signal, samples.values().to_vec())
    };
    // division can leave a sample a hair above 1
    for s in &mut samples {
        *s = s.clamp(-1.0, 1.0);
    }
    PreparedTrial {
        samples,
        reference: dct2_oracle(&signal).into_vec(),
    }
}

struct TrialError {
    sq: f64,
    count: usize,
    pct: f64,
}

pub fn run_experiment(
    cfg: &TrialConfig,
    schedule_template: &QuantizationSchedule,
) -> Result<MetricsReport, MetricsError> {
    cfg.validate()?;
    let graph = build_graph(cfg.arch);
    let grid = Arc::new(SamplingGrid::build(8).map_err(ActError::from)?);
    let interpolator = Interpolator::<f64>::new(grid);
    let prepare = |t| prepare_trial(cfg.arch, &interpolator, cfg.seed, t);
    let trials: Vec<PreparedTrial> = if cfg.parallel {
        (0..cfg.trials).into_par_iter().map(prepare).collect()
    } else {
        (0..cfg.trials).map(prepare).collect()
    };
    let indices: Vec<usize> = cfg.arch.output_indices().collect();

    let mut rows = Vec::with_capacity(cfg.word_lengths.len());
    for &l in &cfg.word_lengths {
        let schedule = schedule_template.with_base_l(l);
        let sim = Simulator::new(&graph, &schedule).map_err(|source| MetricsError::Simulation {
            trial: 0,
            l,
            source,
        })?;
        let eval = |(t, trial): (usize, &PreparedTrial)| -> Result<TrialError, MetricsError> {
            let out = sim
                .run(&trial.samples)
                .map_err(|source| MetricsError::Simulation {
                    trial: t,
                    l,
                    source,
                })?
                .spectrum();
            let est: Vec<f64> = indices.iter().map(|&k| out[k]).collect();
            let reference: Vec<f64> = indices.iter().map(|&k| trial.reference[k]).collect();
            Ok(TrialError {
                sq: est
                    .iter()
                    .zip(&reference)
                    .map(|(e, r)| (e - r) * (e - r))
                    .sum(),
                count: est.len(),
                pct: pct_slices(&est, &reference),
            })
        };
        let errors: Vec<TrialError> = if cfg.parallel {
            trials
                .par_iter()
                .enumerate()
                .map(eval)
                .collect::<Result<_, _>>()?
        } else {
            trials
                .iter()
                .enumerate()
                .map(eval)
                .collect::<Result<_, _>>()?
        };
        let (mut sq, mut count, mut pct) = (0.0, 0usize, 0.0);
        for e in &errors {
            sq += e.sq;
            count += e.count;
            pct += e.pct;
        }
        let mse = sq / count as f64;
        rows.push(MetricsRow {
            l,
            avg_pct_error: pct / errors.len() as f64,
            psnr_db: psnr_from_mse(mse, cfg.peak),
            mse,
        });
    }
    Ok(MetricsReport {
        config: cfg.clone(),
        schedule: schedule_template.clone(),
        rows,
    })
}

/// Least-squares slope of `y` against `x`.
pub fn regression_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
