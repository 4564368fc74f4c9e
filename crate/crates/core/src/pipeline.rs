//! End-to-end estimation runs and seeded Monte Carlo aggregation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{sub_seed, synthesize, SnapshotSet};
use crate::correlation::{estimate_correlation, select_band, CorrelationSequence};
use crate::delay::{beamform, fit_delay_weighted, BeamformedSpectrum, DelayEstimate};
use crate::error::{JadeError, Result, Stage};
use crate::prony::{svd_prony, ModeEstimate};
use crate::pulse::{generate_pulse, spectrum_with_eta, SampledWaveform, Spectrum};
use crate::scenario::ScenarioConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleRow {
    pub theta_deg: f64,
    pub sin_theta: f64,
    pub amplitude: f64,
    /// Configured angle this estimate is paired with, when known.
    pub truth_deg: Option<f64>,
    pub error_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayTable {
    /// Per-snapshot fitted slopes `−τ̂`, `slopes[s][i]`.
    pub slopes: Vec<Vec<f64>>,
    pub rsq: Vec<Vec<f64>>,
    pub slope_median: Vec<f64>,
    pub slope_mean: Vec<f64>,
    pub tau_median: Vec<f64>,
    pub tau_mean: Vec<f64>,
    pub truth_tau: Option<Vec<f64>>,
    pub unreliable: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ScenarioConfig,
    pub seed: u64,
    pub band: (usize, usize),
    pub angles: Vec<AngleRow>,
    pub singular_values: Vec<f64>,
    pub delays: DelayTable,
    pub warnings: Vec<String>,
    /// Wall-clock milliseconds; left empty by the library so reports stay
    /// byte-identical across runs.
    pub timing_ms: Option<f64>,
}

impl RunReport {
    pub fn theta_deg(&self) -> Vec<f64> {
        self.angles.iter().map(|a| a.theta_deg).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| JadeError::Parse {
            line: e.line(),
            message: e.to_string(),
        })
    }
}

/// Every intermediate product of a run, for figure dumps.
#[derive(Debug, Clone)]
pub struct PipelineArtifacts {
    pub pulse: SampledWaveform,
    pub pulse_spectrum: Spectrum,
    pub snapshots: SnapshotSet,
    pub correlation: CorrelationSequence,
    pub modes: ModeEstimate,
    pub beams: BeamformedSpectrum,
    pub delays: DelayEstimate,
    pub report: RunReport,
}

fn stage<T>(stage: Stage, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        JadeError::Invalid(_) | JadeError::Parse { .. } | JadeError::Estimation { .. } => e,
        other => JadeError::estimation(stage, other.to_string()),
    })
}

pub fn run_pipeline(cfg: &ScenarioConfig) -> Result<RunReport> {
    run_stages(cfg).map(|a| a.report)
}

pub fn run_stages(cfg: &ScenarioConfig) -> Result<PipelineArtifacts> {
    cfg.validate()?;
    let pulse = stage(Stage::Pulse, generate_pulse(&cfg.pulse))?;
    let snapshots = stage(
        Stage::Synthesis,
        synthesize(
            &pulse,
            &cfg.paths,
            &cfg.array,
            &cfg.fading,
            cfg.snapshots,
            cfg.noise_var,
            cfg.seed,
        ),
    )?;
    estimate_stages(cfg, pulse, snapshots)
}

/// Runs the estimation half of the pipeline on given records. The pulse and
/// estimator settings come from `cfg`; configured paths, when present, are
/// used only to report errors.
pub fn estimate_stages(
    cfg: &ScenarioConfig,
    pulse: SampledWaveform,
    snapshots: SnapshotSet,
) -> Result<PipelineArtifacts> {
    if pulse.len() != snapshots.samples() {
        return Err(JadeError::invalid(format!(
            "pulse has {} samples but the records have {}",
            pulse.len(),
            snapshots.samples()
        )));
    }
    let pulse_spectrum = stage(Stage::Pulse, spectrum_with_eta(&pulse, cfg.eta))?;
    let band = stage(Stage::Band, select_band(&pulse_spectrum, cfg.eta))?;
    let correlation = stage(Stage::Correlation, estimate_correlation(&snapshots, band.clone()))?;
    let modes = stage(Stage::Prony, svd_prony(&correlation, &cfg.prony, snapshots.array.delta))?;
    let mut warnings = snapshots.array.warnings();
    warnings.extend(modes.warnings.iter().cloned());
    if !modes.valid {
        return Err(JadeError::estimation(Stage::Prony, modes.warnings.join("; ")));
    }
    let beams = stage(Stage::Beamform, beamform(&snapshots, &modes.s))?;
    let delays = stage(
        Stage::DelayFit,
        fit_delay_weighted(&beams, &pulse_spectrum, band.clone(), cfg.fit_weighting),
    )?;
    for (i, &n) in delays.unreliable.iter().enumerate() {
        if n > 0 {
            warnings.push(format!("path {i}: {n} snapshot fits with rsq below 0.5"));
        }
    }

    // Estimates come out sorted by sin θ; pair them with the configured paths
    // in the same order.
    let mut truth: Vec<_> = cfg.paths.clone();
    truth.sort_by(|a, b| a.theta_deg.total_cmp(&b.theta_deg));
    let paired = truth.len() == modes.s.len();
    let angles = modes
        .theta_deg
        .iter()
        .zip(&modes.s)
        .zip(&modes.amplitudes)
        .enumerate()
        .map(|(i, ((&theta, &s), &g))| {
            let truth_deg = paired.then(|| truth[i].theta_deg);
            AngleRow {
                theta_deg: theta,
                sin_theta: s,
                amplitude: g,
                truth_deg,
                error_deg: truth_deg.map(|t| theta - t),
            }
        })
        .collect();
    let report = RunReport {
        config: cfg.clone(),
        seed: cfg.seed,
        band: (band.start, band.end),
        angles,
        singular_values: modes.singular_values.clone(),
        delays: DelayTable {
            slopes: delays.slope.clone(),
            rsq: delays.rsq.clone(),
            slope_median: delays.slope_median(),
            slope_mean: delays.slope_mean(),
            tau_median: delays.tau_median.clone(),
            tau_mean: delays.tau_mean.clone(),
            truth_tau: paired.then(|| truth.iter().map(|p| p.tau).collect()),
            unreliable: delays.unreliable.clone(),
        },
        warnings,
        timing_ms: None,
    };
    Ok(PipelineArtifacts {
        pulse,
        pulse_spectrum,
        snapshots,
        correlation,
        modes,
        beams,
        delays,
        report,
    })
}

/// Condensed result of one Monte Carlo trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub theta_deg: Vec<f64>,
    pub slope_median: Vec<f64>,
    pub slope_mean: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    pub result: std::result::Result<TrialSummary, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterStats {
    pub name: String,
    pub truth: f64,
    pub mean: f64,
    pub bias: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub config: ScenarioConfig,
    pub trials: Vec<TrialOutcome>,
    pub failed: usize,
    /// Over successful trials only.
    pub stats: Vec<ParameterStats>,
}

impl MonteCarloReport {
    pub fn successes(&self) -> impl Iterator<Item = &TrialSummary> {
        self.trials.iter().filter_map(|t| t.result.as_ref().ok())
    }

    /// Root-mean-square angle error pooled over paths and successful trials.
    pub fn theta_rmse(&self) -> f64 {
        let angles: Vec<&ParameterStats> =
            self.stats.iter().filter(|s| s.name.starts_with("theta")).collect();
        (angles.iter().map(|s| s.rmse * s.rmse).sum::<f64>() / angles.len() as f64).sqrt()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Seed used for trial `trial` of a Monte Carlo run with base seed `seed`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    sub_seed(seed, trial as u64)
}

pub fn monte_carlo(cfg: &ScenarioConfig, trials: usize) -> Result<MonteCarloReport> {
    if trials == 0 {
        return Err(JadeError::invalid("trials must be >= 1"));
    }
    cfg.validate()?;
    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let seed = trial_seed(cfg.seed, trial);
            let run_cfg = ScenarioConfig {
                seed,
                ..cfg.clone()
            };
            let result = run_pipeline(&run_cfg)
                .map(|r| TrialSummary {
                    theta_deg: r.theta_deg(),
                    slope_median: r.delays.slope_median,
                    slope_mean: r.delays.slope_mean,
                })
                .map_err(|e| e.to_string());
            TrialOutcome { trial, seed, result }
        })
        .collect();

    let mut truth = cfg.paths.clone();
    truth.sort_by(|a, b| a.theta_deg.total_cmp(&b.theta_deg));
    let ok: Vec<&TrialSummary> = outcomes.iter().filter_map(|t| t.result.as_ref().ok()).collect();
    let mut stats = Vec::new();
    if !ok.is_empty() {
        let mut push = |name: String, truth: f64, values: Vec<f64>| {
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let rmse = (values.iter().map(|v| (v - truth).powi(2)).sum::<f64>() / n).sqrt();
            stats.push(ParameterStats {
                name,
                truth,
                mean,
                bias: mean - truth,
                rmse,
            });
        };
        for (i, p) in truth.iter().enumerate() {
            push(format!("theta_deg[{i}]"), p.theta_deg, ok.iter().map(|t| t.theta_deg[i]).collect());
        }
        for (i, p) in truth.iter().enumerate() {
            push(format!("slope_median[{i}]"), -p.tau, ok.iter().map(|t| t.slope_median[i]).collect());
        }
        for (i, p) in truth.iter().enumerate() {
            push(format!("slope_mean[{i}]"), -p.tau, ok.iter().map(|t| t.slope_mean[i]).collect());
        }
    }
    Ok(MonteCarloReport {
        config: cfg.clone(),
        failed: outcomes.len() - ok.len(),
        trials: outcomes,
        stats,
    })
}
