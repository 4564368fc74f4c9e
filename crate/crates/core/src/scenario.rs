//! Scenario configuration and its flat key-value file format.
//!
//! Config files are flat TOML documents; every key is optional and falls
//! back to the default scenario (two Rayleigh-faded paths at −10° and 20°
//! with delays of 3 and 7 samples on a 64-element half-wavelength array).
//!
//! ```toml
//! schema = 1
//! rho = 0.35
//! fc = 0.25
//! symbol_count = 32
//! oversample = 4
//! bits_seed = 1            # or: bits = "0110..."
//! sensors = 64
//! delta = 0.5
//! theta_deg = [-10.0, 20.0]
//! tau = [3.0, 7.0]
//! fading = "rayleigh"      # deterministic | rayleigh | rician | suzuki
//! fading_sigma = 1.0
//! snapshots = 200
//! noise_var = 0.0
//! eta = 0.1
//! seed = 1
//! ```

use serde::{Deserialize, Serialize};

use crate::channel::{ArrayConfig, FadingModel, PathParam};
use crate::delay::FitWeighting;
use crate::error::{JadeError, Result};
use crate::prony::{PronyConfig, RootSelection};
use crate::pulse::{BitSource, PulseConfig, DEFAULT_ETA};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub pulse: PulseConfig,
    pub array: ArrayConfig,
    pub paths: Vec<PathParam>,
    pub fading: FadingModel,
    pub snapshots: usize,
    pub noise_var: f64,
    /// Relative magnitude threshold selecting the pulse passband.
    pub eta: f64,
    pub prony: PronyConfig,
    pub fit_weighting: FitWeighting,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            pulse: PulseConfig::default(),
            array: ArrayConfig::default(),
            paths: vec![PathParam::new(-10.0, 3.0), PathParam::new(20.0, 7.0)],
            fading: FadingModel::Rayleigh { sigma: 1.0 },
            snapshots: 200,
            noise_var: 0.0,
            eta: DEFAULT_ETA,
            prony: PronyConfig::with_order(2),
            fit_weighting: FitWeighting::Uniform,
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.pulse.validate()?;
        self.array.validate()?;
        self.fading.validate()?;
        if self.paths.is_empty() {
            return Err(JadeError::invalid("at least one path is required"));
        }
        for p in &self.paths {
            p.validate(self.pulse.len())?;
        }
        if self.paths.len() != self.prony.order {
            return Err(JadeError::invalid(format!(
                "model order {} does not match {} configured paths",
                self.prony.order,
                self.paths.len()
            )));
        }
        if self.snapshots == 0 {
            return Err(JadeError::invalid("snapshot count must be >= 1"));
        }
        if !(self.noise_var >= 0.0 && self.noise_var.is_finite()) {
            return Err(JadeError::invalid("noise variance must be >= 0"));
        }
        if !(0.0..1.0).contains(&self.eta) {
            return Err(JadeError::invalid("eta must lie in [0, 1)"));
        }
        self.prony.resolve(2 * self.array.sensors - 1)?;
        Ok(())
    }

    /// Replaces the path list and keeps the model order in step.
    pub fn with_paths(mut self, paths: Vec<PathParam>) -> Self {
        self.prony.order = paths.len();
        self.paths = paths;
        self
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| JadeError::Parse {
            line: e
                .span()
                .map(|s| text[..s.start].lines().count().max(1))
                .unwrap_or(0),
            message: e.message().to_string(),
        })?;
        file.into_config()
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Flat config document that parses back to `self`.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(&ConfigFile::from_config(self)).expect("flat config serializes")
    }
}

/// On-disk flat representation. Unset keys take default values.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    schema: Option<u32>,
    rho: Option<f64>,
    fc: Option<f64>,
    symbol_count: Option<usize>,
    oversample: Option<usize>,
    bits: Option<String>,
    bits_seed: Option<u64>,
    sensors: Option<usize>,
    delta: Option<f64>,
    theta_deg: Option<Vec<f64>>,
    tau: Option<Vec<f64>>,
    fading: Option<String>,
    fading_sigma: Option<f64>,
    fading_nu: Option<f64>,
    fading_k: Option<f64>,
    fading_mu_db: Option<f64>,
    fading_sigma_db: Option<f64>,
    beta_re: Option<f64>,
    beta_im: Option<f64>,
    snapshots: Option<usize>,
    noise_var: Option<f64>,
    eta: Option<f64>,
    prediction_order: Option<usize>,
    rank: Option<usize>,
    root_selection: Option<String>,
    forward_backward: Option<bool>,
    fit_weighting: Option<String>,
    seed: Option<u64>,
}

impl ConfigFile {
    fn into_config(self) -> Result<ScenarioConfig> {
        if let Some(v) = self.schema {
            if v != SCHEMA_VERSION {
                return Err(JadeError::invalid(format!(
                    "unsupported config schema {v}, expected {SCHEMA_VERSION}"
                )));
            }
        }
        let mut cfg = ScenarioConfig::default();
        let p = &mut cfg.pulse;
        p.rho = self.rho.unwrap_or(p.rho);
        p.fc = self.fc.unwrap_or(p.fc);
        p.symbol_count = self.symbol_count.unwrap_or(p.symbol_count);
        p.oversample = self.oversample.unwrap_or(p.oversample);
        match (self.bits, self.bits_seed) {
            (Some(_), Some(_)) => {
                return Err(JadeError::invalid("set either bits or bits_seed, not both"))
            }
            (Some(text), None) => {
                let bits = text
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(0),
                        '1' => Ok(1),
                        other => Err(JadeError::invalid(format!("invalid bit character {other:?}"))),
                    })
                    .collect::<Result<Vec<u8>>>()?;
                p.bits = BitSource::Explicit(bits);
            }
            (None, Some(seed)) => p.bits = BitSource::Seeded(seed),
            (None, None) => {}
        }

        cfg.array.sensors = self.sensors.unwrap_or(cfg.array.sensors);
        cfg.array.delta = self.delta.unwrap_or(cfg.array.delta);

        let thetas = self
            .theta_deg
            .unwrap_or_else(|| cfg.paths.iter().map(|p| p.theta_deg).collect());
        let taus = self
            .tau
            .unwrap_or_else(|| cfg.paths.iter().map(|p| p.tau).collect());
        if thetas.len() != taus.len() {
            return Err(JadeError::invalid(format!(
                "theta_deg has {} entries but tau has {}",
                thetas.len(),
                taus.len()
            )));
        }
        let paths = thetas
            .into_iter()
            .zip(taus)
            .map(|(t, d)| PathParam::new(t, d))
            .collect();
        cfg = cfg.with_paths(paths);

        let sigma = self.fading_sigma.unwrap_or(1.0);
        cfg.fading = match self.fading.as_deref().unwrap_or("rayleigh") {
            "deterministic" => FadingModel::Deterministic {
                re: self.beta_re.unwrap_or(1.0),
                im: self.beta_im.unwrap_or(0.0),
            },
            "rayleigh" => FadingModel::Rayleigh { sigma },
            "rician" => match (self.fading_nu, self.fading_k) {
                (Some(_), Some(_)) => {
                    return Err(JadeError::invalid("set either fading_nu or fading_k, not both"))
                }
                (Some(nu), None) => FadingModel::Rician { nu, sigma },
                (None, k) => FadingModel::rician_k(k.unwrap_or(0.0), sigma),
            },
            "suzuki" => FadingModel::Suzuki {
                sigma,
                mu_db: self.fading_mu_db.unwrap_or(0.0),
                sigma_db: self.fading_sigma_db.unwrap_or(0.0),
            },
            other => return Err(JadeError::invalid(format!("unknown fading model {other:?}"))),
        };

        cfg.snapshots = self.snapshots.unwrap_or(cfg.snapshots);
        cfg.noise_var = self.noise_var.unwrap_or(cfg.noise_var);
        cfg.eta = self.eta.unwrap_or(cfg.eta);
        cfg.prony.prediction_order = self.prediction_order;
        cfg.prony.rank = self.rank;
        cfg.prony.forward_backward = self.forward_backward.unwrap_or(false);
        if let Some(sel) = self.root_selection {
            cfg.prony.root_selection = match sel.as_str() {
                "nearest_unit_circle" => RootSelection::NearestUnitCircle,
                "largest_inside" => RootSelection::LargestInside,
                other => return Err(JadeError::invalid(format!("unknown root selection {other:?}"))),
            };
        }
        if let Some(w) = self.fit_weighting {
            cfg.fit_weighting = match w.as_str() {
                "uniform" => FitWeighting::Uniform,
                "pulse_power" => FitWeighting::PulsePower,
                other => return Err(JadeError::invalid(format!("unknown fit weighting {other:?}"))),
            };
        }
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.validate()?;
        Ok(cfg)
    }

    fn from_config(cfg: &ScenarioConfig) -> Self {
        let (bits, bits_seed) = match &cfg.pulse.bits {
            BitSource::Explicit(b) => (Some(b.iter().map(|v| if *v == 0 { '0' } else { '1' }).collect()), None),
            BitSource::Seeded(s) => (None, Some(*s)),
        };
        let mut file = ConfigFile {
            schema: Some(SCHEMA_VERSION),
            rho: Some(cfg.pulse.rho),
            fc: Some(cfg.pulse.fc),
            symbol_count: Some(cfg.pulse.symbol_count),
            oversample: Some(cfg.pulse.oversample),
            bits,
            bits_seed,
            sensors: Some(cfg.array.sensors),
            delta: Some(cfg.array.delta),
            theta_deg: Some(cfg.paths.iter().map(|p| p.theta_deg).collect()),
            tau: Some(cfg.paths.iter().map(|p| p.tau).collect()),
            snapshots: Some(cfg.snapshots),
            noise_var: Some(cfg.noise_var),
            eta: Some(cfg.eta),
            prediction_order: cfg.prony.prediction_order,
            rank: cfg.prony.rank,
            root_selection: Some(
                match cfg.prony.root_selection {
                    RootSelection::NearestUnitCircle => "nearest_unit_circle",
                    RootSelection::LargestInside => "largest_inside",
                }
                .into(),
            ),
            forward_backward: Some(cfg.prony.forward_backward),
            fit_weighting: Some(
                match cfg.fit_weighting {
                    FitWeighting::Uniform => "uniform",
                    FitWeighting::PulsePower => "pulse_power",
                }
                .into(),
            ),
            seed: Some(cfg.seed),
            ..Default::default()
        };
        match cfg.fading {
            FadingModel::Deterministic { re, im } => {
                file.fading = Some("deterministic".into());
                file.beta_re = Some(re);
                file.beta_im = Some(im);
            }
            FadingModel::Rayleigh { sigma } => {
                file.fading = Some("rayleigh".into());
                file.fading_sigma = Some(sigma);
            }
            FadingModel::Rician { nu, sigma } => {
                file.fading = Some("rician".into());
                file.fading_nu = Some(nu);
                file.fading_sigma = Some(sigma);
            }
            FadingModel::Suzuki {
                sigma,
                mu_db,
                sigma_db,
            } => {
                file.fading = Some("suzuki".into());
                file.fading_sigma = Some(sigma);
                file.fading_mu_db = Some(mu_db);
                file.fading_sigma_db = Some(sigma_db);
            }
        }
        file
    }
}
