//! Multipath array signal synthesis with block fading.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{JadeError, Result};
use crate::pulse::{bin_omega, dft, idft, SampledWaveform};

/// Uniform linear array geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    /// Number of sensors.
    pub sensors: usize,
    /// Element spacing in wavelengths.
    pub delta: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            sensors: 64,
            delta: 0.5,
        }
    }
}

impl ArrayConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sensors < 2 {
            return Err(JadeError::invalid(format!(
                "array needs at least 2 sensors, got {}",
                self.sensors
            )));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(JadeError::invalid(format!(
                "element spacing must be positive, got {}",
                self.delta
            )));
        }
        Ok(())
    }

    /// Non-fatal issues with the geometry.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.delta > 0.5 {
            out.push(format!(
                "element spacing {} exceeds half a wavelength; angles may alias",
                self.delta
            ));
        }
        out
    }

    /// Spatial phase increment between adjacent sensors, `2πδ sin θ`.
    pub fn phase_increment(&self, sin_theta: f64) -> f64 {
        TAU * self.delta * sin_theta
    }
}

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathParam {
    pub theta_deg: f64,
    /// Delay in samples; the path spectrum is multiplied by `e^{−jωτ}`.
    pub tau: f64,
}

impl PathParam {
    pub fn new(theta_deg: f64, tau: f64) -> Self {
        Self { theta_deg, tau }
    }

    pub fn sin_theta(&self) -> f64 {
        self.theta_deg.to_radians().sin()
    }

    pub fn validate(&self, samples: usize) -> Result<()> {
        if !(self.theta_deg > -90.0 && self.theta_deg < 90.0) {
            return Err(JadeError::invalid(format!(
                "angle {} deg outside (-90, 90)",
                self.theta_deg
            )));
        }
        if !self.tau.is_finite() || self.tau.abs() >= samples as f64 / 2.0 {
            return Err(JadeError::invalid(format!(
                "delay {} outside (-N/2, N/2) for N = {samples}",
                self.tau
            )));
        }
        Ok(())
    }
}

/// Distribution of the per-snapshot complex path coefficient `β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FadingModel {
    Deterministic { re: f64, im: f64 },
    /// Real and imaginary parts i.i.d. `N(0, σ²)`.
    Rayleigh { sigma: f64 },
    /// `(ν + CN(0, 2σ²))·e^{jφ}` with `φ` uniform.
    Rician { nu: f64, sigma: f64 },
    /// Rayleigh(σ) amplitude times a log-normal shadowing factor `10^{X/20}`,
    /// `X ~ N(μ_dB, σ_dB²)`, with uniform phase.
    Suzuki { sigma: f64, mu_db: f64, sigma_db: f64 },
}

impl Default for FadingModel {
    fn default() -> Self {
        FadingModel::Rayleigh { sigma: 1.0 }
    }
}

impl FadingModel {
    pub fn deterministic(beta: Complex64) -> Self {
        FadingModel::Deterministic {
            re: beta.re,
            im: beta.im,
        }
    }

    /// Rician model with Rice factor `K = ν²/(2σ²)`.
    pub fn rician_k(k: f64, sigma: f64) -> Self {
        FadingModel::Rician {
            nu: (2.0 * k * sigma * sigma).sqrt(),
            sigma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            FadingModel::Deterministic { re, im } => re.is_finite() && im.is_finite(),
            FadingModel::Rayleigh { sigma } => sigma > 0.0,
            FadingModel::Rician { nu, sigma } => sigma > 0.0 && nu >= 0.0,
            FadingModel::Suzuki {
                sigma,
                mu_db,
                sigma_db,
            } => sigma > 0.0 && mu_db.is_finite() && sigma_db >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(JadeError::invalid(format!("invalid fading model {self:?}")))
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        match *self {
            FadingModel::Deterministic { re, im } => Complex64::new(re, im),
            FadingModel::Rayleigh { sigma } => complex_gaussian(rng, sigma),
            FadingModel::Rician { nu, sigma } => {
                let phase = rng.random_range(-PI..PI);
                (Complex64::new(nu, 0.0) + complex_gaussian(rng, sigma))
                    * Complex64::from_polar(1.0, phase)
            }
            FadingModel::Suzuki {
                sigma,
                mu_db,
                sigma_db,
            } => {
                let rayleigh = complex_gaussian(rng, sigma).norm();
                let shadow_db = mu_db + sigma_db * rng.sample::<f64, _>(StandardNormal);
                let phase = rng.random_range(-PI..PI);
                Complex64::from_polar(rayleigh * 10f64.powf(shadow_db / 20.0), phase)
            }
        }
    }
}

/// Circular complex Gaussian with per-component standard deviation `sigma`.
fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(sigma * re, sigma * im)
}

/// Derives an independent stream seed from a base seed and an index
/// (SplitMix64 finaliser over the combined words).
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `a_k(θ) = e^{j2πδ(k−1) sin θ}`, `k = 1..M`.
pub fn steering_vector(arr: &ArrayConfig, theta_deg: f64) -> Vec<Complex64> {
    steering_from_sin(arr, theta_deg.to_radians().sin())
}

pub fn steering_from_sin(arr: &ArrayConfig, sin_theta: f64) -> Vec<Complex64> {
    let inc = arr.phase_increment(sin_theta);
    (0..arr.sensors)
        .map(|k| Complex64::from_polar(1.0, inc * k as f64))
        .collect()
}

/// Parameters that generated a [`SnapshotSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisParams {
    pub paths: Vec<PathParam>,
    pub fading: FadingModel,
    pub noise_var: f64,
    pub seed: u64,
}

/// Complex sensor records `x_k(t_n)` and their DFTs, shape `(S, M, N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    pub array: ArrayConfig,
    snapshots: usize,
    samples: usize,
    data: Vec<Complex64>,
    spectra: Vec<Complex64>,
    /// Present when the set was synthesized rather than loaded.
    pub params: Option<SynthesisParams>,
    /// Drawn path coefficients, `betas[s][i]`.
    pub betas: Option<Vec<Vec<Complex64>>>,
}

impl SnapshotSet {
    /// Wraps raw records (row order: snapshot major, sensor minor) and
    /// computes their spectra.
    pub fn from_data(
        array: ArrayConfig,
        snapshots: usize,
        samples: usize,
        data: Vec<Complex64>,
    ) -> Result<Self> {
        array.validate()?;
        if snapshots == 0 || samples < 2 {
            return Err(JadeError::invalid(
                "snapshot set needs S >= 1 and N >= 2",
            ));
        }
        if data.len() != snapshots * array.sensors * samples {
            return Err(JadeError::invalid(format!(
                "expected {} samples, got {}",
                snapshots * array.sensors * samples,
                data.len()
            )));
        }
        let spectra = data.par_chunks(samples).flat_map_iter(dft).collect();
        Ok(Self {
            array,
            snapshots,
            samples,
            data,
            spectra,
            params: None,
            betas: None,
        })
    }

    pub fn snapshots(&self) -> usize {
        self.snapshots
    }

    pub fn sensors(&self) -> usize {
        self.array.sensors
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    fn row(&self, s: usize, k: usize) -> std::ops::Range<usize> {
        let start = (s * self.array.sensors + k) * self.samples;
        start..start + self.samples
    }

    /// Time series of sensor `k` (0-based) in snapshot `s`.
    pub fn record(&self, s: usize, k: usize) -> &[Complex64] {
        &self.data[self.row(s, k)]
    }

    /// DFT of [`record`](Self::record).
    pub fn spectrum(&self, s: usize, k: usize) -> &[Complex64] {
        &self.spectra[self.row(s, k)]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// Restricts the set to its first `count` snapshots.
    pub fn truncated(&self, count: usize) -> Self {
        let count = count.clamp(1, self.snapshots);
        let end = count * self.array.sensors * self.samples;
        Self {
            array: self.array,
            snapshots: count,
            samples: self.samples,
            data: self.data[..end].to_vec(),
            spectra: self.spectra[..end].to_vec(),
            params: self.params.clone(),
            betas: self.betas.as_ref().map(|b| b[..count].to_vec()),
        }
    }
}

/// `g(t_n − τ)` evaluated by multiplying the pulse spectrum by `e^{−jω_q τ}`.
pub fn delayed_pulse(pulse_spectrum: &[Complex64], tau: f64) -> Vec<Complex64> {
    let n = pulse_spectrum.len();
    let shifted: Vec<Complex64> = pulse_spectrum
        .iter()
        .enumerate()
        .map(|(q, g)| g * Complex64::from_polar(1.0, -bin_omega(q, n) * tau))
        .collect();
    idft(&shifted)
}

#[allow(clippy::too_many_arguments)]
pub fn synthesize(
    pulse: &SampledWaveform,
    paths: &[PathParam],
    arr: &ArrayConfig,
    fading: &FadingModel,
    snapshots: usize,
    noise_var: f64,
    seed: u64,
) -> Result<SnapshotSet> {
    arr.validate()?;
    fading.validate()?;
    let n = pulse.len();
    if n < 2 || pulse.t.len() != n || !n.is_multiple_of(2) {
        return Err(JadeError::invalid(format!(
            "pulse must have an even number of samples with matching time grid, got {n}"
        )));
    }
    if paths.is_empty() {
        return Err(JadeError::invalid("at least one path is required"));
    }
    if snapshots == 0 {
        return Err(JadeError::invalid("snapshot count must be >= 1"));
    }
    if !(noise_var >= 0.0 && noise_var.is_finite()) {
        return Err(JadeError::invalid(format!(
            "noise variance must be >= 0, got {noise_var}"
        )));
    }
    for p in paths {
        p.validate(n)?;
    }

    let g_spec = dft(&pulse
        .values
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect::<Vec<_>>());
    let delayed: Vec<Vec<Complex64>> = paths.iter().map(|p| delayed_pulse(&g_spec, p.tau)).collect();
    let steering: Vec<Vec<Complex64>> = paths
        .iter()
        .map(|p| steering_vector(arr, p.theta_deg))
        .collect();
    let m = arr.sensors;
    let noise = Normal::new(0.0, (noise_var / 2.0).sqrt())
        .map_err(|e| JadeError::invalid(e.to_string()))?;

    let per_snapshot: Vec<(Vec<Complex64>, Vec<Complex64>)> = (0..snapshots)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, s as u64));
            let betas: Vec<Complex64> = paths.iter().map(|_| fading.draw(&mut rng)).collect();
            let mut block = vec![Complex64::new(0.0, 0.0); m * n];
            for (k, row) in block.chunks_mut(n).enumerate() {
                for (i, beta) in betas.iter().enumerate() {
                    let scale = beta * steering[i][k];
                    for (x, d) in row.iter_mut().zip(&delayed[i]) {
                        *x += scale * d;
                    }
                }
                if noise_var > 0.0 {
                    for x in row.iter_mut() {
                        *x += Complex64::new(noise.sample(&mut rng), noise.sample(&mut rng));
                    }
                }
            }
            (betas, block)
        })
        .collect();

    let mut betas = Vec::with_capacity(snapshots);
    let mut data = Vec::with_capacity(snapshots * m * n);
    for (b, block) in per_snapshot {
        betas.push(b);
        data.extend(block);
    }
    let mut set = SnapshotSet::from_data(*arr, snapshots, n, data)?;
    set.params = Some(SynthesisParams {
        paths: paths.to_vec(),
        fading: *fading,
        noise_var,
        seed,
    });
    set.betas = Some(betas);
    Ok(set)
}
