//! Raised-cosine passband pulse, its DFT, and phase unwrapping.
//!
//! The pulse is the product of a sinc, a raised-cosine roll-off and a BPSK
//! modulated carrier:
//!
//! ```text
//! g(t) = sinc(t) · cos(πρt) / (1 − 4ρ²t²) · cos(2π f_c t + π p(t))
//! ```
//!
//! Time is measured in symbol periods on a grid centred at zero,
//! `t_n = (n − N/2) / oversample`. Frequencies are digital radian
//! frequencies (radians per sample at the oversampled rate).

use std::f64::consts::{FRAC_PI_4, PI, TAU};
use std::ops::Range;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{JadeError, Result};

/// Default relative magnitude threshold for the pulse passband.
pub const DEFAULT_ETA: f64 = 0.1;

/// Where the BPSK bit stream `p(t)` comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BitSource {
    Explicit(Vec<u8>),
    Seeded(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseConfig {
    /// Excess bandwidth (roll-off factor), `0 < rho <= 1`.
    pub rho: f64,
    /// Carrier frequency in cycles per symbol period.
    pub fc: f64,
    pub symbol_count: usize,
    /// Samples per symbol period.
    pub oversample: usize,
    pub bits: BitSource,
}

impl Default for PulseConfig {
    fn default() -> Self {
        Self {
            rho: 0.35,
            fc: 0.25,
            symbol_count: 32,
            oversample: 4,
            bits: BitSource::Seeded(1),
        }
    }
}

impl PulseConfig {
    /// Number of samples `N = symbol_count · oversample`.
    pub fn len(&self) -> usize {
        self.symbol_count * self.oversample
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(JadeError::invalid(format!(
                "rho must lie in (0, 1], got {}",
                self.rho
            )));
        }
        if !(self.fc >= 0.0 && self.fc.is_finite()) {
            return Err(JadeError::invalid(format!(
                "fc must be finite and >= 0, got {}",
                self.fc
            )));
        }
        if self.symbol_count == 0 || self.oversample == 0 {
            return Err(JadeError::invalid(
                "symbol_count and oversample must be >= 1",
            ));
        }
        if !self.len().is_multiple_of(2) {
            return Err(JadeError::invalid(format!(
                "sample count N = {} must be even",
                self.len()
            )));
        }
        if let BitSource::Explicit(bits) = &self.bits {
            if bits.len() != self.symbol_count {
                return Err(JadeError::invalid(format!(
                    "expected {} bits, got {}",
                    self.symbol_count,
                    bits.len()
                )));
            }
            if bits.iter().any(|&b| b > 1) {
                return Err(JadeError::invalid("bits must be 0 or 1"));
            }
        }
        Ok(())
    }

    /// The resolved bit stream, drawing it from the seed when not explicit.
    pub fn resolved_bits(&self) -> Vec<u8> {
        match &self.bits {
            BitSource::Explicit(bits) => bits.clone(),
            BitSource::Seeded(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..self.symbol_count)
                    .map(|_| u8::from(rng.random::<bool>()))
                    .collect()
            }
        }
    }
}

/// Real samples of a waveform on a uniform time grid (in symbol periods).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledWaveform {
    pub t: Vec<f64>,
    pub values: Vec<f64>,
}

impl SampledWaveform {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `sin(πt)/(πt)` with the removable singularity at zero filled in.
pub fn sinc(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        let x = PI * t;
        x.sin() / x
    }
}

/// Raised-cosine roll-off `cos(πρt)/(1 − 4ρ²t²)`; equals π/4 at `|t| = 1/(2ρ)`.
pub fn rolloff(rho: f64, t: f64) -> f64 {
    let u = 2.0 * rho * t;
    let denom = 1.0 - u * u;
    if denom.abs() < 1e-12 {
        FRAC_PI_4
    } else {
        (PI * rho * t).cos() / denom
    }
}

pub fn generate_pulse(cfg: &PulseConfig) -> Result<SampledWaveform> {
    cfg.validate()?;
    let n = cfg.len();
    let os = cfg.oversample as f64;
    let bits = cfg.resolved_bits();
    let half_symbols = (cfg.symbol_count / 2) as i64;

    let mut t = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let tn = (i as f64 - (n / 2) as f64) / os;
        let idx = tn.floor() as i64 + half_symbols;
        let bit = usize::try_from(idx)
            .ok()
            .and_then(|k| bits.get(k))
            .ok_or_else(|| {
                JadeError::invalid(format!(
                    "time t = {tn} maps to bit index {idx} outside 0..{}",
                    bits.len()
                ))
            })?;
        let carrier = (TAU * cfg.fc * tn + PI * f64::from(*bit)).cos();
        t.push(tn);
        values.push(sinc(tn) * rolloff(cfg.rho, tn) * carrier);
    }
    Ok(SampledWaveform { t, values })
}

/// Digital radian frequency of DFT bin `q` mapped to `(−π, π]`.
pub fn bin_omega(q: usize, n: usize) -> f64 {
    if q <= n / 2 {
        TAU * q as f64 / n as f64
    } else {
        TAU * (q as f64 - n as f64) / n as f64
    }
}

/// Strictly positive, sub-Nyquist bins `1..N/2`.
pub fn positive_bins(n: usize) -> Range<usize> {
    1..(n / 2).max(1)
}

/// Forward DFT, `X[q] = Σ_n x[n] e^{−j2πqn/N}` (no normalisation).
pub fn dft(input: &[Complex64]) -> Vec<Complex64> {
    let mut buf = input.to_vec();
    FftPlanner::<f64>::new()
        .plan_fft_forward(buf.len())
        .process(&mut buf);
    buf
}

/// Inverse DFT normalised by `1/N`, so `idft(dft(x)) == x`.
pub fn idft(input: &[Complex64]) -> Vec<Complex64> {
    let mut buf = input.to_vec();
    FftPlanner::<f64>::new()
        .plan_fft_inverse(buf.len())
        .process(&mut buf);
    let scale = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// Contiguous run of positive-frequency bins around the positive-frequency
/// peak whose magnitude stays at or above `eta · max|X|`.
pub fn contiguous_band(magnitude: &[f64], eta: f64) -> Result<Range<usize>> {
    if !(0.0..1.0).contains(&eta) {
        return Err(JadeError::invalid(format!(
            "band threshold must lie in [0, 1), got {eta}"
        )));
    }
    let bins = positive_bins(magnitude.len());
    if bins.is_empty() {
        return Err(JadeError::invalid("spectrum has no positive-frequency bins"));
    }
    let global_max = magnitude.iter().copied().fold(0.0, f64::max);
    let peak = bins
        .clone()
        .max_by(|&a, &b| magnitude[a].total_cmp(&magnitude[b]))
        .expect("non-empty range");
    let threshold = eta * global_max;
    if magnitude[peak] < threshold || magnitude[peak] == 0.0 {
        return Err(JadeError::estimation(
            crate::error::Stage::Band,
            "no positive-frequency bin reaches the band threshold",
        ));
    }
    let mut lo = peak;
    while lo > bins.start && magnitude[lo - 1] >= threshold {
        lo -= 1;
    }
    let mut hi = peak + 1;
    while hi < bins.end && magnitude[hi] >= threshold {
        hi += 1;
    }
    Ok(lo..hi)
}

/// DFT of a sampled waveform with magnitude, principal and unwrapped phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// `ω_q` in natural DFT order, mapped to `(−π, π]`.
    pub omega: Vec<f64>,
    pub values: Vec<Complex64>,
    pub magnitude: Vec<f64>,
    pub phase: Vec<f64>,
    /// Bins over which `phase_unwrapped` is defined.
    pub passband: Range<usize>,
    /// Unwrapped phase over `passband`, one entry per bin in the band.
    pub phase_unwrapped: Vec<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Bin indices in ascending-frequency order (`−π` side first).
    pub fn shifted_order(&self) -> impl Iterator<Item = usize> {
        let n = self.len();
        let half = n / 2;
        (half + 1..n).chain(0..=half.min(n.saturating_sub(1)))
    }
}

pub fn spectrum(w: &SampledWaveform) -> Result<Spectrum> {
    spectrum_with_eta(w, DEFAULT_ETA)
}

pub fn spectrum_with_eta(w: &SampledWaveform, eta: f64) -> Result<Spectrum> {
    let n = w.len();
    if n < 2 {
        return Err(JadeError::invalid("spectrum needs at least two samples"));
    }
    if w.t.len() != n {
        return Err(JadeError::invalid("time grid and values differ in length"));
    }
    let input: Vec<Complex64> = w.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let values = dft(&input);
    let omega: Vec<f64> = (0..n).map(|q| bin_omega(q, n)).collect();
    let magnitude: Vec<f64> = values.iter().map(|v| v.norm()).collect();
    let phase: Vec<f64> = values.iter().map(|v| v.arg()).collect();
    let passband = contiguous_band(&magnitude, eta)?;
    let phase_unwrapped = unwrap_phase(&phase[passband.clone()]);
    Ok(Spectrum {
        omega,
        values,
        magnitude,
        phase,
        passband,
        phase_unwrapped,
    })
}

/// Removes `2π` jumps: each successive difference is brought into `(−π, π]`.
/// The output differs from the input by an exact integer multiple of `2π`
/// at every index.
pub fn unwrap_phase(phi: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phi.len());
    let Some(&first) = phi.first() else {
        return out;
    };
    out.push(first);
    let mut turns = 0.0_f64;
    for pair in phi.windows(2) {
        let d = pair[1] - pair[0];
        // d − 2πk ∈ (−π, π]
        let k = ((d - PI) / TAU).ceil();
        turns -= k;
        out.push(pair[1] + TAU * turns);
    }
    out
}
