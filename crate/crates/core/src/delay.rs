//! Per-path beamforming and phase-slope delay estimation.
//!
//! Steering the array at `sin θ_i` isolates path `i`; dividing out the known
//! pulse spectrum leaves `β_i e^{−jωτ_i}` plus leakage from the other paths,
//! whose unwrapped phase is a line of slope `−τ_i`.

use std::ops::Range;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{steering_from_sin, SnapshotSet};
use crate::error::{JadeError, Result, Stage};
use crate::pulse::{unwrap_phase, Spectrum};

/// Fits with `rsq` below this are reported as unreliable.
pub const RELIABLE_RSQ: f64 = 0.5;

/// `ξ_i(ω_q)` for every snapshot, path and bin; shape `(S, L, N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformedSpectrum {
    pub xi: Vec<Complex64>,
    pub s_used: Vec<f64>,
    pub snapshots: usize,
    pub samples: usize,
}

impl BeamformedSpectrum {
    pub fn paths(&self) -> usize {
        self.s_used.len()
    }

    pub fn row(&self, snapshot: usize, path: usize) -> &[Complex64] {
        let start = (snapshot * self.paths() + path) * self.samples;
        &self.xi[start..start + self.samples]
    }
}

/// `ξ_i(ω) = (1/M) Σ_k e^{−j2πδ(k−1)s_i} x̃_k(ω)`.
pub fn beamform(snaps: &SnapshotSet, s_values: &[f64]) -> Result<BeamformedSpectrum> {
    if let Some(s) = s_values.iter().find(|s| s.is_nan() || s.abs() > 1.0) {
        return Err(JadeError::invalid(format!(
            "steering value sin(theta) = {s} outside [-1, 1]"
        )));
    }
    let m = snaps.sensors();
    let n = snaps.samples();
    let weights: Vec<Vec<Complex64>> = s_values
        .iter()
        .map(|&s| {
            steering_from_sin(&snaps.array, s)
                .into_iter()
                .map(|a| a.conj() / m as f64)
                .collect()
        })
        .collect();
    let xi: Vec<Complex64> = (0..snaps.snapshots())
        .into_par_iter()
        .flat_map_iter(|snap| {
            let mut block = vec![Complex64::new(0.0, 0.0); weights.len() * n];
            for (w, out) in weights.iter().zip(block.chunks_mut(n)) {
                for (k, wk) in w.iter().enumerate() {
                    for (o, x) in out.iter_mut().zip(snaps.spectrum(snap, k)) {
                        *o += wk * x;
                    }
                }
            }
            block
        })
        .collect();
    Ok(BeamformedSpectrum {
        xi,
        s_used: s_values.to_vec(),
        snapshots: snaps.snapshots(),
        samples: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub rsq: f64,
}

/// (Weighted) ordinary least squares of `y` on `x`.
pub fn fit_line(x: &[f64], y: &[f64], weights: Option<&[f64]>) -> LineFit {
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let sw: f64 = (0..x.len()).map(w).sum();
    let mx = (0..x.len()).map(|i| w(i) * x[i]).sum::<f64>() / sw;
    let my = (0..x.len()).map(|i| w(i) * y[i]).sum::<f64>() / sw;
    let sxx: f64 = (0..x.len()).map(|i| w(i) * (x[i] - mx).powi(2)).sum();
    let sxy: f64 = (0..x.len()).map(|i| w(i) * (x[i] - mx) * (y[i] - my)).sum();
    let syy: f64 = (0..x.len()).map(|i| w(i) * (y[i] - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = (0..x.len())
        .map(|i| w(i) * (y[i] - intercept - slope * x[i]).powi(2))
        .sum();
    let rsq = if syy <= f64::EPSILON * sw * (my * my).max(1.0) {
        if ss_res <= syy { 1.0 } else { 0.0 }
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    LineFit {
        slope,
        intercept,
        rsq,
    }
}

/// Unwrapped phase of `ξ(ω_q) · conj(g̃(ω_q)) / |g̃(ω_q)|²` over `band`.
pub fn phase_residual(xi: &[Complex64], g_spec: &Spectrum, band: Range<usize>) -> Result<Vec<f64>> {
    let mut wrapped = Vec::with_capacity(band.len());
    for q in band {
        let g = g_spec.values[q];
        let power = g.norm_sqr();
        if power == 0.0 {
            return Err(JadeError::estimation(
                Stage::DelayFit,
                format!("pulse spectrum vanishes at bin {q}"),
            ));
        }
        wrapped.push((xi[q] * g.conj() / power).arg());
    }
    Ok(unwrap_phase(&wrapped))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FitWeighting {
    #[default]
    Uniform,
    /// Weight each bin by `|g̃(ω_q)|²`.
    PulsePower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayEstimate {
    /// `tau_per_snapshot[s][i]`.
    pub tau_per_snapshot: Vec<Vec<f64>>,
    pub tau_median: Vec<f64>,
    pub tau_mean: Vec<f64>,
    pub slope: Vec<Vec<f64>>,
    pub intercept: Vec<Vec<f64>>,
    pub rsq: Vec<Vec<f64>>,
    pub band: Range<usize>,
    /// Fits per path with `rsq <` [`RELIABLE_RSQ`].
    pub unreliable: Vec<usize>,
}

impl DelayEstimate {
    pub fn slope_median(&self) -> Vec<f64> {
        self.tau_median.iter().map(|t| -t).collect()
    }

    pub fn slope_mean(&self) -> Vec<f64> {
        self.tau_mean.iter().map(|t| -t).collect()
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn fit_delay(bf: &BeamformedSpectrum, g_spec: &Spectrum, band: Range<usize>) -> Result<DelayEstimate> {
    fit_delay_weighted(bf, g_spec, band, FitWeighting::Uniform)
}

pub fn fit_delay_weighted(
    bf: &BeamformedSpectrum,
    g_spec: &Spectrum,
    band: Range<usize>,
    weighting: FitWeighting,
) -> Result<DelayEstimate> {
    if band.len() < 3 || band.end > bf.samples || g_spec.len() != bf.samples {
        return Err(JadeError::invalid(format!(
            "delay fit needs a band of at least 3 bins within N = {}, got {band:?}",
            bf.samples
        )));
    }
    let omega = &g_spec.omega[band.clone()];
    let weights: Option<Vec<f64>> = match weighting {
        FitWeighting::Uniform => None,
        FitWeighting::PulsePower => Some(band.clone().map(|q| g_spec.magnitude[q].powi(2)).collect()),
    };
    let paths = bf.paths();
    let fits: Vec<Vec<LineFit>> = (0..bf.snapshots)
        .into_par_iter()
        .map(|s| {
            (0..paths)
                .map(|i| {
                    let phi = phase_residual(bf.row(s, i), g_spec, band.clone())?;
                    Ok(fit_line(omega, &phi, weights.as_deref()))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let pick = |f: fn(&LineFit) -> f64| -> Vec<Vec<f64>> {
        fits.iter().map(|row| row.iter().map(f).collect()).collect()
    };
    let slope = pick(|f| f.slope);
    let tau_per_snapshot: Vec<Vec<f64>> = slope.iter().map(|r| r.iter().map(|m| -m).collect()).collect();
    let column = |i: usize| -> Vec<f64> { tau_per_snapshot.iter().map(|r| r[i]).collect() };
    let rsq = pick(|f| f.rsq);
    let unreliable = (0..paths)
        .map(|i| rsq.iter().filter(|r| r[i] < RELIABLE_RSQ).count())
        .collect();
    Ok(DelayEstimate {
        tau_median: (0..paths).map(|i| median(&column(i))).collect(),
        tau_mean: (0..paths)
            .map(|i| column(i).iter().sum::<f64>() / bf.snapshots as f64)
            .collect(),
        intercept: pick(|f| f.intercept),
        tau_per_snapshot,
        slope,
        rsq,
        band,
        unreliable,
    })
}
