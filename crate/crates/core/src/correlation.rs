//! Cross-sensor correlation of frequency samples at equal spatial lag.
//!
//! For a block-faded multipath field the correlation between the spectra of
//! sensors `k` and `m` depends only on `ℓ = k − m` and is a sum of undamped
//! exponentials in `ℓ`, one per path, with real non-negative weights.

use std::ops::Range;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::SnapshotSet;
use crate::error::{JadeError, Result};
use crate::pulse::{contiguous_band, Spectrum};

/// Spatial-lag correlation `c_ℓ` for `ℓ = 0..M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSequence {
    pub c: Vec<Complex64>,
    pub band: Range<usize>,
    /// Number of averaged terms per lag.
    pub counts: Vec<usize>,
}

impl CorrelationSequence {
    /// Builds a sequence directly from lag values `c_0..c_{M−1}`.
    pub fn from_lags(c: Vec<Complex64>) -> Self {
        let counts = vec![1; c.len()];
        Self {
            c,
            band: 0..0,
            counts,
        }
    }

    pub fn max_lag(&self) -> usize {
        self.c.len().saturating_sub(1)
    }

    /// Value at signed lag `ℓ`, using `c_{−ℓ} = conj(c_ℓ)`.
    pub fn at(&self, lag: isize) -> Complex64 {
        let v = self.c[lag.unsigned_abs()];
        if lag < 0 {
            v.conj()
        } else {
            v
        }
    }

    /// The two-sided sequence `c_{−(M−1)} … c_{M−1}`.
    pub fn two_sided(&self) -> Vec<Complex64> {
        let m = self.c.len() as isize;
        (-(m - 1)..m).map(|l| self.at(l)).collect()
    }
}

/// Passband of the known pulse: the contiguous positive-frequency run around
/// the spectral peak with `|g̃| ≥ eta · max|g̃|`.
pub fn select_band(g_spec: &Spectrum, eta: f64) -> Result<Range<usize>> {
    contiguous_band(&g_spec.magnitude, eta)
}

pub fn estimate_correlation(
    snaps: &SnapshotSet,
    band: Range<usize>,
) -> Result<CorrelationSequence> {
    estimate_correlation_lags(snaps, band, snaps.sensors() - 1)
}

/// As [`estimate_correlation`] but only up to `max_lag`.
pub fn estimate_correlation_lags(
    snaps: &SnapshotSet,
    band: Range<usize>,
    max_lag: usize,
) -> Result<CorrelationSequence> {
    let m = snaps.sensors();
    if band.is_empty() || band.end > snaps.samples() {
        return Err(JadeError::invalid(format!(
            "frequency band {band:?} is empty or exceeds N = {}",
            snaps.samples()
        )));
    }
    if max_lag >= m {
        return Err(JadeError::invalid(format!(
            "lag {max_lag} exceeds M - 1 = {}",
            m - 1
        )));
    }
    let lags = max_lag + 1;

    // One partial sum per snapshot, reduced in snapshot order so the result
    // does not depend on the thread schedule.
    let partials: Vec<Vec<Complex64>> = (0..snaps.snapshots())
        .into_par_iter()
        .map(|s| {
            let mut acc = vec![Complex64::new(0.0, 0.0); lags];
            let rows: Vec<&[Complex64]> = (0..m).map(|k| &snaps.spectrum(s, k)[band.clone()]).collect();
            for (lag, slot) in acc.iter_mut().enumerate() {
                let mut sum = Complex64::new(0.0, 0.0);
                for k in lag..m {
                    let (a, b) = (rows[k], rows[k - lag]);
                    for (x, y) in a.iter().zip(b) {
                        sum += x * y.conj();
                    }
                }
                *slot = sum;
            }
            acc
        })
        .collect();

    let mut c = vec![Complex64::new(0.0, 0.0); lags];
    for p in &partials {
        for (dst, v) in c.iter_mut().zip(p) {
            *dst += v;
        }
    }
    let counts: Vec<usize> = (0..lags)
        .map(|lag| snaps.snapshots() * band.len() * (m - lag))
        .collect();
    for (v, &n) in c.iter_mut().zip(&counts) {
        *v /= n as f64;
    }
    // Lag zero is a mean of squared magnitudes.
    c[0] = Complex64::new(c[0].re, 0.0);
    Ok(CorrelationSequence { c, band, counts })
}
