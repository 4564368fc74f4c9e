//! SVD-truncated linear prediction (Tufts–Kumaresan) for the spatial
//! correlation sequence.
//!
//! The two-sided sequence `c_ℓ, ℓ = −(M−1)…(M−1)` is modelled as a sum of
//! undamped exponentials `Σ G_i z_i^ℓ` with `z_i = e^{j2πδ sin θ_i}`. A long
//! forward predictor is solved with a rank-limited pseudoinverse; its signal
//! roots sit on the unit circle while the extraneous ones are pushed inside.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::correlation::CorrelationSequence;
use crate::error::{JadeError, Result, Stage};
use crate::roots::roots_of_polynomial;

/// Root moduli outside this interval are never treated as signal roots.
pub const ROOT_MODULUS_BOUNDS: (f64, f64) = (0.5, 2.0);

/// `|sin θ|` may exceed one by this much before the estimate is flagged.
pub const CLAMP_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RootSelection {
    /// Rank roots by `|1 − |z||` and keep the closest `L`.
    #[default]
    NearestUnitCircle,
    /// Keep the `L` largest-modulus roots with `|z| ≤ 1 + 1e-3`.
    LargestInside,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PronyConfig {
    /// Number of exponentials (paths).
    pub order: usize,
    /// Prediction order `p`; `None` uses `⌊(2M−1)/3⌋`.
    pub prediction_order: Option<usize>,
    /// SVD truncation rank; `None` uses `order`.
    pub rank: Option<usize>,
    pub root_selection: RootSelection,
    /// Stack backward prediction equations under the forward ones.
    pub forward_backward: bool,
}

impl Default for PronyConfig {
    fn default() -> Self {
        Self {
            order: 2,
            prediction_order: None,
            rank: None,
            root_selection: RootSelection::default(),
            forward_backward: false,
        }
    }
}

impl PronyConfig {
    pub fn with_order(order: usize) -> Self {
        Self {
            order,
            ..Self::default()
        }
    }

    /// Resolved `(p, rank)` for a two-sided sequence of `len` samples.
    pub fn resolve(&self, len: usize) -> Result<(usize, usize)> {
        let l = self.order;
        if l == 0 {
            return Err(JadeError::invalid("model order must be >= 1"));
        }
        let p = self.prediction_order.unwrap_or(len / 3);
        let rank = self.rank.unwrap_or(l);
        if len < p + l + 1 {
            return Err(JadeError::invalid(format!(
                "{len} correlation samples cannot support prediction order {p} with {l} modes"
            )));
        }
        if rank < l || rank > p {
            return Err(JadeError::invalid(format!(
                "truncation rank {rank} must satisfy {l} <= rank <= {p}"
            )));
        }
        Ok((p, rank))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeEstimate {
    /// Estimated `sin θ_i`, ascending.
    pub s: Vec<f64>,
    pub theta_deg: Vec<f64>,
    /// Spatial phase increments `arg z_i`, in the same order as `s`.
    pub phase_increments: Vec<f64>,
    /// Real least-squares weights `G_i`.
    pub amplitudes: Vec<f64>,
    /// Largest `|Im G_i| / max|G|` from the complex fit.
    pub amplitude_imag_residue: f64,
    /// Selected roots, same order as `s`.
    pub roots: Vec<Complex64>,
    /// Every root of the prediction polynomial with a selection flag.
    pub all_roots: Vec<(Complex64, bool)>,
    /// Singular values of the prediction matrix, descending.
    pub singular_values: Vec<f64>,
    /// True when some `|s_i|` exceeded one and was clamped.
    pub clamped: bool,
    /// False when a clamp exceeded [`CLAMP_TOLERANCE`].
    pub valid: bool,
    pub warnings: Vec<String>,
}

fn prediction_system(seq: &[Complex64], p: usize, forward_backward: bool) -> (DMatrix<Complex64>, DVector<Complex64>) {
    let n = seq.len();
    let fwd = n - p;
    let rows = if forward_backward { 2 * fwd } else { fwd };
    let mut a = DMatrix::zeros(rows, p);
    let mut b = DVector::zeros(rows);
    for (r, j) in (p..n).enumerate() {
        for col in 0..p {
            a[(r, col)] = seq[j - 1 - col];
        }
        b[r] = -seq[j];
    }
    if forward_backward {
        for (r, j) in (0..fwd).enumerate() {
            for col in 0..p {
                a[(fwd + r, col)] = seq[j + 1 + col].conj();
            }
            b[fwd + r] = -seq[j].conj();
        }
    }
    (a, b)
}

/// Minimum-norm least-squares solution restricted to the `rank` dominant
/// singular triplets. Returns the solution and all singular values (descending).
fn truncated_solve(
    a: DMatrix<Complex64>,
    b: &DVector<Complex64>,
    rank: usize,
) -> Result<(DVector<Complex64>, Vec<f64>)> {
    let svd = a.svd(true, true);
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested V^H");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    if sv.first().copied().unwrap_or(0.0) == 0.0 {
        return Err(JadeError::estimation(Stage::Prony, "correlation sequence is identically zero"));
    }
    let mut x = DVector::zeros(v_t.ncols());
    for &i in order.iter().take(rank) {
        let sigma = svd.singular_values[i];
        if sigma == 0.0 {
            continue;
        }
        let coef = u.column(i).dotc(b) / sigma;
        x += v_t.row(i).adjoint() * coef;
    }
    Ok((x, sv))
}

/// Least-squares fit of `seq[j] ≈ Σ_i G_i z_i^{ℓ_j}` for given unit roots.
fn fit_amplitudes(seq: &[Complex64], increments: &[f64]) -> Vec<Complex64> {
    let half = (seq.len() / 2) as f64;
    let v = DMatrix::from_fn(seq.len(), increments.len(), |j, i| {
        Complex64::from_polar(1.0, increments[i] * (j as f64 - half))
    });
    let rhs = DVector::from_column_slice(seq);
    let svd = v.svd(true, true);
    let sol = svd
        .solve(&rhs, 1e-12 * svd.singular_values.max())
        .unwrap_or_else(|_| DVector::zeros(increments.len()));
    sol.iter().copied().collect()
}

/// Estimates `sin θ_i` for an array of spacing `delta` (wavelengths).
pub fn svd_prony(corr: &CorrelationSequence, cfg: &PronyConfig, delta: f64) -> Result<ModeEstimate> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(JadeError::invalid("element spacing must be positive"));
    }
    let seq = corr.two_sided();
    let (p, rank) = cfg.resolve(seq.len())?;
    let l = cfg.order;

    let (a, b) = prediction_system(&seq, p, cfg.forward_backward);
    let (coef, singular_values) = truncated_solve(a, &b, rank)?;

    // 1 + a_1 z^{-1} + … + a_p z^{-p}  ⇔  z^p + a_1 z^{p-1} + … + a_p
    let mut poly = Vec::with_capacity(p + 1);
    poly.push(Complex64::new(1.0, 0.0));
    poly.extend(coef.iter().copied());
    let roots = roots_of_polynomial(&poly)?;

    let (lo, hi) = ROOT_MODULUS_BOUNDS;
    let mut candidates: Vec<usize> = (0..roots.len())
        .filter(|&i| {
            let r = roots[i].norm();
            r >= lo && r <= hi
        })
        .collect();
    if cfg.root_selection == RootSelection::LargestInside {
        candidates.retain(|&i| roots[i].norm() <= 1.0 + 1e-3);
    }
    if candidates.len() < l {
        return Err(JadeError::estimation(
            Stage::Prony,
            format!(
                "only {} of {} roots satisfy the selection bound, need {l}",
                candidates.len(),
                roots.len()
            ),
        ));
    }

    // Tie-break by the weight of each candidate as a lone exponential.
    let projection = |z: Complex64| {
        let u = z / z.norm();
        let half = (seq.len() / 2) as i32;
        seq.iter()
            .enumerate()
            .map(|(j, c)| c * u.powi(half - j as i32))
            .sum::<Complex64>()
            .norm()
    };
    let key = |i: usize| match cfg.root_selection {
        RootSelection::NearestUnitCircle => (1.0 - roots[i].norm()).abs(),
        RootSelection::LargestInside => -roots[i].norm(),
    };
    candidates.sort_by(|&i, &j| {
        let (ki, kj) = (key(i), key(j));
        if (ki - kj).abs() <= 1e-12 {
            projection(roots[j]).total_cmp(&projection(roots[i]))
        } else {
            ki.total_cmp(&kj)
        }
    });
    let mut chosen: Vec<usize> = candidates[..l].to_vec();

    let scale = std::f64::consts::TAU * delta;
    chosen.sort_by(|&i, &j| roots[i].arg().total_cmp(&roots[j].arg()));
    let increments: Vec<f64> = chosen.iter().map(|&i| roots[i].arg()).collect();

    let mut warnings = Vec::new();
    let mut clamped = false;
    let mut valid = true;
    let s: Vec<f64> = increments
        .iter()
        .map(|inc| {
            let raw = inc / scale;
            if raw.abs() > 1.0 {
                clamped = true;
                if raw.abs() - 1.0 > CLAMP_TOLERANCE {
                    valid = false;
                    warnings.push(format!(
                        "sin(theta) estimate {raw:.6} outside [-1, 1]; spatial aliasing or failed fit"
                    ));
                }
            }
            raw.clamp(-1.0, 1.0)
        })
        .collect();
    let theta_deg = s.iter().map(|v| v.asin().to_degrees()).collect();

    let complex_amp = fit_amplitudes(&seq, &increments);
    let gmax = complex_amp.iter().map(|g| g.re.abs()).fold(0.0, f64::max);
    let amplitude_imag_residue = if gmax > 0.0 {
        complex_amp.iter().map(|g| g.im.abs()).fold(0.0, f64::max) / gmax
    } else {
        0.0
    };
    let amplitudes = complex_amp.iter().map(|g| g.re).collect();

    let all_roots = roots
        .iter()
        .enumerate()
        .map(|(i, &z)| (z, chosen.contains(&i)))
        .collect();
    let selected = chosen.iter().map(|&i| roots[i]).collect();

    Ok(ModeEstimate {
        s,
        theta_deg,
        phase_increments: increments,
        amplitudes,
        amplitude_imag_residue,
        roots: selected,
        all_roots,
        singular_values,
        clamped,
        valid,
        warnings,
    })
}

/// Diagnostic order estimate: the index of the largest ratio between
/// consecutive singular values, among the first `max_order` gaps.
pub fn singular_value_gap_order(singular_values: &[f64], max_order: usize) -> usize {
    let limit = max_order.min(singular_values.len().saturating_sub(1));
    (0..limit)
        .max_by(|&a, &b| {
            let ra = singular_values[a] / singular_values[a + 1].max(f64::MIN_POSITIVE);
            let rb = singular_values[b] / singular_values[b + 1].max(f64::MIN_POSITIVE);
            ra.total_cmp(&rb)
        })
        .map_or(0, |i| i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn exp_sum(terms: &[(f64, f64)], m: usize) -> CorrelationSequence {
        let c = (0..m)
            .map(|l| {
                terms
                    .iter()
                    .map(|&(g, w)| Complex64::from_polar(g, w * l as f64))
                    .sum()
            })
            .collect();
        CorrelationSequence::from_lags(c)
    }

    #[test]
    fn single_exponential() {
        let corr = exp_sum(&[(1.0, 0.8)], 64);
        let est = svd_prony(&corr, &PronyConfig::with_order(1), 0.5).unwrap();
        let s = 0.8 / PI;
        assert!((est.s[0] - s).abs() < 1e-12);
        assert!((est.theta_deg[0] - s.asin().to_degrees()).abs() < 1e-9);
        assert!((est.amplitudes[0] - 1.0).abs() < 1e-10);
        assert!(est.valid && !est.clamped);
    }

    #[test]
    fn two_exponentials_with_amplitudes() {
        let corr = exp_sum(&[(2.0, 0.3), (1.0, 1.1)], 64);
        let est = svd_prony(&corr, &PronyConfig::with_order(2), 0.5).unwrap();
        assert!((est.phase_increments[0] - 0.3).abs() < 1e-8);
        assert!((est.phase_increments[1] - 1.1).abs() < 1e-8);
        assert!((est.amplitudes[0] - 2.0).abs() < 1e-8);
        assert!((est.amplitudes[1] - 1.0).abs() < 1e-8);
        assert!(est.amplitude_imag_residue < 1e-6);
        // Reconstruction oracle.
        for l in -63..64isize {
            let model: Complex64 = est
                .amplitudes
                .iter()
                .zip(&est.phase_increments)
                .map(|(g, w)| Complex64::from_polar(*g, w * l as f64))
                .sum();
            assert!((model - corr.at(l)).norm() < 1e-10 * 3.0);
        }
        let ratio = est.singular_values[2] / est.singular_values[1];
        assert!(ratio < 1e-10, "{ratio}");
        assert_eq!(singular_value_gap_order(&est.singular_values, 10), 2);
    }

    #[test]
    fn forward_backward_agrees_on_exact_data() {
        let corr = exp_sum(&[(1.5, -0.9), (0.7, 0.2)], 32);
        let cfg = PronyConfig {
            forward_backward: true,
            ..PronyConfig::with_order(2)
        };
        let est = svd_prony(&corr, &cfg, 0.5).unwrap();
        assert!((est.phase_increments[0] + 0.9).abs() < 1e-8);
        assert!((est.phase_increments[1] - 0.2).abs() < 1e-8);
    }

    #[test]
    fn largest_inside_selection() {
        let corr = exp_sum(&[(1.0, -0.4), (1.0, 0.9)], 40);
        let cfg = PronyConfig {
            root_selection: RootSelection::LargestInside,
            ..PronyConfig::with_order(2)
        };
        let est = svd_prony(&corr, &cfg, 0.5).unwrap();
        assert!((est.phase_increments[0] + 0.4).abs() < 1e-8);
        assert!((est.phase_increments[1] - 0.9).abs() < 1e-8);
        assert_eq!(est.all_roots.iter().filter(|r| r.1).count(), 2);
    }

    #[test]
    fn aliased_increment_is_flagged() {
        // δ = 0.1 maps an increment of 1.0 rad to sin θ = 1.59.
        let corr = exp_sum(&[(1.0, 1.0)], 16);
        let est = svd_prony(&corr, &PronyConfig::with_order(1), 0.1).unwrap();
        assert!(est.clamped);
        assert!(!est.valid);
        assert_eq!(est.s[0], 1.0);
        assert!(!est.warnings.is_empty());
    }

    #[test]
    fn config_bounds() {
        let corr = exp_sum(&[(1.0, 0.5)], 4);
        assert!(svd_prony(&corr, &PronyConfig::with_order(0), 0.5).is_err());
        let too_big = PronyConfig {
            prediction_order: Some(6),
            ..PronyConfig::with_order(1)
        };
        assert!(svd_prony(&corr, &too_big, 0.5).is_err());
        let bad_rank = PronyConfig {
            rank: Some(5),
            prediction_order: Some(3),
            ..PronyConfig::with_order(1)
        };
        assert!(svd_prony(&corr, &bad_rank, 0.5).is_err());
        let zero = CorrelationSequence::from_lags(vec![Complex64::new(0.0, 0.0); 8]);
        assert!(svd_prony(&zero, &PronyConfig::with_order(1), 0.5).is_err());
    }
}
