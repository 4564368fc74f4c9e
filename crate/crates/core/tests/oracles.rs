//! Closed-form and Monte Carlo oracles for the synthesis, correlation,
//! beamforming and delay stages.

use std::f64::consts::TAU;

use num_complex::Complex64;

use jade_core::channel::{synthesize, ArrayConfig, FadingModel, PathParam, SnapshotSet};
use jade_core::correlation::{estimate_correlation, select_band, CorrelationSequence};
use jade_core::delay::{beamform, fit_delay};
use jade_core::prony::{svd_prony, PronyConfig};
use jade_core::pulse::{generate_pulse, spectrum, SampledWaveform, Spectrum};

fn default_pulse() -> (SampledWaveform, Spectrum) {
    let pulse = generate_pulse(&Default::default()).unwrap();
    let spec = spectrum(&pulse).unwrap();
    (pulse, spec)
}

fn default_paths() -> Vec<PathParam> {
    vec![PathParam::new(-10.0, 3.0), PathParam::new(20.0, 7.0)]
}

fn rayleigh(sensors: usize, snapshots: usize, seed: u64) -> SnapshotSet {
    let (pulse, _) = default_pulse();
    synthesize(
        &pulse,
        &default_paths(),
        &ArrayConfig { sensors, delta: 0.5 },
        &FadingModel::Rayleigh { sigma: 1.0 },
        snapshots,
        0.0,
        seed,
    )
    .unwrap()
}

/// `|Σ_{k<M} e^{jkx}| / M`.
fn dirichlet(m: usize, x: f64) -> f64 {
    (0..m)
        .map(|k| Complex64::from_polar(1.0, x * k as f64))
        .sum::<Complex64>()
        .norm()
        / m as f64
}

#[test]
fn sensor_power_matches_closed_form() {
    let (pulse, spec) = default_pulse();
    let n = pulse.len();
    // Closed form: E|x_k|² averaged over the record = 2 Σ_i Σ_n |g(t_n − τ_i)|² / N.
    // A circular delay preserves energy, so each path contributes Σ|g|² / N.
    let energy: f64 = pulse.values.iter().map(|v| v * v).sum();
    let expected = 2.0 * 2.0 * energy / n as f64;
    // Parseval cross-check on the pulse spectrum.
    let parseval: f64 = spec.magnitude.iter().map(|m| m * m).sum::<f64>() / n as f64;
    assert!((parseval - energy).abs() < 1e-10 * energy);

    let set = rayleigh(2, 10_000, 2024);
    let mut total = 0.0;
    for s in 0..set.snapshots() {
        for k in 0..2 {
            total += set.record(s, k).iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
        }
    }
    let measured = total / (2.0 * set.snapshots() as f64);
    assert!(
        (measured - expected).abs() < 0.03 * expected,
        "measured {measured}, closed form {expected}"
    );
}

#[test]
fn mismatched_beam_follows_dirichlet_gain() {
    let (pulse, spec) = default_pulse();
    let arr = ArrayConfig { sensors: 64, delta: 0.5 };
    let set = synthesize(
        &pulse,
        &[PathParam::new(12.0, 1.5)],
        &arr,
        &FadingModel::deterministic(Complex64::new(1.0, 0.0)),
        1,
        0.0,
        0,
    )
    .unwrap();
    let s_true = 12f64.to_radians().sin();
    for delta_s in [0.0, 0.003, 0.01, 0.05] {
        let bf = beamform(&set, &[s_true + delta_s]).unwrap();
        let gain = dirichlet(64, -TAU * 0.5 * delta_s);
        let peak = spec.magnitude.iter().copied().fold(0.0, f64::max);
        for (xi, g) in bf.row(0, 0).iter().zip(&spec.magnitude) {
            assert!((xi.norm() - g * gain).abs() < 1e-10 * peak, "delta_s {delta_s}");
        }
    }
}

#[test]
fn two_path_leakage_bounded_by_dirichlet() {
    let (pulse, spec) = default_pulse();
    let arr = ArrayConfig { sensors: 64, delta: 0.5 };
    // Only path 2 present; steering at path 1 measures pure leakage.
    let set = synthesize(
        &pulse,
        &[PathParam::new(20.0, 7.0)],
        &arr,
        &FadingModel::deterministic(Complex64::new(1.0, 0.0)),
        1,
        0.0,
        0,
    )
    .unwrap();
    let s1 = (-10f64).to_radians().sin();
    let s2 = 20f64.to_radians().sin();
    let closed = dirichlet(64, TAU * 0.5 * (s2 - s1));
    let bf = beamform(&set, &[s1]).unwrap();
    let q = spec.passband.start + spec.passband.len() / 2;
    let leak = bf.row(0, 0)[q].norm() / spec.magnitude[q];
    assert!(leak <= 2.0 * closed && leak >= 0.5 * closed, "leak {leak} vs {closed}");
    // Sidelobe bound: no larger than the first sidelobe (~0.217).
    assert!(leak < 0.22);
}

#[test]
fn rayleigh_correlation_is_two_exponentials() {
    // Long-run reference fit from 10⁴ snapshots, accumulated in blocks with
    // identical counts so the block mean equals the full mean.
    let (_, spec) = default_pulse();
    let band = select_band(&spec, 0.1).unwrap();
    let blocks = 20;
    let mut long = vec![Complex64::new(0.0, 0.0); 64];
    for b in 0..blocks {
        let set = rayleigh(64, 500, 10_000 + b);
        let c = estimate_correlation(&set, band.clone()).unwrap();
        for (acc, v) in long.iter_mut().zip(&c.c) {
            *acc += v / blocks as f64;
        }
    }
    let reference = svd_prony(&CorrelationSequence::from_lags(long), &PronyConfig::with_order(2), 0.5).unwrap();
    assert!(reference.amplitudes.iter().all(|g| *g > 0.0));
    assert!((reference.theta_deg[0] + 10.0).abs() < 1e-3);
    assert!((reference.theta_deg[1] - 20.0).abs() < 1e-3);

    // The S = 200 estimate against the best fit on the reference exponentials.
    let corr = estimate_correlation(&rayleigh(64, 200, 7), band).unwrap();
    let seq = corr.two_sided();
    let basis = |i: usize, l: f64| Complex64::from_polar(1.0, reference.phase_increments[i] * l);
    // 2x2 normal equations.
    let mut gram = [[Complex64::new(0.0, 0.0); 2]; 2];
    let mut rhs = [Complex64::new(0.0, 0.0); 2];
    for (j, c) in seq.iter().enumerate() {
        let l = j as f64 - 63.0;
        for a in 0..2 {
            rhs[a] += basis(a, l).conj() * c;
            for (b, g) in gram[a].iter_mut().enumerate() {
                *g += basis(a, l).conj() * basis(b, l);
            }
        }
    }
    let det = gram[0][0] * gram[1][1] - gram[0][1] * gram[1][0];
    let g0 = (rhs[0] * gram[1][1] - gram[0][1] * rhs[1]) / det;
    let g1 = (gram[0][0] * rhs[1] - gram[1][0] * rhs[0]) / det;
    assert!(g0.re > 0.0 && g1.re > 0.0);
    let mut resid = 0.0;
    let mut norm = 0.0;
    for (j, c) in seq.iter().enumerate() {
        let l = j as f64 - 63.0;
        resid += (c - g0 * basis(0, l) - g1 * basis(1, l)).norm_sqr();
        norm += c.norm_sqr();
    }
    let rel = (resid / norm).sqrt();
    assert!(rel < 0.05, "relative residual {rel}");
}

#[test]
fn normalized_correlation_error_shrinks_like_inverse_sqrt() {
    // S → ∞ limit: c_ℓ / c_0 = (e^{jφ₁ℓ} + e^{jφ₂ℓ}) / 2 (equal path powers).
    let (_, spec) = default_pulse();
    let band = select_band(&spec, 0.1).unwrap();
    let m = 16;
    let phases: Vec<f64> = default_paths().iter().map(|p| TAU * 0.5 * p.sin_theta()).collect();
    let limit = |l: usize| {
        phases
            .iter()
            .map(|w| Complex64::from_polar(0.5, w * l as f64))
            .sum::<Complex64>()
    };
    let seeds = 12;
    let rms_error = |snapshots: usize| {
        let mut total = 0.0;
        for seed in 0..seeds {
            let set = rayleigh(m, snapshots, 500 + seed);
            let c = estimate_correlation(&set, band.clone()).unwrap();
            total += (1..m)
                .map(|l| (c.c[l] / c.c[0].re - limit(l)).norm_sqr())
                .sum::<f64>();
        }
        (total / (seeds as f64 * (m - 1) as f64)).sqrt()
    };
    let errors: Vec<f64> = [100, 400, 1600].iter().map(|&s| rms_error(s)).collect();
    for pair in errors.windows(2) {
        let ratio = pair[1] / pair[0];
        assert!((0.3..0.75).contains(&ratio), "errors {errors:?}");
    }
}

#[test]
fn delay_slope_is_shift_equivariant() {
    let (pulse, spec) = default_pulse();
    let arr = ArrayConfig { sensors: 8, delta: 0.5 };
    let slope_for = |tau: f64| {
        let set = synthesize(
            &pulse,
            &[PathParam::new(5.0, tau)],
            &arr,
            &FadingModel::deterministic(Complex64::from_polar(1.0, 0.7)),
            1,
            0.0,
            0,
        )
        .unwrap();
        let bf = beamform(&set, &[5f64.to_radians().sin()]).unwrap();
        fit_delay(&bf, &spec, spec.passband.clone()).unwrap().slope[0][0]
    };
    let base = slope_for(2.0);
    for shift in [0.25, 1.0, 3.7, -1.3] {
        assert!((slope_for(2.0 + shift) - (base - shift)).abs() < 1e-9);
    }
}

#[test]
fn constant_phase_rotation_leaves_slope() {
    let set = rayleigh(64, 5, 3);
    let (_, spec) = default_pulse();
    let s: Vec<f64> = default_paths().iter().map(|p| p.sin_theta()).collect();
    let mut bf = beamform(&set, &s).unwrap();
    let a = fit_delay(&bf, &spec, spec.passband.clone()).unwrap();
    let rot = Complex64::from_polar(1.0, 2.1);
    bf.xi.iter_mut().for_each(|v| *v *= rot);
    let b = fit_delay(&bf, &spec, spec.passband.clone()).unwrap();
    for (ra, rb) in a.slope.iter().zip(&b.slope) {
        for (x, y) in ra.iter().zip(rb) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn fading_phase_averages_out_of_slope() {
    // Per-snapshot slopes are heavy tailed: when the steered path fades below
    // the sidelobe leakage of the other path, the unwrapped phase follows the
    // wrong delay. Block means of 100 and 400 snapshots are taken from the
    // same 6400-snapshot record so both see the same rare events.
    let (_, spec) = default_pulse();
    let s: Vec<f64> = default_paths().iter().map(|p| p.sin_theta()).collect();
    let mut slopes: Vec<Vec<f64>> = vec![Vec::new(), Vec::new()];
    for chunk in 0..16 {
        let set = rayleigh(64, 400, 7000 + chunk);
        let est = fit_delay(&beamform(&set, &s).unwrap(), &spec, spec.passband.clone()).unwrap();
        for row in &est.slope {
            slopes[0].push(row[0]);
            slopes[1].push(row[1]);
        }
    }
    for (i, tau) in [3.0, 7.0].iter().enumerate() {
        let grand = slopes[i].iter().sum::<f64>() / slopes[i].len() as f64;
        assert!((grand + tau).abs() < 0.01, "path {i}: mean slope {grand}");
        let block_rms = |size: usize| {
            let means: Vec<f64> = slopes[i]
                .chunks(size)
                .map(|b| b.iter().sum::<f64>() / size as f64)
                .collect();
            (means.iter().map(|m| (m + tau).powi(2)).sum::<f64>() / means.len() as f64).sqrt()
        };
        let (small, large) = (block_rms(100), block_rms(400));
        // ~1/√S predicts 0.5.
        let ratio = large / small;
        assert!((0.3..0.75).contains(&ratio), "path {i}: rms {small} -> {large}");
    }
}
