use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use proptest::prelude::*;

use jade_core::channel::{synthesize, ArrayConfig, FadingModel, PathParam};
use jade_core::correlation::{estimate_correlation, select_band, CorrelationSequence};
use jade_core::prony::{svd_prony, PronyConfig};
use jade_core::pulse::{generate_pulse, spectrum, unwrap_phase, BitSource, PulseConfig, SampledWaveform};

fn wrap(x: f64) -> f64 {
    x.sin().atan2(x.cos())
}

fn exp_sum(amps: &[f64], incs: &[f64], m: usize) -> CorrelationSequence {
    CorrelationSequence::from_lags(
        (0..m)
            .map(|l| {
                amps.iter()
                    .zip(incs)
                    .map(|(g, w)| Complex64::from_polar(*g, w * l as f64))
                    .sum()
            })
            .collect(),
    )
}

/// Unit-circle phase increments with pairwise circular separation >= `gap`.
fn separated_increments(count: usize, gap: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-PI..PI, count).prop_filter("separation", move |v| {
        v.iter().enumerate().all(|(i, a)| {
            v.iter()
                .skip(i + 1)
                .all(|b| wrap(a - b).abs() >= gap)
        })
    })
}

fn matched(found: &[f64], truth: &[f64], tol: f64) -> bool {
    truth
        .iter()
        .all(|t| found.iter().any(|f| wrap(f - t).abs() < tol))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unwrap_inverts_wrapping(start in -10.0..10.0f64, steps in prop::collection::vec(-3.0..3.0f64, 2..200)) {
        let mut seq = vec![start];
        for d in &steps {
            seq.push(seq.last().unwrap() + d);
        }
        let out = unwrap_phase(&seq.iter().map(|v| wrap(*v)).collect::<Vec<_>>());
        let k = ((out[0] - seq[0]) / TAU).round();
        for (o, s) in out.iter().zip(&seq) {
            prop_assert!((o - s - TAU * k).abs() < 1e-9);
        }
        // Output differs from input by integer turns.
        let wrapped: Vec<f64> = seq.iter().map(|v| wrap(*v)).collect();
        for (o, w) in out.iter().zip(&wrapped) {
            let turns = (o - w) / TAU;
            prop_assert!((turns - turns.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn real_spectrum_is_hermitian(values in prop::collection::vec(-5.0..5.0f64, 8..64)) {
        let n = values.len() & !1;
        let w = SampledWaveform { t: (0..n).map(|i| i as f64).collect(), values: values[..n].to_vec() };
        let Ok(s) = spectrum(&w) else { return Ok(()); };
        let scale = s.magnitude.iter().copied().fold(0.0, f64::max).max(1e-300);
        for q in 1..n {
            prop_assert!((s.values[n - q] - s.values[q].conj()).norm() <= 1e-12 * scale);
        }
        prop_assert!(s.magnitude.iter().all(|m| *m >= 0.0));
    }

    #[test]
    fn circular_shift_multiplies_spectrum(seed in 0u64..1000, d in 0usize..128) {
        let cfg = PulseConfig { bits: BitSource::Seeded(seed), ..PulseConfig::default() };
        let w = generate_pulse(&cfg).unwrap();
        let n = w.len();
        let shifted = SampledWaveform {
            t: w.t.clone(),
            values: (0..n).map(|i| w.values[(i + n - d) % n]).collect(),
        };
        let (a, b) = (spectrum(&w).unwrap(), spectrum(&shifted).unwrap());
        for q in 0..n {
            let expected = a.values[q] * Complex64::from_polar(1.0, -a.omega[q] * d as f64);
            prop_assert!((b.values[q] - expected).norm() <= 1e-10 * a.values[q].norm().max(1e-3));
        }
    }

    #[test]
    fn pulse_is_finite(rho in 0.05..1.0f64, fc in 0.0..1.0f64, seed in 0u64..100) {
        let cfg = PulseConfig { rho, fc, symbol_count: 16, oversample: 8, bits: BitSource::Seeded(seed) };
        let w = generate_pulse(&cfg).unwrap();
        prop_assert!(w.values.iter().all(|v| v.is_finite()));
        for pair in w.t.windows(2) {
            prop_assert!((pair[1] - pair[0] - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn prony_recovers_exact_exponentials(
        incs in (1usize..=4).prop_flat_map(|l| separated_increments(l, 0.1)),
        amp_seed in prop::collection::vec(0.5..2.0f64, 4),
    ) {
        let l = incs.len();
        let amps = &amp_seed[..l];
        let corr = exp_sum(amps, &incs, 64);
        let est = svd_prony(&corr, &PronyConfig::with_order(l), 0.5).unwrap();
        prop_assert!(matched(&est.phase_increments, &incs, 1e-8), "{:?} vs {:?}", est.phase_increments, incs);
        let ratio = est.singular_values[l] / est.singular_values[l - 1];
        prop_assert!(ratio < 1e-10, "sigma ratio {ratio}");
    }

    #[test]
    fn prony_scale_and_conjugation(
        incs in separated_increments(2, 0.2),
        alpha in 0.01..100.0f64,
    ) {
        let corr = exp_sum(&[1.3, 0.6], &incs, 32);
        let cfg = PronyConfig::with_order(2);
        let base = svd_prony(&corr, &cfg, 0.5).unwrap();
        let scaled = CorrelationSequence::from_lags(corr.c.iter().map(|v| v * alpha).collect());
        let est = svd_prony(&scaled, &cfg, 0.5).unwrap();
        for (a, b) in est.s.iter().zip(&base.s) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        for (a, b) in est.amplitudes.iter().zip(&base.amplitudes) {
            prop_assert!((a - alpha * b).abs() < 1e-8 * alpha);
        }
        let conj = CorrelationSequence::from_lags(corr.c.iter().map(|v| v.conj()).collect());
        let mirrored = svd_prony(&conj, &cfg, 0.5).unwrap();
        let mut negated: Vec<f64> = base.s.iter().map(|v| -v).collect();
        negated.sort_by(f64::total_cmp);
        for (a, b) in mirrored.s.iter().zip(&negated) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic_single_path_correlation(theta in -80.0..80.0f64, tau in -20.0..20.0f64, m in 2usize..24) {
        let pulse = generate_pulse(&PulseConfig::default()).unwrap();
        let spec = spectrum(&pulse).unwrap();
        let arr = ArrayConfig { sensors: m, delta: 0.5 };
        let set = synthesize(&pulse, &[PathParam::new(theta, tau)], &arr,
            &FadingModel::deterministic(Complex64::new(0.8, -0.3)), 1, 0.0, 0).unwrap();
        let corr = estimate_correlation(&set, select_band(&spec, 0.1).unwrap()).unwrap();
        let c0 = corr.c[0].re;
        prop_assert_eq!(corr.c[0].im, 0.0);
        let inc = TAU * 0.5 * theta.to_radians().sin();
        for pair in corr.c.windows(2) {
            prop_assert!((pair[1].norm() - c0).abs() < 1e-10 * c0);
            let step = wrap((pair[1] * pair[0].conj()).arg() - inc);
            prop_assert!(step.abs() < 1e-10);
        }
    }
}

#[test]
fn correlation_hermitian_extension_is_exact() {
    let pulse = generate_pulse(&PulseConfig::default()).unwrap();
    let spec = spectrum(&pulse).unwrap();
    let set = synthesize(
        &pulse,
        &[PathParam::new(-10.0, 3.0), PathParam::new(20.0, 7.0)],
        &ArrayConfig::default(),
        &FadingModel::default(),
        10,
        0.1,
        42,
    )
    .unwrap();
    let corr = estimate_correlation(&set, select_band(&spec, 0.1).unwrap()).unwrap();
    assert_eq!(corr.c[0].im, 0.0);
    assert!(corr.c[0].re > 0.0);
    for l in 0..64isize {
        assert_eq!(corr.at(-l), corr.at(l).conj());
    }
}

#[test]
fn correlation_independent_of_thread_count() {
    let pulse = generate_pulse(&PulseConfig::default()).unwrap();
    let spec = spectrum(&pulse).unwrap();
    let band = select_band(&spec, 0.1).unwrap();
    let set = synthesize(
        &pulse,
        &[PathParam::new(-10.0, 3.0), PathParam::new(20.0, 7.0)],
        &ArrayConfig::default(),
        &FadingModel::default(),
        40,
        0.0,
        5,
    )
    .unwrap();
    let parallel = estimate_correlation(&set, band.clone()).unwrap();
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| estimate_correlation(&set, band).unwrap());
    assert_eq!(parallel, single);
}
