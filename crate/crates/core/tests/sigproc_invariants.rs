//! Properties of the preprocessing chain.

use gwdetect::config::ExperimentConfig;
use gwdetect::experiment::Experiment;
use gwdetect::sigproc::{
    energy, pulse_compress, resample, scale_stretch, standardize_values, subtract_plain, subtract_with_reference,
    velocity_window, velocity_window_gain, FilterSpec, StretchSearch,
};
use gwdetect::wave_sim::{synth_sample, DamageScenario, PerturbationSpec};
use num_complex::Complex64;
use proptest::collection::vec;
use proptest::prelude::*;
use std::sync::OnceLock;

fn experiment() -> &'static Experiment {
    static EXP: OnceLock<Experiment> = OnceLock::new();
    EXP.get_or_init(|| Experiment::new(ExperimentConfig::desk_scale()).unwrap())
}

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    vec((-1e3f64..1e3, -1e3f64..1e3).prop_map(|(re, im)| Complex64::new(re, im)), len)
}

fn wavepacket(n: usize, center: f64, width: f64, rate: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let t = i as f64;
            (-((t - center) / width).powi(2)).exp() * (rate * t).sin()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Quarter-turn phases are exact in floating point, so the matched filter
    /// output must not change in a single bit.
    #[test]
    fn compression_ignores_shared_quarter_turn_phase(
        received in complex_vec(64),
        chirp in complex_vec(64),
        turns in vec(0u8..4, 64),
    ) {
        let rot = |v: &[Complex64]| -> Vec<Complex64> {
            v.iter()
                .zip(&turns)
                .map(|(c, t)| match t {
                    0 => *c,
                    1 => Complex64::new(-c.im, c.re),
                    2 => Complex64::new(-c.re, -c.im),
                    _ => Complex64::new(c.im, -c.re),
                })
                .collect()
        };
        let plain = pulse_compress(&received, &chirp).unwrap();
        let rotated = pulse_compress(&rot(&received), &rot(&chirp)).unwrap();
        for (a, b) in plain.iter().zip(&rotated) {
            prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
            prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn compression_ignores_any_shared_phase_to_rounding(
        received in complex_vec(64),
        chirp in complex_vec(64),
        phases in vec(-10.0f64..10.0, 64),
    ) {
        let rot = |v: &[Complex64]| -> Vec<Complex64> {
            v.iter().zip(&phases).map(|(c, p)| c * Complex64::from_polar(1.0, *p)).collect()
        };
        let plain = pulse_compress(&received, &chirp).unwrap();
        let rotated = pulse_compress(&rot(&received), &rot(&chirp)).unwrap();
        for (a, b) in plain.iter().zip(&rotated) {
            prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
        }
    }

    #[test]
    fn standardized_moments(
        values in vec(-1e6f64..1e6, 2..400),
        offset in -1e8f64..1e8,
        scale in 1e-6f64..1e6,
    ) {
        let shifted: Vec<f64> = values.iter().map(|v| v * scale + offset).collect();
        let (out, _) = standardize_values(&shifted);
        let n = out.len() as f64;
        let mean = out.iter().sum::<f64>() / n;
        let var = out.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        if out.iter().any(|v| *v != 0.0) {
            prop_assert!(mean.abs() < 1e-9, "mean {}", mean);
            prop_assert!((var - 1.0).abs() < 1e-6, "var {}", var);
        }
    }

    #[test]
    fn standardization_is_scale_invariant_and_idempotent(values in vec(-1e3f64..1e3, 3..200), c in 0.01f64..100.0) {
        let (a, _) = standardize_values(&values);
        let scaled: Vec<f64> = values.iter().map(|v| v * c).collect();
        let (b, _) = standardize_values(&scaled);
        let (again, _) = standardize_values(&a);
        for ((x, y), z) in a.iter().zip(&b).zip(&again) {
            prop_assert!((x - y).abs() < 1e-9);
            prop_assert!((x - z).abs() < 1e-12);
        }
    }

    #[test]
    fn off_grid_stretch_recovered_within_one_step(factor in 0.975f64..1.025) {
        let reference = wavepacket(256, 110.0, 22.0, 0.35);
        let search = StretchSearch::default();
        let s = scale_stretch(&resample(&reference, factor), &reference, &search).unwrap();
        prop_assert!((s.factor - factor).abs() <= search.step() + 1e-12, "{} -> {}", factor, s.factor);
    }

    #[test]
    fn stretching_never_lowers_correlation(factor in 0.95f64..1.05, rate in 0.2f64..0.6) {
        let reference = wavepacket(200, 90.0, 18.0, rate);
        let test = resample(&reference, factor);
        let s = scale_stretch(&test, &reference, &StretchSearch::default()).unwrap();
        let before = gwdetect::sigproc::pearson(&test, &reference).unwrap();
        prop_assert!(s.correlation >= before);
    }
}

#[test]
fn on_grid_stretch_recovered_exactly() {
    let reference = wavepacket(256, 110.0, 22.0, 0.35);
    let search = StretchSearch::default();
    for f in search.factors().into_iter().skip(5).step_by(4) {
        let s = scale_stretch(&resample(&reference, f), &reference, &search).unwrap();
        assert_eq!(s.factor, f);
    }
    assert_eq!(scale_stretch(&reference, &reference, &search).unwrap().factor, 1.0);
}

#[test]
fn velocity_window_knee_values() {
    let filter = FilterSpec::default();
    assert_eq!(filter.velocity_window, 1500.0);
    let knee = 0.5681 / filter.velocity_window;
    assert!((knee - 378.7e-6).abs() < 0.05e-6);
    assert_eq!(velocity_window_gain(knee, 0.5681, &filter), 1.0);
    let e1 = velocity_window_gain(knee + filter.taper_constant, 0.5681, &filter);
    assert!((e1 - (-1.0f64).exp()).abs() < 1e-15);
    let endless = FilterSpec {
        taper_constant: f64::INFINITY,
        ..filter
    };
    assert_eq!(velocity_window_gain(knee + 1.0, 0.5681, &endless), 1.0);

    // At 1 MHz sampling, samples up to the knee pass untouched.
    let mut trace = vec![1.0; 1000];
    velocity_window(&mut trace, 0.5681, 1e6, &filter).unwrap();
    assert!(trace[..=378].iter().all(|v| *v == 1.0));
    assert!(trace[379] < 1.0 && trace[379] > 0.99);
}

#[test]
fn noise_free_undamaged_residual_is_identically_zero() {
    let exp = experiment();
    let raw = synth_sample(&exp.scene, &DamageScenario::undamaged(), &PerturbationSpec::none(), 0.0, 3).unwrap();
    let p = exp.preprocessor.prepare_against(&raw, &exp.baseline_front).unwrap();
    assert!(p.sample.time_values().unwrap().iter().all(|v| *v == 0.0));

    let bank = exp
        .preprocessor
        .bank(
            &synth_sample(&exp.scene, &DamageScenario::at([0.4, 0.7], 1.0), &PerturbationSpec::none(), 0.0, 4).unwrap(),
            &raw,
        )
        .unwrap();
    let p = exp.preprocessor.prepare_with_bank(&raw, &bank).unwrap();
    assert!(p.sample.time_values().unwrap().iter().all(|v| *v == 0.0));
}

#[test]
fn damaged_residual_energy_scales_with_alpha_squared() {
    let exp = experiment();
    let pre = &exp.preprocessor;
    let residual = |alpha: f64| {
        let raw = synth_sample(&exp.scene, &DamageScenario::at([0.53, 0.6], alpha), &PerturbationSpec::none(), 0.0, 5)
            .unwrap();
        energy(&subtract_plain(&pre.front_end(&raw).unwrap(), &exp.baseline_front).unwrap()).unwrap()
    };
    let unit = residual(1.0);
    assert!(unit > 0.0);
    for alpha in [0.5, 2.0, 3.0] {
        let e = residual(alpha);
        assert!((e - alpha * alpha * unit).abs() <= 1e-9 * e, "alpha {alpha}: {e} vs {}", alpha * alpha * unit);
    }
}

#[test]
fn stretch_removes_at_least_half_the_drift_residual() {
    let exp = experiment();
    let pre = &exp.preprocessor;
    let mut scene = exp.scene.clone();
    scene.dispersion = scene.dispersion.scaled(1.02);
    let raw = synth_sample(&scene, &DamageScenario::undamaged(), &PerturbationSpec::none(), 0.0, 6).unwrap();
    let front = pre.front_end(&raw).unwrap();
    let plain = energy(&subtract_plain(&front, &exp.baseline_front).unwrap()).unwrap();
    let stretched = energy(
        &subtract_with_reference(&front, &exp.baseline_front, &exp.baseline_front, &pre.config().stretch).unwrap(),
    )
    .unwrap();
    assert!(stretched > 0.0);
    assert!(stretched <= 0.5 * plain, "stretched {stretched} vs plain {plain}");
}
