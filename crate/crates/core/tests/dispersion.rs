//! Rayleigh–Lamb solver against an independent brute-force root search.

use gwdetect::config::ExperimentConfig;
use gwdetect::wave_sim::{lamb_dispersion_on_grid, normalized_residual, solve_rayleigh_lamb, LambMode, PlateSpec};
use proptest::prelude::*;

/// `cos(√s h)`, continued to `cosh(√−s h)` for negative `s`.
fn cos_part(s: f64, h: f64) -> f64 {
    if s >= 0.0 {
        (s.sqrt() * h).cos()
    } else {
        ((-s).sqrt() * h).cosh()
    }
}

/// `sin(√s h) / √s`, continued through zero.
fn sinc_part(s: f64, h: f64) -> f64 {
    if s > 0.0 {
        (s.sqrt() * h).sin() / s.sqrt()
    } else if s < 0.0 {
        ((-s).sqrt() * h).sinh() / (-s).sqrt()
    } else {
        h
    }
}

/// `√s sin(√s h)`, continued to `−√−s sinh(√−s h)`.
fn sin_times(s: f64, h: f64) -> f64 {
    if s >= 0.0 {
        s.sqrt() * (s.sqrt() * h).sin()
    } else {
        -(-s).sqrt() * ((-s).sqrt() * h).sinh()
    }
}

/// Real-valued Rayleigh–Lamb characteristic functions, cleared of the
/// tangent poles:
/// symmetric `(q²−k²)² cos(ph) sin(qh)/q + 4k² p sin(ph) cos(qh)`,
/// antisymmetric `(q²−k²)² sin(ph)/p cos(qh) + 4k² q sin(qh) cos(ph)`.
fn oracle(plate: &PlateSpec, mode: LambMode, omega: f64, k: f64) -> f64 {
    let h = plate.thickness / 2.0;
    let p2 = (omega / plate.longitudinal_velocity).powi(2) - k * k;
    let q2 = (omega / plate.shear_velocity).powi(2) - k * k;
    let a = (q2 - k * k).powi(2);
    match mode {
        LambMode::S0 => a * cos_part(p2, h) * sinc_part(q2, h) + 4.0 * k * k * sin_times(p2, h) * cos_part(q2, h),
        LambMode::A0 => a * sinc_part(p2, h) * cos_part(q2, h) + 4.0 * k * k * sin_times(q2, h) * cos_part(p2, h),
    }
}

/// Largest wavenumber root of the oracle at `omega`: the fundamental mode of
/// that symmetry. Scans phase velocity upward from a twentieth of the shear speed.
fn brute_force_kappa(plate: &PlateSpec, mode: LambMode, omega: f64) -> f64 {
    let steps = 200_000;
    let (c_lo, c_hi) = (0.05 * plate.shear_velocity, 1.2 * plate.longitudinal_velocity);
    let f = |c: f64| oracle(plate, mode, omega, omega / c);
    let mut prev_c = c_lo;
    let mut prev = f(c_lo);
    for i in 1..=steps {
        let c = c_lo + (c_hi - c_lo) * i as f64 / steps as f64;
        let v = f(c);
        if v == 0.0 {
            return omega / c;
        }
        if (v > 0.0) != (prev > 0.0) {
            let (mut lo, mut hi, mut flo) = (prev_c, c, prev);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if (fm > 0.0) == (flo > 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            return omega / (0.5 * (lo + hi));
        }
        prev_c = c;
        prev = v;
    }
    panic!("no {mode:?} root at omega {omega}");
}

fn plate() -> PlateSpec {
    PlateSpec::aluminum(1.22, 3e-3).unwrap()
}

#[test]
fn fundamental_modes_match_dense_bisection() {
    let plate = plate();
    let omegas: Vec<f64> = (1..=12).map(|i| std::f64::consts::TAU * 42e3 * i as f64).collect();
    let model = solve_rayleigh_lamb(&plate, &omegas, &[LambMode::S0, LambMode::A0]).unwrap();
    for (m, mode) in [LambMode::S0, LambMode::A0].into_iter().enumerate() {
        for (i, &w) in omegas.iter().enumerate() {
            let expected = brute_force_kappa(&plate, mode, w);
            let got = model.kappa[m][i];
            assert!(
                ((got - expected) / expected).abs() < 1e-8,
                "{mode:?} at {:.0} Hz: solver {got}, oracle {expected}",
                w / std::f64::consts::TAU
            );
        }
    }
}

#[test]
fn low_frequency_asymptotes_on_the_desk_grid() {
    let config = ExperimentConfig::desk_scale();
    let plate = plate();
    let omegas = config.wave_sim.grid().unwrap().omegas();
    let model = lamb_dispersion_on_grid(&plate, &omegas, &[LambMode::S0, LambMode::A0]).unwrap();
    let (w, ks, ka) = (omegas[1], model.kappa[0][1], model.kappa[1][1]);
    let nu = plate.poisson_ratio();
    let (e, rho) = (69e9, 2700.0);
    let thin = (w * w * 12.0 * (1.0 - nu * nu) * rho / (e * plate.thickness.powi(2))).powf(0.25);
    assert!(((ka - thin) / thin).abs() < 0.05, "A0 {ka} vs thin plate {thin}");
    let c_plate = (e / (rho * (1.0 - nu * nu))).sqrt();
    assert!(((w / ks - c_plate) / c_plate).abs() < 0.05, "S0 {} vs {c_plate}", w / ks);
    assert_eq!(model.kappa[0][0], 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn returned_points_are_roots(f in 2e3f64..600e3, thickness in 1e-3f64..6e-3) {
        let plate = PlateSpec::aluminum(1.0, thickness).unwrap();
        let w = std::f64::consts::TAU * f;
        let model = solve_rayleigh_lamb(&plate, &[w], &[LambMode::S0, LambMode::A0]).unwrap();
        for (m, mode) in [LambMode::S0, LambMode::A0].into_iter().enumerate() {
            let k = model.kappa[m][0];
            prop_assert!(normalized_residual(&plate, mode, w, k) < 1e-9);
            prop_assert!(w / k < plate.longitudinal_velocity);
        }
        prop_assert!(model.kappa[1][0] > model.kappa[0][0]);
    }
}
