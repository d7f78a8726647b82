//! S0 and A0 dispersion curves of a 3 mm aluminum plate.
//!
//! Prints phase and group velocity per mode next to the low-frequency
//! references (plate velocity for S0, Kirchhoff flexural speed for A0).
//!
//! cargo run --release --example dispersion_curves

use gwdetect::wave_sim::{normalized_residual, solve_rayleigh_lamb, LambMode, PlateSpec};
use std::f64::consts::PI;

fn main() -> gwdetect::Result<()> {
    let plate = PlateSpec::aluminum(1.22, 3e-3)?;
    let freqs: Vec<f64> = (1..=20).map(|i| i as f64 * 25e3).collect();
    let omegas: Vec<f64> = freqs.iter().map(|f| 2.0 * PI * f).collect();
    let model = solve_rayleigh_lamb(&plate, &omegas, &[LambMode::S0, LambMode::A0])?;

    let cp = plate.plate_velocity();
    // Flexural rigidity per unit mass gives c_A0 ≈ sqrt(ω) (c_p² h² / 12)^(1/4).
    let flexural = |w: f64| w.sqrt() * (cp * cp * plate.thickness * plate.thickness / 12.0).powf(0.25);

    println!("c_L = {:.1} m/s, c_T = {:.1} m/s, c_plate = {:.1} m/s", plate.longitudinal_velocity, plate.shear_velocity, cp);
    println!("{:>8} {:>10} {:>10} {:>10} {:>10} {:>10} {:>9}", "f (kHz)", "S0 c_ph", "S0 c_gr", "A0 c_ph", "A0 c_gr", "A0 thin", "max res");
    for (i, (&f, &w)) in freqs.iter().zip(&omegas).enumerate() {
        let group = |mode: usize| {
            let k = &model.kappa[mode];
            let (lo, hi) = (i.saturating_sub(1), (i + 1).min(k.len() - 1));
            (omegas[hi] - omegas[lo]) / (k[hi] - k[lo])
        };
        let (ks, ka) = (model.kappa[0][i], model.kappa[1][i]);
        let worst = normalized_residual(&plate, LambMode::S0, w, ks)
            .abs()
            .max(normalized_residual(&plate, LambMode::A0, w, ka).abs());
        println!(
            "{:>8.0} {:>10.1} {:>10.1} {:>10.1} {:>10.1} {:>10.1} {:>9.1e}",
            f / 1e3,
            w / ks,
            group(0),
            w / ka,
            group(1),
            flexural(w),
            worst
        );
    }
    Ok(())
}
