//! The front end and residual formation on one simulated sample.
//!
//! Shows how much direct-path energy plain baseline subtraction leaves
//! behind under wavenumber drift, and how much stretch compensation removes.
//!
//! cargo run --release --example preprocess_pipeline

use gwdetect::config::ExperimentConfig;
use gwdetect::experiment::Experiment;
use gwdetect::sigproc::{energy, scale_stretch, standardize, subtract_plain, subtract_with_reference};
use gwdetect::wave_sim::{synth_sample, DamageScenario, PerturbationSpec};

fn main() -> gwdetect::Result<()> {
    let exp = Experiment::new(ExperimentConfig::desk_scale())?;
    let pre = &exp.preprocessor;
    let search = &pre.config().stretch;
    println!("fingerprint {}", pre.fingerprint());

    for gamma in [1.0, 1.01, 1.02] {
        let drift = PerturbationSpec::per_sample(0.0);
        let mut scene = exp.scene.clone();
        scene.dispersion = scene.dispersion.scaled(gamma);
        let undamaged = synth_sample(&scene, &DamageScenario::undamaged(), &drift, 0.0, 1)?;
        let front = pre.front_end(&undamaged)?;
        let plain = energy(&subtract_plain(&front, &exp.baseline_front)?)?;
        let stretched = energy(&subtract_with_reference(&front, &exp.baseline_front, &exp.baseline_front, search)?)?;
        let factor = scale_stretch(
            &front.time_columns()?[0],
            &exp.baseline_front.time_columns()?[0],
            search,
        )?
        .factor;
        println!(
            "gamma {gamma:.2}: pair 0 stretch factor {factor:.3}, residual energy plain {plain:.3e}, stretched {stretched:.3e}"
        );
    }

    let damaged = synth_sample(
        &exp.scene,
        &DamageScenario::at([0.53, 0.60], 1.0),
        &PerturbationSpec::per_path(0.02),
        exp.training_noise_std,
        7,
    )?;
    let front = pre.front_end(&damaged)?;
    let residual = subtract_with_reference(&front, &exp.baseline_front, &exp.baseline_front, search)?;
    let (standard, scale) = standardize(&residual)?;
    let v = standard.time_values()?;
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64;
    println!(
        "damaged sample: baseline energy {:.3e}, residual energy {:.3e}, scale {:?}",
        energy(&exp.baseline_front)?,
        energy(&residual)?,
        scale
    );
    println!("standardized residual: mean {mean:.2e}, variance {var:.12}");
    Ok(())
}
