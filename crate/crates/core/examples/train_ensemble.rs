//! Train the desk-scale VAE ensemble on adversarially perturbed simulations,
//! save it and reload it.
//!
//! cargo run --release --example train_ensemble [OUT_DIR]

use gwdetect::config::ExperimentConfig;
use gwdetect::experiment::Experiment;
use gwdetect::formats::{load_ensemble, save_ensemble, save_member, write_training_log};
use gwdetect::vae::{mean_elbo, train_ensemble};
use std::path::PathBuf;
use std::time::Instant;

fn main() -> gwdetect::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("gwdetect_train_ensemble"));
    let config = ExperimentConfig::desk_scale();
    let exp = Experiment::new(config.clone())?;
    let data = exp.simulate_adversarial()?;
    let train = exp.prepare_training(&data.train)?;
    let validation = exp.prepare_training(&data.validation)?;

    let n = config.detector.ensemble_size;
    println!(
        "training {n} members, {} epochs, {} train / {} validation samples",
        config.vae.epochs,
        train.len(),
        validation.len()
    );
    let start = Instant::now();
    let fp = exp.preprocessor.fingerprint().clone();
    let (ensemble, logs) = train_ensemble(
        &config.vae,
        &train,
        &validation,
        n,
        config.seeds.ensemble,
        &config.hash()?,
        Vec::new(),
        |i, vae, log| {
            println!("member {i} done, validation ELBO {:.1}", log.final_val_elbo());
            save_member(&out, i, vae, &fp)
        },
    )?;
    println!("trained in {:.1?}", start.elapsed());

    println!("{:>6} {:>8} {:>12} {:>12}", "member", "epoch", "train ELBO", "val ELBO");
    for log in &logs {
        for r in &log.epochs {
            println!("{:>6} {:>8} {:>12.2} {:>12.2}", r.member, r.epoch, r.train_elbo, r.val_elbo);
        }
    }

    save_ensemble(&out, &ensemble)?;
    write_training_log(&out.join("training_log.csv"), &logs)?;
    let back = load_ensemble(&out)?;
    // Stored parameters are f32, so the reloaded ELBO differs only at rounding level.
    let seed = config.seeds.detection;
    for (i, (a, b)) in ensemble.members.iter().zip(&back.members).enumerate() {
        let before = mean_elbo(a, &validation, seed, config.vae.eval_mc_samples)?;
        let after = mean_elbo(b, &validation, seed, config.vae.eval_mc_samples)?;
        println!("member {i}: validation ELBO {before:.4} in memory, {after:.4} reloaded");
    }
    println!("wrote {}", out.display());
    Ok(())
}
