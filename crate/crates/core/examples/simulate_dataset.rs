//! Desk-scale adversarial training corpus written as GWDS files.
//!
//! cargo run --release --example simulate_dataset [OUT_DIR]

use gwdetect::config::ExperimentConfig;
use gwdetect::experiment::Experiment;
use gwdetect::formats::{load_set, save_set};
use std::path::PathBuf;
use std::time::Instant;

fn main() -> gwdetect::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("gwdetect_simulate_dataset"));
    let config = ExperimentConfig::desk_scale();
    let exp = Experiment::new(config.clone())?;
    let w = &config.wave_sim;
    println!(
        "{} sensors, M = {} pairs, Q = {} bins to {:.0} kHz, delta = {}",
        w.sensors,
        w.pairs(),
        w.bins,
        w.f_max / 1e3,
        w.delta
    );

    let start = Instant::now();
    let data = exp.simulate_adversarial()?;
    println!(
        "simulated {} train + {} validation samples in {:.1?}",
        data.train.len(),
        data.validation.len(),
        start.elapsed()
    );

    let hash = config.hash()?;
    let fp = &exp.preprocessor.fingerprint().0;
    let train = save_set(&out.join("train"), "train", &data.train, &hash, fp, config.seeds.dataset)?;
    save_set(&out.join("validation"), "validation", &data.validation, &hash, fp, config.seeds.dataset)?;
    println!("wrote {}", out.display());

    let back = load_set(&out.join("train"))?;
    assert_eq!(back.1.len(), train.samples.len());
    let first = &back.1[0];
    println!(
        "sample {}: {}x{}, damage at {:?}, gamma range [{:.4}, {:.4}]",
        first.meta.id,
        first.q(),
        first.m(),
        first.meta.damage_location.unwrap_or_default(),
        first.meta.gammas.iter().cloned().fold(f64::INFINITY, f64::min),
        first.meta.gammas.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    println!("config hash {hash}\nfingerprint {fp}");
    Ok(())
}
