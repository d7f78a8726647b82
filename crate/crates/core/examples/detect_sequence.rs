//! Score the emulated 76-measurement drift sequence with a desk-scale
//! ensemble and print the decision per measurement.
//!
//! Reuses the ensemble written by the `train_ensemble` example when its
//! directory is passed, otherwise trains one.
//!
//! cargo run --release --example detect_sequence [ENSEMBLE_DIR]

use gwdetect::config::ExperimentConfig;
use gwdetect::experiment::{Campaign, Experiment, Scorer};
use gwdetect::formats::load_ensemble;
use gwdetect::vae::train_ensemble;

fn main() -> gwdetect::Result<()> {
    let config = ExperimentConfig::desk_scale();
    let exp = Experiment::new(config.clone())?;
    let ensemble = match std::env::args().nth(1) {
        Some(dir) => load_ensemble(dir.as_ref())?,
        None => {
            let data = exp.simulate_adversarial()?;
            let train = exp.prepare_training(&data.train)?;
            let validation = exp.prepare_training(&data.validation)?;
            train_ensemble(
                &config.vae,
                &train,
                &validation,
                config.detector.ensemble_size,
                config.seeds.ensemble,
                &config.hash()?,
                Vec::new(),
                |_, _, _| Ok(()),
            )?
            .0
        }
    };

    let campaign = Campaign::from_sequence(&exp.preprocessor, exp.sequence()?, config.seeds.detection)?;
    let scorer = Scorer::Vae {
        ensemble: &ensemble,
        seed: config.seeds.detection,
    };
    let result = campaign.detect(&exp.preprocessor, scorer, config.detector.histogram_bins)?;
    let th = &result.threshold;
    println!(
        "bank: damaged #{} tau {:.4}, undamaged #{} tau {:.4}, tau_0 {:.4}{}",
        th.damaged_id,
        th.damaged_tau,
        th.undamaged_id,
        th.undamaged_tau,
        th.tau_0,
        if th.inverted { " (inverted)" } else { "" }
    );
    println!("{:>4} {:>10} {:>10} {:>10}", "id", "label", "tau", "decision");
    for s in &result.report.samples {
        let word = |d: bool| if d { "damaged" } else { "undamaged" };
        println!("{:>4} {:>10} {:>10.4} {:>10}", s.sample_id, word(s.label), s.tau, word(s.decision));
    }
    let r = &result.report;
    println!(
        "p_d {:.3}  p_fa {:.3}  AUC {:.3}",
        r.p_d.unwrap_or(f64::NAN),
        r.p_fa.unwrap_or(f64::NAN),
        r.auc.unwrap_or(f64::NAN)
    );
    Ok(())
}
