//! Desk-scale comparison of the four detectors: VAE ensembles and the
//! likelihood localizer, each trained on adversarial and on ideal data,
//! scored on one held-out drift campaign.
//!
//! cargo run --release --example compare_methods [UNDAMAGED DAMAGED]

use gwdetect::cli::{comparison_table, MethodMetrics};
use gwdetect::config::ExperimentConfig;
use gwdetect::detector::{p_fa_at, train_likelihood_baseline, DetectionReport};
use gwdetect::experiment::{Experiment, Scorer};
use gwdetect::vae::train_ensemble;
use std::time::Instant;

fn metrics(method: &str, r: &DetectionReport) -> MethodMetrics {
    MethodMetrics {
        method: method.into(),
        p_d: r.p_d,
        p_fa: r.p_fa,
        auc: r.auc,
        samples: r.samples.len(),
    }
}

fn main() -> gwdetect::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("counts are integers"));
    let undamaged = args.next().unwrap_or(40);
    let damaged = args.next().unwrap_or(40);
    let config = ExperimentConfig::desk_scale();
    let exp = Experiment::new(config.clone())?;
    let campaign = exp.held_out_campaign(undamaged, damaged, config.seeds.detection)?;
    let hash = config.hash()?;
    let bins = config.detector.histogram_bins;

    let mut reports = Vec::new();
    for (variant, data) in [("adv", exp.simulate_adversarial()?), ("ideal", exp.simulate_ideal()?)] {
        let start = Instant::now();
        let train = exp.prepare_training(&data.train)?;
        let validation = exp.prepare_training(&data.validation)?;
        let (ensemble, _) = train_ensemble(
            &config.vae,
            &train,
            &validation,
            config.detector.ensemble_size,
            config.seeds.ensemble,
            &hash,
            Vec::new(),
            |_, _, _| Ok(()),
        )?;
        let scorer = Scorer::Vae {
            ensemble: &ensemble,
            seed: config.seeds.detection,
        };
        reports.push((format!("VAE-{variant}"), campaign.detect(&exp.preprocessor, scorer, bins)?.report));
        let localizer = train_likelihood_baseline(&train, &config.detector.likelihood, config.seeds.likelihood)?;
        let scorer = Scorer::Likelihood(&localizer);
        reports.push((format!("Likelihood-{variant}"), campaign.detect(&exp.preprocessor, scorer, bins)?.report));
        println!("{variant}: trained and scored in {:.1?}", start.elapsed());
    }

    let table: Vec<MethodMetrics> = reports.iter().map(|(m, r)| metrics(m, r)).collect();
    println!("\n{}", comparison_table(&table));
    let find = |name: &str| &reports.iter().find(|(m, _)| m == name).expect("all four trained").1;
    let (vae, lik) = (find("VAE-adv"), find("Likelihood-adv"));
    if let Some(p_d) = vae.p_d {
        println!(
            "at p_d = {p_d:.3}: VAE-adv p_fa {:.3}, Likelihood-adv p_fa {:.3}",
            p_fa_at(&vae.roc, p_d),
            p_fa_at(&lik.roc, p_d)
        );
    }
    Ok(())
}
