//! ELBO decomposition of single residuals under a freshly initialized and a
//! briefly trained VAE, and the normalized statistic the detector uses.
//!
//! cargo run --release --example elbo_terms

use gwdetect::config::ExperimentConfig;
use gwdetect::detector::detection_statistic;
use gwdetect::experiment::Experiment;
use gwdetect::vae::{train_ensemble, Vae};

fn main() -> gwdetect::Result<()> {
    let mut config = ExperimentConfig::desk_scale();
    config.vae.epochs = 3;
    let exp = Experiment::new(config.clone())?;
    let data = exp.simulate_adversarial()?;
    let train = exp.prepare_training(&data.train)?;
    let validation = exp.prepare_training(&data.validation)?;
    let mc = config.vae.eval_mc_samples;

    let fresh = Vae::new(config.vae.clone(), 1)?;
    let (ensemble, _) = train_ensemble(&config.vae, &train, &validation, 1, 1, &config.hash()?, Vec::new(), |_, _, _| Ok(()))?;
    println!("{:>8} {:>10} {:>14} {:>10} {:>14} {:>10}", "sample", "model", "reconstruct", "KL", "ELBO", "tau");
    for x in validation.iter().take(4) {
        for (name, vae) in [("fresh", &fresh), ("trained", &ensemble.members[0])] {
            let e = vae.elbo(&x.sample, 0, mc)?;
            println!(
                "{:>8} {:>10} {:>14.2} {:>10.3} {:>14.2} {:>10.4}",
                x.sample.meta.id,
                name,
                e.reconstruction,
                e.kl,
                e.elbo,
                e.elbo / config.vae.elements() as f64
            );
        }
        let s = detection_statistic(&ensemble, x, 0)?;
        println!("{:>8} {:>10} tau over members {:.4}", "", "ensemble", s.tau);
    }
    Ok(())
}
