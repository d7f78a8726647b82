use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::sigproc::Prepared;
use crate::vae::EnsembleModel;

/// Ensemble-mean ELBO normalized per matrix element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionStatistic {
    pub sample_id: u64,
    pub tau: f64,
    pub member_elbos: Vec<f64>,
}

impl DetectionStatistic {
    /// `mean(member_elbos) / elements`.
    pub fn from_elbos(sample_id: u64, member_elbos: Vec<f64>, elements: usize) -> Result<Self> {
        if member_elbos.is_empty() || elements == 0 {
            return Err(Error::InvalidParameter("statistic needs at least one member and element".into()));
        }
        let mean = member_elbos.iter().sum::<f64>() / member_elbos.len() as f64;
        Ok(Self {
            sample_id,
            tau: mean / elements as f64,
            member_elbos,
        })
    }
}

/// Detection statistic for one prepared measurement. Member `i` draws its
/// latent noise from a seed derived from `seed`, `i` and the sample id.
pub fn detection_statistic(ensemble: &EnsembleModel, x: &Prepared, seed: u64) -> Result<DetectionStatistic> {
    ensemble.fingerprint.ensure_matches(&x.fingerprint)?;
    let mc = ensemble.config.eval_mc_samples;
    let id = x.sample.meta.id;
    let elbos = ensemble
        .members
        .iter()
        .enumerate()
        .map(|(i, vae)| {
            let s = seed::derive(seed::derive(seed, "member", i as u64), "sample", id);
            vae.elbo(&x.sample, s, mc).map(|e| e.elbo)
        })
        .collect::<Result<Vec<_>>>()?;
    DetectionStatistic::from_elbos(id, elbos, ensemble.config.elements())
}

pub fn detection_statistics(ensemble: &EnsembleModel, xs: &[Prepared], seed: u64) -> Result<Vec<DetectionStatistic>> {
    xs.par_iter().map(|x| detection_statistic(ensemble, x, seed)).collect()
}
