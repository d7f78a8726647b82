use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{Vae, VaeConfig};
use crate::error::{Error, Result};
use crate::neural::{Adam, Tensor};
use crate::sigproc::{Fingerprint, Prepared};
use crate::seed;

/// One row of the training log; ELBO values are per-sample means in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub member: usize,
    pub train_elbo: f64,
    pub val_elbo: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub member: usize,
    pub initial_val_elbo: f64,
    pub epochs: Vec<EpochRecord>,
    pub steps: u64,
}

impl TrainingLog {
    pub fn final_val_elbo(&self) -> f64 {
        self.epochs.last().map_or(self.initial_val_elbo, |r| r.val_elbo)
    }
}

/// Common fingerprint of a set of prepared samples.
pub fn common_fingerprint<'a>(sets: impl IntoIterator<Item = &'a [Prepared]>) -> Result<Fingerprint> {
    let mut found: Option<&Fingerprint> = None;
    for p in sets.into_iter().flatten() {
        match found {
            None => found = Some(&p.fingerprint),
            Some(f) => f.ensure_matches(&p.fingerprint)?,
        }
    }
    found
        .cloned()
        .ok_or_else(|| Error::MissingInput("no prepared samples supplied".into()))
}

/// Mean validation ELBO per sample in inference mode.
pub fn mean_elbo(vae: &Vae, samples: &[Prepared], seed: u64, mc_samples: usize) -> Result<f64> {
    if samples.is_empty() {
        return Ok(f64::NAN);
    }
    let mut total = 0.0;
    for (c, chunk) in samples.chunks(64).enumerate() {
        let refs: Vec<_> = chunk.iter().map(|p| &p.sample).collect();
        let seeds: Vec<u64> = (0..chunk.len())
            .map(|i| seed::derive(seed, "val", (c * 64 + i) as u64))
            .collect();
        let x = vae.batch_tensor(&refs)?;
        total += vae
            .elbo_batch(&x, &seeds, mc_samples)?
            .iter()
            .map(|e| e.elbo)
            .sum::<f64>();
    }
    Ok(total / samples.len() as f64)
}

/// Train one VAE by mini-batch Adam on `−ELBO`.
pub fn train_vae(
    config: &VaeConfig,
    train: &[Prepared],
    validation: &[Prepared],
    member_seed: u64,
    member: usize,
) -> Result<(Vae, TrainingLog)> {
    common_fingerprint([train, validation])?;
    if train.is_empty() {
        return Err(Error::MissingInput("empty training set".into()));
    }
    let mut vae = Vae::new(config.clone(), seed::derive(member_seed, "init", 0))?;
    let mut adam = Adam::new(config.optimizer, &vae.parameter_sizes());
    let val_seed = seed::derive(member_seed, "validation", 0);
    let val_mc = config.eval_mc_samples;
    let mut log = TrainingLog {
        member,
        initial_val_elbo: mean_elbo(&vae, validation, val_seed, val_mc)?,
        epochs: Vec::with_capacity(config.epochs),
        steps: 0,
    };
    let inputs: Vec<Vec<f64>> = train
        .iter()
        .map(|p| super::model::to_channels(&p.sample))
        .collect::<Result<_>>()?;
    let row_shape = [config.channels, config.input_length];
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut seed::rng(seed::derive(member_seed, "shuffle", epoch as u64)));
        let mut elbo_sum = 0.0;
        for (b, idx) in order.chunks(config.batch_size).enumerate() {
            let diverged = || Error::Diverged { member, epoch, batch: b };
            let rows: Vec<&[f64]> = idx.iter().map(|i| inputs[*i].as_slice()).collect();
            let x = Tensor::stack(&rows, &row_shape)?;
            let step_seed = seed::derive(member_seed, "step", log.steps);
            let (elbo, grads) = match vae.loss_and_gradients(&x, step_seed) {
                Ok(v) => v,
                Err(Error::NonFinite(_)) => return Err(diverged()),
                Err(e) => return Err(e),
            };
            if adam.step(vae.params_mut(), &grads.0).is_err() {
                return Err(diverged());
            }
            log.steps += 1;
            elbo_sum += elbo * idx.len() as f64;
        }
        let record = EpochRecord {
            epoch,
            member,
            train_elbo: elbo_sum / train.len() as f64,
            val_elbo: mean_elbo(&vae, validation, val_seed, val_mc)?,
        };
        if !record.train_elbo.is_finite() {
            return Err(Error::Diverged {
                member,
                epoch,
                batch: 0,
            });
        }
        log.epochs.push(record);
    }
    Ok((vae, log))
}

/// Independently trained VAEs sharing one configuration and preprocessing.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    pub config: VaeConfig,
    pub members: Vec<Vae>,
    pub member_seeds: Vec<u64>,
    pub fingerprint: Fingerprint,
    pub config_hash: String,
}

impl EnsembleModel {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

pub fn member_seed(base_seed: u64, member: usize) -> u64 {
    seed::derive(base_seed, "member", member as u64)
}

/// Train `n` members with derived seeds. `on_member` runs as each member
/// finishes (e.g. to persist it) and its failure aborts the build; members
/// whose index appears in `existing` are taken as given.
pub fn train_ensemble<F>(
    config: &VaeConfig,
    train: &[Prepared],
    validation: &[Prepared],
    n: usize,
    base_seed: u64,
    config_hash: &str,
    existing: Vec<(usize, Vae)>,
    on_member: F,
) -> Result<(EnsembleModel, Vec<TrainingLog>)>
where
    F: Fn(usize, &Vae, &TrainingLog) -> Result<()> + Sync,
{
    if n == 0 {
        return Err(Error::InvalidParameter("ensemble needs at least one member".into()));
    }
    let fingerprint = common_fingerprint([train, validation])?;
    let mut slots: Vec<Option<Vae>> = vec![None; n];
    for (i, vae) in existing {
        if i < n {
            slots[i] = Some(vae);
        }
    }
    let todo: Vec<usize> = (0..n).filter(|i| slots[*i].is_none()).collect();
    let trained: Vec<(usize, Vae, TrainingLog)> = todo
        .par_iter()
        .map(|&i| {
            let (vae, log) = train_vae(config, train, validation, member_seed(base_seed, i), i)?;
            on_member(i, &vae, &log)?;
            Ok((i, vae, log))
        })
        .collect::<Result<_>>()?;
    let mut logs = Vec::with_capacity(trained.len());
    for (i, vae, log) in trained {
        slots[i] = Some(vae);
        logs.push(log);
    }
    Ok((
        EnsembleModel {
            config: config.clone(),
            members: slots.into_iter().map(|s| s.expect("every slot filled")).collect(),
            member_seeds: (0..n).map(|i| member_seed(base_seed, i)).collect(),
            fingerprint,
            config_hash: config_hash.to_string(),
        },
        logs,
    ))
}
