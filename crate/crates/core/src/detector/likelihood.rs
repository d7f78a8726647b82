use rand::seq::SliceRandom;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::config::LikelihoodConfig;
use crate::error::{Error, Result};
use crate::neural::{ActivationFn, Adam, LayerSpec, Sequential, Tensor};
use crate::seed;
use crate::sigproc::{Fingerprint, Prepared};
use crate::vae::{common_fingerprint, to_channels};

/// Feed-forward regressor of damage location that reports a diagonal
/// Gaussian (two means, two log-variances).
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodModel {
    pub net: Sequential,
    pub log_var_floor: f64,
    pub fingerprint: Fingerprint,
    pub elements: usize,
}

pub fn likelihood_specs(config: &LikelihoodConfig) -> Vec<LayerSpec> {
    let mut specs = Vec::new();
    specs.push(LayerSpec::flatten());
    for units in &config.hidden_units {
        specs.push(LayerSpec::dense(*units));
        specs.push(LayerSpec::activation(ActivationFn::Relu));
        specs.push(LayerSpec::batch_norm());
        specs.push(LayerSpec::dropout(config.dropout));
    }
    specs.push(LayerSpec::dense(4));
    specs
}

/// Split raw outputs into means and floored log-variances; the mask marks
/// log-variances above the floor (where the gradient passes).
fn split(out: &[f64], floor: f64) -> ([f64; 2], [f64; 2], [bool; 2]) {
    let lv = [out[2].max(floor), out[3].max(floor)];
    ([out[0], out[1]], lv, [out[2] > floor, out[3] > floor])
}

fn gaussian_nll(target: [f64; 2], mean: [f64; 2], log_var: [f64; 2]) -> f64 {
    (0..2)
        .map(|k| 0.5 * ((target[k] - mean[k]).powi(2) * (-log_var[k]).exp() + log_var[k] + (2.0 * PI).ln()))
        .sum()
}

impl LikelihoodModel {
    /// Predicted location mean and log-variance for one input.
    pub fn predict(&self, x: &Prepared) -> Result<([f64; 2], [f64; 2])> {
        self.fingerprint.ensure_matches(&x.fingerprint)?;
        let input = Tensor::new(vec![1, x.sample.m(), x.sample.q()], to_channels(&x.sample)?)?;
        let out = self.net.forward(&input)?;
        let (m, lv, _) = split(out.data(), self.log_var_floor);
        Ok((m, lv))
    }
}

fn location(p: &Prepared) -> Result<[f64; 2]> {
    p.sample
        .meta
        .damage_location
        .ok_or_else(|| Error::MissingInput(format!("sample {} carries no damage location", p.sample.meta.id)))
}

/// Train by minimizing the Gaussian negative log-likelihood of the true
/// damage locations.
pub fn train_likelihood_baseline(train: &[Prepared], config: &LikelihoodConfig, seed: u64) -> Result<LikelihoodModel> {
    let fingerprint = common_fingerprint([train])?;
    let (q, m) = (train[0].sample.q(), train[0].sample.m());
    let targets: Vec<[f64; 2]> = train.iter().map(location).collect::<Result<_>>()?;
    let inputs: Vec<Vec<f64>> = train.iter().map(|p| to_channels(&p.sample)).collect::<Result<_>>()?;
    let mut net = Sequential::build(&[m, q], &likelihood_specs(config), seed::derive(seed, "init", 0))?;
    let sizes: Vec<usize> = net.params().iter().map(|p| p.len()).collect();
    let mut adam = Adam::new(config.optimizer, &sizes);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut step = 0u64;
    for epoch in 1..=config.epochs {
        order.shuffle(&mut seed::rng(seed::derive(seed, "shuffle", epoch as u64)));
        for (b, idx) in order.chunks(config.batch_size).enumerate() {
            let diverged = || Error::Diverged { member: 0, epoch, batch: b };
            let rows: Vec<&[f64]> = idx.iter().map(|i| inputs[*i].as_slice()).collect();
            let x = Tensor::stack(&rows, &[m, q])?;
            let (out, cache) = net
                .forward_train(&x, seed::derive(seed, "step", step))
                .map_err(|_| diverged())?;
            let n = idx.len() as f64;
            let mut grad = vec![0.0; out.len()];
            for (r, i) in idx.iter().enumerate() {
                let o = &out.data()[r * 4..r * 4 + 4];
                let (mean, lv, live) = split(o, config.log_var_floor);
                let t = targets[*i];
                for k in 0..2 {
                    let prec = (-lv[k]).exp();
                    grad[r * 4 + k] = -(t[k] - mean[k]) * prec / n;
                    if live[k] {
                        grad[r * 4 + 2 + k] = 0.5 * (1.0 - (t[k] - mean[k]).powi(2) * prec) / n;
                    }
                }
                if !gaussian_nll(t, mean, lv).is_finite() {
                    return Err(diverged());
                }
            }
            let (_, grads) = net.backward(cache, &Tensor::new(out.shape().to_vec(), grad)?)?;
            adam.step(net.params_mut(), &grads.0).map_err(|_| diverged())?;
            step += 1;
        }
    }
    Ok(LikelihoodModel {
        net,
        log_var_floor: config.log_var_floor,
        fingerprint,
        elements: q * m,
    })
}

/// Log-likelihood of the model's own predicted location, per element.
pub fn likelihood_statistic(model: &LikelihoodModel, x: &Prepared) -> Result<f64> {
    let (mean, lv) = model.predict(x)?;
    Ok(-gaussian_nll(mean, mean, lv) / model.elements as f64)
}

pub fn likelihood_statistics(model: &LikelihoodModel, xs: &[Prepared]) -> Result<Vec<f64>> {
    xs.par_iter().map(|x| likelihood_statistic(model, x)).collect()
}

/// Mean Euclidean localization error over labelled samples.
pub fn localization_error(model: &LikelihoodModel, xs: &[Prepared]) -> Result<f64> {
    let mut total = 0.0;
    for x in xs {
        let (mean, _) = model.predict(x)?;
        let t = location(x)?;
        total += ((mean[0] - t[0]).powi(2) + (mean[1] - t[1]).powi(2)).sqrt();
    }
    Ok(total / xs.len().max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_clamps_and_blocks_gradient() {
        let (_, lv, live) = split(&[0.0, 0.0, -20.0, 1.0], -10.0);
        assert_eq!(lv, [-10.0, 1.0]);
        assert_eq!(live, [false, true]);
    }

    #[test]
    fn nll_at_own_mean() {
        let v = gaussian_nll([1.0, 2.0], [1.0, 2.0], [0.0, 0.0]);
        assert!((v - (2.0 * PI).ln()).abs() < 1e-12);
    }
}
