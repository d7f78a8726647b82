use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{ensure, Error, Result};
use crate::neural::{
    reparameterize_with, ActivationFn, AdamConfig, ForwardCache, Gradients, LayerSpec, Sequential, Tensor,
};
use crate::sample::SampleMatrix;
use crate::seed;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaeConfig {
    /// Samples per channel (Q).
    pub input_length: usize,
    /// Sensor-pair channels (M).
    pub channels: usize,
    pub latent_dim: usize,
    pub encoder_filters: [usize; 2],
    pub kernel_size: usize,
    pub stride: usize,
    pub hidden_units: usize,
    pub dropout: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub train_mc_samples: usize,
    pub eval_mc_samples: usize,
    pub optimizer: AdamConfig,
}

impl VaeConfig {
    /// The published architecture for a `q × m` input.
    pub fn standard(q: usize, m: usize) -> Self {
        Self {
            input_length: q,
            channels: m,
            latent_dim: 2,
            encoder_filters: [12, 24],
            kernel_size: 3,
            stride: 2,
            hidden_units: 1200,
            dropout: 0.1,
            epochs: 15,
            batch_size: 16,
            train_mc_samples: 1,
            eval_mc_samples: 8,
            optimizer: AdamConfig::default(),
        }
    }

    pub fn elements(&self) -> usize {
        self.input_length * self.channels
    }

    pub fn validate(&self) -> Result<()> {
        let reduction = self.stride * self.stride;
        ensure(self.latent_dim >= 1, || "latent_dim must be at least 1".into())?;
        ensure(self.epochs >= 1 && self.batch_size >= 1, || {
            "epochs and batch_size must be at least 1".into()
        })?;
        ensure(self.train_mc_samples >= 1 && self.eval_mc_samples >= 1, || {
            "mc sample counts must be at least 1".into()
        })?;
        ensure(self.channels >= 1 && self.hidden_units >= 1, || {
            "channels and hidden_units must be positive".into()
        })?;
        ensure(
            self.input_length >= reduction && self.input_length.is_multiple_of(reduction),
            || format!("input_length {} must be a multiple of stride² = {reduction}", self.input_length),
        )?;
        ensure((0.0..1.0).contains(&self.dropout), || "dropout must lie in [0, 1)".into())
    }

    pub fn encoder_specs(&self) -> Vec<LayerSpec> {
        let [f0, f1] = self.encoder_filters;
        let (k, s) = (self.kernel_size, self.stride);
        vec![
            LayerSpec::conv(f0, k, s),
            LayerSpec::activation(ActivationFn::Relu),
            LayerSpec::batch_norm(),
            LayerSpec::conv(f1, k, s),
            LayerSpec::activation(ActivationFn::Relu),
            LayerSpec::batch_norm(),
            LayerSpec::flatten(),
            LayerSpec::dense(self.hidden_units),
            LayerSpec::activation(ActivationFn::Sigmoid),
            LayerSpec::batch_norm(),
            LayerSpec::dropout(self.dropout),
        ]
    }

    pub fn head_specs(&self) -> Vec<LayerSpec> {
        vec![LayerSpec::dense(self.latent_dim)]
    }

    pub fn decoder_specs(&self) -> Vec<LayerSpec> {
        let reduction = self.stride * self.stride;
        let (k, s) = (self.kernel_size, self.stride);
        vec![
            LayerSpec::dense(self.hidden_units),
            LayerSpec::activation(ActivationFn::Sigmoid),
            LayerSpec::batch_norm(),
            LayerSpec::dropout(self.dropout),
            LayerSpec::dense(self.elements()),
            LayerSpec::activation(ActivationFn::Sigmoid),
            LayerSpec::batch_norm(),
            LayerSpec::dropout(self.dropout),
            LayerSpec::reshape(vec![reduction * self.channels, self.input_length / reduction]),
            LayerSpec::conv_transpose(self.encoder_filters[1], k, s),
            LayerSpec::activation(ActivationFn::Relu),
            LayerSpec::batch_norm(),
            LayerSpec::conv_transpose(self.channels, k, s),
        ]
    }
}

/// ELBO terms in nats for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElboBreakdown {
    pub reconstruction: f64,
    pub kl: f64,
    pub elbo: f64,
}

/// Closed-form KL divergence of N(μ, diag exp(log σ²)) from N(0, I).
pub fn kl_divergence(mu: &[f64], log_var: &[f64]) -> f64 {
    0.5 * mu
        .iter()
        .zip(log_var)
        .map(|(m, lv)| m * m + lv.exp() - 1.0 - lv)
        .sum::<f64>()
}

/// Unit-variance Gaussian log-likelihood of `x` under mean `mean`.
pub fn gaussian_log_likelihood(x: &[f64], mean: &[f64]) -> f64 {
    let sq: f64 = x.iter().zip(mean).map(|(a, b)| (a - b) * (a - b)).sum();
    -0.5 * sq - 0.5 * x.len() as f64 * (2.0 * PI).ln()
}

/// Pair-major channel layout `[M, Q]` from a `Q × M` sample.
pub fn to_channels(sample: &SampleMatrix) -> Result<Vec<f64>> {
    let (q, m) = (sample.q(), sample.m());
    let v = sample.time_values()?;
    let mut out = vec![0.0; q * m];
    for bin in 0..q {
        for pair in 0..m {
            out[pair * q + bin] = v[bin * m + pair];
        }
    }
    Ok(out)
}

/// Inverse of [`to_channels`].
pub fn from_channels(values: &[f64], q: usize, m: usize) -> Vec<f64> {
    let mut out = vec![0.0; q * m];
    for pair in 0..m {
        for bin in 0..q {
            out[bin * m + pair] = values[pair * q + bin];
        }
    }
    out
}

/// Variational autoencoder: convolutional encoder, two latent heads and a
/// transposed-convolution decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct Vae {
    pub config: VaeConfig,
    pub init_seed: u64,
    pub encoder: Sequential,
    pub mu_head: Sequential,
    pub log_var_head: Sequential,
    pub decoder: Sequential,
}

/// Everything a training step keeps between forward and backward.
struct StepCache {
    encoder: ForwardCache,
    mu: ForwardCache,
    log_var: ForwardCache,
    decoder: ForwardCache,
}

impl Vae {
    pub fn new(config: VaeConfig, init_seed: u64) -> Result<Self> {
        config.validate()?;
        let input = [config.channels, config.input_length];
        let encoder = Sequential::build(&input, &config.encoder_specs(), seed::derive(init_seed, "encoder", 0))?;
        let hidden = encoder.output_shape().to_vec();
        let mu_head = Sequential::build(&hidden, &config.head_specs(), seed::derive(init_seed, "mu", 0))?;
        let log_var_head = Sequential::build(&hidden, &config.head_specs(), seed::derive(init_seed, "log_var", 0))?;
        let decoder = Sequential::build(
            &[config.latent_dim],
            &config.decoder_specs(),
            seed::derive(init_seed, "decoder", 0),
        )?;
        if decoder.output_shape() != input {
            return Err(Error::ShapeMismatch(format!(
                "decoder produces {:?}, input is {input:?}",
                decoder.output_shape()
            )));
        }
        Ok(Self {
            config,
            init_seed,
            encoder,
            mu_head,
            log_var_head,
            decoder,
        })
    }

    /// Assemble from already-built parts (deserialization).
    pub fn from_parts(config: VaeConfig, init_seed: u64, nets: [Sequential; 4]) -> Result<Self> {
        let [encoder, mu_head, log_var_head, decoder] = nets;
        let vae = Self {
            config,
            init_seed,
            encoder,
            mu_head,
            log_var_head,
            decoder,
        };
        let template = Vae::new(vae.config.clone(), init_seed)?;
        for (a, b) in vae.networks().iter().zip(template.networks()) {
            if a.specs() != b.specs() || a.input_shape() != b.input_shape() {
                return Err(Error::ShapeMismatch("stored networks do not match the VAE config".into()));
            }
        }
        Ok(vae)
    }

    pub fn networks(&self) -> [&Sequential; 4] {
        [&self.encoder, &self.mu_head, &self.log_var_head, &self.decoder]
    }

    pub fn parameter_sizes(&self) -> Vec<usize> {
        self.networks()
            .iter()
            .flat_map(|n| n.params().into_iter().map(<[f64]>::len))
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = self.encoder.params_mut();
        out.extend(self.mu_head.params_mut());
        out.extend(self.log_var_head.params_mut());
        out.extend(self.decoder.params_mut());
        out
    }

    pub fn flat_params(&self) -> Vec<f64> {
        self.networks().iter().flat_map(|n| n.flat_params()).collect()
    }

    fn check_sample(&self, x: &SampleMatrix) -> Result<()> {
        if x.q() != self.config.input_length || x.m() != self.config.channels {
            return Err(Error::ShapeMismatch(format!(
                "sample is {}x{}, model expects {}x{}",
                x.q(),
                x.m(),
                self.config.input_length,
                self.config.channels
            )));
        }
        Ok(())
    }

    /// Stack samples into a `[B, M, Q]` tensor.
    pub fn batch_tensor(&self, samples: &[&SampleMatrix]) -> Result<Tensor> {
        let rows = samples
            .iter()
            .map(|s| {
                self.check_sample(s)?;
                to_channels(s)
            })
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        Tensor::stack(&refs, &[self.config.channels, self.config.input_length])
    }

    /// Posterior means and log-variances for a batch, inference mode.
    pub fn encode_batch(&self, x: &Tensor) -> Result<(Tensor, Tensor)> {
        let h = self.encoder.forward(x)?;
        Ok((self.mu_head.forward(&h)?, self.log_var_head.forward(&h)?))
    }

    pub fn encode(&self, x: &SampleMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
        let (mu, lv) = self.encode_batch(&self.batch_tensor(&[x])?)?;
        Ok((mu.into_data(), lv.into_data()))
    }

    /// Decoder mean for latent code `z`, as a `Q × M` sample.
    pub fn decode(&self, z: &[f64]) -> Result<SampleMatrix> {
        if z.len() != self.config.latent_dim {
            return Err(Error::ShapeMismatch(format!(
                "latent code has length {}, expected {}",
                z.len(),
                self.config.latent_dim
            )));
        }
        let out = self.decoder.forward(&Tensor::new(vec![1, z.len()], z.to_vec())?)?;
        let (q, m) = (self.config.input_length, self.config.channels);
        SampleMatrix::new(q, m, crate::sample::SampleValues::Time(from_channels(out.data(), q, m)), Default::default())
    }

    /// ELBO estimates for a batch in inference mode. Sample `i` draws its
    /// latent noise from `seeds[i]`, so results do not depend on batching.
    pub fn elbo_batch(&self, x: &Tensor, seeds: &[u64], mc_samples: usize) -> Result<Vec<ElboBreakdown>> {
        let batch = x.batch();
        if seeds.len() != batch {
            return Err(Error::ShapeMismatch(format!("{} seeds for a batch of {batch}", seeds.len())));
        }
        let mc = mc_samples.max(1);
        let d = self.config.latent_dim;
        let (mu, lv) = self.encode_batch(x)?;
        let mut eps = vec![0.0; mc * batch * d];
        for (i, s) in seeds.iter().enumerate() {
            let mut rng = seed::rng(*s);
            for draw in 0..mc {
                for k in 0..d {
                    eps[(draw * batch + i) * d + k] = StandardNormal.sample(&mut rng);
                }
            }
        }
        let tile = |t: &Tensor| -> Result<Tensor> {
            Tensor::new(vec![mc * batch, d], t.data().repeat(mc))
        };
        let z = reparameterize_with(&tile(&mu)?, &tile(&lv)?, eps)?;
        let recon = self.decoder.forward(&z.z)?;
        let n = self.config.elements();
        (0..batch)
            .map(|i| {
                let xi = x.row(i);
                let reconstruction = (0..mc)
                    .map(|draw| gaussian_log_likelihood(xi, &recon.data()[(draw * batch + i) * n..][..n]))
                    .sum::<f64>()
                    / mc as f64;
                let kl = kl_divergence(&mu.data()[i * d..(i + 1) * d], &lv.data()[i * d..(i + 1) * d]);
                let b = ElboBreakdown {
                    reconstruction,
                    kl,
                    elbo: reconstruction - kl,
                };
                if b.elbo.is_finite() && kl.is_finite() {
                    Ok(b)
                } else {
                    Err(Error::NonFinite(format!("ELBO for batch entry {i}: {b:?}")))
                }
            })
            .collect()
    }

    pub fn elbo(&self, x: &SampleMatrix, seed: u64, mc_samples: usize) -> Result<ElboBreakdown> {
        Ok(self.elbo_batch(&self.batch_tensor(&[x])?, &[seed], mc_samples)?[0])
    }

    /// Training-mode forward and backward for the loss `−mean ELBO`. Returns
    /// the batch-mean ELBO and the gradient of the loss for every parameter,
    /// in the order of [`Vae::params_mut`].
    pub fn loss_and_gradients(&mut self, x: &Tensor, step_seed: u64) -> Result<(f64, Gradients)> {
        let batch = x.batch();
        let mc = self.config.train_mc_samples;
        let d = self.config.latent_dim;
        let n = self.config.elements();
        let (h, enc_cache) = self.encoder.forward_train(x, seed::derive(step_seed, "encoder", 0))?;
        let (mu, mu_cache) = self.mu_head.forward_train(&h, seed::derive(step_seed, "mu", 0))?;
        let (lv, lv_cache) = self.log_var_head.forward_train(&h, seed::derive(step_seed, "log_var", 0))?;
        let mut rng = seed::rng(seed::derive(step_seed, "epsilon", 0));
        let eps: Vec<f64> = (0..mc * batch * d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mu_t = Tensor::new(vec![mc * batch, d], mu.data().repeat(mc))?;
        let lv_t = Tensor::new(vec![mc * batch, d], lv.data().repeat(mc))?;
        let z = reparameterize_with(&mu_t, &lv_t, eps)?;
        let (recon, dec_cache) = self.decoder.forward_train(&z.z, seed::derive(step_seed, "decoder", 0))?;
        let cache = StepCache {
            encoder: enc_cache,
            mu: mu_cache,
            log_var: lv_cache,
            decoder: dec_cache,
        };

        let scale = 1.0 / (batch * mc) as f64;
        let mut total = 0.0;
        let mut d_recon = vec![0.0; recon.len()];
        for draw in 0..mc {
            for i in 0..batch {
                let xi = x.row(i);
                let start = (draw * batch + i) * n;
                let ri = &recon.data()[start..start + n];
                total += gaussian_log_likelihood(xi, ri) * scale;
                for k in 0..n {
                    d_recon[start + k] = -(xi[k] - ri[k]) * scale;
                }
            }
        }
        let mut d_mu = vec![0.0; batch * d];
        let mut d_lv = vec![0.0; batch * d];
        for i in 0..batch {
            let (m, l) = (&mu.data()[i * d..(i + 1) * d], &lv.data()[i * d..(i + 1) * d]);
            total -= kl_divergence(m, l) / batch as f64;
            for k in 0..d {
                d_mu[i * d + k] = m[k] / batch as f64;
                d_lv[i * d + k] = 0.5 * (l[k].exp() - 1.0) / batch as f64;
            }
        }
        if !total.is_finite() {
            return Err(Error::NonFinite(format!("batch ELBO is {total}")));
        }

        let (dz, g_dec) = self.decoder.backward(cache.decoder, &Tensor::new(recon.shape().to_vec(), d_recon)?)?;
        let (dmu_s, dlv_s) = z.backward(&lv_t, &dz);
        for draw in 0..mc {
            for k in 0..batch * d {
                d_mu[k] += dmu_s.data()[draw * batch * d + k];
                d_lv[k] += dlv_s.data()[draw * batch * d + k];
            }
        }
        let (dh_mu, g_mu) = self.mu_head.backward(cache.mu, &Tensor::new(vec![batch, d], d_mu)?)?;
        let (dh_lv, g_lv) = self.log_var_head.backward(cache.log_var, &Tensor::new(vec![batch, d], d_lv)?)?;
        let dh: Vec<f64> = dh_mu.data().iter().zip(dh_lv.data()).map(|(a, b)| a + b).collect();
        let (_, g_enc) = self.encoder.backward(cache.encoder, &Tensor::new(h.shape().to_vec(), dh)?)?;
        let mut all = g_enc.0;
        all.extend(g_mu.0);
        all.extend(g_lv.0);
        all.extend(g_dec.0);
        Ok((total, Gradients(all)))
    }
}
