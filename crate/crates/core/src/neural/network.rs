use std::sync::atomic::{AtomicU64, Ordering};

use super::layers::{Layer, LayerCache, LayerSpec};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::seed;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_ID.fetch_add(1, Ordering::Relaxed)
}

/// A feed-forward stack of layers with a fixed per-sample input shape.
#[derive(Debug)]
pub struct Sequential {
    layers: Vec<Layer>,
    input_shape: Vec<usize>,
    init_seed: u64,
    id: u64,
    version: u64,
}

impl Clone for Sequential {
    fn clone(&self) -> Self {
        Self {
            layers: self.layers.clone(),
            input_shape: self.input_shape.clone(),
            init_seed: self.init_seed,
            id: fresh_id(),
            version: 0,
        }
    }
}

impl PartialEq for Sequential {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers && self.input_shape == other.input_shape
    }
}

/// Activations recorded by a training forward pass. Consumed by backward.
#[derive(Debug)]
pub struct ForwardCache {
    network: u64,
    version: u64,
    batch: usize,
    layers: Vec<LayerCache>,
}

/// Parameter gradients in the order of [`Sequential::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<Vec<f64>>);

impl Gradients {
    pub fn is_zero(&self) -> bool {
        self.0.iter().flatten().all(|g| *g == 0.0)
    }

    pub fn add(&mut self, other: &Gradients) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

impl Sequential {
    pub fn build(input_shape: &[usize], specs: &[LayerSpec], init_seed: u64) -> Result<Self> {
        let mut rng = seed::rng(init_seed);
        let mut shape = input_shape.to_vec();
        let mut layers = Vec::with_capacity(specs.len());
        for (i, spec) in specs.iter().enumerate() {
            let layer = Layer::build(spec.clone(), &shape, &mut rng)
                .map_err(|e| Error::ShapeMismatch(format!("layer {i} ({}): {e}", spec.name())))?;
            shape = layer.output_shape.clone();
            layers.push(layer);
        }
        Ok(Self {
            layers,
            input_shape: input_shape.to_vec(),
            init_seed,
            id: fresh_id(),
            version: 0,
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec.clone()).collect()
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn output_shape(&self) -> &[usize] {
        self.layers.last().map_or(&self.input_shape, |l| &l.output_shape)
    }

    pub fn init_seed(&self) -> u64 {
        self.init_seed
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(Layer::parameter_count).sum()
    }

    pub fn params(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(|l| l.params.iter().map(Vec::as_slice)).collect()
    }

    /// Mutable parameter access. Invalidates every outstanding cache.
    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.version += 1;
        self.layers
            .iter_mut()
            .flat_map(|l| l.params.iter_mut().map(Vec::as_mut_slice))
            .collect()
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        self.version += 1;
        &mut self.layers
    }

    /// All parameters concatenated, for comparisons and checksums.
    pub fn flat_params(&self) -> Vec<f64> {
        self.params().concat()
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        if x.shape().len() != self.input_shape.len() + 1 || x.shape()[1..] != self.input_shape[..] {
            return Err(Error::ShapeMismatch(format!(
                "network expects [batch, {:?}], got {:?}",
                self.input_shape,
                x.shape()
            )));
        }
        Ok(())
    }

    fn check_finite(i: usize, layer: &Layer, values: &[f64]) -> Result<()> {
        match values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(k) => Err(Error::NonFinite(format!(
                "layer {i} ({}) produced {} at entry {k}",
                layer.spec.name(),
                values[k]
            ))),
        }
    }

    fn output_tensor(&self, batch: usize, data: Vec<f64>) -> Tensor {
        let mut shape = vec![batch];
        shape.extend_from_slice(self.output_shape());
        Tensor::from_raw(shape, data)
    }

    /// Inference: running batch-norm statistics, no dropout.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x)?;
        let batch = x.batch();
        let mut h = x.data().to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(&h, batch, None).0;
            Self::check_finite(i, layer, &h)?;
        }
        Ok(self.output_tensor(batch, h))
    }

    /// Training forward pass: batch statistics, active dropout drawn from
    /// `dropout_seed`, running statistics updated.
    pub fn forward_train(&mut self, x: &Tensor, dropout_seed: u64) -> Result<(Tensor, ForwardCache)> {
        self.check_input(x)?;
        let batch = x.batch();
        let mut h = x.data().to_vec();
        let mut caches = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter_mut().enumerate() {
            let mut rng = seed::rng(seed::derive(dropout_seed, "layer", i as u64));
            let (out, cache, stats) = layer.forward(&h, batch, Some(&mut rng));
            Self::check_finite(i, layer, &out)?;
            if let Some(stats) = stats {
                layer.update_running(stats);
            }
            caches.push(cache);
            h = out;
        }
        let cache = ForwardCache {
            network: self.id,
            version: self.version,
            batch,
            layers: caches,
        };
        Ok((self.output_tensor(batch, h), cache))
    }

    /// Reverse pass. Returns the input gradient and all parameter gradients.
    pub fn backward(&self, cache: ForwardCache, grad_output: &Tensor) -> Result<(Tensor, Gradients)> {
        if cache.network != self.id || cache.version != self.version {
            return Err(Error::StaleCache);
        }
        let expected = cache.batch * self.output_shape().iter().product::<usize>();
        if grad_output.len() != expected || grad_output.batch() != cache.batch {
            return Err(Error::ShapeMismatch(format!(
                "output gradient has shape {:?}, forward produced batch {} of {:?}",
                grad_output.shape(),
                cache.batch,
                self.output_shape()
            )));
        }
        let mut per_layer = Vec::with_capacity(self.layers.len());
        let mut d = grad_output.data().to_vec();
        for (i, (layer, lc)) in self.layers.iter().zip(cache.layers).enumerate().rev() {
            let (dx, grads) = layer.backward(lc, &d, cache.batch);
            Self::check_finite(i, layer, &dx)?;
            per_layer.push(grads);
            d = dx;
        }
        per_layer.reverse();
        let mut shape = vec![cache.batch];
        shape.extend_from_slice(&self.input_shape);
        Ok((Tensor::from_raw(shape, d), Gradients(per_layer.into_iter().flatten().collect())))
    }
}
