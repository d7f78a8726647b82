use rand_distr::{Distribution, StandardNormal};

use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::seed;

/// A reparameterized draw `z = μ + exp(½ log σ²) ⊙ ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reparameterized {
    pub z: Tensor,
    pub epsilon: Vec<f64>,
}

pub fn reparameterize(mu: &Tensor, log_var: &Tensor, seed: u64) -> Result<Reparameterized> {
    let mut rng = seed::rng(seed);
    let epsilon: Vec<f64> = (0..mu.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    reparameterize_with(mu, log_var, epsilon)
}

pub fn reparameterize_with(mu: &Tensor, log_var: &Tensor, epsilon: Vec<f64>) -> Result<Reparameterized> {
    if mu.shape() != log_var.shape() || epsilon.len() != mu.len() {
        return Err(Error::ShapeMismatch(format!(
            "mu {:?}, log_var {:?}, epsilon {}",
            mu.shape(),
            log_var.shape(),
            epsilon.len()
        )));
    }
    let z = mu
        .data()
        .iter()
        .zip(log_var.data())
        .zip(&epsilon)
        .map(|((m, lv), e)| m + (0.5 * lv).exp() * e)
        .collect();
    Ok(Reparameterized {
        z: Tensor::new(mu.shape().to_vec(), z)?,
        epsilon,
    })
}

impl Reparameterized {
    /// Gradients with respect to μ and log σ² given ∂L/∂z.
    pub fn backward(&self, log_var: &Tensor, dz: &Tensor) -> (Tensor, Tensor) {
        let shape = dz.shape().to_vec();
        let dlv = dz
            .data()
            .iter()
            .zip(log_var.data())
            .zip(&self.epsilon)
            .map(|((g, lv), e)| g * e * 0.5 * (0.5 * lv).exp())
            .collect();
        (dz.clone(), Tensor::from_raw(shape, dlv))
    }
}
