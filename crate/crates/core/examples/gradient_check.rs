//! Central finite differences against backpropagation for the full ELBO
//! objective of a small VAE.
//!
//! cargo run --release --example gradient_check

use gwdetect::neural::Tensor;
use gwdetect::vae::{Vae, VaeConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> gwdetect::Result<()> {
    let config = VaeConfig {
        encoder_filters: [3, 4],
        hidden_units: 8,
        ..VaeConfig::standard(16, 3)
    };
    let mut vae = Vae::new(config.clone(), 3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let data: Vec<f64> = (0..4 * config.elements()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x = Tensor::new(vec![4, config.channels, config.input_length], data)?;
    // A fixed step seed freezes dropout masks and latent draws.
    let step_seed = 17;
    let (_, grads) = vae.loss_and_gradients(&x, step_seed)?;

    let h = 1e-5;
    let sizes = vae.parameter_sizes();
    let mut worst: f64 = 0.0;
    println!("{:>6} {:>8} {:>10}", "tensor", "entries", "max rel");
    for (t, size) in sizes.iter().enumerate() {
        let mut tensor_worst: f64 = 0.0;
        for k in 0..*size {
            let orig = vae.params_mut()[t][k];
            vae.params_mut()[t][k] = orig + h;
            let up = -vae.loss_and_gradients(&x, step_seed)?.0;
            vae.params_mut()[t][k] = orig - h;
            let down = -vae.loss_and_gradients(&x, step_seed)?.0;
            vae.params_mut()[t][k] = orig;
            let numeric = (up - down) / (2.0 * h);
            let analytic = grads.0[t][k];
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-5);
            tensor_worst = tensor_worst.max(rel);
        }
        println!("{t:>6} {size:>8} {tensor_worst:>10.2e}");
        worst = worst.max(tensor_worst);
    }
    println!("{} parameters, worst relative error {worst:.2e}", sizes.iter().sum::<usize>());
    Ok(())
}
