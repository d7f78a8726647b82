//! Helpers shared by the integration tests: finite-difference gradient
//! suites and directory snapshots.

#![allow(dead_code)]

use gwdetect::neural::{ActivationFn, LayerSpec, Padding, Sequential, Tensor};
use gwdetect::vae::{Vae, VaeConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;
/// Gradients smaller than this are compared absolutely: finite-difference
/// round-off is about 1e-16 · |L| / STEP.
pub const FLOOR: f64 = 1e-5;

pub fn rel_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(FLOOR)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// L = ⟨r, f(x)⟩ for a fixed random projection r.
fn projected_loss(net: &mut Sequential, x: &Tensor, r: &[f64], dropout_seed: u64) -> f64 {
    let (y, _) = net.forward_train(x, dropout_seed).unwrap();
    y.data().iter().zip(r).map(|(a, b)| a * b).sum()
}

pub fn check_network(specs: &[LayerSpec], input: &[usize], batch: usize, trial: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
    let mut net = Sequential::build(input, specs, trial).unwrap();
    // Non-trivial batch-norm affine parameters.
    for p in net.params_mut() {
        if p.iter().all(|v| *v == 0.0 || *v == 1.0) {
            for v in p.iter_mut() {
                *v += rng.random_range(-0.5..0.5);
            }
        }
    }
    let mut shape = vec![batch];
    shape.extend_from_slice(input);
    let x = Tensor::new(shape, random_vec(&mut rng, batch * input.iter().product::<usize>())).unwrap();
    let out_len = batch * net.output_shape().iter().product::<usize>();
    let r = random_vec(&mut rng, out_len);
    let dropout_seed = 77 + trial;

    let (y, cache) = net.forward_train(&x, dropout_seed).unwrap();
    let dy = Tensor::new(y.shape().to_vec(), r.clone()).unwrap();
    let (dx, grads) = net.backward(cache, &dy).unwrap();

    let mut worst: f64 = 0.0;
    let sizes: Vec<usize> = net.params().iter().map(|p| p.len()).collect();
    for (t, size) in sizes.iter().enumerate() {
        for k in 0..*size {
            let orig = net.params()[t][k];
            net.params_mut()[t][k] = orig + STEP;
            let up = projected_loss(&mut net, &x, &r, dropout_seed);
            net.params_mut()[t][k] = orig - STEP;
            let down = projected_loss(&mut net, &x, &r, dropout_seed);
            net.params_mut()[t][k] = orig;
            worst = worst.max(rel_error(grads.0[t][k], (up - down) / (2.0 * STEP)));
        }
    }
    for k in 0..x.len() {
        let mut xp = x.data().to_vec();
        xp[k] += STEP;
        let up = projected_loss(&mut net, &Tensor::new(x.shape().to_vec(), xp.clone()).unwrap(), &r, dropout_seed);
        xp[k] -= 2.0 * STEP;
        let down = projected_loss(&mut net, &Tensor::new(x.shape().to_vec(), xp).unwrap(), &r, dropout_seed);
        worst = worst.max(rel_error(dx.data()[k], (up - down) / (2.0 * STEP)));
    }
    worst
}

pub fn random_conv(rng: &mut ChaCha8Rng, transpose: bool) -> LayerSpec {
    let filters = rng.random_range(1..4);
    let kernel_size = rng.random_range(1..5);
    let stride = rng.random_range(1..4);
    let padding = if rng.random_bool(0.5) { Padding::Same } else { Padding::Valid };
    if transpose {
        LayerSpec::Conv1dTranspose {
            filters,
            kernel_size,
            stride,
            padding,
        }
    } else {
        LayerSpec::Conv1d {
            filters,
            kernel_size,
            stride,
            padding,
        }
    }
}


/// Every layer kind alone and in a stack, over `trials` randomized shapes.
/// Returns the number of networks checked and the worst relative error.
pub fn layer_suite(trials: u64) -> (usize, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for trial in 0..trials {
        let channels = rng.random_range(1..4);
        let length = rng.random_range(5..12);
        let batch = rng.random_range(2..5);
        let act = [ActivationFn::Relu, ActivationFn::Sigmoid, ActivationFn::Tanh, ActivationFn::Linear][trial as usize % 4];
        let cases: Vec<(Vec<LayerSpec>, Vec<usize>)> = vec![
            (vec![random_conv(&mut rng, false)], vec![channels, length]),
            (vec![random_conv(&mut rng, true)], vec![channels, length]),
            (vec![LayerSpec::dense(rng.random_range(1..6))], vec![length]),
            (vec![LayerSpec::batch_norm()], vec![channels, length]),
            (vec![LayerSpec::batch_norm()], vec![length]),
            (vec![LayerSpec::dropout(0.3)], vec![length]),
            (vec![LayerSpec::activation(act)], vec![channels, length]),
            (
                vec![
                    random_conv(&mut rng, false),
                    LayerSpec::activation(act),
                    LayerSpec::batch_norm(),
                    LayerSpec::flatten(),
                    LayerSpec::dense(3),
                    LayerSpec::dropout(0.2),
                ],
                vec![channels, length + 4],
            ),
        ];
        for (specs, input) in cases {
            let e = check_network(&specs, &input, batch, trial);
            assert!(e.is_finite(), "trial {trial} {specs:?} on {input:?}: non-finite error");
            worst = worst.max(e);
            checked += 1;
        }
    }
    (checked, worst)
}

pub fn tiny_config() -> VaeConfig {
    VaeConfig {
        encoder_filters: [3, 4],
        hidden_units: 6,
        ..VaeConfig::standard(16, 4)
    }
}

/// Full ELBO objective of the tiny VAE, every parameter. Returns the number
/// of parameters checked and the worst relative error.
pub fn elbo_suite() -> (usize, f64) {
    let config = tiny_config();
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut vae = Vae::new(config.clone(), 9).unwrap();
    let x = Tensor::new(vec![4, 4, 16], random_vec(&mut rng, 4 * config.elements())).unwrap();
    let step_seed = 123;
    let (_, grads) = vae.loss_and_gradients(&x, step_seed).unwrap();
    let loss = |vae: &mut Vae| -vae.loss_and_gradients(&x, step_seed).unwrap().0;
    let sizes = vae.parameter_sizes();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (t, size) in sizes.iter().enumerate() {
        for k in 0..*size {
            let orig = vae.params_mut()[t][k];
            vae.params_mut()[t][k] = orig + STEP;
            let up = loss(&mut vae);
            vae.params_mut()[t][k] = orig - STEP;
            let down = loss(&mut vae);
            vae.params_mut()[t][k] = orig;
            worst = worst.max(rel_error(grads.0[t][k], (up - down) / (2.0 * STEP)));
            checked += 1;
        }
    }
    (checked, worst)
}

/// Every file under `dir` keyed by relative path.
pub fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}
