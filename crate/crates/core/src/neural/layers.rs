use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linalg::{gemm, Mat};
use crate::error::{ensure, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    /// Zero padding so that output length is `ceil(L / stride)`.
    Same,
    Valid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationFn {
    Relu,
    Sigmoid,
    Tanh,
    Linear,
}

impl ActivationFn {
    fn apply(self, x: f64) -> f64 {
        match self {
            ActivationFn::Relu => x.max(0.0),
            ActivationFn::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            ActivationFn::Tanh => x.tanh(),
            ActivationFn::Linear => x,
        }
    }

    /// Derivative expressed through the output `y`.
    fn slope(self, y: f64) -> f64 {
        match self {
            ActivationFn::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationFn::Sigmoid => y * (1.0 - y),
            ActivationFn::Tanh => 1.0 - y * y,
            ActivationFn::Linear => 1.0,
        }
    }
}

/// One layer of a sequential model.
///
/// Shapes exclude the batch dimension: convolutions see `[channels, length]`,
/// dense layers see `[features]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv1d {
        filters: usize,
        kernel_size: usize,
        stride: usize,
        padding: Padding,
    },
    Conv1dTranspose {
        filters: usize,
        kernel_size: usize,
        stride: usize,
        padding: Padding,
    },
    Dense {
        units: usize,
    },
    BatchNorm {
        momentum: f64,
        epsilon: f64,
    },
    Dropout {
        rate: f64,
    },
    Activation {
        function: ActivationFn,
    },
    Reshape {
        shape: Vec<usize>,
    },
}

impl LayerSpec {
    pub fn conv(filters: usize, kernel_size: usize, stride: usize) -> Self {
        LayerSpec::Conv1d {
            filters,
            kernel_size,
            stride,
            padding: Padding::Same,
        }
    }

    pub fn conv_transpose(filters: usize, kernel_size: usize, stride: usize) -> Self {
        LayerSpec::Conv1dTranspose {
            filters,
            kernel_size,
            stride,
            padding: Padding::Same,
        }
    }

    pub fn dense(units: usize) -> Self {
        LayerSpec::Dense { units }
    }

    pub fn batch_norm() -> Self {
        LayerSpec::BatchNorm {
            momentum: 0.9,
            epsilon: 1e-5,
        }
    }

    pub fn dropout(rate: f64) -> Self {
        LayerSpec::Dropout { rate }
    }

    pub fn activation(function: ActivationFn) -> Self {
        LayerSpec::Activation { function }
    }

    pub fn flatten() -> Self {
        LayerSpec::Reshape { shape: vec![0] }
    }

    pub fn reshape(shape: Vec<usize>) -> Self {
        LayerSpec::Reshape { shape }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Conv1d { .. } => "conv1d",
            LayerSpec::Conv1dTranspose { .. } => "conv1d_transpose",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::BatchNorm { .. } => "batch_norm",
            LayerSpec::Dropout { .. } => "dropout",
            LayerSpec::Activation { .. } => "activation",
            LayerSpec::Reshape { .. } => "reshape",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LayerSpec::Conv1d {
                filters,
                kernel_size,
                stride,
                ..
            }
            | LayerSpec::Conv1dTranspose {
                filters,
                kernel_size,
                stride,
                ..
            } => ensure(*filters > 0 && *kernel_size > 0 && *stride > 0, || {
                format!("{}: filters, kernel size and stride must be positive", self.name())
            }),
            LayerSpec::Dense { units } => ensure(*units > 0, || "dense: units must be positive".into()),
            LayerSpec::BatchNorm { momentum, epsilon } => ensure(
                (0.0..1.0).contains(momentum) && *epsilon > 0.0,
                || "batch_norm: momentum must lie in [0, 1) and epsilon be positive".into(),
            ),
            LayerSpec::Dropout { rate } => {
                ensure((0.0..1.0).contains(rate), || "dropout: rate must lie in [0, 1)".into())
            }
            LayerSpec::Activation { .. } => Ok(()),
            LayerSpec::Reshape { shape } => ensure(!shape.is_empty(), || "reshape: empty target shape".into()),
        }
    }
}

/// Index arithmetic shared by convolution and its transpose. The "long"
/// side is the convolution input (transpose output).
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ConvGeometry {
    pub channels: usize,
    pub long: usize,
    pub short: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad_left: usize,
}

impl ConvGeometry {
    fn for_conv(channels: usize, long: usize, kernel: usize, stride: usize, padding: Padding) -> Result<Self> {
        let (short, pad_left) = match padding {
            Padding::Same => {
                let short = long.div_ceil(stride);
                let total = ((short - 1) * stride + kernel).saturating_sub(long);
                (short, total / 2)
            }
            Padding::Valid => {
                if long < kernel {
                    return Err(Error::ShapeMismatch(format!(
                        "input length {long} shorter than kernel {kernel}"
                    )));
                }
                ((long - kernel) / stride + 1, 0)
            }
        };
        Ok(Self {
            channels,
            long,
            short,
            kernel,
            stride,
            pad_left,
        })
    }

    fn for_transpose(channels: usize, short: usize, kernel: usize, stride: usize, padding: Padding) -> Result<Self> {
        let long = match padding {
            Padding::Same => short * stride,
            Padding::Valid => (short - 1) * stride + kernel,
        };
        let g = Self::for_conv(channels, long, kernel, stride, padding)?;
        debug_assert_eq!(g.short, short);
        Ok(g)
    }

    fn source(&self, t: usize, j: usize) -> Option<usize> {
        (t * self.stride + j).checked_sub(self.pad_left).filter(|i| *i < self.long)
    }

    /// `[channels, long]` → `[channels·kernel, short]`.
    pub fn im2col(&self, x: &[f64], cols: &mut [f64]) {
        let (k, n) = (self.kernel, self.short);
        for c in 0..self.channels {
            let xc = &x[c * self.long..(c + 1) * self.long];
            for j in 0..k {
                let row = &mut cols[(c * k + j) * n..(c * k + j + 1) * n];
                for (t, slot) in row.iter_mut().enumerate() {
                    *slot = self.source(t, j).map_or(0.0, |i| xc[i]);
                }
            }
        }
    }

    /// Adjoint of [`im2col`]: scatter-add columns back onto `[channels, long]`.
    pub fn col2im(&self, cols: &[f64], x: &mut [f64]) {
        let (k, n) = (self.kernel, self.short);
        for c in 0..self.channels {
            let xc = &mut x[c * self.long..(c + 1) * self.long];
            for j in 0..k {
                let row = &cols[(c * k + j) * n..(c * k + j + 1) * n];
                for (t, v) in row.iter().enumerate() {
                    if let Some(i) = self.source(t, j) {
                        xc[i] += v;
                    }
                }
            }
        }
    }
}

/// A layer with resolved shapes, parameters and running state.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub spec: LayerSpec,
    pub input_shape: Vec<usize>,
    pub output_shape: Vec<usize>,
    /// Trainable tensors: `[weight, bias]` or `[gamma, beta]`.
    pub params: Vec<Vec<f64>>,
    /// Non-trainable state: batch-norm running mean and variance.
    pub state: Vec<Vec<f64>>,
    geometry: Option<ConvGeometry>,
}

/// What backward needs from one layer's training forward pass.
#[derive(Debug)]
pub(crate) enum LayerCache {
    Columns(Vec<f64>),
    Input(Vec<f64>),
    Norm { xhat: Vec<f64>, inv_std: Vec<f64> },
    Mask(Vec<f64>),
    Output(Vec<f64>),
    None,
}

fn fan_in_uniform(rng: &mut ChaCha8Rng, n: usize, fan_in: usize) -> Vec<f64> {
    let limit = (3.0 / fan_in.max(1) as f64).sqrt();
    (0..n).map(|_| rng.random_range(-limit..limit)).collect()
}

fn shape_error(name: &str, expected: &str, got: &[usize]) -> Error {
    Error::ShapeMismatch(format!("{name} expects {expected} input, got {got:?}"))
}

impl Layer {
    /// Resolve shapes for `spec` applied to `input_shape` and draw initial weights.
    pub fn build(spec: LayerSpec, input_shape: &[usize], rng: &mut ChaCha8Rng) -> Result<Self> {
        spec.validate()?;
        let name = spec.name();
        let mut params = Vec::new();
        let mut state = Vec::new();
        let mut geometry = None;
        let output_shape = match &spec {
            LayerSpec::Conv1d {
                filters,
                kernel_size,
                stride,
                padding,
            } => {
                let [c, l] = input_shape else {
                    return Err(shape_error(name, "[channels, length]", input_shape));
                };
                let g = ConvGeometry::for_conv(*c, *l, *kernel_size, *stride, *padding)?;
                params.push(fan_in_uniform(rng, filters * c * kernel_size, c * kernel_size));
                params.push(vec![0.0; *filters]);
                geometry = Some(g);
                vec![*filters, g.short]
            }
            LayerSpec::Conv1dTranspose {
                filters,
                kernel_size,
                stride,
                padding,
            } => {
                let [c, l] = input_shape else {
                    return Err(shape_error(name, "[channels, length]", input_shape));
                };
                let g = ConvGeometry::for_transpose(*filters, *l, *kernel_size, *stride, *padding)?;
                let fan_in = c * kernel_size.div_ceil(*stride);
                params.push(fan_in_uniform(rng, c * filters * kernel_size, fan_in));
                params.push(vec![0.0; *filters]);
                geometry = Some(g);
                vec![*filters, g.long]
            }
            LayerSpec::Dense { units } => {
                let [f] = input_shape else {
                    return Err(shape_error(name, "[features]", input_shape));
                };
                params.push(fan_in_uniform(rng, f * units, *f));
                params.push(vec![0.0; *units]);
                vec![*units]
            }
            LayerSpec::BatchNorm { .. } => {
                let features = match input_shape {
                    [f] | [f, _] => *f,
                    _ => return Err(shape_error(name, "rank-1 or rank-2", input_shape)),
                };
                params.push(vec![1.0; features]);
                params.push(vec![0.0; features]);
                state.push(vec![0.0; features]);
                state.push(vec![1.0; features]);
                input_shape.to_vec()
            }
            LayerSpec::Dropout { .. } | LayerSpec::Activation { .. } => input_shape.to_vec(),
            LayerSpec::Reshape { shape } => {
                let count: usize = input_shape.iter().product();
                let target = if shape == &[0] { vec![count] } else { shape.clone() };
                if target.iter().product::<usize>() != count {
                    return Err(Error::ShapeMismatch(format!(
                        "reshape cannot map {input_shape:?} onto {target:?}"
                    )));
                }
                target
            }
        };
        Ok(Self {
            spec,
            input_shape: input_shape.to_vec(),
            output_shape,
            params,
            state,
            geometry,
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(Vec::len).sum()
    }

    fn in_len(&self) -> usize {
        self.input_shape.iter().product()
    }

    fn out_len(&self) -> usize {
        self.output_shape.iter().product()
    }

    /// Features and the per-feature inner extent for batch norm.
    fn norm_layout(&self) -> (usize, usize) {
        match self.input_shape.as_slice() {
            [f] => (*f, 1),
            [f, l] => (*f, *l),
            _ => unreachable!("validated at build"),
        }
    }

    /// Forward pass. `train` carries the dropout stream and enables batch
    /// statistics; the returned cache is `None` in inference.
    pub(crate) fn forward(
        &self,
        x: &[f64],
        batch: usize,
        train: Option<&mut ChaCha8Rng>,
    ) -> (Vec<f64>, LayerCache, Option<Vec<Vec<f64>>>) {
        let training = train.is_some();
        let (n_in, n_out) = (self.in_len(), self.out_len());
        let mut y = vec![0.0; batch * n_out];
        let mut cache = LayerCache::None;
        let mut batch_stats = None;
        match &self.spec {
            LayerSpec::Conv1d { filters, .. } => {
                let g = self.geometry.expect("conv geometry");
                let rows = g.channels * g.kernel;
                let mut cols = vec![0.0; batch * rows * g.short];
                let (w, bias) = (&self.params[0], &self.params[1]);
                for b in 0..batch {
                    let cb = &mut cols[b * rows * g.short..(b + 1) * rows * g.short];
                    g.im2col(&x[b * n_in..(b + 1) * n_in], cb);
                    let yb = &mut y[b * n_out..(b + 1) * n_out];
                    gemm(Mat::new(w, *filters, rows), Mat::new(cb, rows, g.short), 0.0, yb);
                    for (f, chunk) in yb.chunks_mut(g.short).enumerate() {
                        chunk.iter_mut().for_each(|v| *v += bias[f]);
                    }
                }
                if training {
                    cache = LayerCache::Columns(cols);
                }
            }
            LayerSpec::Conv1dTranspose { filters, .. } => {
                let g = self.geometry.expect("conv geometry");
                let c_in = self.input_shape[0];
                let rows = filters * g.kernel;
                let (w, bias) = (&self.params[0], &self.params[1]);
                let mut cols = vec![0.0; rows * g.short];
                for b in 0..batch {
                    gemm(
                        Mat::new(w, c_in, rows).t(),
                        Mat::new(&x[b * n_in..(b + 1) * n_in], c_in, g.short),
                        0.0,
                        &mut cols,
                    );
                    let yb = &mut y[b * n_out..(b + 1) * n_out];
                    g.col2im(&cols, yb);
                    for (f, chunk) in yb.chunks_mut(g.long).enumerate() {
                        chunk.iter_mut().for_each(|v| *v += bias[f]);
                    }
                }
                if training {
                    cache = LayerCache::Input(x.to_vec());
                }
            }
            LayerSpec::Dense { units } => {
                let (w, bias) = (&self.params[0], &self.params[1]);
                for row in y.chunks_mut(*units) {
                    row.copy_from_slice(bias);
                }
                gemm(Mat::new(x, batch, n_in), Mat::new(w, n_in, *units), 1.0, &mut y);
                if training {
                    cache = LayerCache::Input(x.to_vec());
                }
            }
            LayerSpec::BatchNorm { epsilon, .. } => {
                let (features, inner) = self.norm_layout();
                let (gamma, beta) = (&self.params[0], &self.params[1]);
                let at = |b: usize, f: usize, i: usize| b * n_in + f * inner + i;
                if training {
                    let count = (batch * inner) as f64;
                    let mut mean = vec![0.0; features];
                    let mut var = vec![0.0; features];
                    for f in 0..features {
                        let mut s = 0.0;
                        for b in 0..batch {
                            for i in 0..inner {
                                s += x[at(b, f, i)];
                            }
                        }
                        let m = s / count;
                        let mut ss = 0.0;
                        for b in 0..batch {
                            for i in 0..inner {
                                let d = x[at(b, f, i)] - m;
                                ss += d * d;
                            }
                        }
                        mean[f] = m;
                        var[f] = ss / count;
                    }
                    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + epsilon).sqrt()).collect();
                    let mut xhat = vec![0.0; x.len()];
                    for b in 0..batch {
                        for f in 0..features {
                            for i in 0..inner {
                                let k = at(b, f, i);
                                xhat[k] = (x[k] - mean[f]) * inv_std[f];
                                y[k] = gamma[f] * xhat[k] + beta[f];
                            }
                        }
                    }
                    cache = LayerCache::Norm { xhat, inv_std };
                    batch_stats = Some(vec![mean, var]);
                } else {
                    let (mean, var) = (&self.state[0], &self.state[1]);
                    for b in 0..batch {
                        for f in 0..features {
                            let scale = gamma[f] / (var[f] + epsilon).sqrt();
                            for i in 0..inner {
                                let k = at(b, f, i);
                                y[k] = (x[k] - mean[f]) * scale + beta[f];
                            }
                        }
                    }
                }
            }
            LayerSpec::Dropout { rate } => match train {
                Some(rng) if *rate > 0.0 => {
                    let keep = 1.0 / (1.0 - rate);
                    let mask: Vec<f64> = (0..x.len())
                        .map(|_| if rng.random::<f64>() < *rate { 0.0 } else { keep })
                        .collect();
                    for ((o, v), m) in y.iter_mut().zip(x).zip(&mask) {
                        *o = v * m;
                    }
                    cache = LayerCache::Mask(mask);
                }
                _ => y.copy_from_slice(x),
            },
            LayerSpec::Activation { function } => {
                for (o, v) in y.iter_mut().zip(x) {
                    *o = function.apply(*v);
                }
                if training {
                    cache = LayerCache::Output(y.clone());
                }
            }
            LayerSpec::Reshape { .. } => y.copy_from_slice(x),
        }
        (y, cache, batch_stats)
    }

    /// Fold batch statistics into the running averages.
    pub(crate) fn update_running(&mut self, stats: Vec<Vec<f64>>) {
        if let LayerSpec::BatchNorm { momentum, .. } = self.spec {
            for (running, batch) in self.state.iter_mut().zip(stats) {
                for (r, b) in running.iter_mut().zip(batch) {
                    *r = momentum * *r + (1.0 - momentum) * b;
                }
            }
        }
    }

    /// Returns the input gradient and one gradient per parameter tensor.
    pub(crate) fn backward(&self, cache: LayerCache, dy: &[f64], batch: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
        let (n_in, n_out) = (self.in_len(), self.out_len());
        let mut dx = vec![0.0; batch * n_in];
        let mut grads: Vec<Vec<f64>> = self.params.iter().map(|p| vec![0.0; p.len()]).collect();
        match (&self.spec, cache) {
            (LayerSpec::Conv1d { filters, .. }, LayerCache::Columns(cols)) => {
                let g = self.geometry.expect("conv geometry");
                let rows = g.channels * g.kernel;
                let w = &self.params[0];
                let mut dcols = vec![0.0; rows * g.short];
                for b in 0..batch {
                    let dyb = &dy[b * n_out..(b + 1) * n_out];
                    let cb = &cols[b * rows * g.short..(b + 1) * rows * g.short];
                    gemm(Mat::new(dyb, *filters, g.short), Mat::new(cb, rows, g.short).t(), 1.0, &mut grads[0]);
                    for (f, chunk) in dyb.chunks(g.short).enumerate() {
                        grads[1][f] += chunk.iter().sum::<f64>();
                    }
                    gemm(Mat::new(w, *filters, rows).t(), Mat::new(dyb, *filters, g.short), 0.0, &mut dcols);
                    g.col2im(&dcols, &mut dx[b * n_in..(b + 1) * n_in]);
                }
            }
            (LayerSpec::Conv1dTranspose { filters, .. }, LayerCache::Input(x)) => {
                let g = self.geometry.expect("conv geometry");
                let c_in = self.input_shape[0];
                let rows = filters * g.kernel;
                let w = &self.params[0];
                let mut dcols = vec![0.0; rows * g.short];
                for b in 0..batch {
                    let dyb = &dy[b * n_out..(b + 1) * n_out];
                    for (f, chunk) in dyb.chunks(g.long).enumerate() {
                        grads[1][f] += chunk.iter().sum::<f64>();
                    }
                    g.im2col(dyb, &mut dcols);
                    let xb = &x[b * n_in..(b + 1) * n_in];
                    gemm(Mat::new(xb, c_in, g.short), Mat::new(&dcols, rows, g.short).t(), 1.0, &mut grads[0]);
                    gemm(
                        Mat::new(w, c_in, rows),
                        Mat::new(&dcols, rows, g.short),
                        0.0,
                        &mut dx[b * n_in..(b + 1) * n_in],
                    );
                }
            }
            (LayerSpec::Dense { units }, LayerCache::Input(x)) => {
                let w = &self.params[0];
                gemm(Mat::new(&x, batch, n_in).t(), Mat::new(dy, batch, *units), 0.0, &mut grads[0]);
                for row in dy.chunks(*units) {
                    for (g, v) in grads[1].iter_mut().zip(row) {
                        *g += v;
                    }
                }
                gemm(Mat::new(dy, batch, *units), Mat::new(w, n_in, *units).t(), 0.0, &mut dx);
            }
            (LayerSpec::BatchNorm { .. }, LayerCache::Norm { xhat, inv_std }) => {
                let (features, inner) = self.norm_layout();
                let gamma = &self.params[0];
                let count = (batch * inner) as f64;
                let at = |b: usize, f: usize, i: usize| b * n_in + f * inner + i;
                for f in 0..features {
                    let (mut sum_dy, mut sum_dy_xhat) = (0.0, 0.0);
                    for b in 0..batch {
                        for i in 0..inner {
                            let k = at(b, f, i);
                            sum_dy += dy[k];
                            sum_dy_xhat += dy[k] * xhat[k];
                        }
                    }
                    grads[0][f] = sum_dy_xhat;
                    grads[1][f] = sum_dy;
                    let scale = gamma[f] * inv_std[f] / count;
                    for b in 0..batch {
                        for i in 0..inner {
                            let k = at(b, f, i);
                            dx[k] = scale * (count * dy[k] - sum_dy - xhat[k] * sum_dy_xhat);
                        }
                    }
                }
            }
            (LayerSpec::Dropout { .. }, LayerCache::Mask(mask)) => {
                for ((d, g), m) in dx.iter_mut().zip(dy).zip(&mask) {
                    *d = g * m;
                }
            }
            (LayerSpec::Activation { function }, LayerCache::Output(y)) => {
                for ((d, g), v) in dx.iter_mut().zip(dy).zip(&y) {
                    *d = g * function.slope(*v);
                }
            }
            (LayerSpec::Dropout { .. } | LayerSpec::Reshape { .. }, LayerCache::None) => dx.copy_from_slice(dy),
            (spec, _) => unreachable!("cache does not belong to a {} layer", spec.name()),
        }
        (dx, grads)
    }

    /// Replace parameters and state, e.g. after deserialization.
    pub fn load(&mut self, params: Vec<Vec<f64>>, state: Vec<Vec<f64>>) -> Result<()> {
        let fits = |a: &[Vec<f64>], b: &[Vec<f64>]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.len() == y.len());
        if !fits(&params, &self.params) || !fits(&state, &self.state) {
            return Err(Error::ShapeMismatch(format!(
                "parameter blobs do not fit {} layer with input {:?}",
                self.spec.name(),
                self.input_shape
            )));
        }
        self.params = params;
        self.state = state;
        Ok(())
    }
}
