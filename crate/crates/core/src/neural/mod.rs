//! Minimal neural-network substrate: 1D convolutions and their transposes,
//! dense layers, batch normalization, dropout, activations, manual
//! backpropagation and Adam. Everything runs in `f64`.

pub(crate) mod linalg;
pub mod layers;
pub mod network;
pub mod optim;
pub mod sampling;
pub mod tensor;

pub use layers::{ActivationFn, Layer, LayerSpec, Padding};
pub use network::{ForwardCache, Gradients, Sequential};
pub use optim::{Adam, AdamConfig};
pub use sampling::{reparameterize, reparameterize_with, Reparameterized};
pub use tensor::Tensor;
