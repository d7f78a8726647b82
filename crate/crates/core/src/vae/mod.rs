//! Variational autoencoder ensemble: architecture, ELBO, training.

pub mod model;
pub mod train;

pub use model::{from_channels, gaussian_log_likelihood, kl_divergence, to_channels, ElboBreakdown, Vae, VaeConfig};
pub use train::{
    common_fingerprint, mean_elbo, member_seed, train_ensemble, train_vae, EnsembleModel, EpochRecord, TrainingLog,
};
