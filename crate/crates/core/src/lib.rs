//! Simulation-trained out-of-distribution damage detection for guided-wave
//! structural health monitoring.
//!
//! The crate simulates Lamb-wave array measurements ([`wave_sim`]), turns
//! them into baseline-subtracted, standardized time-domain residuals
//! ([`sigproc`]), trains an ensemble of convolutional variational
//! autoencoders on damage-class simulations ([`vae`], built on the small
//! [`neural`] substrate), and declares damage when a measurement's normalized
//! ELBO reaches a calibrated threshold ([`detector`]). Damage-class inputs
//! are in-distribution for the ensemble and score high.

pub mod cli;
pub mod config;
pub mod detector;
pub mod error;
pub mod experiment;
pub mod formats;
pub mod grid;
pub mod neural;
pub mod sample;
pub mod seed;
pub mod sigproc;
pub mod vae;
pub mod wave_sim;

pub use error::{Error, Result};
pub use grid::SpectralGrid;
pub use sample::{Domain, SampleMatrix, SampleMeta, SampleValues};
