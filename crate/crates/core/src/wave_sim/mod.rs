//! Guided-wave array simulation: dispersion curves, modal propagation,
//! point-scatterer damage, wavenumber perturbations and emulated
//! temperature-drift campaigns.

pub mod dataset;
pub mod dispersion;
pub mod geometry;
pub mod propagation;
pub mod synth;

pub use dataset::{
    emulate_temperature_sequence, gen_dataset, split_sizes, Dataset, DatasetManifest, DatasetSpec, ManifestEntry,
    SequenceSpec,
};
pub use dispersion::{
    bulk_velocities, lamb_dispersion_on_grid, linear_dispersion, normalized_residual, solve_rayleigh_lamb, DispersionModel, LambMode,
    PlateSpec,
};
pub use geometry::{distance, ArrayGeometry, Point};
pub use propagation::{propagate, propagate_scaled};
pub use synth::{
    baseline_rms, noise_std_for_snr, perturb_wavenumber, synth_sample, DamageScenario, PathGammas, PerturbationMode,
    PerturbationSpec, Scene,
};
