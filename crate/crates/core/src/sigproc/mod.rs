//! Preprocessing: pulse compression, gating, Gaussian band-pass filtering,
//! velocity windowing, stretch-compensated baseline subtraction and
//! standardization.

pub mod calibration;
pub mod chirp;
pub mod filters;
pub mod pipeline;
pub mod standardize;
pub mod stretch;
pub mod transform;

pub use calibration::{
    baseline_subtract, energy, measurement_correlation, select_calibration, subtract_plain, subtract_with_reference,
    CalibrationBank, CalibrationChoice,
};
pub use chirp::{chirp_samples, chirp_spectrum, ChirpSpec};
pub use filters::{gaussian_bandpass, pulse_compress, time_gate, velocity_window, velocity_window_gain, FilterSpec};
pub use pipeline::{canonical_hash, Fingerprint, PreprocessConfig, Prepared, Preprocessor};
pub use standardize::{standardize, standardize_values, Scale};
pub use stretch::{pearson, resample, scale_stretch, StretchSearch, Stretched};
pub use transform::Transform;
