use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{ensure, Result};

/// Uniform frequency grid `f_k = k * f_max / bins`, `k = 0..bins`.
///
/// The matching time axis has `bins` samples spaced `1 / f_max` apart, so a
/// spectrum on this grid and its trace are related by a length-`bins` DFT.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    pub bins: usize,
    pub f_max: f64,
}

impl SpectralGrid {
    pub fn new(bins: usize, f_max: f64) -> Result<Self> {
        ensure(f_max > 0.0 && f_max.is_finite(), || {
            format!("grid f_max must be positive, got {f_max}")
        })?;
        Ok(Self { bins, f_max })
    }

    pub fn df(&self) -> f64 {
        self.f_max / self.bins as f64
    }

    /// Time-sample spacing of the associated trace.
    pub fn dt(&self) -> f64 {
        1.0 / self.f_max
    }

    pub fn sample_rate(&self) -> f64 {
        self.f_max
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.bins).map(|k| k as f64 * self.df()).collect()
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.frequencies().into_iter().map(|f| TAU * f).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.bins).map(|n| n as f64 * self.dt()).collect()
    }
}
