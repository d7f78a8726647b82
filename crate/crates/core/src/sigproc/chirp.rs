use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{ensure, Result};
use crate::grid::SpectralGrid;

/// Linear up-chirp excitation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChirpSpec {
    pub duration: f64,
    pub f_start: f64,
    pub f_end: f64,
    pub sampling_rate: f64,
}

impl ChirpSpec {
    pub fn validate(&self) -> Result<()> {
        ensure(self.duration > 0.0, || "chirp duration must be positive".into())?;
        ensure(
            self.f_start > 0.0 && self.f_start <= self.f_end && self.f_end <= self.sampling_rate / 2.0,
            || {
                format!(
                    "chirp band {}..{} Hz must satisfy 0 < f_start <= f_end <= fs/2 = {}",
                    self.f_start,
                    self.f_end,
                    self.sampling_rate / 2.0
                )
            },
        )
    }

    pub fn sample_count(&self) -> usize {
        (self.duration * self.sampling_rate).round() as usize
    }
}

/// Unit-amplitude chirp samples `cos(2π (f₀ t + ½ k t²))`, `k = (f₁ − f₀)/T`.
pub fn chirp_samples(spec: &ChirpSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let rate = (spec.f_end - spec.f_start) / spec.duration;
    Ok((0..spec.sample_count())
        .map(|n| {
            let t = n as f64 / spec.sampling_rate;
            (TAU * (spec.f_start * t + 0.5 * rate * t * t)).cos()
        })
        .collect())
}

/// Discrete-time Fourier transform of the chirp evaluated on `grid`.
pub fn chirp_spectrum(spec: &ChirpSpec, grid: &SpectralGrid) -> Result<Vec<Complex64>> {
    let samples = chirp_samples(spec)?;
    let top = grid.df() * grid.bins.saturating_sub(1) as f64;
    ensure(top <= spec.sampling_rate / 2.0, || {
        format!(
            "grid reaches {top} Hz, beyond the chirp Nyquist frequency {}",
            spec.sampling_rate / 2.0
        )
    })?;
    Ok(grid
        .frequencies()
        .into_iter()
        .map(|f| {
            let step = -TAU * f / spec.sampling_rate;
            samples
                .iter()
                .enumerate()
                .map(|(n, c)| Complex64::from_polar(*c, step * n as f64))
                .sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_scale_chirp() -> ChirpSpec {
        ChirpSpec {
            duration: 1e-4,
            f_start: 50e3,
            f_end: 500e3,
            sampling_rate: 1e6,
        }
    }

    #[test]
    fn hundred_nonzero_samples() {
        let c = chirp_samples(&paper_scale_chirp()).unwrap();
        assert_eq!(c.len(), 100);
        assert!(c.iter().all(|v| *v != 0.0));
    }

    #[test]
    fn energy_is_half_duration() {
        let spec = paper_scale_chirp();
        // Independent summation in closed form, not via chirp_samples.
        let mut energy = 0.0;
        for n in 0..100 {
            let t = n as f64 * 1e-6;
            let phase = TAU * (50e3 * t + 0.5 * 4.5e9 * t * t);
            energy += phase.cos().powi(2) * 1e-6;
        }
        let c = chirp_samples(&spec).unwrap();
        let mine: f64 = c.iter().map(|v| v * v / spec.sampling_rate).sum();
        assert!((mine - energy).abs() < 1e-15);
        // The sweep ends at Nyquist, where the double-frequency term of cos² aliases
        // towards DC, so the continuous-time value T/2 holds only approximately.
        assert!((mine / (spec.duration / 2.0) - 1.0).abs() < 0.05, "{}", mine / (spec.duration / 2.0));
    }

    #[test]
    fn pure_tone_peaks_at_its_frequency() {
        let spec = ChirpSpec {
            duration: 1e-3,
            f_start: 60e3,
            f_end: 60e3,
            sampling_rate: 1e6,
        };
        let grid = SpectralGrid::new(200, 200e3).unwrap();
        let s = chirp_spectrum(&spec, &grid).unwrap();
        let peak = (0..s.len()).max_by(|a, b| s[*a].norm().total_cmp(&s[*b].norm())).unwrap();
        assert_eq!(grid.frequencies()[peak], 60e3);
    }

    #[test]
    fn rejects_grid_beyond_nyquist() {
        let grid = SpectralGrid::new(100, 2e6).unwrap();
        assert!(chirp_spectrum(&paper_scale_chirp(), &grid).is_err());
        let ok = SpectralGrid::new(1000, 500e3).unwrap();
        assert_eq!(chirp_spectrum(&paper_scale_chirp(), &ok).unwrap().len(), 1000);
    }
}
