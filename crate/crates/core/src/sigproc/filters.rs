use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Front-end filtering constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub center_frequency: f64,
    /// Two-sided one-sigma width: `σ_f = bandwidth / 2`.
    pub bandwidth: f64,
    pub gate_start: f64,
    pub velocity_window: f64,
    pub taper_constant: f64,
}

impl Default for FilterSpec {
    fn default() -> Self {
        Self {
            center_frequency: 37.5e3,
            bandwidth: 30e3,
            gate_start: 40e-6,
            velocity_window: 1500.0,
            taper_constant: 100e-6,
        }
    }
}

impl FilterSpec {
    pub fn validate(&self) -> Result<()> {
        ensure(
            self.center_frequency > 0.0
                && self.bandwidth > 0.0
                && self.gate_start >= 0.0
                && self.velocity_window > 0.0
                && self.taper_constant > 0.0,
            || format!("filter constants out of range: {self:?}"),
        )
    }

    pub fn sigma(&self) -> f64 {
        self.bandwidth / 2.0
    }

    pub fn gain(&self, f: f64) -> f64 {
        let s = self.sigma();
        (-(f - self.center_frequency).powi(2) / (2.0 * s * s)).exp()
    }
}

/// Matched filtering: `received(ω) · conj(chirp(ω))`.
pub fn pulse_compress(received: &[Complex64], chirp: &[Complex64]) -> Result<Vec<Complex64>> {
    if received.len() != chirp.len() {
        return Err(Error::ShapeMismatch(format!(
            "received spectrum has {} bins, chirp has {}",
            received.len(),
            chirp.len()
        )));
    }
    Ok(received.iter().zip(chirp).map(|(r, c)| r * c.conj()).collect())
}

/// Zero every sample earlier than `gate_start`.
pub fn time_gate<T: Copy + Default>(trace: &mut [T], gate_start: f64, sample_rate: f64) {
    let n = gate_samples(gate_start, sample_rate).min(trace.len());
    trace[..n].fill(T::default());
}

pub fn gate_samples(gate_start: f64, sample_rate: f64) -> usize {
    (gate_start * sample_rate - 1e-9).ceil().max(0.0) as usize
}

/// Multiply by `G(f) = exp(−(f − f_c)² / (2σ_f²))`.
pub fn gaussian_bandpass(spectrum: &mut [Complex64], frequencies: &[f64], filter: &FilterSpec) {
    for (v, f) in spectrum.iter_mut().zip(frequencies) {
        *v *= filter.gain(*f);
    }
}

/// Unit gain up to the knee `r / v_win`, then `exp(−(t − knee)/τ)`.
pub fn velocity_window_gain(t: f64, distance: f64, filter: &FilterSpec) -> f64 {
    let knee = distance / filter.velocity_window;
    if t <= knee {
        1.0
    } else {
        (-(t - knee) / filter.taper_constant).exp()
    }
}

pub fn velocity_window(trace: &mut [f64], distance: f64, sample_rate: f64, filter: &FilterSpec) -> Result<()> {
    ensure(distance > 0.0, || format!("window distance must be positive, got {distance}"))?;
    for (n, v) in trace.iter_mut().enumerate() {
        *v *= velocity_window_gain(n as f64 / sample_rate, distance, filter);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_gain_values() {
        let f = FilterSpec::default();
        assert_eq!(f.gain(37.5e3), 1.0);
        assert!((f.gain(37.5e3 + 15e3) - (-0.5f64).exp()).abs() < 1e-15);
        assert!((f.gain(37.5e3 - 15e3) - 0.606_530_659_712_633_4).abs() < 1e-12);
    }

    #[test]
    fn impulse_spectrum_becomes_the_gain_and_squares_narrow() {
        let f = FilterSpec::default();
        let freqs: Vec<f64> = (0..50).map(|i| i as f64 * 2e3).collect();
        let mut once = vec![Complex64::new(1.0, 0.0); 50];
        gaussian_bandpass(&mut once, &freqs, &f);
        for (v, fr) in once.iter().zip(&freqs) {
            assert_eq!(v.re, f.gain(*fr));
        }
        let mut twice = once.clone();
        gaussian_bandpass(&mut twice, &freqs, &f);
        let narrow = FilterSpec {
            bandwidth: f.bandwidth / 2f64.sqrt(),
            ..f
        };
        for (v, fr) in twice.iter().zip(&freqs) {
            assert!((v.re - narrow.gain(*fr)).abs() < 1e-14);
        }
    }

    #[test]
    fn gate_counts() {
        let mut ones = vec![1.0; 200];
        time_gate(&mut ones, 40e-6, 1e6);
        assert!(ones[..40].iter().all(|v| *v == 0.0));
        assert!(ones[40..].iter().all(|v| *v == 1.0));
        assert_eq!(ones.iter().sum::<f64>(), 160.0);
        let mut same = vec![2.0; 10];
        time_gate(&mut same, 0.0, 1e6);
        assert_eq!(same, vec![2.0; 10]);
    }

    #[test]
    fn velocity_window_knee() {
        let f = FilterSpec::default();
        let knee: f64 = 0.5681 / 1500.0;
        assert!((knee - 378.733e-6).abs() < 1e-9);
        assert_eq!(velocity_window_gain(knee, 0.5681, &f), 1.0);
        let after = velocity_window_gain(knee + f.taper_constant, 0.5681, &f);
        assert!((after - (-1f64).exp()).abs() < 1e-12);
        let flat = FilterSpec {
            taper_constant: f64::INFINITY,
            ..f
        };
        let mut tr = vec![1.5; 2000];
        velocity_window(&mut tr, 0.1, 1e6, &flat).unwrap();
        assert!(tr.iter().all(|v| *v == 1.5));
        assert!(velocity_window(&mut tr, 0.0, 1e6, &f).is_err());
    }

    #[test]
    fn compression_of_zero_and_mismatch() {
        let c = vec![Complex64::new(1.0, 2.0); 4];
        let z = vec![Complex64::new(0.0, 0.0); 4];
        assert!(pulse_compress(&z, &c).unwrap().iter().all(|v| v.norm() == 0.0));
        assert!(pulse_compress(&z[..3], &c).is_err());
        let auto = pulse_compress(&c, &c).unwrap();
        assert!(auto.iter().all(|v| v.im == 0.0 && v.re >= 0.0));
    }
}
