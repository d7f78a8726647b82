use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Length-`Q` transforms between a one-sided spectrum on a [`SpectralGrid`]
/// and its analytic time signal.
///
/// `analytic[n] = (2/Q) Σ_k w_k X_k e^{j2πkn/Q}` with `w_0 = ½`, `w_k = 1`
/// otherwise; [`Transform::spectrum`] is its exact inverse. The real part of
/// the analytic signal is the physical trace.
///
/// [`SpectralGrid`]: crate::grid::SpectralGrid
#[derive(Clone)]
pub struct Transform {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform").field("len", &self.len).finish()
    }
}

impl Transform {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn analytic(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(spectrum.len(), self.len);
        let scale = 2.0 / self.len as f64;
        let mut buf: Vec<Complex64> = spectrum.iter().map(|v| v * scale).collect();
        if let Some(dc) = buf.first_mut() {
            *dc *= 0.5;
        }
        self.inverse.process(&mut buf);
        buf
    }

    pub fn spectrum(&self, analytic: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(analytic.len(), self.len);
        let mut buf = analytic.to_vec();
        self.forward.process(&mut buf);
        for v in buf.iter_mut() {
            *v *= 0.5;
        }
        if let Some(dc) = buf.first_mut() {
            *dc *= 2.0;
        }
        buf
    }

    /// Real trace of a spectrum.
    pub fn trace(&self, spectrum: &[Complex64]) -> Vec<f64> {
        self.analytic(spectrum).into_iter().map(|v| v.re).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_inverts_analytic() {
        let t = Transform::new(16);
        let x: Vec<Complex64> = (0..16).map(|i| Complex64::new(i as f64, (i * i) as f64 * 0.1)).collect();
        let back = t.spectrum(&t.analytic(&x));
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn single_bin_is_a_cosine() {
        let t = Transform::new(32);
        let mut x = vec![Complex64::new(0.0, 0.0); 32];
        x[3] = Complex64::new(16.0, 0.0);
        let tr = t.trace(&x);
        for (n, v) in tr.iter().enumerate() {
            let expected = (std::f64::consts::TAU * 3.0 * n as f64 / 32.0).cos();
            assert!((v - expected).abs() < 1e-12);
        }
    }
}
