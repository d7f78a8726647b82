use num_complex::Complex64;

use super::dispersion::DispersionModel;
use crate::error::{ensure, Error, Result};

/// Modal superposition `Σ_n sqrt(1/(κ_n r)) s(ω) exp(−j κ_n r)`.
///
/// Bins where a mode has `κ = 0` contribute nothing for that mode.
pub fn propagate(source: &[Complex64], distance: f64, dispersion: &DispersionModel) -> Result<Vec<Complex64>> {
    propagate_scaled(source, distance, dispersion, 1.0)
}

/// [`propagate`] with every wavenumber multiplied by `gamma`.
pub fn propagate_scaled(
    source: &[Complex64],
    distance: f64,
    dispersion: &DispersionModel,
    gamma: f64,
) -> Result<Vec<Complex64>> {
    ensure(distance > 0.0 && distance.is_finite(), || {
        format!("propagation distance must be positive, got {distance}")
    })?;
    if source.len() != dispersion.bins() {
        return Err(Error::ShapeMismatch(format!(
            "source has {} bins, dispersion has {}",
            source.len(),
            dispersion.bins()
        )));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); source.len()];
    accumulate(&mut out, source, distance, dispersion, gamma, 1.0);
    Ok(out)
}

/// `out += weight * propagate_scaled(...)`, no validation.
pub(crate) fn accumulate(
    out: &mut [Complex64],
    source: &[Complex64],
    distance: f64,
    dispersion: &DispersionModel,
    gamma: f64,
    weight: f64,
) {
    for curve in &dispersion.kappa {
        for ((o, s), k) in out.iter_mut().zip(source).zip(curve) {
            let kr = gamma * k * distance;
            if kr > 0.0 {
                let amp = weight / kr.sqrt();
                let (sin, cos) = kr.sin_cos();
                *o += *s * Complex64::new(amp * cos, -amp * sin);
            }
        }
    }
}
