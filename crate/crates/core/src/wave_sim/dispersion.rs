//! Lamb-wave dispersion curves.
//!
//! The Rayleigh–Lamb frequency equations are evaluated in an entire
//! (pole-free) form. With `h` the half thickness, `p² = ω²/c_L² − κ²` and
//! `q² = ω²/c_T² − κ²`, the symmetric and antisymmetric families are
//!
//! ```text
//! D_S = (q² − κ²)² C(p²) S(q²) + 4κ²p² S(p²) C(q²)
//! D_A = (q² − κ²)² S(p²) C(q²) + 4κ²q² C(p²) S(q²)
//! ```
//!
//! where `C(λ) = cos(h√λ)` and `S(λ) = sin(h√λ)/(h√λ)` continue analytically
//! to `cosh`/`sinh` for negative `λ`. Both stay real on either side of the
//! bulk velocities, so no branch bookkeeping is needed while scanning for
//! sign changes.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

const YOUNG_MODULUS_AL: f64 = 69.0e9;
const POISSON_AL: f64 = 0.33;
const DENSITY_AL: f64 = 2700.0;

/// Plate geometry and bulk wave speeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateSpec {
    pub side_length: f64,
    pub thickness: f64,
    pub longitudinal_velocity: f64,
    pub shear_velocity: f64,
}

impl PlateSpec {
    pub fn new(
        side_length: f64,
        thickness: f64,
        longitudinal_velocity: f64,
        shear_velocity: f64,
    ) -> Result<Self> {
        let plate = Self {
            side_length,
            thickness,
            longitudinal_velocity,
            shear_velocity,
        };
        plate.validate()?;
        Ok(plate)
    }

    /// Aluminum plate (E = 69 GPa, ν = 0.33, ρ = 2700 kg/m³).
    pub fn aluminum(side_length: f64, thickness: f64) -> Result<Self> {
        let (cl, ct) = bulk_velocities(YOUNG_MODULUS_AL, POISSON_AL, DENSITY_AL);
        Self::new(side_length, thickness, cl, ct)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.side_length,
            self.thickness,
            self.longitudinal_velocity,
            self.shear_velocity,
        ];
        ensure(fields.iter().all(|v| v.is_finite() && *v > 0.0), || {
            format!("plate constants must be finite and positive: {self:?}")
        })?;
        ensure(self.shear_velocity < self.longitudinal_velocity, || {
            format!(
                "shear velocity {} must be below longitudinal velocity {}",
                self.shear_velocity, self.longitudinal_velocity
            )
        })
    }

    pub fn poisson_ratio(&self) -> f64 {
        let l2 = self.longitudinal_velocity.powi(2);
        let t2 = self.shear_velocity.powi(2);
        (l2 - 2.0 * t2) / (2.0 * (l2 - t2))
    }

    /// Low-frequency S0 phase velocity, `sqrt(E / (ρ (1 − ν²)))`.
    pub fn plate_velocity(&self) -> f64 {
        let ratio = self.shear_velocity / self.longitudinal_velocity;
        2.0 * self.shear_velocity * (1.0 - ratio * ratio).sqrt()
    }

    /// Rayleigh surface-wave velocity.
    pub fn rayleigh_velocity(&self) -> f64 {
        let eta2 = (self.shear_velocity / self.longitudinal_velocity).powi(2);
        let f = |xi: f64| {
            let x2 = xi * xi;
            (2.0 - x2).powi(2) - 4.0 * (1.0 - x2).sqrt() * (1.0 - x2 * eta2).sqrt()
        };
        let (mut lo, mut hi) = (0.5, 1.0 - 1e-15);
        let flo = f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) > 0.0) == (flo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi) * self.shear_velocity
    }
}

/// Bulk wave speeds `(c_L, c_T)` from Young's modulus, Poisson ratio and density.
pub fn bulk_velocities(young: f64, poisson: f64, density: f64) -> (f64, f64) {
    let cl = (young * (1.0 - poisson) / (density * (1.0 + poisson) * (1.0 - 2.0 * poisson))).sqrt();
    let ct = (young / (2.0 * density * (1.0 + poisson))).sqrt();
    (cl, ct)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LambMode {
    S0,
    A0,
}

impl LambMode {
    pub fn label(self) -> &'static str {
        match self {
            LambMode::S0 => "S0",
            LambMode::A0 => "A0",
        }
    }
}

/// Per-mode wavenumber curves on a shared angular-frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionModel {
    pub omega_grid: Vec<f64>,
    /// `kappa[mode][bin]`, rad/m.
    pub kappa: Vec<Vec<f64>>,
    pub mode_labels: Vec<String>,
}

impl DispersionModel {
    pub fn bins(&self) -> usize {
        self.omega_grid.len()
    }

    pub fn modes(&self) -> usize {
        self.kappa.len()
    }

    /// Every wavenumber multiplied by `gamma`.
    pub fn scaled(&self, gamma: f64) -> Self {
        Self {
            omega_grid: self.omega_grid.clone(),
            kappa: self
                .kappa
                .iter()
                .map(|curve| curve.iter().map(|k| k * gamma).collect())
                .collect(),
            mode_labels: self.mode_labels.clone(),
        }
    }

    /// Superpose the modes of two models defined on the same grid.
    pub fn stacked(mut self, other: DispersionModel) -> Result<Self> {
        if self.omega_grid != other.omega_grid {
            return Err(Error::ShapeMismatch(
                "cannot stack dispersion models on different grids".into(),
            ));
        }
        self.kappa.extend(other.kappa);
        self.mode_labels.extend(other.mode_labels);
        Ok(self)
    }
}

/// Nondispersive stand-in, `κ(ω) = ω / velocity`.
pub fn linear_dispersion(velocity: f64, omega_grid: &[f64]) -> Result<DispersionModel> {
    ensure(velocity > 0.0 && velocity.is_finite(), || {
        format!("velocity must be positive, got {velocity}")
    })?;
    Ok(DispersionModel {
        omega_grid: omega_grid.to_vec(),
        kappa: vec![omega_grid.iter().map(|w| w / velocity).collect()],
        mode_labels: vec!["L0".to_string()],
    })
}

/// `cos(√λ)` continued to `cosh(√−λ)`.
fn cosine_like(lambda: f64) -> f64 {
    if lambda >= 0.0 {
        lambda.sqrt().cos()
    } else {
        (-lambda).sqrt().cosh()
    }
}

/// `sin(√λ)/√λ` continued to `sinh(√−λ)/√−λ`, with the removable singularity filled.
fn sine_like(lambda: f64) -> f64 {
    if lambda.abs() < 1e-8 {
        1.0 - lambda / 6.0
    } else if lambda > 0.0 {
        let s = lambda.sqrt();
        s.sin() / s
    } else {
        let s = (-lambda).sqrt();
        s.sinh() / s
    }
}

/// Characteristic function value and the sum of its term magnitudes, in
/// half-thickness units. Their ratio is the normalized residual.
fn characteristic(plate: &PlateSpec, mode: LambMode, omega: f64, kappa: f64) -> (f64, f64) {
    let h = 0.5 * plate.thickness;
    let k2 = (kappa * h).powi(2);
    let p2 = (omega * h / plate.longitudinal_velocity).powi(2) - k2;
    let q2 = (omega * h / plate.shear_velocity).powi(2) - k2;
    let lead = (q2 - k2).powi(2);
    let (t1, t2) = match mode {
        LambMode::S0 => (
            lead * cosine_like(p2) * sine_like(q2),
            4.0 * k2 * p2 * sine_like(p2) * cosine_like(q2),
        ),
        LambMode::A0 => (
            lead * sine_like(p2) * cosine_like(q2),
            4.0 * k2 * q2 * cosine_like(p2) * sine_like(q2),
        ),
    };
    (t1 + t2, t1.abs() + t2.abs())
}

/// Normalized Rayleigh–Lamb residual `|D| / (|t₁| + |t₂|)` at `(ω, κ)`.
pub fn normalized_residual(plate: &PlateSpec, mode: LambMode, omega: f64, kappa: f64) -> f64 {
    let (value, scale) = characteristic(plate, mode, omega, kappa);
    if scale == 0.0 {
        0.0
    } else {
        value.abs() / scale
    }
}

const SCAN_POINTS: usize = 600;
const BISECTION_STEPS: usize = 200;

/// Bisect for the phase velocity of `mode` at `omega` inside `[lo, hi]`.
fn bisect_velocity(plate: &PlateSpec, mode: LambMode, omega: f64, mut lo: f64, mut hi: f64) -> f64 {
    let f = |c: f64| characteristic(plate, mode, omega, omega / c).0;
    let mut flo = f(lo);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    // Pick the endpoint with the smaller residual.
    let (rl, rh) = (
        normalized_residual(plate, mode, omega, omega / lo),
        normalized_residual(plate, mode, omega, omega / hi),
    );
    if rl <= rh {
        lo
    } else {
        hi
    }
}

/// All phase-velocity roots of `mode` at `omega` found by a geometric scan of `[c_lo, c_hi]`.
fn velocity_roots(plate: &PlateSpec, mode: LambMode, omega: f64, c_lo: f64, c_hi: f64) -> Vec<f64> {
    let ratio = (c_hi / c_lo).powf(1.0 / (SCAN_POINTS - 1) as f64);
    let f = |c: f64| characteristic(plate, mode, omega, omega / c).0;
    let mut roots = Vec::new();
    let mut c_prev = c_lo;
    let mut f_prev = f(c_prev);
    for i in 1..SCAN_POINTS {
        let c = if i == SCAN_POINTS - 1 { c_hi } else { c_lo * ratio.powi(i as i32) };
        let fc = f(c);
        if f_prev == 0.0 {
            roots.push(c_prev);
        } else if (fc > 0.0) != (f_prev > 0.0) && fc != 0.0 {
            roots.push(bisect_velocity(plate, mode, omega, c_prev, c));
        }
        c_prev = c;
        f_prev = fc;
    }
    roots
}

/// Velocity search interval for a mode. A0 lives below the Rayleigh speed;
/// S0 between the Rayleigh speed and the longitudinal speed.
fn search_interval(plate: &PlateSpec, mode: LambMode) -> (f64, f64) {
    let cr = plate.rayleigh_velocity();
    match mode {
        LambMode::A0 => (1e-4 * plate.shear_velocity, cr * (1.0 - 1e-12)),
        LambMode::S0 => (cr * (1.0 + 1e-12), plate.longitudinal_velocity * (1.0 - 1e-12)),
    }
}

/// Track the requested fundamental modes over `omega_grid`.
///
/// Roots are located by a phase-velocity scan and bisection at every bin;
/// the first bin takes the slowest A0 root and the S0 root nearest the plate
/// velocity, later bins take the root nearest the previous one. Fundamental
/// phase velocities change no faster than `ω` itself in log terms, so a
/// larger jump between neighbours means the track was lost.
pub fn solve_rayleigh_lamb(
    plate: &PlateSpec,
    omega_grid: &[f64],
    modes: &[LambMode],
) -> Result<DispersionModel> {
    plate.validate()?;
    ensure(omega_grid.iter().all(|w| *w > 0.0 && w.is_finite()), || {
        "omega grid must be positive".into()
    })?;
    ensure(omega_grid.windows(2).all(|w| w[1] > w[0]), || {
        "omega grid must be strictly ascending".into()
    })?;

    let mut kappa = Vec::with_capacity(modes.len());
    for &mode in modes {
        let (c_lo, c_hi) = search_interval(plate, mode);
        let mut curve = Vec::with_capacity(omega_grid.len());
        let mut previous: Option<(f64, f64)> = None;
        for &omega in omega_grid {
            let roots = velocity_roots(plate, mode, omega, c_lo, c_hi);
            let target = match (previous, mode) {
                (Some((_, c)), _) => c,
                (None, LambMode::A0) => 0.0,
                (None, LambMode::S0) => plate.plate_velocity(),
            };
            let chosen = roots
                .iter()
                .copied()
                .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
                .ok_or_else(|| Error::NoRoot {
                    mode: mode.label().into(),
                    omega,
                })?;
            if let Some((w_prev, c)) = previous {
                if (chosen / c).ln().abs() > (omega / w_prev).ln() + 0.02 {
                    return Err(Error::NoRoot {
                        mode: format!("{} (track lost)", mode.label()),
                        omega,
                    });
                }
            }
            previous = Some((omega, chosen));
            curve.push(omega / chosen);
        }
        kappa.push(curve);
    }
    Ok(DispersionModel {
        omega_grid: omega_grid.to_vec(),
        kappa,
        mode_labels: modes.iter().map(|m| m.label().to_string()).collect(),
    })
}

/// Rayleigh–Lamb curves on a grid that may start at ω = 0; the DC bin gets κ = 0.
pub fn lamb_dispersion_on_grid(
    plate: &PlateSpec,
    omega_grid: &[f64],
    modes: &[LambMode],
) -> Result<DispersionModel> {
    let dc = omega_grid.iter().take_while(|w| **w == 0.0).count();
    let mut model = solve_rayleigh_lamb(plate, &omega_grid[dc..], modes)?;
    for curve in &mut model.kappa {
        let mut padded = vec![0.0; dc];
        padded.append(curve);
        *curve = padded;
    }
    model.omega_grid = omega_grid.to_vec();
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn plate() -> PlateSpec {
        PlateSpec::aluminum(1.22, 3e-3).unwrap()
    }

    #[test]
    fn empty_grid_gives_empty_model() {
        let m = solve_rayleigh_lamb(&plate(), &[], &[LambMode::S0, LambMode::A0]).unwrap();
        assert_eq!(m.bins(), 0);
        assert_eq!(m.modes(), 2);
        assert!(m.kappa.iter().all(|c| c.is_empty()));
    }

    #[test]
    fn linear_dispersion_values() {
        let w = TAU * 100e3;
        let m = linear_dispersion(3000.0, &[0.0, w]).unwrap();
        assert_eq!(m.kappa[0][0], 0.0);
        assert!((m.kappa[0][1] - 209.439_510_239_319_55).abs() < 1e-9);
        let m = linear_dispersion(1500.0, &[TAU * 37.5e3]).unwrap();
        assert!((m.kappa[0][0] - 157.079_632_679_489_66).abs() < 1e-9);
        assert!(linear_dispersion(0.0, &[1.0]).is_err());
    }

    #[test]
    fn rejects_bad_plates_and_grids() {
        assert!(PlateSpec::new(1.0, 1e-3, 3000.0, 6000.0).is_err());
        assert!(PlateSpec::new(1.0, -1e-3, 6000.0, 3000.0).is_err());
        assert!(solve_rayleigh_lamb(&plate(), &[2.0, 1.0], &[LambMode::A0]).is_err());
        assert!(solve_rayleigh_lamb(&plate(), &[0.0, 1.0], &[LambMode::A0]).is_err());
    }

    #[test]
    fn aluminum_reference_speeds() {
        let p = plate();
        assert!((p.poisson_ratio() - 0.33).abs() < 1e-12);
        assert!((p.plate_velocity() - (69e9 / (2700.0 * (1.0 - 0.33f64.powi(2)))).sqrt()).abs() < 1e-6);
        let cr = p.rayleigh_velocity();
        assert!(cr > 0.9 * p.shear_velocity && cr < p.shear_velocity);
    }

    #[test]
    fn curves_are_increasing_and_residual_small() {
        let p = plate();
        let omegas: Vec<f64> = (1..=80).map(|i| TAU * 2.5e3 * i as f64).collect();
        let m = solve_rayleigh_lamb(&p, &omegas, &[LambMode::S0, LambMode::A0]).unwrap();
        for (curve, label) in m.kappa.iter().zip(&m.mode_labels) {
            assert!(curve.windows(2).all(|w| w[1] >= w[0]), "{label} not monotone");
        }
        for (mi, mode) in [LambMode::S0, LambMode::A0].into_iter().enumerate() {
            for (w, k) in omegas.iter().zip(&m.kappa[mi]) {
                assert!(normalized_residual(&p, mode, *w, *k) < 1e-9);
            }
        }
        // A0 is the slower mode everywhere.
        assert!(m.kappa[1].iter().zip(&m.kappa[0]).all(|(a, s)| a > s));
    }

    #[test]
    fn grid_with_dc_bin() {
        let omegas: Vec<f64> = (0..5).map(|i| TAU * 10e3 * i as f64).collect();
        let m = lamb_dispersion_on_grid(&plate(), &omegas, &[LambMode::A0]).unwrap();
        assert_eq!(m.kappa[0][0], 0.0);
        assert!(m.kappa[0][1] > 0.0);
    }
}
