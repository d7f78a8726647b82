use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use super::dispersion::DispersionModel;
use super::geometry::{distance, ArrayGeometry, Point};
use super::propagation::accumulate;
use crate::error::{ensure, Error, Result};
use crate::sample::{SampleMatrix, SampleMeta};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DamageScenario {
    pub present: bool,
    pub location: Point,
    pub reflection_coefficient: f64,
}

impl DamageScenario {
    pub fn undamaged() -> Self {
        Self {
            present: false,
            location: [0.0, 0.0],
            reflection_coefficient: 1.0,
        }
    }

    pub fn at(location: Point, reflection_coefficient: f64) -> Self {
        Self {
            present: true,
            location,
            reflection_coefficient,
        }
    }

    pub fn validate(&self, side_length: f64) -> Result<()> {
        ensure(self.reflection_coefficient > 0.0, || {
            "reflection coefficient must be positive".into()
        })?;
        if self.present {
            let [x, y] = self.location;
            ensure(
                (0.0..=side_length).contains(&x) && (0.0..=side_length).contains(&y),
                || format!("damage location {:?} lies outside the plate", self.location),
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationMode {
    None,
    PerSample,
    PerPath,
}

/// Multiplicative wavenumber perturbation `κ' = γ κ`, `γ ~ U[1−δ, 1+δ]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub delta: f64,
    pub mode: PerturbationMode,
}

impl PerturbationSpec {
    pub fn none() -> Self {
        Self {
            delta: 0.0,
            mode: PerturbationMode::None,
        }
    }

    pub fn per_sample(delta: f64) -> Self {
        Self {
            delta,
            mode: PerturbationMode::PerSample,
        }
    }

    pub fn per_path(delta: f64) -> Self {
        Self {
            delta,
            mode: PerturbationMode::PerPath,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure((0.0..1.0).contains(&self.delta), || {
            format!("perturbation delta must lie in [0, 1), got {}", self.delta)
        })
    }

    pub(crate) fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.delta == 0.0 || self.mode == PerturbationMode::None {
            1.0
        } else {
            Uniform::new_inclusive(1.0 - self.delta, 1.0 + self.delta)
                .expect("delta validated")
                .sample(rng)
        }
    }
}

/// Scale factors for every propagation path of one sample.
///
/// Paths are keyed by unordered sensor pair: index `2u` is the direct path and
/// `2u + 1` the scattered path of unordered pair `u`, so `(t, r)` and `(r, t)`
/// always share a factor.
#[derive(Debug, Clone, PartialEq)]
pub enum PathGammas {
    Shared(f64),
    PerPath(Vec<f64>),
}

impl PathGammas {
    pub fn direct(&self, unordered: usize) -> f64 {
        match self {
            PathGammas::Shared(g) => *g,
            PathGammas::PerPath(v) => v[2 * unordered],
        }
    }

    pub fn scattered(&self, unordered: usize) -> f64 {
        match self {
            PathGammas::Shared(g) => *g,
            PathGammas::PerPath(v) => v[2 * unordered + 1],
        }
    }

    pub fn recorded(&self) -> Vec<f64> {
        match self {
            PathGammas::Shared(g) => vec![*g],
            PathGammas::PerPath(v) => v.clone(),
        }
    }

    pub(crate) fn draw<R: Rng>(spec: &PerturbationSpec, unordered_pairs: usize, rng: &mut R) -> Self {
        match spec.mode {
            PerturbationMode::PerPath => {
                PathGammas::PerPath((0..2 * unordered_pairs).map(|_| spec.draw(rng)).collect())
            }
            _ => PathGammas::Shared(spec.draw(rng)),
        }
    }
}

/// Draw a sample-wide γ and apply it to every wavenumber.
///
/// In per-path mode use [`PathGammas`] through [`synth_sample`]; this entry
/// point returns the model scaled by the first draw.
pub fn perturb_wavenumber(
    dispersion: &DispersionModel,
    spec: &PerturbationSpec,
    rng_seed: u64,
) -> Result<(DispersionModel, f64)> {
    spec.validate()?;
    let mut rng = seed::rng(rng_seed);
    let gamma = spec.draw(&mut rng);
    if gamma == 1.0 {
        return Ok((dispersion.clone(), gamma));
    }
    Ok((dispersion.scaled(gamma), gamma))
}

/// Everything a sample needs besides its own scenario and seed.
#[derive(Debug, Clone)]
pub struct Scene {
    pub geometry: ArrayGeometry,
    pub dispersion: DispersionModel,
    pub source_spectrum: Vec<Complex64>,
    pub side_length: f64,
}

impl Scene {
    pub fn bins(&self) -> usize {
        self.dispersion.bins()
    }
}

/// One frequency-domain array measurement per `x = x_b + α x_s + noise`.
pub fn synth_sample(
    scene: &Scene,
    scenario: &DamageScenario,
    perturbation: &PerturbationSpec,
    noise_std: f64,
    rng_seed: u64,
) -> Result<SampleMatrix> {
    perturbation.validate()?;
    let mut rng = seed::rng(rng_seed);
    let gammas = PathGammas::draw(perturbation, scene.geometry.unordered_pairs(), &mut rng);
    synth_with_gammas(scene, scenario, &gammas, noise_std, &mut rng, rng_seed)
}

pub(crate) fn synth_with_gammas<R: Rng>(
    scene: &Scene,
    scenario: &DamageScenario,
    gammas: &PathGammas,
    noise_std: f64,
    rng: &mut R,
    rng_seed: u64,
) -> Result<SampleMatrix> {
    scenario.validate(scene.side_length)?;
    ensure(noise_std >= 0.0 && noise_std.is_finite(), || {
        format!("noise_std must be non-negative, got {noise_std}")
    })?;
    if scene.source_spectrum.len() != scene.bins() {
        return Err(Error::ShapeMismatch("source spectrum length differs from grid".into()));
    }
    let geometry = &scene.geometry;
    if scenario.present {
        for (i, p) in geometry.sensor_positions.iter().enumerate() {
            ensure(distance(*p, scenario.location) > 1e-9, || {
                format!("damage at {:?} coincides with sensor {i}", scenario.location)
            })?;
        }
    }
    let noise = Normal::new(0.0, noise_std / 2f64.sqrt()).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let q = scene.bins();
    let mut columns = Vec::with_capacity(geometry.pairs());
    for (pair, &(t, r)) in geometry.pair_index.iter().enumerate() {
        let u = geometry.unordered_index(t, r);
        let mut col = vec![Complex64::new(0.0, 0.0); q];
        let direct = geometry.pair_distance(pair);
        ensure(direct > 0.0, || format!("sensors {t} and {r} coincide"))?;
        accumulate(&mut col, &scene.source_spectrum, direct, &scene.dispersion, gammas.direct(u), 1.0);
        if scenario.present {
            let scattered = geometry.scatter_distance(pair, scenario.location);
            let mut xs = vec![Complex64::new(0.0, 0.0); q];
            accumulate(&mut xs, &scene.source_spectrum, scattered, &scene.dispersion, gammas.scattered(u), 1.0);
            for (c, s) in col.iter_mut().zip(&xs) {
                *c += scenario.reflection_coefficient * s;
            }
        }
        if noise_std > 0.0 {
            for c in col.iter_mut() {
                *c += Complex64::new(noise.sample(rng), noise.sample(rng));
            }
        }
        columns.push(col);
    }
    let meta = SampleMeta {
        id: 0,
        seed: rng_seed,
        gammas: gammas.recorded(),
        damaged: scenario.present,
        damage_location: scenario.present.then_some(scenario.location),
    };
    SampleMatrix::from_frequency_columns(&columns, meta)
}

/// Root-mean-square value of a noise-free undamaged measurement; used to
/// turn an SNR target into an absolute noise level.
pub fn baseline_rms(scene: &Scene) -> Result<f64> {
    let s = synth_sample(scene, &DamageScenario::undamaged(), &PerturbationSpec::none(), 0.0, 0)?;
    let v = s.frequency_values()?;
    Ok((v.iter().map(|c| c.norm_sqr()).sum::<f64>() / v.len() as f64).sqrt())
}

pub fn noise_std_for_snr(scene: &Scene, snr_db: f64) -> Result<f64> {
    Ok(baseline_rms(scene)? * 10f64.powf(-snr_db / 20.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wave_sim::dispersion::{linear_dispersion, PlateSpec};
    use crate::wave_sim::propagation::propagate;
    use std::f64::consts::TAU;

    fn scene() -> Scene {
        let plate = PlateSpec::aluminum(1.22, 3e-3).unwrap();
        let omegas: Vec<f64> = (0..32).map(|i| TAU * 3e3 * i as f64).collect();
        Scene {
            geometry: ArrayGeometry::random(&plate, 4, 0.05, 11).unwrap(),
            dispersion: linear_dispersion(3000.0, &omegas).unwrap(),
            source_spectrum: (0..32).map(|i| Complex64::from_polar(1.0, 0.1 * i as f64)).collect(),
            side_length: 1.22,
        }
    }

    #[test]
    fn gamma_stays_in_bounds() {
        let spec = PerturbationSpec::per_sample(0.02);
        let disp = scene().dispersion;
        let mut sum = 0.0;
        let n = 10_000;
        for s in 0..n {
            let (_, g) = perturb_wavenumber(&disp, &spec, s).unwrap();
            assert!((0.98..=1.02).contains(&g));
            sum += g;
        }
        let mean = sum / n as f64;
        let se = 0.04 / 12f64.sqrt() / (n as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se);
    }

    #[test]
    fn zero_delta_is_identity_and_seed_is_deterministic() {
        let disp = scene().dispersion;
        let (same, g) = perturb_wavenumber(&disp, &PerturbationSpec::per_sample(0.0), 5).unwrap();
        assert_eq!(g, 1.0);
        assert_eq!(same, disp);
        let spec = PerturbationSpec::per_sample(0.02);
        assert_eq!(
            perturb_wavenumber(&disp, &spec, 9).unwrap().1,
            perturb_wavenumber(&disp, &spec, 9).unwrap().1
        );
        assert!(PerturbationSpec::per_sample(1.0).validate().is_err());
    }

    #[test]
    fn undamaged_noise_free_sample_is_pure_baseline() {
        let sc = scene();
        let s = synth_sample(&sc, &DamageScenario::undamaged(), &PerturbationSpec::none(), 0.0, 1).unwrap();
        let cols = s.frequency_columns().unwrap();
        for (pair, col) in cols.iter().enumerate() {
            let d = sc.geometry.pair_distance(pair);
            assert_eq!(col, &propagate(&sc.source_spectrum, d, &sc.dispersion).unwrap());
        }
    }

    #[test]
    fn reciprocity_with_shared_gamma() {
        let sc = scene();
        let scenario = DamageScenario::at([0.4, 0.7], 0.8);
        let s = synth_sample(&sc, &scenario, &PerturbationSpec::per_sample(0.02), 0.0, 3).unwrap();
        let cols = s.frequency_columns().unwrap();
        let g = &sc.geometry;
        for (i, &(t, r)) in g.pair_index.iter().enumerate() {
            let j = g.pair_index.iter().position(|&p| p == (r, t)).unwrap();
            assert_eq!(cols[i], cols[j]);
        }
    }

    #[test]
    fn per_path_records_every_path() {
        let sc = scene();
        let s = synth_sample(&sc, &DamageScenario::at([0.5, 0.5], 1.0), &PerturbationSpec::per_path(0.02), 0.0, 4)
            .unwrap();
        assert_eq!(s.meta.gammas.len(), 2 * sc.geometry.unordered_pairs());
        assert!(s.meta.gammas.iter().all(|g| (0.98..=1.02).contains(g)));
    }

    #[test]
    fn damage_on_sensor_rejected() {
        let sc = scene();
        let at_sensor = DamageScenario::at(sc.geometry.sensor_positions[0], 1.0);
        assert!(synth_sample(&sc, &at_sensor, &PerturbationSpec::none(), 0.0, 0).is_err());
        let outside = DamageScenario::at([2.0, 0.5], 1.0);
        assert!(synth_sample(&sc, &outside, &PerturbationSpec::none(), 0.0, 0).is_err());
    }
}
