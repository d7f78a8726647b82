use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use super::geometry::{distance, Point};
use super::synth::{synth_sample, synth_with_gammas, DamageScenario, PathGammas, PerturbationSpec, Scene};
use crate::error::{ensure, Result};
use crate::sample::SampleMatrix;
use crate::seed;

/// How a simulated training corpus is drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub total_samples: usize,
    pub train_fraction: f64,
    pub reflection_coefficient: f64,
    pub perturbation: PerturbationSpec,
    pub noise_std: f64,
    /// Damage locations are drawn from `[margin, side − margin]²`.
    pub interior_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: u64,
    pub seed: u64,
    pub gammas: Vec<f64>,
    pub damaged: bool,
    pub damage_location: Option<Point>,
}

impl ManifestEntry {
    fn of(sample: &SampleMatrix) -> Self {
        Self {
            id: sample.meta.id,
            seed: sample.meta.seed,
            gammas: sample.meta.gammas.clone(),
            damaged: sample.meta.damaged,
            damage_location: sample.meta.damage_location,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub seed: u64,
    pub train: Vec<ManifestEntry>,
    pub validation: Vec<ManifestEntry>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: Vec<SampleMatrix>,
    pub validation: Vec<SampleMatrix>,
    pub manifest: DatasetManifest,
}

/// Number of training samples for a split; the rest go to validation.
pub fn split_sizes(total: usize, train_fraction: f64) -> Result<(usize, usize)> {
    ensure(train_fraction > 0.0 && train_fraction < 1.0, || {
        format!("split fraction must lie in (0, 1), got {train_fraction}")
    })?;
    let train = ((total as f64) * train_fraction).round() as usize;
    Ok((train, total - train))
}

fn draw_damage_location<R: Rng>(scene: &Scene, margin: f64, rng: &mut R) -> Point {
    let (lo, hi) = (margin, scene.side_length - margin);
    loop {
        let p = [rng.random_range(lo..hi), rng.random_range(lo..hi)];
        if scene.geometry.sensor_positions.iter().all(|s| distance(*s, p) > 0.01) {
            return p;
        }
    }
}

/// Simulate a damage-class corpus. Every sample carries a scatterer at a
/// uniformly drawn interior location; per-sample seeds derive from `rng_seed`
/// and the sample index, so generation order does not matter.
pub fn gen_dataset(scene: &Scene, spec: &DatasetSpec, rng_seed: u64) -> Result<Dataset> {
    let (n_train, _) = split_sizes(spec.total_samples, spec.train_fraction)?;
    spec.perturbation.validate()?;
    ensure(2.0 * spec.interior_margin < scene.side_length && spec.interior_margin >= 0.0, || {
        "interior margin leaves no room for damage".into()
    })?;
    let samples: Vec<SampleMatrix> = (0..spec.total_samples)
        .into_par_iter()
        .map(|i| {
            let sample_seed = seed::derive(rng_seed, "sample", i as u64);
            let mut rng = seed::rng(seed::derive(sample_seed, "location", 0));
            let location = draw_damage_location(scene, spec.interior_margin, &mut rng);
            let scenario = DamageScenario::at(location, spec.reflection_coefficient);
            let mut s = synth_sample(scene, &scenario, &spec.perturbation, spec.noise_std, sample_seed)?;
            s.meta.id = i as u64;
            Ok(s)
        })
        .collect::<Result<_>>()?;
    let mut train = samples;
    let validation = train.split_off(n_train);
    let manifest = DatasetManifest {
        seed: rng_seed,
        train: train.iter().map(ManifestEntry::of).collect(),
        validation: validation.iter().map(ManifestEntry::of).collect(),
    };
    Ok(Dataset {
        train,
        validation,
        manifest,
    })
}

/// A measurement campaign under slowly drifting, non-uniform temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpec {
    pub length: usize,
    /// 1-based index of the first damaged measurement.
    pub onset: usize,
    /// Peak fractional wavenumber change of each path.
    pub drift_amplitude: f64,
    /// Drift period in measurements.
    pub drift_period: f64,
    pub damage_location: Point,
    pub reflection_coefficient: f64,
    pub noise_std: f64,
}

/// Emulated temperature sequence: each path's γ follows
/// `1 + A sin(2π i / P + φ_path)` with a random phase per path; measurements
/// from `onset` on carry the scatterer.
pub fn emulate_temperature_sequence(scene: &Scene, spec: &SequenceSpec, rng_seed: u64) -> Result<Vec<SampleMatrix>> {
    ensure(spec.onset >= 1 && spec.onset <= spec.length, || {
        format!("damage onset {} outside 1..={}", spec.onset, spec.length)
    })?;
    ensure((0.0..1.0).contains(&spec.drift_amplitude), || {
        "drift amplitude must lie in [0, 1)".into()
    })?;
    ensure(spec.drift_period > 0.0, || "drift period must be positive".into())?;
    let paths = 2 * scene.geometry.unordered_pairs();
    let mut phase_rng = seed::rng(seed::derive(rng_seed, "phase", 0));
    let phases: Vec<f64> = (0..paths).map(|_| phase_rng.random_range(0.0..TAU)).collect();
    (0..spec.length)
        .into_par_iter()
        .map(|i| {
            let gammas = PathGammas::PerPath(
                phases
                    .iter()
                    .map(|phi| 1.0 + spec.drift_amplitude * (TAU * i as f64 / spec.drift_period + phi).sin())
                    .collect(),
            );
            let scenario = if i + 1 >= spec.onset {
                DamageScenario::at(spec.damage_location, spec.reflection_coefficient)
            } else {
                DamageScenario::undamaged()
            };
            let m_seed = seed::derive(rng_seed, "measurement", i as u64);
            let mut rng = seed::rng(m_seed);
            let mut s = synth_with_gammas(scene, &scenario, &gammas, spec.noise_std, &mut rng, m_seed)?;
            s.meta.id = i as u64;
            Ok(s)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wave_sim::dispersion::{linear_dispersion, PlateSpec};
    use crate::wave_sim::geometry::ArrayGeometry;
    use num_complex::Complex64;

    fn scene() -> Scene {
        let plate = PlateSpec::aluminum(1.22, 3e-3).unwrap();
        let omegas: Vec<f64> = (0..16).map(|i| TAU * 4e3 * i as f64).collect();
        Scene {
            geometry: ArrayGeometry::random(&plate, 3, 0.05, 2).unwrap(),
            dispersion: linear_dispersion(3000.0, &omegas).unwrap(),
            source_spectrum: vec![Complex64::new(1.0, 0.0); 16],
            side_length: 1.22,
        }
    }

    fn spec(total: usize) -> DatasetSpec {
        DatasetSpec {
            total_samples: total,
            train_fraction: 0.8,
            reflection_coefficient: 0.5,
            perturbation: PerturbationSpec::per_sample(0.02),
            noise_std: 0.01,
            interior_margin: 0.05,
        }
    }

    #[test]
    fn split_arithmetic() {
        assert_eq!(split_sizes(5000, 0.8).unwrap(), (4000, 1000));
        assert_eq!(split_sizes(10, 0.8).unwrap(), (8, 2));
        assert!(split_sizes(10, 1.0).is_err());
        assert!(split_sizes(10, 0.0).is_err());
    }

    #[test]
    fn small_dataset_is_disjoint_damaged_and_reproducible() {
        let d = gen_dataset(&scene(), &spec(10), 42).unwrap();
        assert_eq!((d.train.len(), d.validation.len()), (8, 2));
        let mut ids: Vec<u64> = d.train.iter().chain(&d.validation).map(|s| s.meta.id).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 10);
        assert!(d.train.iter().all(|s| s.meta.damaged));
        let again = gen_dataset(&scene(), &spec(10), 42).unwrap();
        assert_eq!(d.train, again.train);
        assert_eq!(d.manifest, again.manifest);
    }

    #[test]
    fn sequence_labels_follow_onset() {
        let seq = SequenceSpec {
            length: 76,
            onset: 37,
            drift_amplitude: 0.02,
            drift_period: 24.0,
            damage_location: [0.53, 0.60],
            reflection_coefficient: 0.5,
            noise_std: 0.0,
        };
        let s = emulate_temperature_sequence(&scene(), &seq, 1).unwrap();
        assert_eq!(s.iter().filter(|m| !m.meta.damaged).count(), 36);
        assert_eq!(s.iter().filter(|m| m.meta.damaged).count(), 40);
        assert!(!s[35].meta.damaged && s[36].meta.damaged);
        let bad = SequenceSpec { onset: 77, ..seq.clone() };
        assert!(emulate_temperature_sequence(&scene(), &bad, 1).is_err());
        let flat = SequenceSpec { drift_amplitude: 0.0, ..seq };
        let s = emulate_temperature_sequence(&scene(), &flat, 1).unwrap();
        assert!(s[..36].iter().all(|m| m.values() == s[0].values()));
    }
}
