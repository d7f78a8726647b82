//! End-to-end assembly of one experiment from its configuration: the
//! simulated plate and array, the preprocessing chain, and labelled test
//! campaigns drawn from an emulated measurement sequence.

use rand::seq::IndexedRandom;
use rayon::prelude::*;

use serde::{Deserialize, Serialize};

use crate::config::{DispersionSource, ExperimentConfig};
use crate::detector::{
    calibrate_threshold, detection_statistics, evaluate, likelihood_statistics, DetectionReport, LikelihoodModel,
    Threshold,
};
use crate::error::{Error, Result};
use crate::sample::SampleMatrix;
use crate::seed;
use crate::sigproc::{chirp_spectrum, CalibrationBank, Fingerprint, Prepared, Preprocessor};
use crate::vae::EnsembleModel;
use crate::wave_sim::{
    bulk_velocities, emulate_temperature_sequence, gen_dataset, lamb_dispersion_on_grid, linear_dispersion,
    noise_std_for_snr, synth_sample, ArrayGeometry, DamageScenario, Dataset, DatasetSpec, PerturbationSpec, PlateSpec,
    Scene, SequenceSpec,
};

#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub plate: PlateSpec,
    pub scene: Scene,
    pub preprocessor: Preprocessor,
    /// Noise-free, unperturbed, undamaged measurement after the front end.
    pub baseline_front: SampleMatrix,
    pub training_noise_std: f64,
    pub sequence_noise_std: f64,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let w = &config.wave_sim;
        let (cl, ct) = bulk_velocities(w.youngs_modulus, w.poisson_ratio, w.density);
        let plate = PlateSpec::new(w.side_length, w.thickness, cl, ct)?;
        let grid = w.grid()?;
        let omegas = grid.omegas();
        let dispersion = match &w.dispersion {
            DispersionSource::Lamb { modes } => lamb_dispersion_on_grid(&plate, &omegas, modes)?,
            DispersionSource::Linear { velocity } => linear_dispersion(*velocity, &omegas)?,
        };
        let geometry = ArrayGeometry::random(&plate, w.sensors, w.min_separation, config.seeds.geometry)?;
        let pre = config.preprocess()?;
        let scene = Scene {
            source_spectrum: chirp_spectrum(&pre.chirp, &grid)?,
            geometry,
            dispersion,
            side_length: w.side_length,
        };
        let distances: Vec<f64> = (0..scene.geometry.pairs()).map(|p| scene.geometry.pair_distance(p)).collect();
        let preprocessor = Preprocessor::new(pre, distances)?;
        let ideal = synth_sample(&scene, &DamageScenario::undamaged(), &PerturbationSpec::none(), 0.0, 0)?;
        let baseline_front = preprocessor.front_end(&ideal)?;
        let training_noise_std = noise_std_for_snr(&scene, w.snr_db)?;
        let sequence_noise_std = noise_std_for_snr(&scene, config.sequence.snr_db)?;
        Ok(Self {
            plate,
            scene,
            preprocessor,
            baseline_front,
            training_noise_std,
            sequence_noise_std,
            config,
        })
    }

    pub fn dataset_spec(&self, perturbation: PerturbationSpec) -> DatasetSpec {
        let w = &self.config.wave_sim;
        DatasetSpec {
            total_samples: w.total_samples,
            train_fraction: w.train_fraction,
            reflection_coefficient: w.reflection_coefficient,
            perturbation,
            noise_std: self.training_noise_std,
            interior_margin: w.interior_margin,
        }
    }

    /// Damage-class training corpus with the configured wavenumber perturbation.
    pub fn simulate_adversarial(&self) -> Result<Dataset> {
        gen_dataset(&self.scene, &self.dataset_spec(self.config.wave_sim.perturbation()), self.config.seeds.dataset)
    }

    /// The same corpus without perturbation.
    pub fn simulate_ideal(&self) -> Result<Dataset> {
        gen_dataset(&self.scene, &self.dataset_spec(PerturbationSpec::none()), self.config.seeds.dataset)
    }

    /// Simulation-side residuals against the ideal baseline.
    pub fn prepare_training(&self, samples: &[SampleMatrix]) -> Result<Vec<Prepared>> {
        samples
            .par_iter()
            .map(|s| self.preprocessor.prepare_against(s, &self.baseline_front))
            .collect()
    }

    pub fn sequence_spec(&self, length: usize, onset: usize) -> SequenceSpec {
        let s = &self.config.sequence;
        SequenceSpec {
            length,
            onset,
            drift_amplitude: s.drift_amplitude,
            drift_period: s.drift_period,
            damage_location: s.damage_location,
            reflection_coefficient: self.config.wave_sim.reflection_coefficient,
            noise_std: self.sequence_noise_std,
        }
    }

    /// The configured measurement campaign (raw spectra).
    pub fn sequence(&self) -> Result<Vec<SampleMatrix>> {
        let s = &self.config.sequence;
        emulate_temperature_sequence(&self.scene, &self.sequence_spec(s.length, s.onset), self.config.seeds.sequence)
    }

    /// A campaign with `undamaged` + `damaged` held-out measurements plus the
    /// three reference measurements a [`Campaign`] needs.
    pub fn held_out_campaign(&self, undamaged: usize, damaged: usize, seed: u64) -> Result<Campaign> {
        let onset = undamaged + 3;
        let spec = self.sequence_spec(undamaged + damaged + 3, onset);
        let raw = emulate_temperature_sequence(&self.scene, &spec, seed)?;
        Campaign::from_sequence(&self.preprocessor, raw, seed)
    }
}

/// Which measurements of a campaign serve as references, by sample id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BankSpec {
    pub baseline: u64,
    pub damaged: u64,
    pub undamaged: u64,
}

impl BankSpec {
    /// The first measurement is the global baseline; one other measurement of
    /// each label is drawn at random for the calibration bank.
    pub fn draw(samples: &[SampleMatrix], seed: u64) -> Result<Self> {
        let first = samples
            .first()
            .filter(|f| !f.meta.damaged)
            .ok_or_else(|| Error::MissingInput("campaign needs an undamaged first measurement".into()))?;
        let mut rng = seed::rng(seed::derive(seed, "calibration", 0));
        let mut pick = |damaged: bool| -> Result<u64> {
            let pool: Vec<u64> = samples[1..].iter().filter(|s| s.meta.damaged == damaged).map(|s| s.meta.id).collect();
            pool.choose(&mut rng)
                .copied()
                .ok_or_else(|| Error::MissingInput(format!("no {} measurement for the bank", label(damaged))))
        };
        let undamaged = pick(false)?;
        let damaged = pick(true)?;
        Ok(Self {
            baseline: first.meta.id,
            damaged,
            undamaged,
        })
    }

    pub fn ids(&self) -> [u64; 3] {
        [self.baseline, self.damaged, self.undamaged]
    }
}

/// Front-end processed measurements split into a calibration bank and
/// held-out tests.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub bank: CalibrationBank,
    pub tests: Vec<SampleMatrix>,
}

/// A detection statistic over prepared residuals.
#[derive(Clone, Copy)]
pub enum Scorer<'a> {
    Vae { ensemble: &'a EnsembleModel, seed: u64 },
    Likelihood(&'a LikelihoodModel),
}

impl Scorer<'_> {
    pub fn score(&self, xs: &[Prepared]) -> Result<Vec<f64>> {
        match self {
            Scorer::Vae { ensemble, seed } => {
                Ok(detection_statistics(ensemble, xs, *seed)?.into_iter().map(|s| s.tau).collect())
            }
            Scorer::Likelihood(model) => likelihood_statistics(model, xs),
        }
    }

    pub fn fingerprint(&self) -> &Fingerprint {
        match self {
            Scorer::Vae { ensemble, .. } => &ensemble.fingerprint,
            Scorer::Likelihood(model) => &model.fingerprint,
        }
    }
}

/// Threshold calibrated on the bank and the labelled report over the tests.
#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub threshold: Threshold,
    pub report: DetectionReport,
}

impl Campaign {
    pub fn from_sequence(pre: &Preprocessor, raw: Vec<SampleMatrix>, seed: u64) -> Result<Self> {
        let bank = BankSpec::draw(&raw, seed)?;
        Self::assemble(pre, &raw, &bank)
    }

    /// Front-end every raw measurement and split by `bank`.
    pub fn assemble(pre: &Preprocessor, raw: &[SampleMatrix], bank: &BankSpec) -> Result<Self> {
        let fronts: Vec<SampleMatrix> = raw.par_iter().map(|s| pre.front_end(s)).collect::<Result<_>>()?;
        let find = |id: u64| -> Result<SampleMatrix> {
            fronts
                .iter()
                .find(|f| f.meta.id == id)
                .cloned()
                .ok_or_else(|| Error::MissingInput(format!("bank measurement {id} is not in the campaign")))
        };
        let (b, d, u) = (find(bank.baseline)?, find(bank.damaged)?, find(bank.undamaged)?);
        if b.meta.damaged || u.meta.damaged || !d.meta.damaged {
            return Err(Error::LabelMismatch("bank entries do not carry the labels their roles require".into()));
        }
        let bank_ids = bank.ids();
        let tests = fronts.into_iter().filter(|f| !bank_ids.contains(&f.meta.id)).collect();
        Ok(Self {
            bank: CalibrationBank::with_baseline(d, u, b)?,
            tests,
        })
    }

    /// Detection residuals of the calibration entries, damaged first.
    pub fn prepared_bank(&self, pre: &Preprocessor) -> Result<(Prepared, Prepared)> {
        Ok((
            pre.prepare_front_with_bank(&self.bank.damaged, &self.bank)?,
            pre.prepare_front_with_bank(&self.bank.undamaged, &self.bank)?,
        ))
    }

    pub fn prepared_tests(&self, pre: &Preprocessor) -> Result<Vec<Prepared>> {
        self.tests
            .par_iter()
            .map(|t| pre.prepare_front_with_bank(t, &self.bank))
            .collect()
    }

    /// Score the bank and the tests, calibrate the midpoint threshold and
    /// evaluate against the tests' labels.
    pub fn detect(&self, pre: &Preprocessor, scorer: Scorer<'_>, histogram_bins: usize) -> Result<CampaignResult> {
        scorer.fingerprint().ensure_matches(pre.fingerprint())?;
        let (d, u) = self.prepared_bank(pre)?;
        let bank_tau = scorer.score(&[d, u])?;
        let threshold = calibrate_threshold(bank_tau[0], bank_tau[1], self.bank.damaged_id, self.bank.undamaged_id);
        let tests = self.prepared_tests(pre)?;
        let taus = scorer.score(&tests)?;
        let scored: Vec<(u64, f64, bool)> = tests
            .iter()
            .zip(&taus)
            .map(|(p, t)| (p.sample.meta.id, *t, p.sample.meta.damaged))
            .collect();
        let report = evaluate(&scored, &threshold, histogram_bins)?;
        Ok(CampaignResult { threshold, report })
    }
}

fn label(damaged: bool) -> &'static str {
    if damaged {
        "damaged"
    } else {
        "undamaged"
    }
}
