//! Experiment configuration: TOML with one section per module, two built-in
//! profiles and a canonical hash.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{ensure, Error, Result};
use crate::grid::SpectralGrid;
use crate::neural::AdamConfig;
use crate::sigproc::{canonical_hash, ChirpSpec, FilterSpec, PreprocessConfig, StretchSearch};
use crate::vae::VaeConfig;
use crate::wave_sim::{LambMode, PerturbationMode, PerturbationSpec, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    PaperScale,
    DeskScale,
}

impl std::str::FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper_scale" | "paper" => Ok(Profile::PaperScale),
            "desk_scale" | "desk" => Ok(Profile::DeskScale),
            other => Err(Error::Config(format!(
                "unknown profile '{other}', expected paper_scale or desk_scale"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DispersionSource {
    /// Rayleigh–Lamb curves for the listed modes.
    Lamb { modes: Vec<LambMode> },
    /// Single non-dispersive mode.
    Linear { velocity: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveSimConfig {
    pub side_length: f64,
    pub thickness: f64,
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub density: f64,
    pub dispersion: DispersionSource,
    pub sensors: usize,
    pub min_separation: f64,
    pub bins: usize,
    pub f_max: f64,
    pub total_samples: usize,
    pub train_fraction: f64,
    pub reflection_coefficient: f64,
    pub delta: f64,
    pub perturbation_mode: PerturbationMode,
    pub snr_db: f64,
    pub interior_margin: f64,
}

impl WaveSimConfig {
    pub fn grid(&self) -> Result<SpectralGrid> {
        SpectralGrid::new(self.bins, self.f_max)
    }

    pub fn perturbation(&self) -> PerturbationSpec {
        PerturbationSpec {
            delta: self.delta,
            mode: self.perturbation_mode,
        }
    }

    pub fn pairs(&self) -> usize {
        self.sensors * self.sensors.saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("side_length", self.side_length),
            ("thickness", self.thickness),
            ("youngs_modulus", self.youngs_modulus),
            ("density", self.density),
            ("f_max", self.f_max),
        ] {
            ensure(v > 0.0 && v.is_finite(), || format!("wave_sim.{name} must be positive"))?;
        }
        ensure(self.poisson_ratio > 0.0 && self.poisson_ratio < 0.5, || {
            "wave_sim.poisson_ratio must lie in (0, 0.5)".into()
        })?;
        ensure(self.sensors >= 2, || "wave_sim.sensors must be at least 2".into())?;
        ensure(self.bins >= 4, || "wave_sim.bins must be at least 4".into())?;
        ensure(self.total_samples >= 2, || "wave_sim.total_samples must be at least 2".into())?;
        ensure(self.reflection_coefficient > 0.0, || {
            "wave_sim.reflection_coefficient must be positive".into()
        })?;
        ensure(self.snr_db.is_finite(), || "wave_sim.snr_db must be finite".into())?;
        self.perturbation().validate()?;
        crate::wave_sim::split_sizes(self.total_samples, self.train_fraction).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigprocConfig {
    pub chirp: ChirpSpec,
    pub filter: FilterSpec,
    pub stretch: StretchSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LikelihoodConfig {
    pub hidden_units: Vec<usize>,
    pub log_var_floor: f64,
    pub dropout: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: AdamConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub ensemble_size: usize,
    pub histogram_bins: usize,
    pub likelihood: LikelihoodConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceConfig {
    pub length: usize,
    pub onset: usize,
    pub drift_amplitude: f64,
    pub drift_period: f64,
    pub damage_location: Point,
    pub snr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub geometry: u64,
    pub dataset: u64,
    pub ensemble: u64,
    pub sequence: u64,
    pub detection: u64,
    pub likelihood: u64,
}

impl Seeds {
    /// Consecutive seeds from one master seed. Streams are decorrelated
    /// downstream by tagged derivation, and values stay within TOML's
    /// signed 64-bit integers.
    pub fn from_master(master: u64) -> Self {
        let m = master.min(i64::MAX as u64 - 6);
        Self {
            geometry: m,
            dataset: m + 1,
            ensemble: m + 2,
            sequence: m + 3,
            detection: m + 4,
            likelihood: m + 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub profile: Profile,
    pub wave_sim: WaveSimConfig,
    pub sigproc: SigprocConfig,
    pub vae: VaeConfig,
    pub detector: DetectorConfig,
    pub sequence: SequenceConfig,
    pub seeds: Seeds,
}

fn chirp() -> ChirpSpec {
    ChirpSpec {
        duration: 100e-6,
        f_start: 50e3,
        f_end: 500e3,
        sampling_rate: 1e6,
    }
}

fn likelihood() -> LikelihoodConfig {
    LikelihoodConfig {
        hidden_units: vec![512, 128],
        log_var_floor: -10.0,
        dropout: 0.1,
        epochs: 15,
        batch_size: 16,
        optimizer: AdamConfig::default(),
    }
}

impl ExperimentConfig {
    /// Full-size setup: 16 sensors (M = 240), Q = 1000 bins to 500 kHz,
    /// 5000 simulations, ten members.
    pub fn paper_scale() -> Self {
        let wave_sim = WaveSimConfig {
            side_length: 1.22,
            thickness: 3e-3,
            youngs_modulus: 69e9,
            poisson_ratio: 0.33,
            density: 2700.0,
            dispersion: DispersionSource::Lamb {
                modes: vec![LambMode::S0, LambMode::A0],
            },
            sensors: 16,
            min_separation: 0.05,
            bins: 1000,
            f_max: 500e3,
            total_samples: 5000,
            train_fraction: 0.8,
            reflection_coefficient: 1.0,
            delta: 0.02,
            perturbation_mode: PerturbationMode::PerPath,
            snr_db: 30.0,
            interior_margin: 0.05,
        };
        let vae = VaeConfig::standard(1000, wave_sim.pairs());
        Self {
            profile: Profile::PaperScale,
            sigproc: SigprocConfig {
                chirp: chirp(),
                filter: FilterSpec::default(),
                stretch: StretchSearch::default(),
            },
            vae,
            detector: DetectorConfig {
                ensemble_size: 10,
                histogram_bins: 20,
                likelihood: likelihood(),
            },
            sequence: SequenceConfig {
                length: 76,
                onset: 37,
                drift_amplitude: 0.02,
                drift_period: 24.0,
                damage_location: [0.53, 0.60],
                snr_db: 30.0,
            },
            seeds: Seeds::from_master(2021),
            wave_sim,
        }
    }

    /// Laptop-size setup: 4 sensors (M = 12), Q = 128 bins to 160 kHz,
    /// 250 simulations (200 train / 50 validation), three members.
    pub fn desk_scale() -> Self {
        let mut c = Self::paper_scale();
        c.profile = Profile::DeskScale;
        c.wave_sim.sensors = 4;
        c.wave_sim.bins = 128;
        c.wave_sim.f_max = 160e3;
        c.wave_sim.total_samples = 250;
        c.vae = VaeConfig::standard(128, c.wave_sim.pairs());
        c.detector.ensemble_size = 3;
        c
    }

    pub fn for_profile(profile: Profile) -> Self {
        match profile {
            Profile::PaperScale => Self::paper_scale(),
            Profile::DeskScale => Self::desk_scale(),
        }
    }

    pub fn preprocess(&self) -> Result<PreprocessConfig> {
        Ok(PreprocessConfig {
            grid: self.wave_sim.grid()?,
            chirp: self.sigproc.chirp,
            filter: self.sigproc.filter,
            stretch: self.sigproc.stretch,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let c = |e: Error| Error::Config(e.to_string());
        self.wave_sim.validate().map_err(c)?;
        self.preprocess().and_then(|p| p.validate()).map_err(c)?;
        self.vae.validate().map_err(c)?;
        if self.vae.input_length != self.wave_sim.bins || self.vae.channels != self.wave_sim.pairs() {
            return Err(Error::Config(format!(
                "vae input {}x{} does not match wave_sim grid {}x{}",
                self.vae.input_length,
                self.vae.channels,
                self.wave_sim.bins,
                self.wave_sim.pairs()
            )));
        }
        let d = &self.detector;
        if d.ensemble_size == 0 || d.histogram_bins == 0 {
            return Err(Error::Config("detector.ensemble_size and histogram_bins must be positive".into()));
        }
        let l = &d.likelihood;
        if l.hidden_units.is_empty() || l.hidden_units.contains(&0) || l.epochs == 0 || l.batch_size == 0 {
            return Err(Error::Config("detector.likelihood layer sizes, epochs and batch_size must be positive".into()));
        }
        let s = &self.sequence;
        if s.onset == 0 || s.onset > s.length || !(0.0..1.0).contains(&s.drift_amplitude) || s.drift_period <= 0.0 {
            return Err(Error::Config(
                "sequence needs 1 <= onset <= length, drift_amplitude in [0, 1) and a positive period".into(),
            ));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form; independent of TOML key order.
    pub fn hash(&self) -> Result<String> {
        canonical_hash(self)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parse TOML. Missing keys fall back to the profile named in the text
    /// (or `default_profile`), so a file only needs the values it changes.
    pub fn from_toml(text: &str, default_profile: Profile) -> Result<Self> {
        let overrides: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let profile = match overrides.get("profile") {
            Some(toml::Value::String(s)) => s.parse()?,
            Some(_) => return Err(Error::Config("profile must be a string".into())),
            None => default_profile,
        };
        let base = toml::Table::try_from(Self::for_profile(profile)).map_err(|e| Error::Config(e.to_string()))?;
        let merged = merge(base, overrides);
        let config: Self = merged.try_into().map_err(|e: toml::de::Error| {
            let msg = e.to_string();
            let at = msg
                .split('`')
                .nth(1)
                .and_then(|path| key_line(text, path))
                .map(|line| format!("line {line}: "))
                .unwrap_or_default();
            Error::Config(format!("{at}{}", msg.trim_end()))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, default_profile: Profile) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, default_profile).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

/// 1-based line on which dotted key `path` is assigned in `text`.
fn key_line(text: &str, path: &str) -> Option<usize> {
    let mut table = String::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            table = header.trim().to_string();
            continue;
        }
        if let Some((key, _)) = line.split_once('=') {
            let key = key.trim();
            let full = if table.is_empty() { key.to_string() } else { format!("{table}.{key}") };
            if full == path {
                return Some(i + 1);
            }
        }
    }
    None
}

fn merge(mut base: toml::Table, overrides: toml::Table) -> toml::Table {
    for (k, v) in overrides {
        match (base.remove(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => {
                base.insert(k, toml::Value::Table(merge(b, o)));
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
    base
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_validate_and_have_expected_sizes() {
        let desk = ExperimentConfig::desk_scale();
        desk.validate().unwrap();
        assert_eq!((desk.wave_sim.bins, desk.wave_sim.pairs()), (128, 12));
        let paper = ExperimentConfig::paper_scale();
        paper.validate().unwrap();
        assert_eq!((paper.wave_sim.bins, paper.wave_sim.pairs()), (1000, 240));
        assert_eq!(paper.wave_sim.total_samples, 5000);
    }

    #[test]
    fn toml_round_trip_and_partial_override() {
        let desk = ExperimentConfig::desk_scale();
        let text = desk.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text, Profile::PaperScale).unwrap(), desk);
        let partial = "profile = \"desk_scale\"\n[vae]\nepochs = 3\n";
        let c = ExperimentConfig::from_toml(partial, Profile::PaperScale).unwrap();
        assert_eq!(c.vae.epochs, 3);
        assert_eq!(c.wave_sim.bins, 128);
    }

    #[test]
    fn hash_ignores_key_order() {
        let a = "[vae]\nepochs = 3\nbatch_size = 8\n";
        let b = "[vae]\nbatch_size = 8\nepochs = 3\n";
        let ca = ExperimentConfig::from_toml(a, Profile::DeskScale).unwrap();
        let cb = ExperimentConfig::from_toml(b, Profile::DeskScale).unwrap();
        assert_eq!(ca.hash().unwrap(), cb.hash().unwrap());
        assert_ne!(ca.hash().unwrap(), ExperimentConfig::desk_scale().hash().unwrap());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = ExperimentConfig::from_toml("[vae]\nepochs = \"many\"\n", Profile::DeskScale).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = ExperimentConfig::from_toml("[vae]\nepochs = 0\n", Profile::DeskScale).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
