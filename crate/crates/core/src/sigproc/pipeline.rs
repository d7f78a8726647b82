use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::calibration::{baseline_subtract, subtract_with_reference, CalibrationBank, CalibrationChoice};
use super::chirp::{chirp_spectrum, ChirpSpec};
use super::filters::{gaussian_bandpass, pulse_compress, time_gate, velocity_window, FilterSpec};
use super::standardize::{standardize, Scale};
use super::stretch::StretchSearch;
use super::transform::Transform;
use crate::error::{Error, Result};
use crate::grid::SpectralGrid;
use crate::sample::SampleMatrix;

/// Fixed processing order, part of every fingerprint.
pub const PIPELINE_ORDER: &str =
    "pulse_compress>time_gate>gaussian_bandpass>velocity_window>baseline_subtract>standardize";
/// Network input layout, part of every fingerprint.
pub const INPUT_LAYOUT: &str = "channels=sensor_pairs;length=Q";

/// SHA-256 (hex) identifying a preprocessing configuration.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Fingerprint(pub String);

impl std::fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl Fingerprint {
    pub fn ensure_matches(&self, other: &Fingerprint) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::FingerprintMismatch {
                expected: self.0.clone(),
                found: other.0.clone(),
            })
        }
    }
}

/// SHA-256 of a value's canonical JSON form (object keys sorted).
pub fn canonical_hash<T: Serialize>(value: &T) -> Result<String> {
    let canonical = serde_json::to_value(value)?;
    Ok(hex::encode(Sha256::digest(canonical.to_string().as_bytes())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub grid: SpectralGrid,
    pub chirp: ChirpSpec,
    pub filter: FilterSpec,
    pub stretch: StretchSearch,
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        self.chirp.validate()?;
        self.filter.validate()?;
        self.stretch.validate()
    }

    pub fn fingerprint(&self) -> Result<Fingerprint> {
        #[derive(Serialize)]
        struct Canonical<'a> {
            config: &'a PreprocessConfig,
            order: &'static str,
            layout: &'static str,
        }
        canonical_hash(&Canonical {
            config: self,
            order: PIPELINE_ORDER,
            layout: INPUT_LAYOUT,
        })
        .map(Fingerprint)
    }
}

/// A standardized residual ready for the networks, tagged with the
/// preprocessing that produced it.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub sample: SampleMatrix,
    pub fingerprint: Fingerprint,
    pub scale: Scale,
    pub calibration: Option<CalibrationChoice>,
}

/// The front end plus residual formation for one array.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    config: PreprocessConfig,
    fingerprint: Fingerprint,
    transform: Transform,
    chirp: Vec<Complex64>,
    frequencies: Vec<f64>,
    pair_distances: Vec<f64>,
}

impl Preprocessor {
    /// `pair_distances[m]` is the direct transmitter–receiver distance of pair `m`.
    pub fn new(config: PreprocessConfig, pair_distances: Vec<f64>) -> Result<Self> {
        config.validate()?;
        let chirp = chirp_spectrum(&config.chirp, &config.grid)?;
        Ok(Self {
            fingerprint: config.fingerprint()?,
            transform: Transform::new(config.grid.bins),
            frequencies: config.grid.frequencies(),
            chirp,
            pair_distances,
            config,
        })
    }

    pub fn config(&self) -> &PreprocessConfig {
        &self.config
    }

    pub fn fingerprint(&self) -> &Fingerprint {
        &self.fingerprint
    }

    pub fn chirp_spectrum(&self) -> &[Complex64] {
        &self.chirp
    }

    /// Pulse compression, gating, Gaussian filtering and velocity windowing
    /// of one pair's spectrum.
    pub fn front_end_trace(&self, spectrum: &[Complex64], distance: f64) -> Result<Vec<f64>> {
        let filter = &self.config.filter;
        let fs = self.config.grid.sample_rate();
        let compressed = pulse_compress(spectrum, &self.chirp)?;
        let mut analytic = self.transform.analytic(&compressed);
        time_gate(&mut analytic, filter.gate_start, fs);
        let mut filtered = self.transform.spectrum(&analytic);
        gaussian_bandpass(&mut filtered, &self.frequencies, filter);
        let mut trace = self.transform.trace(&filtered);
        velocity_window(&mut trace, distance, fs, filter)?;
        Ok(trace)
    }

    /// Front end applied to every pair of a frequency-domain measurement.
    pub fn front_end(&self, raw: &SampleMatrix) -> Result<SampleMatrix> {
        if raw.q() != self.config.grid.bins || raw.m() != self.pair_distances.len() {
            return Err(Error::ShapeMismatch(format!(
                "measurement is {}x{}, preprocessor expects {}x{}",
                raw.q(),
                raw.m(),
                self.config.grid.bins,
                self.pair_distances.len()
            )));
        }
        let columns = raw
            .frequency_columns()?
            .iter()
            .zip(&self.pair_distances)
            .map(|(col, d)| self.front_end_trace(col, *d))
            .collect::<Result<Vec<_>>>()?;
        SampleMatrix::from_time_columns(&columns, raw.meta.clone())
    }

    pub fn bank(&self, raw_damaged: &SampleMatrix, raw_undamaged: &SampleMatrix) -> Result<CalibrationBank> {
        CalibrationBank::new(self.front_end(raw_damaged)?, self.front_end(raw_undamaged)?)
    }

    pub fn bank_with_baseline(
        &self,
        raw_damaged: &SampleMatrix,
        raw_undamaged: &SampleMatrix,
        raw_baseline: &SampleMatrix,
    ) -> Result<CalibrationBank> {
        CalibrationBank::with_baseline(
            self.front_end(raw_damaged)?,
            self.front_end(raw_undamaged)?,
            self.front_end(raw_baseline)?,
        )
    }

    fn finish(&self, residual: SampleMatrix, calibration: Option<CalibrationChoice>) -> Result<Prepared> {
        let (sample, scale) = standardize(&residual)?;
        Ok(Prepared {
            sample,
            fingerprint: self.fingerprint.clone(),
            scale,
            calibration,
        })
    }

    /// Simulation-side residual: stretch onto the known baseline, subtract it,
    /// standardize. `baseline` is a front-end processed reference.
    pub fn prepare_against(&self, raw: &SampleMatrix, baseline: &SampleMatrix) -> Result<Prepared> {
        self.prepare_front_against(&self.front_end(raw)?, baseline)
    }

    pub fn prepare_front_against(&self, front: &SampleMatrix, baseline: &SampleMatrix) -> Result<Prepared> {
        let residual = subtract_with_reference(front, baseline, baseline, &self.config.stretch)?;
        self.finish(residual, None)
    }

    /// Measurement-side residual through the calibration bank.
    pub fn prepare_with_bank(&self, raw: &SampleMatrix, bank: &CalibrationBank) -> Result<Prepared> {
        let front = self.front_end(raw)?;
        self.prepare_front_with_bank(&front, bank)
    }

    pub fn prepare_front_with_bank(&self, front: &SampleMatrix, bank: &CalibrationBank) -> Result<Prepared> {
        let (residual, choice) = baseline_subtract(front, bank.global_baseline(), bank, &self.config.stretch)?;
        self.finish(residual, Some(choice))
    }
}
