use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Frequency,
    Time,
}

impl Domain {
    pub fn tag(self) -> u8 {
        match self {
            Domain::Frequency => 0,
            Domain::Time => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Domain::Frequency),
            1 => Ok(Domain::Time),
            other => Err(Error::Format(format!("unknown domain tag {other}"))),
        }
    }
}

/// Provenance carried with every sample.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub id: u64,
    pub seed: u64,
    /// Wavenumber scale factors used, one per sample or one per propagation path.
    pub gammas: Vec<f64>,
    pub damaged: bool,
    pub damage_location: Option<[f64; 2]>,
}

impl SampleMeta {
    pub fn gamma_summary(&self) -> f64 {
        if self.gammas.is_empty() {
            1.0
        } else {
            self.gammas.iter().sum::<f64>() / self.gammas.len() as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SampleValues {
    Time(Vec<f64>),
    Frequency(Vec<Complex64>),
}

/// One `Q × M` observation stored row-major: entry `(bin, pair)` lives at
/// `bin * M + pair`. Columns are the per-sensor-pair traces or spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    q: usize,
    m: usize,
    values: SampleValues,
    pub meta: SampleMeta,
}

impl SampleMatrix {
    pub fn new(q: usize, m: usize, values: SampleValues, meta: SampleMeta) -> Result<Self> {
        let (len, finite) = match &values {
            SampleValues::Time(v) => (v.len(), v.iter().all(|x| x.is_finite())),
            SampleValues::Frequency(v) => (v.len(), v.iter().all(|x| x.re.is_finite() && x.im.is_finite())),
        };
        if len != q * m {
            return Err(Error::ShapeMismatch(format!(
                "sample has {len} values, expected {q}x{m}"
            )));
        }
        if !finite {
            return Err(Error::NonFinite(format!("sample {} has non-finite entries", meta.id)));
        }
        Ok(Self { q, m, values, meta })
    }

    /// Build a time-domain sample from `M` columns of length `Q`.
    pub fn from_time_columns(columns: &[Vec<f64>], meta: SampleMeta) -> Result<Self> {
        let (q, m) = column_shape(columns)?;
        let mut values = vec![0.0; q * m];
        for (j, col) in columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                values[i * m + j] = *v;
            }
        }
        Self::new(q, m, SampleValues::Time(values), meta)
    }

    pub fn from_frequency_columns(columns: &[Vec<Complex64>], meta: SampleMeta) -> Result<Self> {
        let (q, m) = column_shape(columns)?;
        let mut values = vec![Complex64::new(0.0, 0.0); q * m];
        for (j, col) in columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                values[i * m + j] = *v;
            }
        }
        Self::new(q, m, SampleValues::Frequency(values), meta)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.q * self.m
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn domain(&self) -> Domain {
        match self.values {
            SampleValues::Time(_) => Domain::Time,
            SampleValues::Frequency(_) => Domain::Frequency,
        }
    }

    pub fn values(&self) -> &SampleValues {
        &self.values
    }

    pub fn time_values(&self) -> Result<&[f64]> {
        match &self.values {
            SampleValues::Time(v) => Ok(v),
            SampleValues::Frequency(_) => Err(Error::InvalidParameter(
                "expected a time-domain sample".into(),
            )),
        }
    }

    pub fn frequency_values(&self) -> Result<&[Complex64]> {
        match &self.values {
            SampleValues::Frequency(v) => Ok(v),
            SampleValues::Time(_) => Err(Error::InvalidParameter(
                "expected a frequency-domain sample".into(),
            )),
        }
    }

    pub fn time_columns(&self) -> Result<Vec<Vec<f64>>> {
        let v = self.time_values()?;
        Ok((0..self.m)
            .map(|j| (0..self.q).map(|i| v[i * self.m + j]).collect())
            .collect())
    }

    pub fn frequency_columns(&self) -> Result<Vec<Vec<Complex64>>> {
        let v = self.frequency_values()?;
        Ok((0..self.m)
            .map(|j| (0..self.q).map(|i| v[i * self.m + j]).collect())
            .collect())
    }

    pub fn same_shape(&self, other: &SampleMatrix) -> Result<()> {
        if self.q != other.q || self.m != other.m || self.domain() != other.domain() {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} {:?} vs {}x{} {:?}",
                self.q,
                self.m,
                self.domain(),
                other.q,
                other.m,
                other.domain()
            )));
        }
        Ok(())
    }
}

fn column_shape<T>(columns: &[Vec<T>]) -> Result<(usize, usize)> {
    let m = columns.len();
    let q = columns.first().map_or(0, Vec::len);
    if columns.iter().any(|c| c.len() != q) {
        return Err(Error::ShapeMismatch("columns have unequal lengths".into()));
    }
    Ok((q, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_round_trip_row_major() {
        let cols = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]];
        let s = SampleMatrix::from_time_columns(&cols, SampleMeta::default()).unwrap();
        assert_eq!(s.time_values().unwrap(), &[1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
        assert_eq!(s.time_columns().unwrap(), cols);
    }

    #[test]
    fn rejects_bad_shapes_and_nan() {
        assert!(SampleMatrix::new(2, 2, SampleValues::Time(vec![0.0; 3]), SampleMeta::default()).is_err());
        assert!(SampleMatrix::new(1, 1, SampleValues::Time(vec![f64::NAN]), SampleMeta::default()).is_err());
    }
}
