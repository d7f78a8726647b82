use serde::{Deserialize, Serialize};

use super::stretch::{pearson, scale_stretch, StretchSearch};
use crate::error::{Error, Result};
use crate::sample::SampleMatrix;

/// Two labelled reference measurements and the global baseline, all
/// front-end processed.
#[derive(Debug, Clone)]
pub struct CalibrationBank {
    pub damaged: SampleMatrix,
    pub undamaged: SampleMatrix,
    pub baseline: SampleMatrix,
    pub damaged_id: u64,
    pub undamaged_id: u64,
    pub baseline_id: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationChoice {
    Damaged,
    Undamaged,
}

impl CalibrationBank {
/// Bank whose undamaged entry doubles as the global baseline.
    pub fn new(damaged: SampleMatrix, undamaged: SampleMatrix) -> Result<Self> {
        let baseline = undamaged.clone();
        Self::with_baseline(damaged, undamaged, baseline)
    }

    pub fn with_baseline(damaged: SampleMatrix, undamaged: SampleMatrix, baseline: SampleMatrix) -> Result<Self> {
        damaged.same_shape(&undamaged)?;
        damaged.same_shape(&baseline)?;
        damaged.time_values()?;
        undamaged.time_values()?;
        baseline.time_values()?;
        Ok(Self {
            damaged_id: damaged.meta.id,
            undamaged_id: undamaged.meta.id,
            baseline_id: baseline.meta.id,
            damaged,
            undamaged,
            baseline,
        })
    }

    pub fn entry(&self, choice: CalibrationChoice) -> &SampleMatrix {
        match choice {
            CalibrationChoice::Damaged => &self.damaged,
            CalibrationChoice::Undamaged => &self.undamaged,
        }
    }

    pub fn id(&self, choice: CalibrationChoice) -> u64 {
        match choice {
            CalibrationChoice::Damaged => self.damaged_id,
            CalibrationChoice::Undamaged => self.undamaged_id,
        }
    }

    pub fn global_baseline(&self) -> &SampleMatrix {
        &self.baseline
    }
}

/// Per-pair stretch of `test` onto `reference`; returns the compensated
/// columns and the residual energy against the reference.
pub(crate) fn stretch_onto(
    test: &SampleMatrix,
    reference: &SampleMatrix,
    search: &StretchSearch,
) -> Result<(Vec<Vec<f64>>, f64)> {
    test.same_shape(reference)?;
    let tc = test.time_columns()?;
    let rc = reference.time_columns()?;
    let mut energy = 0.0;
    let mut out = Vec::with_capacity(tc.len());
    for (t, r) in tc.iter().zip(&rc) {
        let trace = if pearson(r, r).is_some() {
            scale_stretch(t, r, search)?.trace
        } else {
            t.clone()
        };
        energy += trace.iter().zip(r).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        out.push(trace);
    }
    Ok((out, energy))
}

fn choose(test: &SampleMatrix, bank: &CalibrationBank, search: &StretchSearch) -> Result<(CalibrationChoice, Vec<Vec<f64>>)> {
    let (dam_cols, dam_energy) = stretch_onto(test, &bank.damaged, search)?;
    let (und_cols, und_energy) = stretch_onto(test, &bank.undamaged, search)?;
    // Ties go to the undamaged entry.
    if dam_energy < und_energy {
        Ok((CalibrationChoice::Damaged, dam_cols))
    } else {
        Ok((CalibrationChoice::Undamaged, und_cols))
    }
}

/// Bank entry with the least residual energy after stretching the test onto it.
pub fn select_calibration(test: &SampleMatrix, bank: &CalibrationBank, search: &StretchSearch) -> Result<CalibrationChoice> {
    Ok(choose(test, bank, search)?.0)
}

/// Stretch each pair of `test` and of `baseline` onto the selected
/// calibration entry, then subtract the aligned baseline.
pub fn baseline_subtract(
    test: &SampleMatrix,
    baseline: &SampleMatrix,
    bank: &CalibrationBank,
    search: &StretchSearch,
) -> Result<(SampleMatrix, CalibrationChoice)> {
    test.same_shape(baseline)?;
    let (choice, stretched) = choose(test, bank, search)?;
    let (aligned, _) = stretch_onto(baseline, bank.entry(choice), search)?;
    let residual = difference(&stretched, &aligned);
    Ok((SampleMatrix::from_time_columns(&residual, test.meta.clone())?, choice))
}

/// Stretch `test` onto `reference` per pair and subtract `baseline`; the
/// simulation-side counterpart of [`baseline_subtract`] where the reference is known.
pub fn subtract_with_reference(
    test: &SampleMatrix,
    reference: &SampleMatrix,
    baseline: &SampleMatrix,
    search: &StretchSearch,
) -> Result<SampleMatrix> {
    let (stretched, _) = stretch_onto(test, reference, search)?;
    let residual = subtract_columns(&stretched, baseline)?;
    SampleMatrix::from_time_columns(&residual, test.meta.clone())
}

/// Plain subtraction without stretch compensation.
pub fn subtract_plain(test: &SampleMatrix, baseline: &SampleMatrix) -> Result<SampleMatrix> {
    test.same_shape(baseline)?;
    subtract_columns(&test.time_columns()?, baseline)
        .and_then(|cols| SampleMatrix::from_time_columns(&cols, test.meta.clone()))
}

fn subtract_columns(columns: &[Vec<f64>], baseline: &SampleMatrix) -> Result<Vec<Vec<f64>>> {
    let bc = baseline.time_columns()?;
    if bc.len() != columns.len() {
        return Err(Error::ShapeMismatch("baseline pair count differs".into()));
    }
    Ok(difference(columns, &bc))
}

fn difference(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    a.iter()
        .zip(b)
        .map(|(t, r)| t.iter().zip(r).map(|(x, y)| x - y).collect())
        .collect()
}

pub fn energy(sample: &SampleMatrix) -> Result<f64> {
    Ok(sample.time_values()?.iter().map(|v| v * v).sum())
}

/// Pearson correlation of every trace with the first.
pub fn measurement_correlation(sequence: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = sequence
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty measurement sequence".into()))?;
    if pearson(first, first).is_none() {
        return Err(Error::InvalidParameter("first measurement is constant".into()));
    }
    sequence
        .iter()
        .enumerate()
        .map(|(i, t)| {
            if t.len() != first.len() {
                return Err(Error::ShapeMismatch(format!("measurement {i} has a different length")));
            }
            Ok(pearson(first, t).unwrap_or(0.0))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::SampleMeta;

    fn packet(shift: f64, amp: f64) -> Vec<f64> {
        (0..128)
            .map(|i| {
                let t = i as f64 - shift;
                amp * (-((t - 50.0) / 8.0).powi(2)).exp() * (0.4 * t).cos()
            })
            .collect()
    }

    fn matrix(cols: Vec<Vec<f64>>, id: u64) -> SampleMatrix {
        SampleMatrix::from_time_columns(&cols, SampleMeta { id, ..Default::default() }).unwrap()
    }

    fn bank() -> CalibrationBank {
        let und = matrix(vec![packet(0.0, 1.0), packet(3.0, 1.0)], 1);
        let echo: Vec<f64> = packet(40.0, 0.3);
        let dam_cols: Vec<Vec<f64>> = und
            .time_columns()
            .unwrap()
            .iter()
            .map(|c| c.iter().zip(&echo).map(|(a, b)| a + b).collect())
            .collect();
        CalibrationBank::new(matrix(dam_cols, 2), und).unwrap()
    }

    #[test]
    fn exact_matches_select_their_entry() {
        let b = bank();
        let s = StretchSearch::default();
        assert_eq!(select_calibration(&b.damaged, &b, &s).unwrap(), CalibrationChoice::Damaged);
        assert_eq!(select_calibration(&b.undamaged, &b, &s).unwrap(), CalibrationChoice::Undamaged);
        // Identical entries tie and resolve to undamaged.
        let tied = CalibrationBank::new(b.undamaged.clone(), b.undamaged.clone()).unwrap();
        assert_eq!(select_calibration(&b.undamaged, &tied, &s).unwrap(), CalibrationChoice::Undamaged);
    }

    #[test]
    fn small_echo_selects_undamaged() {
        let b = bank();
        let s = StretchSearch::default();
        let weak = packet(40.0, 0.05);
        let cols: Vec<Vec<f64>> = b
            .undamaged
            .time_columns()
            .unwrap()
            .iter()
            .map(|c| c.iter().zip(&weak).map(|(a, e)| a + e).collect())
            .collect();
        let test = matrix(cols, 3);
        // Oracle: residual energies against both entries, no stretching (γ = 1).
        let e_und = energy(&subtract_plain(&test, &b.undamaged).unwrap()).unwrap();
        let e_dam = energy(&subtract_plain(&test, &b.damaged).unwrap()).unwrap();
        assert!(e_und < e_dam);
        assert_eq!(select_calibration(&test, &b, &s).unwrap(), CalibrationChoice::Undamaged);
    }

    #[test]
    fn undamaged_residual_is_zero_and_damaged_is_the_echo() {
        let b = bank();
        let s = StretchSearch::default();
        let (r, _) = baseline_subtract(&b.undamaged, b.global_baseline(), &b, &s).unwrap();
        assert!(r.time_values().unwrap().iter().all(|v| *v == 0.0));
        let (r, choice) = baseline_subtract(&b.damaged, b.global_baseline(), &b, &s).unwrap();
        assert_eq!(choice, CalibrationChoice::Damaged);
        let echo = packet(40.0, 0.3);
        let expect: f64 = 2.0 * echo.iter().map(|v| v * v).sum::<f64>();
        assert!((energy(&r).unwrap() - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn correlation_sequence() {
        let a = packet(0.0, 1.0);
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        let c = measurement_correlation(&[a.clone(), a.clone(), neg]).unwrap();
        assert_eq!(c[0], 1.0);
        assert!((c[1] - 1.0).abs() < 1e-12);
        assert!((c[2] + 1.0).abs() < 1e-12);
        assert!(measurement_correlation(&[vec![1.0; 4], a]).is_err());
        assert!(measurement_correlation(&[]).is_err());
    }
}
