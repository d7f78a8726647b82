use crate::error::Result;
use crate::sample::{SampleMatrix, SampleValues};

/// Whether standardization had a usable scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Normal,
    /// Constant input; the output is all zeros.
    Degenerate,
}

/// Z-score over all entries using the population variance.
pub fn standardize_values(values: &[f64]) -> (Vec<f64>, Scale) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (Vec::new(), Scale::Degenerate);
    }
    let rough = values.iter().sum::<f64>() / n;
    // A second pass removes the rounding left in the first mean under large offsets.
    let mean = rough + values.iter().map(|v| v - rough).sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var <= 0.0 || !var.is_finite() {
        return (vec![0.0; values.len()], Scale::Degenerate);
    }
    let std = var.sqrt();
    (values.iter().map(|v| (v - mean) / std).collect(), Scale::Normal)
}

/// Per-sample standardization over all `Q·M` entries of a time-domain sample.
pub fn standardize(sample: &SampleMatrix) -> Result<(SampleMatrix, Scale)> {
    let (values, scale) = standardize_values(sample.time_values()?);
    let out = SampleMatrix::new(sample.q(), sample.m(), SampleValues::Time(values), sample.meta.clone())?;
    Ok((out, scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_values() {
        let (v, s) = standardize_values(&[1.0, 2.0, 3.0]);
        assert_eq!(s, Scale::Normal);
        let e = 1.224_744_871_391_589;
        assert!((v[0] + e).abs() < 1e-12 && v[1].abs() < 1e-15 && (v[2] - e).abs() < 1e-12);
    }

    #[test]
    fn constant_flags_degenerate() {
        let (v, s) = standardize_values(&[4.0; 5]);
        assert_eq!(s, Scale::Degenerate);
        assert!(v.iter().all(|x| *x == 0.0));
    }

    proptest! {
        #[test]
        fn moments_scale_invariance_and_idempotence(
            v in prop::collection::vec(-1e3f64..1e3, 8..64),
            c in 1e-3f64..1e3,
        ) {
            let (z, s) = standardize_values(&v);
            prop_assume!(s == Scale::Normal);
            let n = z.len() as f64;
            let mean = z.iter().sum::<f64>() / n;
            let var = z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!((var - 1.0).abs() < 1e-6);
            let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
            let (zs, _) = standardize_values(&scaled);
            for (a, b) in z.iter().zip(&zs) {
                prop_assert!((a - b).abs() < 1e-9);
            }
            let (again, _) = standardize_values(&z);
            for (a, b) in z.iter().zip(&again) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
