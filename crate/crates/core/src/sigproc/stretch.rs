use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

const OVERSAMPLE: usize = 8;

/// Grid of candidate stretch factors `1 ± half_range`, always containing 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StretchSearch {
    pub half_range: f64,
    pub points: usize,
}

impl Default for StretchSearch {
    fn default() -> Self {
        Self {
            half_range: 0.03,
            points: 61,
        }
    }
}

impl StretchSearch {
    pub fn validate(&self) -> Result<()> {
        ensure(self.half_range >= 0.0 && self.half_range < 0.5, || {
            format!("stretch half range {} out of [0, 0.5)", self.half_range)
        })?;
        ensure(self.points >= 1 && self.points % 2 == 1, || {
            "stretch grid needs an odd number of points so that 1.0 is on it".into()
        })
    }

    /// Factors with 1.0 first, then the rest in ascending order.
    pub fn factors(&self) -> Vec<f64> {
        let half = (self.points / 2) as i64;
        let mut out = vec![1.0];
        for i in -half..=half {
            if i != 0 {
                out.push(1.0 + self.half_range * i as f64 / half as f64);
            }
        }
        out
    }

    pub fn step(&self) -> f64 {
        if self.points <= 1 {
            0.0
        } else {
            self.half_range / (self.points / 2) as f64
        }
    }
}

/// Band-limited interpolant of a trace: FFT oversampling followed by cubic
/// interpolation on the dense grid.
pub struct Interpolant {
    len: usize,
    dense: Vec<f64>,
}

impl Interpolant {
    pub fn new(trace: &[f64]) -> Self {
        let n = trace.len();
        if n < 4 {
            return Self {
                len: n,
                dense: trace.to_vec(),
            };
        }
        let big = n * OVERSAMPLE;
        let mut planner = FftPlanner::new();
        let mut spec: Vec<Complex64> = trace.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        planner.plan_fft_forward(n).process(&mut spec);
        let mut padded = vec![Complex64::new(0.0, 0.0); big];
        let half = n / 2;
        for k in 0..n {
            if n.is_multiple_of(2) && k == half {
                padded[half] += spec[k] * 0.5;
                padded[big - half] += spec[k] * 0.5;
            } else if k < half || (n % 2 == 1 && k == half) {
                padded[k] = spec[k];
            } else {
                padded[big - (n - k)] = spec[k];
            }
        }
        planner.plan_fft_inverse(big).process(&mut padded);
        let dense = padded.into_iter().map(|v| v.re / n as f64).collect();
        Self { len: n, dense }
    }

    /// Value at fractional sample position `u`; zero outside `[0, len − 1]`.
    pub fn at(&self, u: f64) -> f64 {
        if !(0.0..=(self.len as f64 - 1.0)).contains(&u) {
            return 0.0;
        }
        if self.dense.len() == self.len {
            // Too short to oversample: linear interpolation.
            let i = u.floor() as usize;
            let f = u - i as f64;
            let next = self.dense.get(i + 1).copied().unwrap_or(self.dense[i]);
            return self.dense[i] * (1.0 - f) + next * f;
        }
        let pos = u * OVERSAMPLE as f64;
        let i = pos.floor() as isize;
        let f = pos - i as f64;
        let len = self.dense.len() as isize;
        let y = |k: isize| self.dense[k.rem_euclid(len) as usize];
        let (p0, p1, p2, p3) = (y(i - 1), y(i), y(i + 1), y(i + 2));
        // Catmull-Rom.
        p1 + 0.5
            * f
            * (p2 - p0 + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + f * (3.0 * (p1 - p2) + p3 - p0)))
    }

    /// `out[n] = x(n / factor)`: features at time `t` move to `factor · t`.
    pub fn stretched(&self, factor: f64) -> Vec<f64> {
        (0..self.len).map(|n| self.at(n as f64 / factor)).collect()
    }
}

/// Stretch a trace in time by `factor`, zero-padding at the end.
pub fn resample(trace: &[f64], factor: f64) -> Vec<f64> {
    if factor == 1.0 {
        return trace.to_vec();
    }
    Interpolant::new(trace).stretched(factor)
}

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    (saa > 0.0 && sbb > 0.0).then(|| sab / (saa * sbb).sqrt())
}

/// Outcome of a stretch search.
#[derive(Debug, Clone, PartialEq)]
pub struct Stretched {
    pub trace: Vec<f64>,
    /// The test trace is modelled as the reference stretched by this factor.
    pub factor: f64,
    pub correlation: f64,
}

/// Find the factor `f` on the search grid whose compensated trace
/// `test(f · t)` correlates best with `reference`, and return that trace.
pub fn scale_stretch(test: &[f64], reference: &[f64], search: &StretchSearch) -> Result<Stretched> {
    search.validate()?;
    if test.len() != reference.len() {
        return Err(Error::ShapeMismatch(format!(
            "test trace has {} samples, reference {}",
            test.len(),
            reference.len()
        )));
    }
    ensure(pearson(reference, reference).is_some(), || {
        "reference trace is flat (zero variance)".into()
    })?;
    let interp = Interpolant::new(test);
    let mut best: Option<Stretched> = None;
    for f in search.factors() {
        let trace = if f == 1.0 { test.to_vec() } else { interp.stretched(1.0 / f) };
        let correlation = pearson(&trace, reference).unwrap_or(0.0);
        if best.as_ref().is_none_or(|b| correlation > b.correlation) {
            best = Some(Stretched {
                trace,
                factor: f,
                correlation,
            });
        }
    }
    Ok(best.expect("grid is never empty"))
}
