use serde::{Deserialize, Serialize};

use super::threshold::{classify, Threshold};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub sample_id: u64,
    pub tau: f64,
    pub decision: bool,
    pub label: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    #[serde(with = "lenient_f64")]
    pub threshold: f64,
    #[serde(with = "lenient_f64")]
    pub p_fa: f64,
    #[serde(with = "lenient_f64")]
    pub p_d: f64,
}

/// JSON has no infinities or NaN; those travel as strings.
mod lenient_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub damaged: usize,
    pub undamaged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub samples: Vec<ScoredSample>,
    pub tau_0: f64,
    /// `None` when there are no damaged samples.
    pub p_d: Option<f64>,
    /// `None` when there are no undamaged samples.
    pub p_fa: Option<f64>,
    pub damaged_count: usize,
    pub undamaged_count: usize,
    pub detections: usize,
    pub false_alarms: usize,
    pub roc: Vec<RocPoint>,
    pub auc: Option<f64>,
    pub histogram: Vec<HistogramBin>,
}

fn rate(hits: usize, total: usize) -> Option<f64> {
    (total > 0).then(|| hits as f64 / total as f64)
}

/// ROC over every distinct threshold, from (1, 1) down to (0, 0).
pub fn roc_curve(taus: &[f64], labels: &[bool]) -> Vec<RocPoint> {
    let pos = labels.iter().filter(|l| **l).count();
    let neg = labels.len() - pos;
    let mut thresholds: Vec<f64> = taus.to_vec();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let mut points = vec![RocPoint {
        threshold: f64::NEG_INFINITY,
        p_fa: 1.0,
        p_d: 1.0,
    }];
    for t in thresholds {
        let (mut d, mut f) = (0, 0);
        for (tau, l) in taus.iter().zip(labels) {
            if *tau >= t {
                if *l {
                    d += 1;
                } else {
                    f += 1;
                }
            }
        }
        points.push(RocPoint {
            threshold: t,
            p_fa: rate(f, neg).unwrap_or(f64::NAN),
            p_d: rate(d, pos).unwrap_or(f64::NAN),
        });
    }
    points.push(RocPoint {
        threshold: f64::INFINITY,
        p_fa: 0.0,
        p_d: 0.0,
    });
    points
}

/// Trapezoidal area under an ROC curve from [`roc_curve`].
pub fn auc(roc: &[RocPoint]) -> Option<f64> {
    if roc.iter().any(|p| p.p_d.is_nan() || p.p_fa.is_nan()) {
        return None;
    }
    Some(
        roc.windows(2)
            .map(|w| (w[0].p_fa - w[1].p_fa) * 0.5 * (w[0].p_d + w[1].p_d))
            .sum(),
    )
}

/// Best detection rate reachable with false-alarm rate at most `p_fa`.
pub fn p_d_at(roc: &[RocPoint], p_fa: f64) -> f64 {
    roc.iter().filter(|p| p.p_fa <= p_fa).map(|p| p.p_d).fold(0.0, f64::max)
}

/// Lowest false-alarm rate among thresholds detecting at least `p_d`.
pub fn p_fa_at(roc: &[RocPoint], p_d: f64) -> f64 {
    roc.iter().filter(|p| p.p_d >= p_d).map(|p| p.p_fa).fold(1.0, f64::min)
}

pub fn histogram(taus: &[f64], labels: &[bool], bins: usize) -> Vec<HistogramBin> {
    if taus.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = taus.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = taus.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|b| HistogramBin {
            lower: lo + b as f64 * width,
            upper: lo + (b + 1) as f64 * width,
            damaged: 0,
            undamaged: 0,
        })
        .collect();
    for (t, l) in taus.iter().zip(labels) {
        let b = (((t - lo) / width) as usize).min(bins - 1);
        if *l {
            out[b].damaged += 1;
        } else {
            out[b].undamaged += 1;
        }
    }
    out
}

/// Score labelled statistics `(sample_id, tau, label)` against a threshold.
pub fn evaluate(scored: &[(u64, f64, bool)], threshold: &Threshold, histogram_bins: usize) -> Result<DetectionReport> {
    if let Some((id, tau, _)) = scored.iter().find(|s| !s.1.is_finite()) {
        return Err(Error::NonFinite(format!("statistic of sample {id} is {tau}")));
    }
    let samples: Vec<ScoredSample> = scored
        .iter()
        .map(|(id, tau, label)| ScoredSample {
            sample_id: *id,
            tau: *tau,
            decision: classify(*tau, threshold),
            label: *label,
        })
        .collect();
    let damaged_count = samples.iter().filter(|s| s.label).count();
    let undamaged_count = samples.len() - damaged_count;
    let detections = samples.iter().filter(|s| s.label && s.decision).count();
    let false_alarms = samples.iter().filter(|s| !s.label && s.decision).count();
    let taus: Vec<f64> = samples.iter().map(|s| s.tau).collect();
    let labels: Vec<bool> = samples.iter().map(|s| s.label).collect();
    let roc = roc_curve(&taus, &labels);
    Ok(DetectionReport {
        tau_0: threshold.tau_0,
        p_d: rate(detections, damaged_count),
        p_fa: rate(false_alarms, undamaged_count),
        damaged_count,
        undamaged_count,
        detections,
        false_alarms,
        auc: auc(&roc),
        roc,
        histogram: histogram(&taus, &labels, histogram_bins),
        samples,
    })
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}
