//! Detection reports: per-sample CSV, JSON summary, and the histogram and
//! ROC point tables used for plotting.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use super::{read_bytes, write_atomic, write_json};
use crate::detector::{DetectionReport, HistogramBin, RocPoint, Threshold};
use crate::error::{Error, Result};

/// One CSV row. `label` is empty when the ground truth is unknown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub sample_id: u64,
    pub tau: f64,
    pub decision: String,
    pub label: String,
}

pub const DAMAGED: &str = "damaged";
pub const UNDAMAGED: &str = "undamaged";

pub fn label_text(damaged: bool) -> &'static str {
    if damaged {
        DAMAGED
    } else {
        UNDAMAGED
    }
}

pub fn parse_label(text: &str) -> Result<Option<bool>> {
    match text {
        DAMAGED => Ok(Some(true)),
        UNDAMAGED => Ok(Some(false)),
        "" => Ok(None),
        other => Err(Error::Format(format!("unknown label {other:?}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub method: String,
    pub tau_0: f64,
    pub p_d: Option<f64>,
    pub p_fa: Option<f64>,
    pub auc: Option<f64>,
    pub damaged_count: usize,
    pub undamaged_count: usize,
    pub detections: usize,
    pub false_alarms: usize,
    pub threshold: Threshold,
    pub config_hash: String,
    pub fingerprint: String,
    pub roc: Vec<RocPoint>,
    pub histogram: Vec<HistogramBin>,
}

impl ReportSummary {
    pub fn new(method: &str, report: &DetectionReport, threshold: &Threshold, config_hash: &str, fingerprint: &str) -> Self {
        Self {
            method: method.into(),
            tau_0: report.tau_0,
            p_d: report.p_d,
            p_fa: report.p_fa,
            auc: report.auc,
            damaged_count: report.damaged_count,
            undamaged_count: report.undamaged_count,
            detections: report.detections,
            false_alarms: report.false_alarms,
            threshold: threshold.clone(),
            config_hash: config_hash.into(),
            fingerprint: fingerprint.into(),
            roc: report.roc.clone(),
            histogram: report.histogram.clone(),
        }
    }
}

pub fn report_paths(dir: &Path, stem: &str) -> [PathBuf; 4] {
    [
        dir.join(format!("{stem}.csv")),
        dir.join(format!("{stem}.json")),
        dir.join(format!("{stem}_histogram.csv")),
        dir.join(format!("{stem}_roc.csv")),
    ]
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>, header: &[&str]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let fail = |e: csv::Error| Error::Format(format!("csv: {e}"));
    w.write_record(header).map_err(fail)?;
    for r in rows {
        w.serialize(r).map_err(fail)?;
    }
    w.into_inner().map_err(|e| Error::Format(format!("csv: {e}")))
}

/// Write `<stem>.csv`, `<stem>.json`, `<stem>_histogram.csv` and `<stem>_roc.csv`.
/// `labels` holds the known label of each scored sample, if any.
pub fn write_report(
    dir: &Path,
    stem: &str,
    report: &DetectionReport,
    labels: &[Option<bool>],
    summary: &ReportSummary,
) -> Result<[PathBuf; 4]> {
    if labels.len() != report.samples.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} labels for {} samples",
            labels.len(),
            report.samples.len()
        )));
    }
    let paths = report_paths(dir, stem);
    let rows = report.samples.iter().zip(labels).map(|(s, l)| ReportRow {
        sample_id: s.sample_id,
        tau: s.tau,
        decision: label_text(s.decision).into(),
        label: l.map(label_text).unwrap_or_default().into(),
    });
    write_atomic(&paths[0], &csv_bytes(rows, &["sample_id", "tau", "decision", "label"])?)?;
    write_json(&paths[1], summary)?;
    write_atomic(
        &paths[2],
        &csv_bytes(
            report.histogram.iter().map(|b| (b.lower, b.upper, b.damaged, b.undamaged)),
            &["lower", "upper", "damaged", "undamaged"],
        )?,
    )?;
    write_atomic(
        &paths[3],
        &csv_bytes(
            report.roc.iter().map(|p| (p.threshold, p.p_fa, p.p_d)),
            &["threshold", "p_fa", "p_d"],
        )?,
    )?;
    Ok(paths)
}

pub fn read_report_csv(path: &Path) -> Result<Vec<ReportRow>> {
    let bytes = read_bytes(path)?;
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Format(format!("{}: {e}", path.display()))))
        .collect()
}
