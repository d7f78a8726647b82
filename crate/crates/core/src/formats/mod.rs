//! On-disk formats: GWDS sample files, GWNN network files, dataset and
//! ensemble manifests, training logs and detection reports.

mod bytes;
pub mod dataset;
pub mod ensemble;
pub mod gwds;
pub mod gwnn;
pub mod report;

pub use dataset::{load_set, save_set, SetEntry, SetManifest};
pub use ensemble::{
    load_ensemble, load_members, read_training_log, save_ensemble, save_member, write_log_records, write_training_log,
    EnsembleManifest,
};
pub use gwds::{decode_sample, encode_sample, read_sample, write_sample};
pub use gwnn::{decode_likelihood, decode_vae, encode_likelihood, encode_vae, load_likelihood, load_vae, save_likelihood, save_vae};
pub use report::{read_report_csv, write_report, ReportRow, ReportSummary};

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Write through a sibling temporary file so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingInput(format!("{} does not exist", path.display())),
        _ => Error::io(path, e),
    })
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}
