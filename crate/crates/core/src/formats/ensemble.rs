//! Ensemble directories: `ensemble.json` plus one GWNN file per member.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use super::gwnn::{load_vae, save_vae};
use super::{read_bytes, read_json, write_atomic, write_json};
use crate::error::{Error, Result};
use crate::sigproc::Fingerprint;
use crate::vae::{member_seed, EnsembleModel, EpochRecord, TrainingLog, Vae, VaeConfig};

pub const MANIFEST: &str = "ensemble.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleManifest {
    pub format: String,
    pub n: usize,
    pub member_seeds: Vec<u64>,
    pub config_hash: String,
    pub fingerprint: String,
    pub members: Vec<String>,
    pub vae: VaeConfig,
}

pub fn member_file(index: usize) -> String {
    format!("member_{index:02}.gwnn")
}

pub fn member_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(member_file(index))
}

pub fn save_member(dir: &Path, index: usize, vae: &Vae, fingerprint: &Fingerprint) -> Result<()> {
    save_vae(&member_path(dir, index), vae, fingerprint)
}

/// Members already present in `dir` among indices `0..n`, for resuming.
/// A member trained under another pipeline fingerprint is an error.
pub fn load_members(dir: &Path, n: usize, expected: &Fingerprint) -> Result<Vec<(usize, Vae)>> {
    let mut out = Vec::new();
    for i in 0..n {
        let path = member_path(dir, i);
        if !path.exists() {
            continue;
        }
        let (vae, fp) = load_vae(&path)?;
        expected.ensure_matches(&fp)?;
        out.push((i, vae));
    }
    Ok(out)
}

pub fn save_ensemble(dir: &Path, ensemble: &EnsembleModel) -> Result<EnsembleManifest> {
    let mut members = Vec::with_capacity(ensemble.len());
    for (i, vae) in ensemble.members.iter().enumerate() {
        save_member(dir, i, vae, &ensemble.fingerprint)?;
        members.push(member_file(i));
    }
    let manifest = EnsembleManifest {
        format: "gwdetect ensemble v1".into(),
        n: ensemble.len(),
        member_seeds: ensemble.member_seeds.clone(),
        config_hash: ensemble.config_hash.clone(),
        fingerprint: ensemble.fingerprint.0.clone(),
        members,
        vae: ensemble.config.clone(),
    };
    write_json(&dir.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

pub fn load_ensemble(dir: &Path) -> Result<EnsembleModel> {
    let manifest: EnsembleManifest = read_json(&dir.join(MANIFEST))?;
    if manifest.members.len() != manifest.n || manifest.member_seeds.len() != manifest.n {
        return Err(Error::Format(format!("{}: member list does not match n = {}", dir.display(), manifest.n)));
    }
    let fingerprint = Fingerprint(manifest.fingerprint.clone());
    let mut members = Vec::with_capacity(manifest.n);
    for file in &manifest.members {
        let (vae, fp) = load_vae(&dir.join(file))?;
        fingerprint.ensure_matches(&fp)?;
        members.push(vae);
    }
    Ok(EnsembleModel {
        config: manifest.vae,
        members,
        member_seeds: manifest.member_seeds,
        fingerprint,
        config_hash: manifest.config_hash,
    })
}

/// Seeds of members `0..n` for a base seed, matching what training uses.
pub fn expected_seeds(base_seed: u64, n: usize) -> Vec<u64> {
    (0..n).map(|i| member_seed(base_seed, i)).collect()
}

/// CSV with columns epoch, member, train_elbo, val_elbo, sorted by member.
pub fn write_training_log(path: &Path, logs: &[TrainingLog]) -> Result<()> {
    let records: Vec<EpochRecord> = logs.iter().flat_map(|l| l.epochs.iter().copied()).collect();
    write_log_records(path, &records)
}

/// Write epoch records sorted by member, then epoch.
pub fn write_log_records(path: &Path, records: &[EpochRecord]) -> Result<()> {
    let mut records = records.to_vec();
    records.sort_by_key(|r| (r.member, r.epoch));
    let mut w = csv::Writer::from_writer(Vec::new());
    for rec in &records {
        w.serialize(rec).map_err(|e| Error::Format(format!("training log: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(format!("training log: {e}")))?;
    write_atomic(path, &bytes)
}

pub fn read_training_log(path: &Path) -> Result<Vec<EpochRecord>> {
    let bytes = read_bytes(path)?;
    csv::Reader::from_reader(bytes.as_slice())
        .deserialize()
        .map(|row| row.map_err(|e| Error::Format(format!("{}: {e}", path.display()))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> VaeConfig {
        VaeConfig {
            encoder_filters: [3, 4],
            hidden_units: 6,
            ..VaeConfig::standard(16, 2)
        }
    }

    #[test]
    fn ensemble_round_trip_and_resume_scan() {
        let dir = tempfile::tempdir().unwrap();
        let fp = Fingerprint("fp".into());
        let ens = EnsembleModel {
            config: tiny(),
            members: vec![Vae::new(tiny(), 3).unwrap(), Vae::new(tiny(), 4).unwrap()],
            member_seeds: vec![3, 4],
            fingerprint: fp.clone(),
            config_hash: "h".into(),
        };
        let m = save_ensemble(dir.path(), &ens).unwrap();
        assert_eq!(m.members, vec!["member_00.gwnn", "member_01.gwnn"]);
        let back = load_ensemble(dir.path()).unwrap();
        assert_eq!(back.member_seeds, vec![3, 4]);
        assert_eq!(back.members[1].init_seed, 4);
        std::fs::remove_file(member_path(dir.path(), 0)).unwrap();
        let present = load_members(dir.path(), 3, &fp).unwrap();
        assert_eq!(present.iter().map(|p| p.0).collect::<Vec<_>>(), vec![1]);
        let err = load_members(dir.path(), 3, &Fingerprint("other".into())).unwrap_err();
        assert!(matches!(err, Error::FingerprintMismatch { .. }));
    }

    #[test]
    fn log_columns() {
        let dir = tempfile::tempdir().unwrap();
        let log = TrainingLog {
            member: 1,
            initial_val_elbo: -3.0,
            epochs: vec![EpochRecord {
                epoch: 1,
                member: 1,
                train_elbo: -2.5,
                val_elbo: -2.0,
            }],
            steps: 4,
        };
        let path = dir.path().join("log.csv");
        write_training_log(&path, std::slice::from_ref(&log)).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "epoch,member,train_elbo,val_elbo\n1,1,-2.5,-2.0\n");
        assert_eq!(read_training_log(&path).unwrap(), log.epochs);
    }
}
