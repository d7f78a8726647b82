//! A directory of GWDS files plus a `manifest.json` describing them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

use super::gwds::{read_sample, write_sample};
use super::{read_json, write_json};
use crate::error::{Error, Result};
use crate::sample::SampleMatrix;
use crate::wave_sim::Point;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetEntry {
    pub file: String,
    pub id: u64,
    pub seed: u64,
    pub damaged: bool,
    pub gammas: Vec<f64>,
    pub damage_location: Option<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetManifest {
    pub format: String,
    pub name: String,
    pub config_hash: String,
    /// Preprocessing fingerprint the set is meant to be used with.
    pub fingerprint: String,
    pub seed: u64,
    pub samples: Vec<SetEntry>,
}

impl SetManifest {
    pub fn labels(&self) -> Vec<(u64, bool)> {
        self.samples.iter().map(|e| (e.id, e.damaged)).collect()
    }
}

/// Write `samples` as `<dir>/sample_NNNNNN.gwds` and the manifest.
pub fn save_set(
    dir: &Path,
    name: &str,
    samples: &[SampleMatrix],
    config_hash: &str,
    fingerprint: &str,
    seed: u64,
) -> Result<SetManifest> {
    let entries: Vec<SetEntry> = samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let file = format!("sample_{i:06}.gwds");
            write_sample(&dir.join(&file), s)?;
            Ok(SetEntry {
                file,
                id: s.meta.id,
                seed: s.meta.seed,
                damaged: s.meta.damaged,
                gammas: s.meta.gammas.clone(),
                damage_location: s.meta.damage_location,
            })
        })
        .collect::<Result<_>>()?;
    let manifest = SetManifest {
        format: "GWDS v1".into(),
        name: name.into(),
        config_hash: config_hash.into(),
        fingerprint: fingerprint.into(),
        seed,
        samples: entries,
    };
    write_json(&dir.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

/// Read a set back, restoring ids, gammas and locations from the manifest.
pub fn load_set(dir: &Path) -> Result<(SetManifest, Vec<SampleMatrix>)> {
    let manifest: SetManifest = read_json(&dir.join(MANIFEST))?;
    if manifest.format != "GWDS v1" {
        return Err(Error::Format(format!("{}: unknown dataset format {:?}", dir.display(), manifest.format)));
    }
    let samples = manifest
        .samples
        .par_iter()
        .map(|e| {
            let mut s = read_sample(&dir.join(&e.file))?;
            if s.meta.damaged != e.damaged || s.meta.seed != e.seed {
                return Err(Error::Format(format!("{}: header disagrees with manifest", e.file)));
            }
            s.meta.id = e.id;
            s.meta.gammas = e.gammas.clone();
            s.meta.damage_location = e.damage_location;
            Ok(s)
        })
        .collect::<Result<_>>()?;
    Ok((manifest, samples))
}
