//! GWNN v1 network files.
//!
//! Little-endian layout: magic `GWNN`, u16 version, u32 total layer count,
//! u64 init seed, length-prefixed pipeline fingerprint, length-prefixed JSON
//! metadata (model kind, sub-network shapes and seeds, configuration), one
//! length-prefixed JSON spec block per layer, then per layer its parameter
//! and state blobs in declaration order as length-prefixed f32 arrays.

use serde::{Deserialize, Serialize};
use std::path::Path;

use super::bytes::{Reader, Writer};
use super::{read_bytes, write_atomic};
use crate::detector::LikelihoodModel;
use crate::error::{Error, Result};
use crate::neural::{LayerSpec, Sequential};
use crate::sigproc::Fingerprint;
use crate::vae::{Vae, VaeConfig};

pub const MAGIC: &[u8; 4] = b"GWNN";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct NetworkInfo {
    name: String,
    input_shape: Vec<usize>,
    init_seed: u64,
    layers: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Model {
    Vae {
        networks: Vec<NetworkInfo>,
        config: VaeConfig,
    },
    Likelihood {
        networks: Vec<NetworkInfo>,
        log_var_floor: f64,
        elements: usize,
    },
}

impl Model {
    fn networks(&self) -> &[NetworkInfo] {
        match self {
            Model::Vae { networks, .. } | Model::Likelihood { networks, .. } => networks,
        }
    }
}

fn info(name: &str, net: &Sequential) -> NetworkInfo {
    NetworkInfo {
        name: name.into(),
        input_shape: net.input_shape().to_vec(),
        init_seed: net.init_seed(),
        layers: net.layers().len(),
    }
}

fn encode(model: &Model, init_seed: u64, fingerprint: &Fingerprint, nets: &[&Sequential]) -> Result<Vec<u8>> {
    let mut w = Writer::default();
    w.bytes(MAGIC);
    w.u16(VERSION);
    w.len(nets.iter().map(|n| n.layers().len()).sum())?;
    w.u64(init_seed);
    w.block(fingerprint.0.as_bytes())?;
    w.block(&serde_json::to_vec(model)?)?;
    for layer in nets.iter().flat_map(|n| n.layers()) {
        w.block(&serde_json::to_vec(&layer.spec)?)?;
    }
    for layer in nets.iter().flat_map(|n| n.layers()) {
        for group in [&layer.params, &layer.state] {
            w.len(group.len())?;
            for blob in group {
                w.blob(blob)?;
            }
        }
    }
    Ok(w.buf)
}

struct Decoded {
    model: Model,
    init_seed: u64,
    fingerprint: Fingerprint,
    nets: Vec<Sequential>,
}

fn decode(bytes: &[u8]) -> Result<Decoded> {
    let mut r = Reader::new(bytes, "GWNN file");
    r.magic(MAGIC, VERSION)?;
    let total = r.u32()? as usize;
    let init_seed = r.u64()?;
    let fingerprint = Fingerprint(
        String::from_utf8(r.block()?.to_vec()).map_err(|_| Error::Format("GWNN fingerprint is not UTF-8".into()))?,
    );
    let model: Model = serde_json::from_slice(r.block()?).map_err(|e| Error::Format(format!("GWNN metadata: {e}")))?;
    let declared: usize = model.networks().iter().map(|n| n.layers).sum();
    if declared != total {
        return Err(Error::Format(format!("GWNN header counts {total} layers, metadata {declared}")));
    }
    let specs: Vec<LayerSpec> = (0..total)
        .map(|i| {
            serde_json::from_slice(r.block()?).map_err(|e| Error::Format(format!("GWNN layer {i} spec: {e}")))
        })
        .collect::<Result<_>>()?;
    let mut nets = Vec::new();
    let mut offset = 0;
    for n in model.networks() {
        let mut net = Sequential::build(&n.input_shape, &specs[offset..offset + n.layers], n.init_seed)
            .map_err(|e| Error::Format(format!("GWNN network {}: {e}", n.name)))?;
        for (i, layer) in net.layers_mut().iter_mut().enumerate() {
            let mut groups = Vec::with_capacity(2);
            for _ in 0..2 {
                let count = r.u32()? as usize;
                groups.push((0..count).map(|_| r.blob()).collect::<Result<Vec<_>>>()?);
            }
            let state = groups.pop().expect("two groups");
            let params = groups.pop().expect("two groups");
            layer
                .load(params, state)
                .map_err(|e| Error::Format(format!("GWNN network {} layer {i}: {e}", n.name)))?;
        }
        offset += n.layers;
        nets.push(net);
    }
    r.finish()?;
    Ok(Decoded {
        model,
        init_seed,
        fingerprint,
        nets,
    })
}

/// Encode one VAE ensemble member together with its pipeline fingerprint.
pub fn encode_vae(vae: &Vae, fingerprint: &Fingerprint) -> Result<Vec<u8>> {
    let names = ["encoder", "mu_head", "log_var_head", "decoder"];
    let nets = vae.networks();
    let model = Model::Vae {
        networks: names.iter().zip(nets).map(|(n, net)| info(n, net)).collect(),
        config: vae.config.clone(),
    };
    encode(&model, vae.init_seed, fingerprint, &nets)
}

pub fn decode_vae(bytes: &[u8]) -> Result<(Vae, Fingerprint)> {
    let d = decode(bytes)?;
    let Model::Vae { config, .. } = d.model else {
        return Err(Error::Format("GWNN file holds a likelihood model, expected a VAE".into()));
    };
    let nets: [Sequential; 4] = d
        .nets
        .try_into()
        .map_err(|_| Error::Format("GWNN VAE needs exactly four networks".into()))?;
    Ok((Vae::from_parts(config, d.init_seed, nets)?, d.fingerprint))
}

pub fn encode_likelihood(model: &LikelihoodModel) -> Result<Vec<u8>> {
    let meta = Model::Likelihood {
        networks: vec![info("localizer", &model.net)],
        log_var_floor: model.log_var_floor,
        elements: model.elements,
    };
    encode(&meta, model.net.init_seed(), &model.fingerprint, &[&model.net])
}

pub fn decode_likelihood(bytes: &[u8]) -> Result<LikelihoodModel> {
    let d = decode(bytes)?;
    let Model::Likelihood {
        log_var_floor, elements, ..
    } = d.model
    else {
        return Err(Error::Format("GWNN file holds a VAE, expected a likelihood model".into()));
    };
    let net = d.nets.into_iter().next().ok_or_else(|| Error::Format("GWNN file has no network".into()))?;
    Ok(LikelihoodModel {
        net,
        log_var_floor,
        fingerprint: d.fingerprint,
        elements,
    })
}

pub fn save_vae(path: &Path, vae: &Vae, fingerprint: &Fingerprint) -> Result<()> {
    write_atomic(path, &encode_vae(vae, fingerprint)?)
}

pub fn load_vae(path: &Path) -> Result<(Vae, Fingerprint)> {
    decode_vae(&read_bytes(path)?).map_err(|e| annotate(path, e))
}

pub fn save_likelihood(path: &Path, model: &LikelihoodModel) -> Result<()> {
    write_atomic(path, &encode_likelihood(model)?)
}

pub fn load_likelihood(path: &Path) -> Result<LikelihoodModel> {
    decode_likelihood(&read_bytes(path)?).map_err(|e| annotate(path, e))
}

fn annotate(path: &Path, e: Error) -> Error {
    match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    }
}
