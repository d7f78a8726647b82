//! GWDS v1 sample files.
//!
//! Little-endian layout: magic `GWDS`, u16 version, u8 domain tag, u8 damage
//! flag, u32 Q, u32 M, u64 seed, f32 gamma summary, then the Q·M values as
//! f32 in row-major order. Frequency-domain samples store interleaved re/im
//! pairs. Ids, per-path gammas and damage locations live in the manifest.

use num_complex::Complex64;
use std::path::Path;

use super::bytes::{Reader, Writer};
use super::{read_bytes, write_atomic};
use crate::error::{Error, Result};
use crate::sample::{Domain, SampleMatrix, SampleMeta, SampleValues};

pub const MAGIC: &[u8; 4] = b"GWDS";
pub const VERSION: u16 = 1;

pub fn encode_sample(sample: &SampleMatrix) -> Result<Vec<u8>> {
    let mut w = Writer::default();
    w.bytes(MAGIC);
    w.u16(VERSION);
    w.u8(sample.domain().tag());
    w.u8(u8::from(sample.meta.damaged));
    w.len(sample.q())?;
    w.len(sample.m())?;
    w.u64(sample.meta.seed);
    w.f32(sample.meta.gamma_summary() as f32);
    match sample.values() {
        SampleValues::Time(v) => v.iter().for_each(|x| w.f32(*x as f32)),
        SampleValues::Frequency(v) => v.iter().for_each(|c| {
            w.f32(c.re as f32);
            w.f32(c.im as f32);
        }),
    }
    Ok(w.buf)
}

/// Decode a sample. The returned meta carries the header fields only; the
/// gamma list holds the single stored summary.
pub fn decode_sample(bytes: &[u8]) -> Result<SampleMatrix> {
    let mut r = Reader::new(bytes, "GWDS file");
    r.magic(MAGIC, VERSION)?;
    let domain = Domain::from_tag(r.u8()?)?;
    let damaged = match r.u8()? {
        0 => false,
        1 => true,
        other => return Err(Error::Format(format!("GWDS damage flag {other} is not 0 or 1"))),
    };
    let q = r.u32()? as usize;
    let m = r.u32()? as usize;
    let seed = r.u64()?;
    let gamma = r.f32()? as f64;
    let n = q.checked_mul(m).ok_or_else(|| Error::Format("GWDS shape overflows".into()))?;
    let values = match domain {
        Domain::Time => SampleValues::Time((0..n).map(|_| r.f32().map(f64::from)).collect::<Result<_>>()?),
        Domain::Frequency => SampleValues::Frequency(
            (0..n)
                .map(|_| Ok(Complex64::new(r.f32()? as f64, r.f32()? as f64)))
                .collect::<Result<_>>()?,
        ),
    };
    r.finish()?;
    let meta = SampleMeta {
        id: 0,
        seed,
        gammas: vec![gamma],
        damaged,
        damage_location: None,
    };
    SampleMatrix::new(q, m, values, meta)
}

pub fn write_sample(path: &Path, sample: &SampleMatrix) -> Result<()> {
    write_atomic(path, &encode_sample(sample)?)
}

pub fn read_sample(path: &Path) -> Result<SampleMatrix> {
    decode_sample(&read_bytes(path)?).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}
