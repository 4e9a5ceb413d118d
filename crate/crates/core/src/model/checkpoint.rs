//! Binary checkpoints.
//!
//! Layout (little-endian): magic `PCLS`, `u32` version, `u64` length of a
//! JSON header, the header (`{"model": ModelConfig, "meta": ...}`), `u32`
//! tensor count, then per tensor a `u16` name length, the name, a `u8` rank,
//! `u64` dims and the `f64` values in row-major order.

use super::net::{ModelConfig, Params};
use crate::dataset::write_atomic;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"PCLS";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    model: ModelConfig,
    meta: serde_json::Value,
}

pub fn encode_checkpoint(params: &Params, meta: &serde_json::Value) -> Vec<u8> {
    let header = serde_json::to_vec(&Header {
        model: params.config.clone(),
        meta: meta.clone(),
    })
    .expect("header serialises");
    let mut out = Vec::with_capacity(header.len() + 8 * params.num_values() + 256);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    let tensors = params.tensors();
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, shape, data) in tensors {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(shape.len() as u8);
        for &d in shape {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| {
                Error::Validation(format!(
                    "checkpoint truncated at byte {} (wanted {n} more)",
                    self.pos
                ))
            })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(Params, serde_json::Value)> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Validation(
            "not a checkpoint file (bad magic)".into(),
        ));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Validation(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let hlen = r.u64()? as usize;
    let header: Header = serde_json::from_slice(r.take(hlen)?)?;
    let mut params = Params::zeros(&header.model)?;
    let expected: Vec<(&'static str, Vec<usize>)> = params
        .tensors()
        .iter()
        .map(|(n, s, _)| (*n, s.to_vec()))
        .collect();
    let count = r.u32()? as usize;
    if count != expected.len() {
        return Err(Error::Validation(format!(
            "checkpoint holds {count} tensors, model needs {}",
            expected.len()
        )));
    }
    for ((name, shape), (_, dst)) in expected.iter().zip(params.tensors_mut()) {
        let n = r.u16()? as usize;
        let got = String::from_utf8_lossy(r.take(n)?).into_owned();
        let rank = r.u8()? as usize;
        let dims = (0..rank)
            .map(|_| r.u64().map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        if got != *name || dims != *shape {
            return Err(Error::Validation(format!(
                "checkpoint tensor {got} {dims:?} does not match {name} {shape:?}"
            )));
        }
        for v in dst.iter_mut() {
            *v = f64::from_le_bytes(r.take(8)?.try_into().unwrap());
        }
    }
    if r.pos != bytes.len() {
        return Err(Error::Validation(format!(
            "{} trailing bytes after checkpoint",
            bytes.len() - r.pos
        )));
    }
    Ok((params, header.meta))
}

pub fn save_checkpoint(path: &Path, params: &Params, meta: &serde_json::Value) -> Result<()> {
    write_atomic(path, &encode_checkpoint(params, meta))
}

pub fn load_checkpoint(path: &Path) -> Result<(Params, serde_json::Value)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
