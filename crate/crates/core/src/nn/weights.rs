//! `EATW` weights file.
//!
//! Layout (little-endian):
//!
//! ```text
//! "EATW"            4 bytes
//! version           u16 (= 1)
//! config            u32 byte length + JSON-encoded ModelConfig
//! n_params          u32
//!   per tensor:     u16 name length + name, u8 rank, u32 dims[rank], f64 data
//! n_buffers         u32, same per-tensor layout
//! has_input_norm    u8; if 1: u32 channels, f64 mean[channels], f64 std[channels]
//! ```
//!
//! Tensors appear in declared parameter order.

use std::path::Path;

use super::{InputNorm, ModelConfig, ModelParams, ParamTensor};
use crate::binio::{read_file, write_file, Reader, Writer};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"EATW";
pub const VERSION: u16 = 1;

fn put_tensors(w: &mut Writer, ts: &[ParamTensor]) -> Result<()> {
    w.u32(ts.len() as u32);
    for t in ts {
        w.short_str(&t.name)?;
        w.u8(t.shape.len() as u8);
        for &d in &t.shape {
            w.u32(d as u32);
        }
        for &v in &t.data {
            w.f64(v);
        }
    }
    Ok(())
}

fn get_tensors(r: &mut Reader<'_>) -> Result<Vec<ParamTensor>> {
    let n = r.u32("tensor count")? as usize;
    let mut out = Vec::with_capacity(n.min(4096));
    for _ in 0..n {
        let name = r.short_str("tensor name")?;
        let rank = r.u8("rank")? as usize;
        let shape = (0..rank)
            .map(|_| r.u32("dim").map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let len = shape.iter().product();
        let data = r.f64_array(len, &name)?;
        out.push(ParamTensor { name, shape, data });
    }
    Ok(out)
}

pub fn to_bytes(params: &ModelParams) -> Result<Vec<u8>> {
    let mut w = Writer::new();
    w.bytes(MAGIC);
    w.u16(VERSION);
    let cfg = serde_json::to_vec(&params.config)?;
    w.u32(cfg.len() as u32);
    w.bytes(&cfg);
    put_tensors(&mut w, &params.params)?;
    put_tensors(&mut w, &params.buffers)?;
    match &params.input_norm {
        None => w.u8(0),
        Some(n) => {
            w.u8(1);
            w.u32(n.mean.len() as u32);
            n.mean.iter().for_each(|&v| w.f64(v));
            n.std.iter().for_each(|&v| w.f64(v));
        }
    }
    Ok(w.into_inner())
}

pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<ModelParams> {
    let mut r = Reader::new(bytes, path);
    r.magic(MAGIC)?;
    r.version(VERSION)?;
    let cfg_len = r.u32("config length")? as usize;
    let config: ModelConfig = serde_json::from_slice(r.take(cfg_len, "config")?)?;
    config.validate()?;
    let params = get_tensors(&mut r)?;
    let buffers = get_tensors(&mut r)?;
    let input_norm = match r.u8("normalization flag")? {
        0 => None,
        1 => {
            let n = r.u32("normalization channels")? as usize;
            Some(InputNorm {
                mean: r.f64_array(n, "normalization mean")?,
                std: r.f64_array(n, "normalization std")?,
            })
        }
        other => {
            return Err(Error::Data(format!(
                "{}: invalid normalization flag {other}",
                path.display()
            )))
        }
    };
    r.finish()?;
    let p = ModelParams {
        config,
        params,
        buffers,
        input_norm,
    };
    p.check_layout()?;
    Ok(p)
}

pub fn write_weights(params: &ModelParams, path: &Path) -> Result<()> {
    write_file(path, &to_bytes(params)?)
}

pub fn read_weights(path: &Path) -> Result<ModelParams> {
    from_bytes(&read_file(path)?, path)
}
