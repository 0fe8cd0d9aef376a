//! `EEGR` container for continuous recordings.
//!
//! Layout (little-endian):
//!
//! ```text
//! "EEGR"          4 bytes
//! version         u16 (= 1)
//! n_channels      u16
//! n_samples       u32
//! fs              f32
//! channel names   n_channels × (u16 byte length + UTF-8)
//! n_markers       u32
//! markers         n_markers × (u32 sample, u16 label)
//! payload         f32[n_channels · n_samples], channel-major
//! ```

use std::path::Path;

use crate::binio::{read_file, write_file, Reader, Writer};
use crate::dsp::{Marker, RawRecording};
use crate::error::{Error, Result};

pub const RAW_MAGIC: &[u8; 4] = b"EEGR";
pub const RAW_VERSION: u16 = 1;

fn fits<T: TryFrom<usize>>(v: usize, what: &str) -> Result<T> {
    T::try_from(v).map_err(|_| Error::Data(format!("{what} = {v} does not fit the container field")))
}

pub fn recording_to_bytes(rec: &RawRecording) -> Result<Vec<u8>> {
    rec.validate()?;
    let mut w = Writer::new();
    w.bytes(RAW_MAGIC);
    w.u16(RAW_VERSION);
    w.u16(fits(rec.n_channels(), "n_channels")?);
    w.u32(fits(rec.n_samples, "n_samples")?);
    w.f32(rec.sampling_rate as f32);
    for n in &rec.channel_names {
        w.short_str(n)?;
    }
    w.u32(fits(rec.markers.len(), "n_markers")?);
    for m in &rec.markers {
        w.u32(fits(m.sample, "marker sample")?);
        w.u16(fits(m.label, "marker label")?);
    }
    for &v in &rec.data {
        w.f32(v as f32);
    }
    Ok(w.into_inner())
}

pub fn recording_from_bytes(bytes: &[u8], path: &Path) -> Result<RawRecording> {
    let mut r = Reader::new(bytes, path);
    r.magic(RAW_MAGIC)?;
    r.version(RAW_VERSION)?;
    let n_channels = r.u16("n_channels")? as usize;
    let n_samples = r.u32("n_samples")? as usize;
    let fs = r.f32("sampling rate")? as f64;
    let names = (0..n_channels)
        .map(|_| r.short_str("channel name"))
        .collect::<Result<Vec<_>>>()?;
    let n_markers = r.u32("n_markers")? as usize;
    let mut markers = Vec::with_capacity(n_markers.min(r.remaining() / 6));
    for _ in 0..n_markers {
        let sample = r.u32("marker sample")? as usize;
        let label = r.u16("marker label")? as usize;
        markers.push(Marker { sample, label });
    }
    let payload = n_channels
        .checked_mul(n_samples)
        .ok_or_else(|| Error::Data(format!("{}: declared dimensions overflow", r.path().display())))?;
    let data = r.f32_array(payload, "payload")?;
    r.finish()?;
    RawRecording::new(data, n_samples, fs, names, markers)
}

pub fn write_recording(rec: &RawRecording, path: &Path) -> Result<()> {
    write_file(path, &recording_to_bytes(rec)?)
}

pub fn read_recording(path: &Path) -> Result<RawRecording> {
    recording_from_bytes(&read_file(path)?, path)
}
