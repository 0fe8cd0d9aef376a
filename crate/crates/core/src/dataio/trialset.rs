//! Epoched trials and the `EEGT` container.
//!
//! Layout (little-endian):
//!
//! ```text
//! "EEGT"          4 bytes
//! version         u16 (= 1)
//! n_trials        u32
//! n_channels      u16
//! n_samples       u32
//! fs              f32
//! n_classes       u16
//! channel names   n_channels × (u16 byte length + UTF-8)
//! labels          u16[n_trials]
//! payload         f32[n_trials · n_channels · n_samples], trial-major
//! ```

use std::path::Path;

use crate::binio::{read_file, write_file, Reader, Writer};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"EEGT";
pub const VERSION: u16 = 1;

/// Trials × channels × samples, stored flat in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSet {
    pub data: Vec<f64>,
    pub labels: Vec<usize>,
    pub channel_names: Vec<String>,
    pub sampling_rate: f64,
    pub n_classes: usize,
    pub n_samples: usize,
}

impl TrialSet {
    pub fn new(
        data: Vec<f64>,
        labels: Vec<usize>,
        channel_names: Vec<String>,
        sampling_rate: f64,
        n_classes: usize,
        n_samples: usize,
    ) -> Result<Self> {
        let t = Self {
            data,
            labels,
            channel_names,
            sampling_rate,
            n_classes,
            n_samples,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_classes == 0 {
            return Err(Error::Config("trial set needs at least one class".into()));
        }
        if !(self.sampling_rate.is_finite() && self.sampling_rate > 0.0) {
            return Err(Error::Data(format!("invalid sampling rate {}", self.sampling_rate)));
        }
        let expected = self.labels.len() * self.n_channels() * self.n_samples;
        if self.data.len() != expected {
            return Err(Error::Data(format!(
                "trial data has {} values, expected {} trials × {} channels × {} samples = {expected}",
                self.data.len(),
                self.labels.len(),
                self.n_channels(),
                self.n_samples
            )));
        }
        if let Some(&label) = self.labels.iter().find(|&&l| l >= self.n_classes) {
            return Err(Error::LabelOutOfRange {
                label,
                n_classes: self.n_classes,
            });
        }
        Ok(())
    }

    pub fn n_trials(&self) -> usize {
        self.labels.len()
    }

    pub fn n_channels(&self) -> usize {
        self.channel_names.len()
    }

    pub fn trial_len(&self) -> usize {
        self.n_channels() * self.n_samples
    }

    /// `[n_channels × n_samples]` block of trial `i`.
    pub fn trial(&self, i: usize) -> &[f64] {
        let n = self.trial_len();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn trial_mut(&mut self, i: usize) -> &mut [f64] {
        let n = self.trial_len();
        &mut self.data[i * n..(i + 1) * n]
    }

    /// Trials at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> TrialSet {
        let mut data = Vec::with_capacity(indices.len() * self.trial_len());
        for &i in indices {
            data.extend_from_slice(self.trial(i));
        }
        TrialSet {
            data,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            channel_names: self.channel_names.clone(),
            sampling_rate: self.sampling_rate,
            n_classes: self.n_classes,
            n_samples: self.n_samples,
        }
    }

    /// Number of trials per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }
}

fn narrow<T: TryFrom<usize>>(v: usize, what: &str) -> Result<T> {
    T::try_from(v).map_err(|_| Error::Data(format!("{what} = {v} does not fit the container field")))
}

pub fn trialset_to_bytes(t: &TrialSet) -> Result<Vec<u8>> {
    t.validate()?;
    let mut w = Writer::new();
    w.bytes(MAGIC);
    w.u16(VERSION);
    w.u32(narrow(t.n_trials(), "n_trials")?);
    w.u16(narrow(t.n_channels(), "n_channels")?);
    w.u32(narrow(t.n_samples, "n_samples")?);
    w.f32(t.sampling_rate as f32);
    w.u16(narrow(t.n_classes, "n_classes")?);
    for name in &t.channel_names {
        w.short_str(name)?;
    }
    for &l in &t.labels {
        w.u16(l as u16);
    }
    for &v in &t.data {
        w.f32(v as f32);
    }
    Ok(w.into_inner())
}

pub fn trialset_from_bytes(bytes: &[u8], path: &Path) -> Result<TrialSet> {
    let mut r = Reader::new(bytes, path);
    r.magic(MAGIC)?;
    r.version(VERSION)?;
    let n_trials = r.u32("n_trials")? as usize;
    let n_channels = r.u16("n_channels")? as usize;
    let n_samples = r.u32("n_samples")? as usize;
    let fs = r.f32("sampling rate")? as f64;
    let n_classes = r.u16("n_classes")? as usize;
    let channel_names = (0..n_channels)
        .map(|_| r.short_str("channel name"))
        .collect::<Result<Vec<_>>>()?;
    let labels = (0..n_trials)
        .map(|_| r.u16("label").map(usize::from))
        .collect::<Result<Vec<_>>>()?;
    let payload = n_trials
        .checked_mul(n_channels)
        .and_then(|v| v.checked_mul(n_samples))
        .ok_or_else(|| Error::Data(format!("{}: declared dimensions overflow", path.display())))?;
    let data = r.f32_array(payload, "payload")?;
    r.finish()?;
    TrialSet::new(data, labels, channel_names, fs, n_classes, n_samples)
}

pub fn write_trialset(t: &TrialSet, path: &Path) -> Result<()> {
    write_file(path, &trialset_to_bytes(t)?)
}

pub fn read_trialset(path: &Path) -> Result<TrialSet> {
    trialset_from_bytes(&read_file(path)?, path)
}
