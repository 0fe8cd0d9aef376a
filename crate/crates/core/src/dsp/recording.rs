use serde::{Deserialize, Serialize};

use super::filter::{design_butterworth_lowpass, filtfilt, SosFilter};
use crate::error::{Error, Result};

/// Event marker: sample index of the trial onset and its class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Marker {
    pub sample: usize,
    pub label: usize,
}

/// Continuous multichannel recording in microvolts, channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecording {
    pub data: Vec<f64>,
    pub n_samples: usize,
    pub sampling_rate: f64,
    pub channel_names: Vec<String>,
    pub markers: Vec<Marker>,
}

/// Order of the anti-alias low-pass used by [`downsample`].
pub const ANTI_ALIAS_ORDER: usize = 8;
/// Anti-alias cutoff as a fraction of the target rate.
pub const ANTI_ALIAS_FRACTION: f64 = 0.4;

impl RawRecording {
    pub fn new(
        data: Vec<f64>,
        n_samples: usize,
        sampling_rate: f64,
        channel_names: Vec<String>,
        markers: Vec<Marker>,
    ) -> Result<Self> {
        let r = Self {
            data,
            n_samples,
            sampling_rate,
            channel_names,
            markers,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sampling_rate.is_finite() && self.sampling_rate > 0.0) {
            return Err(Error::Data(format!("invalid sampling rate {}", self.sampling_rate)));
        }
        if self.data.len() != self.n_channels() * self.n_samples {
            return Err(Error::Data(format!(
                "recording has {} values, expected {} channels × {} samples",
                self.data.len(),
                self.n_channels(),
                self.n_samples
            )));
        }
        for w in self.markers.windows(2) {
            if w[1].sample <= w[0].sample {
                return Err(Error::Data(format!(
                    "marker indices must be strictly increasing ({} then {})",
                    w[0].sample, w[1].sample
                )));
            }
        }
        if let Some(m) = self.markers.iter().find(|m| m.sample >= self.n_samples) {
            return Err(Error::Data(format!(
                "marker at sample {} is beyond the recording ({} samples)",
                m.sample, self.n_samples
            )));
        }
        Ok(())
    }

    pub fn n_channels(&self) -> usize {
        self.channel_names.len()
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.data[c * self.n_samples..(c + 1) * self.n_samples]
    }

    /// Applies `f` to every channel with zero-phase filtering.
    pub fn filtered(&self, f: &SosFilter) -> Result<RawRecording> {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.n_channels() {
            data.extend(filtfilt(self.channel(c), f)?);
        }
        Ok(RawRecording {
            data,
            ..self.clone()
        })
    }
}

/// Integer decimation factor from `fs` to `target_fs`.
fn decimation_factor(fs: f64, target_fs: f64) -> Result<usize> {
    if !(target_fs.is_finite() && target_fs > 0.0) {
        return Err(Error::Config(format!("invalid target rate {target_fs}")));
    }
    let ratio = fs / target_fs;
    let factor = ratio.round();
    if factor < 1.0 || (ratio - factor).abs() > 1e-9 * ratio {
        return Err(Error::Config(format!(
            "source rate {fs} Hz is not an integer multiple of target rate {target_fs} Hz"
        )));
    }
    Ok(factor as usize)
}

/// Zero-phase anti-alias low-pass then decimation; markers are floor-divided
/// by the factor. A recording already at the target rate is returned as is.
pub fn downsample(rec: &RawRecording, target_fs: f64) -> Result<RawRecording> {
    let factor = decimation_factor(rec.sampling_rate, target_fs)?;
    if factor == 1 {
        return Ok(rec.clone());
    }
    let lp = design_butterworth_lowpass(ANTI_ALIAS_ORDER, ANTI_ALIAS_FRACTION * target_fs, rec.sampling_rate)?;
    let n_out = rec.n_samples.div_ceil(factor);
    let mut data = Vec::with_capacity(rec.n_channels() * n_out);
    for c in 0..rec.n_channels() {
        let y = filtfilt(rec.channel(c), &lp)?;
        data.extend(y.iter().step_by(factor));
    }
    let mut markers: Vec<Marker> = Vec::with_capacity(rec.markers.len());
    for m in &rec.markers {
        let sample = m.sample / factor;
        if markers.last().is_some_and(|p| p.sample == sample) {
            return Err(Error::Data(format!(
                "markers collide after decimation by {factor} at sample {sample}"
            )));
        }
        markers.push(Marker { sample, ..*m });
    }
    RawRecording::new(
        data,
        n_out,
        rec.sampling_rate / factor as f64,
        rec.channel_names.clone(),
        markers,
    )
}
