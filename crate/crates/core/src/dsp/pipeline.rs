use serde::{Deserialize, Serialize};

use super::epoch::{default_channels, epoch_trials, select_channels, RejectedTrial};
use super::filter::design_butterworth_bandpass;
use super::recording::{downsample, RawRecording};
use crate::dataio::TrialSet;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandpassConfig {
    pub order: usize,
    pub low_hz: f64,
    pub high_hz: f64,
}

impl Default for BandpassConfig {
    fn default() -> Self {
        Self {
            order: 5,
            low_hz: 30.0,
            high_hz: 120.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub target_fs: f64,
    /// `None` skips band-pass filtering.
    pub bandpass: Option<BandpassConfig>,
    pub pre_s: f64,
    pub dur_s: f64,
    pub channels: Vec<String>,
    pub n_classes: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            target_fs: 250.0,
            bandpass: Some(BandpassConfig::default()),
            pre_s: 0.5,
            dur_s: 2.0,
            channels: default_channels(),
            n_classes: 13,
        }
    }
}

/// Hook for an artifact-removal stage on the continuous recording, applied
/// after resampling and before band-pass filtering.
pub trait ArtifactStage {
    fn name(&self) -> &str;
    fn apply(&self, rec: RawRecording) -> Result<RawRecording>;
}

/// Leaves the recording untouched.
pub struct PassThrough;

impl ArtifactStage for PassThrough {
    fn name(&self) -> &str {
        "pass-through"
    }

    fn apply(&self, rec: RawRecording) -> Result<RawRecording> {
        Ok(rec)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StageShape {
    pub stage: String,
    /// `[channels, samples]` for continuous data, `[trials, channels, samples]`
    /// for epochs.
    pub shape: Vec<usize>,
    pub sampling_rate: f64,
}

#[derive(Debug, Clone)]
pub struct PreprocessOutput {
    pub trials: TrialSet,
    pub rejected: Vec<RejectedTrial>,
    pub stages: Vec<StageShape>,
}

/// Resample → artifact stage → continuous zero-phase band-pass → epoch with
/// baseline correction → channel selection.
pub fn preprocess(rec: &RawRecording, cfg: &PreprocessConfig, artifacts: &dyn ArtifactStage) -> Result<PreprocessOutput> {
    let continuous = |stage: &str, r: &RawRecording| StageShape {
        stage: stage.into(),
        shape: vec![r.n_channels(), r.n_samples],
        sampling_rate: r.sampling_rate,
    };
    let epoched = |stage: &str, t: &TrialSet| StageShape {
        stage: stage.into(),
        shape: vec![t.n_trials(), t.n_channels(), t.n_samples],
        sampling_rate: t.sampling_rate,
    };
    let mut stages = vec![continuous("input", rec)];
    let mut r = downsample(rec, cfg.target_fs)?;
    stages.push(continuous("downsample", &r));
    r = artifacts.apply(r)?;
    stages.push(continuous(artifacts.name(), &r));
    if let Some(bp) = &cfg.bandpass {
        let f = design_butterworth_bandpass(bp.order, bp.low_hz, bp.high_hz, r.sampling_rate)?;
        r = r.filtered(&f)?;
        stages.push(continuous("bandpass", &r));
    }
    let epochs = epoch_trials(&r, cfg.pre_s, cfg.dur_s, cfg.n_classes)?;
    stages.push(epoched("epoch", &epochs.trials));
    let trials = select_channels(&epochs.trials, &cfg.channels)?;
    stages.push(epoched("select_channels", &trials));
    Ok(PreprocessOutput {
        trials,
        rejected: epochs.rejected,
        stages,
    })
}
