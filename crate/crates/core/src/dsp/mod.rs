//! Preprocessing: resampling, band-pass filtering, epoching with baseline
//! correction, channel selection.

mod epoch;
mod filter;
mod pipeline;
mod recording;

pub use epoch::{default_channels, epoch_trials, select_channels, Epochs, RejectedTrial, DEFAULT_CHANNELS};
pub use filter::{
    design_butterworth_bandpass, design_butterworth_lowpass, filtfilt, BandKind, FilterDesign, SosFilter,
};
pub use pipeline::{preprocess, ArtifactStage, BandpassConfig, PassThrough, PreprocessConfig, PreprocessOutput, StageShape};
pub use recording::{downsample, Marker, RawRecording, ANTI_ALIAS_FRACTION, ANTI_ALIAS_ORDER};
