//! Trial and recording containers plus the synthetic data generators.

mod raw;
mod synth;
mod trialset;

pub use raw::{read_recording, recording_from_bytes, recording_to_bytes, write_recording, RAW_MAGIC, RAW_VERSION};
pub use synth::{
    background_band_fraction, burst_amplitude, class_frequency, generate_raw_recording, generate_synthetic, synthetic_channel_names,
    RawSynthSpec, SynthSpec, BASE_FREQ_HZ, FREQ_STEP_HZ, MONTAGE_64, SNR_BAND_HZ,
};
pub use trialset::{read_trialset, trialset_from_bytes, trialset_to_bytes, write_trialset, TrialSet, MAGIC, VERSION};
