//! Synthetic EEG: pink-noise background plus class-specific gamma bursts.
//!
//! Class `k < n_classes − 1` carries a Hann-windowed sinusoid at `35 + 6k` Hz
//! during the middle second of the trial, projected onto the channels through
//! a class-specific spatial weight vector. The last class is background only
//! (resting state).
//!
//! The signal-to-noise ratio is band-limited: the burst power at a
//! unit-mean-square channel during the burst window, over the background power
//! inside the high-gamma band [`SNR_BAND_HZ`] where every burst lives. With the
//! background standardized to unit variance and a fraction `β` of its power in
//! that band, `A² · 3/16 = β · 10^(snr_db/10)` (Hann² averages 3/8, sin²
//! averages 1/2).

use std::f64::consts::PI;

use num_complex::Complex64;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::TrialSet;
use crate::dsp::{Marker, RawRecording, DEFAULT_CHANNELS};
use crate::error::{Error, Result};

pub const BASE_FREQ_HZ: f64 = 35.0;
pub const FREQ_STEP_HZ: f64 = 6.0;

/// Burst frequency of class `k`.
pub fn class_frequency(k: usize) -> f64 {
    BASE_FREQ_HZ + FREQ_STEP_HZ * k as f64
}

/// Band against whose background power the SNR is measured, clipped to
/// Nyquist.
pub const SNR_BAND_HZ: (f64, f64) = (30.0, 120.0);

/// Kellet pink-noise filter: one-pole sections `gain / (1 − pole·z⁻¹)`, plus a
/// direct term and a one-sample-delayed term.
const PINK_POLES: [f64; 6] = [0.99886, 0.99332, 0.96900, 0.86650, 0.55000, -0.7616];
const PINK_GAINS: [f64; 6] = [0.0555179, 0.0750759, 0.1538520, 0.3104856, 0.5329522, -0.0168980];
const PINK_DIRECT: f64 = 0.5362;
const PINK_DELAYED: f64 = 0.115926;

/// `|H(e^{jω})|²` of the pink-noise filter at normalized frequency `nu = f/fs`.
fn pink_power(nu: f64) -> f64 {
    let z_inv = Complex64::from_polar(1.0, -2.0 * PI * nu);
    let h = PINK_POLES
        .iter()
        .zip(PINK_GAINS)
        .map(|(&p, g)| g / (1.0 - p * z_inv))
        .sum::<Complex64>()
        + PINK_DIRECT
        + PINK_DELAYED * z_inv;
    h.norm_sqr()
}

/// Fraction of the background's variance inside [`SNR_BAND_HZ`] at sampling
/// rate `fs`, from the filter's power spectrum (midpoint rule).
pub fn background_band_fraction(fs: f64) -> f64 {
    const N: usize = 1 << 16;
    let (lo, hi) = (SNR_BAND_HZ.0 / fs, (SNR_BAND_HZ.1 / fs).min(0.5));
    let (mut band, mut total) = (0.0, 0.0);
    for i in 0..N {
        let nu = (i as f64 + 0.5) * 0.5 / N as f64;
        let p = pink_power(nu);
        total += p;
        if nu >= lo && nu < hi {
            band += p;
        }
    }
    band / total
}

/// Burst amplitude giving `snr_db` against the in-band power of a
/// unit-variance background sampled at `fs`.
pub fn burst_amplitude(snr_db: f64, fs: f64) -> f64 {
    (background_band_fraction(fs) * 10f64.powf(snr_db / 10.0) / (3.0 / 16.0)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n_classes: usize,
    pub trials_per_class: usize,
    pub n_channels: usize,
    pub n_samples: usize,
    pub fs: f64,
    pub snr_db: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_classes: 13,
            trials_per_class: 23,
            n_channels: 10,
            n_samples: 500,
            fs: 250.0,
            snr_db: 0.0,
            seed: 0,
        }
    }
}

fn check_classes(n_classes: usize, fs: f64) -> Result<()> {
    if n_classes < 2 {
        return Err(Error::Config(format!("need at least 2 classes, got {n_classes}")));
    }
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::Config(format!("invalid sampling rate {fs}")));
    }
    let top = class_frequency(n_classes - 2);
    if top >= fs / 2.0 {
        return Err(Error::Config(format!(
            "burst frequency of class {} ({top} Hz) is not below Nyquist ({} Hz)",
            n_classes - 2,
            fs / 2.0
        )));
    }
    Ok(())
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        check_classes(self.n_classes, self.fs)?;
        if self.trials_per_class == 0 || self.n_channels == 0 || self.n_samples == 0 {
            return Err(Error::Config(
                "trials_per_class, n_channels and n_samples must be positive".into(),
            ));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::Config("snr_db must be finite".into()));
        }
        Ok(())
    }

    pub fn n_trials(&self) -> usize {
        self.n_classes * self.trials_per_class
    }
}

/// The default language-area names for up to ten channels, then `Ch{i}`.
pub fn synthetic_channel_names(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| DEFAULT_CHANNELS.get(i).map_or_else(|| format!("Ch{i}"), |s| s.to_string()))
        .collect()
}

/// Pink (1/f) noise via Kellet's filter bank applied to white Gaussian noise.
struct Pink {
    b: [f64; 7],
}

impl Pink {
    const BURN_IN: usize = 1024;

    fn new() -> Self {
        Self { b: [0.0; 7] }
    }

    fn next(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        let w: f64 = rng.sample(StandardNormal);
        let b = &mut self.b;
        for ((state, pole), gain) in b.iter_mut().zip(PINK_POLES).zip(PINK_GAINS) {
            *state = pole * *state + w * gain;
        }
        let out = b.iter().sum::<f64>() + w * PINK_DIRECT;
        b[6] = w * PINK_DELAYED;
        out
    }

    /// `n` samples after a burn-in, standardized to zero mean and unit
    /// variance.
    fn standardized(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let mut p = Pink::new();
        for _ in 0..Self::BURN_IN {
            p.next(rng);
        }
        let mut x: Vec<f64> = (0..n).map(|_| p.next(rng)).collect();
        let mean = x.iter().sum::<f64>() / n as f64;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        let inv = if var > 0.0 { var.sqrt().recip() } else { 0.0 };
        x.iter_mut().for_each(|v| *v = (*v - mean) * inv);
        x
    }
}

/// Spatial weight vectors, one per burst class, normalized to unit mean square.
fn spatial_weights(rng: &mut ChaCha8Rng, classes: usize, channels: usize) -> Vec<Vec<f64>> {
    (0..classes)
        .map(|_| {
            let mut w: Vec<f64> = (0..channels).map(|_| rng.sample(StandardNormal)).collect();
            let ms = w.iter().map(|v| v * v).sum::<f64>() / channels as f64;
            let s = ms.sqrt().recip();
            w.iter_mut().for_each(|v| *v *= s);
            w
        })
        .collect()
}

/// Hann-windowed sinusoid of `len` samples.
fn burst(len: usize, freq: f64, fs: f64, amplitude: f64, phase: f64) -> Vec<f64> {
    (0..len)
        .map(|n| {
            let hann = if len > 1 {
                0.5 * (1.0 - (2.0 * PI * n as f64 / (len - 1) as f64).cos())
            } else {
                1.0
            };
            amplitude * hann * (2.0 * PI * freq * n as f64 / fs + phase).sin()
        })
        .collect()
}

/// Class-major synthetic trial set; deterministic in `spec.seed`.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<TrialSet> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (c, s) = (spec.n_channels, spec.n_samples);
    let resting = spec.n_classes - 1;
    let weights = spatial_weights(&mut rng, resting, c);
    let amp = burst_amplitude(spec.snr_db, spec.fs);
    let len = (spec.fs.round() as usize).min(s);
    let start = (s - len) / 2;

    let mut data = Vec::with_capacity(spec.n_trials() * c * s);
    let mut labels = Vec::with_capacity(spec.n_trials());
    for k in 0..spec.n_classes {
        for _ in 0..spec.trials_per_class {
            let mut trial: Vec<f64> = (0..c).flat_map(|_| Pink::standardized(&mut rng, s)).collect();
            if k != resting {
                let phase = rng.random_range(0.0..2.0 * PI);
                let b = burst(len, class_frequency(k), spec.fs, amp, phase);
                for (ch, &w) in weights[k].iter().enumerate() {
                    let row = &mut trial[ch * s + start..ch * s + start + len];
                    row.iter_mut().zip(&b).for_each(|(v, bv)| *v += w * bv);
                }
            }
            data.extend(trial);
            labels.push(k);
        }
    }
    TrialSet::new(data, labels, synthetic_channel_names(c), spec.fs, spec.n_classes, s)
}

/// 64-channel 10-10 montage containing the default language-area subset.
pub const MONTAGE_64: [&str; 64] = [
    "Fp1", "Fz", "F3", "F7", "FT9", "FC5", "FC1", "C3", "T7", "TP9", "CP5", "CP1", "Pz", "P3", "P7", "O1", "Oz",
    "O2", "P4", "P8", "TP10", "CP6", "CP2", "Cz", "C4", "T8", "FT10", "FC6", "FC2", "F4", "F8", "Fp2", "AF7", "AF3",
    "AFz", "F1", "F5", "FT7", "FC3", "C1", "C5", "TP7", "CP3", "P1", "P5", "PO7", "PO3", "POz", "PO4", "PO8", "P6",
    "P2", "CPz", "CP4", "TP8", "C6", "C2", "FC4", "FT8", "F6", "AF8", "AF4", "F2", "Iz",
];

/// Continuous recording on the 64-channel montage with evenly spaced markers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RawSynthSpec {
    pub n_classes: usize,
    pub n_markers: usize,
    pub duration_s: f64,
    pub fs: f64,
    /// Onset of the first marker.
    pub first_marker_s: f64,
    /// Length of the post-marker trial; bursts occupy its middle second.
    pub trial_s: f64,
    pub snr_db: f64,
    pub seed: u64,
}

impl Default for RawSynthSpec {
    fn default() -> Self {
        Self {
            n_classes: 13,
            n_markers: 50,
            duration_s: 120.0,
            fs: 1000.0,
            first_marker_s: 1.0,
            trial_s: 2.0,
            snr_db: 0.0,
            seed: 0,
        }
    }
}

impl RawSynthSpec {
    /// Marker onsets (samples): from `first_marker_s`, evenly spaced so that
    /// the last trial ends half a second before the recording does.
    pub fn marker_samples(&self) -> Result<Vec<usize>> {
        let n = (self.duration_s * self.fs).round() as usize;
        let last = self.duration_s - self.trial_s - 0.5;
        if self.n_markers == 0 {
            return Ok(Vec::new());
        }
        if !(self.first_marker_s >= 0.0 && last >= self.first_marker_s) {
            return Err(Error::Config(format!(
                "recording of {} s cannot hold trials of {} s starting at {} s",
                self.duration_s, self.trial_s, self.first_marker_s
            )));
        }
        let step = if self.n_markers > 1 {
            (last - self.first_marker_s) / (self.n_markers - 1) as f64
        } else {
            0.0
        };
        let samples: Vec<usize> = (0..self.n_markers)
            .map(|i| ((self.first_marker_s + step * i as f64) * self.fs).round() as usize)
            .collect();
        if samples.windows(2).any(|w| w[1] <= w[0]) || samples.last().is_some_and(|&l| l >= n) {
            return Err(Error::Config(format!("{} markers do not fit in {} s", self.n_markers, self.duration_s)));
        }
        Ok(samples)
    }
}

pub fn generate_raw_recording(spec: &RawSynthSpec) -> Result<RawRecording> {
    check_classes(spec.n_classes, spec.fs)?;
    if !(spec.duration_s.is_finite() && spec.duration_s > 0.0 && spec.trial_s > 0.0 && spec.snr_db.is_finite()) {
        return Err(Error::Config("duration, trial length and snr must be finite and positive".into()));
    }
    let onsets = spec.marker_samples()?;
    let n = (spec.duration_s * spec.fs).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let resting = spec.n_classes - 1;
    let weights = spatial_weights(&mut rng, resting, DEFAULT_CHANNELS.len());
    let mut labels: Vec<usize> = (0..onsets.len()).map(|i| i % spec.n_classes).collect();
    labels.shuffle(&mut rng);

    let mut data: Vec<f64> = (0..MONTAGE_64.len()).flat_map(|_| Pink::standardized(&mut rng, n)).collect();
    let amp = burst_amplitude(spec.snr_db, spec.fs);
    let len = spec.fs.round() as usize;
    let offset = ((spec.trial_s * spec.fs).round() as usize).saturating_sub(len) / 2;
    let rows: Vec<usize> = DEFAULT_CHANNELS
        .iter()
        .map(|name| MONTAGE_64.iter().position(|m| m == name).expect("montage contains the default subset"))
        .collect();
    for (&onset, &k) in onsets.iter().zip(&labels) {
        let phase = rng.random_range(0.0..2.0 * PI);
        if k == resting {
            continue;
        }
        let b = burst(len, class_frequency(k), spec.fs, amp, phase);
        let start = onset + offset;
        let end = (start + len).min(n);
        for (&row, &w) in rows.iter().zip(&weights[k]) {
            let seg = &mut data[row * n + start..row * n + end];
            seg.iter_mut().zip(&b).for_each(|(v, bv)| *v += w * bv);
        }
    }
    let markers = onsets
        .into_iter()
        .zip(labels)
        .map(|(sample, label)| Marker { sample, label })
        .collect();
    RawRecording::new(
        data,
        n,
        spec.fs,
        MONTAGE_64.iter().map(|s| s.to_string()).collect(),
        markers,
    )
}
