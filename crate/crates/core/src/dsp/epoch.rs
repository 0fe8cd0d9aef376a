use serde::Serialize;

use super::recording::RawRecording;
use crate::dataio::TrialSet;
use crate::error::{Error, Result};

/// Left-hemisphere language-area montage subset, in output order.
pub const DEFAULT_CHANNELS: [&str; 10] = ["AF3", "F3", "F5", "FC3", "FC5", "T7", "C5", "TP7", "CP5", "P5"];

pub fn default_channels() -> Vec<String> {
    DEFAULT_CHANNELS.iter().map(|s| s.to_string()).collect()
}

/// A marker whose window does not fit inside the recording.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectedTrial {
    pub marker_index: usize,
    pub sample: usize,
    pub label: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Epochs {
    pub trials: TrialSet,
    pub rejected: Vec<RejectedTrial>,
}

fn seconds_to_samples(s: f64, fs: f64, what: &str) -> Result<usize> {
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::Config(format!("{what} must be a non-negative duration, got {s}")));
    }
    Ok((s * fs).round() as usize)
}

/// Cuts `[−pre_s, dur_s)` around every marker, subtracts the per-channel mean
/// of the pre-marker segment and keeps the `dur_s` post-marker samples.
/// Markers too close to either edge are returned in `rejected`.
pub fn epoch_trials(rec: &RawRecording, pre_s: f64, dur_s: f64, n_classes: usize) -> Result<Epochs> {
    let fs = rec.sampling_rate;
    let pre = seconds_to_samples(pre_s, fs, "pre-trial window")?;
    let dur = seconds_to_samples(dur_s, fs, "trial duration")?;
    if dur == 0 {
        return Err(Error::Config("trial duration is shorter than one sample".into()));
    }
    let channels = rec.n_channels();
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut rejected = Vec::new();
    for (marker_index, m) in rec.markers.iter().enumerate() {
        if m.label >= n_classes {
            return Err(Error::LabelOutOfRange {
                label: m.label,
                n_classes,
            });
        }
        if m.sample < pre || m.sample + dur > rec.n_samples {
            rejected.push(RejectedTrial {
                marker_index,
                sample: m.sample,
                label: m.label,
                reason: format!(
                    "window [{}, {}) exceeds recording [0, {})",
                    m.sample as i64 - pre as i64,
                    m.sample + dur,
                    rec.n_samples
                ),
            });
            continue;
        }
        for c in 0..channels {
            let ch = rec.channel(c);
            let baseline = if pre == 0 {
                0.0
            } else {
                ch[m.sample - pre..m.sample].iter().sum::<f64>() / pre as f64
            };
            data.extend(ch[m.sample..m.sample + dur].iter().map(|v| v - baseline));
        }
        labels.push(m.label);
    }
    let trials = TrialSet::new(data, labels, rec.channel_names.clone(), fs, n_classes, dur)?;
    Ok(Epochs { trials, rejected })
}

/// Channels of `t` reordered/subset to `names`.
pub fn select_channels(t: &TrialSet, names: &[String]) -> Result<TrialSet> {
    let mut idx = Vec::with_capacity(names.len());
    let mut missing = Vec::new();
    for n in names {
        match t.channel_names.iter().position(|c| c == n) {
            Some(i) => idx.push(i),
            None => missing.push(n.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::UnknownChannels(missing));
    }
    let s = t.n_samples;
    let mut data = Vec::with_capacity(t.n_trials() * idx.len() * s);
    for i in 0..t.n_trials() {
        let trial = t.trial(i);
        for &c in &idx {
            data.extend_from_slice(&trial[c * s..(c + 1) * s]);
        }
    }
    TrialSet::new(
        data,
        t.labels.clone(),
        names.to_vec(),
        t.sampling_rate,
        t.n_classes,
        s,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::Marker;

    fn ramp_recording(markers: &[usize]) -> RawRecording {
        let n = 2000;
        let data = (0..2).flat_map(|c| (0..n).map(move |i| (c * 10000 + i) as f64)).collect();
        RawRecording::new(
            data,
            n,
            250.0,
            vec!["A".into(), "B".into()],
            markers.iter().enumerate().map(|(k, &sample)| Marker { sample, label: k % 3 }).collect(),
        )
        .unwrap()
    }

    #[test]
    fn trial_length_follows_rate() {
        let e = epoch_trials(&ramp_recording(&[200, 900]), 0.5, 2.0, 3).unwrap();
        assert_eq!(e.trials.n_samples, 500);
        assert_eq!(e.trials.n_trials(), 2);
        assert_eq!(e.trials.labels, vec![0, 1]);
        assert!(e.rejected.is_empty());
    }

    #[test]
    fn baseline_removes_constants_and_steps() {
        let n = 1500;
        let mut data = vec![7.5; n];
        data.extend((0..n).map(|i| if i < 500 { 0.0 } else { 1.0 }));
        let rec = RawRecording::new(
            data,
            n,
            250.0,
            vec!["const".into(), "step".into()],
            vec![Marker { sample: 500, label: 0 }],
        )
        .unwrap();
        let e = epoch_trials(&rec, 0.5, 2.0, 1).unwrap();
        let t = e.trials.trial(0);
        assert!(t[..500].iter().all(|&v| v == 0.0));
        assert!(t[500..].iter().all(|&v| v == 1.0));
    }

    #[test]
    fn zero_baseline_preserves_samples() {
        let n = 1200;
        let mut data = vec![0.0; n];
        for (i, v) in data.iter_mut().enumerate().skip(300) {
            *v = (i as f64 * 0.37).sin() * 3.0;
        }
        let rec = RawRecording::new(data.clone(), n, 250.0, vec!["x".into()], vec![Marker { sample: 300, label: 0 }]).unwrap();
        let e = epoch_trials(&rec, 0.5, 2.0, 1).unwrap();
        assert_eq!(e.trials.trial(0), &data[300..800]);
    }

    #[test]
    fn edge_markers_are_reported() {
        let e = epoch_trials(&ramp_recording(&[10, 600, 1700]), 0.5, 2.0, 3).unwrap();
        assert_eq!(e.trials.n_trials(), 1);
        assert_eq!(e.rejected.iter().map(|r| r.sample).collect::<Vec<_>>(), vec![10, 1700]);
        assert_eq!(e.rejected[0].marker_index, 0);
    }

    #[test]
    fn selects_in_requested_order() {
        let e = epoch_trials(&ramp_recording(&[200]), 0.5, 1.0, 3).unwrap().trials;
        let s = select_channels(&e, &["B".into(), "A".into()]).unwrap();
        assert_eq!(&s.trial(0)[..250], &e.trial(0)[250..]);
        assert_eq!(select_channels(&e, &e.channel_names).unwrap(), e);
        match select_channels(&e, &["A".into(), "XX".into()]) {
            Err(Error::UnknownChannels(m)) => assert_eq!(m, vec!["XX".to_string()]),
            other => panic!("{other:?}"),
        }
    }
}
