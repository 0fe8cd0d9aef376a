use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataio::TrialSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold_index: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Dataset indices of the test trials, ascending.
    pub test_indices: Vec<usize>,
    pub train_loss_history: Vec<f64>,
    pub test_accuracy: f64,
    /// `confusion[true][predicted]`
    pub confusion: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// Sample standard deviation (n − 1); zero for a single value.
    pub std_accuracy: f64,
    pub chance_level: f64,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn sample_std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

impl CvSummary {
    pub fn from_accuracies(accuracies: Vec<f64>, n_classes: usize) -> Self {
        Self {
            mean_accuracy: mean(&accuracies),
            std_accuracy: sample_std(&accuracies),
            chance_level: 1.0 / n_classes as f64,
            accuracies,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub source: String,
    pub n_trials: usize,
    pub n_channels: usize,
    pub n_samples: usize,
    pub n_classes: usize,
    pub sampling_rate: f64,
    pub channel_names: Vec<String>,
}

impl DatasetInfo {
    pub fn of(t: &TrialSet, source: &str) -> Self {
        Self {
            source: source.into(),
            n_trials: t.n_trials(),
            n_channels: t.n_channels(),
            n_samples: t.n_samples,
            n_classes: t.n_classes,
            sampling_rate: t.sampling_rate,
            channel_names: t.channel_names.clone(),
        }
    }
}

/// Cross-validation of one subject's data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectResult {
    pub subject: String,
    pub dataset: DatasetInfo,
    pub folds: Vec<FoldReport>,
    pub summary: CvSummary,
}

pub const RESULTS_FORMAT: &str = "eegattn-results";
pub const RESULTS_VERSION: u32 = 1;

/// Output of a training run: the resolved configuration plus per-subject
/// cross-validation results. Contains no wall-clock data, so identical runs
/// give identical documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsDocument {
    pub format: String,
    pub version: u32,
    pub config: serde_json::Value,
    pub subjects: Vec<SubjectResult>,
    /// Over subjects' mean accuracies.
    pub summary: CvSummary,
}

impl ResultsDocument {
    pub fn new(config: serde_json::Value, subjects: Vec<SubjectResult>) -> Self {
        let n_classes = subjects.first().map_or(1, |s| s.dataset.n_classes);
        let summary = CvSummary::from_accuracies(subjects.iter().map(|s| s.summary.mean_accuracy).collect(), n_classes);
        Self {
            format: RESULTS_FORMAT.into(),
            version: RESULTS_VERSION,
            config,
            subjects,
            summary,
        }
    }

    /// Per-fold test accuracies of every subject, subject-major.
    pub fn fold_accuracies(&self) -> Vec<f64> {
        self.subjects
            .iter()
            .flat_map(|s| s.folds.iter().map(|f| f.test_accuracy))
            .collect()
    }

    /// Mean cross-validated accuracy per subject.
    pub fn subject_accuracies(&self) -> Vec<f64> {
        self.subjects.iter().map(|s| s.summary.mean_accuracy).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Data(format!("{}: not a results document: {e}", path.display())))?;
        if doc.format != RESULTS_FORMAT || doc.version != RESULTS_VERSION {
            return Err(Error::Data(format!(
                "{}: unsupported results format {} v{}",
                path.display(),
                doc.format,
                doc.version
            )));
        }
        Ok(doc)
    }
}

/// `true\pred` header row, then one row per true class.
pub fn confusion_csv(confusion: &[Vec<usize>]) -> String {
    let k = confusion.len();
    let mut out = String::from("true\\pred");
    for j in 0..k {
        let _ = write!(out, ",{j}");
    }
    out.push('\n');
    for (i, row) in confusion.iter().enumerate() {
        let _ = write!(out, "{i}");
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_mean_and_std() {
        let s = CvSummary::from_accuracies(vec![0.4, 0.5, 0.6, 0.5, 0.5], 13);
        assert!((s.mean_accuracy - 0.5).abs() < 1e-15);
        assert!((s.std_accuracy - 0.005f64.sqrt()).abs() < 1e-15);
        assert!((s.chance_level - 1.0 / 13.0).abs() < 1e-15);
    }

    #[test]
    fn csv_layout() {
        assert_eq!(confusion_csv(&[vec![3, 1], vec![0, 2]]), "true\\pred,0,1\n0,3,1\n1,0,2\n");
    }
}
