use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::kruskal::{kruskal_wallis, KruskalWallis, SampleGroup};
use super::permutation::{permutation_paired_test, PermutationTest};
use crate::error::{Error, Result};
use crate::training::ResultsDocument;

/// Which accuracies of a results document enter the tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompareUnit {
    /// One cross-validated mean accuracy per subject.
    Subject,
    /// Every fold's test accuracy.
    Fold,
}

impl CompareUnit {
    pub fn extract(self, doc: &ResultsDocument) -> Vec<f64> {
        match self {
            CompareUnit::Subject => doc.subject_accuracies(),
            CompareUnit::Fold => doc.fold_accuracies(),
        }
    }
}

pub const DEFAULT_N_PERM: usize = 10_000;
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareOptions {
    pub unit: CompareUnit,
    pub n_perm: usize,
    pub seed: u64,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            unit: CompareUnit::Subject,
            n_perm: DEFAULT_N_PERM,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub label: String,
    pub n: usize,
    pub mean: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub options: CompareOptions,
    pub a: ConditionSummary,
    pub b: ConditionSummary,
    /// `mean(a) − mean(b)`
    pub difference: f64,
    pub kruskal_wallis: KruskalWallis,
    pub permutation: PermutationTest,
}

impl Comparison {
    /// Both tests reject at `alpha`.
    pub fn significant(&self, alpha: f64) -> bool {
        self.kruskal_wallis.p < alpha && self.permutation.p < alpha
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let unit = match self.options.unit {
            CompareUnit::Subject => "subject",
            CompareUnit::Fold => "fold",
        };
        let _ = writeln!(out, "{:<28} {:>8} {:>10}", format!("condition (per {unit})"), "n", "mean");
        for c in [&self.a, &self.b] {
            let _ = writeln!(out, "{:<28} {:>8} {:>10.4}", c.label, c.n, c.mean);
        }
        let _ = writeln!(out, "{:<28} {:>8} {:>10.4}", "difference (a - b)", "", self.difference);
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<28} {:>12} {:>12} {:>6}", "test", "statistic", "p", "sig");
        let kw = &self.kruskal_wallis;
        let _ = writeln!(
            out,
            "{:<28} {:>12.4} {:>12.4e} {:>6}",
            format!("Kruskal-Wallis H (df={})", kw.df),
            kw.h,
            kw.p,
            mark(kw.p)
        );
        let pt = &self.permutation;
        let _ = writeln!(
            out,
            "{:<28} {:>12.4} {:>12.4e} {:>6}",
            format!("paired permutation t (n={})", pt.n_perm),
            pt.t_obs,
            pt.p,
            mark(pt.p)
        );
        if kw.degenerate || pt.degenerate {
            let _ = writeln!(out, "note: degenerate input (no variation); p = 1 reported");
        }
        out
    }
}

fn mark(p: f64) -> &'static str {
    if p < ALPHA {
        "*"
    } else {
        ""
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Runs the Kruskal-Wallis and paired permutation tests on two labelled
/// samples, paired by index.
pub fn compare_samples(a: SampleGroup, b: SampleGroup, options: CompareOptions) -> Result<Comparison> {
    if a.values.len() != b.values.len() {
        return Err(Error::Data(format!(
            "paired comparison needs equal counts: {} has {}, {} has {}",
            a.label,
            a.values.len(),
            b.label,
            b.values.len()
        )));
    }
    let kw = kruskal_wallis(&[a.clone(), b.clone()])?;
    let perm = permutation_paired_test(&a.values, &b.values, options.n_perm, options.seed)?;
    let summary = |g: SampleGroup| ConditionSummary {
        n: g.values.len(),
        mean: mean(&g.values),
        label: g.label,
        values: g.values,
    };
    let (a, b) = (summary(a), summary(b));
    Ok(Comparison {
        options,
        difference: a.mean - b.mean,
        a,
        b,
        kruskal_wallis: kw,
        permutation: perm,
    })
}

/// Compares two results documents on the accuracies selected by `options.unit`.
pub fn compare_conditions(
    label_a: &str,
    report_a: &ResultsDocument,
    label_b: &str,
    report_b: &ResultsDocument,
    options: CompareOptions,
) -> Result<Comparison> {
    let a = SampleGroup::new(label_a, options.unit.extract(report_a));
    let b = SampleGroup::new(label_b, options.unit.extract(report_b));
    compare_samples(a, b, options)
}
