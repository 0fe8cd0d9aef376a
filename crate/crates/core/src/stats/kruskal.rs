use serde::{Deserialize, Serialize};

use super::gamma::chi2_sf;
use crate::error::{Error, Result};

/// Labelled sample, e.g. per-subject accuracies under one condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleGroup {
    pub label: String,
    pub values: Vec<f64>,
}

impl SampleGroup {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            values,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KruskalWallis {
    pub h: f64,
    pub p: f64,
    pub df: usize,
    /// Every pooled value identical: the tie correction vanishes, H = 0 and
    /// p = 1 are reported.
    pub degenerate: bool,
}

/// 1-based ranks with ties sharing their mean rank.
pub fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // Positions i..j (0-based) share rank mean of (i+1)..=j.
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

/// Sum of `t³ − t` over tie groups.
fn tie_sum(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut total = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        total += t * t * t - t;
        i = j;
    }
    total
}

/// Kruskal-Wallis H test with mid-ranks and tie correction; p from the
/// chi-square upper tail with `groups − 1` degrees of freedom.
pub fn kruskal_wallis(groups: &[SampleGroup]) -> Result<KruskalWallis> {
    if groups.len() < 2 {
        return Err(Error::Data(format!("Kruskal-Wallis needs at least 2 groups, got {}", groups.len())));
    }
    if let Some(g) = groups.iter().find(|g| g.values.is_empty()) {
        return Err(Error::Data(format!("group {:?} is empty", g.label)));
    }
    if groups.iter().flat_map(|g| &g.values).any(|v| v.is_nan()) {
        return Err(Error::Data("Kruskal-Wallis input contains NaN".into()));
    }
    let pooled: Vec<f64> = groups.iter().flat_map(|g| g.values.iter().copied()).collect();
    let n = pooled.len() as f64;
    let df = groups.len() - 1;
    let correction = 1.0 - tie_sum(&pooled) / (n * n * n - n);
    if correction <= 0.0 {
        return Ok(KruskalWallis {
            h: 0.0,
            p: 1.0,
            df,
            degenerate: true,
        });
    }
    let ranks = mid_ranks(&pooled);
    let centre = (n + 1.0) / 2.0;
    let mut offset = 0;
    let mut s = 0.0;
    for g in groups {
        let k = g.values.len();
        let mean_rank = ranks[offset..offset + k].iter().sum::<f64>() / k as f64;
        s += k as f64 * (mean_rank - centre).powi(2);
        offset += k;
    }
    let h = 12.0 / (n * (n + 1.0)) * s / correction;
    Ok(KruskalWallis {
        h,
        p: chi2_sf(h, df as f64).clamp(0.0, 1.0),
        df,
        degenerate: false,
    })
}
