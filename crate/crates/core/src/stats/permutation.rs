use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermutationTest {
    /// Paired t statistic of the observed differences.
    pub t_obs: f64,
    pub p: f64,
    /// Null samples drawn (Monte-Carlo) or enumerated (exact).
    pub n_perm: usize,
    /// Zero-variance differences: p = 1 is reported.
    pub degenerate: bool,
}

/// Relative slack when comparing null statistics with the observed one, so
/// that sign patterns reproducing `|t_obs|` up to rounding are counted.
const TIE_SLACK: f64 = 1e-12;

/// `mean(d) / (sd(d) / √n)` with the sample standard deviation. Infinite
/// when `sd = 0` and the mean is not.
fn paired_t(d: &[f64]) -> f64 {
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let ss = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    let sd = (ss / (n - 1.0)).sqrt();
    if sd == 0.0 {
        return if mean == 0.0 { 0.0 } else { mean.signum() * f64::INFINITY };
    }
    mean / (sd / n.sqrt())
}

fn differences(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::Data(format!(
            "paired test needs equal sample sizes, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::Data(format!("paired test needs at least 2 pairs, got {}", a.len())));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("paired test input is not finite".into()));
    }
    Ok(d)
}

fn is_degenerate(d: &[f64]) -> bool {
    let m = d.iter().sum::<f64>() / d.len() as f64;
    d.iter().all(|v| *v == m)
}

fn flipped_t(d: &[f64], signs: u64, scratch: &mut [f64]) -> f64 {
    for (i, (s, v)) in scratch.iter_mut().zip(d).enumerate() {
        *s = if signs >> (i % 64) & 1 == 1 { -v } else { *v };
    }
    paired_t(scratch)
}

/// Sign-flip permutation test for paired samples. Each null sample flips the
/// sign of every difference independently with probability ½; two-sided
/// `p = (1 + #{|t_perm| ≥ |t_obs|}) / (n_perm + 1)`.
pub fn permutation_paired_test(a: &[f64], b: &[f64], n_perm: usize, seed: u64) -> Result<PermutationTest> {
    let d = differences(a, b)?;
    if n_perm == 0 {
        return Err(Error::Config("n_perm must be positive".into()));
    }
    if is_degenerate(&d) {
        return Ok(PermutationTest {
            t_obs: paired_t(&d),
            p: 1.0,
            n_perm,
            degenerate: true,
        });
    }
    let t_obs = paired_t(&d);
    let threshold = t_obs.abs() * (1.0 - TIE_SLACK);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scratch = vec![0.0; d.len()];
    let words = d.len().div_ceil(64);
    let mut hits = 0usize;
    for _ in 0..n_perm {
        for (w, chunk) in (0..words).zip(d.chunks(64)) {
            let bits: u64 = rng.random();
            let off = w * 64;
            let t_slice = &mut scratch[off..off + chunk.len()];
            for (i, (s, v)) in t_slice.iter_mut().zip(chunk).enumerate() {
                *s = if bits >> i & 1 == 1 { -v } else { *v };
            }
        }
        if paired_t(&scratch).abs() >= threshold {
            hits += 1;
        }
    }
    Ok(PermutationTest {
        t_obs,
        p: (1 + hits) as f64 / (n_perm + 1) as f64,
        n_perm,
        degenerate: false,
    })
}

/// Largest sample size enumerated exhaustively.
pub const MAX_EXACT_PAIRS: usize = 24;

/// Exact sign-flip test: enumerates all `2ⁿ` sign patterns (identity
/// included), `p = #{|t| ≥ |t_obs|} / 2ⁿ`.
pub fn permutation_paired_test_exact(a: &[f64], b: &[f64]) -> Result<PermutationTest> {
    let d = differences(a, b)?;
    if d.len() > MAX_EXACT_PAIRS {
        return Err(Error::Config(format!(
            "exhaustive enumeration is limited to {MAX_EXACT_PAIRS} pairs, got {}",
            d.len()
        )));
    }
    let total = 1usize << d.len();
    if is_degenerate(&d) {
        return Ok(PermutationTest {
            t_obs: paired_t(&d),
            p: 1.0,
            n_perm: total,
            degenerate: true,
        });
    }
    let t_obs = paired_t(&d);
    let threshold = t_obs.abs() * (1.0 - TIE_SLACK);
    let mut scratch = vec![0.0; d.len()];
    let hits = (0..total as u64)
        .filter(|&signs| flipped_t(&d, signs, &mut scratch).abs() >= threshold)
        .count();
    Ok(PermutationTest {
        t_obs,
        p: hits as f64 / total as f64,
        n_perm: total,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_samples_are_degenerate() {
        let a = [0.3, 0.5, 0.4];
        let r = permutation_paired_test(&a, &a, 1000, 1).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p, 1.0);
    }

    #[test]
    fn large_shift_is_significant() {
        let b = [0.50, 0.52, 0.49, 0.51, 0.50, 0.48, 0.53, 0.50, 0.51];
        let noise = [0.01, -0.02, 0.00, 0.015, -0.01, 0.02, -0.005, 0.0, 0.01];
        let a: Vec<f64> = b.iter().zip(noise).map(|(x, e)| x + 10.0 + e).collect();
        let exact = permutation_paired_test_exact(&a, &b).unwrap();
        // Only the identity and the all-flipped pattern reach |t_obs|.
        assert_eq!(exact.n_perm, 512);
        assert!((exact.p - 2.0 / 512.0).abs() < 1e-15);
        let mc = permutation_paired_test(&a, &b, 10_000, 3).unwrap();
        assert!(mc.p <= 0.01);
        assert!(mc.p > 0.0);
    }

    #[test]
    fn monte_carlo_tracks_exhaustive_enumeration() {
        let a = [0.61, 0.55, 0.70, 0.52, 0.58, 0.66, 0.49, 0.60];
        let b = [0.57, 0.56, 0.62, 0.50, 0.59, 0.60, 0.51, 0.55];
        let exact = permutation_paired_test_exact(&a, &b).unwrap();
        let n_perm = 10_000;
        let mc = permutation_paired_test(&a, &b, n_perm, 11).unwrap();
        assert!((mc.p - exact.p).abs() < 2.0 / (n_perm as f64).sqrt(), "{} vs {}", mc.p, exact.p);
        assert_eq!(mc.t_obs, exact.t_obs);
    }

    #[test]
    fn deterministic_in_seed() {
        let a = [1.0, 2.0, 3.5, 0.2];
        let b = [0.5, 2.5, 3.0, 0.0];
        assert_eq!(
            permutation_paired_test(&a, &b, 500, 5).unwrap(),
            permutation_paired_test(&a, &b, 500, 5).unwrap()
        );
    }

    #[test]
    fn rejects_mismatched_or_tiny_samples() {
        assert!(permutation_paired_test(&[1.0, 2.0], &[1.0], 10, 0).is_err());
        assert!(permutation_paired_test(&[1.0], &[2.0], 10, 0).is_err());
        assert!(permutation_paired_test(&[1.0, 2.0], &[0.0, 0.5], 0, 0).is_err());
    }
}
