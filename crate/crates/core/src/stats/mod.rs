//! Nonparametric comparison of decoding performance between conditions.

mod compare;
mod gamma;
mod kruskal;
mod permutation;

pub use compare::{
    compare_conditions, compare_samples, CompareOptions, CompareUnit, Comparison, ConditionSummary, ALPHA,
    DEFAULT_N_PERM,
};
pub use gamma::{chi2_sf, gamma_q, ln_gamma};
pub use kruskal::{kruskal_wallis, mid_ranks, KruskalWallis, SampleGroup};
pub use permutation::{
    permutation_paired_test, permutation_paired_test_exact, PermutationTest, MAX_EXACT_PAIRS,
};
