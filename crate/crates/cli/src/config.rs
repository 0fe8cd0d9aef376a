use std::path::Path;

use eegattn::dataio::{RawSynthSpec, SynthSpec};
use eegattn::dsp::PreprocessConfig;
use eegattn::nn::gradcheck::SuiteOptions;
use eegattn::nn::ModelConfig;
use eegattn::stats::{CompareOptions, CompareUnit, DEFAULT_N_PERM};
use eegattn::training::TrainConfig;
use eegattn::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub unit: CompareUnit,
    pub n_perm: usize,
    pub seed: u64,
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self {
            unit: CompareUnit::Subject,
            n_perm: DEFAULT_N_PERM,
            seed: 0,
        }
    }
}

impl StatsConfig {
    pub fn options(&self) -> CompareOptions {
        CompareOptions {
            unit: self.unit,
            n_perm: self.n_perm,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradcheckConfig {
    pub seeds: u64,
    pub first_seed: u64,
    pub eps: f64,
    pub tol: f64,
    pub coords_per_param: usize,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        let o = SuiteOptions::default();
        Self {
            seeds: o.seeds,
            first_seed: o.first_seed,
            eps: o.eps,
            tol: o.tol,
            coords_per_param: o.coords_per_param,
        }
    }
}

impl GradcheckConfig {
    pub fn options(&self) -> SuiteOptions {
        SuiteOptions {
            seeds: self.seeds,
            first_seed: self.first_seed,
            eps: self.eps,
            tol: self.tol,
            coords_per_param: self.coords_per_param,
        }
    }
}

/// Everything a run can be configured with. Loaded from a JSON file (all
/// sections optional, unknown keys rejected); command-line flags override
/// individual fields afterwards.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Global seed, applied to the seed of whichever section a command uses.
    pub seed: Option<u64>,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub synth: SynthSpec,
    pub raw_synth: RawSynthSpec,
    pub preprocess: PreprocessConfig,
    pub stats: StatsConfig,
    pub gradcheck: GradcheckConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.into(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("configuration serializes")
    }
}

/// Assigns `value` to `slot` when present.
pub fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn partial_sections_keep_other_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"train": {"epochs": 3}, "seed": 9}"#).unwrap();
        assert_eq!(c.train.epochs, 3);
        assert_eq!(c.train.batch_size, TrainConfig::default().batch_size);
        assert_eq!(c.seed, Some(9));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"trian": {}}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"train": {"epoch": 3}}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"stats": {"unit": "trial"}}"#).is_err());
    }

    #[test]
    fn resolved_config_round_trips() {
        let mut c = RunConfig::default();
        c.model.use_positional_embeddings = false;
        c.stats.unit = CompareUnit::Fold;
        let back: RunConfig = serde_json::from_value(c.to_value()).unwrap();
        assert_eq!(back, c);
    }
}
