use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters of the convolution + self-attention classifier.
///
/// The convolutional front end follows the EEGNet layout: a temporal
/// convolution whose kernel spans half a second, a depthwise spatial
/// convolution over electrodes, then a separable convolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub n_channels: usize,
    pub n_samples: usize,
    /// Hz.
    pub sampling_rate: f64,
    pub n_classes: usize,
    /// F1: temporal filters.
    pub temporal_filters: usize,
    /// D: spatial filters per temporal filter.
    pub depth_multiplier: usize,
    /// F2: output channels of the separable convolution.
    pub pointwise_filters: usize,
    /// Temporal kernel length in samples. `None` means `sampling_rate / 2`.
    pub temporal_kernel_len: Option<usize>,
    pub separable_kernel_len: usize,
    pub pool1: usize,
    pub pool2: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub n_encoder_layers: usize,
    pub ffn_dim: usize,
    /// Post-pooling time steps grouped into one token.
    pub patch_size: usize,
    /// Dropout in the convolutional stack.
    pub dropout_p: f64,
    /// Dropout on the attention and feed-forward branches of the encoder.
    pub encoder_dropout_p: f64,
    pub use_positional_embeddings: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n_channels: 10,
            n_samples: 500,
            sampling_rate: 250.0,
            n_classes: 13,
            temporal_filters: 8,
            depth_multiplier: 2,
            pointwise_filters: 16,
            temporal_kernel_len: None,
            separable_kernel_len: 16,
            pool1: 4,
            pool2: 8,
            d_model: 32,
            n_heads: 2,
            n_encoder_layers: 2,
            ffn_dim: 64,
            patch_size: 1,
            dropout_p: 0.25,
            encoder_dropout_p: 0.1,
            use_positional_embeddings: true,
        }
    }
}

impl ModelConfig {
    pub fn temporal_kernel(&self) -> usize {
        self.temporal_kernel_len
            .unwrap_or_else(|| ((self.sampling_rate / 2.0).round() as usize).max(1))
    }

    /// F1·D, the channel count between the spatial and pointwise convolutions.
    pub fn spatial_filters(&self) -> usize {
        self.temporal_filters * self.depth_multiplier
    }

    /// Time length after both pooling stages (floor division at each).
    pub fn pooled_len(&self) -> usize {
        self.n_samples / self.pool1 / self.pool2
    }

    /// Number of patch tokens, excluding the classification token.
    pub fn n_tokens(&self) -> usize {
        self.pooled_len() / self.patch_size
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_channels", self.n_channels),
            ("n_samples", self.n_samples),
            ("temporal_filters", self.temporal_filters),
            ("depth_multiplier", self.depth_multiplier),
            ("pointwise_filters", self.pointwise_filters),
            ("separable_kernel_len", self.separable_kernel_len),
            ("pool1", self.pool1),
            ("pool2", self.pool2),
            ("d_model", self.d_model),
            ("n_heads", self.n_heads),
            ("ffn_dim", self.ffn_dim),
            ("patch_size", self.patch_size),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(self.sampling_rate > 0.0) {
            return Err(Error::Config("sampling_rate must be positive".into()));
        }
        if self.n_classes < 2 {
            return Err(Error::Config(format!(
                "n_classes must be at least 2, got {}",
                self.n_classes
            )));
        }
        let k = self.temporal_kernel();
        if k == 0 || k > self.n_samples {
            return Err(Error::Config(format!(
                "temporal kernel length {k} must be in 1..={}",
                self.n_samples
            )));
        }
        if self.d_model % self.n_heads != 0 {
            return Err(Error::Config(format!(
                "d_model {} is not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        let pooled = self.pooled_len();
        if pooled == 0 {
            return Err(Error::Config(format!(
                "pools {}·{} leave no time steps from {} samples",
                self.pool1, self.pool2, self.n_samples
            )));
        }
        if pooled % self.patch_size != 0 {
            return Err(Error::Config(format!(
                "patch_size {} does not divide the pooled length {pooled}",
                self.patch_size
            )));
        }
        for (name, p) in [("dropout_p", self.dropout_p), ("encoder_dropout_p", self.encoder_dropout_p)] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must be in [0, 1), got {p}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_shapes() {
        let c = ModelConfig::default();
        c.validate().unwrap();
        assert_eq!(c.temporal_kernel(), 125);
        // 500 -> 125 -> 15 (floor)
        assert_eq!(c.n_samples / c.pool1, 125);
        assert_eq!(c.pooled_len(), 15);
        assert_eq!(c.n_tokens(), 15);
        assert_eq!(c.head_dim(), 16);
    }

    #[test]
    fn rejects_invalid() {
        let bad = |f: fn(&mut ModelConfig)| {
            let mut c = ModelConfig::default();
            f(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.n_heads = 3));
        assert!(bad(|c| c.n_classes = 1));
        assert!(bad(|c| c.temporal_kernel_len = Some(501)));
        assert!(bad(|c| c.patch_size = 2));
        assert!(bad(|c| c.pool2 = 200));
        assert!(bad(|c| c.dropout_p = 1.0));
    }

    #[test]
    fn unknown_json_keys_rejected() {
        assert!(serde_json::from_str::<ModelConfig>(r#"{"d_model": 16, "bogus": 1}"#).is_err());
        let c: ModelConfig = serde_json::from_str(r#"{"d_model": 16}"#).unwrap();
        assert_eq!(c.d_model, 16);
        assert_eq!(c.n_classes, 13);
    }
}
