use serde::Serialize;

use super::attention::AttentionTrace;
use super::conv_stack::conv_feature_extractor;
use super::encoder::{encoder_block, EncoderWeights};
use super::layers::{linear, Mode};
use super::params::{buffer_layout, param_layout};
use super::tokens::tokenize;
use super::{ModelConfig, ParamLeaves};
use crate::error::Result;
use crate::tensor::{BatchNormStats, Tensor};

pub struct ModelOutput {
    /// `[B, n_classes]`
    pub scores: Tensor,
    pub trace: AttentionTrace,
    /// Batch moments per batch-norm layer; empty in inference mode.
    pub bn_stats: Vec<(&'static str, BatchNormStats)>,
}

/// Full classifier: conv features → tokens → encoder stack → linear head on
/// the classification token.
pub fn model_forward(batch: &Tensor, leaves: &ParamLeaves, mode: &mut Mode<'_>) -> Result<ModelOutput> {
    let conv = conv_feature_extractor(batch, leaves, mode)?;
    let (scores, trace) = forward_from_features(&conv.features, leaves, mode)?;
    Ok(ModelOutput {
        scores,
        trace,
        bn_stats: conv.bn_stats,
    })
}

/// The attention half of the model, starting from `[B, F2, 1, T′]` features.
pub fn forward_from_features(
    features: &Tensor,
    leaves: &ParamLeaves,
    mode: &mut Mode<'_>,
) -> Result<(Tensor, AttentionTrace)> {
    let cfg = &leaves.config;
    let mut x = tokenize(features, leaves)?;
    let mut trace = AttentionTrace::default();
    for layer in 0..cfg.n_encoder_layers {
        let w = EncoderWeights::from_leaves(leaves, layer)?;
        let (y, t) = encoder_block(&x, &w, cfg.n_heads, cfg.encoder_dropout_p, mode)?;
        trace.layers.push(t);
        x = y;
    }
    let b = x.shape()[0];
    let cls = x.narrow(1, 0, 1)?.reshape(&[b, cfg.d_model])?;
    let scores = linear(&cls, leaves.get("head.weight")?, leaves.get("head.bias")?)?;
    Ok((scores, trace))
}

#[derive(Debug, Clone, Serialize)]
pub struct StageShape {
    pub stage: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NamedShape {
    pub name: String,
    pub shape: Vec<usize>,
    pub count: usize,
}

/// Static description of a configured model.
#[derive(Debug, Clone, Serialize)]
pub struct ModelSummary {
    pub config: ModelConfig,
    pub param_count: usize,
    pub buffer_count: usize,
    /// Activation shapes for a single-trial batch.
    pub stages: Vec<StageShape>,
    pub params: Vec<NamedShape>,
}

pub fn describe(config: &ModelConfig) -> Result<ModelSummary> {
    config.validate()?;
    let (c, t) = (config.n_channels, config.n_samples);
    let (f1, fd, f2) = (config.temporal_filters, config.spatial_filters(), config.pointwise_filters);
    let t1 = t / config.pool1;
    let t2 = config.pooled_len();
    let n = config.n_tokens();
    let d = config.d_model;
    let st = |s: &str, shape: &[usize]| StageShape {
        stage: s.to_string(),
        shape: shape.to_vec(),
    };
    let mut stages = vec![
        st("input", &[1, 1, c, t]),
        st("temporal_conv", &[1, f1, c, t]),
        st("spatial_depthwise_conv", &[1, fd, 1, t]),
        st("avg_pool1", &[1, fd, 1, t1]),
        st("separable_conv", &[1, f2, 1, t1]),
        st("avg_pool2", &[1, f2, 1, t2]),
        st("tokens", &[1, n + 1, d]),
    ];
    for l in 0..config.n_encoder_layers {
        stages.push(st(&format!("encoder.{l}"), &[1, n + 1, d]));
    }
    stages.push(st("head", &[1, config.n_classes]));

    let named = |specs: Vec<super::params::ParamSpec>| -> Vec<NamedShape> {
        specs
            .into_iter()
            .map(|s| NamedShape {
                count: s.shape.iter().product(),
                name: s.name,
                shape: s.shape,
            })
            .collect()
    };
    let params = named(param_layout(config));
    let buffer_count = named(buffer_layout(config)).iter().map(|p| p.count).sum();
    Ok(ModelSummary {
        config: config.clone(),
        param_count: params.iter().map(|p| p.count).sum(),
        buffer_count,
        stages,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::ModelParams;

    #[test]
    fn default_scores_shape() {
        let cfg = ModelConfig::default();
        let l = ParamLeaves::new(&ModelParams::init(&cfg, 0).unwrap(), false);
        let x = Tensor::new(
            (0..4 * 10 * 500).map(|i| ((i as f64) * 0.37).sin()).collect(),
            &[4, 1, 10, 500],
        );
        let out = model_forward(&x, &l, &mut Mode::Eval).unwrap();
        assert_eq!(out.scores.shape(), &[4, 13]);
        assert_eq!(out.trace.layers.len(), 2);
        assert_eq!(out.trace.layers[0].tokens, 16);
    }

    #[test]
    fn describe_default() {
        let s = describe(&ModelConfig::default()).unwrap();
        assert_eq!(s.param_count, 20357);
        assert_eq!(s.buffer_count, 2 * (8 + 16 + 16));
        assert_eq!(s.stages.last().unwrap().shape, vec![1, 13]);
        assert_eq!(s.stages[5].shape, vec![1, 16, 1, 15]);
    }
}
