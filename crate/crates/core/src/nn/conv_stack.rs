//! EEGNet-style convolutional feature extractor.

use super::layers::{dropout, Mode, BATCH_NORM_EPS};
use super::ParamLeaves;
use crate::error::{Error, Result};
use crate::tensor::{avg_pool_time, batch_norm, conv_time, spatial_depthwise, BatchNormStats, Tensor};

/// Output of the convolutional stack.
pub struct ConvFeatures {
    /// `[B, F2, 1, T′]`
    pub features: Tensor,
    /// Batch moments of `conv.bn1..3`, present in training mode only.
    pub bn_stats: Vec<(&'static str, BatchNormStats)>,
}

fn bn(
    name: &'static str,
    x: &Tensor,
    leaves: &ParamLeaves,
    mode: &Mode<'_>,
    stats: &mut Vec<(&'static str, BatchNormStats)>,
) -> Result<Tensor> {
    let gamma = leaves.get(&format!("{name}.gamma"))?;
    let beta = leaves.get(&format!("{name}.beta"))?;
    let running = if mode.is_training() {
        None
    } else {
        Some((
            leaves.buffer(&format!("{name}.running_mean"))?,
            leaves.buffer(&format!("{name}.running_var"))?,
        ))
    };
    let (y, s) = batch_norm(x, gamma, beta, running, BATCH_NORM_EPS)?;
    if let Some(s) = s {
        stats.push((name, s));
    }
    Ok(y)
}

/// `[B, 1, C, T]` → `[B, F2, 1, T′]` with `T′ = ⌊⌊T/pool1⌋/pool2⌋`.
///
/// temporal conv → BN → depthwise spatial conv → BN → ELU → avg-pool →
/// dropout → separable conv (depthwise then pointwise) → BN → ELU →
/// avg-pool → dropout.
pub fn conv_feature_extractor(
    batch: &Tensor,
    leaves: &ParamLeaves,
    mode: &mut Mode<'_>,
) -> Result<ConvFeatures> {
    let cfg = &leaves.config;
    match *batch.shape() {
        [_, 1, c, t] if c == cfg.n_channels && t == cfg.n_samples => {}
        _ => {
            return Err(Error::ShapeMismatch {
                op: "conv_feature_extractor",
                lhs: batch.shape().to_vec(),
                rhs: vec![0, 1, cfg.n_channels, cfg.n_samples],
            })
        }
    }
    let mut stats = Vec::new();
    let fd = cfg.spatial_filters();

    let x = conv_time(batch, leaves.get("conv.temporal.weight")?, 1)?;
    let x = bn("conv.bn1", &x, leaves, mode, &mut stats)?;
    let x = spatial_depthwise(&x, leaves.get("conv.spatial.weight")?)?;
    let x = bn("conv.bn2", &x, leaves, mode, &mut stats)?.elu();
    let x = avg_pool_time(&x, cfg.pool1)?;
    let x = dropout(&x, cfg.dropout_p, mode)?;

    let x = conv_time(&x, leaves.get("conv.separable.depthwise")?, fd)?;
    let x = conv_time(&x, leaves.get("conv.separable.pointwise")?, 1)?;
    let x = bn("conv.bn3", &x, leaves, mode, &mut stats)?.elu();
    let x = avg_pool_time(&x, cfg.pool2)?;
    let x = dropout(&x, cfg.dropout_p, mode)?;

    Ok(ConvFeatures {
        features: x,
        bn_stats: stats,
    })
}
