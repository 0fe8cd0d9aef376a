//! The classifier: EEGNet-style convolutional features, patch tokens with a
//! classification token, and a stack of post-norm transformer encoder blocks.

mod attention;
mod config;
mod conv_stack;
mod encoder;
pub mod gradcheck;
mod layers;
mod model;
mod params;
mod tokens;
pub mod weights;

pub use attention::{multi_head_attention, AttentionTrace, AttentionWeights, LayerAttention};
pub use config::ModelConfig;
pub use conv_stack::{conv_feature_extractor, ConvFeatures};
pub use encoder::{encoder_block, EncoderWeights};
pub use layers::{dropout, linear, Mode};
pub use model::{describe, forward_from_features, model_forward, ModelOutput, ModelSummary};
pub use params::{
    buffer_layout, param_count, param_layout, Init, InputNorm, ModelParams, ParamLeaves, ParamSpec,
    ParamTensor, BATCH_NORMS,
};
pub use tokens::tokenize;

pub use layers::{BATCH_NORM_EPS, BATCH_NORM_MOMENTUM, LAYER_NORM_EPS};
