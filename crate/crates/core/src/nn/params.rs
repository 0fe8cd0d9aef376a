//! Learned weights and their layout.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::ModelConfig;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// How a parameter is initialized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    /// Uniform on `±sqrt(6 / (fan_in + fan_out))`.
    GlorotUniform { fan_in: usize, fan_out: usize },
    Zeros,
    Ones,
    /// `N(0, std²)`.
    Normal { std: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
}

/// Named dense array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl ParamTensor {
    pub fn numel(&self) -> usize {
        self.data.len()
    }
}

/// Per-channel z-score statistics fit on a training portion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputNorm {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

fn spec(name: impl Into<String>, shape: &[usize], init: Init) -> ParamSpec {
    ParamSpec {
        name: name.into(),
        shape: shape.to_vec(),
        init,
    }
}

fn glorot(fan_in: usize, fan_out: usize) -> Init {
    Init::GlorotUniform { fan_in, fan_out }
}

/// Names of the three batch-norm layers of the convolutional stack.
pub const BATCH_NORMS: [&str; 3] = ["conv.bn1", "conv.bn2", "conv.bn3"];

/// Learnable parameters, in declared order. Every shape is a pure function
/// of the config.
pub fn param_layout(config: &ModelConfig) -> Vec<ParamSpec> {
    let f1 = config.temporal_filters;
    let fd = config.spatial_filters();
    let f2 = config.pointwise_filters;
    let k = config.temporal_kernel();
    let ks = config.separable_kernel_len;
    let c = config.n_channels;
    let d = config.d_model;
    let ffn = config.ffn_dim;
    let patch = f2 * config.patch_size;
    let embed = Init::Normal { std: 0.02 };

    let mut v = vec![
        spec("conv.temporal.weight", &[f1, 1, k], glorot(k, f1 * k)),
        spec("conv.bn1.gamma", &[f1], Init::Ones),
        spec("conv.bn1.beta", &[f1], Init::Zeros),
        spec("conv.spatial.weight", &[fd, c], glorot(c, fd)),
        spec("conv.bn2.gamma", &[fd], Init::Ones),
        spec("conv.bn2.beta", &[fd], Init::Zeros),
        spec("conv.separable.depthwise", &[fd, 1, ks], glorot(ks, ks)),
        spec("conv.separable.pointwise", &[f2, fd, 1], glorot(fd, f2)),
        spec("conv.bn3.gamma", &[f2], Init::Ones),
        spec("conv.bn3.beta", &[f2], Init::Zeros),
        spec("tokens.proj.weight", &[patch, d], glorot(patch, d)),
        spec("tokens.proj.bias", &[d], Init::Zeros),
        spec("tokens.cls", &[d], embed),
    ];
    if config.use_positional_embeddings {
        v.push(spec("tokens.pos", &[config.n_tokens() + 1, d], embed));
    }
    for l in 0..config.n_encoder_layers {
        let p = format!("encoder.{l}");
        for proj in ["q", "k", "v", "o"] {
            v.push(spec(format!("{p}.attn.{proj}.weight"), &[d, d], glorot(d, d)));
            v.push(spec(format!("{p}.attn.{proj}.bias"), &[d], Init::Zeros));
        }
        v.push(spec(format!("{p}.norm1.gamma"), &[d], Init::Ones));
        v.push(spec(format!("{p}.norm1.beta"), &[d], Init::Zeros));
        v.push(spec(format!("{p}.ffn.1.weight"), &[d, ffn], glorot(d, ffn)));
        v.push(spec(format!("{p}.ffn.1.bias"), &[ffn], Init::Zeros));
        v.push(spec(format!("{p}.ffn.2.weight"), &[ffn, d], glorot(ffn, d)));
        v.push(spec(format!("{p}.ffn.2.bias"), &[d], Init::Zeros));
        v.push(spec(format!("{p}.norm2.gamma"), &[d], Init::Ones));
        v.push(spec(format!("{p}.norm2.beta"), &[d], Init::Zeros));
    }
    v.push(spec("head.weight", &[d, config.n_classes], glorot(d, config.n_classes)));
    v.push(spec("head.bias", &[config.n_classes], Init::Zeros));
    v
}

/// Non-learned state: batch-norm running moments.
pub fn buffer_layout(config: &ModelConfig) -> Vec<ParamSpec> {
    let widths = [
        config.temporal_filters,
        config.spatial_filters(),
        config.pointwise_filters,
    ];
    BATCH_NORMS
        .iter()
        .zip(widths)
        .flat_map(|(bn, w)| {
            [
                spec(format!("{bn}.running_mean"), &[w], Init::Zeros),
                spec(format!("{bn}.running_var"), &[w], Init::Ones),
            ]
        })
        .collect()
}

pub fn param_count(config: &ModelConfig) -> usize {
    param_layout(config)
        .iter()
        .map(|s| s.shape.iter().product::<usize>())
        .sum()
}

fn materialize(spec: &ParamSpec, rng: &mut ChaCha8Rng) -> ParamTensor {
    let n: usize = spec.shape.iter().product();
    let data = match spec.init {
        Init::Zeros => vec![0.0; n],
        Init::Ones => vec![1.0; n],
        Init::GlorotUniform { fan_in, fan_out } => {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (0..n).map(|_| rng.random_range(-limit..limit)).collect()
        }
        Init::Normal { std } => {
            let dist = Normal::new(0.0, std).expect("finite std");
            (0..n).map(|_| dist.sample(rng)).collect()
        }
    };
    ParamTensor {
        name: spec.name.clone(),
        shape: spec.shape.clone(),
        data,
    }
}

/// All weights of one model instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub params: Vec<ParamTensor>,
    pub buffers: Vec<ParamTensor>,
    pub input_norm: Option<InputNorm>,
}

impl ModelParams {
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = param_layout(config)
            .iter()
            .map(|s| materialize(s, &mut rng))
            .collect();
        let buffers = buffer_layout(config)
            .iter()
            .map(|s| materialize(s, &mut rng))
            .collect();
        Ok(Self {
            config: config.clone(),
            params,
            buffers,
            input_norm: None,
        })
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(ParamTensor::numel).sum()
    }

    pub fn param(&self, name: &str) -> Option<&ParamTensor> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut ParamTensor> {
        self.params.iter_mut().find(|p| p.name == name)
    }

    pub fn buffer(&self, name: &str) -> Option<&ParamTensor> {
        self.buffers.iter().find(|p| p.name == name)
    }

    pub fn buffer_mut(&mut self, name: &str) -> Option<&mut ParamTensor> {
        self.buffers.iter_mut().find(|p| p.name == name)
    }

    /// Checks names and shapes against the layout implied by `config`.
    pub fn check_layout(&self) -> Result<()> {
        let check = |what: &str, have: &[ParamTensor], want: Vec<ParamSpec>| -> Result<()> {
            if have.len() != want.len() {
                return Err(Error::Data(format!(
                    "{what}: expected {} tensors, found {}",
                    want.len(),
                    have.len()
                )));
            }
            for (h, w) in have.iter().zip(&want) {
                if h.name != w.name || h.shape != w.shape || h.data.len() != h.shape.iter().product::<usize>() {
                    return Err(Error::Data(format!(
                        "{what}: expected {} {:?}, found {} {:?}",
                        w.name, w.shape, h.name, h.shape
                    )));
                }
            }
            Ok(())
        };
        check("parameters", &self.params, param_layout(&self.config))?;
        check("buffers", &self.buffers, buffer_layout(&self.config))?;
        if let Some(n) = &self.input_norm {
            if n.mean.len() != self.config.n_channels || n.std.len() != self.config.n_channels {
                return Err(Error::Data("input normalization has wrong channel count".into()));
            }
        }
        Ok(())
    }
}

/// Parameters bound as graph leaves for one forward pass.
pub struct ParamLeaves {
    pub config: ModelConfig,
    tensors: Vec<Tensor>,
    index: HashMap<String, usize>,
    buffers: HashMap<String, Vec<f64>>,
}

impl ParamLeaves {
    pub fn new(params: &ModelParams, requires_grad: bool) -> Self {
        let tensors = params
            .params
            .iter()
            .map(|p| {
                if requires_grad {
                    Tensor::parameter(p.data.clone(), &p.shape)
                } else {
                    Tensor::new(p.data.clone(), &p.shape)
                }
            })
            .collect();
        let index = params
            .params
            .iter()
            .enumerate()
            .map(|(i, p)| (p.name.clone(), i))
            .collect();
        let buffers = params
            .buffers
            .iter()
            .map(|b| (b.name.clone(), b.data.clone()))
            .collect();
        Self {
            config: params.config.clone(),
            tensors,
            index,
            buffers,
        }
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.index
            .get(name)
            .map(|&i| &self.tensors[i])
            .ok_or_else(|| Error::Data(format!("missing parameter {name}")))
    }

    /// Replaces one leaf, e.g. to differentiate with respect to it alone.
    pub fn set(&mut self, name: &str, t: Tensor) -> Result<()> {
        let i = *self
            .index
            .get(name)
            .ok_or_else(|| Error::Data(format!("missing parameter {name}")))?;
        if t.shape() != self.tensors[i].shape() {
            return Err(Error::ShapeMismatch {
                op: "ParamLeaves::set",
                lhs: self.tensors[i].shape().to_vec(),
                rhs: t.shape().to_vec(),
            });
        }
        self.tensors[i] = t;
        Ok(())
    }

    pub fn buffer(&self, name: &str) -> Result<&[f64]> {
        self.buffers
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Data(format!("missing buffer {name}")))
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    /// Gradients of every parameter, in declared order; zeros where none
    /// reached a leaf.
    pub fn grads(&self) -> Vec<Vec<f64>> {
        self.tensors
            .iter()
            .map(|t| t.grad_vec().unwrap_or_else(|| vec![0.0; t.numel()]))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_param_count_is_locked() {
        // Hand count for the default config:
        //   conv stack      1000 + 16 + 160 + 32 + 256 + 256 + 32 = 1752
        //   tokenization    16*32 + 32 + 32 + 16*32             = 1088
        //   encoder layer   4*(32*32+32) + 64 + (32*64+64) + (64*32+32) + 64 = 8544, x2
        //   head            32*13 + 13                          = 429
        assert_eq!(param_count(&ModelConfig::default()), 1752 + 1088 + 2 * 8544 + 429);
        assert_eq!(param_count(&ModelConfig::default()), 20357);
    }

    #[test]
    fn init_is_deterministic_and_matches_layout() {
        let c = ModelConfig::default();
        let a = ModelParams::init(&c, 7).unwrap();
        let b = ModelParams::init(&c, 7).unwrap();
        assert_eq!(a, b);
        a.check_layout().unwrap();
        assert_ne!(a, ModelParams::init(&c, 8).unwrap());
        assert_eq!(a.param_count(), 20357);
    }

    #[test]
    fn glorot_respects_limit() {
        let c = ModelConfig::default();
        let p = ModelParams::init(&c, 1).unwrap();
        let w = p.param("encoder.0.attn.q.weight").unwrap();
        let limit = (6.0f64 / 64.0).sqrt();
        assert!(w.data.iter().all(|v| v.abs() <= limit));
        assert!(p.param("head.bias").unwrap().data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn no_positional_table_when_disabled() {
        let c = ModelConfig {
            use_positional_embeddings: false,
            ..ModelConfig::default()
        };
        assert!(param_layout(&c).iter().all(|s| s.name != "tokens.pos"));
        assert_eq!(param_count(&c), 20357 - 16 * 32);
    }
}
