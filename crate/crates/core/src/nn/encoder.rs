use super::attention::{multi_head_attention, AttentionWeights, LayerAttention};
use super::layers::{dropout, linear, Mode, LAYER_NORM_EPS};
use super::ParamLeaves;
use crate::error::Result;
use crate::tensor::{layer_norm, Tensor};

/// Weights of one post-norm encoder block.
pub struct EncoderWeights<'a> {
    pub attn: AttentionWeights<'a>,
    pub norm1: (&'a Tensor, &'a Tensor),
    pub ffn1: (&'a Tensor, &'a Tensor),
    pub ffn2: (&'a Tensor, &'a Tensor),
    pub norm2: (&'a Tensor, &'a Tensor),
}

impl<'a> EncoderWeights<'a> {
    pub fn from_leaves(leaves: &'a ParamLeaves, layer: usize) -> Result<Self> {
        let p = format!("encoder.{layer}");
        let g = |s: &str| leaves.get(&format!("{p}.{s}"));
        Ok(Self {
            attn: AttentionWeights::from_leaves(leaves, &format!("{p}.attn"))?,
            norm1: (g("norm1.gamma")?, g("norm1.beta")?),
            ffn1: (g("ffn.1.weight")?, g("ffn.1.bias")?),
            ffn2: (g("ffn.2.weight")?, g("ffn.2.bias")?),
            norm2: (g("norm2.gamma")?, g("norm2.beta")?),
        })
    }
}

/// `y = LN(x + drop(MHA(x)))`, `z = LN(y + drop(FFN(y)))` with
/// `FFN = linear → ELU → linear`.
pub fn encoder_block(
    x: &Tensor,
    w: &EncoderWeights<'_>,
    n_heads: usize,
    dropout_p: f64,
    mode: &mut Mode<'_>,
) -> Result<(Tensor, LayerAttention)> {
    let (attn, trace) = multi_head_attention(x, &w.attn, n_heads)?;
    let y = layer_norm(
        &x.add(&dropout(&attn, dropout_p, mode)?)?,
        w.norm1.0,
        w.norm1.1,
        LAYER_NORM_EPS,
    )?;
    let hidden = linear(&y, w.ffn1.0, w.ffn1.1)?.elu();
    let ff = linear(&hidden, w.ffn2.0, w.ffn2.1)?;
    let z = layer_norm(
        &y.add(&dropout(&ff, dropout_p, mode)?)?,
        w.norm2.0,
        w.norm2.1,
        LAYER_NORM_EPS,
    )?;
    Ok((z, trace))
}
