//! Multi-head scaled dot-product self-attention.

use serde::Serialize;

use super::layers::linear;
use super::ParamLeaves;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Projection weights of one attention layer. Weights are `[d_model, d_model]`
/// (applied as `x · W`), biases `[d_model]`.
pub struct AttentionWeights<'a> {
    pub wq: &'a Tensor,
    pub bq: &'a Tensor,
    pub wk: &'a Tensor,
    pub bk: &'a Tensor,
    pub wv: &'a Tensor,
    pub bv: &'a Tensor,
    pub wo: &'a Tensor,
    pub bo: &'a Tensor,
}

impl<'a> AttentionWeights<'a> {
    pub fn from_leaves(leaves: &'a ParamLeaves, prefix: &str) -> Result<Self> {
        let g = |p: &str| leaves.get(&format!("{prefix}.{p}"));
        Ok(Self {
            wq: g("q.weight")?,
            bq: g("q.bias")?,
            wk: g("k.weight")?,
            bk: g("k.bias")?,
            wv: g("v.weight")?,
            bv: g("v.bias")?,
            wo: g("o.weight")?,
            bo: g("o.bias")?,
        })
    }
}

/// Attention weights of one layer, `[batch, heads, tokens, tokens]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerAttention {
    pub batch: usize,
    pub heads: usize,
    pub tokens: usize,
    pub weights: Vec<f64>,
}

impl LayerAttention {
    /// Weights of query `i` over all keys.
    pub fn row(&self, b: usize, h: usize, i: usize) -> &[f64] {
        let n = self.tokens;
        let off = ((b * self.heads + h) * n + i) * n;
        &self.weights[off..off + n]
    }
}

/// Per-layer attention maps from one forward pass.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AttentionTrace {
    pub layers: Vec<LayerAttention>,
}

/// Splits `[B, S, h·dk]` into `[B·h, S, dk]`.
fn split_heads(x: &Tensor, b: usize, s: usize, h: usize, dk: usize) -> Result<Tensor> {
    x.reshape(&[b, s, h, dk])?
        .permute(&[0, 2, 1, 3])?
        .reshape(&[b * h, s, dk])
}

/// Self-attention over `x: [B, S, d_model]`. Per head
/// `A = softmax(Q Kᵀ / √d_k)` and `out = A V`; heads are concatenated and
/// projected by `W_O`.
pub fn multi_head_attention(
    x: &Tensor,
    w: &AttentionWeights<'_>,
    n_heads: usize,
) -> Result<(Tensor, LayerAttention)> {
    let &[b, s, d] = x.shape() else {
        return Err(Error::ShapeMismatch {
            op: "multi_head_attention",
            lhs: x.shape().to_vec(),
            rhs: w.wq.shape().to_vec(),
        });
    };
    if n_heads == 0 || d % n_heads != 0 {
        return Err(Error::Config(format!(
            "d_model {d} is not divisible by {n_heads} heads"
        )));
    }
    let dk = d / n_heads;

    let q = split_heads(&linear(x, w.wq, w.bq)?, b, s, n_heads, dk)?;
    let k = split_heads(&linear(x, w.wk, w.bk)?, b, s, n_heads, dk)?;
    let v = split_heads(&linear(x, w.wv, w.bv)?, b, s, n_heads, dk)?;

    let scores = q.matmul(&k.transpose_last()?)?.scale(1.0 / (dk as f64).sqrt());
    let attn = scores.softmax(2)?;
    let ctx = attn
        .matmul(&v)?
        .reshape(&[b, n_heads, s, dk])?
        .permute(&[0, 2, 1, 3])?
        .reshape(&[b, s, d])?;
    let out = linear(&ctx, w.wo, w.bo)?;
    let trace = LayerAttention {
        batch: b,
        heads: n_heads,
        tokens: s,
        weights: attn.to_vec(),
    };
    Ok((out, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Owned {
        w: [Tensor; 8],
    }

    impl Owned {
        fn identity(d: usize) -> Self {
            let (i, z) = (Tensor::eye(d), Tensor::zeros(&[d]));
            Self {
                w: [i.clone(), z.clone(), i.clone(), z.clone(), i.clone(), z.clone(), i, z],
            }
        }

        fn weights(&self) -> AttentionWeights<'_> {
            let w = &self.w;
            AttentionWeights {
                wq: &w[0],
                bq: &w[1],
                wk: &w[2],
                bk: &w[3],
                wv: &w[4],
                bv: &w[5],
                wo: &w[6],
                bo: &w[7],
            }
        }
    }

    #[test]
    fn single_token_passes_through() {
        let own = Owned::identity(4);
        let x = Tensor::new(vec![0.3, -1.0, 2.0, 0.5], &[1, 1, 4]);
        let (y, tr) = multi_head_attention(&x, &own.weights(), 2).unwrap();
        assert_eq!(y.data(), x.data());
        assert_eq!(tr.row(0, 0, 0), &[1.0]);
    }

    #[test]
    fn equal_keys_average_values() {
        // Both tokens share the key [1, 1]; values differ.
        let own = Owned::identity(2);
        let mut w = own.weights();
        let proj = Tensor::new(vec![1.0, 1.0, 0.0, 0.0], &[2, 2]);
        let ones_bias = Tensor::zeros(&[2]);
        w.wk = &proj;
        w.bk = &ones_bias;
        let x = Tensor::new(vec![1.0, 0.0, 1.0, 4.0], &[1, 2, 2]);
        // keys: x·[[1,1],[0,0]] = [[1,1],[1,1]]
        let (y, tr) = multi_head_attention(&x, &w, 1).unwrap();
        for i in 0..2 {
            assert_eq!(tr.row(0, 0, i), &[0.5, 0.5]);
            assert_eq!(&y.data()[i * 2..i * 2 + 2], &[1.0, 2.0]);
        }
    }

    #[test]
    fn hand_evaluated_two_token_example() {
        let own = Owned::identity(2);
        let x = Tensor::new(vec![0.0, 0.0, 1.0, 0.0], &[1, 2, 2]);
        let (_, tr) = multi_head_attention(&x, &own.weights(), 1).unwrap();
        // Row 0: query [0,0] scores [0, 0] → [0.5, 0.5].
        assert_eq!(tr.row(0, 0, 0), &[0.5, 0.5]);
        // Row 1: query [1,0] scores [0, 1/√2].
        let e = (1.0 / 2f64.sqrt()).exp();
        let want = [1.0 / (1.0 + e), e / (1.0 + e)];
        for (a, b) in tr.row(0, 0, 1).iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_indivisible_heads() {
        let own = Owned::identity(4);
        assert!(multi_head_attention(&Tensor::zeros(&[1, 2, 4]), &own.weights(), 3).is_err());
    }
}
