use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const BATCH_NORM_EPS: f64 = 1e-5;
pub const BATCH_NORM_MOMENTUM: f64 = 0.1;
pub const LAYER_NORM_EPS: f64 = 1e-9;

/// Training or inference behaviour of a forward pass.
///
/// In training mode dropout masks are drawn from `rng` and batch norms use
/// batch moments.
pub enum Mode<'a> {
    Eval,
    Train { rng: &'a mut ChaCha8Rng },
}

impl Mode<'_> {
    pub fn is_training(&self) -> bool {
        matches!(self, Mode::Train { .. })
    }
}

/// Inverted dropout: kept units are scaled by `1/(1-p)` at train time.
pub fn dropout(x: &Tensor, p: f64, mode: &mut Mode<'_>) -> Result<Tensor> {
    match mode {
        Mode::Train { rng } if p > 0.0 => {
            let keep = 1.0 / (1.0 - p);
            let mask: Vec<f64> = (0..x.numel())
                .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
                .collect();
            x.apply_mask(&mask)
        }
        _ => Ok(x.clone()),
    }
}

/// `x · w + b` over the last axis of a rank-2 or rank-3 input.
pub fn linear(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    let y = x.matmul(w)?;
    let mut bshape = vec![1; y.rank()];
    *bshape.last_mut().unwrap() = b.numel();
    if b.numel() != *y.shape().last().unwrap() {
        return Err(Error::ShapeMismatch {
            op: "linear",
            lhs: y.shape().to_vec(),
            rhs: b.shape().to_vec(),
        });
    }
    y.add(&b.reshape(&bshape)?)
}
