use super::layers::linear;
use super::ParamLeaves;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Turns `[B, F2, 1, T′]` feature maps into `[B, N+1, d_model]` tokens.
///
/// Each patch of `patch_size` consecutive time steps (all `F2` channels) is
/// flattened channel-major and projected to `d_model`. The learnable
/// classification token is prepended at position 0, then the learnable
/// positional table (row 0 belongs to the classification token) is added
/// when enabled.
pub fn tokenize(features: &Tensor, leaves: &ParamLeaves) -> Result<Tensor> {
    let cfg = &leaves.config;
    let &[b, f2, 1, t] = features.shape() else {
        return Err(Error::ShapeMismatch {
            op: "tokenize",
            lhs: features.shape().to_vec(),
            rhs: vec![0, cfg.pointwise_filters, 1, cfg.pooled_len()],
        });
    };
    let ps = cfg.patch_size;
    if f2 != cfg.pointwise_filters {
        return Err(Error::ShapeMismatch {
            op: "tokenize",
            lhs: features.shape().to_vec(),
            rhs: vec![b, cfg.pointwise_filters, 1, t],
        });
    }
    if ps == 0 || t % ps != 0 {
        return Err(Error::Config(format!(
            "patch_size {ps} does not divide the feature length {t}"
        )));
    }
    let n = t / ps;
    let d = cfg.d_model;

    let patches = features
        .reshape(&[b, f2, n, ps])?
        .permute(&[0, 2, 1, 3])?
        .reshape(&[b, n, f2 * ps])?;
    let tokens = linear(
        &patches,
        leaves.get("tokens.proj.weight")?,
        leaves.get("tokens.proj.bias")?,
    )?;
    let cls = leaves
        .get("tokens.cls")?
        .reshape(&[1, 1, d])?
        .broadcast_to(&[b, 1, d])?;
    let seq = Tensor::concat(&[&cls, &tokens], 1)?;
    if cfg.use_positional_embeddings {
        let pos = leaves.get("tokens.pos")?;
        if pos.shape() != [n + 1, d] {
            return Err(Error::ShapeMismatch {
                op: "tokenize",
                lhs: vec![n + 1, d],
                rhs: pos.shape().to_vec(),
            });
        }
        seq.add(&pos.reshape(&[1, n + 1, d])?)
    } else {
        Ok(seq)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{ModelConfig, ModelParams};

    fn leaves(cfg: &ModelConfig) -> ParamLeaves {
        ParamLeaves::new(&ModelParams::init(cfg, 5).unwrap(), false)
    }

    #[test]
    fn default_token_shape() {
        let cfg = ModelConfig::default();
        let f = Tensor::ones(&[3, 16, 1, 15]);
        assert_eq!(tokenize(&f, &leaves(&cfg)).unwrap().shape(), &[3, 16, 32]);
    }

    #[test]
    fn zero_features_give_zero_patch_tokens() {
        let cfg = ModelConfig::default();
        let mut p = ModelParams::init(&cfg, 5).unwrap();
        p.param_mut("tokens.pos").unwrap().data.iter_mut().for_each(|v| *v = 0.0);
        let l = ParamLeaves::new(&p, false);
        let y = tokenize(&Tensor::zeros(&[2, 16, 1, 15]), &l).unwrap();
        for b in 0..2 {
            let row0 = &y.data()[b * 16 * 32..b * 16 * 32 + 32];
            assert_eq!(row0, p.param("tokens.cls").unwrap().data.as_slice());
            assert!(y.data()[b * 16 * 32 + 32..(b + 1) * 16 * 32].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn patch_permutation_permutes_rows_without_positions() {
        let cfg = ModelConfig {
            use_positional_embeddings: false,
            ..ModelConfig::default()
        };
        let l = leaves(&cfg);
        let data: Vec<f64> = (0..16 * 15).map(|i| ((i * 37) % 101) as f64 / 50.0).collect();
        let f = Tensor::new(data.clone(), &[1, 16, 1, 15]);
        let perm: Vec<usize> = (0..15).map(|i| (i * 4) % 15).collect();
        let mut pdata = vec![0.0; data.len()];
        for c in 0..16 {
            for (j, &src) in perm.iter().enumerate() {
                pdata[c * 15 + j] = data[c * 15 + src];
            }
        }
        let y = tokenize(&f, &l).unwrap();
        let yp = tokenize(&Tensor::new(pdata, &[1, 16, 1, 15]), &l).unwrap();
        for (j, &src) in perm.iter().enumerate() {
            assert_eq!(&yp.data()[(j + 1) * 32..(j + 2) * 32], &y.data()[(src + 1) * 32..(src + 2) * 32]);
        }
    }

    #[test]
    fn patch_size_must_divide() {
        let cfg = ModelConfig::default();
        let l = leaves(&cfg);
        assert!(tokenize(&Tensor::ones(&[1, 16, 1, 14]), &l).is_err());
    }
}
