use std::rc::Rc;

use super::Tensor;
use crate::error::{Error, Result};

/// Per-channel moments observed by a training-mode batch norm.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormStats {
    pub mean: Vec<f64>,
    /// Biased (population) variance.
    pub var: Vec<f64>,
    /// Elements reduced per channel.
    pub count: usize,
}

/// Values saved for the backward pass of both norms.
struct Normalized {
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
}

/// Batch normalization over `[B, C, H, T]`, per channel `C`.
///
/// With `running = None` the batch moments are used and returned; with
/// `Some((mean, var))` the given moments are used (inference mode) and the
/// returned stats are `None`.
pub fn batch_norm(
    x: &Tensor,
    gamma: &Tensor,
    beta: &Tensor,
    running: Option<(&[f64], &[f64])>,
    eps: f64,
) -> Result<(Tensor, Option<BatchNormStats>)> {
    let &[b, c, h, t] = x.shape() else {
        return Err(Error::ShapeMismatch {
            op: "batch_norm",
            lhs: x.shape().to_vec(),
            rhs: gamma.shape().to_vec(),
        });
    };
    if gamma.numel() != c || beta.numel() != c {
        return Err(Error::ShapeMismatch {
            op: "batch_norm",
            lhs: x.shape().to_vec(),
            rhs: gamma.shape().to_vec(),
        });
    }
    let plane = h * t;
    let count = b * plane;
    let xd = x.data();

    let (mean, var, stats) = match running {
        Some((m, v)) => {
            if m.len() != c || v.len() != c {
                return Err(Error::Data(format!(
                    "running moments have length {}/{}, expected {c}",
                    m.len(),
                    v.len()
                )));
            }
            (m.to_vec(), v.to_vec(), None)
        }
        None => {
            let mut mean = vec![0.0; c];
            let mut var = vec![0.0; c];
            for ch in 0..c {
                let mut s = 0.0;
                for bi in 0..b {
                    s += xd[(bi * c + ch) * plane..][..plane].iter().sum::<f64>();
                }
                let mu = s / count as f64;
                let mut ss = 0.0;
                for bi in 0..b {
                    ss += xd[(bi * c + ch) * plane..][..plane]
                        .iter()
                        .map(|v| (v - mu) * (v - mu))
                        .sum::<f64>();
                }
                mean[ch] = mu;
                var[ch] = ss / count as f64;
            }
            let stats = BatchNormStats {
                mean: mean.clone(),
                var: var.clone(),
                count,
            };
            (mean, var, Some(stats))
        }
    };
    let training = stats.is_some();

    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
    let mut xhat = vec![0.0; xd.len()];
    let mut out = vec![0.0; xd.len()];
    let (gd, bd) = (gamma.data(), beta.data());
    for bi in 0..b {
        for ch in 0..c {
            let off = (bi * c + ch) * plane;
            for i in off..off + plane {
                let z = (xd[i] - mean[ch]) * inv_std[ch];
                xhat[i] = z;
                out[i] = gd[ch] * z + bd[ch];
            }
        }
    }

    let saved = Rc::new(Normalized { xhat, inv_std });
    let (xt, gt, bt) = (x.clone(), gamma.clone(), beta.clone());
    let y = Tensor::from_op(
        "batch_norm",
        out,
        x.shape().to_vec(),
        &[x, gamma, beta],
        move |g, _| {
            let Normalized { xhat, inv_std } = &*saved;
            let mut sum_g = vec![0.0; c];
            let mut sum_gx = vec![0.0; c];
            for bi in 0..b {
                for ch in 0..c {
                    let off = (bi * c + ch) * plane;
                    for i in off..off + plane {
                        sum_g[ch] += g[i];
                        sum_gx[ch] += g[i] * xhat[i];
                    }
                }
            }
            let gx = xt.requires_grad().then(|| {
                let gam = gt.data();
                let mut gx = vec![0.0; g.len()];
                let n = count as f64;
                for bi in 0..b {
                    for ch in 0..c {
                        let off = (bi * c + ch) * plane;
                        let scale = gam[ch] * inv_std[ch];
                        if training {
                            let mg = sum_g[ch] / n;
                            let mgx = sum_gx[ch] / n;
                            for i in off..off + plane {
                                gx[i] = scale * (g[i] - mg - xhat[i] * mgx);
                            }
                        } else {
                            for i in off..off + plane {
                                gx[i] = scale * g[i];
                            }
                        }
                    }
                }
                gx
            });
            vec![gx, gt.requires_grad().then_some(sum_gx), bt.requires_grad().then_some(sum_g)]
        },
    );
    Ok((y, stats))
}

/// Layer normalization over the last axis with affine `gamma`, `beta`.
pub fn layer_norm(x: &Tensor, gamma: &Tensor, beta: &Tensor, eps: f64) -> Result<Tensor> {
    let d = *x.shape().last().unwrap();
    if gamma.numel() != d || beta.numel() != d {
        return Err(Error::ShapeMismatch {
            op: "layer_norm",
            lhs: x.shape().to_vec(),
            rhs: gamma.shape().to_vec(),
        });
    }
    let rows = x.numel() / d;
    let xd = x.data();
    let (gd, bd) = (gamma.data(), beta.data());
    let mut xhat = vec![0.0; xd.len()];
    let mut inv_std = vec![0.0; rows];
    let mut out = vec![0.0; xd.len()];
    for r in 0..rows {
        let row = &xd[r * d..(r + 1) * d];
        let mu = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / d as f64;
        let is = 1.0 / (var + eps).sqrt();
        inv_std[r] = is;
        for j in 0..d {
            let z = (row[j] - mu) * is;
            xhat[r * d + j] = z;
            out[r * d + j] = gd[j] * z + bd[j];
        }
    }
    let saved = Rc::new(Normalized { xhat, inv_std });
    let (xt, gt, bt) = (x.clone(), gamma.clone(), beta.clone());
    Ok(Tensor::from_op(
        "layer_norm",
        out,
        x.shape().to_vec(),
        &[x, gamma, beta],
        move |g, _| {
            let Normalized { xhat, inv_std } = &*saved;
            let gam = gt.data();
            let mut ggam = vec![0.0; d];
            let mut gbeta = vec![0.0; d];
            let mut gx = vec![0.0; g.len()];
            let n = d as f64;
            for r in 0..rows {
                let gr = &g[r * d..(r + 1) * d];
                let xr = &xhat[r * d..(r + 1) * d];
                let mut mean_gy = 0.0;
                let mut mean_gyx = 0.0;
                for j in 0..d {
                    ggam[j] += gr[j] * xr[j];
                    gbeta[j] += gr[j];
                    let gy = gr[j] * gam[j];
                    mean_gy += gy;
                    mean_gyx += gy * xr[j];
                }
                mean_gy /= n;
                mean_gyx /= n;
                for j in 0..d {
                    gx[r * d + j] = inv_std[r] * (gr[j] * gam[j] - mean_gy - xr[j] * mean_gyx);
                }
            }
            vec![
                xt.requires_grad().then_some(gx),
                gt.requires_grad().then_some(ggam),
                bt.requires_grad().then_some(gbeta),
            ]
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_norm_training_standardizes_channels() {
        let data: Vec<f64> = (0..2 * 3 * 2 * 5).map(|i| ((i * 7) % 11) as f64 * 0.3 + 1.0).collect();
        let x = Tensor::new(data, &[2, 3, 2, 5]);
        let (y, stats) = batch_norm(&x, &Tensor::ones(&[3]), &Tensor::zeros(&[3]), None, 0.0).unwrap();
        let stats = stats.unwrap();
        assert_eq!(stats.count, 20);
        for ch in 0..3 {
            let vals: Vec<f64> = (0..2)
                .flat_map(|b| y.data()[(b * 3 + ch) * 10..(b * 3 + ch + 1) * 10].to_vec())
                .collect();
            let m = vals.iter().sum::<f64>() / 20.0;
            let v = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 20.0;
            assert!(m.abs() < 1e-12);
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn batch_norm_inference_uses_running_moments() {
        let x = Tensor::new(vec![3.0, 5.0], &[1, 1, 1, 2]);
        let (y, stats) = batch_norm(
            &x,
            &Tensor::new(vec![2.0], &[1]),
            &Tensor::new(vec![1.0], &[1]),
            Some((&[1.0], &[4.0])),
            0.0,
        )
        .unwrap();
        assert!(stats.is_none());
        assert_eq!(y.data(), &[3.0, 5.0]);
    }

    #[test]
    fn layer_norm_rows_are_standardized() {
        let x = Tensor::new(vec![1.0, 2.0, 4.0, 8.0, -3.0, 0.0, 3.0, 9.0], &[2, 4]);
        let y = layer_norm(&x, &Tensor::ones(&[4]), &Tensor::zeros(&[4]), 1e-9).unwrap();
        for r in 0..2 {
            let row = &y.data()[r * 4..(r + 1) * 4];
            let m = row.iter().sum::<f64>() / 4.0;
            let v = row.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 4.0;
            assert!(m.abs() < 1e-12);
            assert!((v - 1.0).abs() < 1e-8);
        }
    }
}
