//! Convolutions over `[batch, channels, height, time]` feature maps.
//!
//! The network only ever convolves along time (with kernels `1 × K`) or
//! collapses the height axis with a depthwise `H × 1` kernel, so these are
//! implemented as dedicated ops rather than a general 2-D convolution.

use std::rc::Rc;

use super::kernels::{axpy, correlate_acc, dot};
use super::Tensor;
use crate::error::{Error, Result};

fn expect_rank4(op: &'static str, x: &Tensor) -> Result<[usize; 4]> {
    match *x.shape() {
        [a, b, c, d] => Ok([a, b, c, d]),
        _ => Err(Error::ShapeMismatch {
            op,
            lhs: x.shape().to_vec(),
            rhs: vec![0; 4],
        }),
    }
}

/// Grouped convolution along the time axis with "same" zero padding.
///
/// `x` is `[B, Cin, H, T]`, `w` is `[Cout, Cin/groups, K]`. Output is
/// `[B, Cout, H, T]`. Padding puts `(K-1)/2` zeros before the signal and the
/// rest after it. No bias.
pub fn conv_time(x: &Tensor, w: &Tensor, groups: usize) -> Result<Tensor> {
    let [b, cin, h, t] = expect_rank4("conv_time", x)?;
    let bad = || Error::ShapeMismatch {
        op: "conv_time",
        lhs: x.shape().to_vec(),
        rhs: w.shape().to_vec(),
    };
    let &[cout, cpg, k] = w.shape() else {
        return Err(bad());
    };
    if groups == 0 || cin % groups != 0 || cout % groups != 0 || cin / groups != cpg {
        return Err(bad());
    }
    let opg = cout / groups;
    let pad_left = (k - 1) / 2;
    let tp = t + k - 1;

    // Zero-padded copy of every input row, kept for the weight gradient.
    let mut xp = vec![0.0; b * cin * h * tp];
    for row in 0..b * cin * h {
        xp[row * tp + pad_left..row * tp + pad_left + t]
            .copy_from_slice(&x.data()[row * t..(row + 1) * t]);
    }
    let xp: Rc<[f64]> = xp.into();
    let wd = w.data();

    let mut out = vec![0.0; b * cout * h * t];
    for bi in 0..b {
        for o in 0..cout {
            let g = o / opg;
            for ci in 0..cpg {
                let c = g * cpg + ci;
                let wrow = &wd[(o * cpg + ci) * k..(o * cpg + ci + 1) * k];
                for hi in 0..h {
                    let src = &xp[((bi * cin + c) * h + hi) * tp..][..tp];
                    let dst = &mut out[((bi * cout + o) * h + hi) * t..][..t];
                    correlate_acc(src, wrow, dst);
                }
            }
        }
    }

    let (xt, wt) = (x.clone(), w.clone());
    Ok(Tensor::from_op(
        "conv_time",
        out,
        vec![b, cout, h, t],
        &[x, w],
        move |gout, _| {
            let gx = xt.requires_grad().then(|| {
                let wd = wt.data();
                let mut gxp = vec![0.0; tp];
                let mut gx = vec![0.0; b * cin * h * t];
                for bi in 0..b {
                    for c in 0..cin {
                        let g = c / cpg;
                        let ci = c % cpg;
                        for hi in 0..h {
                            gxp.iter_mut().for_each(|v| *v = 0.0);
                            for o in g * opg..(g + 1) * opg {
                                let wrow = &wd[(o * cpg + ci) * k..(o * cpg + ci + 1) * k];
                                let grow = &gout[((bi * cout + o) * h + hi) * t..][..t];
                                for (kk, &wv) in wrow.iter().enumerate() {
                                    axpy(wv, grow, &mut gxp[kk..kk + t]);
                                }
                            }
                            gx[((bi * cin + c) * h + hi) * t..][..t]
                                .copy_from_slice(&gxp[pad_left..pad_left + t]);
                        }
                    }
                }
                gx
            });
            let gw = wt.requires_grad().then(|| {
                let mut gw = vec![0.0; cout * cpg * k];
                for bi in 0..b {
                    for o in 0..cout {
                        let g = o / opg;
                        for ci in 0..cpg {
                            let c = g * cpg + ci;
                            let gwrow = &mut gw[(o * cpg + ci) * k..(o * cpg + ci + 1) * k];
                            for hi in 0..h {
                                let src = &xp[((bi * cin + c) * h + hi) * tp..][..tp];
                                let grow = &gout[((bi * cout + o) * h + hi) * t..][..t];
                                // gw[kk] += Σ_j grow[j] · src[kk + j]
                                correlate_acc(src, grow, gwrow);
                            }
                        }
                    }
                }
                gw
            });
            vec![gx, gw]
        },
    ))
}

/// Depthwise convolution with an `H × 1` kernel that collapses the height
/// (electrode) axis.
///
/// `x` is `[B, G, H, T]` and `w` is `[G·D, H]`; output channel `o` reads input
/// channel `o / D`. Output is `[B, G·D, 1, T]`. No bias.
pub fn spatial_depthwise(x: &Tensor, w: &Tensor) -> Result<Tensor> {
    let [b, g, h, t] = expect_rank4("spatial_depthwise", x)?;
    let bad = || Error::ShapeMismatch {
        op: "spatial_depthwise",
        lhs: x.shape().to_vec(),
        rhs: w.shape().to_vec(),
    };
    let &[cout, wh] = w.shape() else {
        return Err(bad());
    };
    if wh != h || cout % g != 0 {
        return Err(bad());
    }
    let d = cout / g;
    let (xd, wd) = (x.data(), w.data());
    let mut out = vec![0.0; b * cout * t];
    for bi in 0..b {
        for o in 0..cout {
            let dst = &mut out[(bi * cout + o) * t..][..t];
            for hi in 0..h {
                axpy(wd[o * h + hi], &xd[((bi * g + o / d) * h + hi) * t..][..t], dst);
            }
        }
    }
    let (xt, wt) = (x.clone(), w.clone());
    Ok(Tensor::from_op(
        "spatial_depthwise",
        out,
        vec![b, cout, 1, t],
        &[x, w],
        move |gout, _| {
            let gx = xt.requires_grad().then(|| {
                let wd = wt.data();
                let mut gx = vec![0.0; b * g * h * t];
                for bi in 0..b {
                    for o in 0..cout {
                        let grow = &gout[(bi * cout + o) * t..][..t];
                        for hi in 0..h {
                            axpy(wd[o * h + hi], grow, &mut gx[((bi * g + o / d) * h + hi) * t..][..t]);
                        }
                    }
                }
                gx
            });
            let gw = wt.requires_grad().then(|| {
                let xd = xt.data();
                let mut gw = vec![0.0; cout * h];
                for bi in 0..b {
                    for o in 0..cout {
                        let grow = &gout[(bi * cout + o) * t..][..t];
                        for hi in 0..h {
                            gw[o * h + hi] += dot(grow, &xd[((bi * g + o / d) * h + hi) * t..][..t]);
                        }
                    }
                }
                gw
            });
            vec![gx, gw]
        },
    ))
}

/// Non-overlapping average pooling along time with floor semantics: trailing
/// samples that do not fill a window are dropped.
pub fn avg_pool_time(x: &Tensor, pool: usize) -> Result<Tensor> {
    let [b, c, h, t] = expect_rank4("avg_pool_time", x)?;
    if pool == 0 || t / pool == 0 {
        return Err(Error::Config(format!(
            "pool size {pool} leaves no output samples from time length {t}"
        )));
    }
    let to = t / pool;
    let rows = b * c * h;
    let inv = 1.0 / pool as f64;
    let mut out = Vec::with_capacity(rows * to);
    for r in 0..rows {
        let src = &x.data()[r * t..(r + 1) * t];
        for w in src.chunks_exact(pool) {
            out.push(w.iter().sum::<f64>() * inv);
        }
    }
    Ok(Tensor::from_op(
        "avg_pool_time",
        out,
        vec![b, c, h, to],
        &[x],
        move |g, _| {
            let mut gx = vec![0.0; rows * t];
            for r in 0..rows {
                for j in 0..to {
                    let v = g[r * to + j] * inv;
                    gx[r * t + j * pool..r * t + (j + 1) * pool]
                        .iter_mut()
                        .for_each(|e| *e = v);
                }
            }
            vec![Some(gx)]
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct definition of the same-padded grouped convolution.
    fn conv_reference(x: &Tensor, w: &Tensor, groups: usize) -> Vec<f64> {
        let [b, cin, h, t] = [x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]];
        let [cout, cpg, k] = [w.shape()[0], w.shape()[1], w.shape()[2]];
        let opg = cout / groups;
        let pad = (k - 1) as isize / 2;
        let mut out = vec![0.0; b * cout * h * t];
        for bi in 0..b {
            for o in 0..cout {
                for hi in 0..h {
                    for ti in 0..t {
                        let mut acc = 0.0;
                        for ci in 0..cpg {
                            let c = (o / opg) * cpg + ci;
                            for kk in 0..k {
                                let src = ti as isize + kk as isize - pad;
                                if src >= 0 && (src as usize) < t {
                                    acc += w.data()[(o * cpg + ci) * k + kk]
                                        * x.data()[((bi * cin + c) * h + hi) * t + src as usize];
                                }
                            }
                        }
                        out[((bi * cout + o) * h + hi) * t + ti] = acc;
                    }
                }
            }
        }
        out
    }

    fn ramp(n: usize, f: f64) -> Vec<f64> {
        (0..n).map(|i| ((i as f64) * f).sin()).collect()
    }

    #[test]
    fn conv_time_matches_reference() {
        for &(cin, cout, groups, k) in &[(1, 3, 1, 5), (4, 4, 4, 4), (4, 2, 1, 1), (2, 4, 2, 3)] {
            let x = Tensor::new(ramp(2 * cin * 3 * 9, 0.7), &[2, cin, 3, 9]);
            let w = Tensor::new(ramp(cout * (cin / groups) * k, 1.3), &[cout, cin / groups, k]);
            let y = conv_time(&x, &w, groups).unwrap();
            let want = conv_reference(&x, &w, groups);
            for (a, b) in y.data().iter().zip(&want) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn delta_kernel_reproduces_input() {
        // odd length 5: centre tap at index 2 == pad_left
        let x = Tensor::new(ramp(1 * 1 * 2 * 12, 0.4), &[1, 1, 2, 12]);
        let w = Tensor::new(vec![0.0, 0.0, 1.0, 0.0, 0.0], &[1, 1, 5]);
        let y = conv_time(&x, &w, 1).unwrap();
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn conv_rejects_bad_groups() {
        let x = Tensor::zeros(&[1, 3, 1, 8]);
        let w = Tensor::zeros(&[2, 1, 3]);
        assert!(conv_time(&x, &w, 2).is_err());
    }

    #[test]
    fn spatial_collapses_height() {
        let x = Tensor::new(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &[1, 1, 3, 2]);
        let w = Tensor::new(vec![1.0, 1.0, 1.0, 1.0, 0.0, -1.0], &[2, 3]);
        let y = spatial_depthwise(&x, &w).unwrap();
        assert_eq!(y.shape(), &[1, 2, 1, 2]);
        assert_eq!(y.data(), &[9.0, 12.0, -4.0, -4.0]);
    }

    #[test]
    fn pooling_floors() {
        let x = Tensor::new((0..10).map(f64::from).collect(), &[1, 1, 1, 10]);
        let y = avg_pool_time(&x, 4).unwrap();
        assert_eq!(y.data(), &[1.5, 5.5]);
        assert!(avg_pool_time(&x, 11).is_err());
    }
}
