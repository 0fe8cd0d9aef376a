//! Finite-difference verification of every differentiable op and of the
//! composed model + loss, on randomized small shapes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    conv_feature_extractor, encoder_block, forward_from_features, model_forward,
    multi_head_attention, tokenize, AttentionWeights, EncoderWeights, Mode, ModelConfig,
    ModelParams, ParamLeaves,
};
use crate::error::Result;
use crate::tensor::gradcheck::finite_diff_check_at;
use crate::tensor::{
    avg_pool_time, batch_norm, conv_time, finite_diff_check, layer_norm, spatial_depthwise,
    GradCheckReport, Tensor,
};
use crate::training::squared_hinge_loss;

/// Small model used for gradient checks: `[2, 1, 4, 64]` input.
pub fn toy_config() -> ModelConfig {
    ModelConfig {
        n_channels: 4,
        n_samples: 64,
        sampling_rate: 32.0,
        n_classes: 3,
        temporal_filters: 2,
        depth_multiplier: 2,
        pointwise_filters: 4,
        temporal_kernel_len: None,
        separable_kernel_len: 4,
        pool1: 2,
        pool2: 4,
        d_model: 8,
        n_heads: 2,
        n_encoder_layers: 2,
        ffn_dim: 12,
        patch_size: 2,
        dropout_p: 0.25,
        encoder_dropout_p: 0.1,
        use_positional_embeddings: true,
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub seeds: u64,
    pub first_seed: u64,
    pub eps: f64,
    pub tol: f64,
    /// Coordinates sampled per parameter tensor in the composed-model check.
    pub coords_per_param: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            seeds: 20,
            first_seed: 0,
            eps: 1e-5,
            tol: 1e-4,
            coords_per_param: 6,
        }
    }
}

/// Worst result per op over all seeds.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub seeds: u64,
    pub tol: f64,
    pub ops: Vec<GradCheckReport>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.ops.iter().all(|r| r.passed)
    }
}

fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize], scale: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new((0..n).map(|_| rng.random_range(-scale..scale)).collect(), shape)
}

/// `sum(y ⊙ r)` with a fixed random `r`, so every output element contributes
/// with a distinct weight.
fn project(y: &Tensor, r: &Tensor) -> Result<Tensor> {
    Ok(y.mul(r)?.sum())
}

fn dim(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> usize {
    rng.random_range(lo..=hi)
}

/// Every check for one seed, named by op.
fn checks_for_seed(seed: u64, o: &SuiteOptions) -> Result<Vec<GradCheckReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (eps, tol) = (o.eps, o.tol);
    let mut out = Vec::new();

    // Elementwise with broadcasting.
    let (m, n) = (dim(&mut rng, 1, 4), dim(&mut rng, 2, 5));
    let a = rand_tensor(&mut rng, &[m, n], 1.0);
    let b = rand_tensor(&mut rng, &[1, n], 1.0);
    let r = rand_tensor(&mut rng, &[m, n], 1.0);
    out.push(finite_diff_check("add", |x| project(&x.add(&b)?, &r), &a, eps, tol)?);
    out.push(finite_diff_check("add(broadcast rhs)", |x| project(&a.add(x)?, &r), &b, eps, tol)?);
    out.push(finite_diff_check("sub", |x| project(&a.sub(x)?, &r), &b, eps, tol)?);
    out.push(finite_diff_check("mul", |x| project(&x.mul(&b)?, &r), &a, eps, tol)?);
    out.push(finite_diff_check("mul(broadcast rhs)", |x| project(&a.mul(x)?, &r), &b, eps, tol)?);
    out.push(finite_diff_check("scale", |x| project(&x.scale(-1.7), &r), &a, eps, tol)?);
    out.push(finite_diff_check("elu", |x| project(&x.elu(), &r), &a, eps, tol)?);
    out.push(finite_diff_check("mean", |x| Ok(x.mul(x)?.mean()), &a, eps, tol)?);

    // Matrix products.
    let (bt, k, p) = (dim(&mut rng, 1, 3), dim(&mut rng, 1, 5), dim(&mut rng, 1, 4));
    let lhs = rand_tensor(&mut rng, &[m, k], 1.0);
    let rhs = rand_tensor(&mut rng, &[k, p], 1.0);
    let r2 = rand_tensor(&mut rng, &[m, p], 1.0);
    out.push(finite_diff_check("matmul(lhs)", |x| project(&x.matmul(&rhs)?, &r2), &lhs, eps, tol)?);
    out.push(finite_diff_check("matmul(rhs)", |x| project(&lhs.matmul(x)?, &r2), &rhs, eps, tol)?);
    let bl = rand_tensor(&mut rng, &[bt, m, k], 1.0);
    let br = rand_tensor(&mut rng, &[bt, k, p], 1.0);
    let r3 = rand_tensor(&mut rng, &[bt, m, p], 1.0);
    out.push(finite_diff_check("matmul(batched lhs)", |x| project(&x.matmul(&br)?, &r3), &bl, eps, tol)?);
    out.push(finite_diff_check("matmul(batched rhs)", |x| project(&bl.matmul(x)?, &r3), &br, eps, tol)?);
    out.push(finite_diff_check("matmul(shared rhs)", |x| project(&bl.matmul(x)?, &r3), &rhs, eps, tol)?);

    // Reductions, softmax, shape ops.
    let x3 = rand_tensor(&mut rng, &[bt, m, n], 2.0);
    let r3b = rand_tensor(&mut rng, &[bt, m, n], 1.0);
    for axis in 0..3 {
        out.push(finite_diff_check("softmax", |x| project(&x.softmax(axis)?, &r3b), &x3, eps, tol)?);
    }
    let rs = rand_tensor(&mut rng, &[bt, 1, n], 1.0);
    out.push(finite_diff_check("sum_axis", |x| project(&x.sum_axis(1)?, &rs), &x3, eps, tol)?);
    let rp = rand_tensor(&mut rng, &[n, bt, m], 1.0);
    out.push(finite_diff_check("permute", |x| project(&x.permute(&[2, 0, 1])?, &rp), &x3, eps, tol)?);
    let rr = rand_tensor(&mut rng, &[bt * m * n], 1.0);
    out.push(finite_diff_check("reshape", |x| project(&x.reshape(&[bt * m * n])?, &rr), &x3, eps, tol)?);
    let rn = rand_tensor(&mut rng, &[bt, m, n - 1], 1.0);
    out.push(finite_diff_check("narrow", |x| project(&x.narrow(2, 1, n - 1)?, &rn), &x3, eps, tol)?);
    let other = rand_tensor(&mut rng, &[bt, 2, n], 1.0);
    let rc = rand_tensor(&mut rng, &[bt, m + 2, n], 1.0);
    out.push(finite_diff_check(
        "concat",
        |x| project(&Tensor::concat(&[&other, x], 1)?, &rc),
        &x3,
        eps,
        tol,
    )?);
    let row = rand_tensor(&mut rng, &[1, 1, n], 1.0);
    out.push(finite_diff_check("broadcast_to", |x| project(&x.broadcast_to(&[bt, m, n])?, &r3b), &row, eps, tol)?);
    let mask: Vec<f64> = (0..bt * m * n)
        .map(|_| if rng.random::<f64>() < 0.3 { 0.0 } else { 1.0 / 0.7 })
        .collect();
    out.push(finite_diff_check("dropout", |x| project(&x.apply_mask(&mask)?, &r3b), &x3, eps, tol)?);

    // Convolutions and pooling on [B, C, H, T].
    let (b4, c4, h4, t4) = (dim(&mut rng, 1, 2), 2, dim(&mut rng, 1, 3), dim(&mut rng, 6, 12));
    let k4 = dim(&mut rng, 1, 5);
    let xin = rand_tensor(&mut rng, &[b4, c4, h4, t4], 1.0);
    let wfull = rand_tensor(&mut rng, &[4, c4, k4], 1.0);
    let wdepth = rand_tensor(&mut rng, &[4, 1, k4], 1.0);
    let rconv = rand_tensor(&mut rng, &[b4, 4, h4, t4], 1.0);
    out.push(finite_diff_check("conv_time(input)", |x| project(&conv_time(x, &wfull, 1)?, &rconv), &xin, eps, tol)?);
    out.push(finite_diff_check("conv_time(weight)", |w| project(&conv_time(&xin, w, 1)?, &rconv), &wfull, eps, tol)?);
    out.push(finite_diff_check("conv_time(depthwise input)", |x| project(&conv_time(x, &wdepth, 2)?, &rconv), &xin, eps, tol)?);
    out.push(finite_diff_check("conv_time(depthwise weight)", |w| project(&conv_time(&xin, w, 2)?, &rconv), &wdepth, eps, tol)?);
    let ws = rand_tensor(&mut rng, &[4, h4], 1.0);
    let rsp = rand_tensor(&mut rng, &[b4, 4, 1, t4], 1.0);
    out.push(finite_diff_check("spatial_depthwise(input)", |x| project(&spatial_depthwise(x, &ws)?, &rsp), &xin, eps, tol)?);
    out.push(finite_diff_check("spatial_depthwise(weight)", |w| project(&spatial_depthwise(&xin, w)?, &rsp), &ws, eps, tol)?);
    let pool = dim(&mut rng, 1, 3);
    let rpool = rand_tensor(&mut rng, &[b4, c4, h4, t4 / pool], 1.0);
    out.push(finite_diff_check("avg_pool_time", |x| project(&avg_pool_time(x, pool)?, &rpool), &xin, eps, tol)?);

    // Normalizations.
    let gamma = rand_tensor(&mut rng, &[c4], 1.5);
    let beta = rand_tensor(&mut rng, &[c4], 1.0);
    let rbn = rand_tensor(&mut rng, &[b4, c4, h4, t4], 1.0);
    out.push(finite_diff_check("batch_norm(train input)", |x| project(&batch_norm(x, &gamma, &beta, None, 1e-5)?.0, &rbn), &xin, eps, tol)?);
    out.push(finite_diff_check("batch_norm(gamma)", |g| project(&batch_norm(&xin, g, &beta, None, 1e-5)?.0, &rbn), &gamma, eps, tol)?);
    out.push(finite_diff_check("batch_norm(beta)", |bb| project(&batch_norm(&xin, &gamma, bb, None, 1e-5)?.0, &rbn), &beta, eps, tol)?);
    let (rm, rv) = (vec![0.1, -0.2], vec![0.8, 1.3]);
    out.push(finite_diff_check(
        "batch_norm(eval input)",
        |x| project(&batch_norm(x, &gamma, &beta, Some((&rm, &rv)), 1e-5)?.0, &rbn),
        &xin,
        eps,
        tol,
    )?);
    let lg = rand_tensor(&mut rng, &[n], 1.5);
    let lb = rand_tensor(&mut rng, &[n], 1.0);
    out.push(finite_diff_check("layer_norm(input)", |x| project(&layer_norm(x, &lg, &lb, 1e-9)?, &r3b), &x3, eps, tol)?);
    out.push(finite_diff_check("layer_norm(gamma)", |g| project(&layer_norm(&x3, g, &lb, 1e-9)?, &r3b), &lg, eps, tol)?);
    out.push(finite_diff_check("layer_norm(beta)", |bb| project(&layer_norm(&x3, &lg, bb, 1e-9)?, &r3b), &lb, eps, tol)?);

    // Loss.
    let classes = dim(&mut rng, 2, 5);
    let scores = rand_tensor(&mut rng, &[bt + 1, classes], 2.0);
    let labels: Vec<usize> = (0..bt + 1).map(|_| rng.random_range(0..classes)).collect();
    out.push(finite_diff_check("squared_hinge_loss", |s| squared_hinge_loss(s, &labels), &scores, eps, tol)?);

    // Model layers on the toy config.
    let cfg = toy_config();
    let params = ModelParams::init(&cfg, seed)?;
    let leaves = ParamLeaves::new(&params, false);
    let d = cfg.d_model;
    let s = cfg.n_tokens() + 1;
    let tokens_in = rand_tensor(&mut rng, &[2, s, d], 1.0);
    let rtok = rand_tensor(&mut rng, &[2, s, d], 1.0);

    let aw = AttentionWeights::from_leaves(&leaves, "encoder.0.attn")?;
    out.push(finite_diff_check(
        "multi_head_attention(input)",
        |x| project(&multi_head_attention(x, &aw, cfg.n_heads)?.0, &rtok),
        &tokens_in,
        eps,
        tol,
    )?);
    out.push(finite_diff_check(
        "multi_head_attention(W_Q)",
        |wq| {
            let w = AttentionWeights { wq, ..AttentionWeights::from_leaves(&leaves, "encoder.0.attn")? };
            project(&multi_head_attention(&tokens_in, &w, cfg.n_heads)?.0, &rtok)
        },
        leaves.get("encoder.0.attn.q.weight")?,
        eps,
        tol,
    )?);
    let ew = EncoderWeights::from_leaves(&leaves, 0)?;
    let mode_seed = seed.wrapping_add(0x5eed);
    out.push(finite_diff_check(
        "encoder_block(input)",
        |x| {
            let mut r = ChaCha8Rng::seed_from_u64(mode_seed);
            let (y, _) = encoder_block(x, &ew, cfg.n_heads, cfg.encoder_dropout_p, &mut Mode::Train { rng: &mut r })?;
            project(&y, &rtok)
        },
        &tokens_in,
        eps,
        tol,
    )?);

    let feats = rand_tensor(&mut rng, &[2, cfg.pointwise_filters, 1, cfg.pooled_len()], 1.0);
    out.push(finite_diff_check(
        "tokenize(features)",
        |f| project(&tokenize(f, &leaves)?, &rtok),
        &feats,
        eps,
        tol,
    )?);
    let input = rand_tensor(&mut rng, &[2, 1, cfg.n_channels, cfg.n_samples], 1.0);
    let rfeat = rand_tensor(&mut rng, &[2, cfg.pointwise_filters, 1, cfg.pooled_len()], 1.0);
    out.push(finite_diff_check(
        "conv_feature_extractor(input)",
        |x| {
            let mut r = ChaCha8Rng::seed_from_u64(mode_seed);
            project(&conv_feature_extractor(x, &leaves, &mut Mode::Train { rng: &mut r })?.features, &rfeat)
        },
        &input,
        eps,
        tol,
    )?);
    out.push(finite_diff_check(
        "forward_from_features(features)",
        |f| {
            let mut r = ChaCha8Rng::seed_from_u64(mode_seed);
            Ok(forward_from_features(f, &leaves, &mut Mode::Train { rng: &mut r })?.0.mean())
        },
        &feats,
        eps,
        tol,
    )?);

    // Composed model + loss, w.r.t. the input and a sample of every parameter.
    let labels: Vec<usize> = (0..2).map(|_| rng.random_range(0..cfg.n_classes)).collect();
    let loss_of = |leaves: &ParamLeaves, x: &Tensor| -> Result<Tensor> {
        let mut r = ChaCha8Rng::seed_from_u64(mode_seed);
        let outp = model_forward(x, leaves, &mut Mode::Train { rng: &mut r })?;
        squared_hinge_loss(&outp.scores, &labels)
    };
    out.push(finite_diff_check("model+loss(input)", |x| loss_of(&leaves, x), &input, eps, tol)?);
    let mut worst: Option<GradCheckReport> = None;
    for spec in &params.params {
        let n = spec.data.len();
        let coords: Vec<usize> = if n <= o.coords_per_param {
            (0..n).collect()
        } else {
            (0..o.coords_per_param).map(|_| rng.random_range(0..n)).collect()
        };
        let p = Tensor::new(spec.data.clone(), &spec.shape);
        let rep = finite_diff_check_at(
            "model+loss(parameters)",
            |w| {
                let mut l = ParamLeaves::new(&params, false);
                l.set(&spec.name, w.clone())?;
                loss_of(&l, &input)
            },
            &p,
            eps,
            tol,
            Some(&coords),
        )?;
        worst = Some(match worst {
            Some(w) => merge(w, rep),
            None => rep,
        });
    }
    out.extend(worst);
    Ok(out)
}

fn merge(a: GradCheckReport, b: GradCheckReport) -> GradCheckReport {
    let max_rel_error = if a.max_rel_error.is_nan() || b.max_rel_error.is_nan() {
        f64::NAN
    } else {
        a.max_rel_error.max(b.max_rel_error)
    };
    GradCheckReport {
        op_name: a.op_name,
        max_rel_error,
        passed: a.passed && b.passed,
        checked: a.checked + b.checked,
    }
}

/// Runs every check for `seeds` consecutive seeds and keeps the worst result
/// per op.
pub fn run_suite(o: &SuiteOptions) -> Result<SuiteReport> {
    let mut ops: Vec<GradCheckReport> = Vec::new();
    for seed in o.first_seed..o.first_seed + o.seeds {
        for rep in checks_for_seed(seed, o)? {
            match ops.iter_mut().find(|r| r.op_name == rep.op_name) {
                Some(slot) => *slot = merge(slot.clone(), rep),
                None => ops.push(rep),
            }
        }
    }
    Ok(SuiteReport {
        seeds: o.seeds,
        tol: o.tol,
        ops,
    })
}
