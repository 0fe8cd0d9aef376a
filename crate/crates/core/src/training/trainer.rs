use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kfold::stratified_kfold;
use super::loss::squared_hinge_loss;
use super::optim::Adam;
use super::report::{CvSummary, FoldReport};
use crate::dataio::TrialSet;
use crate::error::{Error, Result};
use crate::nn::{model_forward, InputNorm, Mode, ModelConfig, ModelParams, ParamLeaves, BATCH_NORM_MOMENTUM};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub weight_decay: f64,
    pub folds: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 16,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            weight_decay: 0.0,
            folds: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.folds == 0 {
            return Err(Error::Config("epochs, batch_size and folds must be positive".into()));
        }
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !finite_nonneg(self.learning_rate) || !finite_nonneg(self.weight_decay) {
            return Err(Error::Config("learning_rate and weight_decay must be finite and ≥ 0".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.adam_eps > 0.0) {
            return Err(Error::Config("Adam needs β1, β2 ∈ [0, 1) and ε > 0".into()));
        }
        Ok(())
    }
}

/// Independent seed for stream `stream` of `base` (SplitMix64 finalizer).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Channels whose standard deviation falls below this are left unscaled.
const MIN_STD: f64 = 1e-12;

/// Per-channel mean and standard deviation over all trials and samples.
pub fn fit_input_norm(t: &TrialSet) -> InputNorm {
    let (c, s) = (t.n_channels(), t.n_samples);
    let n = (t.n_trials() * s) as f64;
    let mut mean = vec![0.0; c];
    for i in 0..t.n_trials() {
        let trial = t.trial(i);
        for (ch, m) in mean.iter_mut().enumerate() {
            *m += trial[ch * s..(ch + 1) * s].iter().sum::<f64>();
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; c];
    for i in 0..t.n_trials() {
        let trial = t.trial(i);
        for (ch, v) in var.iter_mut().enumerate() {
            *v += trial[ch * s..(ch + 1) * s].iter().map(|x| (x - mean[ch]).powi(2)).sum::<f64>();
        }
    }
    let std = var
        .iter()
        .map(|v| {
            let sd = (v / n).sqrt();
            if sd > MIN_STD {
                sd
            } else {
                1.0
            }
        })
        .collect();
    InputNorm { mean, std }
}

fn check_dims(t: &TrialSet, cfg: &ModelConfig) -> Result<()> {
    if t.n_channels() != cfg.n_channels || t.n_samples != cfg.n_samples || t.n_classes != cfg.n_classes {
        return Err(Error::ShapeMismatch {
            op: "model input",
            lhs: vec![t.n_channels(), t.n_samples, t.n_classes],
            rhs: vec![cfg.n_channels, cfg.n_samples, cfg.n_classes],
        });
    }
    Ok(())
}

/// Normalized `[B, 1, C, S]` batch of the trials at `idx`.
pub fn batch_tensor(t: &TrialSet, idx: &[usize], norm: &InputNorm) -> Tensor {
    let (c, s) = (t.n_channels(), t.n_samples);
    let mut data = Vec::with_capacity(idx.len() * c * s);
    for &i in idx {
        let trial = t.trial(i);
        for ch in 0..c {
            let (m, inv) = (norm.mean[ch], 1.0 / norm.std[ch]);
            data.extend(trial[ch * s..(ch + 1) * s].iter().map(|x| (x - m) * inv));
        }
    }
    Tensor::new(data, &[idx.len(), 1, c, s])
}

fn update_running_stats(params: &mut ModelParams, stats: &[(&'static str, crate::tensor::BatchNormStats)]) -> Result<()> {
    for (bn, st) in stats {
        let unbias = if st.count > 1 {
            st.count as f64 / (st.count - 1) as f64
        } else {
            1.0
        };
        let m = BATCH_NORM_MOMENTUM;
        let rm = params
            .buffer_mut(&format!("{bn}.running_mean"))
            .ok_or_else(|| Error::Data(format!("missing buffer {bn}.running_mean")))?;
        rm.data.iter_mut().zip(&st.mean).for_each(|(r, v)| *r = (1.0 - m) * *r + m * v);
        let rv = params
            .buffer_mut(&format!("{bn}.running_var"))
            .ok_or_else(|| Error::Data(format!("missing buffer {bn}.running_var")))?;
        rv.data.iter_mut().zip(&st.var).for_each(|(r, v)| *r = (1.0 - m) * *r + m * v * unbias);
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    /// Mean training loss per epoch (weighted by batch size).
    pub loss_history: Vec<f64>,
}

/// Mini-batch training with per-epoch shuffling; z-score statistics are fit
/// on `train` and stored in the returned parameters. Deterministic in
/// `cfg.seed`.
pub fn train_one_fold(init: &ModelParams, train: &TrialSet, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    check_dims(train, &init.config)?;
    if train.n_trials() == 0 {
        return Err(Error::Data("empty training set".into()));
    }
    let mut params = init.clone();
    let norm = fit_input_norm(train);
    params.input_norm = Some(norm.clone());
    let mut opt = Adam::new(&params.params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps, cfg.weight_decay);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train.n_trials()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (batch_index, idx) in order.chunks(cfg.batch_size).enumerate() {
            let x = batch_tensor(train, idx, &norm);
            let labels: Vec<usize> = idx.iter().map(|&i| train.labels[i]).collect();
            let leaves = ParamLeaves::new(&params, true);
            let out = model_forward(&x, &leaves, &mut Mode::Train { rng: &mut rng })?;
            let loss = squared_hinge_loss(&out.scores, &labels)?;
            let value = loss.item();
            if !value.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_index,
                    value,
                });
            }
            loss.backward()?;
            let grads = leaves.grads();
            opt.step(&mut params.params, &grads);
            update_running_stats(&mut params, &out.bn_stats)?;
            total += value * idx.len() as f64;
        }
        history.push(total / train.n_trials() as f64);
    }
    Ok(TrainOutcome {
        params,
        loss_history: history,
    })
}

/// Trials scored per inference batch.
const EVAL_BATCH: usize = 64;

/// Inference-mode scores, `n_trials × n_classes` row-major.
pub fn predict_scores(params: &ModelParams, data: &TrialSet) -> Result<Vec<f64>> {
    check_dims(data, &params.config)?;
    let norm = params
        .input_norm
        .as_ref()
        .ok_or_else(|| Error::Data("parameters carry no input normalization statistics".into()))?;
    let leaves = ParamLeaves::new(params, false);
    let all: Vec<usize> = (0..data.n_trials()).collect();
    let mut scores = Vec::with_capacity(data.n_trials() * params.config.n_classes);
    for idx in all.chunks(EVAL_BATCH) {
        let out = model_forward(&batch_tensor(data, idx, norm), &leaves, &mut Mode::Eval)?;
        scores.extend_from_slice(&out.scores.data());
    }
    Ok(scores)
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    /// `confusion[true][predicted]`
    pub confusion: Vec<Vec<usize>>,
    pub predictions: Vec<usize>,
}

/// Accuracy and confusion matrix from a score matrix.
pub fn evaluate_scores(scores: &[f64], labels: &[usize], n_classes: usize) -> Result<Evaluation> {
    if scores.len() != labels.len() * n_classes {
        return Err(Error::ShapeMismatch {
            op: "evaluate",
            lhs: vec![scores.len()],
            rhs: vec![labels.len(), n_classes],
        });
    }
    let mut confusion = vec![vec![0usize; n_classes]; n_classes];
    let mut predictions = Vec::with_capacity(labels.len());
    for (row, &label) in scores.chunks(n_classes.max(1)).zip(labels) {
        if label >= n_classes {
            return Err(Error::LabelOutOfRange { label, n_classes });
        }
        let p = argmax(row);
        confusion[label][p] += 1;
        predictions.push(p);
    }
    let correct: usize = (0..n_classes).map(|k| confusion[k][k]).sum();
    let accuracy = if labels.is_empty() {
        0.0
    } else {
        correct as f64 / labels.len() as f64
    };
    Ok(Evaluation {
        accuracy,
        confusion,
        predictions,
    })
}

pub fn evaluate(params: &ModelParams, test: &TrialSet) -> Result<Evaluation> {
    let scores = predict_scores(params, test)?;
    evaluate_scores(&scores, &test.labels, params.config.n_classes)
}

#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub folds: Vec<FoldReport>,
    pub summary: CvSummary,
    pub fold_params: Vec<ModelParams>,
    /// Wall-clock seconds per fold; kept out of the reports so that those
    /// stay bit-reproducible.
    pub fold_seconds: Vec<f64>,
}

fn run_fold(
    fold: usize,
    (train_idx, test_idx): &(Vec<usize>, Vec<usize>),
    data: &TrialSet,
    model: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<(FoldReport, ModelParams, f64)> {
    let start = Instant::now();
    let fold_seed = derive_seed(cfg.seed, fold as u64);
    let init = ModelParams::init(model, derive_seed(fold_seed, 0))?;
    let fold_cfg = TrainConfig {
        seed: derive_seed(fold_seed, 1),
        ..cfg.clone()
    };
    let trained = train_one_fold(&init, &data.subset(train_idx), &fold_cfg)?;
    let eval = evaluate(&trained.params, &data.subset(test_idx))?;
    let report = FoldReport {
        fold_index: fold,
        n_train: train_idx.len(),
        n_test: test_idx.len(),
        test_indices: test_idx.clone(),
        train_loss_history: trained.loss_history,
        test_accuracy: eval.accuracy,
        confusion: eval.confusion,
    };
    Ok((report, trained.params, start.elapsed().as_secs_f64()))
}

/// Stratified k-fold cross-validation with an independently initialized and
/// trained model per fold. `parallel_folds > 1` trains folds concurrently;
/// results do not depend on it.
pub fn cross_validate(data: &TrialSet, model: &ModelConfig, cfg: &TrainConfig, parallel_folds: usize) -> Result<CvOutcome> {
    cfg.validate()?;
    model.validate()?;
    check_dims(data, model)?;
    let splits = stratified_kfold(&data.labels, cfg.folds, derive_seed(cfg.seed, u64::MAX))?;
    let results: Vec<Result<(FoldReport, ModelParams, f64)>> = if parallel_folds > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallel_folds)
            .build()
            .map_err(|e| Error::Config(format!("cannot start fold workers: {e}")))?;
        pool.install(|| {
            use rayon::prelude::*;
            splits
                .par_iter()
                .enumerate()
                .map(|(f, s)| run_fold(f, s, data, model, cfg))
                .collect()
        })
    } else {
        splits
            .iter()
            .enumerate()
            .map(|(f, s)| run_fold(f, s, data, model, cfg))
            .collect()
    };
    let mut folds = Vec::new();
    let mut fold_params = Vec::new();
    let mut fold_seconds = Vec::new();
    for r in results {
        let (rep, p, secs) = r?;
        folds.push(rep);
        fold_params.push(p);
        fold_seconds.push(secs);
    }
    let summary = CvSummary::from_accuracies(folds.iter().map(|f| f.test_accuracy).collect(), model.n_classes);
    Ok(CvOutcome {
        folds,
        summary,
        fold_params,
        fold_seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{generate_synthetic, SynthSpec};

    fn tiny_model(channels: usize, samples: usize, classes: usize) -> ModelConfig {
        ModelConfig {
            n_channels: channels,
            n_samples: samples,
            sampling_rate: 128.0,
            n_classes: classes,
            temporal_kernel_len: Some(16),
            temporal_filters: 4,
            depth_multiplier: 2,
            pointwise_filters: 8,
            separable_kernel_len: 8,
            d_model: 16,
            n_heads: 2,
            n_encoder_layers: 1,
            ffn_dim: 32,
            ..ModelConfig::default()
        }
    }

    fn tiny_data(seed: u64) -> TrialSet {
        generate_synthetic(&SynthSpec {
            n_classes: 3,
            trials_per_class: 6,
            n_channels: 3,
            n_samples: 128,
            fs: 128.0,
            snr_db: 10.0,
            seed,
        })
        .unwrap()
    }

    fn short(epochs: usize, lr: f64) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: 8,
            learning_rate: lr,
            folds: 3,
            seed: 4,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[0.0; 5]), 0);
    }

    #[test]
    fn evaluation_of_fixed_scores() {
        let perfect = [1.0, -1.0, -1.0, 1.0, -1.0, 1.0];
        let e = evaluate_scores(&perfect, &[0, 1, 1], 2).unwrap();
        assert_eq!(e.accuracy, 1.0);
        assert_eq!(e.confusion, vec![vec![1, 0], vec![0, 2]]);
        let constant = [0.5; 8];
        let e = evaluate_scores(&constant, &[0, 1, 1, 1], 2).unwrap();
        assert_eq!(e.predictions, vec![0; 4]);
        assert_eq!(e.accuracy, 0.25);
    }

    #[test]
    fn norm_statistics() {
        let t = tiny_data(1);
        let n = fit_input_norm(&t);
        let x = batch_tensor(&t, &(0..t.n_trials()).collect::<Vec<_>>(), &n);
        let s = t.n_samples;
        let d = x.data();
        for ch in 0..t.n_channels() {
            let vals: Vec<f64> = (0..t.n_trials()).flat_map(|i| d[(i * 3 + ch) * s..(i * 3 + ch + 1) * s].to_vec()).collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            let v = vals.iter().map(|x| (x - m).powi(2)).sum::<f64>() / vals.len() as f64;
            assert!(m.abs() < 1e-12 && (v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_learning_rate_freezes_parameters() {
        let t = tiny_data(2);
        let init = ModelParams::init(&tiny_model(3, 128, 3), 0).unwrap();
        let out = train_one_fold(&init, &t, &short(3, 0.0)).unwrap();
        assert_eq!(out.params.params, init.params);
        assert_eq!(out.loss_history.len(), 3);
        assert!(out.loss_history.iter().all(|l| l.is_finite() && *l >= 0.0));
    }

    #[test]
    fn training_is_deterministic_and_reduces_loss() {
        let t = tiny_data(3);
        let init = ModelParams::init(&tiny_model(3, 128, 3), 1).unwrap();
        let a = train_one_fold(&init, &t, &short(15, 3e-3)).unwrap();
        let b = train_one_fold(&init, &t, &short(15, 3e-3)).unwrap();
        assert_eq!(a.loss_history, b.loss_history);
        assert_eq!(a.params, b.params);
        assert!(a.loss_history.last().unwrap() < &a.loss_history[0]);
    }

    #[test]
    fn cross_validation_tests_each_trial_once() {
        let t = tiny_data(4);
        let cv = cross_validate(&t, &tiny_model(3, 128, 3), &short(2, 1e-3), 1).unwrap();
        assert_eq!(cv.folds.len(), 3);
        let mut all: Vec<usize> = cv.folds.iter().flat_map(|f| f.test_indices.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..t.n_trials()).collect::<Vec<_>>());
        for f in &cv.folds {
            let rows: usize = f.confusion.iter().flatten().sum();
            assert_eq!(rows, f.n_test);
        }
        let par = cross_validate(&t, &tiny_model(3, 128, 3), &short(2, 1e-3), 3).unwrap();
        assert_eq!(par.folds, cv.folds);
    }

    #[test]
    fn rejects_mismatched_data() {
        let t = tiny_data(5);
        let init = ModelParams::init(&tiny_model(4, 128, 3), 0).unwrap();
        assert!(train_one_fold(&init, &t, &short(1, 1e-3)).is_err());
        let mut p = ModelParams::init(&tiny_model(3, 128, 3), 0).unwrap();
        assert!(evaluate(&p, &t).is_err());
        p.input_norm = Some(fit_input_norm(&t));
        assert!(evaluate(&p, &t).is_ok());
    }

    #[test]
    fn seeds_differ_by_stream() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
        assert_eq!(derive_seed(9, 3), derive_seed(9, 3));
    }
}
