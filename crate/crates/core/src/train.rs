//! Composite loss, Adam, k-fold splitting and the training loop.
//!
//! Per batch, each sample runs forward and backward on its own tape (in
//! parallel); gradients are then summed in sample order and averaged, so
//! results do not depend on the thread count.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{grad_check, Fault, Mask, Tape, Tensor, TensorError, Var};
use crate::graph::{format_sig9, GraphPair, WeightedGraph};
use crate::metrics::mae_edges;
use crate::model::{
    forward, init_params, predict_prepared, DecoderOutput, ModelConfig, ModelError, ModelParams,
    PreparedGraph,
};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("non-finite gradient for {param} (epoch {epoch}, batch {batch})")]
    NonFiniteGradient {
        epoch: usize,
        batch: usize,
        param: String,
    },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("{n} samples cannot be split into {k} folds")]
    TooFewSamples { n: usize, k: usize },
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
    #[error("invalid training config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub alpha: f64,
    pub beta: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub folds: usize,
    /// Global gradient-norm cap; off unless set.
    pub clip_norm: Option<f64>,
    pub weight_loss: WeightLoss,
}

/// Which pairs the weight MAE averages over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightLoss {
    /// Every pair `i<j`, zeros included.
    #[default]
    AllPairs,
    /// Only pairs that are edges of the target.
    Edges,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha: 10.0,
            beta: 5.0,
            lr: 1e-3,
            batch_size: 8,
            epochs: 50,
            seed: 42,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            folds: 5,
            clip_norm: None,
            weight_loss: WeightLoss::AllPairs,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: &str| Err(TrainError::Config(msg.to_string()));
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return bad("alpha and beta must be nonnegative");
        }
        if self.lr.is_nan() || self.lr <= 0.0 {
            return bad("lr must be positive");
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be at least 1");
        }
        if self.folds < 2 {
            return bad("folds must be at least 2");
        }
        if matches!(self.clip_norm, Some(c) if c.is_nan() || c <= 0.0) {
            return bad("clip_norm must be positive");
        }
        Ok(())
    }
}

/// What the model is asked to reproduce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Reconstruct the source graph.
    #[default]
    SelfSupervised,
    /// Map the source graph to a different target graph.
    Supervised,
    /// Reconstruct a single pair for many epochs.
    Overfit,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "self_supervised" => Ok(Mode::SelfSupervised),
            "supervised" => Ok(Mode::Supervised),
            "overfit" => Ok(Mode::Overfit),
            other => Err(format!(
                "unknown mode {other:?} (self_supervised|supervised|overfit)"
            )),
        }
    }
}

impl Mode {
    /// The pair the model is trained or scored on under this mode.
    pub fn apply(self, pair: &GraphPair) -> GraphPair {
        match self {
            Mode::Supervised => pair.clone(),
            Mode::SelfSupervised | Mode::Overfit => pair.self_supervised(),
        }
    }
}

/// Loss terms for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossParts {
    pub total: f64,
    pub structure: f64,
    pub weight: f64,
}

/// Tape handles of the composite loss.
#[derive(Debug, Clone, Copy)]
pub struct LossVars {
    pub total: Var,
    pub structure: Var,
    pub weight: Var,
}

/// Dense targets derived from a ground-truth graph.
#[derive(Debug, Clone)]
pub struct Targets {
    pub weights: Tensor,
    /// Edge indicator (`w > 0`) as 0/1.
    pub edges: Vec<f64>,
    pub mask: Mask,
    pub weight_mask: Mask,
}

impl Targets {
    pub fn new(target: &WeightedGraph, weight_loss: WeightLoss) -> Self {
        let n = target.n();
        let mask = Mask::upper_triangle(n);
        let weight_mask = match weight_loss {
            WeightLoss::AllPairs => mask.clone(),
            WeightLoss::Edges => {
                let adj = target.as_slice();
                let idx = mask
                    .indices()
                    .iter()
                    .copied()
                    .filter(|&k| adj[k] > 0.0)
                    .collect();
                Mask::from_indices(n, n, idx)
            }
        };
        Self {
            weights: Tensor::new(n, n, target.as_slice().to_vec()).unwrap(),
            edges: target.binarize(0.0).to_f64(),
            mask,
            weight_mask,
        }
    }
}

/// `alpha * BCE(logits, edges) + beta * MAE(weights, target)`, the BCE over
/// the strict upper triangle and the MAE over `targets.weight_mask`.
pub fn total_loss(
    tape: &mut Tape,
    decoded: DecoderOutput,
    targets: &Targets,
    alpha: f64,
    beta: f64,
) -> Result<LossVars, TrainError> {
    let structure = tape.bce_with_logits_masked(decoded.logits, &targets.edges, &targets.mask)?;
    let weight = tape.mae_masked(decoded.weights, &targets.weights, &targets.weight_mask)?;
    let s = tape.scale(structure, alpha)?;
    let w = tape.scale(weight, beta)?;
    let total = tape.add(s, w)?;
    Ok(LossVars {
        total,
        structure,
        weight,
    })
}

/// Named gradients, same keys as [`ModelParams`].
pub type ParamGrads = BTreeMap<String, Tensor>;

/// A training sample with its extracted structure cached.
#[derive(Debug, Clone)]
pub struct Sample {
    pub id: String,
    pub prepared: PreparedGraph,
    pub targets: Targets,
    pub target: WeightedGraph,
}

impl Sample {
    pub fn new(
        pair: &GraphPair,
        config: &ModelConfig,
        weight_loss: WeightLoss,
    ) -> Result<Self, TrainError> {
        Ok(Self {
            id: pair.id.clone(),
            prepared: PreparedGraph::new(&pair.source, config)?,
            targets: Targets::new(&pair.target, weight_loss),
            target: pair.target.clone(),
        })
    }
}

/// Effective loss weights: a removed decoder branch contributes nothing.
pub fn loss_weights(model: &ModelConfig, train: &TrainConfig) -> (f64, f64) {
    let alpha = if model.variant.has_struct() {
        train.alpha
    } else {
        0.0
    };
    let beta = if model.variant.has_weight() {
        train.beta
    } else {
        0.0
    };
    (alpha, beta)
}

/// Forward and backward for one sample.
pub fn sample_gradients(
    sample: &Sample,
    params: &ModelParams,
    model: &ModelConfig,
    alpha: f64,
    beta: f64,
) -> Result<(LossParts, ParamGrads), TrainError> {
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape);
    let out = forward(&mut tape, &sample.prepared, &bound, model)?;
    let decoded = DecoderOutput {
        logits: out.logits,
        weights: out.weights,
    };
    let loss = total_loss(&mut tape, decoded, &sample.targets, alpha, beta)?;
    let parts = LossParts {
        total: tape.value(loss.total).item(),
        structure: tape.value(loss.structure).item(),
        weight: tape.value(loss.weight).item(),
    };
    let mut grads = tape.backward(loss.total)?;
    let named = bound
        .iter()
        .map(|(name, &var)| {
            let g = grads
                .take(var)
                .unwrap_or_else(|| Tensor::zeros(tape.shape(var).0, tape.shape(var).1));
            (name.clone(), g)
        })
        .collect();
    Ok((parts, named))
}

/// Loss terms without gradients.
pub fn sample_loss(
    sample: &Sample,
    params: &ModelParams,
    model: &ModelConfig,
    alpha: f64,
    beta: f64,
) -> Result<LossParts, TrainError> {
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape);
    let out = forward(&mut tape, &sample.prepared, &bound, model)?;
    let decoded = DecoderOutput {
        logits: out.logits,
        weights: out.weights,
    };
    let loss = total_loss(&mut tape, decoded, &sample.targets, alpha, beta)?;
    Ok(LossParts {
        total: tape.value(loss.total).item(),
        structure: tape.value(loss.structure).item(),
        weight: tape.value(loss.weight).item(),
    })
}

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl From<&TrainConfig> for AdamConfig {
    fn from(c: &TrainConfig) -> Self {
        Self {
            lr: c.lr,
            beta1: c.adam_beta1,
            beta2: c.adam_beta2,
            eps: c.adam_eps,
        }
    }
}

/// Adam moments per named tensor and the step counter.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdamState {
    pub m: BTreeMap<String, Tensor>,
    pub v: BTreeMap<String, Tensor>,
    pub step: u64,
}

impl AdamState {
    pub fn new() -> Self {
        Self::default()
    }

    /// One bias-corrected Adam update. Parameters without a gradient entry
    /// are treated as having zero gradient. Nothing is modified when any
    /// gradient is non-finite.
    pub fn update<'a>(
        &mut self,
        params: impl IntoIterator<Item = (&'a String, &'a mut Tensor)>,
        grads: &ParamGrads,
        cfg: AdamConfig,
    ) -> Result<(), String> {
        if let Some((name, _)) = grads.iter().find(|(_, g)| !g.is_finite()) {
            return Err(name.clone());
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        for (name, p) in params {
            let Some(g) = grads.get(name) else { continue };
            let m = self
                .m
                .entry(name.clone())
                .or_insert_with(|| Tensor::zeros(p.rows(), p.cols()));
            let v = self
                .v
                .entry(name.clone())
                .or_insert_with(|| Tensor::zeros(p.rows(), p.cols()));
            for (((pi, &gi), mi), vi) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                *mi = cfg.beta1 * *mi + (1.0 - cfg.beta1) * gi;
                *vi = cfg.beta2 * *vi + (1.0 - cfg.beta2) * gi * gi;
                let m_hat = *mi / c1;
                let v_hat = *vi / c2;
                *pi -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
            }
        }
        Ok(())
    }
}

/// Adam step on model parameters.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &ParamGrads,
    state: &mut AdamState,
    config: &TrainConfig,
) -> Result<(), TrainError> {
    state
        .update(params.iter_mut(), grads, AdamConfig::from(config))
        .map_err(|param| TrainError::NonFiniteGradient {
            epoch: 0,
            batch: 0,
            param,
        })
}

fn clip_global_norm(grads: &mut ParamGrads, max_norm: f64) {
    let norm = grads
        .values()
        .flat_map(|g| g.data().iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    if norm > max_norm && norm.is_finite() {
        let s = max_norm / norm;
        grads.values_mut().for_each(|g| g.scale_assign(s));
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub total: f64,
    pub structure: f64,
    pub weight: f64,
    /// Mean fused edge-MAE on the validation set after the epoch.
    pub val_mae: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }

    /// `epoch,total,struct,weight,val_mae` with one row per epoch.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,total,struct,weight,val_mae\n");
        for r in &self.epochs {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.epoch,
                format_sig9(r.total),
                format_sig9(r.structure),
                format_sig9(r.weight),
                format_sig9(r.val_mae)
            )
            .unwrap();
        }
        out
    }
}

/// Builds the worker pool, honoring `GTG_THREADS` (0 or unset = automatic).
pub fn thread_pool() -> rayon::ThreadPool {
    let threads = std::env::var("GTG_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
}

/// Mean fused edge-MAE of `params` over `samples`.
pub fn mean_fused_mae(
    samples: &[Sample],
    params: &ModelParams,
    model: &ModelConfig,
) -> Result<f64, TrainError> {
    let maes = samples
        .par_iter()
        .map(|s| {
            let d = predict_prepared(&s.prepared, params, model)?;
            Ok(mae_edges(&d.fused, &s.target).expect("sizes checked"))
        })
        .collect::<Result<Vec<f64>, TrainError>>()?;
    Ok(maes.iter().sum::<f64>() / maes.len().max(1) as f64)
}

/// Called after every epoch with the record just appended.
pub type EpochHook<'a> = &'a mut (dyn FnMut(&EpochRecord, &ModelParams) + Send);

/// Trains on `train`, reporting validation MAE on `val` (or on `train` when
/// `val` is empty). Pairs are used as given; apply a [`Mode`] beforehand.
pub fn train_with_validation(
    train: &[GraphPair],
    val: &[GraphPair],
    config: &TrainConfig,
    model: &ModelConfig,
    mut hook: Option<EpochHook<'_>>,
) -> Result<(ModelParams, TrainHistory), TrainError> {
    config.validate()?;
    model.validate()?;
    if train.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let pool = thread_pool();
    pool.install(|| {
        let samples = train
            .par_iter()
            .map(|p| Sample::new(p, model, config.weight_loss))
            .collect::<Result<Vec<_>, _>>()?;
        let val_samples = if val.is_empty() {
            samples.clone()
        } else {
            val.par_iter()
                .map(|p| Sample::new(p, model, config.weight_loss))
                .collect::<Result<Vec<_>, _>>()?
        };

        let mut params = init_params(model, config.seed);
        let mut adam = AdamState::new();
        let adam_cfg = AdamConfig::from(config);
        let (alpha, beta) = loss_weights(model, config);
        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_5eed_5eed_5eed);
        let mut order: Vec<usize> = (0..samples.len()).collect();
        let mut history = TrainHistory::default();

        for epoch in 1..=config.epochs {
            order.shuffle(&mut shuffle_rng);
            let mut sums = LossParts::default();
            for (batch_idx, batch) in order.chunks(config.batch_size).enumerate() {
                let results = batch
                    .par_iter()
                    .map(|&i| sample_gradients(&samples[i], &params, model, alpha, beta))
                    .collect::<Result<Vec<_>, _>>()?;
                let scale = 1.0 / batch.len() as f64;
                let mut grads: ParamGrads = BTreeMap::new();
                for (parts, g) in results {
                    sums.total += parts.total;
                    sums.structure += parts.structure;
                    sums.weight += parts.weight;
                    for (name, t) in g {
                        match grads.get_mut(&name) {
                            Some(acc) => acc.add_assign(&t),
                            None => {
                                grads.insert(name, t);
                            }
                        }
                    }
                }
                grads.values_mut().for_each(|g| g.scale_assign(scale));
                if let Some(max) = config.clip_norm {
                    clip_global_norm(&mut grads, max);
                }
                adam.update(params.iter_mut(), &grads, adam_cfg)
                    .map_err(|param| TrainError::NonFiniteGradient {
                        epoch,
                        batch: batch_idx,
                        param,
                    })?;
            }
            let count = samples.len() as f64;
            let record = EpochRecord {
                epoch,
                total: sums.total / count,
                structure: sums.structure / count,
                weight: sums.weight / count,
                val_mae: mean_fused_mae(&val_samples, &params, model)?,
            };
            history.epochs.push(record);
            if let Some(h) = hook.as_mut() {
                h(&record, &params);
            }
        }
        Ok((params, history))
    })
}

/// Trains on `dataset`, reporting validation MAE on the training pairs.
pub fn train(
    dataset: &[GraphPair],
    config: &TrainConfig,
    model: &ModelConfig,
) -> Result<(ModelParams, TrainHistory), TrainError> {
    train_with_validation(dataset, &[], config, model, None)
}

/// Disjoint folds of a shuffled id list. Fold 0 is the held-out test set;
/// folds `1..k` rotate as validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Folds<T> {
    pub folds: Vec<Vec<T>>,
}

impl<T: Clone> Folds<T> {
    pub fn test(&self) -> &[T] {
        &self.folds[0]
    }

    /// Every non-test id.
    pub fn cross_validation_ids(&self) -> Vec<T> {
        self.folds[1..].iter().flatten().cloned().collect()
    }

    /// `(train, val)` for rotation `r` in `1..k`.
    pub fn rotation(&self, r: usize) -> (Vec<T>, Vec<T>) {
        assert!(r >= 1 && r < self.folds.len(), "rotation {r} out of range");
        let train = self
            .folds
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != 0 && i != r)
            .flat_map(|(_, f)| f.iter().cloned())
            .collect();
        (train, self.folds[r].clone())
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.folds.iter().map(Vec::len).collect()
    }
}

/// Seeded shuffle then contiguous chunking; earlier folds take the remainder.
pub fn kfold_split<T: Clone>(ids: &[T], k: usize, seed: u64) -> Result<Folds<T>, TrainError> {
    if k == 0 || ids.len() < k {
        return Err(TrainError::TooFewSamples { n: ids.len(), k });
    }
    let mut shuffled = ids.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (ids.len() / k, ids.len() % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(shuffled[start..start + len].to_vec());
        start += len;
    }
    Ok(Folds { folds })
}

/// Outcome of training on the cross-validation folds and scoring fold 0.
#[derive(Debug, Clone)]
pub struct HoldoutRun {
    pub params: ModelParams,
    pub history: TrainHistory,
    pub folds: Folds<usize>,
    /// Mean fused edge-MAE over the held-out test fold.
    pub test_mae: f64,
}

/// Splits `pairs` into `config.folds` folds (seeded by `config.seed`), trains
/// on every fold but 0 and scores fold 0.
pub fn holdout_run(
    pairs: &[GraphPair],
    config: &TrainConfig,
    model: &ModelConfig,
) -> Result<HoldoutRun, TrainError> {
    let idx: Vec<usize> = (0..pairs.len()).collect();
    let folds = kfold_split(&idx, config.folds, config.seed)?;
    let pick = |ids: &[usize]| ids.iter().map(|&i| pairs[i].clone()).collect::<Vec<_>>();
    let train_set = pick(&folds.cross_validation_ids());
    let test_set = pick(folds.test());
    let (params, history) = train_with_validation(&train_set, &test_set, config, model, None)?;
    let test_mae = history.last().map_or(f64::NAN, |r| r.val_mae);
    Ok(HoldoutRun {
        params,
        history,
        folds,
        test_mae,
    })
}

/// One rotation of cross-validation.
#[derive(Debug, Clone)]
pub struct FoldResult {
    pub val_fold: usize,
    pub history: TrainHistory,
    pub val_mae: f64,
}

/// Trains once per validation fold `1..k`, always excluding test fold 0.
pub fn cross_validate(
    pairs: &[GraphPair],
    config: &TrainConfig,
    model: &ModelConfig,
) -> Result<Vec<FoldResult>, TrainError> {
    let idx: Vec<usize> = (0..pairs.len()).collect();
    let folds = kfold_split(&idx, config.folds, config.seed)?;
    let pick = |ids: &[usize]| ids.iter().map(|&i| pairs[i].clone()).collect::<Vec<_>>();
    (1..config.folds)
        .map(|r| {
            let (train_ids, val_ids) = folds.rotation(r);
            let (_, history) =
                train_with_validation(&pick(&train_ids), &pick(&val_ids), config, model, None)?;
            Ok(FoldResult {
                val_fold: r,
                val_mae: history.last().map_or(f64::NAN, |h| h.val_mae),
                history,
            })
        })
        .collect()
}

/// Result of checking model gradients against finite differences.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGradCheck {
    pub max_rel_err: f64,
    /// Parameter tensor holding the worst coordinate.
    pub worst_param: String,
    pub param_count: usize,
    pub loss: f64,
}

/// Random symmetric graph on `n` nodes with edge probability 0.6 and weights
/// in `[0.1, 1]`, used by the model gradient check.
pub fn random_check_graph(n: usize, seed: u64) -> WeightedGraph {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < 0.6 {
                edges.push((i, j, rng.random_range(0.1..=1.0)));
            }
        }
    }
    WeightedGraph::from_edges(n, &edges).expect("valid by construction")
}

/// Moves every parameter by up to ±0.05 so no ReLU input sits exactly at
/// zero (zero biases on dead embedding rows would otherwise put the check
/// on a kink).
fn jittered(params: &ModelParams, seed: u64) -> ModelParams {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6a17_7e12);
    let flat: Vec<f64> = params
        .flatten()
        .into_iter()
        .map(|v| v + rng.random_range(-0.05..0.05))
        .collect();
    params.with_flat(&flat)
}

/// Compares the tape gradient of the full composite loss with central
/// differences over every model parameter, at a jittered initialization.
pub fn model_grad_check(
    model: &ModelConfig,
    train: &TrainConfig,
    seed: u64,
    h: f64,
    fault: Option<Fault>,
) -> Result<ModelGradCheck, TrainError> {
    model.validate()?;
    let source = random_check_graph(model.n, seed);
    let target = random_check_graph(model.n, seed.wrapping_add(1));
    let pair = GraphPair::new("check", source, target)?;
    let sample = Sample::new(&pair, model, train.weight_loss)?;
    let params = jittered(&init_params(model, seed), seed);
    let (alpha, beta) = loss_weights(model, train);

    let mut tape = Tape::new();
    if let Some(f) = fault {
        tape.inject_fault(f);
    }
    let bound = params.bind(&mut tape);
    let out = forward(&mut tape, &sample.prepared, &bound, model)?;
    let decoded = DecoderOutput {
        logits: out.logits,
        weights: out.weights,
    };
    let loss = total_loss(&mut tape, decoded, &sample.targets, alpha, beta)?;
    let loss_value = tape.value(loss.total).item();
    let mut grads = tape.backward(loss.total)?;
    let mut analytic = Vec::with_capacity(params.count());
    let mut owner = Vec::with_capacity(params.count());
    for (name, &var) in bound.iter() {
        let (r, c) = tape.shape(var);
        let g = grads.take(var).unwrap_or_else(|| Tensor::zeros(r, c));
        owner.extend(std::iter::repeat_n(name.clone(), g.len()));
        analytic.extend_from_slice(g.data());
    }

    let flat = params.flatten();
    let report = grad_check(
        |theta| {
            let p = params.with_flat(theta);
            sample_loss(&sample, &p, model, alpha, beta)
                .map(|l| l.total)
                .unwrap_or(f64::NAN)
        },
        &analytic,
        &flat,
        h,
    );
    Ok(ModelGradCheck {
        max_rel_err: report.max_rel_err,
        worst_param: owner[report.worst_index].clone(),
        param_count: flat.len(),
        loss: loss_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_params(v: f64) -> BTreeMap<String, Tensor> {
        BTreeMap::from([("theta".to_string(), Tensor::scalar(v))])
    }

    #[test]
    fn adam_first_step_is_lr() {
        let mut p = scalar_params(0.0);
        p.insert("other".into(), Tensor::filled(2, 2, 1.0));
        let grads: ParamGrads = p
            .iter()
            .map(|(k, t)| (k.clone(), Tensor::filled(t.rows(), t.cols(), 1.0)))
            .collect();
        let cfg = AdamConfig::from(&TrainConfig::default());
        let mut state = AdamState::new();
        let before = p.clone();
        state.update(p.iter_mut(), &grads, cfg).unwrap();
        for (k, t) in &p {
            for (a, b) in t.data().iter().zip(before[k].data()) {
                assert!(((a - b) + 1e-3).abs() < 1e-10, "{a} {b}");
            }
        }
    }

    #[test]
    fn adam_zero_gradient_no_update() {
        let mut p = scalar_params(0.7);
        let grads = BTreeMap::from([("theta".to_string(), Tensor::scalar(0.0))]);
        let mut state = AdamState::new();
        state
            .update(
                p.iter_mut(),
                &grads,
                AdamConfig::from(&TrainConfig::default()),
            )
            .unwrap();
        assert_eq!(p["theta"].item(), 0.7);
    }

    #[test]
    fn adam_minimizes_quadratic() {
        let mut p = scalar_params(1.0);
        let cfg = AdamConfig {
            lr: 0.05,
            ..AdamConfig::from(&TrainConfig::default())
        };
        let mut state = AdamState::new();
        for _ in 0..100 {
            let g =
                BTreeMap::from([("theta".to_string(), Tensor::scalar(2.0 * p["theta"].item()))]);
            state.update(p.iter_mut(), &g, cfg).unwrap();
        }
        assert!(p["theta"].item().abs() < 0.05, "{}", p["theta"].item());
    }

    #[test]
    fn adam_rejects_non_finite() {
        let mut p = scalar_params(1.0);
        let g = BTreeMap::from([("theta".to_string(), Tensor::scalar(f64::NAN))]);
        let mut state = AdamState::new();
        let err = state
            .update(p.iter_mut(), &g, AdamConfig::from(&TrainConfig::default()))
            .unwrap_err();
        assert_eq!(err, "theta");
        assert_eq!(p["theta"].item(), 1.0);
        assert_eq!(state.step, 0);
    }

    #[test]
    fn tiny_model_gradients_match() {
        let r =
            model_grad_check(&ModelConfig::tiny(), &TrainConfig::default(), 7, 1e-6, None).unwrap();
        assert!(r.max_rel_err < 1e-4, "{r:?}");
        let bad = model_grad_check(
            &ModelConfig::tiny(),
            &TrainConfig::default(),
            7,
            1e-6,
            Some(Fault::SigmoidGrad),
        )
        .unwrap();
        assert!(bad.max_rel_err > 1e-2, "{bad:?}");
    }

    #[test]
    fn folds_of_ten() {
        let ids: Vec<usize> = (0..10).collect();
        let f = kfold_split(&ids, 5, 42).unwrap();
        assert_eq!(f.sizes(), vec![2; 5]);
        let mut all: Vec<usize> = f.folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, ids);
        let (tr, va) = f.rotation(2);
        assert_eq!(tr.len(), 6);
        assert_eq!(va, f.folds[2]);
        assert!(tr.iter().all(|i| !f.test().contains(i) && !va.contains(i)));
        assert!(matches!(
            kfold_split(&ids[..3], 5, 1),
            Err(TrainError::TooFewSamples { n: 3, k: 5 })
        ));
    }

    #[test]
    fn folds_are_seeded() {
        let ids: Vec<usize> = (0..341).collect();
        let a = kfold_split(&ids, 5, 42).unwrap();
        assert_eq!(a, kfold_split(&ids, 5, 42).unwrap());
        assert_ne!(a, kfold_split(&ids, 5, 7).unwrap());
        assert_eq!(a.sizes(), vec![69, 68, 68, 68, 68]);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = TrainConfig {
            lr: 0.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!("overfit".parse::<Mode>(), Ok(Mode::Overfit));
        assert!("bogus".parse::<Mode>().is_err());
    }

    #[test]
    fn hand_loss_three_nodes() {
        // one edge (0,1) of weight 0.6; logits 0 everywhere, weights 0.5
        let target = WeightedGraph::from_edges(3, &[(0, 1, 0.6)]).unwrap();
        let targets = Targets::new(&target, WeightLoss::AllPairs);
        let mut tape = Tape::new();
        let mut l = Tensor::zeros(3, 3);
        let mut w = Tensor::filled(3, 3, 0.5);
        for i in 0..3 {
            l.set(i, i, -1e9);
            w.set(i, i, 0.0);
        }
        let logits = tape.leaf(l);
        let weights = tape.leaf(w);
        let out = DecoderOutput { logits, weights };
        let loss = total_loss(&mut tape, out, &targets, 10.0, 5.0).unwrap();
        // BCE = ln 2 on each of 3 pairs; MAE = (0.1 + 0.5 + 0.5) / 3
        let bce = std::f64::consts::LN_2;
        let mae = 1.1 / 3.0;
        assert!((tape.value(loss.structure).item() - bce).abs() < 1e-12);
        assert!((tape.value(loss.weight).item() - mae).abs() < 1e-12);
        assert!((tape.value(loss.total).item() - (10.0 * bce + 5.0 * mae)).abs() < 1e-12);

        let edges_only = Targets::new(&target, WeightLoss::Edges);
        let loss = total_loss(&mut tape, out, &edges_only, 10.0, 5.0).unwrap();
        assert!((tape.value(loss.weight).item() - 0.1).abs() < 1e-12);
        assert!((tape.value(loss.structure).item() - bce).abs() < 1e-12);
    }

    #[test]
    fn perfect_prediction_has_tiny_loss() {
        let target =
            WeightedGraph::from_edges(4, &[(0, 1, 0.6), (2, 3, 0.2), (1, 2, 0.9)]).unwrap();
        let targets = Targets::new(&target, WeightLoss::AllPairs);
        let mut l = Tensor::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                let v = if i == j {
                    -1e9
                } else if target.weight(i, j) > 0.0 {
                    20.0
                } else {
                    -20.0
                };
                l.set(i, j, v);
            }
        }
        let mut tape = Tape::new();
        let logits = tape.leaf(l);
        let weights = tape.leaf(targets.weights.clone());
        let loss = total_loss(
            &mut tape,
            DecoderOutput { logits, weights },
            &targets,
            10.0,
            5.0,
        )
        .unwrap();
        assert!(tape.value(loss.total).item() < 1e-7);

        let mut tape = Tape::new();
        let logits = tape.leaf(Tensor::zeros(4, 4));
        let weights = tape.leaf(Tensor::zeros(4, 4));
        let loss = total_loss(
            &mut tape,
            DecoderOutput { logits, weights },
            &targets,
            0.0,
            5.0,
        )
        .unwrap();
        let mae = tape.value(loss.weight).item();
        assert_eq!(tape.value(loss.total).item(), 5.0 * mae);
    }
}
