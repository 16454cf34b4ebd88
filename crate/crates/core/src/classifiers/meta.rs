//! Meta-learned amortization of CNML.
//!
//! Training builds two tasks per dataset point — "relabel this point 0" and
//! "relabel it 1" — and optimizes an initialization from which one cheap
//! gradient step on the relabeled dataset reproduces what a full refit would
//! conclude. Queries then cost `query_steps` gradient steps per label
//! instead of a training run.
//!
//! Two weighting schemes shape every adaptation batch:
//! - the query point rides along in the batch with an importance weight of
//!   one over the number of batches per epoch, so a full weighted epoch
//!   sums to the plain augmented-dataset loss;
//! - dataset points are downweighted by distance to the query
//!   (`exp(-2.3 d / λ)`, weight 0.1 at distance λ), which keeps the
//!   adaptation local and the effective task diversity manageable.

use super::{CnmlPrediction, LabeledDataset};
use crate::net::{loss_and_gradient, step, Example, MlpModel, OptimizerState};
use crate::{rng, Error, Result};
use rand::seq::SliceRandom;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Config-file representation of the optional kernel scale: 0 disables.
mod lambda_repr {
    use super::{Deserialize, Deserializer, Serializer};
    use std::result::Result;

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(v.unwrap_or(0.0))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        let raw = f64::deserialize(d)?;
        if raw == 0.0 {
            Ok(None)
        } else if raw.is_finite() && raw > 0.0 {
            Ok(Some(raw))
        } else {
            Err(serde::de::Error::custom(
                "kernel_lambda_dist must be > 0, or 0 to disable",
            ))
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetaNmlConfig {
    /// Inner-loop (adaptation) SGD step size α.
    pub inner_lr: f64,
    /// Adaptation batch size b: the query plus b-1 sampled dataset points.
    pub adaptation_batch_size: usize,
    pub tasks_per_epoch: usize,
    /// Distance-weighting scale λ; None disables kernel weighting.
    /// Serialized as a plain number, 0 meaning disabled.
    #[serde(with = "lambda_repr")]
    pub kernel_lambda_dist: Option<f64>,
    /// Gradient steps per label at query time (k_query).
    pub query_steps: usize,
    /// Classifier retrain cadence in harness epochs.
    pub retrain_interval: usize,
    /// Total size of the balanced dataset assembled per retrain (n_test).
    pub meta_test_set_size: usize,
    /// Outer-loop Adam step size.
    pub outer_lr: f64,
    /// Base seed for task order and batch sampling streams.
    pub seed: u64,
}

impl Default for MetaNmlConfig {
    fn default() -> Self {
        Self {
            inner_lr: 0.5,
            adaptation_batch_size: 64,
            tasks_per_epoch: 128,
            kernel_lambda_dist: Some(0.5),
            query_steps: 1,
            retrain_interval: 1,
            meta_test_set_size: 2048,
            outer_lr: 1e-3,
            seed: 0,
        }
    }
}

impl MetaNmlConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: &str| {
            Err(Error::InvalidValue {
                name,
                reason: reason.into(),
            })
        };
        if !(self.inner_lr.is_finite() && self.inner_lr > 0.0) {
            return bad("inner_lr", "must be finite and > 0");
        }
        if self.adaptation_batch_size < 2 {
            return bad("adaptation_batch_size", "must be >= 2");
        }
        if self.tasks_per_epoch == 0 {
            return bad("tasks_per_epoch", "must be >= 1");
        }
        if let Some(l) = self.kernel_lambda_dist {
            if !(l.is_finite() && l > 0.0) {
                return bad("kernel_lambda_dist", "must be finite and > 0");
            }
        }
        if self.query_steps == 0 {
            return bad("query_steps", "must be >= 1");
        }
        if self.retrain_interval == 0 {
            return bad("retrain_interval", "must be >= 1");
        }
        if self.meta_test_set_size < 2 {
            return bad("meta_test_set_size", "must hold at least one point per class");
        }
        if !(self.outer_lr.is_finite() && self.outer_lr > 0.0) {
            return bad("outer_lr", "must be finite and > 0");
        }
        Ok(())
    }
}

/// One meta-task: relabel dataset point `dataset_index` as `proposed_label`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetaTask {
    pub dataset_index: usize,
    pub proposed_label: u8,
}

/// The 2n tasks of a dataset: every point with both proposed labels.
pub fn build_meta_tasks(dataset: &LabeledDataset) -> Vec<MetaTask> {
    (0..dataset.len())
        .flat_map(|i| {
            [0u8, 1u8].map(|proposed_label| MetaTask {
                dataset_index: i,
                proposed_label,
            })
        })
        .collect()
}

/// Distance weight exp(-(2.3/λ)·‖x−x_q‖₂): 1 at the query, ~0.1 at λ.
pub fn kernel_weight(x: &[f64], x_q: &[f64], lambda_dist: f64) -> f64 {
    assert!(lambda_dist > 0.0, "lambda_dist must be > 0");
    assert_eq!(x.len(), x_q.len(), "dimension mismatch");
    let d: f64 = x
        .iter()
        .zip(x_q)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    (-(2.3 / lambda_dist) * d).exp()
}

/// Loss weight of the query copy inside each adaptation batch:
/// 1 / ⌈N/(b−1)⌉, i.e. one over the number of batches per epoch, so that a
/// query counted in every batch contributes exactly once per epoch.
pub fn query_importance_weight(n_dataset: usize, batch_size: usize) -> f64 {
    assert!(batch_size >= 2, "batch_size must be >= 2");
    let per_batch = batch_size - 1;
    let num_batches = n_dataset.div_ceil(per_batch).max(1);
    1.0 / num_batches as f64
}

/// Builds the weighted batch for one adaptation step: the query first
/// (importance-weighted), then the selected dataset points
/// (kernel-weighted). Returns the examples; the query's features and
/// proposed label are supplied by the caller.
fn weighted_batch<'a>(
    dataset: &'a LabeledDataset,
    indices: &[usize],
    query: &'a [f64],
    proposed: u8,
    query_weight: f64,
    lambda: Option<f64>,
) -> Vec<Example<'a>> {
    let mut batch = Vec::with_capacity(indices.len() + 1);
    batch.push(Example::new(query, f64::from(proposed), query_weight));
    for &i in indices {
        let x = dataset.features(i);
        let w = match lambda {
            Some(l) => kernel_weight(x, query, l),
            None => 1.0,
        };
        batch.push(Example::new(x, f64::from(dataset.label(i)), w));
    }
    batch
}

fn sample_batch_indices(
    n: usize,
    batch_size: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Vec<usize> {
    let amount = (batch_size - 1).min(n);
    rand::seq::index::sample(rng, n, amount).into_vec()
}

/// One SGD adaptation step on a weighted batch. Plain SGD (no momentum, no
/// decay): adaptation must stay a pure function of (params, batch).
fn adapt_step(
    model: &mut MlpModel,
    batch: &[Example],
    inner_lr: f64,
    grad: &mut [f64],
) -> Result<f64> {
    let loss = loss_and_gradient(model, batch, grad)?;
    let mut sgd = OptimizerState::sgd(inner_lr, 0.0);
    step(model, &mut sgd, grad)?;
    Ok(loss)
}

/// Uniform-without-replacement task order: full shuffled passes over the
/// task list, truncated to `count`.
fn task_order(n_tasks: usize, count: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<usize> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut pass: Vec<usize> = (0..n_tasks).collect();
        pass.shuffle(rng);
        let take = (count - out.len()).min(n_tasks);
        out.extend(pass.into_iter().take(take));
    }
    out
}

/// Meta-trains over explicit task queries (feature vector + proposed
/// label). Returns the trained model and the mean post-adaptation loss of
/// the final epoch (0.0 when nothing ran).
pub(crate) fn meta_train_engine(
    start: &MlpModel,
    dataset: &LabeledDataset,
    task_queries: &[(Vec<f64>, u8)],
    cfg: &MetaNmlConfig,
    epochs: usize,
) -> Result<(MlpModel, f64)> {
    cfg.validate()?;
    let input_dim = start.architecture().input_dim();
    if dataset.feature_dim() != input_dim {
        return Err(Error::DimensionMismatch {
            expected: input_dim,
            got: dataset.feature_dim(),
        });
    }
    for (q, _) in task_queries {
        if q.len() != input_dim {
            return Err(Error::DimensionMismatch {
                expected: input_dim,
                got: q.len(),
            });
        }
    }

    let mut model = start.clone();
    if epochs == 0 || task_queries.is_empty() {
        return Ok((model, 0.0));
    }

    let n = dataset.len();
    let b = cfg.adaptation_batch_size;
    let query_weight = query_importance_weight(n, b);
    let mut outer = OptimizerState::adam(cfg.outer_lr, 0.0);
    let mut grad = vec![0.0; model.architecture().param_count()];
    let mut last_epoch_loss = 0.0;

    for epoch in 0..epochs {
        let mut rng = rng::indexed_stream(cfg.seed, "meta-epoch", epoch as u64);
        let order = task_order(task_queries.len(), cfg.tasks_per_epoch, &mut rng);
        let mut loss_sum = 0.0;
        for ti in order {
            let (query, proposed) = &task_queries[ti];

            // Inner: one adaptation step from the current initialization.
            let support = sample_batch_indices(n, b, &mut rng);
            let mut adapted = model.clone();
            let batch = weighted_batch(
                dataset,
                &support,
                query,
                *proposed,
                query_weight,
                cfg.kernel_lambda_dist,
            );
            adapt_step(&mut adapted, &batch, cfg.inner_lr, &mut grad)?;

            // Outer: first-order update — the post-adaptation gradient on a
            // fresh batch, applied to the initialization itself.
            let target = sample_batch_indices(n, b, &mut rng);
            let batch = weighted_batch(
                dataset,
                &target,
                query,
                *proposed,
                query_weight,
                cfg.kernel_lambda_dist,
            );
            let outer_loss = loss_and_gradient(&adapted, &batch, &mut grad)?;
            step(&mut model, &mut outer, &grad)?;

            let weight_total: f64 = batch.iter().map(|e| e.weight).sum();
            loss_sum += outer_loss / weight_total.max(1e-12);
        }
        last_epoch_loss = loss_sum / cfg.tasks_per_epoch as f64;
    }
    Ok((model, last_epoch_loss))
}

/// Meta-trains on a dataset's own 2n tasks. `warm_start` (when given)
/// supplies the starting parameters — the standard harness flow, where each
/// retrain continues from the previous meta-model. `epochs = 0` returns the
/// starting model unchanged.
pub fn meta_train(
    model: &MlpModel,
    dataset: &LabeledDataset,
    cfg: &MetaNmlConfig,
    epochs: usize,
    warm_start: Option<&MlpModel>,
) -> Result<MlpModel> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !dataset.has_both_labels() {
        return Err(Error::SingleClass);
    }
    if let Some(w) = warm_start {
        if w.architecture() != model.architecture() {
            return Err(Error::InvalidArchitecture(
                "warm_start architecture differs from model".into(),
            ));
        }
    }
    let start = warm_start.unwrap_or(model);
    let tasks: Vec<(Vec<f64>, u8)> = build_meta_tasks(dataset)
        .into_iter()
        .map(|t| (dataset.features(t.dataset_index).to_vec(), t.proposed_label))
        .collect();
    let (trained, _) = meta_train_engine(start, dataset, &tasks, cfg, epochs)?;
    Ok(trained)
}

/// Amortized CNML query: adapt a snapshot of the meta-model `query_steps`
/// SGD steps per proposed label, then normalize the two likelihoods.
///
/// Pure: the meta-model and dataset are never mutated, and the batch
/// sampling stream is keyed on (model seed, query bits, label), so the same
/// inputs always produce the same prediction.
pub fn cnml_meta_query(
    meta_model: &MlpModel,
    dataset: &LabeledDataset,
    x_q: &[f64],
    cfg: &MetaNmlConfig,
) -> Result<CnmlPrediction> {
    cfg.validate()?;
    let input_dim = meta_model.architecture().input_dim();
    if x_q.len() != input_dim || dataset.feature_dim() != input_dim {
        return Err(Error::DimensionMismatch {
            expected: input_dim,
            got: x_q.len(),
        });
    }
    if x_q.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("query point"));
    }

    let n = dataset.len();
    let b = cfg.adaptation_batch_size;
    let query_weight = query_importance_weight(n, b);
    let mut grad = vec![0.0; meta_model.architecture().param_count()];
    let mut raws = [0.0; 2];
    for y in 0..2u8 {
        let mut adapted = meta_model.clone();
        let mut rng = rng::indexed_stream(
            meta_model.rng_seed() ^ rng::point_key(x_q),
            "meta-query",
            u64::from(y),
        );
        for _ in 0..cfg.query_steps {
            let support = sample_batch_indices(n, b, &mut rng);
            let batch = weighted_batch(
                dataset,
                &support,
                x_q,
                y,
                query_weight,
                cfg.kernel_lambda_dist,
            );
            adapt_step(&mut adapted, &batch, cfg.inner_lr, &mut grad)?;
        }
        let p = adapted.forward(x_q)?;
        raws[y as usize] = if y == 1 { p } else { 1.0 - p };
    }
    Ok(CnmlPrediction::from_raw(
        raws[0],
        raws[1],
        cfg.query_steps,
        true,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{init_model, weighted_bce_loss, MlpArchitecture};
    use proptest::prelude::*;

    #[test]
    fn config_toml_round_trip_maps_zero_lambda_to_disabled() {
        let mut cfg = MetaNmlConfig::default();
        cfg.kernel_lambda_dist = None;
        let text = toml::to_string(&cfg).unwrap();
        assert!(text.contains("kernel_lambda_dist = 0.0"));
        let back: MetaNmlConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.kernel_lambda_dist, None);

        cfg.kernel_lambda_dist = Some(0.5);
        let back: MetaNmlConfig = toml::from_str(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back.kernel_lambda_dist, Some(0.5));

        assert!(toml::from_str::<MetaNmlConfig>("kernel_lambda_dist = -1.0").is_err());
        assert!(toml::from_str::<MetaNmlConfig>("no_such_knob = 3").is_err());
    }

    fn two_clusters(n_per: usize) -> LabeledDataset {
        let mut ds = LabeledDataset::new(2).unwrap();
        for i in 0..n_per {
            let t = i as f64 / n_per as f64;
            ds.push(vec![1.2 + 0.4 * t, 0.9 - 0.3 * t], 1).unwrap();
            ds.push(vec![-1.1 - 0.4 * t, -0.8 + 0.3 * t], 0).unwrap();
        }
        ds
    }

    fn small_cfg() -> MetaNmlConfig {
        MetaNmlConfig {
            adaptation_batch_size: 8,
            tasks_per_epoch: 16,
            kernel_lambda_dist: Some(1.0),
            ..MetaNmlConfig::default()
        }
    }

    #[test]
    fn tasks_cover_every_point_with_both_labels() {
        let ds = two_clusters(4);
        let tasks = build_meta_tasks(&ds);
        assert_eq!(tasks.len(), 16);
        for i in 0..8 {
            for label in 0..2u8 {
                assert_eq!(
                    tasks
                        .iter()
                        .filter(|t| t.dataset_index == i && t.proposed_label == label)
                        .count(),
                    1
                );
            }
        }
        assert!(build_meta_tasks(&LabeledDataset::new(2).unwrap()).is_empty());
    }

    #[test]
    fn kernel_weight_reference_values() {
        let a = [0.0, 0.0];
        assert_eq!(kernel_weight(&a, &a, 0.5), 1.0);
        let at_lambda = [0.5, 0.0];
        let w = kernel_weight(&a, &at_lambda, 0.5);
        assert!((w - 0.1003).abs() < 1e-3, "w(λ) = {w}");
        let at_two_lambda = [1.0, 0.0];
        let w2 = kernel_weight(&a, &at_two_lambda, 0.5);
        assert!((w2 - (-4.6f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn importance_weight_reference_values() {
        assert_eq!(query_importance_weight(63, 64), 1.0);
        assert_eq!(query_importance_weight(126, 64), 0.5);
        assert_eq!(query_importance_weight(2048, 64), 1.0 / 33.0);
        // Empty dataset: the query is the whole batch.
        assert_eq!(query_importance_weight(0, 64), 1.0);
    }

    /// One weighted epoch (query in every batch at the importance weight)
    /// must sum to the plain loss over dataset ∪ query.
    fn check_importance_identity(n: usize, b: usize, seed: u64) {
        let mut ds = LabeledDataset::new(2).unwrap();
        let mut rng = rng::stream(seed, "identity-data");
        use rand::Rng;
        for i in 0..n {
            ds.push(
                vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)],
                (i % 2) as u8,
            )
            .unwrap();
        }
        let query = [0.3, -0.4];
        let model = init_model(&MlpArchitecture::new(2, vec![6]).unwrap(), seed);
        let qw = query_importance_weight(n, b);

        let mut weighted_total = 0.0;
        let all: Vec<usize> = (0..n).collect();
        for chunk in all.chunks(b - 1) {
            let batch = weighted_batch(&ds, chunk, &query, 1, qw, None);
            weighted_total += weighted_bce_loss(&model, &batch).unwrap();
        }

        let mut plain = weighted_batch(&ds, &all, &query, 1, 1.0, None);
        plain.rotate_left(1); // order is irrelevant up to rounding
        let direct = weighted_bce_loss(&model, &plain).unwrap();
        assert!(
            (weighted_total - direct).abs() < 1e-9,
            "n={n} b={b}: {weighted_total} vs {direct}"
        );
    }

    #[test]
    fn importance_identity_holds() {
        check_importance_identity(10, 4, 0);
        check_importance_identity(63, 64, 1);
        check_importance_identity(126, 64, 2);
        check_importance_identity(200, 16, 3);
    }

    #[test]
    fn zero_epochs_with_warm_start_returns_it_unchanged() {
        let ds = two_clusters(8);
        let arch = MlpArchitecture::new(2, vec![8]).unwrap();
        let model = init_model(&arch, 1);
        let warm = init_model(&arch, 99);
        let out = meta_train(&model, &ds, &small_cfg(), 0, Some(&warm)).unwrap();
        assert_eq!(out.params(), warm.params());
    }

    #[test]
    fn single_class_rejected() {
        let mut ds = LabeledDataset::new(2).unwrap();
        ds.push(vec![0.0, 0.0], 0).unwrap();
        let arch = MlpArchitecture::new(2, vec![8]).unwrap();
        let model = init_model(&arch, 1);
        assert!(matches!(
            meta_train(&model, &ds, &small_cfg(), 1, None),
            Err(Error::SingleClass)
        ));
    }

    /// Mean loss after one adaptation step, over held-out tasks.
    fn post_adaptation_loss(model: &MlpModel, ds: &LabeledDataset, cfg: &MetaNmlConfig) -> f64 {
        let mut total = 0.0;
        let mut count = 0;
        let mut grad = vec![0.0; model.architecture().param_count()];
        let mut rng = rng::stream(1234, "eval-tasks");
        let qw = query_importance_weight(ds.len(), cfg.adaptation_batch_size);
        for i in 0..ds.len().min(10) {
            for y in 0..2u8 {
                let query = ds.features(i).to_vec();
                let support =
                    sample_batch_indices(ds.len(), cfg.adaptation_batch_size, &mut rng);
                let mut adapted = model.clone();
                let batch =
                    weighted_batch(ds, &support, &query, y, qw, cfg.kernel_lambda_dist);
                adapt_step(&mut adapted, &batch, cfg.inner_lr, &mut grad).unwrap();
                total += weighted_bce_loss(&adapted, &batch).unwrap();
                count += 1;
            }
        }
        total / f64::from(count)
    }

    #[test]
    fn meta_training_improves_post_adaptation_loss() {
        let ds = two_clusters(8);
        let arch = MlpArchitecture::new(2, vec![16]).unwrap();
        let fresh = init_model(&arch, 5);
        let cfg = small_cfg();
        let trained = meta_train(&fresh, &ds, &cfg, 60, None).unwrap();
        let before = post_adaptation_loss(&fresh, &ds, &cfg);
        let after = post_adaptation_loss(&trained, &ds, &cfg);
        assert!(
            after < before,
            "post-adaptation loss did not improve: {before} -> {after}"
        );
    }

    #[test]
    fn meta_init_adapts_faster_than_mle_init() {
        use super::super::mle::{mle_train, MleOptions};
        let ds = two_clusters(8);
        let arch = MlpArchitecture::new(2, vec![16]).unwrap();
        // Asks about gradient geometry at the initialization, so measure
        // with a step small enough not to overshoot either model.
        let cfg = MetaNmlConfig {
            inner_lr: 1e-2,
            ..small_cfg()
        };

        let meta = meta_train(&init_model(&arch, 5), &ds, &cfg, 60, None).unwrap();
        let mut mle = init_model(&arch, 5);
        mle_train(
            &mut mle,
            &ds,
            400,
            &MleOptions {
                learning_rate: 1e-2,
                ..MleOptions::default()
            },
        )
        .unwrap();

        // Mean absolute probability change from one adaptation step toward
        // the opposite of each point's own label — the hard direction.
        let shift = |model: &MlpModel| -> f64 {
            let mut grad = vec![0.0; model.architecture().param_count()];
            let mut total = 0.0;
            let mut rng = rng::stream(77, "shift-tasks");
            let qw = query_importance_weight(ds.len(), cfg.adaptation_batch_size);
            for i in 0..ds.len() {
                let query = ds.features(i).to_vec();
                let flipped = 1 - ds.label(i);
                let before = model.forward(&query).unwrap();
                let support =
                    sample_batch_indices(ds.len(), cfg.adaptation_batch_size, &mut rng);
                let mut adapted = model.clone();
                let batch =
                    weighted_batch(&ds, &support, &query, flipped, qw, cfg.kernel_lambda_dist);
                adapt_step(&mut adapted, &batch, cfg.inner_lr, &mut grad).unwrap();
                total += (adapted.forward(&query).unwrap() - before).abs();
            }
            total / ds.len() as f64
        };

        let meta_shift = shift(&meta);
        let mle_shift = shift(&mle);
        assert!(
            meta_shift > mle_shift,
            "meta {meta_shift} should out-adapt mle {mle_shift}"
        );
    }

    #[test]
    fn meta_query_is_pure_and_deterministic() {
        let ds = two_clusters(8);
        let arch = MlpArchitecture::new(2, vec![16]).unwrap();
        let cfg = small_cfg();
        let meta = meta_train(&init_model(&arch, 5), &ds, &cfg, 20, None).unwrap();
        let params_before = meta.params().to_vec();
        let ds_before = ds.clone();

        let a = cnml_meta_query(&meta, &ds, &[0.4, 0.2], &cfg).unwrap();
        let b = cnml_meta_query(&meta, &ds, &[0.4, 0.2], &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(meta.params(), &params_before[..]);
        assert_eq!(ds, ds_before);
        assert!((a.p_label0 + a.p_label1 - 1.0).abs() < 1e-9);
        assert_eq!(a.steps_used, cfg.query_steps);

        // A different query sees different draws.
        let c = cnml_meta_query(&meta, &ds, &[0.4, 0.2000001], &cfg).unwrap();
        assert_ne!(a.p_label1, c.p_label1);
    }

    proptest! {
        #[test]
        fn kernel_weight_monotone_in_distance(
            d1 in 0.0f64..5.0,
            extra in 0.001f64..5.0,
            lambda in 0.05f64..3.0,
        ) {
            let q = [0.0, 0.0];
            let near = [d1, 0.0];
            let far = [d1 + extra, 0.0];
            let wn = kernel_weight(&near, &q, lambda);
            let wf = kernel_weight(&far, &q, lambda);
            prop_assert!(wn <= 1.0 && wn > 0.0);
            prop_assert!(wf < wn);
        }

        #[test]
        fn importance_identity_random_configs(
            n in 1usize..80,
            b in 2usize..32,
            seed in 0u64..50,
        ) {
            check_importance_identity(n, b, seed);
        }
    }
}
