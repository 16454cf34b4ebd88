//! Plain maximum-likelihood classifier training (the VICE-style baseline):
//! mini-batch Adam on weighted BCE, with optional mixup augmentation, weight
//! decay, and early stopping.

use super::LabeledDataset;
use crate::net::{loss_and_gradient, step, Example, MlpModel, OptimizerState};
use crate::{rng, Error, Result};
use rand::seq::SliceRandom;
use rand_distr::{Beta, Distribution};

#[derive(Debug, Clone)]
pub struct MleOptions {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub weight_decay: f64,
    /// Beta(α, α) mixing strength; 0 disables mixup entirely (no extra
    /// random draws, bit-identical to a loop without the feature).
    pub mixup_alpha: f64,
    /// Stop after this many epochs without mean-loss improvement.
    pub early_stop_epochs: Option<usize>,
    pub seed: u64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 64,
            weight_decay: 0.0,
            mixup_alpha: 0.0,
            early_stop_epochs: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MleSummary {
    /// Mean per-example loss of the last epoch run.
    pub final_loss: f64,
    pub epochs_run: usize,
}

/// Trains `model` in place by mini-batch maximum likelihood.
pub fn mle_train(
    model: &mut MlpModel,
    dataset: &LabeledDataset,
    epochs: usize,
    options: &MleOptions,
) -> Result<MleSummary> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !dataset.has_both_labels() {
        return Err(Error::SingleClass);
    }
    if dataset.feature_dim() != model.architecture().input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.architecture().input_dim(),
            got: dataset.feature_dim(),
        });
    }
    if options.batch_size == 0 {
        return Err(Error::InvalidValue {
            name: "batch_size",
            reason: "must be >= 1".into(),
        });
    }
    if options.mixup_alpha < 0.0 || !options.mixup_alpha.is_finite() {
        return Err(Error::InvalidValue {
            name: "mixup_alpha",
            reason: "must be finite and >= 0".into(),
        });
    }

    let n = dataset.len();
    let mut opt = OptimizerState::adam(options.learning_rate, options.weight_decay);
    let mut shuffle_rng = rng::stream(options.seed, "mle-shuffle");
    let mut mixup_rng = rng::stream(options.seed, "mle-mixup");
    let beta = (options.mixup_alpha > 0.0)
        .then(|| Beta::new(options.mixup_alpha, options.mixup_alpha))
        .transpose()
        .map_err(|_| Error::InvalidValue {
            name: "mixup_alpha",
            reason: "not a valid Beta parameter".into(),
        })?;

    let mut grad = vec![0.0; model.architecture().param_count()];
    let mut order: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    let mut stale = 0usize;
    let mut summary = MleSummary {
        final_loss: f64::NAN,
        epochs_run: 0,
    };

    for _ in 0..epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(options.batch_size) {
            let loss = if let Some(beta) = &beta {
                // Mixup: blend each example with its successor in the
                // (already shuffled) batch.
                let mixed: Vec<(Vec<f64>, f64)> = chunk
                    .iter()
                    .enumerate()
                    .map(|(k, &i)| {
                        let j = chunk[(k + 1) % chunk.len()];
                        let lam: f64 = beta.sample(&mut mixup_rng);
                        let x = dataset
                            .features(i)
                            .iter()
                            .zip(dataset.features(j))
                            .map(|(a, b)| lam * a + (1.0 - lam) * b)
                            .collect();
                        let t = lam * f64::from(dataset.label(i))
                            + (1.0 - lam) * f64::from(dataset.label(j));
                        (x, t)
                    })
                    .collect();
                let batch: Vec<Example> = mixed
                    .iter()
                    .map(|(x, t)| Example::new(x, *t, 1.0))
                    .collect();
                let loss = loss_and_gradient(model, &batch, &mut grad)?;
                step(model, &mut opt, &grad)?;
                loss
            } else {
                let batch: Vec<Example> = chunk
                    .iter()
                    .map(|&i| Example::new(dataset.features(i), f64::from(dataset.label(i)), 1.0))
                    .collect();
                let loss = loss_and_gradient(model, &batch, &mut grad)?;
                step(model, &mut opt, &grad)?;
                loss
            };
            epoch_loss += loss;
        }
        let mean = epoch_loss / n as f64;
        summary.final_loss = mean;
        summary.epochs_run += 1;
        if let Some(patience) = options.early_stop_epochs {
            if mean < best - 1e-12 {
                best = mean;
                stale = 0;
            } else {
                stale += 1;
                if stale >= patience {
                    break;
                }
            }
        }
    }
    Ok(summary)
}
