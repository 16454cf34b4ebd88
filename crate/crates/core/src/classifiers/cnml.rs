//! Exact (naive) conditional NML: answer a query by refitting from scratch.
//!
//! For each proposed label y′ ∈ {0, 1}, a fresh model is trained to
//! convergence on the dataset plus (x_q, y′); the probability each refit
//! assigns to its own proposed label is then normalized across the two
//! labels. Slow by construction — every query pays two full training runs —
//! which is exactly what the meta-learned amortization removes.

use super::LabeledDataset;
use crate::net::{init_model, loss_and_gradient, step, Example, MlpArchitecture, OptimizerState};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct ConvergenceConfig {
    pub max_steps: usize,
    /// Full-batch gradient norm below which the refit counts as converged.
    pub grad_tol: f64,
    pub learning_rate: f64,
    /// Seed for the fresh per-label model inits.
    pub seed: u64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            max_steps: 5000,
            grad_tol: 1e-4,
            learning_rate: 1e-2,
            seed: 0,
        }
    }
}

/// A normalized two-label prediction plus the raw per-label likelihoods it
/// was built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnmlPrediction {
    pub p_label0: f64,
    pub p_label1: f64,
    /// Likelihood the label-0 refit assigns to label 0 at the query.
    pub raw_likelihood0: f64,
    /// Likelihood the label-1 refit assigns to label 1 at the query.
    pub raw_likelihood1: f64,
    /// Optimization steps used (the larger of the two refits).
    pub steps_used: usize,
    pub converged: bool,
}

impl CnmlPrediction {
    pub(crate) fn from_raw(raw0: f64, raw1: f64, steps_used: usize, converged: bool) -> Self {
        let p_label1 = raw1 / (raw0 + raw1);
        Self {
            p_label0: 1.0 - p_label1,
            p_label1,
            raw_likelihood0: raw0,
            raw_likelihood1: raw1,
            steps_used,
            converged,
        }
    }
}

/// Full augment-and-refit CNML at one query point.
pub fn cnml_naive(
    arch: &MlpArchitecture,
    dataset: &LabeledDataset,
    x_q: &[f64],
    convergence: &ConvergenceConfig,
) -> Result<CnmlPrediction> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if x_q.len() != arch.input_dim() || dataset.feature_dim() != arch.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: arch.input_dim(),
            got: x_q.len(),
        });
    }
    if x_q.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("query point"));
    }

    let mut raws = [0.0; 2];
    let mut steps_used = 0;
    let mut converged = true;
    for y in 0..2u8 {
        let (raw, steps, ok) = refit(arch, dataset, x_q, y, convergence)?;
        raws[y as usize] = raw;
        steps_used = steps_used.max(steps);
        converged &= ok;
    }
    Ok(CnmlPrediction::from_raw(raws[0], raws[1], steps_used, converged))
}

fn refit(
    arch: &MlpArchitecture,
    dataset: &LabeledDataset,
    x_q: &[f64],
    proposed: u8,
    cfg: &ConvergenceConfig,
) -> Result<(f64, usize, bool)> {
    let mut model = init_model(arch, cfg.seed);
    let mut opt = OptimizerState::adam(cfg.learning_rate, 0.0);
    let mut batch: Vec<Example> = dataset
        .points()
        .iter()
        .map(|p| Example::new(&p.features, f64::from(p.label), 1.0))
        .collect();
    batch.push(Example::new(x_q, f64::from(proposed), 1.0));

    let mut grad = vec![0.0; arch.param_count()];
    let mut steps = 0;
    let mut converged = false;
    for _ in 0..cfg.max_steps {
        loss_and_gradient(&model, &batch, &mut grad)?;
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm < cfg.grad_tol {
            converged = true;
            break;
        }
        step(&mut model, &mut opt, &grad)?;
        steps += 1;
    }

    let p = model.forward(x_q)?;
    let raw = if proposed == 1 { p } else { 1.0 - p };
    Ok((raw, steps, converged))
}
