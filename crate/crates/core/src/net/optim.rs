//! Parameter updates. Weight decay enters through the gradient (`g + wd*p`)
//! for both optimizers, so decay strength is comparable between them.

use super::MlpModel;
use crate::{Error, Result};

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// Optimizer hyperparameters plus Adam's running moments. One state drives
/// one model; moments are sized on first use.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    kind: OptimizerKind,
    learning_rate: f64,
    weight_decay: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl OptimizerState {
    pub fn sgd(learning_rate: f64, weight_decay: f64) -> Self {
        Self::new(OptimizerKind::Sgd, learning_rate, weight_decay)
    }

    pub fn adam(learning_rate: f64, weight_decay: f64) -> Self {
        Self::new(OptimizerKind::Adam, learning_rate, weight_decay)
    }

    pub fn new(kind: OptimizerKind, learning_rate: f64, weight_decay: f64) -> Self {
        Self {
            kind,
            learning_rate,
            weight_decay,
            m: Vec::new(),
            v: Vec::new(),
            t: 0,
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }
}

/// Applies one update for `grad` to the model in place.
pub fn step(model: &mut MlpModel, opt: &mut OptimizerState, grad: &[f64]) -> Result<()> {
    let n = model.params().len();
    if grad.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: grad.len(),
        });
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("gradient"));
    }
    if !opt.learning_rate.is_finite() || !opt.weight_decay.is_finite() {
        return Err(Error::NonFinite("optimizer hyperparameters"));
    }

    match opt.kind {
        OptimizerKind::Sgd => {
            let lr = opt.learning_rate;
            let wd = opt.weight_decay;
            for (p, g) in model.params_mut().iter_mut().zip(grad) {
                *p -= lr * (g + wd * *p);
            }
        }
        OptimizerKind::Adam => {
            if opt.m.is_empty() {
                opt.m = vec![0.0; n];
                opt.v = vec![0.0; n];
            }
            opt.t += 1;
            let bc1 = 1.0 - ADAM_BETA1.powi(opt.t as i32);
            let bc2 = 1.0 - ADAM_BETA2.powi(opt.t as i32);
            let lr = opt.learning_rate;
            let wd = opt.weight_decay;
            for (i, (p, g)) in model.params_mut().iter_mut().zip(grad).enumerate() {
                let gt = g + wd * *p;
                opt.m[i] = ADAM_BETA1 * opt.m[i] + (1.0 - ADAM_BETA1) * gt;
                opt.v[i] = ADAM_BETA2 * opt.v[i] + (1.0 - ADAM_BETA2) * gt * gt;
                let m_hat = opt.m[i] / bc1;
                let v_hat = opt.v[i] / bc2;
                *p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
            }
        }
    }
    Ok(())
}
