//! A small fully-connected binary classifier over `f64` features.
//!
//! Parameters live in one flat vector (per layer: weights in row-major
//! order, then biases) so optimizers and checkpoints treat the model as a
//! single point in parameter space. All layers use ReLU except the final
//! single-unit layer, whose logit feeds a sigmoid.

mod checkpoint;
mod optim;

pub use checkpoint::{read_checkpoint, restore, snapshot, write_checkpoint, ModelSnapshot};
pub use optim::{step, OptimizerKind, OptimizerState};

use crate::{rng, Error, Result};
use rand::Rng;

/// Probabilities are clamped to this range inside the loss so perfectly
/// confident predictions keep the loss finite.
pub const PROB_CLAMP: f64 = 1e-7;

/// Hidden-layer activation. Only ReLU is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
}

/// Network shape: input width and hidden widths. The output layer is always
/// a single sigmoid unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpArchitecture {
    input_dim: usize,
    hidden_sizes: Vec<usize>,
    activation: Activation,
}

impl MlpArchitecture {
    pub fn new(input_dim: usize, hidden_sizes: Vec<usize>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidArchitecture("input_dim must be >= 1".into()));
        }
        if hidden_sizes.contains(&0) {
            return Err(Error::InvalidArchitecture(
                "hidden layer sizes must be >= 1".into(),
            ));
        }
        Ok(Self {
            input_dim,
            hidden_sizes,
            activation: Activation::Relu,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_sizes(&self) -> &[usize] {
        &self.hidden_sizes
    }

    /// (fan_in, fan_out) of every weight layer, output layer included.
    pub(crate) fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_sizes.len() + 1);
        let mut fan_in = self.input_dim;
        for &h in &self.hidden_sizes {
            dims.push((fan_in, h));
            fan_in = h;
        }
        dims.push((fan_in, 1));
        dims
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims()
            .iter()
            .map(|(fi, fo)| fi * fo + fo)
            .sum()
    }

    fn max_width(&self) -> usize {
        self.hidden_sizes
            .iter()
            .copied()
            .chain([self.input_dim, 1])
            .max()
            .unwrap()
    }
}

/// A classifier: architecture plus a flat parameter vector. The seed used at
/// initialization is kept so derived models (and checkpoints) can reproduce
/// deterministic auxiliary draws.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    arch: MlpArchitecture,
    params: Vec<f64>,
    rng_seed: u64,
}

/// He-uniform weights (bound `sqrt(6 / fan_in)`), zero biases, all draws
/// from the model-init sub-stream of `seed`.
pub fn init_model(arch: &MlpArchitecture, seed: u64) -> MlpModel {
    let mut rng = rng::stream(seed, "model-init");
    let mut params = Vec::with_capacity(arch.param_count());
    for (fan_in, fan_out) in arch.layer_dims() {
        let bound = (6.0 / fan_in as f64).sqrt();
        for _ in 0..fan_in * fan_out {
            params.push(rng.random_range(-bound..bound));
        }
        params.extend(std::iter::repeat(0.0).take(fan_out));
    }
    MlpModel {
        arch: arch.clone(),
        params,
        rng_seed: seed,
    }
}

impl MlpModel {
    pub fn architecture(&self) -> &MlpArchitecture {
        &self.arch
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    /// Replaces the parameter vector; the length must match the architecture.
    pub fn set_params(&mut self, params: Vec<f64>) -> Result<()> {
        if params.len() != self.arch.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.arch.param_count(),
                got: params.len(),
            });
        }
        self.params = params;
        Ok(())
    }

    pub(crate) fn from_parts(arch: MlpArchitecture, params: Vec<f64>, rng_seed: u64) -> Self {
        debug_assert_eq!(params.len(), arch.param_count());
        MlpModel {
            arch,
            params,
            rng_seed,
        }
    }

    /// Pre-sigmoid output for one feature vector.
    pub fn forward_logit(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let dims = self.arch.layer_dims();
        let last = dims.len() - 1;
        let mut offset = 0;
        for (l, &(fan_in, fan_out)) in dims.iter().enumerate() {
            let weights = &self.params[offset..offset + fan_in * fan_out];
            let biases = &self.params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
            next.clear();
            for (row, b) in weights.chunks_exact(fan_in).zip(biases) {
                let mut z = *b;
                for (w, a) in row.iter().zip(&cur) {
                    z += w * a;
                }
                next.push(if l < last { z.max(0.0) } else { z });
            }
            std::mem::swap(&mut cur, &mut next);
            offset += fan_in * fan_out + fan_out;
        }
        Ok(cur[0])
    }

    /// Probability of label 1 for one feature vector, in (0, 1).
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.forward_logit(x)?))
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.arch.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.arch.input_dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("input features"));
        }
        Ok(())
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// One training example: borrowed features, a soft target in [0, 1], and a
/// non-negative weight.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub features: &'a [f64],
    pub target: f64,
    pub weight: f64,
}

impl<'a> Example<'a> {
    pub fn new(features: &'a [f64], target: f64, weight: f64) -> Self {
        Self {
            features,
            target,
            weight,
        }
    }
}

fn check_batch(model: &MlpModel, batch: &[Example]) -> Result<()> {
    for ex in batch {
        model.check_input(ex.features)?;
        if !ex.target.is_finite() || !(0.0..=1.0).contains(&ex.target) {
            return Err(Error::InvalidValue {
                name: "target",
                reason: format!("{} is not in [0, 1]", ex.target),
            });
        }
        if !ex.weight.is_finite() || ex.weight < 0.0 {
            return Err(Error::NonFinite("example weight"));
        }
    }
    Ok(())
}

/// Sum over the batch of `w * (-t*ln(p) - (1-t)*ln(1-p))` with `p` clamped
/// away from 0 and 1. An empty batch has loss 0.
pub fn weighted_bce_loss(model: &MlpModel, batch: &[Example]) -> Result<f64> {
    check_batch(model, batch)?;
    let mut loss = 0.0;
    for ex in batch {
        let p = sigmoid(model.forward_logit(ex.features)?);
        let pc = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        loss += ex.weight * (-ex.target * pc.ln() - (1.0 - ex.target) * (1.0 - pc).ln());
    }
    Ok(loss)
}

/// Reverse-mode gradient of [`weighted_bce_loss`] with respect to the flat
/// parameter vector.
pub fn gradient(model: &MlpModel, batch: &[Example]) -> Result<Vec<f64>> {
    let mut grad = vec![0.0; model.arch.param_count()];
    loss_and_gradient(model, batch, &mut grad)?;
    Ok(grad)
}

/// Computes the batch loss and accumulates its gradient into `grad`
/// (overwritten, not added to). Returns the loss.
///
/// The output delta uses the clamped probability, `w * (clamp(p) - t)`, so a
/// saturated example keeps a bounded nonzero pull instead of a dead zero;
/// wherever the clamp is inactive this is the exact gradient of the loss.
pub fn loss_and_gradient(model: &MlpModel, batch: &[Example], grad: &mut [f64]) -> Result<f64> {
    if grad.len() != model.arch.param_count() {
        return Err(Error::DimensionMismatch {
            expected: model.arch.param_count(),
            got: grad.len(),
        });
    }
    check_batch(model, batch)?;
    grad.fill(0.0);

    let dims = model.arch.layer_dims();
    let last = dims.len() - 1;
    // Per-layer offsets into the flat vector.
    let mut w_off = Vec::with_capacity(dims.len());
    let mut b_off = Vec::with_capacity(dims.len());
    let mut offset = 0;
    for &(fan_in, fan_out) in &dims {
        w_off.push(offset);
        b_off.push(offset + fan_in * fan_out);
        offset += fan_in * fan_out + fan_out;
    }

    // acts[0] is the input; acts[l + 1] the (post-ReLU) output of layer l.
    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(dims.len() + 1);
    acts.push(vec![0.0; model.arch.input_dim]);
    for &(_, fan_out) in &dims {
        acts.push(vec![0.0; fan_out]);
    }
    let width = model.arch.max_width();
    let mut delta = vec![0.0; width];
    let mut delta_next = vec![0.0; width];

    let mut loss = 0.0;
    for ex in batch {
        acts[0].copy_from_slice(ex.features);
        for (l, &(fan_in, fan_out)) in dims.iter().enumerate() {
            let weights = &model.params[w_off[l]..w_off[l] + fan_in * fan_out];
            let biases = &model.params[b_off[l]..b_off[l] + fan_out];
            let (input, output) = {
                let (left, right) = acts.split_at_mut(l + 1);
                (&left[l], &mut right[0])
            };
            for ((row, b), out) in weights.chunks_exact(fan_in).zip(biases).zip(output.iter_mut()) {
                let mut z = *b;
                for (w, a) in row.iter().zip(input.iter()) {
                    z += w * a;
                }
                *out = if l < last { z.max(0.0) } else { z };
            }
        }

        let logit = acts[last + 1][0];
        let p = sigmoid(logit);
        let pc = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        loss += ex.weight * (-ex.target * pc.ln() - (1.0 - ex.target) * (1.0 - pc).ln());

        delta[0] = ex.weight * (pc - ex.target);
        for l in (0..dims.len()).rev() {
            let (fan_in, fan_out) = dims[l];
            let input = &acts[l];
            let gw = &mut grad[w_off[l]..w_off[l] + fan_in * fan_out];
            for (o, row) in gw.chunks_exact_mut(fan_in).enumerate() {
                let d = delta[o];
                if d != 0.0 {
                    for (g, a) in row.iter_mut().zip(input.iter()) {
                        *g += d * a;
                    }
                }
            }
            for o in 0..fan_out {
                grad[b_off[l] + o] += delta[o];
            }
            if l > 0 {
                let weights = &model.params[w_off[l]..w_off[l] + fan_in * fan_out];
                for i in 0..fan_in {
                    // ReLU passes gradient only where the unit fired (a > 0).
                    if input[i] > 0.0 {
                        let mut s = 0.0;
                        for o in 0..fan_out {
                            s += weights[o * fan_in + i] * delta[o];
                        }
                        delta_next[i] = s;
                    } else {
                        delta_next[i] = 0.0;
                    }
                }
                std::mem::swap(&mut delta, &mut delta_next);
            }
        }
    }
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arch(input: usize, hidden: &[usize]) -> MlpArchitecture {
        MlpArchitecture::new(input, hidden.to_vec()).unwrap()
    }

    /// Central finite differences of the loss, the reference the analytic
    /// gradient is checked against.
    fn fd_gradient(model: &MlpModel, batch: &[Example], h: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(model.params().len());
        for i in 0..model.params().len() {
            let mut plus = model.clone();
            let mut minus = model.clone();
            plus.params_mut()[i] += h;
            minus.params_mut()[i] -= h;
            let lp = weighted_bce_loss(&plus, batch).unwrap();
            let lm = weighted_bce_loss(&minus, batch).unwrap();
            out.push((lp - lm) / (2.0 * h));
        }
        out
    }

    #[test]
    fn param_count_matches_hand_count() {
        // 2 -> 4: 8 weights + 4 biases; 4 -> 1: 4 weights + 1 bias.
        assert_eq!(arch(2, &[4]).param_count(), 17);
        assert_eq!(arch(3, &[]).param_count(), 4);
        assert_eq!(arch(2, &[64, 64]).param_count(), 2 * 64 + 64 + 64 * 64 + 64 + 64 + 1);
    }

    #[test]
    fn zero_dimensions_rejected() {
        assert!(MlpArchitecture::new(0, vec![4]).is_err());
        assert!(MlpArchitecture::new(2, vec![4, 0]).is_err());
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let a = arch(2, &[8, 8]);
        assert_eq!(init_model(&a, 5).params(), init_model(&a, 5).params());
        assert_ne!(init_model(&a, 5).params(), init_model(&a, 6).params());
    }

    #[test]
    fn init_biases_are_zero_and_weights_bounded() {
        let a = arch(3, &[5]);
        let m = init_model(&a, 1);
        let bound1 = (6.0f64 / 3.0).sqrt();
        for &w in &m.params()[0..15] {
            assert!(w.abs() <= bound1);
        }
        assert!(m.params()[15..20].iter().all(|&b| b == 0.0));
    }

    #[test]
    fn zero_params_give_half() {
        let a = arch(2, &[4]);
        let mut m = init_model(&a, 0);
        m.set_params(vec![0.0; 17]).unwrap();
        assert_eq!(m.forward(&[3.0, -1.0]).unwrap(), 0.5);
    }

    #[test]
    fn forward_rejects_bad_input() {
        let m = init_model(&arch(2, &[4]), 0);
        assert!(m.forward(&[1.0]).is_err());
        assert!(m.forward(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn loss_at_even_odds_is_ln_two() {
        let a = arch(2, &[4]);
        let mut m = init_model(&a, 0);
        m.set_params(vec![0.0; 17]).unwrap();
        let x = [0.3, 0.7];
        let batch = [Example::new(&x, 1.0, 1.0)];
        let loss = weighted_bce_loss(&m, &batch).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn confident_correct_prediction_has_near_zero_loss() {
        // Logistic regression with a large logit on the true label.
        let a = arch(2, &[]);
        let mut m = init_model(&a, 0);
        m.set_params(vec![20.0, 0.0, 0.0]).unwrap();
        let x = [1.0, 0.0];
        let loss = weighted_bce_loss(&m, &[Example::new(&x, 1.0, 1.0)]).unwrap();
        assert!(loss > 0.0 && loss < 1e-6);
    }

    #[test]
    fn doubling_weights_doubles_loss_exactly() {
        let m = init_model(&arch(2, &[8]), 3);
        let xs = [[0.5, -1.0], [2.0, 0.25], [-0.75, 1.5]];
        let single: Vec<Example> = xs.iter().map(|x| Example::new(x, 1.0, 0.7)).collect();
        let double: Vec<Example> = xs.iter().map(|x| Example::new(x, 1.0, 1.4)).collect();
        let l1 = weighted_bce_loss(&m, &single).unwrap();
        let l2 = weighted_bce_loss(&m, &double).unwrap();
        assert_eq!(l2, 2.0 * l1);
    }

    #[test]
    fn empty_batch_has_zero_loss_and_gradient() {
        let m = init_model(&arch(2, &[4]), 0);
        assert_eq!(weighted_bce_loss(&m, &[]).unwrap(), 0.0);
        assert!(gradient(&m, &[]).unwrap().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn batch_rejects_bad_targets_and_weights() {
        let m = init_model(&arch(2, &[4]), 0);
        let x = [0.0, 0.0];
        assert!(weighted_bce_loss(&m, &[Example::new(&x, 1.5, 1.0)]).is_err());
        assert!(weighted_bce_loss(&m, &[Example::new(&x, 1.0, -1.0)]).is_err());
        assert!(weighted_bce_loss(&m, &[Example::new(&x, 1.0, f64::NAN)]).is_err());
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        for seed in 0..3u64 {
            let a = arch(2, &[6, 5]);
            let m = init_model(&a, seed);
            let xs = [[0.4, -0.2], [1.1, 0.9], [-0.6, 0.3], [0.0, -1.2]];
            let batch: Vec<Example> = xs
                .iter()
                .enumerate()
                .map(|(i, x)| Example::new(x, (i % 2) as f64, 0.5 + 0.25 * i as f64))
                .collect();
            let analytic = gradient(&m, &batch).unwrap();
            let numeric = fd_gradient(&m, &batch, 1e-5);
            for (a, n) in analytic.iter().zip(&numeric) {
                let scale = a.abs().max(n.abs());
                if scale > 1e-6 {
                    assert!((a - n).abs() / scale < 1e-4, "analytic {a} vs fd {n}");
                }
            }
        }
    }

    #[test]
    fn gradient_is_additive_over_batches() {
        let m = init_model(&arch(2, &[8]), 9);
        let xs = [[0.5, 0.1], [-0.3, 0.8], [1.2, -0.4], [0.7, 0.7]];
        let all: Vec<Example> = xs.iter().map(|x| Example::new(x, 1.0, 1.0)).collect();
        let g_all = gradient(&m, &all).unwrap();
        let g_a = gradient(&m, &all[..2]).unwrap();
        let g_b = gradient(&m, &all[2..]).unwrap();
        for i in 0..g_all.len() {
            assert!((g_all[i] - (g_a[i] + g_b[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn hundred_sgd_steps_strictly_decrease_separable_loss() {
        let a = arch(2, &[8]);
        let mut m = init_model(&a, 42);
        let xs = [[1.0, 0.5], [-1.0, -0.5]];
        let batch = [Example::new(&xs[0], 1.0, 1.0), Example::new(&xs[1], 0.0, 1.0)];
        let mut opt = OptimizerState::sgd(0.05, 0.0);
        let mut prev = weighted_bce_loss(&m, &batch).unwrap();
        for _ in 0..100 {
            let g = gradient(&m, &batch).unwrap();
            step(&mut m, &mut opt, &g).unwrap();
            let cur = weighted_bce_loss(&m, &batch).unwrap();
            assert!(cur < prev, "loss did not decrease: {prev} -> {cur}");
            prev = cur;
        }
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let a = arch(2, &[8]);
        let run = || {
            let mut m = init_model(&a, 11);
            let xs = [[0.9, -0.2], [-0.8, 0.4]];
            let batch = [Example::new(&xs[0], 1.0, 1.0), Example::new(&xs[1], 0.0, 1.0)];
            let mut opt = OptimizerState::adam(1e-2, 0.0);
            for _ in 0..50 {
                let g = gradient(&m, &batch).unwrap();
                step(&mut m, &mut opt, &g).unwrap();
            }
            m.params().to_vec()
        };
        assert_eq!(run(), run());
    }

    proptest! {
        #[test]
        fn forward_stays_in_unit_interval(
            seed in 0u64..1000,
            x0 in -10.0f64..10.0,
            x1 in -10.0f64..10.0,
        ) {
            // Closed interval: a large enough logit saturates the sigmoid
            // to exactly 0.0 or 1.0 in f64. The loss clamps; forward does not.
            let m = init_model(&arch(2, &[6]), seed);
            let p = m.forward(&[x0, x1]).unwrap();
            prop_assert!((0.0..=1.0).contains(&p), "p = {p}");
        }

        #[test]
        fn loss_is_non_negative(
            seed in 0u64..200,
            t in 0.0f64..=1.0,
            w in 0.0f64..5.0,
            x0 in -3.0f64..3.0,
        ) {
            let m = init_model(&arch(2, &[4]), seed);
            let x = [x0, -x0];
            let loss = weighted_bce_loss(&m, &[Example::new(&x, t, w)]).unwrap();
            prop_assert!(loss >= 0.0);
        }
    }
}
