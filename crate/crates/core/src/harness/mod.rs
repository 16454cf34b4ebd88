//! Outcome-driven policy training on the maze worlds.
//!
//! Each epoch runs the same cycle: collect on-policy steps with the
//! Boltzmann behavior policy and append them to the negative buffer and the
//! transition replay, retrain the success classifier on a freshly sampled
//! balanced dataset, rescore the whole replay with the current classifier,
//! refit the soft-Q table to it, then evaluate the greedy policy and append
//! one metrics row to the log. Everything is driven by named seeded
//! streams, so a `(config, seed)` pair reproduces its metrics bit for bit;
//! only wall-clock time varies.
//!
//! The classifier flavor is the experiment variable. `mural` scores states
//! by amortized conditional NML, which pays an uncertainty premium on
//! rarely-visited states and so folds exploration into the reward itself.
//! The baselines swap in a plain discriminator (`vice`), add oracle count
//! bonuses to it (`vice_count_bonus`), drop learning entirely (`sparse`),
//! or ablate one ingredient of the full method (`count_only_ablation`,
//! `no_meta_ablation`).

mod backend;
mod log;

pub use backend::{BackendConfig, QTransition, SoftQBackend, ACTIONS};
pub use log::{EpochRecord, TrainingLog};

use crate::classifiers::{
    cnml_meta_query, meta_train_engine, mle_train, LabeledDataset, MetaNmlConfig, MleOptions,
    TabularCounts,
};
use crate::maze::{
    encode_state, is_success, make_maze, reachable_cells, sample_goal_examples, CellGrid,
    MazeKind, MazeWorld, Point, StateEncoding,
};
use crate::net::{init_model, write_checkpoint, MlpArchitecture, MlpModel};
use crate::{rng, Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, VecDeque};
use std::io::{BufWriter, Write as _};
use std::path::Path;
use std::time::Instant;

/// Reward scheme driving a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Amortized conditional NML classifier (the full method).
    Mural,
    /// Plain maximum-likelihood discriminator.
    Vice,
    /// Discriminator plus an oracle inverse-count bonus.
    ViceCountBonus,
    /// Success indicator only; no classifier.
    Sparse,
    /// Discriminator plus amortized NML trained on negatives alone.
    CountOnlyAblation,
    /// Amortized NML queries from a plain MLE initialization.
    NoMetaAblation,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Mural => "mural",
            Method::Vice => "vice",
            Method::ViceCountBonus => "vice_count_bonus",
            Method::Sparse => "sparse",
            Method::CountOnlyAblation => "count_only_ablation",
            Method::NoMetaAblation => "no_meta_ablation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    #[default]
    Zigzag,
    Spiral,
    DoubleSided,
}

impl EnvKind {
    pub fn kind(self) -> MazeKind {
        match self {
            EnvKind::Zigzag => MazeKind::Zigzag,
            EnvKind::Spiral => MazeKind::Spiral,
            EnvKind::DoubleSided => MazeKind::DoubleSided,
        }
    }

    pub fn name(self) -> &'static str {
        self.kind().name()
    }
}

/// How states are presented to the classifier. The policy always works in
/// the true state space; only the classifier sees the encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingKind {
    #[default]
    Continuous,
    /// Coarse cells relabeled by a seeded permutation, destroying all
    /// metric structure in the classifier's input space.
    Shuffled,
}

impl EncodingKind {
    fn build(self, shuffle_resolution: usize, seed: u64) -> StateEncoding {
        match self {
            EncodingKind::Continuous => StateEncoding::ContinuousXy,
            EncodingKind::Shuffled => StateEncoding::shuffled(shuffle_resolution, seed),
        }
    }
}

/// Knobs shared by the discriminator-based baselines.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    /// Full dataset passes per classifier retrain.
    pub n_vice: usize,
    pub mixup_alpha: f64,
    pub weight_decay: f64,
    /// Multiplier on the inverse-count bonus 1/(N+2).
    pub bonus_scale: f64,
    pub classifier_lr: f64,
    pub batch_size: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            n_vice: 2,
            mixup_alpha: 1.0,
            weight_decay: 5e-3,
            bonus_scale: 1.0,
            classifier_lr: 1e-4,
            batch_size: 128,
        }
    }
}

impl BaselineConfig {
    fn mle_options(&self, seed: u64) -> MleOptions {
        MleOptions {
            learning_rate: self.classifier_lr,
            batch_size: self.batch_size,
            weight_decay: self.weight_decay,
            mixup_alpha: self.mixup_alpha,
            early_stop_epochs: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: &str| {
            Err(Error::InvalidValue {
                name,
                reason: reason.into(),
            })
        };
        if self.n_vice == 0 {
            return bad("n_vice", "must be >= 1");
        }
        if !(self.mixup_alpha.is_finite() && self.mixup_alpha >= 0.0) {
            return bad("mixup_alpha", "must be finite and >= 0");
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return bad("weight_decay", "must be finite and >= 0");
        }
        if !(self.bonus_scale.is_finite() && self.bonus_scale >= 0.0) {
            return bad("bonus_scale", "must be finite and >= 0");
        }
        if !(self.classifier_lr.is_finite() && self.classifier_lr > 0.0) {
            return bad("classifier_lr", "must be finite and > 0");
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be >= 1");
        }
        Ok(())
    }
}

fn d_epochs() -> usize {
    200
}
fn d_steps_per_epoch() -> usize {
    1000
}
fn d_goal_examples() -> usize {
    150
}
fn d_n_train() -> usize {
    64
}
fn d_classifier_hidden() -> Vec<usize> {
    vec![64, 64]
}
fn d_negative_capacity() -> usize {
    100_000
}
fn d_eval_rollouts() -> usize {
    20
}
fn d_meta_epochs_per_retrain() -> usize {
    1
}
fn d_initial_meta_epochs() -> usize {
    8
}
fn d_shuffle_resolution() -> usize {
    16
}

/// Full specification of one training run. `method` and `seed` must be
/// given explicitly; everything else has a default.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub method: Method,
    pub seed: u64,
    #[serde(default)]
    pub env: EnvKind,
    #[serde(default)]
    pub encoding: EncodingKind,
    /// Cells per side of the coarse grid used by the shuffled encoding.
    #[serde(default = "d_shuffle_resolution")]
    pub shuffle_resolution: usize,
    #[serde(default = "d_epochs")]
    pub epochs: usize,
    #[serde(default = "d_steps_per_epoch")]
    pub steps_per_epoch: usize,
    /// Number of provided success examples.
    #[serde(default = "d_goal_examples")]
    pub goal_examples: usize,
    /// States sampled from the negative buffer as adaptation queries per
    /// retrain (each yields one task per proposed label).
    #[serde(default = "d_n_train")]
    pub n_train: usize,
    #[serde(default = "d_classifier_hidden")]
    pub classifier_hidden: Vec<usize>,
    #[serde(default = "d_negative_capacity")]
    pub negative_capacity: usize,
    #[serde(default = "d_eval_rollouts")]
    pub eval_rollouts: usize,
    /// Write a checkpoint directory every this many epochs; 0 keeps only
    /// the final one.
    #[serde(default)]
    pub checkpoint_interval: usize,
    #[serde(default = "d_meta_epochs_per_retrain")]
    pub meta_epochs_per_retrain: usize,
    /// Extra meta-training epochs spent on the very first retrain, so the
    /// classifier starts out already anchored to the goal examples.
    #[serde(default = "d_initial_meta_epochs")]
    pub initial_meta_epochs: usize,
    #[serde(default)]
    pub meta: MetaNmlConfig,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub baseline: BaselineConfig,
}

impl RunConfig {
    pub fn new(method: Method, env: EnvKind, seed: u64) -> Self {
        Self {
            method,
            seed,
            env,
            encoding: EncodingKind::default(),
            shuffle_resolution: d_shuffle_resolution(),
            epochs: d_epochs(),
            steps_per_epoch: d_steps_per_epoch(),
            goal_examples: d_goal_examples(),
            n_train: d_n_train(),
            classifier_hidden: d_classifier_hidden(),
            negative_capacity: d_negative_capacity(),
            eval_rollouts: d_eval_rollouts(),
            checkpoint_interval: 0,
            meta_epochs_per_retrain: d_meta_epochs_per_retrain(),
            initial_meta_epochs: d_initial_meta_epochs(),
            meta: MetaNmlConfig::default(),
            backend: BackendConfig::default(),
            baseline: BaselineConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: &str| {
            Err(Error::InvalidValue {
                name,
                reason: reason.into(),
            })
        };
        if self.epochs == 0 {
            return bad("epochs", "must be >= 1");
        }
        if self.steps_per_epoch == 0 {
            return bad("steps_per_epoch", "must be >= 1");
        }
        if self.goal_examples == 0 {
            return bad("goal_examples", "must be >= 1");
        }
        if self.n_train == 0 {
            return bad("n_train", "must be >= 1");
        }
        if self.negative_capacity == 0 {
            return bad("negative_capacity", "must be >= 1");
        }
        if self.eval_rollouts == 0 {
            return bad("eval_rollouts", "must be >= 1");
        }
        if self.meta_epochs_per_retrain == 0 {
            return bad("meta_epochs_per_retrain", "must be >= 1");
        }
        if self.shuffle_resolution == 0 {
            return bad("shuffle_resolution", "must be >= 1");
        }
        MlpArchitecture::new(2, self.classifier_hidden.clone())?;
        self.meta.validate()?;
        self.backend.validate()?;
        self.baseline.validate()?;
        Ok(())
    }
}

/// The positive and negative example pools.
///
/// Positives are the user-provided success examples and never change after
/// construction. Negatives are on-policy states, kept in insertion order
/// and evicted oldest-first once the capacity is reached.
#[derive(Debug, Clone)]
pub struct OutcomeBuffers {
    positives: Vec<Vec<f64>>,
    negatives: VecDeque<Vec<f64>>,
    capacity: usize,
}

impl OutcomeBuffers {
    pub fn new(positives: Vec<Vec<f64>>, capacity: usize) -> Result<Self> {
        if positives.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if capacity == 0 {
            return Err(Error::InvalidValue {
                name: "capacity",
                reason: "must be >= 1".into(),
            });
        }
        Ok(Self {
            positives,
            negatives: VecDeque::new(),
            capacity,
        })
    }

    pub fn positives(&self) -> &[Vec<f64>] {
        &self.positives
    }

    pub fn negatives_len(&self) -> usize {
        self.negatives.len()
    }

    pub fn negative(&self, i: usize) -> &[f64] {
        &self.negatives[i]
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push_negative(&mut self, state: Vec<f64>) {
        if self.negatives.len() == self.capacity {
            self.negatives.pop_front();
        }
        self.negatives.push_back(state);
    }
}

/// Samples a class-balanced dataset of `2*half` points: `half` positives
/// (label 1) and `half` negatives (label 0). Each pool is sampled without
/// replacement when it is large enough, with replacement otherwise. Also
/// returns the sampled negatives alone as a second dataset.
fn sample_balanced<R: Rng>(
    buffers: &OutcomeBuffers,
    half: usize,
    rng: &mut R,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if buffers.negatives_len() == 0 {
        return Err(Error::EmptyDataset);
    }
    let dim = buffers.positives()[0].len();
    let draw = |pool_len: usize, rng: &mut R| -> Vec<usize> {
        if pool_len >= half {
            rand::seq::index::sample(rng, pool_len, half).into_vec()
        } else {
            (0..half).map(|_| rng.random_range(0..pool_len)).collect()
        }
    };
    let pos_idx = draw(buffers.positives().len(), rng);
    let neg_idx = draw(buffers.negatives_len(), rng);

    let mut balanced = LabeledDataset::new(dim)?;
    let mut negatives_only = LabeledDataset::new(dim)?;
    for i in pos_idx {
        balanced.push(buffers.positives()[i].clone(), 1)?;
    }
    for i in neg_idx {
        balanced.push(buffers.negative(i).to_vec(), 0)?;
        negatives_only.push(buffers.negative(i).to_vec(), 0)?;
    }
    Ok((balanced, negatives_only))
}

/// Draws up to `n_train` states from the negative buffer and proposes both
/// labels for each, yielding the per-retrain adaptation tasks.
fn sample_task_queries(
    buffers: &OutcomeBuffers,
    n_train: usize,
    seed: u64,
    epoch: u64,
) -> Vec<(Vec<f64>, u8)> {
    let mut r = rng::indexed_stream(seed, "task-queries", epoch);
    let n = buffers.negatives_len();
    let amount = n_train.min(n);
    let mut out = Vec::with_capacity(2 * amount);
    for i in rand::seq::index::sample(&mut r, n, amount) {
        let s = buffers.negative(i).to_vec();
        out.push((s.clone(), 0));
        out.push((s, 1));
    }
    out
}

/// Per-method mutable classifier state.
#[derive(Debug, Clone)]
enum MethodState {
    Mural { model: MlpModel },
    Vice { model: MlpModel },
    ViceCountBonus { model: MlpModel },
    Sparse,
    CountOnly { model: MlpModel, meta_neg: MlpModel },
    NoMeta { model: MlpModel },
}

impl MethodState {
    fn init(method: Method, arch: &MlpArchitecture, seed: u64) -> Self {
        match method {
            Method::Mural => MethodState::Mural {
                model: init_model(arch, seed),
            },
            Method::Vice => MethodState::Vice {
                model: init_model(arch, seed),
            },
            Method::ViceCountBonus => MethodState::ViceCountBonus {
                model: init_model(arch, seed),
            },
            Method::Sparse => MethodState::Sparse,
            Method::CountOnlyAblation => MethodState::CountOnly {
                model: init_model(arch, seed),
                meta_neg: init_model(arch, rng::stream(seed, "negatives-model-seed").random()),
            },
            Method::NoMetaAblation => MethodState::NoMeta {
                model: init_model(arch, seed),
            },
        }
    }
}

/// Borrowed view of everything a reward query needs.
struct RewardCtx<'a> {
    method: &'a MethodState,
    world: &'a MazeWorld,
    grid: &'a CellGrid,
    counts: &'a TabularCounts,
    dataset: &'a LabeledDataset,
    neg_dataset: Option<&'a LabeledDataset>,
    meta: &'a MetaNmlConfig,
    bonus_scale: f64,
}

impl RewardCtx<'_> {
    /// Classifier-derived reward for one state. `enc` is what the
    /// classifier sees; `raw` is the true position, needed by the oracle
    /// count bonus and the sparse indicator.
    fn reward(&self, cache: &mut HashMap<u64, f64>, enc: &[f64], raw: Point) -> Result<f64> {
        match self.method {
            MethodState::Sparse => Ok(f64::from(u8::from(is_success(self.world, raw)))),
            MethodState::Mural { model } => cached(cache, enc, |e| {
                Ok(cnml_meta_query(model, self.dataset, e, self.meta)?.p_label1)
            }),
            MethodState::Vice { model } => cached(cache, enc, |e| model.forward(e)),
            MethodState::ViceCountBonus { model } => {
                let p = cached(cache, enc, |e| model.forward(e))?;
                let visits = self.counts.counts(self.grid.cell_index(raw)).visits;
                Ok(p + self.bonus_scale / (visits as f64 + 2.0))
            }
            MethodState::CountOnly { model, meta_neg } => {
                let neg = self
                    .neg_dataset
                    .expect("negatives dataset is built at every retrain");
                cached(cache, enc, |e| {
                    Ok(model.forward(e)?
                        + cnml_meta_query(meta_neg, neg, e, self.meta)?.p_label1)
                })
            }
            MethodState::NoMeta { model } => cached(cache, enc, |e| {
                Ok(cnml_meta_query(model, self.dataset, e, self.meta)?.p_label1)
            }),
        }
    }
}

/// Memoizes `f` per distinct feature vector. The cache is cleared whenever
/// the underlying classifier changes, so entries never go stale.
fn cached(
    cache: &mut HashMap<u64, f64>,
    enc: &[f64],
    f: impl FnOnce(&[f64]) -> Result<f64>,
) -> Result<f64> {
    let key = rng::point_key(enc);
    if let Some(&v) = cache.get(&key) {
        return Ok(v);
    }
    let v = f(enc)?;
    cache.insert(key, v);
    Ok(v)
}

/// One collected environment step. Rewards are scored later, at the value
/// table's cell resolution, so the step only keeps its cell endpoints and
/// the raw position the sparse indicator needs.
struct CollectedStep {
    from_cell: usize,
    action: usize,
    next_cell: usize,
    raw_next: Point,
    hidden_hit: bool,
}

struct Trainer<'a> {
    cfg: &'a RunConfig,
    world: MazeWorld,
    encoding: StateEncoding,
    grid: CellGrid,
    goal_points: Vec<Point>,
    buffers: OutcomeBuffers,
    counts: TabularCounts,
    backend: SoftQBackend,
    method: MethodState,
    dataset: LabeledDataset,
    neg_dataset: Option<LabeledDataset>,
    replay: Vec<CollectedStep>,
    cache: HashMap<u64, f64>,
    clf_loss: f64,
    hidden_found: bool,
    first_retrain_done: bool,
}

impl<'a> Trainer<'a> {
    fn new(cfg: &'a RunConfig) -> Result<Self> {
        let world = make_maze(cfg.env.kind())?;
        let encoding = cfg.encoding.build(cfg.shuffle_resolution, cfg.seed);
        let grid = world.grid(cfg.backend.resolution);
        let goal_points = sample_goal_examples(&world, cfg.goal_examples, cfg.seed)?;
        let positives: Vec<Vec<f64>> = goal_points
            .iter()
            .map(|&p| encode_state(&world, &encoding, p))
            .collect();
        let buffers = OutcomeBuffers::new(positives, cfg.negative_capacity)?;
        let arch = MlpArchitecture::new(encoding.dim(), cfg.classifier_hidden.clone())?;
        let method = MethodState::init(cfg.method, &arch, cfg.seed);
        let dataset = LabeledDataset::new(encoding.dim())?;
        Ok(Self {
            cfg,
            world,
            encoding,
            grid,
            goal_points,
            buffers,
            counts: TabularCounts::new(),
            backend: SoftQBackend::new(&cfg.backend)?,
            method,
            dataset,
            neg_dataset: None,
            replay: Vec::new(),
            cache: HashMap::new(),
            clf_loss: f64::NAN,
            hidden_found: false,
            first_retrain_done: false,
        })
    }

    /// Runs the behavior policy for one epoch, restarting an episode every
    /// `world.horizon()` steps. Grows the negative buffer, the oracle visit
    /// counts, and the transition replay along the way.
    fn collect(&mut self, epoch: u64) {
        let mut r = rng::indexed_stream(self.cfg.seed, "collect", epoch);
        let mut state = self.world.start();
        self.counts.record_visit(self.grid.cell_index(state));
        self.replay.reserve(self.cfg.steps_per_epoch);
        for step in 0..self.cfg.steps_per_epoch {
            if step > 0 && step % self.world.horizon() == 0 {
                state = self.world.start();
                self.counts.record_visit(self.grid.cell_index(state));
            }
            let from_cell = self.grid.cell_index(state) as usize;
            let action = self.backend.sample_action(from_cell, &mut r);
            let t = self.world.step(state, ACTIONS[action]);
            let next_cell = self.grid.cell_index(t.next_state);
            self.counts.record_visit(next_cell);
            self.buffers
                .push_negative(encode_state(&self.world, &self.encoding, t.next_state));
            let hidden_hit = self
                .world
                .hidden_regions()
                .iter()
                .any(|h| h.contains(t.next_state));
            if hidden_hit {
                self.hidden_found = true;
            }
            self.replay.push(CollectedStep {
                from_cell,
                action,
                next_cell: next_cell as usize,
                raw_next: t.next_state,
                hidden_hit,
            });
            state = t.next_state;
        }
    }

    /// Rebuilds the balanced dataset and retrains whichever classifier the
    /// method uses, then invalidates the reward cache.
    fn retrain(&mut self, epoch: u64) -> Result<()> {
        let seed = self.cfg.seed;
        let half = self.cfg.meta.meta_test_set_size / 2;
        let mut rng_d = rng::indexed_stream(seed, "dataset", epoch);
        let (balanced, negatives_only) = sample_balanced(&self.buffers, half, &mut rng_d)?;
        let retrain_seed: u64 = rng::indexed_stream(seed, "retrain-seed", epoch).random();
        let meta_epochs = self.cfg.meta_epochs_per_retrain
            + if self.first_retrain_done {
                0
            } else {
                self.cfg.initial_meta_epochs
            };

        match &mut self.method {
            MethodState::Mural { model } => {
                let queries = sample_task_queries(&self.buffers, self.cfg.n_train, seed, epoch);
                let mut engine_cfg = self.cfg.meta.clone();
                engine_cfg.seed = retrain_seed;
                let (trained, loss) =
                    meta_train_engine(model, &balanced, &queries, &engine_cfg, meta_epochs)?;
                *model = trained;
                self.clf_loss = loss;
            }
            MethodState::Vice { model } | MethodState::ViceCountBonus { model } => {
                let opts = self.cfg.baseline.mle_options(retrain_seed);
                let summary = mle_train(model, &balanced, self.cfg.baseline.n_vice, &opts)?;
                self.clf_loss = summary.final_loss;
            }
            MethodState::Sparse => {
                self.clf_loss = f64::NAN;
            }
            MethodState::CountOnly { model, meta_neg } => {
                let opts = self.cfg.baseline.mle_options(retrain_seed);
                let summary = mle_train(model, &balanced, self.cfg.baseline.n_vice, &opts)?;
                let queries = sample_task_queries(&self.buffers, self.cfg.n_train, seed, epoch);
                let mut engine_cfg = self.cfg.meta.clone();
                engine_cfg.seed = rng::indexed_stream(seed, "retrain-seed-negatives", epoch).random();
                let (trained, _) =
                    meta_train_engine(meta_neg, &negatives_only, &queries, &engine_cfg, meta_epochs)?;
                *meta_neg = trained;
                self.clf_loss = summary.final_loss;
            }
            MethodState::NoMeta { model } => {
                let opts = self.cfg.baseline.mle_options(retrain_seed);
                let summary = mle_train(model, &balanced, self.cfg.baseline.n_vice, &opts)?;
                self.clf_loss = summary.final_loss;
            }
        }
        self.dataset = balanced;
        self.neg_dataset = Some(negatives_only);
        self.cache.clear();
        self.first_retrain_done = true;
        Ok(())
    }

    /// Rescores the whole replay with the current classifier. Queries are
    /// taken at the center of each transition's destination cell — the
    /// value table cannot tell positions within a cell apart, and sharing
    /// one query per cell keeps a full-replay refresh cheap. Returns the
    /// transitions (classifier reward plus any hidden-region bonus) and
    /// the mean classifier-derived reward over this epoch's fresh states.
    fn assign_rewards(&mut self) -> Result<(Vec<QTransition>, f64)> {
        let Trainer {
            cfg,
            world,
            encoding,
            grid,
            counts,
            method,
            dataset,
            neg_dataset,
            replay,
            cache,
            ..
        } = self;
        let ctx = RewardCtx {
            method,
            world,
            grid,
            counts,
            dataset,
            neg_dataset: neg_dataset.as_ref(),
            meta: &cfg.meta,
            bonus_scale: cfg.baseline.bonus_scale,
        };
        let mut transitions = Vec::with_capacity(replay.len());
        let fresh_from = replay.len().saturating_sub(cfg.steps_per_epoch);
        let mut fresh_sum = 0.0;
        for (i, s) in replay.iter().enumerate() {
            let enc = encode_state(world, encoding, grid.center_of(s.next_cell as u64));
            let base = ctx.reward(cache, &enc, s.raw_next)?;
            if i >= fresh_from {
                fresh_sum += base;
            }
            let reward = base + if s.hidden_hit { 1.0 } else { 0.0 };
            transitions.push(QTransition {
                state: s.from_cell,
                action: s.action,
                reward,
                next_state: s.next_cell,
                terminal: false,
            });
        }
        let fresh = (replay.len() - fresh_from).max(1);
        Ok((transitions, fresh_sum / fresh as f64))
    }

    /// Mean classifier-derived reward over the provided success examples.
    fn mean_positive_reward(&mut self) -> Result<f64> {
        let Trainer {
            cfg,
            world,
            grid,
            counts,
            method,
            dataset,
            neg_dataset,
            cache,
            buffers,
            goal_points,
            ..
        } = self;
        let ctx = RewardCtx {
            method,
            world,
            grid,
            counts,
            dataset,
            neg_dataset: neg_dataset.as_ref(),
            meta: &cfg.meta,
            bonus_scale: cfg.baseline.bonus_scale,
        };
        let mut sum = 0.0;
        for (enc, raw) in buffers.positives().iter().zip(goal_points.iter().copied()) {
            sum += ctx.reward(cache, enc, raw)?;
        }
        Ok(sum / buffers.positives().len() as f64)
    }

    fn write_checkpoint_dir(&self, run_dir: &Path, epoch: usize, log: &TrainingLog) -> Result<()> {
        let dir = run_dir.join(format!("epoch_{epoch}"));
        std::fs::create_dir_all(&dir)?;
        match &self.method {
            MethodState::Sparse => {}
            MethodState::Mural { model }
            | MethodState::Vice { model }
            | MethodState::ViceCountBonus { model }
            | MethodState::NoMeta { model } => {
                write_checkpoint(model, &dir.join("classifier.ckpt"))?;
            }
            MethodState::CountOnly { model, meta_neg } => {
                write_checkpoint(model, &dir.join("classifier.ckpt"))?;
                write_checkpoint(meta_neg, &dir.join("classifier_meta.ckpt"))?;
            }
        }
        self.backend.save(&dir.join("qtable.bin"))?;
        log.write_csv(&dir.join("log.csv"))?;
        self.counts.write_csv(&dir.join("counts.csv"))?;
        if !self.dataset.is_empty() {
            self.dataset.write_csv(&dir.join("dataset.csv"))?;
        }
        if let Some(neg) = &self.neg_dataset {
            neg.write_csv(&dir.join("dataset_negatives.csv"))?;
        }
        Ok(())
    }
}

/// Greedy rollouts from the start state. Returns the fraction that touched
/// the goal region at any step and the mean in-maze goal distance at the
/// final step. `n_rollouts` must be at least 1.
pub fn evaluate_policy(
    backend: &SoftQBackend,
    world: &MazeWorld,
    n_rollouts: usize,
    seed: u64,
) -> (f64, f64) {
    assert!(n_rollouts >= 1);
    let grid = world.grid(backend.resolution());
    let mut successes = 0usize;
    let mut distance_sum = 0.0;
    for i in 0..n_rollouts {
        let mut r = rng::indexed_stream(seed, "eval-rollout", i as u64);
        let mut state = world.start();
        let mut hit = is_success(world, state);
        for _ in 0..world.horizon() {
            let action = backend.greedy_action(grid.cell_index(state) as usize, &mut r);
            state = world.step(state, ACTIONS[action]).next_state;
            hit = hit || is_success(world, state);
        }
        if hit {
            successes += 1;
        }
        distance_sum += world.goal_distance(state);
    }
    (
        successes as f64 / n_rollouts as f64,
        distance_sum / n_rollouts as f64,
    )
}

/// Fraction of the reachable grid cells that have been visited.
pub fn coverage(counts: &TabularCounts, world: &MazeWorld, grid: &CellGrid) -> f64 {
    let reachable = reachable_cells(world, grid);
    let total = reachable.iter().filter(|&&r| r).count();
    if total == 0 {
        return 0.0;
    }
    let visited = (0..grid.len())
        .filter(|&i| reachable[i] && counts.counts(i as u64).visits > 0)
        .count();
    visited as f64 / total as f64
}

/// Executes one full training run and streams its metrics to
/// `<out_dir>/run_<seed>/log.csv`, one flushed row per epoch. Checkpoint
/// directories land next to it as `epoch_<n>/`. Returns the complete log.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<TrainingLog> {
    cfg.validate()?;
    let mut trainer = Trainer::new(cfg)?;
    let run_dir = out_dir.join(format!("run_{}", cfg.seed));
    std::fs::create_dir_all(&run_dir)?;
    let mut log_file = BufWriter::new(std::fs::File::create(run_dir.join("log.csv"))?);
    writeln!(log_file, "{}", log::CSV_HEADER)?;
    log_file.flush()?;
    let mut training_log = TrainingLog::new();

    for epoch in 0..cfg.epochs {
        let t0 = Instant::now();
        trainer.collect(epoch as u64);
        if epoch % cfg.meta.retrain_interval == 0 {
            trainer.retrain(epoch as u64)?;
        }
        let (transitions, mean_reward_neg) = trainer.assign_rewards()?;
        trainer.backend.train_on(&transitions, cfg.backend.sweeps)?;

        let eval_seed: u64 = rng::indexed_stream(cfg.seed, "eval-seed", epoch as u64).random();
        let (success_rate, final_distance) =
            evaluate_policy(&trainer.backend, &trainer.world, cfg.eval_rollouts, eval_seed);
        let cov = coverage(&trainer.counts, &trainer.world, &trainer.grid);
        let mean_reward_pos = trainer.mean_positive_reward()?;

        let record = EpochRecord {
            epoch,
            success_rate,
            final_distance,
            coverage: cov,
            clf_loss: trainer.clf_loss,
            mean_reward_pos,
            mean_reward_neg,
            wall_clock_s: t0.elapsed().as_secs_f64(),
            hidden_reward_found: trainer.hidden_found,
        };
        writeln!(log_file, "{}", record.to_csv_row())?;
        log_file.flush()?;
        training_log.push(record);

        let last = epoch + 1 == cfg.epochs;
        let scheduled =
            cfg.checkpoint_interval > 0 && (epoch + 1) % cfg.checkpoint_interval == 0;
        if last || scheduled {
            trainer.write_checkpoint_dir(&run_dir, epoch, &training_log)?;
        }
    }
    Ok(training_log)
}
