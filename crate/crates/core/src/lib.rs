//! Uncertainty-aware binary success classifiers and an outcome-driven RL
//! harness built around them.
//!
//! The crate has four layers, each usable on its own:
//!
//! - [`net`]: a small fully-connected binary classifier over `f64` feature
//!   vectors, with exact reverse-mode gradients, SGD/Adam updates, and a
//!   bit-exact checkpoint format.
//! - [`classifiers`]: success-probability estimators over labeled datasets —
//!   maximum-likelihood training, exact per-query conditional NML
//!   (augment-and-refit per label, then normalize), a closed-form tabular
//!   variant on visit counts, and a meta-learned amortization that answers
//!   queries with a handful of gradient steps instead of a full refit.
//! - [`maze`]: deterministic 2D point-mass navigation environments with
//!   axis-aligned walls, wall-aware shortest-path distances, and state
//!   encodings (raw coordinates or a seeded cell shuffle).
//! - [`harness`]: an outcome-driven training loop that collects experience,
//!   retrains a classifier on goal examples plus visited states, uses its
//!   success probabilities as rewards for a tabular soft Q-learning backend,
//!   and logs per-epoch metrics.

pub mod classifiers;
pub mod harness;
pub mod maze;
pub mod net;
pub mod rng;

use thiserror::Error;

/// Errors surfaced by every layer of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid {name}: {reason}")]
    InvalidValue { name: &'static str, reason: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset contains a single class; training requires both labels")]
    SingleClass,
    #[error("point ({0}, {1}) lies on a wall")]
    PointOnWall(f64, f64),
    #[error("no path between the given points")]
    Unreachable,
    #[error("parse error in {context}: {reason}")]
    Parse { context: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub use classifiers::{
    assign_rewards, build_meta_tasks, cnml_meta_query, cnml_naive, cnml_tabular,
    cnml_tabular_rational, kernel_weight, mle_train, meta_train, query_importance_weight,
    reference_dataset, ClassifierHandle, CnmlPrediction, ConvergenceConfig, LabeledDataset,
    LabeledPoint,
    MetaNmlConfig, MetaTask, MleOptions, TabularCounts,
};
pub use harness::{
    coverage, evaluate_policy, run, BackendConfig, BaselineConfig, EncodingKind, EnvKind,
    EpochRecord, Method, OutcomeBuffers, QTransition, RunConfig, SoftQBackend, TrainingLog,
    ACTIONS,
};
pub use maze::{
    encode_state, is_success, make_maze, maze_distance, sample_goal_examples, update_counts,
    CellGrid, MazeKind, MazeWorld, Point, StateEncoding, Transition, Wall,
};
pub use net::{
    init_model, snapshot, restore, Activation, MlpArchitecture, MlpModel, ModelSnapshot,
    OptimizerKind, OptimizerState,
};
