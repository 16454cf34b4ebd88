//! Success classifiers and the reward interface built on them.
//!
//! Four ways to estimate `p(success | state)` from labeled examples:
//!
//! - [`mle_train`]: a plain maximum-likelihood discriminator — cheap,
//!   confident everywhere, including far outside its data;
//! - [`cnml_naive`]: the exact normalized-maximum-likelihood answer,
//!   refitting the model once per candidate label of every query;
//! - [`meta_train`] + [`cnml_meta_query`]: the amortized version, where a
//!   meta-learned initialization turns each refit into a couple of gradient
//!   steps;
//! - [`cnml_tabular`]: the closed-form count-based special case,
//!   `(G+1)/(N+G+2)` for a cell with N visits and G recorded successes.
//!
//! [`assign_rewards`] dispatches a state batch through any of them.

mod cnml;
mod dataset;
mod meta;
mod mle;
mod rewards;
mod tabular;

pub use cnml::{cnml_naive, CnmlPrediction, ConvergenceConfig};
pub use dataset::{reference_dataset, LabeledDataset, LabeledPoint};
pub use meta::{
    build_meta_tasks, cnml_meta_query, kernel_weight, meta_train, query_importance_weight,
    MetaNmlConfig, MetaTask,
};
pub(crate) use meta::meta_train_engine;
pub use mle::{mle_train, MleOptions, MleSummary};
pub use rewards::{assign_rewards, write_predictions_csv, ClassifierHandle};
pub use tabular::{cnml_tabular, cnml_tabular_rational, CellCounts, TabularCounts};
