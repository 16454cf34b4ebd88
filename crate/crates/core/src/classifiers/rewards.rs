//! Reward assignment: states in, success probabilities out.
//!
//! A [`ClassifierHandle`] names which classifier produces `p(success | s)`,
//! and [`assign_rewards`] evaluates a whole state batch through it. The
//! handle borrows everything, so callers keep ownership of models, datasets
//! and count tables between reward refreshes.

use std::io::{BufWriter, Write};
use std::path::Path;

use super::{
    cnml_meta_query, cnml_naive, cnml_tabular, CnmlPrediction, ConvergenceConfig, LabeledDataset,
    MetaNmlConfig, TabularCounts,
};
use crate::maze::{CellGrid, Point};
use crate::net::{MlpArchitecture, MlpModel};
use crate::{Error, Result};

/// Which classifier turns a state into a success probability.
#[derive(Debug, Clone, Copy)]
pub enum ClassifierHandle<'a> {
    /// Plain discriminator: `p = forward(s)`.
    Mle { model: &'a MlpModel },
    /// Exact per-query refit.
    CnmlNaive {
        arch: &'a MlpArchitecture,
        dataset: &'a LabeledDataset,
        convergence: &'a ConvergenceConfig,
    },
    /// Amortized query against a meta-trained initialization.
    MetaNml {
        model: &'a MlpModel,
        dataset: &'a LabeledDataset,
        config: &'a MetaNmlConfig,
    },
    /// Closed-form count-based estimate on a discretized state space.
    Tabular {
        counts: &'a TabularCounts,
        grid: &'a CellGrid,
    },
}

impl ClassifierHandle<'_> {
    /// Success probability of a single state.
    pub fn probability(&self, state: &[f64]) -> Result<f64> {
        match self {
            ClassifierHandle::Mle { model } => model.forward(state),
            ClassifierHandle::CnmlNaive {
                arch,
                dataset,
                convergence,
            } => Ok(cnml_naive(arch, dataset, state, convergence)?.p_label1),
            ClassifierHandle::MetaNml {
                model,
                dataset,
                config,
            } => Ok(cnml_meta_query(model, dataset, state, config)?.p_label1),
            ClassifierHandle::Tabular { counts, grid } => {
                if state.len() != 2 {
                    return Err(Error::DimensionMismatch {
                        expected: 2,
                        got: state.len(),
                    });
                }
                if !(state[0].is_finite() && state[1].is_finite()) {
                    return Err(Error::NonFinite("state"));
                }
                let cell = grid.cell_index(Point::new(state[0], state[1]));
                Ok(cnml_tabular(counts, cell))
            }
        }
    }
}

/// Evaluates `p(success | s)` for every state in the batch.
pub fn assign_rewards(handle: &ClassifierHandle, states: &[Vec<f64>]) -> Result<Vec<f64>> {
    states.iter().map(|s| handle.probability(s)).collect()
}

/// Writes queries and their predictions as CSV:
/// `x0,...,x{d-1},p1_raw0,p1_raw1,p1`.
pub fn write_predictions_csv(
    path: &Path,
    queries: &[Vec<f64>],
    predictions: &[CnmlPrediction],
) -> Result<()> {
    if queries.len() != predictions.len() {
        return Err(Error::DimensionMismatch {
            expected: queries.len(),
            got: predictions.len(),
        });
    }
    let dim = queries.first().map_or(0, Vec::len);
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    for d in 0..dim {
        write!(out, "x{d},")?;
    }
    writeln!(out, "p1_raw0,p1_raw1,p1")?;
    for (q, pred) in queries.iter().zip(predictions) {
        if q.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: q.len(),
            });
        }
        for v in q {
            write!(out, "{v},")?;
        }
        writeln!(
            out,
            "{},{},{}",
            pred.raw_likelihood0, pred.raw_likelihood1, pred.p_label1
        )?;
    }
    out.flush()?;
    Ok(())
}
