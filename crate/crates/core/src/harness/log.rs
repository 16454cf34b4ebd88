//! Per-epoch training metrics and their CSV round trip.
//!
//! One row per epoch. Rows are written incrementally and flushed at every
//! epoch boundary, so a log file truncated mid-run (or a run killed between
//! epochs) still parses as a valid prefix.

use crate::{Error, Result};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Fraction of greedy evaluation rollouts that touched the goal region.
    pub success_rate: f64,
    /// Mean in-maze distance to the goal at the final rollout step.
    pub final_distance: f64,
    /// Visited fraction of the reachable state-grid cells.
    pub coverage: f64,
    /// Classifier objective at the latest retrain (NaN when the method has
    /// no classifier).
    pub clf_loss: f64,
    /// Mean classifier-derived reward over the positive outcome examples.
    pub mean_reward_pos: f64,
    /// Mean classifier-derived reward over this epoch's fresh samples.
    pub mean_reward_neg: f64,
    pub wall_clock_s: f64,
    /// Whether any hidden bonus region has been entered so far (sticky).
    pub hidden_reward_found: bool,
}

pub(crate) const CSV_HEADER: &str = "epoch,success_rate,final_distance,coverage,clf_loss,mean_reward_pos,mean_reward_neg,wall_clock_s,hidden_reward_found";

impl EpochRecord {
    pub(crate) fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.epoch,
            self.success_rate,
            self.final_distance,
            self.coverage,
            self.clf_loss,
            self.mean_reward_pos,
            self.mean_reward_neg,
            self.wall_clock_s,
            self.hidden_reward_found
        )
    }

    fn from_csv_row(context: &str, line_no: usize, line: &str) -> Result<Self> {
        let err = |reason: String| Error::Parse {
            context: format!("{context}:{line_no}"),
            reason,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(err(format!("expected 9 fields, found {}", fields.len())));
        }
        let float = |f: &str| {
            f.parse::<f64>()
                .map_err(|_| err(format!("`{f}` is not a number")))
        };
        Ok(Self {
            epoch: fields[0]
                .parse()
                .map_err(|_| err(format!("`{}` is not an epoch index", fields[0])))?,
            success_rate: float(fields[1])?,
            final_distance: float(fields[2])?,
            coverage: float(fields[3])?,
            clf_loss: float(fields[4])?,
            mean_reward_pos: float(fields[5])?,
            mean_reward_neg: float(fields[6])?,
            wall_clock_s: float(fields[7])?,
            hidden_reward_found: match fields[8] {
                "true" => true,
                "false" => false,
                other => return Err(err(format!("`{other}` is not a boolean"))),
            },
        })
    }

    /// Field-for-field equality that treats NaN as equal to NaN and ignores
    /// wall-clock time, which is the one column that varies across
    /// otherwise identical runs.
    pub fn metrics_match(&self, other: &Self) -> bool {
        let feq = |a: f64, b: f64| a.to_bits() == b.to_bits();
        self.epoch == other.epoch
            && feq(self.success_rate, other.success_rate)
            && feq(self.final_distance, other.final_distance)
            && feq(self.coverage, other.coverage)
            && feq(self.clf_loss, other.clf_loss)
            && feq(self.mean_reward_pos, other.mean_reward_pos)
            && feq(self.mean_reward_neg, other.mean_reward_neg)
            && self.hidden_reward_found == other.hidden_reward_found
    }
}

/// The full metric history of one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    records: Vec<EpochRecord>,
}

impl TrainingLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: EpochRecord) {
        self.records.push(record);
    }

    pub fn records(&self) -> &[EpochRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn metrics_match(&self, other: &Self) -> bool {
        self.records.len() == other.records.len()
            && self
                .records
                .iter()
                .zip(&other.records)
                .all(|(a, b)| a.metrics_match(b))
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.to_csv_row());
            out.push('\n');
        }
        out
    }

    pub fn from_csv_str(context: &str, text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end() == CSV_HEADER => {}
            _ => {
                return Err(Error::Parse {
                    context: context.to_string(),
                    reason: format!("expected header `{CSV_HEADER}`"),
                })
            }
        }
        let mut log = Self::new();
        for (i, line) in lines {
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            log.push(EpochRecord::from_csv_row(context, i + 1, line)?);
        }
        Ok(log)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv_str(&path.display().to_string(), &text)
    }
}
