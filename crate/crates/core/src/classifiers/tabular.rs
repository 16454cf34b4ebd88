//! Closed-form tabular CNML over visit counts.
//!
//! For a discrete state with N plain visits and G goal-example hits, the
//! augment-and-refit construction collapses to the exact rational
//! (G+1)/(N+G+2): each proposed label adds one pseudo-count, the Bernoulli
//! MLE on each augmented table is a ratio of counts, and normalizing the two
//! maximum likelihoods telescopes to that single fraction. With G = 0 this
//! is the inverse-count rule 1/(N+2).

use crate::{Error, Result};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CellCounts {
    pub visits: u64,
    pub goal_hits: u64,
}

/// Per-cell (N, G) counts keyed by discrete state id. Ordered storage so
/// iteration and serialization are deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TabularCounts {
    cells: BTreeMap<u64, CellCounts>,
}

impl TabularCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_visit(&mut self, cell: u64) {
        self.cells.entry(cell).or_default().visits += 1;
    }

    pub fn set_goal_hits(&mut self, cell: u64, hits: u64) {
        self.cells.entry(cell).or_default().goal_hits = hits;
    }

    pub fn clear_goal_hits(&mut self) {
        for c in self.cells.values_mut() {
            c.goal_hits = 0;
        }
    }

    /// (N, G) for a cell; absent cells count as (0, 0).
    pub fn counts(&self, cell: u64) -> CellCounts {
        self.cells.get(&cell).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, CellCounts)> + '_ {
        self.cells.iter().map(|(k, v)| (*k, *v))
    }

    pub fn visited_cell_count(&self) -> usize {
        self.cells.values().filter(|c| c.visits > 0).count()
    }

    pub fn total_visits(&self) -> u64 {
        self.cells.values().map(|c| c.visits).sum()
    }

    pub fn to_csv_string(&self) -> String {
        let mut rows: Vec<(u64, CellCounts)> = self.iter().collect();
        rows.sort_unstable_by_key(|(cell, _)| *cell);
        let mut out = String::from("cell,visits,goal_hits\n");
        for (cell, c) in rows {
            out.push_str(&format!("{cell},{},{}\n", c.visits, c.goal_hits));
        }
        out
    }

    pub fn from_csv_str(name: &str, text: &str) -> Result<Self> {
        let err = |line: usize, reason: String| Error::Parse {
            context: format!("{name}:{line}"),
            reason,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end() == "cell,visits,goal_hits" => {}
            _ => return Err(err(1, "expected header `cell,visits,goal_hits`".into())),
        }
        let mut counts = Self::new();
        for (i, line) in lines {
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(err(i + 1, "expected 3 fields".into()));
            }
            let parse = |f: &str| {
                f.parse::<u64>()
                    .map_err(|_| err(i + 1, format!("`{f}` is not a count")))
            };
            let cell = parse(fields[0])?;
            counts.cells.insert(
                cell,
                CellCounts {
                    visits: parse(fields[1])?,
                    goal_hits: parse(fields[2])?,
                },
            );
        }
        Ok(counts)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv_str(&path.display().to_string(), &text)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// The success probability as a reduced exact rational (numerator,
/// denominator) = (G+1)/(N+G+2).
pub fn cnml_tabular_rational(visits: u64, goal_hits: u64) -> (u64, u64) {
    let num = goal_hits + 1;
    let den = visits + goal_hits + 2;
    let g = gcd(num, den);
    (num / g, den / g)
}

/// p(success | cell) under tabular CNML. Exact rational (G+1)/(N+G+2)
/// converted to double at the end (a single correctly rounded division).
pub fn cnml_tabular(counts: &TabularCounts, cell: u64) -> f64 {
    let c = counts.counts(cell);
    let (num, den) = cnml_tabular_rational(c.visits, c.goal_hits);
    num as f64 / den as f64
}
