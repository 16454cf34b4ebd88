//! Bridging continuous trajectories into per-cell count tables.

use super::{CellGrid, Point};
use crate::classifiers::TabularCounts;
use std::collections::BTreeMap;

/// Adds one visit per state and resets goal-hit counts from the example
/// histogram. Visit counts only grow; goal hits are a pure function of the
/// (fixed) goal examples, so repeated calls with the same examples are
/// idempotent on that side.
pub fn update_counts(
    counts: &mut TabularCounts,
    grid: &CellGrid,
    visited_states: &[Point],
    goal_examples: &[Point],
) {
    for p in visited_states {
        counts.record_visit(grid.cell_index(*p));
    }
    if !goal_examples.is_empty() {
        counts.clear_goal_hits();
        let mut hist: BTreeMap<u64, u64> = BTreeMap::new();
        for p in goal_examples {
            *hist.entry(grid.cell_index(*p)).or_default() += 1;
        }
        for (cell, hits) in hist {
            counts.set_goal_hits(cell, hits);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maze::{make_maze, MazeKind};

    #[test]
    fn empty_visit_list_changes_nothing() {
        let w = make_maze(MazeKind::Zigzag).unwrap();
        let grid = w.grid(40);
        let mut counts = TabularCounts::new();
        update_counts(&mut counts, &grid, &[], &[]);
        assert_eq!(counts, TabularCounts::new());
    }

    #[test]
    fn one_visit_increments_exactly_one_cell() {
        let w = make_maze(MazeKind::Zigzag).unwrap();
        let grid = w.grid(40);
        let mut counts = TabularCounts::new();
        let p = Point::new(1.23, -0.5);
        update_counts(&mut counts, &grid, &[p], &[]);
        assert_eq!(counts.counts(grid.cell_index(p)).visits, 1);
        assert_eq!(counts.total_visits(), 1);
    }

    #[test]
    fn total_visits_match_state_count_and_never_decrease() {
        let w = make_maze(MazeKind::Zigzag).unwrap();
        let grid = w.grid(40);
        let mut counts = TabularCounts::new();
        let batch: Vec<Point> = (0..50)
            .map(|i| Point::new(-3.9 + 0.15 * i as f64, 3.0))
            .collect();
        update_counts(&mut counts, &grid, &batch, &[]);
        assert_eq!(counts.total_visits(), 50);
        update_counts(&mut counts, &grid, &batch, &[]);
        assert_eq!(counts.total_visits(), 100);
    }

    #[test]
    fn goal_hits_are_idempotent_across_updates() {
        let w = make_maze(MazeKind::Zigzag).unwrap();
        let grid = w.grid(40);
        let goals = crate::maze::sample_goal_examples(&w, 150, 4).unwrap();
        let mut counts = TabularCounts::new();
        update_counts(&mut counts, &grid, &[], &goals);
        let total_g: u64 = counts.iter().map(|(_, c)| c.goal_hits).sum();
        assert_eq!(total_g, 150);
        update_counts(&mut counts, &grid, &[w.start()], &goals);
        let total_g2: u64 = counts.iter().map(|(_, c)| c.goal_hits).sum();
        assert_eq!(total_g2, 150);
    }
}
