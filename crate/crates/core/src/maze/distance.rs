//! Wall-respecting shortest-path distances.
//!
//! Distances are measured on a fine lattice of cell centers (4-connected,
//! one lattice step per cell) and scaled back to world units. A lattice edge
//! is passable when the straight segment between the two cell centers does
//! not cross a wall.

use super::{CellGrid, MazeWorld, Point, SUCCESS_THRESHOLD};
use crate::{Error, Result};
use std::collections::VecDeque;

/// Breadth-first distance (in lattice steps) from `from` to every cell of
/// the world's distance lattice. Unreachable cells hold `u32::MAX`.
pub(crate) fn bfs_field(world: &MazeWorld, from: Point) -> Vec<u32> {
    let grid = world.distance_grid();
    bfs_field_on(world, &grid, grid.cell_index(from) as usize)
}

pub(crate) fn bfs_field_on(world: &MazeWorld, grid: &CellGrid, from_cell: usize) -> Vec<u32> {
    let res = grid.resolution();
    let mut dist = vec![u32::MAX; grid.len()];
    let mut queue = VecDeque::new();
    dist[from_cell] = 0;
    queue.push_back(from_cell);
    while let Some(cell) = queue.pop_front() {
        let d = dist[cell];
        let ix = cell % res;
        let iy = cell / res;
        let here = grid.center_of(cell as u64);
        let mut visit = |nx: usize, ny: usize| {
            let ncell = ny * res + nx;
            if dist[ncell] != u32::MAX {
                return;
            }
            let there = grid.center_of(ncell as u64);
            let crossed = world.walls().iter().any(|w| w.blocks(here, there));
            if !crossed {
                dist[ncell] = d + 1;
                queue.push_back(ncell);
            }
        };
        if ix > 0 {
            visit(ix - 1, iy);
        }
        if ix + 1 < res {
            visit(ix + 1, iy);
        }
        if iy > 0 {
            visit(ix, iy - 1);
        }
        if iy + 1 < res {
            visit(ix, iy + 1);
        }
    }
    dist
}

/// Cells of `grid` reachable from the start state, walls respected. The
/// returned mask is indexed by cell index.
pub(crate) fn reachable_cells(world: &MazeWorld, grid: &CellGrid) -> Vec<bool> {
    let from = grid.cell_index(world.start()) as usize;
    bfs_field_on(world, grid, from)
        .iter()
        .map(|&d| d != u32::MAX)
        .collect()
}

/// Shortest wall-respecting path length from `s` to `g` in world units.
///
/// Both points must lie off the walls; pairs with no connecting path are an
/// error. Points in the same lattice cell have distance 0, and adjacent free
/// cells are one lattice step apart.
pub fn maze_distance(world: &MazeWorld, s: Point, g: Point) -> Result<f64> {
    for p in [s, g] {
        if world.point_on_wall(p) {
            return Err(Error::PointOnWall(p.x, p.y));
        }
    }
    let grid = world.distance_grid();
    let field = if grid.cell_index(g) == grid.cell_index(world.goal().center) {
        // The goal field is precomputed; reuse it.
        None
    } else {
        Some(bfs_field_on(world, &grid, grid.cell_index(g) as usize))
    };
    let field = field.as_deref().unwrap_or_else(|| world.goal_field());
    let steps = field[grid.cell_index(s) as usize];
    if steps == u32::MAX {
        return Err(Error::Unreachable);
    }
    Ok(f64::from(steps) * grid.cell_size().0)
}

/// Whether `s` is within the success threshold of the goal, measured by
/// wall-respecting distance (not Euclidean, so walls between the agent and
/// the goal are never shortcut).
pub fn is_success(world: &MazeWorld, s: Point) -> bool {
    world.goal_distance(s) <= SUCCESS_THRESHOLD
}
