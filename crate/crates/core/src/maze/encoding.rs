//! State encodings presented to classifiers.
//!
//! `ContinuousXy` passes raw coordinates through. `ShuffledDiscrete` snaps
//! the state to a coarse cell and relabels cells by a seeded permutation, so
//! the image coordinates carry no metric information about the maze: cells
//! that are adjacent to walk between usually land far apart.

use super::{CellGrid, MazeWorld, Point};
use crate::rng;
use rand::seq::SliceRandom;

#[derive(Debug, Clone, PartialEq)]
pub enum StateEncoding {
    ContinuousXy,
    ShuffledDiscrete {
        resolution: usize,
        permutation: Vec<u32>,
    },
}

impl StateEncoding {
    /// A seeded cell shuffle at the given resolution.
    pub fn shuffled(resolution: usize, seed: u64) -> Self {
        let mut permutation: Vec<u32> = (0..(resolution * resolution) as u32).collect();
        permutation.shuffle(&mut rng::stream(seed, "state-shuffle"));
        StateEncoding::ShuffledDiscrete {
            resolution,
            permutation,
        }
    }

    /// Dimension of encoded feature vectors (always 2 here).
    pub fn dim(&self) -> usize {
        2
    }
}

/// Maps a state to the feature vector the classifier sees.
pub fn encode_state(world: &MazeWorld, encoding: &StateEncoding, s: Point) -> Vec<f64> {
    match encoding {
        StateEncoding::ContinuousXy => vec![s.x, s.y],
        StateEncoding::ShuffledDiscrete {
            resolution,
            permutation,
        } => {
            let grid = CellGrid::new(world.bounds(), *resolution);
            let cell = grid.cell_index(s) as usize;
            let image = grid.center_of(u64::from(permutation[cell]));
            vec![image.x, image.y]
        }
    }
}
