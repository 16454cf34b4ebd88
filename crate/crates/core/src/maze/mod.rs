//! Deterministic 2D point-mass navigation with zero-thickness axis-aligned
//! walls.
//!
//! Actions are velocities in [-1, 1]^2 scaled by a fixed per-step distance.
//! Motion resolves one axis at a time and clips at the first wall hit, so
//! the agent slides along walls instead of sticking to them, and a diagonal
//! step can never cut through a corner.

mod counts;
mod distance;
mod encoding;
mod layouts;

pub use counts::update_counts;
pub use distance::{is_success, maze_distance};
pub(crate) use distance::reachable_cells;
pub use encoding::{encode_state, StateEncoding};
pub use layouts::{layout_to_string, load_layout, make_maze, parse_layout, DEFAULT_HORIZON};

use crate::{rng, Error, Result};
use rand::Rng;

/// Resolution of the lattice used for shortest-path distances.
pub const DISTANCE_RESOLUTION: usize = 80;
/// States within this shortest-path distance of the goal count as successes.
pub const SUCCESS_THRESHOLD: f64 = 0.5;
/// Maximum per-axis displacement of one step.
pub const STEP_SCALE: f64 = 0.2;
/// Gap left between the agent and a wall (or the world edge) after a hit.
const COLLISION_GAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn features(&self) -> Vec<f64> {
        vec![self.x, self.y]
    }
}

/// An axis-aligned zero-thickness wall segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wall {
    pub a: Point,
    pub b: Point,
}

impl Wall {
    pub fn new(a: Point, b: Point) -> Result<Self> {
        if a.x != b.x && a.y != b.y {
            return Err(Error::InvalidValue {
                name: "wall",
                reason: format!(
                    "segment ({}, {})-({}, {}) is not axis-aligned",
                    a.x, a.y, b.x, b.y
                ),
            });
        }
        if a.x == b.x && a.y == b.y {
            return Err(Error::InvalidValue {
                name: "wall",
                reason: "segment has zero length".into(),
            });
        }
        Ok(Self { a, b })
    }

    fn is_vertical(&self) -> bool {
        self.a.x == self.b.x
    }

    fn span(&self) -> (f64, f64) {
        if self.is_vertical() {
            (self.a.y.min(self.b.y), self.a.y.max(self.b.y))
        } else {
            (self.a.x.min(self.b.x), self.a.x.max(self.b.x))
        }
    }

    fn line(&self) -> f64 {
        if self.is_vertical() {
            self.a.x
        } else {
            self.a.y
        }
    }

    /// Whether the straight move `from -> to` (parallel to one axis) crosses
    /// this wall strictly. Endpoints exactly on the wall line do not count
    /// as crossings; the stepper keeps a small gap so that never arises.
    fn blocks(&self, from: Point, to: Point) -> bool {
        let (lo, hi) = self.span();
        if self.is_vertical() {
            let cross = from.y; // unchanged along a horizontal move
            (lo..=hi).contains(&cross)
                && (from.x - self.a.x) * (to.x - self.a.x) < 0.0
        } else {
            let cross = from.x;
            (lo..=hi).contains(&cross)
                && (from.y - self.a.y) * (to.y - self.a.y) < 0.0
        }
    }

    /// Squared distance from `p` to the segment.
    fn dist_sq(&self, p: Point) -> f64 {
        let (lo, hi) = self.span();
        if self.is_vertical() {
            let dy = if p.y < lo {
                lo - p.y
            } else if p.y > hi {
                p.y - hi
            } else {
                0.0
            };
            let dx = p.x - self.a.x;
            dx * dx + dy * dy
        } else {
            let dx = if p.x < lo {
                lo - p.x
            } else if p.x > hi {
                p.x - hi
            } else {
                0.0
            };
            let dy = p.y - self.a.y;
            dx * dx + dy * dy
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: Point,
    pub max: Point,
}

impl Bounds {
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }
}

/// A disc-shaped region of interest (the goal, or a hidden bonus region).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub center: Point,
    pub radius: f64,
}

impl Region {
    pub fn contains(&self, p: Point) -> bool {
        self.center.dist(&p) <= self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MazeKind {
    Zigzag,
    Spiral,
    DoubleSided,
}

impl MazeKind {
    pub fn name(&self) -> &'static str {
        match self {
            MazeKind::Zigzag => "zigzag",
            MazeKind::Spiral => "spiral",
            MazeKind::DoubleSided => "double_sided",
        }
    }
}

/// One environment step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: Point,
    pub action: [f64; 2],
    pub next_state: Point,
    pub success: bool,
}

/// A maze: bounds, walls, start, goal, optional hidden bonus regions, and an
/// episode horizon. Construction validates geometry, checks that the goal is
/// reachable from the start, and precomputes the goal distance field.
#[derive(Debug, Clone)]
pub struct MazeWorld {
    name: String,
    bounds: Bounds,
    walls: Vec<Wall>,
    start: Point,
    goal: Region,
    hidden: Vec<Region>,
    horizon: usize,
    goal_field: Vec<u32>,
}

impl MazeWorld {
    pub fn new(
        name: String,
        bounds: Bounds,
        walls: Vec<Wall>,
        start: Point,
        goal: Region,
        hidden: Vec<Region>,
        horizon: usize,
    ) -> Result<Self> {
        if bounds.min.x >= bounds.max.x || bounds.min.y >= bounds.max.y {
            return Err(Error::InvalidValue {
                name: "bounds",
                reason: "min must be strictly below max on both axes".into(),
            });
        }
        if horizon == 0 {
            return Err(Error::InvalidValue {
                name: "horizon",
                reason: "must be >= 1".into(),
            });
        }
        if goal.radius <= 0.0 {
            return Err(Error::InvalidValue {
                name: "goal",
                reason: "radius must be positive".into(),
            });
        }
        for p in [start, goal.center] {
            if !bounds.contains(p) {
                return Err(Error::InvalidValue {
                    name: "layout",
                    reason: format!("point ({}, {}) is outside the bounds", p.x, p.y),
                });
            }
        }
        for w in &walls {
            if !bounds.contains(w.a) || !bounds.contains(w.b) {
                return Err(Error::InvalidValue {
                    name: "wall",
                    reason: "segment extends outside the bounds".into(),
                });
            }
        }
        let mut world = Self {
            name,
            bounds,
            walls,
            start,
            goal,
            hidden,
            horizon,
            goal_field: Vec::new(),
        };
        world.goal_field = distance::bfs_field(&world, world.goal.center);
        let grid = world.distance_grid();
        if world.goal_field[grid.cell_index(start) as usize] == u32::MAX {
            return Err(Error::Unreachable);
        }
        Ok(world)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn walls(&self) -> &[Wall] {
        &self.walls
    }

    pub fn start(&self) -> Point {
        self.start
    }

    pub fn goal(&self) -> Region {
        self.goal
    }

    pub fn hidden_regions(&self) -> &[Region] {
        &self.hidden
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn grid(&self, resolution: usize) -> CellGrid {
        CellGrid::new(self.bounds, resolution)
    }

    pub(crate) fn distance_grid(&self) -> CellGrid {
        self.grid(DISTANCE_RESOLUTION)
    }

    pub(crate) fn goal_field(&self) -> &[u32] {
        &self.goal_field
    }

    /// Shortest wall-respecting distance from `p` to the goal, or infinity
    /// if no path exists.
    pub fn goal_distance(&self, p: Point) -> f64 {
        let grid = self.distance_grid();
        let steps = self.goal_field[grid.cell_index(p) as usize];
        if steps == u32::MAX {
            f64::INFINITY
        } else {
            f64::from(steps) * grid.cell_size().0
        }
    }

    pub(crate) fn point_on_wall(&self, p: Point) -> bool {
        self.walls.iter().any(|w| w.dist_sq(p) < 1e-18)
    }

    /// Applies one action (clamped to [-1, 1]^2) from `state`.
    pub fn step(&self, state: Point, action: [f64; 2]) -> Transition {
        debug_assert!(self.bounds.contains(state));
        let dx = action[0].clamp(-1.0, 1.0) * STEP_SCALE;
        let dy = action[1].clamp(-1.0, 1.0) * STEP_SCALE;
        let mid = self.move_axis(state, dx, true);
        let next = self.move_axis(mid, dy, false);
        Transition {
            state,
            action,
            next_state: next,
            success: is_success(self, next),
        }
    }

    fn move_axis(&self, p: Point, delta: f64, horizontal: bool) -> Point {
        if delta == 0.0 {
            return p;
        }
        let mut target = if horizontal { p.x + delta } else { p.y + delta };
        let (lo, hi) = if horizontal {
            (self.bounds.min.x, self.bounds.max.x)
        } else {
            (self.bounds.min.y, self.bounds.max.y)
        };
        target = target.clamp(lo + COLLISION_GAP, hi - COLLISION_GAP);
        // Progressive clipping: each wall that the (current) move still
        // crosses pulls the target back to its own line, so the nearest
        // obstruction wins regardless of wall order.
        for wall in &self.walls {
            if wall.is_vertical() != horizontal {
                continue;
            }
            let to = if horizontal {
                Point::new(target, p.y)
            } else {
                Point::new(p.x, target)
            };
            if wall.blocks(p, to) {
                let line = wall.line();
                target = if delta > 0.0 {
                    line - COLLISION_GAP
                } else {
                    line + COLLISION_GAP
                };
            }
        }
        if horizontal {
            Point::new(target, p.y)
        } else {
            Point::new(p.x, target)
        }
    }
}

/// Uniform samples from the success region around the goal, drawn by
/// rejection from the goal disc's bounding square.
pub fn sample_goal_examples(world: &MazeWorld, count: usize, seed: u64) -> Result<Vec<Point>> {
    let mut rng = rng::stream(seed, "goal-examples");
    let goal = world.goal();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    let cap = count.saturating_mul(100_000).max(100_000);
    while out.len() < count {
        attempts += 1;
        if attempts > cap {
            return Err(Error::InvalidValue {
                name: "goal region",
                reason: "rejection sampling failed; success region too small".into(),
            });
        }
        let x = rng.random_range(goal.center.x - goal.radius..=goal.center.x + goal.radius);
        let y = rng.random_range(goal.center.y - goal.radius..=goal.center.y + goal.radius);
        let p = Point::new(x, y);
        if goal.contains(p) && world.bounds().contains(p) && is_success(world, p) {
            out.push(p);
        }
    }
    Ok(out)
}

/// A square grid over a bounding box, mapping continuous points to cell
/// indices (`iy * resolution + ix`) and back to cell centers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGrid {
    bounds: Bounds,
    resolution: usize,
}

impl CellGrid {
    pub fn new(bounds: Bounds, resolution: usize) -> Self {
        assert!(resolution >= 1);
        Self { bounds, resolution }
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.resolution * self.resolution
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_size(&self) -> (f64, f64) {
        (
            self.bounds.width() / self.resolution as f64,
            self.bounds.height() / self.resolution as f64,
        )
    }

    pub fn cell_coords(&self, p: Point) -> (usize, usize) {
        let (cw, ch) = self.cell_size();
        let ix = ((p.x - self.bounds.min.x) / cw).floor() as isize;
        let iy = ((p.y - self.bounds.min.y) / ch).floor() as isize;
        let clamp = |v: isize| v.clamp(0, self.resolution as isize - 1) as usize;
        (clamp(ix), clamp(iy))
    }

    pub fn cell_index(&self, p: Point) -> u64 {
        let (ix, iy) = self.cell_coords(p);
        (iy * self.resolution + ix) as u64
    }

    pub fn center_of(&self, index: u64) -> Point {
        let ix = (index as usize) % self.resolution;
        let iy = (index as usize) / self.resolution;
        let (cw, ch) = self.cell_size();
        Point::new(
            self.bounds.min.x + (ix as f64 + 0.5) * cw,
            self.bounds.min.y + (iy as f64 + 0.5) * ch,
        )
    }
}
