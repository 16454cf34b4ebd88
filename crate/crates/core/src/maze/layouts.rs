//! The maze layout text format and the shipped layouts.
//!
//! One directive per line; `#` starts a comment. Coordinates are world
//! units.
//!
//! ```text
//! bounds <min_x> <min_y> <max_x> <max_y>
//! wall <x0> <y0> <x1> <y1>        # repeated; axis-aligned
//! start <x> <y>
//! goal <x> <y> <radius>
//! hidden <x> <y> <radius>         # optional, repeated
//! horizon <steps>                 # optional, default 100
//! ```

use super::{Bounds, MazeKind, MazeWorld, Point, Region, Wall};
use crate::{Error, Result};

pub const DEFAULT_HORIZON: usize = 100;

const ZIGZAG: &str = include_str!("../../layouts/zigzag.maze");
const SPIRAL: &str = include_str!("../../layouts/spiral.maze");
const DOUBLE_SIDED: &str = include_str!("../../layouts/double_sided.maze");

/// Builds one of the shipped layouts. Layouts are fixed data: the same kind
/// always yields the same world.
pub fn make_maze(kind: MazeKind) -> Result<MazeWorld> {
    let text = match kind {
        MazeKind::Zigzag => ZIGZAG,
        MazeKind::Spiral => SPIRAL,
        MazeKind::DoubleSided => DOUBLE_SIDED,
    };
    parse_layout(kind.name(), text)
}

/// Parses a layout from its text form. `name` labels errors and the world.
pub fn parse_layout(name: &str, text: &str) -> Result<MazeWorld> {
    let err = |line: usize, reason: String| Error::Parse {
        context: format!("{name}:{line}"),
        reason,
    };
    let mut bounds = None;
    let mut walls = Vec::new();
    let mut start = None;
    let mut goal = None;
    let mut hidden = Vec::new();
    let mut horizon = DEFAULT_HORIZON;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let keyword = parts.next().unwrap();
        let nums: Vec<f64> = parts
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| err(line_no, format!("`{t}` is not a number")))
            })
            .collect::<Result<_>>()?;
        let want = |n: usize| -> Result<()> {
            if nums.len() != n {
                Err(err(
                    line_no,
                    format!("`{keyword}` takes {n} numbers, got {}", nums.len()),
                ))
            } else {
                Ok(())
            }
        };
        match keyword {
            "bounds" => {
                want(4)?;
                bounds = Some(Bounds {
                    min: Point::new(nums[0], nums[1]),
                    max: Point::new(nums[2], nums[3]),
                });
            }
            "wall" => {
                want(4)?;
                walls.push(Wall::new(
                    Point::new(nums[0], nums[1]),
                    Point::new(nums[2], nums[3]),
                )?);
            }
            "start" => {
                want(2)?;
                start = Some(Point::new(nums[0], nums[1]));
            }
            "goal" => {
                want(3)?;
                goal = Some(Region {
                    center: Point::new(nums[0], nums[1]),
                    radius: nums[2],
                });
            }
            "hidden" => {
                want(3)?;
                hidden.push(Region {
                    center: Point::new(nums[0], nums[1]),
                    radius: nums[2],
                });
            }
            "horizon" => {
                want(1)?;
                if nums[0] < 1.0 || nums[0].fract() != 0.0 {
                    return Err(err(line_no, "horizon must be a positive integer".into()));
                }
                horizon = nums[0] as usize;
            }
            other => {
                return Err(err(line_no, format!("unknown directive `{other}`")));
            }
        }
    }

    let missing = |what: &str| Error::Parse {
        context: name.to_string(),
        reason: format!("missing `{what}` directive"),
    };
    MazeWorld::new(
        name.to_string(),
        bounds.ok_or_else(|| missing("bounds"))?,
        walls,
        start.ok_or_else(|| missing("start"))?,
        goal.ok_or_else(|| missing("goal"))?,
        hidden,
        horizon,
    )
}

/// Reads a layout file from disk.
pub fn load_layout(path: &std::path::Path) -> Result<MazeWorld> {
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    parse_layout(&name, &text)
}

/// Serializes a world back to layout text. `parse_layout` of the output
/// reconstructs an identical world.
pub fn layout_to_string(world: &MazeWorld) -> String {
    let mut out = String::new();
    let b = world.bounds();
    out.push_str(&format!(
        "bounds {} {} {} {}\n",
        b.min.x, b.min.y, b.max.x, b.max.y
    ));
    for w in world.walls() {
        out.push_str(&format!("wall {} {} {} {}\n", w.a.x, w.a.y, w.b.x, w.b.y));
    }
    let s = world.start();
    out.push_str(&format!("start {} {}\n", s.x, s.y));
    let g = world.goal();
    out.push_str(&format!("goal {} {} {}\n", g.center.x, g.center.y, g.radius));
    for h in world.hidden_regions() {
        out.push_str(&format!(
            "hidden {} {} {}\n",
            h.center.x, h.center.y, h.radius
        ));
    }
    out.push_str(&format!("horizon {}\n", world.horizon()));
    out
}


#[cfg(test)]
mod probe {
    use super::*;
    use crate::maze::maze_distance;

    #[test]
    #[ignore]
    fn print_layout_stats() {
        for kind in [MazeKind::Zigzag, MazeKind::Spiral, MazeKind::DoubleSided] {
            let w = make_maze(kind).unwrap();
            let d = maze_distance(&w, w.start(), w.goal().center).unwrap();
            let e = w.start().dist(&w.goal().center);
            println!("{}: maze {d:.2} euclid {e:.2} ratio {:.2} horizon {}", w.name(), d / e, w.horizon());
            for h in w.hidden_regions() {
                let dh = maze_distance(&w, w.start(), h.center).unwrap();
                println!("  hidden at ({}, {}): maze {dh:.2}", h.center.x, h.center.y);
            }
        }
    }
}
