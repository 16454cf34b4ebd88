//! Tabular soft Q-learning over a discretized position grid.
//!
//! States are grid cell indices, actions the eight compass directions. The
//! state value is the temperature-scaled log-mean-exp of the action values,
//!
//! ```text
//! V(s) = τ · ln( (1/|A|) Σ_a exp(Q(s,a)/τ) )
//! ```
//!
//! which recovers max_a Q(s,a) as τ → 0 and leaves an all-zero table an
//! exact fixed point under zero reward. The same temperature drives the
//! Boltzmann behavior policy, so one knob controls both exploration and the
//! softness of the backup.
//!
//! The table stands in for a smooth function approximator, and a raw table
//! is pathologically jagged where that stand-in matters most: an action
//! tried once holds a real value while its untried neighbor still reads 0,
//! an arbitrary cliff or summit that a network critic would have smoothed
//! over. Each TD write therefore refreshes the state's untried slots with
//! the mean of its tried ones. The update rule itself never changes, zero
//! stays a fixed point, and the Boltzmann policy keeps a workable chance of
//! trying novel actions no matter how large the learned values grow.
//!
//! Tables round-trip through a `qtable-v1` file: one ASCII header line
//! (`qtable-v1 <resolution> <n_actions>`) followed by every action value as
//! a little-endian `f64`, states in row-major cell order, then one byte per
//! slot marking whether that action has been tried.

use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

/// The eight compass directions as unit action multipliers; the environment
/// scales them to its own step length.
pub const ACTIONS: [[f64; 2]; 8] = [
    [1.0, 0.0],
    [1.0, 1.0],
    [0.0, 1.0],
    [-1.0, 1.0],
    [-1.0, 0.0],
    [-1.0, -1.0],
    [0.0, -1.0],
    [1.0, -1.0],
];

/// One grid-indexed experience tuple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QTransition {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
    /// When set, the update bootstraps from zero instead of V(next_state).
    pub terminal: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    /// Cells per side of the square state grid.
    pub resolution: usize,
    /// Temperature τ shared by the soft backup and the Boltzmann policy.
    pub temperature: f64,
    pub learning_rate: f64,
    pub discount: f64,
    /// Passes over each epoch's transitions (applied newest-first).
    pub sweeps: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            resolution: 40,
            temperature: 0.2,
            learning_rate: 0.5,
            discount: 0.99,
            sweeps: 4,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, name: &'static str, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidValue {
                    name,
                    reason: reason.to_string(),
                })
            }
        };
        check(self.resolution > 0, "resolution", "must be positive")?;
        check(
            self.temperature.is_finite() && self.temperature > 0.0,
            "temperature",
            "must be a positive finite number",
        )?;
        check(
            self.learning_rate.is_finite() && self.learning_rate > 0.0,
            "learning_rate",
            "must be a positive finite number",
        )?;
        check(
            (0.0..1.0).contains(&self.discount),
            "discount",
            "must lie in [0, 1)",
        )?;
        check(self.sweeps > 0, "sweeps", "must be positive")?;
        Ok(())
    }
}

/// An action-value table with a soft (log-mean-exp) state value.
#[derive(Debug, Clone)]
pub struct SoftQBackend {
    resolution: usize,
    n_actions: usize,
    temperature: f64,
    learning_rate: f64,
    discount: f64,
    q: Vec<f64>,
    tried: Vec<bool>,
}

impl SoftQBackend {
    pub fn new(cfg: &BackendConfig) -> Result<Self> {
        cfg.validate()?;
        let slots = cfg.resolution * cfg.resolution * ACTIONS.len();
        Ok(Self {
            resolution: cfg.resolution,
            n_actions: ACTIONS.len(),
            temperature: cfg.temperature,
            learning_rate: cfg.learning_rate,
            discount: cfg.discount,
            q: vec![0.0; slots],
            tried: vec![false; slots],
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn n_states(&self) -> usize {
        self.resolution * self.resolution
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn row(&self, state: usize) -> &[f64] {
        &self.q[state * self.n_actions..(state + 1) * self.n_actions]
    }

    pub fn q_value(&self, state: usize, action: usize) -> f64 {
        self.q[state * self.n_actions + action]
    }

    /// Soft state value: τ·ln((1/|A|)·Σ exp(Q/τ)), computed around the row
    /// max so uniform rows come back exactly and nothing overflows.
    pub fn soft_value(&self, state: usize) -> f64 {
        let row = self.row(state);
        let m = row.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let sum: f64 = row.iter().map(|&q| ((q - m) / self.temperature).exp()).sum();
        m + self.temperature * (sum.ln() - (self.n_actions as f64).ln())
    }

    /// One TD step toward `reward + γ·V(next)`. Rejects non-finite rewards
    /// so a bad classifier output cannot poison the whole table.
    pub fn update(&mut self, t: &QTransition) -> Result<()> {
        if !t.reward.is_finite() {
            return Err(Error::NonFinite("reward"));
        }
        let v_next = if t.terminal {
            0.0
        } else {
            self.soft_value(t.next_state)
        };
        let target = t.reward + self.discount * v_next;
        let idx = t.state * self.n_actions + t.action;
        self.q[idx] += self.learning_rate * (target - self.q[idx]);
        self.tried[idx] = true;
        self.generalize(t.state);
        Ok(())
    }

    /// Copies the mean of a state's tried action values into its untried
    /// slots, so novel actions read as locally typical instead of as an
    /// arbitrary value-0 outlier.
    fn generalize(&mut self, state: usize) {
        let base = state * self.n_actions;
        let mut sum = 0.0;
        let mut n = 0usize;
        for a in 0..self.n_actions {
            if self.tried[base + a] {
                sum += self.q[base + a];
                n += 1;
            }
        }
        if n == 0 || n == self.n_actions {
            return;
        }
        let mean = sum / n as f64;
        for a in 0..self.n_actions {
            if !self.tried[base + a] {
                self.q[base + a] = mean;
            }
        }
    }

    /// Replays `transitions` newest-first, `sweeps` times. The reverse order
    /// lets a reward at the end of a trajectory reach its start in one pass.
    pub fn train_on(&mut self, transitions: &[QTransition], sweeps: usize) -> Result<()> {
        for _ in 0..sweeps {
            for t in transitions.iter().rev() {
                self.update(t)?;
            }
        }
        Ok(())
    }

    /// Boltzmann draw at the backup temperature.
    pub fn sample_action<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> usize {
        let row = self.row(state);
        let m = row.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let weights: Vec<f64> = row
            .iter()
            .map(|&q| ((q - m) / self.temperature).exp())
            .collect();
        let total: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        for (i, w) in weights.iter().enumerate() {
            u -= w;
            if u <= 0.0 {
                return i;
            }
        }
        self.n_actions - 1
    }

    /// Highest-valued action, ties broken uniformly at random — an untrained
    /// table therefore behaves as a random walk rather than action 0.
    pub fn greedy_action<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> usize {
        let row = self.row(state);
        let m = row.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let best: Vec<usize> = row
            .iter()
            .enumerate()
            .filter(|&(_, &q)| q == m)
            .map(|(i, _)| i)
            .collect();
        best[rng.random_range(0..best.len())]
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = BufWriter::new(file);
        writeln!(w, "qtable-v1 {} {}", self.resolution, self.n_actions)?;
        for q in &self.q {
            w.write_all(&q.to_le_bytes())?;
        }
        for &t in &self.tried {
            w.write_all(&[u8::from(t)])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a table saved by [`save`](Self::save); learning parameters come
    /// from `cfg`, whose resolution must match the file's.
    pub fn load(path: &Path, cfg: &BackendConfig) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut r = BufReader::new(file);
        let mut header = String::new();
        r.read_line(&mut header)?;
        let parse_err = |reason: &str| Error::Parse {
            context: path.display().to_string(),
            reason: reason.to_string(),
        };

        let fields: Vec<&str> = header.trim_end().split(' ').collect();
        if fields.len() != 3 || fields[0] != "qtable-v1" {
            return Err(parse_err("expected header `qtable-v1 <resolution> <n_actions>`"));
        }
        let resolution: usize = fields[1]
            .parse()
            .map_err(|_| parse_err("resolution is not an integer"))?;
        let n_actions: usize = fields[2]
            .parse()
            .map_err(|_| parse_err("n_actions is not an integer"))?;
        if resolution != cfg.resolution {
            return Err(parse_err(&format!(
                "table resolution {} does not match configured {}",
                resolution, cfg.resolution
            )));
        }
        if n_actions != ACTIONS.len() {
            return Err(parse_err(&format!(
                "expected {} actions, file has {}",
                ACTIONS.len(),
                n_actions
            )));
        }

        let mut backend = Self::new(cfg)?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let q_bytes = backend.q.len() * 8;
        if bytes.len() != q_bytes + backend.tried.len() {
            return Err(parse_err(&format!(
                "expected {} body bytes, found {}",
                q_bytes + backend.tried.len(),
                bytes.len()
            )));
        }
        backend.q = bytes[..q_bytes]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        backend.tried = bytes[q_bytes..].iter().map(|&b| b != 0).collect();
        Ok(backend)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn tiny_cfg() -> BackendConfig {
        BackendConfig {
            resolution: 5,
            temperature: 0.1,
            learning_rate: 0.5,
            discount: 0.9,
            sweeps: 1,
        }
    }

    #[test]
    fn all_directions_are_distinct_unit_box_moves() {
        let mut seen = std::collections::HashSet::new();
        for a in ACTIONS {
            assert!(a[0].abs() <= 1.0 && a[1].abs() <= 1.0);
            assert!(a != [0.0, 0.0]);
            assert!(seen.insert((a[0].to_bits(), a[1].to_bits())));
        }
        assert_eq!(seen.len(), 8);
    }

    #[test]
    fn zero_table_under_zero_reward_is_a_bitwise_fixed_point() {
        let mut b = SoftQBackend::new(&tiny_cfg()).unwrap();
        assert_eq!(b.soft_value(0).to_bits(), 0.0_f64.to_bits());
        for state in 0..b.n_states() {
            for action in 0..b.n_actions() {
                b.update(&QTransition {
                    state,
                    action,
                    reward: 0.0,
                    next_state: (state + 1) % b.n_states(),
                    terminal: false,
                })
                .unwrap();
            }
        }
        assert!(b.q.iter().all(|&q| q.to_bits() == 0.0_f64.to_bits()));
    }

    #[test]
    fn soft_value_approaches_the_max_as_temperature_vanishes() {
        let mut cfg = tiny_cfg();
        cfg.temperature = 1e-7;
        let mut b = SoftQBackend::new(&cfg).unwrap();
        let row = [0.3, -1.0, 0.9, 0.2, 0.85, -0.4, 0.0, 0.1];
        b.q[..8].copy_from_slice(&row);
        // The residual gap is the entropy offset τ·ln 8, linear in τ.
        assert!((b.soft_value(0) - 0.9).abs() < 1e-6);

        cfg.temperature = 5.0;
        let mut warm = SoftQBackend::new(&cfg).unwrap();
        warm.q[..8].copy_from_slice(&row);
        // Higher temperature pulls the value below the max, but the
        // mean-normalization keeps it above the row mean.
        let mean = row.iter().sum::<f64>() / 8.0;
        assert!(warm.soft_value(0) < 0.9);
        assert!(warm.soft_value(0) > mean);
    }

    #[test]
    fn uniform_row_value_equals_the_common_entry_exactly() {
        let mut b = SoftQBackend::new(&tiny_cfg()).unwrap();
        for q in &mut b.q[8..16] {
            *q = -2.625;
        }
        assert_eq!(b.soft_value(1).to_bits(), (-2.625_f64).to_bits());
    }

    #[test]
    fn non_finite_rewards_are_rejected() {
        let mut b = SoftQBackend::new(&tiny_cfg()).unwrap();
        for bad in [f64::NAN, f64::INFINITY, f64::NEG_INFINITY] {
            let err = b.update(&QTransition {
                state: 0,
                action: 0,
                reward: bad,
                next_state: 1,
                terminal: false,
            });
            assert!(err.is_err());
        }
        assert!(b.q.iter().all(|&q| q == 0.0));
    }

    /// 5-state corridor: moving right from state s lands in s+1, state 4 is
    /// terminal with reward 1 on entry, every other transition pays 0. With
    /// a near-zero temperature the soft backup collapses to max, so the
    /// converged table must match the value-iteration solution
    /// Q(s, right) = γ^(4-s-1), and greedy play walks straight to the goal.
    #[test]
    fn corridor_table_converges_to_the_value_iteration_solution() {
        let cfg = BackendConfig {
            resolution: 5,
            temperature: 1e-4,
            learning_rate: 1.0,
            discount: 0.9,
            sweeps: 1,
        };
        let mut b = SoftQBackend::new(&cfg).unwrap();
        // Only states 0..5 of the 25-cell grid are used; action 0 is "right",
        // all other actions self-loop with zero reward.
        let mut transitions = Vec::new();
        for s in 0..4usize {
            transitions.push(QTransition {
                state: s,
                action: 0,
                reward: if s == 3 { 1.0 } else { 0.0 },
                next_state: s + 1,
                terminal: s == 3,
            });
            for a in 1..8 {
                transitions.push(QTransition {
                    state: s,
                    action: a,
                    reward: 0.0,
                    next_state: s,
                    terminal: false,
                });
            }
        }
        b.train_on(&transitions, 50).unwrap();

        for s in 0..4usize {
            let expect = cfg.discount.powi(3 - s as i32);
            assert!(
                (b.q_value(s, 0) - expect).abs() < 1e-3,
                "Q({s}, right) = {} want {expect}",
                b.q_value(s, 0)
            );
        }
        let mut r = rng::stream(7, "corridor");
        let mut s = 0usize;
        for _ in 0..4 {
            let a = b.greedy_action(s, &mut r);
            assert_eq!(a, 0, "greedy policy must move right from state {s}");
            s += 1;
        }
    }

    #[test]
    fn reverse_sweeps_propagate_a_terminal_reward_in_one_pass() {
        let cfg = BackendConfig {
            resolution: 5,
            temperature: 1e-4,
            learning_rate: 1.0,
            discount: 0.9,
            sweeps: 1,
        };
        let mut fwd = SoftQBackend::new(&cfg).unwrap();
        let mut rev = SoftQBackend::new(&cfg).unwrap();
        let chain: Vec<QTransition> = (0..4)
            .map(|s| QTransition {
                state: s,
                action: 0,
                reward: if s == 3 { 1.0 } else { 0.0 },
                next_state: s + 1,
                terminal: s == 3,
            })
            .collect();
        for t in &chain {
            fwd.update(t).unwrap();
        }
        rev.train_on(&chain, 1).unwrap();
        // Forward order leaves the start untouched; newest-first reaches it.
        assert_eq!(fwd.q_value(0, 0), 0.0);
        assert!(rev.q_value(0, 0) > 0.5);
    }

    #[test]
    fn untried_actions_track_the_mean_of_tried_ones() {
        let mut b = SoftQBackend::new(&tiny_cfg()).unwrap();
        b.update(&QTransition {
            state: 0,
            action: 0,
            reward: 1.0,
            next_state: 1,
            terminal: true,
        })
        .unwrap();
        // lr 0.5 toward target 1.0 leaves Q(0,0) = 0.5; the seven untried
        // slots read the same value instead of a cliff back to 0.
        assert_eq!(b.q_value(0, 0), 0.5);
        for a in 1..8 {
            assert_eq!(b.q_value(0, a), 0.5);
        }

        b.update(&QTransition {
            state: 0,
            action: 1,
            reward: 0.0,
            next_state: 1,
            terminal: true,
        })
        .unwrap();
        // Action 1 moves from its inherited 0.5 halfway to 0; the rest now
        // read the mean of the two tried values.
        assert_eq!(b.q_value(0, 1), 0.25);
        for a in 2..8 {
            assert_eq!(b.q_value(0, a), 0.375);
        }
        // Other states are untouched.
        assert!(b.q[8..].iter().all(|&q| q == 0.0));
    }

    #[test]
    fn untrained_greedy_policy_is_a_uniform_random_walk() {
        let b = SoftQBackend::new(&tiny_cfg()).unwrap();
        let mut r = rng::stream(3, "tie-break");
        let mut counts = [0usize; 8];
        for _ in 0..8000 {
            counts[b.greedy_action(0, &mut r)] += 1;
        }
        for c in counts {
            assert!((700..1300).contains(&c), "skewed tie-break: {counts:?}");
        }
    }

    #[test]
    fn boltzmann_sampling_prefers_higher_valued_actions() {
        let mut b = SoftQBackend::new(&tiny_cfg()).unwrap();
        b.q[0] = 0.4; // action 0 at state 0; the rest stay 0.
        let mut r = rng::stream(11, "boltzmann");
        let hits = (0..4000)
            .filter(|_| b.sample_action(0, &mut r) == 0)
            .count();
        // exp(4) : 7 odds ≈ 0.886 — far above uniform, below certainty.
        assert!((3200..3900).contains(&hits), "hits = {hits}");
    }

    #[test]
    fn table_file_round_trip_is_bit_exact() {
        let cfg = tiny_cfg();
        let mut b = SoftQBackend::new(&cfg).unwrap();
        let mut r = rng::stream(5, "fill");
        for s in 0..b.n_states() {
            b.update(&QTransition {
                state: s,
                action: rand::Rng::random_range(&mut r, 0..8),
                reward: rand::Rng::random_range(&mut r, -2.0..2.0),
                next_state: (s + 1) % b.n_states(),
                terminal: false,
            })
            .unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.bin");
        b.save(&path).unwrap();
        let back = SoftQBackend::load(&path, &cfg).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&b.q), bits(&back.q));
        assert_eq!(b.tried, back.tried);
    }

    #[test]
    fn mismatched_or_corrupt_table_files_are_rejected() {
        let cfg = tiny_cfg();
        let b = SoftQBackend::new(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.bin");
        b.save(&path).unwrap();

        let mut other = cfg.clone();
        other.resolution = 7;
        assert!(SoftQBackend::load(&path, &other).is_err());

        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 1);
        std::fs::write(&path, &bytes).unwrap();
        assert!(SoftQBackend::load(&path, &cfg).is_err());

        std::fs::write(&path, b"qtable-v2 5 8\n").unwrap();
        assert!(SoftQBackend::load(&path, &cfg).is_err());
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let mut cfg = BackendConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.temperature = 0.0;
        assert!(cfg.validate().is_err());
        cfg = BackendConfig::default();
        cfg.discount = 1.0;
        assert!(cfg.validate().is_err());
        cfg = BackendConfig::default();
        cfg.resolution = 0;
        assert!(cfg.validate().is_err());
        cfg = BackendConfig::default();
        cfg.sweeps = 0;
        assert!(cfg.validate().is_err());
    }
}
