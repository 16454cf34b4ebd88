//! In-memory snapshots and the `mlp-v1` checkpoint file format.
//!
//! File layout: one ASCII header line
//!
//! ```text
//! mlp-v1 <input_dim> <hidden_sizes comma-separated, or "-" if none> <seed>
//! ```
//!
//! followed by every parameter as a little-endian `f64` in flat order
//! (per layer: weights row-major, then biases). Round trips are bit-exact.

use super::{MlpArchitecture, MlpModel};
use crate::{Error, Result};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

/// A frozen copy of a model's full state.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSnapshot(MlpModel);

pub fn snapshot(model: &MlpModel) -> ModelSnapshot {
    ModelSnapshot(model.clone())
}

pub fn restore(snapshot: &ModelSnapshot) -> MlpModel {
    snapshot.0.clone()
}

pub fn write_checkpoint(model: &MlpModel, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    let hidden = if model.architecture().hidden_sizes().is_empty() {
        "-".to_string()
    } else {
        model
            .architecture()
            .hidden_sizes()
            .iter()
            .map(|h| h.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    writeln!(
        w,
        "mlp-v1 {} {} {}",
        model.architecture().input_dim(),
        hidden,
        model.rng_seed()
    )?;
    for p in model.params() {
        w.write_all(&p.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<MlpModel> {
    let file = std::fs::File::open(path)?;
    let mut r = BufReader::new(file);
    let mut header = String::new();
    r.read_line(&mut header)?;
    let parse_err = |reason: &str| Error::Parse {
        context: path.display().to_string(),
        reason: reason.to_string(),
    };

    let fields: Vec<&str> = header.trim_end().split(' ').collect();
    if fields.len() != 4 || fields[0] != "mlp-v1" {
        return Err(parse_err("expected header `mlp-v1 <input_dim> <hidden> <seed>`"));
    }
    let input_dim: usize = fields[1]
        .parse()
        .map_err(|_| parse_err("input_dim is not an integer"))?;
    let hidden: Vec<usize> = if fields[2] == "-" {
        Vec::new()
    } else {
        fields[2]
            .split(',')
            .map(|h| h.parse().map_err(|_| parse_err("hidden size is not an integer")))
            .collect::<Result<_>>()?
    };
    let seed: u64 = fields[3]
        .parse()
        .map_err(|_| parse_err("seed is not an integer"))?;

    let arch = MlpArchitecture::new(input_dim, hidden)?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != arch.param_count() * 8 {
        return Err(parse_err(&format!(
            "expected {} parameter bytes, found {}",
            arch.param_count() * 8,
            bytes.len()
        )));
    }
    let params: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(MlpModel::from_parts(arch, params, seed))
}
