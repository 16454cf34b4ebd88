//! Labeled binary datasets and their CSV form.
//!
//! File format: header `x0,...,x{d-1},label`, then one row per point with
//! feature values and a 0/1 label. Floats are written in shortest
//! round-trip form, so write-then-read reproduces values exactly.

use crate::{Error, Result};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPoint {
    pub features: Vec<f64>,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    feature_dim: usize,
    points: Vec<LabeledPoint>,
}

impl LabeledDataset {
    pub fn new(feature_dim: usize) -> Result<Self> {
        if feature_dim == 0 {
            return Err(Error::InvalidValue {
                name: "feature_dim",
                reason: "must be >= 1".into(),
            });
        }
        Ok(Self {
            feature_dim,
            points: Vec::new(),
        })
    }

    pub fn from_points<I>(feature_dim: usize, points: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<f64>, u8)>,
    {
        let mut ds = Self::new(feature_dim)?;
        for (features, label) in points {
            ds.push(features, label)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, features: Vec<f64>, label: u8) -> Result<()> {
        if features.len() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                got: features.len(),
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset features"));
        }
        if label > 1 {
            return Err(Error::InvalidValue {
                name: "label",
                reason: format!("{label} is not 0 or 1"),
            });
        }
        self.points.push(LabeledPoint { features, label });
        Ok(())
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[LabeledPoint] {
        &self.points
    }

    pub fn features(&self, i: usize) -> &[f64] {
        &self.points[i].features
    }

    pub fn label(&self, i: usize) -> u8 {
        self.points[i].label
    }

    pub fn count_label(&self, label: u8) -> usize {
        self.points.iter().filter(|p| p.label == label).count()
    }

    pub fn has_both_labels(&self) -> bool {
        self.count_label(0) > 0 && self.count_label(1) > 0
    }

    /// Largest pairwise Euclidean distance; 0 for fewer than two points.
    pub fn diameter(&self) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..self.points.len() {
            for j in (i + 1)..self.points.len() {
                let d: f64 = self.points[i]
                    .features
                    .iter()
                    .zip(&self.points[j].features)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                best = best.max(d);
            }
        }
        best
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for d in 0..self.feature_dim {
            out.push_str(&format!("x{d},"));
        }
        out.push_str("label\n");
        for p in &self.points {
            for v in &p.features {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!("{}\n", p.label));
        }
        out
    }

    pub fn from_csv_str(name: &str, text: &str) -> Result<Self> {
        let err = |line: usize, reason: String| Error::Parse {
            context: format!("{name}:{line}"),
            reason,
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
        let cols: Vec<&str> = header.trim_end().split(',').collect();
        if cols.len() < 2 || cols[cols.len() - 1] != "label" {
            return Err(err(1, "header must be `x0,...,label`".into()));
        }
        let dim = cols.len() - 1;
        for (d, col) in cols[..dim].iter().enumerate() {
            if *col != format!("x{d}") {
                return Err(err(1, format!("expected column `x{d}`, found `{col}`")));
            }
        }
        let mut ds = Self::new(dim)?;
        for (i, line) in lines {
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != dim + 1 {
                return Err(err(i + 1, format!("expected {} fields", dim + 1)));
            }
            let features = fields[..dim]
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| err(i + 1, format!("`{f}` is not a number")))
                })
                .collect::<Result<Vec<f64>>>()?;
            let label: u8 = fields[dim]
                .parse()
                .map_err(|_| err(i + 1, format!("`{}` is not a 0/1 label", fields[dim])))?;
            ds.push(features, label)?;
        }
        Ok(ds)
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

/// The fixed 32-point, two-cluster 2D dataset shipped with the crate, used
/// as a common footing for classifier comparisons and benchmarks.
pub fn reference_dataset() -> LabeledDataset {
    LabeledDataset::from_csv_str(
        "reference32",
        include_str!("../../data/reference32.csv"),
    )
    .expect("embedded reference dataset parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> LabeledDataset {
        LabeledDataset::from_points(
            2,
            vec![
                (vec![0.5, -1.25], 1),
                (vec![-2.0, 3.75], 0),
                (vec![0.1, 0.30000000000000004], 1),
            ],
        )
        .unwrap()
    }

    #[test]
    fn rejects_malformed_points() {
        let mut ds = LabeledDataset::new(2).unwrap();
        assert!(ds.push(vec![1.0], 0).is_err());
        assert!(ds.push(vec![1.0, f64::NAN], 0).is_err());
        assert!(ds.push(vec![1.0, 2.0], 2).is_err());
        assert!(LabeledDataset::new(0).is_err());
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let ds = sample();
        let text = ds.to_csv_string();
        let back = LabeledDataset::from_csv_str("mem", &text).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn csv_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let ds = sample();
        ds.write_csv(&path).unwrap();
        assert_eq!(LabeledDataset::read_csv(&path).unwrap(), ds);
    }

    #[test]
    fn csv_rejects_bad_headers_and_rows() {
        assert!(LabeledDataset::from_csv_str("t", "").is_err());
        assert!(LabeledDataset::from_csv_str("t", "a,b,label\n").is_err());
        assert!(LabeledDataset::from_csv_str("t", "x0,x1\n").is_err());
        assert!(LabeledDataset::from_csv_str("t", "x0,label\n1.0,3\n").is_err());
        assert!(LabeledDataset::from_csv_str("t", "x0,label\noops,1\n").is_err());
        assert!(LabeledDataset::from_csv_str("t", "x0,label\n1.0\n").is_err());
    }

    #[test]
    fn label_counts_and_diameter() {
        let ds = sample();
        assert_eq!(ds.count_label(1), 2);
        assert_eq!(ds.count_label(0), 1);
        assert!(ds.has_both_labels());
        let expect = ((0.5f64 - -2.0).powi(2) + (-1.25f64 - 3.75).powi(2)).sqrt();
        assert!((ds.diameter() - expect).abs() < 1e-12);
    }

    #[test]
    fn reference_dataset_is_balanced_2d_and_fixed() {
        let ds = reference_dataset();
        assert_eq!(ds.feature_dim(), 2);
        assert_eq!(ds.len(), 32);
        assert_eq!(ds.count_label(0), 16);
        assert_eq!(ds.count_label(1), 16);
        assert_eq!(ds.features(0), &[2.1537, 1.3471]);
        assert_eq!(reference_dataset(), ds);
    }
}

