//! Functional datasets: a shared evaluation grid, one discretized trajectory
//! per sample, and a binary label per sample.
//!
//! Datasets are stored column-major (`n × N`), so the marginal sample at a
//! single grid point is one contiguous slice. Every per-point statistic in the
//! crate reads data that way.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::selectors::Method;

/// Binary class label, 0 or 1.
pub type Label = u8;

/// Strictly increasing evaluation points inside `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Grid(Vec<f64>);

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        if let Some(i) = points
            .iter()
            .position(|t| !t.is_finite() || !(0.0..=1.0).contains(t))
        {
            return Err(Error::InvalidGrid(format!(
                "point {} ({}) outside [0, 1]",
                i, points[i]
            )));
        }
        if let Some(i) = points.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(Grid(points))
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the grid point closest to `t` (smaller index on ties).
    pub fn nearest_index(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if (p - t).abs() < (self.0[best] - t).abs() {
                best = i;
            }
        }
        best
    }
}

impl TryFrom<Vec<f64>> for Grid {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Grid::new(v)
    }
}

impl From<Grid> for Vec<f64> {
    fn from(g: Grid) -> Self {
        g.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalDataset {
    grid: Grid,
    trajectories: DMatrix<f64>,
    labels: Vec<Label>,
}

impl FunctionalDataset {
    /// `trajectories` must be `n × grid.len()`; row `i` belongs to `labels[i]`.
    pub fn new(grid: Grid, trajectories: DMatrix<f64>, labels: Vec<Label>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidDataset("dataset has no samples".into()));
        }
        if trajectories.nrows() != labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} trajectories but {} labels",
                trajectories.nrows(),
                labels.len()
            )));
        }
        if trajectories.ncols() != grid.len() {
            return Err(Error::InvalidDataset(format!(
                "trajectory length {} does not match grid length {}",
                trajectories.ncols(),
                grid.len()
            )));
        }
        if let Some(i) = labels.iter().position(|&y| y > 1) {
            return Err(Error::InvalidDataset(format!(
                "label {} at row {} is not 0 or 1",
                labels[i], i
            )));
        }
        if trajectories.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite trajectory value".into()));
        }
        Ok(FunctionalDataset {
            grid,
            trajectories,
            labels,
        })
    }

    pub fn from_rows(grid: Grid, rows: &[Vec<f64>], labels: Vec<Label>) -> Result<Self> {
        let n_points = grid.len();
        if let Some(i) = rows.iter().position(|r| r.len() != n_points) {
            return Err(Error::InvalidDataset(format!(
                "row {} has {} values, grid has {}",
                i,
                rows[i].len(),
                n_points
            )));
        }
        let m = DMatrix::from_fn(rows.len(), n_points, |i, j| rows[i][j]);
        Self::new(grid, m, labels)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn trajectories(&self) -> &DMatrix<f64> {
        &self.trajectories
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_points(&self) -> usize {
        self.grid.len()
    }

    /// Values of every trajectory at grid index `j`.
    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n_samples();
        &self.trajectories.as_slice()[j * n..(j + 1) * n]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.trajectories.row(i).iter().copied().collect()
    }

    /// `(n0, n1)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let n1 = self.labels.iter().filter(|&&y| y == 1).count();
        (self.labels.len() - n1, n1)
    }

    /// New dataset made of the given rows, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        let n_points = self.n_points();
        let m = DMatrix::from_fn(rows.len(), n_points, |i, j| self.trajectories[(rows[i], j)]);
        let labels = rows.iter().map(|&i| self.labels[i]).collect();
        Self::new(self.grid.clone(), m, labels)
    }

    pub fn split_by_class(&self) -> ClassSplit<'_> {
        let mut class0 = Vec::new();
        let mut class1 = Vec::new();
        for (i, &y) in self.labels.iter().enumerate() {
            if y == 1 {
                class1.push(i);
            } else {
                class0.push(i);
            }
        }
        ClassSplit {
            dataset: self,
            class0,
            class1,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_dataset_csv(&text, path)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("t");
        for &t in self.grid.points() {
            out.push(',');
            out.push_str(&format_f64(t));
        }
        out.push_str(",label\n");
        for i in 0..self.n_samples() {
            for j in 0..self.n_points() {
                out.push_str(&format_f64(self.trajectories[(i, j)]));
                out.push(',');
            }
            let _ = writeln!(out, "{}", self.labels[i]);
        }
        out
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_f64(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{:e}", x)
    } else {
        format!("{}", x)
    }
}

fn parse_dataset_csv(text: &str, path: &Path) -> Result<FunctionalDataset> {
    let parse_err = |row: usize, column: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        row,
        column,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();

    let header = match records.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => return Err(parse_err(0, 0, e.to_string())),
        None => return Err(parse_err(0, 0, "empty file".into())),
    };
    if header.len() < 4 {
        return Err(parse_err(
            0,
            header.len(),
            "header needs \"t\", at least two grid values and \"label\"".into(),
        ));
    }
    if header[0].trim() != "t" {
        return Err(parse_err(
            0,
            1,
            format!("expected \"t\", found {:?}", &header[0]),
        ));
    }
    let last = header.len() - 1;
    if header[last].trim() != "label" {
        return Err(parse_err(
            0,
            last + 1,
            format!("expected \"label\", found {:?}", &header[last]),
        ));
    }
    let mut points = Vec::with_capacity(last - 1);
    for c in 1..last {
        let t: f64 = header[c]
            .trim()
            .parse()
            .map_err(|_| parse_err(0, c + 1, format!("non-numeric grid value {:?}", &header[c])))?;
        if !(0.0..=1.0).contains(&t) {
            return Err(parse_err(
                0,
                c + 1,
                format!("grid value {} outside [0, 1]", t),
            ));
        }
        if let Some(&prev) = points.last() {
            if t <= prev {
                return Err(parse_err(
                    0,
                    c + 1,
                    "grid is not strictly increasing".into(),
                ));
            }
        }
        points.push(t);
    }
    let grid = Grid::new(points)?;
    let n_points = grid.len();

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (r, rec) in records.enumerate() {
        let row = r + 1;
        let rec = rec.map_err(|e| parse_err(row, 0, e.to_string()))?;
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        if rec.len() != n_points + 1 {
            return Err(Error::RowLength {
                path: path.to_path_buf(),
                row,
                found: rec.len(),
                expected: n_points + 1,
            });
        }
        for c in 0..n_points {
            let cell = rec[c].trim();
            if cell.is_empty() {
                return Err(parse_err(row, c + 1, "missing value".into()));
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(row, c + 1, format!("non-numeric value {:?}", cell)))?;
            if !v.is_finite() {
                return Err(parse_err(
                    row,
                    c + 1,
                    format!("non-finite value {:?}", cell),
                ));
            }
            values.push(v);
        }
        let label = match rec[n_points].trim() {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(parse_err(
                    row,
                    n_points + 1,
                    format!("label {:?} is not 0 or 1", other),
                ))
            }
        };
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(parse_err(1, 0, "no data rows".into()));
    }
    let m = DMatrix::from_row_slice(labels.len(), n_points, &values);
    FunctionalDataset::new(grid, m, labels)
}

/// Row indices of each class. Either class may be empty.
#[derive(Debug, Clone)]
pub struct ClassSplit<'a> {
    pub dataset: &'a FunctionalDataset,
    pub class0: Vec<usize>,
    pub class1: Vec<usize>,
}

impl ClassSplit<'_> {
    /// `n1 / (n0 + n1)`.
    pub fn p_hat(&self) -> f64 {
        self.class1.len() as f64 / (self.class0.len() + self.class1.len()) as f64
    }

    pub fn class(&self, label: Label) -> &[usize] {
        if label == 1 {
            &self.class1
        } else {
            &self.class0
        }
    }
}

/// Grid indices picked by a selector, most relevant first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub indices: Vec<usize>,
    pub scores: Vec<f64>,
    pub method: Method,
    pub hyperparams: BTreeMap<String, f64>,
}

impl SelectionResult {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Keeps the first `d` entries.
    pub fn truncated(&self, d: usize) -> Self {
        let d = d.min(self.indices.len());
        SelectionResult {
            indices: self.indices[..d].to_vec(),
            scores: self.scores[..d].to_vec(),
            method: self.method,
            hyperparams: self.hyperparams.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        fs::write(f.path(), contents).unwrap();
        f
    }

    #[test]
    fn loads_minimal_file() {
        let f = write_tmp("t,0.25,0.5,0.75,label\n1,2,3,0\n4,5,6,1\n");
        let ds = FunctionalDataset::load(f.path()).unwrap();
        assert_eq!(ds.n_samples(), 2);
        assert_eq!(ds.n_points(), 3);
        assert_eq!(ds.labels(), &[0, 1]);
        assert_eq!(ds.grid().points(), &[0.25, 0.5, 0.75]);
        assert_eq!(ds.row(1), vec![4.0, 5.0, 6.0]);
        assert_eq!(ds.column(2), &[3.0, 6.0]);
    }

    #[test]
    fn short_row_names_row_one() {
        let f = write_tmp("t,0.25,0.5,0.75,label\n1,2,0\n");
        match FunctionalDataset::load(f.path()) {
            Err(Error::RowLength { row, found, .. }) => {
                assert_eq!(row, 1);
                assert_eq!(found, 3);
            }
            other => panic!("unexpected {:?}", other),
        }
    }

    #[test]
    fn rejects_bad_labels_cells_and_headers() {
        let bad_label = write_tmp("t,0.25,0.5,label\n1,2,2\n");
        assert!(matches!(
            FunctionalDataset::load(bad_label.path()),
            Err(Error::Parse {
                row: 1,
                column: 3,
                ..
            })
        ));
        let non_numeric = write_tmp("t,0.25,0.5,label\n1,x,0\n");
        assert!(matches!(
            FunctionalDataset::load(non_numeric.path()),
            Err(Error::Parse {
                row: 1,
                column: 2,
                ..
            })
        ));
        let missing = write_tmp("t,0.25,0.5,label\n1,,0\n");
        assert!(matches!(
            FunctionalDataset::load(missing.path()),
            Err(Error::Parse {
                row: 1,
                column: 2,
                ..
            })
        ));
        let decreasing = write_tmp("t,0.5,0.25,label\n1,2,0\n");
        assert!(matches!(
            FunctionalDataset::load(decreasing.path()),
            Err(Error::Parse {
                row: 0,
                column: 3,
                ..
            })
        ));
        let no_marker = write_tmp("x,0.25,0.5,label\n1,2,0\n");
        assert!(matches!(
            FunctionalDataset::load(no_marker.path()),
            Err(Error::Parse {
                row: 0,
                column: 1,
                ..
            })
        ));
    }

    #[test]
    fn sixth_over_105_survives_roundtrip() {
        let points: Vec<f64> = (1..=100).map(|i| (5 + i) as f64 / 105.0).collect();
        let grid = Grid::new(points.clone()).unwrap();
        let rows = vec![vec![0.1; 100]];
        let ds = FunctionalDataset::from_rows(grid, &rows, vec![1]).unwrap();
        let text = ds.to_csv_string();
        let first: f64 = text.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(first, 6.0 / 105.0);
        assert_eq!(first.to_bits(), (6.0f64 / 105.0).to_bits());
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let grid = Grid::new(vec![0.0, 1.0]).unwrap();
        assert!(FunctionalDataset::from_rows(grid, &[], vec![]).is_err());
    }

    #[test]
    fn split_counts() {
        let grid = Grid::new(vec![0.0, 1.0]).unwrap();
        let rows = vec![vec![0.0, 0.0]; 4];
        let ds = FunctionalDataset::from_rows(grid.clone(), &rows, vec![0, 1, 1, 1]).unwrap();
        assert_eq!(ds.split_by_class().p_hat(), 0.75);

        let ds = FunctionalDataset::from_rows(grid.clone(), &rows, vec![0; 4]).unwrap();
        let split = ds.split_by_class();
        assert_eq!(split.p_hat(), 0.0);
        assert!(split.class1.is_empty());

        let ds = FunctionalDataset::from_rows(grid, &rows, vec![0, 0, 1, 1]).unwrap();
        let split = ds.split_by_class();
        assert_eq!(split.p_hat(), 0.5);
        assert_eq!(split.class0, vec![0, 1]);
        assert_eq!(split.class1, vec![2, 3]);
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(vec![0.5]).is_err());
        assert!(Grid::new(vec![0.5, 0.5]).is_err());
        assert!(Grid::new(vec![-0.1, 0.5]).is_err());
        assert!(Grid::new(vec![0.5, 1.1]).is_err());
        assert!(Grid::new(vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn format_extremes_roundtrip() {
        for x in [0.0, -0.0, 1e-300, 3.5e20, 1.0 / 3.0, -2.5e-7, 123456.789] {
            let back: f64 = format_f64(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{}", x);
        }
    }
}
