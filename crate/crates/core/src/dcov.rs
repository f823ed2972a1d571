//! Sample distance covariance and distance correlation between the process
//! marginals `X_t` and a binary label.
//!
//! Three estimators of `V²(X_t, Y)` are provided:
//!
//! * [`dcov_sq_u`]: class-conditional form built from the U-statistics
//!   `Î_00`, `Î_11` (within-class mean distances) and `Î_01` (between-class
//!   mean distance), weighted by `4 p̂² (1 - p̂)²`. Can be negative at finite n.
//! * [`dcov_sq_v`]: plug-in over all ordered pairs of
//!   `-2 (Y - p̂)(Y' - p̂) |X_t - X'_t|`.
//! * [`dcov_sq_dc`]: the general double-centered distance-matrix V-statistic,
//!   valid for any pair of multivariate samples. For a 0/1 response it agrees
//!   with [`dcov_sq_v`] exactly (up to rounding).
//!
//! All kernels are direct O(n²) loops with a fixed summation order.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{format_f64, FunctionalDataset, Grid, Label};
use crate::error::{Error, Result};

/// Denominators of the distance correlation below this are treated as zero.
pub const R2_DENOMINATOR_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Measure {
    /// Distance covariance.
    V2,
    /// Distance correlation.
    R2,
    /// Two-sample Student t score (used by the t-ranking selector).
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Estimator {
    U,
    V,
    DC,
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::V2 => "V2",
            Measure::R2 => "R2",
            Measure::T => "T",
        })
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "V2" => Ok(Measure::V2),
            "R2" => Ok(Measure::R2),
            "T" => Ok(Measure::T),
            _ => Err(Error::param(format!("unknown measure {:?}", s))),
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::U => "U",
            Estimator::V => "V",
            Estimator::DC => "DC",
        })
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "U" => Ok(Estimator::U),
            "V" => Ok(Estimator::V),
            "DC" => Ok(Estimator::DC),
            _ => Err(Error::param(format!("unknown estimator {:?}", s))),
        }
    }
}

/// `n` points in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    data: Vec<f64>,
    dim: usize,
}

impl PointSet {
    pub fn new(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("point dimension must be at least 1"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: data.len() % dim,
            });
        }
        Ok(PointSet { data, dim })
    }

    /// One-dimensional points.
    pub fn from_column(values: &[f64]) -> Self {
        PointSet {
            data: values.to_vec(),
            dim: 1,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(1, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: r.len(),
            });
        }
        Self::new(rows.concat(), dim)
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let data = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)])
            .collect();
        Self::new(data, m.ncols())
    }

    /// 0/1 label column.
    pub fn from_labels(labels: &[Label]) -> Self {
        PointSet {
            data: labels.iter().map(|&y| f64::from(y)).collect(),
            dim: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        PointSet {
            data: self.data.iter().map(|&v| f(v)).collect(),
            dim: self.dim,
        }
    }

    fn distance(&self, i: usize, j: usize) -> f64 {
        if self.dim == 1 {
            (self.data[i] - self.data[j]).abs()
        } else {
            self.row(i)
                .iter()
                .zip(self.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        }
    }
}

/// Process values at `d` grid points for `n` samples, with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalSample {
    pub values: PointSet,
    pub labels: Vec<Label>,
}

impl MarginalSample {
    pub fn new(values: PointSet, labels: Vec<Label>) -> Result<Self> {
        if values.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                found: values.len(),
            });
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(Error::param("labels must be 0 or 1"));
        }
        Ok(MarginalSample { values, labels })
    }

    /// Marginal of a dataset at a single grid index.
    pub fn at_point(dataset: &FunctionalDataset, j: usize) -> Self {
        MarginalSample {
            values: PointSet::from_column(dataset.column(j)),
            labels: dataset.labels().to_vec(),
        }
    }

    /// Marginal of a dataset at several grid indices.
    pub fn at_points(dataset: &FunctionalDataset, indices: &[usize]) -> Result<Self> {
        let n = dataset.n_samples();
        let mut data = Vec::with_capacity(n * indices.len());
        for i in 0..n {
            for &j in indices {
                data.push(dataset.trajectories()[(i, j)]);
            }
        }
        Self::new(
            PointSet::new(data, indices.len())?,
            dataset.labels().to_vec(),
        )
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// U-statistic estimator from the class-conditional mean distances.
pub fn dcov_sq_u(sample: &MarginalSample) -> Result<f64> {
    let x = &sample.values;
    let (class0, class1): (Vec<usize>, Vec<usize>) =
        (0..sample.len()).partition(|&i| sample.labels[i] == 0);
    for (label, members) in [(0u8, &class0), (1u8, &class1)] {
        if members.len() < 2 {
            return Err(Error::DegenerateClass {
                class: label,
                count: members.len(),
                required: 2,
            });
        }
    }

    let within = |members: &[usize]| {
        let mut s = 0.0;
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                s += x.distance(i, j);
            }
        }
        let m = members.len() as f64;
        2.0 * s / (m * (m - 1.0))
    };
    let i00 = within(&class0);
    let i11 = within(&class1);
    let mut s01 = 0.0;
    for &i in &class0 {
        for &j in &class1 {
            s01 += x.distance(i, j);
        }
    }
    let (n0, n1) = (class0.len() as f64, class1.len() as f64);
    let i01 = s01 / (n0 * n1);
    let p = n1 / (n0 + n1);
    Ok(4.0 * p * p * (1.0 - p) * (1.0 - p) * (i01 - 0.5 * (i00 + i11)))
}

/// Plug-in V-statistic `-(2/n²) Σ_{i,j} (Y_i - p̂)(Y_j - p̂) |x_i - x_j|`.
pub fn dcov_sq_v(sample: &MarginalSample) -> Result<f64> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::param(format!("need at least 2 samples, got {}", n)));
    }
    let x = &sample.values;
    let n1 = sample.labels.iter().filter(|&&y| y == 1).count();
    let p = n1 as f64 / n as f64;
    let w: Vec<f64> = sample.labels.iter().map(|&y| f64::from(y) - p).collect();
    // The diagonal contributes nothing; each unordered pair appears twice.
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += w[i] * w[j] * x.distance(i, j);
        }
    }
    let nf = n as f64;
    Ok(-4.0 * s / (nf * nf))
}

/// Double-centered Euclidean distance matrix, row-major `n × n`.
struct CenteredDistances {
    n: usize,
    entries: Vec<f64>,
}

impl CenteredDistances {
    fn new(x: &PointSet) -> Self {
        let n = x.len();
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = x.distance(i, j);
                entries[i * n + j] = d;
                entries[j * n + i] = d;
            }
        }
        let nf = n as f64;
        let row_means: Vec<f64> = entries
            .chunks_exact(n)
            .map(|r| r.iter().sum::<f64>() / nf)
            .collect();
        let grand = row_means.iter().sum::<f64>() / nf;
        for i in 0..n {
            for j in 0..n {
                entries[i * n + j] += grand - row_means[i] - row_means[j];
            }
        }
        CenteredDistances { n, entries }
    }

    /// `(1/n²) Σ A_ij B_ij`.
    fn mean_product(&self, other: &CenteredDistances) -> f64 {
        let s: f64 = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a * b)
            .sum();
        let nf = self.n as f64;
        s / (nf * nf)
    }
}

fn check_pair(x: &PointSet, y: &PointSet) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::param(format!(
            "need at least 2 samples, got {}",
            x.len()
        )));
    }
    Ok(())
}

/// Double-centered distance-matrix estimator for arbitrary `x` (n × d) and `y` (n × q).
pub fn dcov_sq_dc(x: &PointSet, y: &PointSet) -> Result<f64> {
    check_pair(x, y)?;
    Ok(CenteredDistances::new(x).mean_product(&CenteredDistances::new(y)))
}

/// Distance variance `V²(X, X)`.
pub fn dvar_sq(x: &PointSet) -> Result<f64> {
    check_pair(x, x)?;
    let a = CenteredDistances::new(x);
    Ok(a.mean_product(&a))
}

fn ratio(num: f64, var_x: f64, var_y: f64) -> f64 {
    let den = (var_x * var_y).sqrt();
    if den < R2_DENOMINATOR_FLOOR {
        0.0
    } else {
        num / den
    }
}

/// Squared distance correlation between the sample values and the 0/1 label
/// column. Zero when either distance variance vanishes.
pub fn dcor_sq(sample: &MarginalSample) -> Result<f64> {
    let y = PointSet::from_labels(&sample.labels);
    check_pair(&sample.values, &y)?;
    let a = CenteredDistances::new(&sample.values);
    let b = CenteredDistances::new(&y);
    Ok(ratio(
        a.mean_product(&b),
        a.mean_product(&a),
        b.mean_product(&b),
    ))
}

/// Per-grid-point dependence values.
#[derive(Debug, Clone, PartialEq)]
pub struct DependenceCurve {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub measure: Measure,
    /// `None` for measures that have a single estimator (t scores).
    pub estimator: Option<Estimator>,
}

impl DependenceCurve {
    pub fn new(
        grid: Grid,
        values: Vec<f64>,
        measure: Measure,
        estimator: Option<Estimator>,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        Ok(DependenceCurve {
            grid,
            values,
            measure,
            estimator,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of the largest value (smaller index on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// Two-column CSV; the header names the measure and estimator.
    pub fn to_csv_string(&self) -> String {
        let tag = match self.estimator {
            Some(e) => format!("{}_{}", self.measure, e),
            None => self.measure.to_string(),
        };
        let mut out = format!("t,{}\n", tag);
        for (t, v) in self.grid.points().iter().zip(&self.values) {
            out.push_str(&format_f64(*t));
            out.push(',');
            out.push_str(&format_f64(*v));
            out.push('\n');
        }
        out
    }
}

/// Evaluates the chosen estimator on the one-dimensional marginal at every
/// grid point. `R2` always uses the double-centered form, whatever
/// `estimator` says.
pub fn dependence_curve(
    dataset: &FunctionalDataset,
    measure: Measure,
    estimator: Estimator,
) -> Result<DependenceCurve> {
    let n_points = dataset.n_points();
    let labels = dataset.labels();
    let (values, estimator) = match measure {
        Measure::V2 => {
            let values = (0..n_points)
                .into_par_iter()
                .map(|j| {
                    let sample = MarginalSample::at_point(dataset, j);
                    match estimator {
                        Estimator::U => dcov_sq_u(&sample),
                        Estimator::V => dcov_sq_v(&sample),
                        Estimator::DC => {
                            dcov_sq_dc(&sample.values, &PointSet::from_labels(&sample.labels))
                        }
                    }
                })
                .collect::<Result<Vec<f64>>>()?;
            (values, estimator)
        }
        Measure::R2 => {
            let y = PointSet::from_labels(labels);
            check_pair(&y, &y)?;
            let b = CenteredDistances::new(&y);
            let var_y = b.mean_product(&b);
            let values = (0..n_points)
                .into_par_iter()
                .map(|j| {
                    let a = CenteredDistances::new(&PointSet::from_column(dataset.column(j)));
                    ratio(a.mean_product(&b), a.mean_product(&a), var_y)
                })
                .collect();
            (values, Estimator::DC)
        }
        Measure::T => return Err(Error::param("t scores are computed by selectors::t_scores")),
    };
    DependenceCurve::new(dataset.grid().clone(), values, measure, Some(estimator))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(class0: &[f64], class1: &[f64]) -> MarginalSample {
        let mut v = class0.to_vec();
        v.extend_from_slice(class1);
        let mut labels = vec![0; class0.len()];
        labels.extend(vec![1; class1.len()]);
        MarginalSample::new(PointSet::from_column(&v), labels).unwrap()
    }

    /// Ordered-pair enumeration of `-(2/n²) Σ (Y_i - p)(Y_j - p)|x_i - x_j|`,
    /// written independently of the estimators above.
    fn v_oracle(x: &[Vec<f64>], y: &[u8]) -> f64 {
        let n = x.len() as f64;
        let p = y.iter().map(|&v| v as f64).sum::<f64>() / n;
        let mut s = 0.0;
        for (xi, &yi) in x.iter().zip(y) {
            for (xj, &yj) in x.iter().zip(y) {
                let d: f64 = xi
                    .iter()
                    .zip(xj)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                s += (yi as f64 - p) * (yj as f64 - p) * d;
            }
        }
        -2.0 / (n * n) * s
    }

    #[test]
    fn u_estimator_hand_values() {
        assert_eq!(dcov_sq_u(&sample(&[0.0, 0.0], &[1.0, 1.0])).unwrap(), 0.25);
        assert_eq!(dcov_sq_u(&sample(&[3.0, 3.0], &[3.0, 3.0])).unwrap(), 0.0);
        assert_eq!(
            dcov_sq_u(&sample(&[0.0, 2.0], &[1.0, 3.0])).unwrap(),
            -0.125
        );
    }

    #[test]
    fn u_estimator_rejects_small_class() {
        let s = sample(&[0.0, 1.0, 2.0], &[1.0]);
        assert!(matches!(
            dcov_sq_u(&s),
            Err(Error::DegenerateClass {
                class: 1,
                count: 1,
                ..
            })
        ));
        let s = sample(&[0.0, 1.0, 2.0], &[]);
        assert!(dcov_sq_u(&s).is_err());
    }

    #[test]
    fn v_estimator_hand_values() {
        let s = sample(&[0.0, 0.0], &[1.0, 1.0]);
        assert_eq!(dcov_sq_v(&s).unwrap(), 0.25);
        let s = sample(&[0.0, 2.0], &[1.0, 3.0]);
        assert_eq!(dcov_sq_v(&s).unwrap(), 0.125);
        let s = sample(&[5.0, 5.0], &[5.0, 5.0]);
        assert_eq!(dcov_sq_v(&s).unwrap(), 0.0);
    }

    #[test]
    fn dc_hand_values() {
        let x = PointSet::from_column(&[0.0, 1.0]);
        assert!((dcov_sq_dc(&x, &x).unwrap() - 0.25).abs() < 1e-15);
        assert!((dvar_sq(&x).unwrap() - 0.25).abs() < 1e-15);
        let c = PointSet::from_column(&[2.0, 2.0, 2.0]);
        let z = PointSet::from_column(&[0.0, 1.0, 5.0]);
        assert_eq!(dcov_sq_dc(&z, &c).unwrap(), 0.0);
        assert_eq!(dvar_sq(&c).unwrap(), 0.0);
    }

    #[test]
    fn dcor_values() {
        let s = sample(&[0.0, 0.0], &[1.0, 1.0]);
        assert!((dcor_sq(&s).unwrap() - 1.0).abs() < 1e-12);
        let s = sample(&[4.0, 4.0, 4.0], &[4.0, 4.0]);
        assert_eq!(dcor_sq(&s).unwrap(), 0.0);
        // x equal to the label column itself
        let labels = vec![0, 1, 1, 0, 1];
        let s = MarginalSample::new(PointSet::from_labels(&labels), labels).unwrap();
        assert!((dcor_sq(&s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn binary_distance_variance() {
        let labels = [1, 0, 0, 1, 0, 0, 0, 0];
        let p: f64 = 2.0 / 8.0;
        let v = dvar_sq(&PointSet::from_labels(&labels)).unwrap();
        assert!((v - 4.0 * p * p * (1.0 - p) * (1.0 - p)).abs() < 1e-15);
    }

    #[test]
    fn curve_matches_pointwise_calls() {
        let grid = Grid::new(vec![0.1, 0.5, 0.9]).unwrap();
        let rows = vec![
            vec![0.0, 1.0, 2.0],
            vec![0.3, -1.0, 2.5],
            vec![1.0, 0.2, -0.3],
            vec![2.0, 0.1, 0.7],
            vec![-1.0, 0.5, 0.9],
        ];
        let ds = FunctionalDataset::from_rows(grid, &rows, vec![0, 0, 1, 1, 1]).unwrap();
        for est in [Estimator::U, Estimator::V, Estimator::DC] {
            let curve = dependence_curve(&ds, Measure::V2, est).unwrap();
            for j in 0..3 {
                let s = MarginalSample::at_point(&ds, j);
                let direct = match est {
                    Estimator::U => dcov_sq_u(&s).unwrap(),
                    Estimator::V => dcov_sq_v(&s).unwrap(),
                    Estimator::DC => {
                        dcov_sq_dc(&s.values, &PointSet::from_labels(&s.labels)).unwrap()
                    }
                };
                assert_eq!(curve.values[j].to_bits(), direct.to_bits());
            }
        }
        let r2 = dependence_curve(&ds, Measure::R2, Estimator::U).unwrap();
        assert_eq!(r2.estimator, Some(Estimator::DC));
        for j in 0..3 {
            let direct = dcor_sq(&MarginalSample::at_point(&ds, j)).unwrap();
            assert_eq!(r2.values[j].to_bits(), direct.to_bits());
            assert!((-1.0..=1.0).contains(&r2.values[j]));
        }
    }

    #[test]
    fn curve_is_flat_for_time_constant_classes() {
        let grid = Grid::new(vec![0.2, 0.4, 0.6, 0.8]).unwrap();
        let rows: Vec<Vec<f64>> = [0.0, 0.0, 3.0, 3.0, 0.0]
            .iter()
            .map(|&c| vec![c; 4])
            .collect();
        let ds = FunctionalDataset::from_rows(grid, &rows, vec![0, 0, 1, 1, 0]).unwrap();
        let c = dependence_curve(&ds, Measure::V2, Estimator::U).unwrap();
        assert!(c.values.iter().all(|&v| v == c.values[0]));
        assert!(c.values[0] > 0.0);
        assert!(c.to_csv_string().starts_with("t,V2_U\n0.2,"));
    }

    fn binary_sample() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<u8>)> {
        (1usize..=3, 4usize..=20).prop_flat_map(|(d, n)| {
            (
                proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, d), n),
                proptest::collection::vec(0u8..=1, n),
            )
        })
    }

    proptest! {
        #[test]
        fn dc_equals_v_for_binary_labels((x, y) in binary_sample()) {
            let s = MarginalSample::new(PointSet::from_rows(&x).unwrap(), y.clone()).unwrap();
            let dc = dcov_sq_dc(&s.values, &PointSet::from_labels(&y)).unwrap();
            let v = dcov_sq_v(&s).unwrap();
            prop_assert!((dc - v).abs() <= 1e-12, "dc={} v={}", dc, v);
            prop_assert!((v - v_oracle(&x, &y)).abs() <= 1e-12);
        }

        #[test]
        fn scaling_translation_permutation((x, y) in binary_sample(), c in 0.1f64..5.0, shift in -3.0f64..3.0, rot in 0usize..20) {
            prop_assume!(y.iter().filter(|&&v| v == 0).count() >= 2);
            prop_assume!(y.iter().filter(|&&v| v == 1).count() >= 2);
            let base = MarginalSample::new(PointSet::from_rows(&x).unwrap(), y.clone()).unwrap();
            let scaled = MarginalSample::new(base.values.map(|v| c * v), y.clone()).unwrap();
            let moved = MarginalSample::new(base.values.map(|v| v + shift), y.clone()).unwrap();
            let k = rot % x.len();
            let mut xr = x.clone();
            xr.rotate_left(k);
            let mut yr = y.clone();
            yr.rotate_left(k);
            let permuted = MarginalSample::new(PointSet::from_rows(&xr).unwrap(), yr).unwrap();
            let yy = PointSet::from_labels(&y);

            let tol = |a: f64| 1e-9 * (1.0 + a.abs());
            for (f, name) in [
                (dcov_sq_u as fn(&MarginalSample) -> Result<f64>, "u"),
                (dcov_sq_v, "v"),
                (|s: &MarginalSample| dcov_sq_dc(&s.values, &PointSet::from_labels(&s.labels)), "dc"),
            ] {
                let b = f(&base).unwrap();
                prop_assert!((f(&scaled).unwrap() - c * b).abs() <= tol(c * b), "{} scale", name);
                prop_assert!((f(&moved).unwrap() - b).abs() <= tol(b), "{} shift", name);
                prop_assert!((f(&permuted).unwrap() - b).abs() <= tol(b), "{} perm", name);
            }
            let r = dcor_sq(&base).unwrap();
            prop_assert!((dcor_sq(&scaled).unwrap() - r).abs() <= 1e-9);
            prop_assert!(dvar_sq(&base.values).unwrap() >= 0.0);
            prop_assert!(dvar_sq(&yy).unwrap() >= 0.0);
        }
    }
}
