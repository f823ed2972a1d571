//! Univariate-response partial least squares (PLS1) with the label coded 0/1.

use nalgebra::{DMatrix, DVector};

use crate::data::FunctionalDataset;
use crate::error::{Error, Result};

use super::{Projection, ProjectionKind};

/// Training-score columns must be orthogonal to this relative tolerance.
const ORTHOGONALITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct PlsFit {
    pub projection: Projection,
    /// `n × c` training scores produced during deflation.
    pub scores: DMatrix<f64>,
    /// Per-component weight vectors `w_a` (unit norm), `N × c`.
    pub weights: DMatrix<f64>,
    pub requested: usize,
}

impl PlsFit {
    pub fn components(&self) -> usize {
        self.scores.ncols()
    }
}

/// Fits up to `c` components. Stops early when the residual cross-covariance
/// vanishes; `components() < requested` then.
pub fn pls_fit(dataset: &FunctionalDataset, c: usize) -> Result<PlsFit> {
    let n = dataset.n_samples();
    let n_points = dataset.n_points();
    if c == 0 {
        return Err(Error::param("PLS needs at least one component"));
    }
    if c > n_points || c + 1 > n {
        return Err(Error::param(format!(
            "{} components exceed min(n - 1, N) = {}",
            c,
            (n - 1).min(n_points)
        )));
    }
    let (n0, n1) = dataset.class_counts();
    if n0 == 0 || n1 == 0 {
        return Err(Error::DegenerateClass {
            class: if n0 == 0 { 0 } else { 1 },
            count: 0,
            required: 1,
        });
    }

    let x0 = dataset.trajectories();
    let means: Vec<f64> = x0.column_iter().map(|col| col.mean()).collect();
    let mut x = DMatrix::from_fn(n, n_points, |i, j| x0[(i, j)] - means[j]);
    let y_mean = n1 as f64 / n as f64;
    let mut y = DVector::from_iterator(n, dataset.labels().iter().map(|&l| f64::from(l) - y_mean));

    let mut ws: Vec<DVector<f64>> = Vec::with_capacity(c);
    let mut ps: Vec<DVector<f64>> = Vec::with_capacity(c);
    let mut ts: Vec<DVector<f64>> = Vec::with_capacity(c);
    let mut first_norm = None;
    for _ in 0..c {
        let mut w = x.tr_mul(&y);
        let norm = w.norm();
        let reference = *first_norm.get_or_insert(norm);
        if norm == 0.0 || norm <= 1e-10 * reference {
            break;
        }
        w /= norm;
        let t = &x * &w;
        let tt = t.norm_squared();
        if tt == 0.0 {
            break;
        }
        let p = x.tr_mul(&t) / tt;
        let q = y.dot(&t) / tt;
        x -= &t * p.transpose();
        y -= &t * q;
        ws.push(w);
        ps.push(p);
        ts.push(t);
    }
    if ws.is_empty() {
        return Err(Error::Numerical(
            "no PLS component: training data carry no covariance with the label".into(),
        ));
    }

    let k = ws.len();
    let w = DMatrix::from_columns(&ws);
    let p = DMatrix::from_columns(&ps);
    let scores = DMatrix::from_columns(&ts);

    for a in 0..k {
        for b in a + 1..k {
            let dot = scores.column(a).dot(&scores.column(b)).abs();
            let scale = scores.column(a).norm() * scores.column(b).norm();
            if dot > ORTHOGONALITY_TOL * scale.max(1.0) {
                return Err(Error::Numerical(format!(
                    "PLS scores {} and {} not orthogonal (inner product {:e})",
                    a, b, dot
                )));
            }
        }
    }

    // Scores of new data without sequential deflation: R = W (PᵀW)⁻¹.
    let ptw = p.tr_mul(&w);
    let inv = ptw
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular PᵀW in PLS".into()))?;
    let rotation = &w * inv;

    Ok(PlsFit {
        projection: Projection {
            grid: dataset.grid().clone(),
            kind: ProjectionKind::LinearMap {
                weights: rotation,
                means,
            },
        },
        scores,
        weights: w,
        requested: c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noisy_with_label_column(n: usize, n_points: usize, label_col: usize) -> FunctionalDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let rows: Vec<Vec<f64>> = labels
            .iter()
            .map(|&y| {
                (0..n_points)
                    .map(|j| {
                        if j == label_col {
                            f64::from(y)
                        } else {
                            rng.random::<f64>() - 0.5
                        }
                    })
                    .collect()
            })
            .collect();
        let grid = Grid::new((1..=n_points).map(|i| i as f64 / n_points as f64).collect()).unwrap();
        FunctionalDataset::from_rows(grid, &rows, labels).unwrap()
    }

    #[test]
    fn first_weight_targets_label_column() {
        let ds = noisy_with_label_column(40, 10, 6);
        let fit = pls_fit(&ds, 1).unwrap();
        assert_eq!(fit.weights.column(0).iamax(), 6);
    }

    #[test]
    fn scores_orthogonal_and_reproducible() {
        let ds = noisy_with_label_column(30, 12, 2);
        // perturb the label column so more than one component exists
        let mut rows: Vec<Vec<f64>> = (0..30).map(|i| ds.row(i)).collect();
        for (i, r) in rows.iter_mut().enumerate() {
            r[2] += 0.3 * ((i * 7 % 5) as f64 - 2.0);
        }
        let ds =
            FunctionalDataset::from_rows(ds.grid().clone(), &rows, ds.labels().to_vec()).unwrap();
        let fit = pls_fit(&ds, 4).unwrap();
        assert_eq!(fit.components(), 4);
        for a in 0..4 {
            for b in a + 1..4 {
                assert!(fit.scores.column(a).dot(&fit.scores.column(b)).abs() < 1e-8);
            }
        }
        let projected = fit.projection.project(&ds).unwrap();
        assert!((projected - &fit.scores).abs().max() < 1e-10);
    }

    #[test]
    fn first_weight_is_covariance_direction() {
        let ds = noisy_with_label_column(25, 5, 0);
        let fit = pls_fit(&ds, 1).unwrap();
        let x = ds.trajectories();
        let means: Vec<f64> = x.column_iter().map(|c| c.mean()).collect();
        let xc = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] - means[j]);
        let y = DVector::from_iterator(25, ds.labels().iter().map(|&l| f64::from(l)));
        let yc = y.add_scalar(-y.mean());
        let analytic = xc.tr_mul(&yc).normalize();
        assert!((fit.weights.column(0) - &analytic).abs().max() < 1e-12);

        // no random unit vector achieves larger covariance
        let best = (&xc * &analytic).dot(&yc);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let v = DVector::from_fn(5, |_, _| rng.random::<f64>() - 0.5).normalize();
            assert!((&xc * &v).dot(&yc) <= best + 1e-12);
        }
    }

    #[test]
    fn degenerate_residual_stops_early() {
        // label fully explained by one column: the second weight vanishes
        let grid = Grid::new(vec![0.25, 0.5, 0.75]).unwrap();
        let rows = vec![
            vec![0.0, 1.0, 1.0],
            vec![1.0, 1.0, 1.0],
            vec![0.0, 1.0, 1.0],
            vec![1.0, 1.0, 1.0],
        ];
        let ds = FunctionalDataset::from_rows(grid, &rows, vec![0, 1, 0, 1]).unwrap();
        let fit = pls_fit(&ds, 3).unwrap();
        assert_eq!(fit.components(), 1);
        assert_eq!(fit.requested, 3);
    }

    #[test]
    fn rejects_bad_component_counts() {
        let ds = noisy_with_label_column(6, 10, 0);
        assert!(pls_fit(&ds, 0).is_err());
        assert!(pls_fit(&ds, 6).is_err());
        assert!(pls_fit(&ds, 5).is_ok());
    }

    #[test]
    fn zero_data_projects_to_constant_rows() {
        let ds = noisy_with_label_column(20, 6, 1);
        let fit = pls_fit(&ds, 2).unwrap();
        let zeros =
            FunctionalDataset::from_rows(ds.grid().clone(), &vec![vec![0.0; 6]; 3], vec![0, 1, 0])
                .unwrap();
        let out = fit.projection.project(&zeros).unwrap();
        let ProjectionKind::LinearMap { weights, means } = &fit.projection.kind else {
            panic!("PLS must produce a linear map");
        };
        for a in 0..2 {
            let expected: f64 = (0..6).map(|j| -means[j] * weights[(j, a)]).sum();
            for i in 0..3 {
                assert!((out[(i, a)] - expected).abs() < 1e-12);
            }
        }
    }
}
