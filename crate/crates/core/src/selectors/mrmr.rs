//! Minimum-redundancy maximum-relevance forward selection.
//!
//! FC variants score relevance with the two-class ANOVA F statistic and
//! redundancy with |Pearson correlation|. MI variants use plug-in mutual
//! information on variables discretized to three levels. D variants maximize
//! `relevance - redundancy`, Q variants `relevance / redundancy`, where
//! redundancy is the mean over the already selected set.

use serde::{Deserialize, Serialize};

use crate::data::{FunctionalDataset, Label, SelectionResult};
use crate::error::{Error, Result};

use super::t_rank::class_moments;
use super::{hyperparams, Method};

/// Floor applied to the redundancy term of quotient variants.
pub const QUOTIENT_FLOOR: f64 = 1e-12;

#[allow(clippy::upper_case_acronyms)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MrmrVariant {
    FCD,
    FCQ,
    MID,
    MIQ,
}

impl MrmrVariant {
    fn is_quotient(self) -> bool {
        matches!(self, MrmrVariant::FCQ | MrmrVariant::MIQ)
    }

    fn uses_mi(self) -> bool {
        matches!(self, MrmrVariant::MID | MrmrVariant::MIQ)
    }

    fn method(self) -> Method {
        match self {
            MrmrVariant::FCD => Method::FCD,
            MrmrVariant::FCQ => Method::FCQ,
            MrmrVariant::MID => Method::MID,
            MrmrVariant::MIQ => Method::MIQ,
        }
    }
}

/// Three-level discretization at `mean ± spread · sd` (sample sd).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub spread: f64,
}

impl Default for Discretization {
    fn default() -> Self {
        Discretization { spread: 1.0 }
    }
}

/// Levels 0 (below `mean - spread·sd`), 1 (middle) and 2 (above `mean + spread·sd`).
pub fn discretize(values: &[f64], disc: Discretization) -> Vec<u8> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let lo = mean - disc.spread * sd;
    let hi = mean + disc.spread * sd;
    values
        .iter()
        .map(|&v| {
            if v < lo {
                0
            } else if v > hi {
                2
            } else {
                1
            }
        })
        .collect()
}

/// Plug-in mutual information (natural log) of two discrete sequences with
/// at most 3 levels each.
pub fn mutual_information(a: &[u8], b: &[u8]) -> f64 {
    let mut joint = [[0usize; 3]; 3];
    for (&x, &y) in a.iter().zip(b) {
        joint[x as usize][y as usize] += 1;
    }
    let n = a.len() as f64;
    let row: Vec<f64> = joint
        .iter()
        .map(|r| r.iter().sum::<usize>() as f64)
        .collect();
    let col: Vec<f64> = (0..3)
        .map(|j| joint.iter().map(|r| r[j]).sum::<usize>() as f64)
        .collect();
    let mut mi = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let c = joint[i][j] as f64;
            if c > 0.0 {
                mi += c / n * (c * n / (row[i] * col[j])).ln();
            }
        }
    }
    mi
}

/// Two-class one-way ANOVA F statistic.
pub fn f_statistic(values: &[f64], labels: &[Label]) -> f64 {
    let (c0, c1): (Vec<usize>, Vec<usize>) = (0..values.len()).partition(|&i| labels[i] == 0);
    let m0 = class_moments(values, &c0);
    let m1 = class_moments(values, &c1);
    let n = m0.n + m1.n;
    let grand = (m0.n * m0.mean + m1.n * m1.mean) / n;
    let between = m0.n * (m0.mean - grand).powi(2) + m1.n * (m1.mean - grand).powi(2);
    let within = (m0.n - 1.0) * m0.var + (m1.n - 1.0) * m1.var;
    if within > 0.0 {
        between / (within / (n - 2.0))
    } else if between == 0.0 {
        0.0
    } else {
        f64::MAX
    }
}

struct Centered {
    values: Vec<f64>,
    norm: f64,
}

fn centered(values: &[f64]) -> Centered {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let values: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    Centered { values, norm }
}

fn abs_correlation(a: &Centered, b: &Centered) -> f64 {
    if a.norm == 0.0 || b.norm == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    (dot / (a.norm * b.norm)).abs()
}

/// Greedy forward selection of `d` grid points. Scores are the criterion
/// value at the moment each point was picked (the relevance for the first).
pub fn mrmr_select(
    dataset: &FunctionalDataset,
    d: usize,
    variant: MrmrVariant,
    disc: Discretization,
) -> Result<SelectionResult> {
    let n_points = dataset.n_points();
    if d == 0 || d > n_points {
        return Err(Error::param(format!(
            "cannot select {} of {} variables",
            d, n_points
        )));
    }
    let (n0, n1) = dataset.class_counts();
    for (label, count) in [(0u8, n0), (1u8, n1)] {
        if count < 2 {
            return Err(Error::DegenerateClass {
                class: label,
                count,
                required: 2,
            });
        }
    }
    let labels = dataset.labels();

    let relevance: Vec<f64>;
    let redundancy: Box<dyn Fn(usize, usize) -> f64 + '_>;
    if variant.uses_mi() {
        let levels: Vec<Vec<u8>> = (0..n_points)
            .map(|j| discretize(dataset.column(j), disc))
            .collect();
        relevance = levels
            .iter()
            .map(|l| mutual_information(l, labels))
            .collect();
        redundancy = Box::new(move |i, s| mutual_information(&levels[i], &levels[s]));
    } else {
        relevance = (0..n_points)
            .map(|j| f_statistic(dataset.column(j), labels))
            .collect();
        let cols: Vec<Centered> = (0..n_points).map(|j| centered(dataset.column(j))).collect();
        redundancy = Box::new(move |i, s| abs_correlation(&cols[i], &cols[s]));
    }

    let mut selected = Vec::with_capacity(d);
    let mut scores = Vec::with_capacity(d);
    let mut chosen = vec![false; n_points];
    let mut red_sum = vec![0.0; n_points];

    while selected.len() < d {
        let k = selected.len() as f64;
        let mut best: Option<(usize, f64)> = None;
        for i in (0..n_points).filter(|&i| !chosen[i]) {
            let crit = if selected.is_empty() {
                relevance[i]
            } else {
                let red = red_sum[i] / k;
                if variant.is_quotient() {
                    relevance[i] / red.max(QUOTIENT_FLOOR)
                } else {
                    relevance[i] - red
                }
            };
            if best.is_none_or(|(_, b)| crit > b) {
                best = Some((i, crit));
            }
        }
        let (pick, crit) = best.expect("candidates remain while selected < d <= N");
        chosen[pick] = true;
        selected.push(pick);
        scores.push(crit);
        for i in (0..n_points).filter(|&i| !chosen[i]) {
            red_sum[i] += redundancy(i, pick);
        }
    }

    let mut params = vec![("d", d as f64)];
    if variant.uses_mi() {
        params.push(("mi_spread", disc.spread));
    }
    Ok(SelectionResult {
        indices: selected,
        scores,
        method: variant.method(),
        hyperparams: hyperparams(&params),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Grid;

    fn dataset(cols: &[Vec<f64>], labels: Vec<u8>) -> FunctionalDataset {
        let n = labels.len();
        let grid = Grid::new(
            (1..=cols.len())
                .map(|i| i as f64 / cols.len() as f64)
                .collect(),
        )
        .unwrap();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| cols.iter().map(|c| c[i]).collect())
            .collect();
        FunctionalDataset::from_rows(grid, &rows, labels).unwrap()
    }

    #[test]
    fn mi_basic_values() {
        let a = [0u8, 1, 2, 0, 1, 2];
        assert!((mutual_information(&a, &a) - 3f64.ln()).abs() < 1e-12);
        let b = [0u8, 0, 0, 0, 0, 0];
        assert_eq!(mutual_information(&a, &b), 0.0);
        let y = [0u8, 0, 0, 1, 1, 1];
        let z = [0u8, 0, 0, 1, 1, 1];
        assert!((mutual_information(&y, &z) - 2f64.ln()).abs() < 1e-12);
    }

    /// Every 3×3 table of counts on 6 samples: self-information dominates.
    #[test]
    fn self_information_dominates_by_enumeration() {
        let n = 6;
        let total = 9usize.pow(n as u32);
        for code in (0..total).step_by(7) {
            let mut c = code;
            let mut a = vec![0u8; n];
            let mut b = vec![0u8; n];
            for k in 0..n {
                let cell = c % 9;
                c /= 9;
                a[k] = (cell / 3) as u8;
                b[k] = (cell % 3) as u8;
            }
            assert!(mutual_information(&a, &a) + 1e-12 >= mutual_information(&a, &b));
            assert!(mutual_information(&b, &b) + 1e-12 >= mutual_information(&a, &b));
        }
    }

    #[test]
    fn discretize_thresholds() {
        let v = [-10.0, 0.0, 0.0, 0.0, 0.0, 10.0];
        assert_eq!(
            discretize(&v, Discretization::default()),
            vec![0, 1, 1, 1, 1, 2]
        );
        let flat = [3.0; 4];
        assert_eq!(discretize(&flat, Discretization::default()), vec![1; 4]);
    }

    #[test]
    fn f_statistic_is_monotone_in_t_squared() {
        // two classes of equal size: F = T² for the pooled t statistic
        let v = [0.0, 1.0, 2.0, 2.0, 4.0, 5.0];
        let y = [0u8, 0, 0, 1, 1, 1];
        let f = f_statistic(&v, &y);
        let m0 = 1.0;
        let m1 = 11.0 / 3.0;
        let s2 =
            (2.0 + (2.0f64 - m1).powi(2) + (4.0f64 - m1).powi(2) + (5.0f64 - m1).powi(2)) / 4.0;
        let t2 = (m1 - m0).powi(2) / (s2 * (1.0 / 3.0 + 1.0 / 3.0));
        assert!((f - t2).abs() < 1e-12);
    }

    #[test]
    fn first_pick_is_max_relevance() {
        let labels = vec![0, 0, 0, 0, 1, 1, 1, 1];
        let cols = vec![
            vec![0.1, 0.3, -0.2, 0.0, 0.2, 0.1, 0.4, -0.1],
            vec![0.0, 0.2, 0.1, -0.1, 1.0, 1.2, 0.9, 1.1],
            vec![0.0, 0.5, -0.5, 0.2, 0.6, 0.4, 0.9, 0.1],
        ];
        let ds = dataset(&cols, labels);
        for v in [MrmrVariant::FCD, MrmrVariant::FCQ] {
            assert_eq!(
                mrmr_select(&ds, 1, v, Discretization::default())
                    .unwrap()
                    .indices,
                vec![1]
            );
        }
        let mid = mrmr_select(&ds, 1, MrmrVariant::MID, Discretization::default()).unwrap();
        let miq = mrmr_select(&ds, 1, MrmrVariant::MIQ, Discretization::default()).unwrap();
        assert_eq!(mid.indices, miq.indices);
    }

    #[test]
    fn redundancy_blocks_duplicate() {
        // columns 0 and 1 identical and informative; column 2 independent and
        // slightly weaker.
        let labels = vec![0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1];
        let strong = vec![0.0, 0.4, -0.4, 0.2, -0.2, 0.1, 1.0, 1.4, 0.6, 1.2, 0.8, 1.1];
        let weak = vec![
            0.2, -0.4, 0.1, 0.4, 0.0, -0.2, 1.1, 0.6, 1.4, 1.0, 1.2, 0.79,
        ];
        let ds = dataset(
            &[strong.clone(), strong.clone(), weak.clone()],
            labels.clone(),
        );

        // brute-force evaluation of the criterion
        let rel: Vec<f64> = [&strong, &strong, &weak]
            .iter()
            .map(|c| f_statistic(c, &labels))
            .collect();
        let corr = |a: &[f64], b: &[f64]| {
            let ma = a.iter().sum::<f64>() / a.len() as f64;
            let mb = b.iter().sum::<f64>() / b.len() as f64;
            let num: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
            let da: f64 = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>().sqrt();
            let db: f64 = b.iter().map(|y| (y - mb).powi(2)).sum::<f64>().sqrt();
            (num / (da * db)).abs()
        };
        assert!(rel[0] > rel[2]);
        let dup = rel[1] - corr(&strong, &strong);
        let ind = rel[2] - corr(&weak, &strong);
        assert!(
            ind > dup,
            "construction must make the independent column win"
        );

        let sel = mrmr_select(&ds, 2, MrmrVariant::FCD, Discretization::default()).unwrap();
        assert_eq!(sel.indices, vec![0, 2]);
        assert!((sel.scores[1] - ind).abs() < 1e-9);
    }

    #[test]
    fn output_has_exact_length_without_duplicates() {
        let labels = vec![0, 1, 0, 1, 0, 1, 0, 1];
        let cols: Vec<Vec<f64>> = (0..6)
            .map(|j| (0..8).map(|i| ((i * 5 + j * 3) % 7) as f64).collect())
            .collect();
        let ds = dataset(&cols, labels);
        for v in [
            MrmrVariant::FCD,
            MrmrVariant::FCQ,
            MrmrVariant::MID,
            MrmrVariant::MIQ,
        ] {
            let sel = mrmr_select(&ds, 6, v, Discretization::default()).unwrap();
            let mut ix = sel.indices.clone();
            ix.sort();
            ix.dedup();
            assert_eq!(ix.len(), 6);
        }
        assert!(mrmr_select(&ds, 7, MrmrVariant::FCD, Discretization::default()).is_err());
    }
}
