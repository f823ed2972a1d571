//! Local maxima of a dependence curve and the maxima-hunting selector.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{FunctionalDataset, SelectionResult};
use crate::dcov::{dependence_curve, DependenceCurve, Estimator, Measure};
use crate::error::{Error, Result};
use crate::selectors::Method;

/// Window half-widths tried during validation when none are configured.
pub const DEFAULT_H_GRID: [usize; 6] = [1, 2, 3, 5, 8, 12];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaximaConfig {
    /// Half-width of the comparison window, in grid indices.
    pub h: usize,
    /// Largest number of maxima to return.
    pub max_vars: usize,
}

impl MaximaConfig {
    pub fn new(h: usize, max_vars: usize) -> Result<Self> {
        if h == 0 {
            return Err(Error::param("window half-width h must be at least 1"));
        }
        if max_vars == 0 {
            return Err(Error::param("max_vars must be at least 1"));
        }
        Ok(MaximaConfig { h, max_vars })
    }
}

/// Indices `i` whose value is strictly larger than every other value in the
/// window `[i - h, i + h]` (clipped at the ends of the grid), ordered by value
/// descending with ties going to the smaller index.
pub fn local_maxima_of(values: &[f64], h: usize) -> Result<Vec<usize>> {
    let n = values.len();
    if h == 0 || h >= n {
        return Err(Error::param(format!(
            "window half-width h={} must satisfy 1 <= h < {}",
            h, n
        )));
    }
    let mut found: Vec<usize> = (0..n)
        .filter(|&i| {
            let lo = i.saturating_sub(h);
            let hi = (i + h).min(n - 1);
            (lo..=hi).all(|j| j == i || values[i] > values[j])
        })
        .collect();
    found.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    Ok(found)
}

pub fn local_maxima(curve: &DependenceCurve, h: usize) -> Result<Vec<usize>> {
    local_maxima_of(&curve.values, h)
}

/// Maxima hunting on an already computed curve.
pub fn select_maxima(
    curve: &DependenceCurve,
    config: MaximaConfig,
    method: Method,
) -> Result<SelectionResult> {
    let mut indices = local_maxima(curve, config.h)?;
    indices.truncate(config.max_vars);
    let scores = indices.iter().map(|&i| curve.values[i]).collect();
    let mut hyperparams = BTreeMap::new();
    hyperparams.insert("h".to_string(), config.h as f64);
    hyperparams.insert("max_vars".to_string(), config.max_vars as f64);
    Ok(SelectionResult {
        indices,
        scores,
        method,
        hyperparams,
    })
}

/// MHV (`measure = V2`) or MHR (`measure = R2`).
pub fn mh_select(
    dataset: &FunctionalDataset,
    measure: Measure,
    estimator: Estimator,
    config: MaximaConfig,
) -> Result<SelectionResult> {
    let method = match measure {
        Measure::V2 => Method::MHV,
        Measure::R2 => Method::MHR,
        Measure::T => return Err(Error::param("maxima hunting needs measure V2 or R2")),
    };
    let curve = dependence_curve(dataset, measure, estimator)?;
    select_maxima(&curve, config, method)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Grid;
    use proptest::prelude::*;

    #[test]
    fn hand_examples() {
        assert_eq!(
            local_maxima_of(&[1.0, 2.0, 3.0, 2.0, 1.0], 1).unwrap(),
            vec![2]
        );
        assert_eq!(
            local_maxima_of(&[1.0, 2.0, 1.0, 3.0, 1.0], 2).unwrap(),
            vec![3]
        );
        assert_eq!(
            local_maxima_of(&[1.0, 2.0, 1.0, 3.0, 1.0], 1).unwrap(),
            vec![3, 1]
        );
        assert!(local_maxima_of(&[2.0; 6], 1).unwrap().is_empty());
        assert!(local_maxima_of(&[2.0; 6], 4).unwrap().is_empty());
    }

    #[test]
    fn endpoints_can_be_maxima() {
        assert_eq!(local_maxima_of(&[0.0, 1.0, 2.0, 3.0], 2).unwrap(), vec![3]);
        assert_eq!(
            local_maxima_of(&[5.0, 1.0, 2.0, 3.0], 1).unwrap(),
            vec![0, 3]
        );
    }

    #[test]
    fn equal_peaks_break_to_smaller_index() {
        assert_eq!(
            local_maxima_of(&[0.0, 4.0, 0.0, 0.0, 4.0, 0.0], 1).unwrap(),
            vec![1, 4]
        );
    }

    #[test]
    fn window_bounds() {
        assert!(local_maxima_of(&[1.0, 2.0, 3.0], 0).is_err());
        assert!(local_maxima_of(&[1.0, 2.0, 3.0], 3).is_err());
        assert!(local_maxima_of(&[1.0, 2.0, 3.0], 2).is_ok());
    }

    #[test]
    fn selector_truncates_without_padding() {
        let grid = Grid::new((1..=7).map(|i| i as f64 / 7.0).collect()).unwrap();
        let curve = DependenceCurve::new(
            grid,
            vec![0.0, 3.0, 0.0, 5.0, 0.0, 1.0, 0.0],
            Measure::V2,
            Some(Estimator::U),
        )
        .unwrap();
        let all = select_maxima(&curve, MaximaConfig::new(1, 10).unwrap(), Method::MHV).unwrap();
        assert_eq!(all.indices, vec![3, 1, 5]);
        assert_eq!(all.scores, vec![5.0, 3.0, 1.0]);
        let two = select_maxima(&curve, MaximaConfig::new(1, 2).unwrap(), Method::MHV).unwrap();
        assert_eq!(two.indices, vec![3, 1]);
    }

    #[test]
    fn constant_curve_selects_nothing() {
        let grid = Grid::new(vec![0.2, 0.4, 0.6, 0.8]).unwrap();
        let rows = vec![vec![1.0; 4], vec![1.0; 4], vec![2.0; 4], vec![2.0; 4]];
        let ds = crate::data::FunctionalDataset::from_rows(grid, &rows, vec![0, 0, 1, 1]).unwrap();
        let sel = mh_select(
            &ds,
            Measure::V2,
            Estimator::U,
            MaximaConfig::new(1, 5).unwrap(),
        )
        .unwrap();
        assert!(sel.is_empty());
        assert_eq!(sel.method, Method::MHV);
    }

    proptest! {
        #[test]
        fn maxima_properties(values in proptest::collection::vec(-5i32..5, 3..40), h in 1usize..10) {
            let values: Vec<f64> = values.into_iter().map(f64::from).collect();
            prop_assume!(h < values.len());
            let found = local_maxima_of(&values, h).unwrap();

            for &i in &found {
                let lo = i.saturating_sub(h);
                let hi = (i + h).min(values.len() - 1);
                for j in lo..=hi {
                    prop_assert!(j == i || values[i] > values[j]);
                }
            }
            for w in found.windows(2) {
                prop_assert!(values[w[0]] > values[w[1]] || (values[w[0]] == values[w[1]] && w[0] < w[1]));
            }

            let transformed: Vec<f64> = values.iter().map(|v| (0.3 * v).exp() * 2.0 + 1.0).collect();
            prop_assert_eq!(&local_maxima_of(&transformed, h).unwrap(), &found);

            if h + 1 < values.len() {
                let wider = local_maxima_of(&values, h + 1).unwrap();
                for i in wider {
                    prop_assert!(found.contains(&i));
                }
            }
        }
    }
}
