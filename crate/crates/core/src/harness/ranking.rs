//! Method ranking across experiments.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points of the first seven places under the F1 scheme; later places score 0.
pub const F1_POINTS: [f64; 7] = [25.0, 18.0, 15.0, 10.0, 8.0, 6.0, 4.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RankingCriterion {
    /// `10 (u - w) / (W - w)` with `W`, `w` the best and worst accuracies.
    Relative,
    /// 10 points to the winner, 9 to the second, and so on.
    Positional,
    /// 25, 18, 15, 10, 8, 6, 4.
    F1,
}

impl RankingCriterion {
    pub const ALL: [RankingCriterion; 3] = [
        RankingCriterion::Relative,
        RankingCriterion::Positional,
        RankingCriterion::F1,
    ];

    fn place_points(self, place: usize) -> f64 {
        match self {
            RankingCriterion::Positional => 10.0 - place as f64,
            RankingCriterion::F1 => F1_POINTS.get(place).copied().unwrap_or(0.0),
            RankingCriterion::Relative => unreachable!("relative scores are not place-based"),
        }
    }
}

impl fmt::Display for RankingCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for RankingCriterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relative" => Ok(RankingCriterion::Relative),
            "positional" => Ok(RankingCriterion::Positional),
            "f1" => Ok(RankingCriterion::F1),
            _ => Err(Error::param(format!("unknown ranking criterion {:?}", s))),
        }
    }
}

/// Points earned by each method in one experiment. Tied methods share the
/// mean of the points of the places they span. A row where every method has
/// the same accuracy gives 10 to everyone under the relative criterion.
pub fn row_points(row: &[f64], criterion: RankingCriterion) -> Result<Vec<f64>> {
    if row.len() < 2 {
        return Err(Error::param("ranking needs at least two methods"));
    }
    if let Some(v) = row.iter().find(|v| !v.is_finite()) {
        return Err(Error::param(format!(
            "non-finite accuracy {} in ranking row",
            v
        )));
    }
    if criterion == RankingCriterion::Relative {
        let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let worst = row.iter().copied().fold(f64::INFINITY, f64::min);
        if best == worst {
            return Ok(vec![10.0; row.len()]);
        }
        return Ok(row
            .iter()
            .map(|u| 10.0 * (u - worst) / (best - worst))
            .collect());
    }
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    let mut points = vec![0.0; row.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && row[order[end]] == row[order[start]] {
            end += 1;
        }
        let shared =
            (start..end).map(|p| criterion.place_points(p)).sum::<f64>() / (end - start) as f64;
        for &m in &order[start..end] {
            points[m] = shared;
        }
        start = end;
    }
    Ok(points)
}

/// Mean points per method over the experiments (rows) of `table`.
pub fn rank_methods(table: &[Vec<f64>], criterion: RankingCriterion) -> Result<Vec<f64>> {
    let width = table
        .first()
        .ok_or_else(|| Error::param("ranking needs at least one experiment"))?
        .len();
    let mut totals = vec![0.0; width];
    for row in table {
        if row.len() != width {
            return Err(Error::DimensionMismatch {
                expected: width,
                found: row.len(),
            });
        }
        for (t, p) in totals.iter_mut().zip(row_points(row, criterion)?) {
            *t += p;
        }
    }
    Ok(totals.into_iter().map(|t| t / table.len() as f64).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingTable {
    /// Group the experiments belong to (the classifier, for reports).
    pub group: String,
    pub criterion: RankingCriterion,
    pub methods: Vec<String>,
    pub scores: Vec<f64>,
    pub experiments: usize,
}

impl RankingTable {
    pub fn build(
        group: impl Into<String>,
        methods: Vec<String>,
        table: &[Vec<f64>],
        criterion: RankingCriterion,
    ) -> Result<Self> {
        let scores = rank_methods(table, criterion)?;
        if scores.len() != methods.len() {
            return Err(Error::DimensionMismatch {
                expected: methods.len(),
                found: scores.len(),
            });
        }
        Ok(RankingTable {
            group: group.into(),
            criterion,
            methods,
            scores,
            experiments: table.len(),
        })
    }
}
