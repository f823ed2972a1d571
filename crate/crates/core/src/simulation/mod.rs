//! Trajectory generators, declarative simulation models and the analytic
//! oracles (Bayes rules and closed-form distance-covariance curves) for the
//! Brownian-family models.

mod model;
mod oracle;
mod process;
pub mod registry;

pub use model::{sample_model, MixtureComponent, ModelSpec, Monomial};
pub use oracle::{
    analytic_v2_curve, bayes_error, bayes_rule_prop1, bayes_rule_prop2, bayes_rule_prop3,
    dyadic_points, eta_prop1, eta_prop2, eta_prop3, folded_normal_mean, prop1_threshold,
    AnalyticModel, BayesErrorEstimate, BayesRule, DyadicValues,
};
pub use process::{
    phi_peak, sample_brownian, sample_brownian_bridge, sample_ou, sample_process,
    smooth_trajectory, GaussianSmoother, ProcessFamily, ProcessSpec, TrendSpec, SMOOTH_BANDWIDTH,
    VERY_SMOOTH_BANDWIDTH,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Grid;

/// Number of points of the standard simulation grid.
pub const DEFAULT_GRID_LEN: usize = 100;

/// `t_i = (5 + i) / 105`, `i = 1..=100`: starts at 6/105 and ends at 1.
pub fn default_grid() -> Grid {
    Grid::new(
        (1..=DEFAULT_GRID_LEN)
            .map(|i| (5 + i) as f64 / 105.0)
            .collect(),
    )
    .expect("default grid is valid")
}

/// Grid for models involving a Brownian bridge, which stops short of 1:
/// `t_i = (5 + i) / 106`.
pub fn bridge_grid() -> Grid {
    Grid::new(
        (1..=DEFAULT_GRID_LEN)
            .map(|i| (5 + i) as f64 / 106.0)
            .collect(),
    )
    .expect("bridge grid is valid")
}

/// A reproducible random stream: the same `(seed, stream)` always yields the
/// same draws, independent of which thread consumes it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngStream { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}
