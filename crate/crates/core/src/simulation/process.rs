//! Gaussian process generators on a discrete grid.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::Grid;
use crate::error::{Error, Result};

/// Bandwidth of the lightly smoothed Brownian family.
pub const SMOOTH_BANDWIDTH: f64 = 0.05;
/// Bandwidth of the strongly smoothed Brownian family.
pub const VERY_SMOOTH_BANDWIDTH: f64 = 0.10;

fn one() -> f64 {
    1.0
}

fn brownian_base() -> Box<ProcessFamily> {
    Box::new(ProcessFamily::Brownian)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", deny_unknown_fields)]
pub enum ProcessFamily {
    Brownian,
    BrownianBridge,
    /// Stationary Ornstein–Uhlenbeck with covariance `a·exp(-b|s - t|)`.
    OU {
        #[serde(default = "one")]
        a: f64,
        #[serde(default = "one")]
        b: f64,
    },
    /// Base family convolved with a Gaussian kernel.
    Smoothed {
        bandwidth: f64,
        #[serde(default = "brownian_base")]
        base: Box<ProcessFamily>,
    },
}

impl ProcessFamily {
    pub fn smoothed_brownian(bandwidth: f64) -> Self {
        ProcessFamily::Smoothed {
            bandwidth,
            base: brownian_base(),
        }
    }

    pub fn involves_bridge(&self) -> bool {
        match self {
            ProcessFamily::BrownianBridge => true,
            ProcessFamily::Smoothed { base, .. } => base.involves_bridge(),
            _ => false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProcessFamily::OU { a, b } if !(*a > 0.0 && *b > 0.0) => Err(Error::param(format!(
                "OU needs a > 0 and b > 0 (got a={}, b={})",
                a, b
            ))),
            ProcessFamily::Smoothed { bandwidth, base } => {
                if bandwidth.is_nan() || *bandwidth <= 0.0 {
                    return Err(Error::param("smoothing bandwidth must be positive"));
                }
                base.validate()
            }
            _ => Ok(()),
        }
    }
}

/// Mean function added to a zero-mean process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum TrendSpec {
    /// `c·t`.
    Linear { c: f64 },
    /// `θ·t` with `θ ~ N(0, 1)` drawn independently per trajectory.
    Stochastic,
    /// Integrated Haar function `Φ_{m,k}`.
    Peak { m: u32, k: u32 },
    /// One value per grid point.
    Tabulated { values: Vec<f64> },
}

impl TrendSpec {
    pub fn validate(&self, n_points: Option<usize>) -> Result<()> {
        match self {
            TrendSpec::Peak { m, k } => check_peak(*m, *k),
            TrendSpec::Tabulated { values } => match n_points {
                Some(n) if values.len() != n => Err(Error::param(format!(
                    "tabulated trend has {} values for a {}-point grid",
                    values.len(),
                    n
                ))),
                _ => Ok(()),
            },
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    #[serde(flatten)]
    pub family: ProcessFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trend: Option<TrendSpec>,
}

impl ProcessSpec {
    pub fn new(family: ProcessFamily) -> Self {
        ProcessSpec {
            family,
            trend: None,
        }
    }

    pub fn with_trend(mut self, trend: TrendSpec) -> Self {
        self.trend = Some(trend);
        self
    }

    pub fn validate(&self, n_points: Option<usize>) -> Result<()> {
        self.family.validate()?;
        if let Some(t) = &self.trend {
            t.validate(n_points)?;
        }
        Ok(())
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Standard Brownian motion: `X(t₁) ~ N(0, √t₁)`, independent Gaussian
/// increments with variance `Δt`.
pub fn sample_brownian<R: Rng + ?Sized>(grid: &Grid, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut prev_t = 0.0;
    let mut x = 0.0;
    for &t in grid.points() {
        x += (t - prev_t).sqrt() * normal(rng);
        out.push(x);
        prev_t = t;
    }
    out
}

/// `B(t) - t·B(1)`, with `B` simulated on the grid plus the point 1.
pub fn sample_brownian_bridge<R: Rng + ?Sized>(grid: &Grid, rng: &mut R) -> Vec<f64> {
    let b = sample_brownian(grid, rng);
    let last_t = *grid.points().last().expect("grid is non-empty");
    let last_b = *b.last().expect("grid is non-empty");
    let b1 = if last_t == 1.0 {
        last_b
    } else {
        last_b + (1.0 - last_t).sqrt() * normal(rng)
    };
    b.iter()
        .zip(grid.points())
        .map(|(x, &t)| x - t * b1)
        .collect()
}

/// Stationary OU with covariance `a·exp(-b|s-t|)` around `mean(t)`, simulated
/// with the exact AR(1) transition.
pub fn sample_ou<R: Rng + ?Sized>(
    grid: &Grid,
    a: f64,
    b: f64,
    mean: impl Fn(f64) -> f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::param(format!(
            "OU needs a > 0 and b > 0 (got a={}, b={})",
            a, b
        )));
    }
    let pts = grid.points();
    let mut out = Vec::with_capacity(pts.len());
    let mut dev = a.sqrt() * normal(rng);
    out.push(mean(pts[0]) + dev);
    for w in pts.windows(2) {
        let rho = (-b * (w[1] - w[0])).exp();
        dev = rho * dev + (a * (1.0 - rho * rho)).sqrt() * normal(rng);
        out.push(mean(w[1]) + dev);
    }
    Ok(out)
}

fn check_peak(m: u32, k: u32) -> Result<()> {
    if m == 0 || m > 30 || k == 0 || k > 1 << (m - 1) {
        return Err(Error::param(format!(
            "peak index (m={}, k={}) needs m >= 1 and 1 <= k <= 2^(m-1)",
            m, k
        )));
    }
    Ok(())
}

/// Integrated Haar function: a triangular bump of slope `±√(2^(m-1))` on
/// `((2k-2)/2^m, 2k/2^m)`, zero elsewhere.
pub fn phi_peak(m: u32, k: u32, t: f64) -> Result<f64> {
    check_peak(m, k)?;
    let scale = 2f64.powi(m as i32);
    let left = (2 * k - 2) as f64 / scale;
    let mid = (2 * k - 1) as f64 / scale;
    let right = (2 * k) as f64 / scale;
    let slope = 2f64.powi(m as i32 - 1).sqrt();
    Ok(if t <= left || t >= right {
        0.0
    } else if t <= mid {
        slope * (t - left)
    } else {
        slope * (right - t)
    })
}

/// Discrete Gaussian convolution on a fixed grid. Each output point is a
/// weighted mean of the input with weights `exp(-(t_i - t_j)² / (2 bw²))`
/// renormalized over the grid.
#[derive(Debug, Clone)]
pub struct GaussianSmoother {
    n: usize,
    weights: Vec<f64>,
}

impl GaussianSmoother {
    pub fn new(grid: &Grid, bandwidth: f64) -> Result<Self> {
        if bandwidth.is_nan() || bandwidth <= 0.0 {
            return Err(Error::param("smoothing bandwidth must be positive"));
        }
        let pts = grid.points();
        let n = pts.len();
        let mut weights = vec![0.0; n * n];
        for i in 0..n {
            let row = &mut weights[i * n..(i + 1) * n];
            for (j, w) in row.iter_mut().enumerate() {
                let u = (pts[i] - pts[j]) / bandwidth;
                *w = (-0.5 * u * u).exp();
            }
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|w| *w /= total);
        }
        Ok(GaussianSmoother { n, weights })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(x).map(|(w, v)| w * v).sum())
            .collect()
    }
}

pub fn smooth_trajectory(trajectory: &[f64], grid: &Grid, bandwidth: f64) -> Result<Vec<f64>> {
    if trajectory.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: trajectory.len(),
        });
    }
    Ok(GaussianSmoother::new(grid, bandwidth)?.apply(trajectory))
}

fn sample_family<R: Rng + ?Sized>(
    family: &ProcessFamily,
    grid: &Grid,
    rng: &mut R,
) -> Result<Vec<f64>> {
    Ok(match family {
        ProcessFamily::Brownian => sample_brownian(grid, rng),
        ProcessFamily::BrownianBridge => sample_brownian_bridge(grid, rng),
        ProcessFamily::OU { a, b } => sample_ou(grid, *a, *b, |_| 0.0, rng)?,
        ProcessFamily::Smoothed { bandwidth, base } => {
            let raw = sample_family(base, grid, rng)?;
            smooth_trajectory(&raw, grid, *bandwidth)?
        }
    })
}

/// One trajectory: a stochastic trend coefficient (if any) is drawn first,
/// then the zero-mean process, then the trend is added.
pub fn sample_process<R: Rng + ?Sized>(
    spec: &ProcessSpec,
    grid: &Grid,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let theta = match spec.trend {
        Some(TrendSpec::Stochastic) => normal(rng),
        _ => 0.0,
    };
    let mut x = sample_family(&spec.family, grid, rng)?;
    match &spec.trend {
        None => {}
        Some(TrendSpec::Linear { c }) => x
            .iter_mut()
            .zip(grid.points())
            .for_each(|(v, &t)| *v += c * t),
        Some(TrendSpec::Stochastic) => x
            .iter_mut()
            .zip(grid.points())
            .for_each(|(v, &t)| *v += theta * t),
        Some(TrendSpec::Peak { m, k }) => {
            for (v, &t) in x.iter_mut().zip(grid.points()) {
                *v += phi_peak(*m, *k, t)?;
            }
        }
        Some(TrendSpec::Tabulated { values }) => {
            if values.len() != x.len() {
                return Err(Error::DimensionMismatch {
                    expected: x.len(),
                    found: values.len(),
                });
            }
            x.iter_mut().zip(values).for_each(|(v, m)| *v += m);
        }
    }
    Ok(x)
}
