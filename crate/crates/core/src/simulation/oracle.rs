//! Closed-form Bayes rules for the Brownian-trend models, closed-form
//! distance-covariance curves, and Monte-Carlo Bayes error.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::data::Label;
use crate::error::{Error, Result};

use super::model::{logistic, ModelSpec};
use super::process::{phi_peak, sample_process, ProcessFamily, ProcessSpec, TrendSpec};

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / SQRT_2))
}

fn check_prior(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!(
            "class prior p = {} must lie in (0, 1)",
            p
        )))
    }
}

/// `P(Y = 1 | X = x)` for Brownian motion vs. Brownian motion plus `θt`.
pub fn eta_prop1(x1: f64, p: f64) -> f64 {
    1.0 / ((1.0 - p) / p * SQRT_2 * (-x1 * x1 / 4.0).exp() + 1.0)
}

pub fn bayes_rule_prop1(x1: f64, p: f64) -> Label {
    Label::from(x1 * x1 > 4.0 * (SQRT_2 * (1.0 - p) / p).ln())
}

/// `|x(1)|` above which the rule predicts class 1 (0 when it always does).
pub fn prop1_threshold(p: f64) -> f64 {
    (4.0 * (SQRT_2 * (1.0 - p) / p).ln()).max(0.0).sqrt()
}

pub fn eta_prop2(x1: f64, c: f64, p: f64) -> f64 {
    1.0 / ((1.0 - p) / p * (c * c / 2.0 - c * x1).exp() + 1.0)
}

pub fn bayes_rule_prop2(x1: f64, c: f64, p: f64) -> Result<Label> {
    if c == 0.0 {
        return Err(Error::param("linear trend slope c must be nonzero"));
    }
    let threshold = c / 2.0 - (p / (1.0 - p)).ln() / c;
    Ok(Label::from(if c > 0.0 {
        x1 > threshold
    } else {
        x1 < threshold
    }))
}

/// Trajectory values at `(2k-2)/2^m`, `(2k-1)/2^m` and `2k/2^m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadicValues {
    pub left: f64,
    pub mid: f64,
    pub right: f64,
}

impl DyadicValues {
    fn peak_statistic(&self) -> f64 {
        (self.mid - self.left) + (self.mid - self.right)
    }
}

pub fn dyadic_points(m: u32, k: u32) -> Result<[f64; 3]> {
    phi_peak(m, k, 0.0)?;
    let scale = 2f64.powi(m as i32);
    Ok([
        (2 * k - 2) as f64 / scale,
        (2 * k - 1) as f64 / scale,
        (2 * k) as f64 / scale,
    ])
}

pub fn eta_prop3(x: DyadicValues, m: u32, k: u32, p: f64) -> Result<f64> {
    dyadic_points(m, k)?;
    let a = 2f64.powf((m as f64 - 1.0) / 2.0);
    Ok(1.0 / ((1.0 - p) / p * (0.5 - a * x.peak_statistic()).exp() + 1.0))
}

pub fn bayes_rule_prop3(x: DyadicValues, m: u32, k: u32, p: f64) -> Result<Label> {
    dyadic_points(m, k)?;
    let threshold = 1.0 / 2f64.powi(m as i32 + 1).sqrt()
        - (p / (1.0 - p)).ln() / 2f64.powi(m as i32 - 1).sqrt();
    Ok(Label::from(x.peak_statistic() > threshold))
}

/// `E|ξ|` for `ξ ~ N(m, σ)`.
pub fn folded_normal_mean(m: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return m.abs();
    }
    sigma * (2.0 / PI).sqrt() * (-m * m / (2.0 * sigma * sigma)).exp()
        + m * (2.0 * normal_cdf(m / sigma) - 1.0)
}

/// Models whose population distance covariance curve has a closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum AnalyticModel {
    StochasticTrend,
    LinearTrend { c: f64 },
}

/// Population `V²(X_t, Y)` at time `t` with `P(Y = 1) = p`.
pub fn analytic_v2_curve(model: AnalyticModel, t: f64, p: f64) -> Result<f64> {
    check_prior(p)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::param(format!("t = {} outside [0, 1]", t)));
    }
    let scale = 4.0 * p * p * (1.0 - p) * (1.0 - p);
    let i00 = (4.0 * t / PI).sqrt();
    Ok(match model {
        AnalyticModel::StochasticTrend => {
            let i01 = (2.0 * (t * t + 2.0 * t) / PI).sqrt();
            let i11 = (4.0 * (t * t + t) / PI).sqrt();
            scale * (i01 - (i00 + i11) / 2.0)
        }
        AnalyticModel::LinearTrend { c } => {
            scale * (folded_normal_mean(c * t, (2.0 * t).sqrt()) - i00)
        }
    })
}

/// Recognized closed-form Bayes rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BayesRule {
    Prop1 {
        p: f64,
    },
    Prop2 {
        c: f64,
        p: f64,
    },
    Prop3 {
        m: u32,
        k: u32,
        p: f64,
    },
    /// `g*(x) = 1{Ψ(x) > 0}` for logistic models.
    Logistic,
}

fn is_plain_brownian(spec: &ProcessSpec) -> bool {
    spec.family == ProcessFamily::Brownian && spec.trend.is_none()
}

impl BayesRule {
    pub fn for_model(model: &ModelSpec) -> Result<Self> {
        model.validate()?;
        match model {
            ModelSpec::Logistic { .. } => Ok(BayesRule::Logistic),
            ModelSpec::Conditional { p, class0, class1 }
                if is_plain_brownian(class0) && class1.family == ProcessFamily::Brownian =>
            {
                match class1.trend {
                    Some(TrendSpec::Stochastic) => Ok(BayesRule::Prop1 { p: *p }),
                    Some(TrendSpec::Linear { c }) if c != 0.0 => Ok(BayesRule::Prop2 { c, p: *p }),
                    Some(TrendSpec::Peak { m, k }) => Ok(BayesRule::Prop3 { m, k, p: *p }),
                    _ => Err(Error::NoBayesRule(
                        "class 1 trend has no closed-form rule".into(),
                    )),
                }
            }
            _ => Err(Error::NoBayesRule(
                "only Brownian vs. Brownian-plus-trend and logistic models are supported".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BayesErrorEstimate {
    pub error: f64,
    pub std_error: f64,
    pub budget: usize,
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Monte-Carlo estimate of `P(g*(X) ≠ Y)`.
///
/// Trend models draw only the coordinates the rule reads (`x(1)`, or the
/// three dyadic points). Logistic models draw full trajectories and average
/// `min(η, 1 - η)`, the conditional error of `g*` given `X`.
pub fn bayes_error<R: Rng + ?Sized>(
    model: &ModelSpec,
    budget: usize,
    rng: &mut R,
) -> Result<BayesErrorEstimate> {
    if budget < 2 {
        return Err(Error::param("Monte-Carlo budget must be at least 2"));
    }
    let rule = BayesRule::for_model(model)?;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    match rule {
        BayesRule::Logistic => {
            let grid = model.grid();
            let ModelSpec::Logistic { marginal, .. } = model else {
                unreachable!("rule matches model kind")
            };
            for _ in 0..budget {
                let x = sample_process(marginal, &grid, rng)?;
                let eta = logistic(model.link_value(&x).expect("logistic model"));
                let loss = eta.min(1.0 - eta);
                sum += loss;
                sum_sq += loss * loss;
            }
        }
        _ => {
            for _ in 0..budget {
                let loss = f64::from(trend_model_mistake(rule, rng)?);
                sum += loss;
                sum_sq += loss;
            }
        }
    }
    let b = budget as f64;
    let mean = sum / b;
    let var = ((sum_sq - b * mean * mean) / (b - 1.0)).max(0.0);
    Ok(BayesErrorEstimate {
        error: mean,
        std_error: (var / b).sqrt(),
        budget,
    })
}

/// Draws `(X, Y)` restricted to the coordinates the rule reads and reports
/// whether the rule misclassifies it.
fn trend_model_mistake<R: Rng + ?Sized>(rule: BayesRule, rng: &mut R) -> Result<bool> {
    let p = match rule {
        BayesRule::Prop1 { p } | BayesRule::Prop2 { p, .. } | BayesRule::Prop3 { p, .. } => p,
        BayesRule::Logistic => unreachable!("handled by the caller"),
    };
    let y = rng.random::<f64>() < p;
    let predicted = match rule {
        BayesRule::Prop1 { p } => {
            let theta = if y { normal(rng) } else { 0.0 };
            bayes_rule_prop1(normal(rng) + theta, p)
        }
        BayesRule::Prop2 { c, p } => {
            let shift = if y { c } else { 0.0 };
            bayes_rule_prop2(normal(rng) + shift, c, p)?
        }
        BayesRule::Prop3 { m, k, p } => {
            let [l, mid, r] = dyadic_points(m, k)?;
            let bl = l.sqrt() * normal(rng);
            let bm = bl + (mid - l).sqrt() * normal(rng);
            let br = bm + (r - mid).sqrt() * normal(rng);
            let trend = |t: f64| if y { phi_peak(m, k, t) } else { Ok(0.0) };
            let x = DyadicValues {
                left: bl + trend(l)?,
                mid: bm + trend(mid)?,
                right: br + trend(r)?,
            };
            bayes_rule_prop3(x, m, k, p)?
        }
        BayesRule::Logistic => unreachable!(),
    };
    Ok(predicted != Label::from(y))
}
