//! Named models. The Brownian-trend models have closed-form Bayes rules; the
//! logistic models follow the stated link functions; the remaining entries are
//! representative members of each family.

use crate::error::{Error, Result};

use super::model::{MixtureComponent, ModelSpec, Monomial};
use super::process::{
    ProcessFamily, ProcessSpec, TrendSpec, SMOOTH_BANDWIDTH, VERY_SMOOTH_BANDWIDTH,
};

fn brownian() -> ProcessSpec {
    ProcessSpec::new(ProcessFamily::Brownian)
}

fn ou() -> ProcessSpec {
    ProcessSpec::new(ProcessFamily::OU { a: 1.0, b: 1.0 })
}

/// Brownian motion vs. Brownian motion plus `θt`, `θ ~ N(0, 1)`.
pub fn prop1(p: f64) -> ModelSpec {
    ModelSpec::Conditional {
        p,
        class0: brownian(),
        class1: brownian().with_trend(TrendSpec::Stochastic),
    }
}

/// Brownian motion vs. Brownian motion plus `ct`.
pub fn prop2(c: f64, p: f64) -> ModelSpec {
    ModelSpec::Conditional {
        p,
        class0: brownian(),
        class1: brownian().with_trend(TrendSpec::Linear { c }),
    }
}

/// Brownian motion vs. Brownian motion plus the peak `Φ_{m,k}`.
pub fn prop3(m: u32, k: u32, p: f64) -> ModelSpec {
    ModelSpec::Conditional {
        p,
        class0: brownian(),
        class1: brownian().with_trend(TrendSpec::Peak { m, k }),
    }
}

/// Brownian motion vs. Brownian bridge.
pub fn bridge() -> ModelSpec {
    ModelSpec::Conditional {
        p: 0.5,
        class0: brownian(),
        class1: ProcessSpec::new(ProcessFamily::BrownianBridge),
    }
}

/// Zero-mean OU vs. OU around the mean `t`.
pub fn ou_trend() -> ModelSpec {
    ModelSpec::Conditional {
        p: 0.5,
        class0: ou(),
        class1: ou().with_trend(TrendSpec::Linear { c: 1.0 }),
    }
}

/// `Ψ(x) = 10 x₃₀ + 10 x₇₀` over an OU marginal with `a = b = 1`.
pub fn l2_ou() -> ModelSpec {
    ModelSpec::Logistic {
        marginal: ou(),
        link: vec![Monomial::new(30, 1, 10.0), Monomial::new(70, 1, 10.0)],
        intercept: 0.0,
    }
}

/// `Ψ(x) = 10 x₅₀⁴ + 50 x₈₀³ + 20 x₃₀²` over Brownian motion.
pub fn l8_b() -> ModelSpec {
    ModelSpec::Logistic {
        marginal: brownian(),
        link: vec![
            Monomial::new(50, 4, 10.0),
            Monomial::new(80, 3, 50.0),
            Monomial::new(30, 2, 20.0),
        ],
        intercept: 0.0,
    }
}

/// `Ψ(x) = 10 x₂₀ − 10 x₆₀` over lightly smoothed Brownian motion.
pub fn l_sb() -> ModelSpec {
    ModelSpec::Logistic {
        marginal: ProcessSpec::new(ProcessFamily::smoothed_brownian(SMOOTH_BANDWIDTH)),
        link: vec![Monomial::new(20, 1, 10.0), Monomial::new(60, 1, -10.0)],
        intercept: 0.0,
    }
}

/// `Ψ(x) = 10 x₅₀` over strongly smoothed Brownian motion.
pub fn l_ssb() -> ModelSpec {
    ModelSpec::Logistic {
        marginal: ProcessSpec::new(ProcessFamily::smoothed_brownian(VERY_SMOOTH_BANDWIDTH)),
        link: vec![Monomial::new(50, 1, 10.0)],
        intercept: 0.0,
    }
}

/// Brownian motion vs. an even mixture of `±t` trends: equal class means.
pub fn mixture() -> ModelSpec {
    ModelSpec::Mixture {
        p: 0.5,
        class0: vec![MixtureComponent {
            weight: 1.0,
            process: brownian(),
        }],
        class1: vec![
            MixtureComponent {
                weight: 0.5,
                process: brownian().with_trend(TrendSpec::Linear { c: 1.0 }),
            },
            MixtureComponent {
                weight: 0.5,
                process: brownian().with_trend(TrendSpec::Linear { c: -1.0 }),
            },
        ],
    }
}

/// `Ψ ≡ 0` over Brownian motion: labels carry no information.
pub fn null_model() -> ModelSpec {
    ModelSpec::Logistic {
        marginal: brownian(),
        link: Vec::new(),
        intercept: 0.0,
    }
}

const NAMES: [&str; 11] = [
    "prop1", "prop2", "prop3", "bridge", "ou_trend", "L2_OU", "L8_B", "L_sB", "L_ssB", "mixture",
    "null",
];

pub fn names() -> &'static [&'static str] {
    &NAMES
}

/// Looks up a model by name (case-insensitive). The Brownian-trend models use
/// `p = 1/2`, `c = 1` and `(m, k) = (3, 3)`.
pub fn get(name: &str) -> Result<ModelSpec> {
    let found = NAMES
        .iter()
        .find(|n| n.eq_ignore_ascii_case(name))
        .ok_or_else(|| {
            Error::Config(format!(
                "unknown model '{}'; known models: {}",
                name,
                NAMES.join(", ")
            ))
        })?;
    Ok(match *found {
        "prop1" => prop1(0.5),
        "prop2" => prop2(1.0, 0.5),
        "prop3" => prop3(3, 3, 0.5),
        "bridge" => bridge(),
        "ou_trend" => ou_trend(),
        "L2_OU" => l2_ou(),
        "L8_B" => l8_b(),
        "L_sB" => l_sb(),
        "L_ssB" => l_ssb(),
        "mixture" => mixture(),
        _ => null_model(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_resolves_to_a_valid_model() {
        for name in names() {
            get(name).unwrap().validate().unwrap();
            assert_eq!(get(&name.to_lowercase()).unwrap(), get(name).unwrap());
        }
        assert!(get("G99").is_err());
    }
}
