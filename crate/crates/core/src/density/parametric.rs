use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use super::kde::{mean, population_variance, quantile_sorted};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gaussian,
    Laplace,
    Lognormal,
    Exponential,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Gaussian,
        Family::Laplace,
        Family::Lognormal,
        Family::Exponential,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Laplace => "laplace",
            Family::Lognormal => "lognormal",
            Family::Exponential => "exponential",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown distribution family `{s}`")))
    }
}

/// Maximum-likelihood fit of one parametric family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ParamModel {
    Gaussian { mean: f64, variance: f64 },
    Laplace { location: f64, scale: f64 },
    Lognormal { log_mean: f64, log_variance: f64 },
    Exponential { rate: f64 },
}

impl ParamModel {
    pub fn new(family: Family, params: &[f64]) -> Result<Self> {
        let expect = if family == Family::Exponential { 1 } else { 2 };
        if params.len() != expect {
            return Err(Error::InvalidInput(format!(
                "{family} takes {expect} parameters, got {}",
                params.len()
            )));
        }
        let model = match family {
            Family::Gaussian => ParamModel::Gaussian {
                mean: params[0],
                variance: params[1],
            },
            Family::Laplace => ParamModel::Laplace {
                location: params[0],
                scale: params[1],
            },
            Family::Lognormal => ParamModel::Lognormal {
                log_mean: params[0],
                log_variance: params[1],
            },
            Family::Exponential => ParamModel::Exponential { rate: params[0] },
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        let params = self.params();
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("non-finite parameter".into()));
        }
        let spread = *params.last().unwrap_or(&0.0);
        if spread <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "{} fit has zero spread",
                self.family()
            )));
        }
        Ok(())
    }

    pub fn fit(samples: &[f64], family: Family) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "{family} fit needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if matches!(family, Family::Lognormal | Family::Exponential)
            && samples.iter().any(|&v| v <= 0.0)
        {
            return Err(Error::InvalidInput(format!(
                "{family} fit needs strictly positive samples"
            )));
        }
        let model = match family {
            Family::Gaussian => ParamModel::Gaussian {
                mean: mean(samples),
                variance: population_variance(samples),
            },
            Family::Laplace => {
                let mut sorted = samples.to_vec();
                sorted.sort_by(f64::total_cmp);
                let location = quantile_sorted(&sorted, 0.5);
                let scale = samples.iter().map(|v| (v - location).abs()).sum::<f64>()
                    / samples.len() as f64;
                ParamModel::Laplace { location, scale }
            }
            Family::Lognormal => {
                let logs: Vec<f64> = samples.iter().map(|v| v.ln()).collect();
                ParamModel::Lognormal {
                    log_mean: mean(&logs),
                    log_variance: population_variance(&logs),
                }
            }
            Family::Exponential => ParamModel::Exponential {
                rate: 1.0 / mean(samples),
            },
        };
        model.validate()?;
        Ok(model)
    }

    pub fn family(&self) -> Family {
        match self {
            ParamModel::Gaussian { .. } => Family::Gaussian,
            ParamModel::Laplace { .. } => Family::Laplace,
            ParamModel::Lognormal { .. } => Family::Lognormal,
            ParamModel::Exponential { .. } => Family::Exponential,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            ParamModel::Gaussian { mean, variance } => vec![mean, variance],
            ParamModel::Laplace { location, scale } => vec![location, scale],
            ParamModel::Lognormal {
                log_mean,
                log_variance,
            } => vec![log_mean, log_variance],
            ParamModel::Exponential { rate } => vec![rate],
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ParamModel::Gaussian { mean, .. } => mean,
            ParamModel::Laplace { location, .. } => location,
            ParamModel::Lognormal {
                log_mean,
                log_variance,
            } => (log_mean + 0.5 * log_variance).exp(),
            ParamModel::Exponential { rate } => 1.0 / rate,
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            ParamModel::Gaussian { mean, variance } => {
                (-(x - mean).powi(2) / (2.0 * variance)).exp() / (2.0 * PI * variance).sqrt()
            }
            ParamModel::Laplace { location, scale } => {
                (-(x - location).abs() / scale).exp() / (2.0 * scale)
            }
            ParamModel::Lognormal {
                log_mean,
                log_variance,
            } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let z = x.ln() - log_mean;
                (-z * z / (2.0 * log_variance)).exp() / (x * (2.0 * PI * log_variance).sqrt())
            }
            ParamModel::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
        }
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        // parameters were validated on construction
        match *self {
            ParamModel::Gaussian { mean, variance } => {
                let d = Normal::new(mean, variance.sqrt()).expect("validated gaussian");
                (0..n).map(|_| d.sample(rng)).collect()
            }
            ParamModel::Laplace { location, scale } => (0..n)
                .map(|_| loop {
                    // inverse CDF on u in (-1/2, 1/2)
                    let u: f64 = rng.random::<f64>() - 0.5;
                    let tail = 1.0 - 2.0 * u.abs();
                    if tail > 0.0 {
                        break location - scale * u.signum() * tail.ln();
                    }
                })
                .collect(),
            ParamModel::Lognormal {
                log_mean,
                log_variance,
            } => {
                let d = LogNormal::new(log_mean, log_variance.sqrt()).expect("validated lognormal");
                (0..n).map(|_| d.sample(rng)).collect()
            }
            ParamModel::Exponential { rate } => {
                let d = Exp::new(rate).expect("validated exponential");
                (0..n).map(|_| d.sample(rng)).collect()
            }
        }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        self.sample_with(&mut rng_from_seed(seed), n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_mle() {
        let m = ParamModel::fit(&[1.0, 2.0, 3.0], Family::Gaussian).unwrap();
        let ParamModel::Gaussian { mean, variance } = m else { panic!() };
        assert_eq!(mean, 2.0);
        assert!((variance - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn laplace_mle() {
        let m = ParamModel::fit(&[1.0, 2.0, 4.0], Family::Laplace).unwrap();
        assert_eq!(m, ParamModel::Laplace { location: 2.0, scale: 1.0 });
    }

    #[test]
    fn positivity_is_required() {
        assert!(ParamModel::fit(&[-1.0, 2.0], Family::Exponential).is_err());
        assert!(ParamModel::fit(&[0.0, 2.0], Family::Lognormal).is_err());
    }

    #[test]
    fn zero_spread_is_rejected() {
        assert!(ParamModel::fit(&[3.0, 3.0], Family::Gaussian).is_err());
        assert!(ParamModel::fit(&[3.0, 3.0, 3.0], Family::Laplace).is_err());
    }

    #[test]
    fn lognormal_fits_logs() {
        let e = std::f64::consts::E;
        let m = ParamModel::fit(&[1.0, e * e], Family::Lognormal).unwrap();
        let p = m.params();
        assert!((p[0] - 1.0).abs() < 1e-12 && (p[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        for f in Family::ALL {
            let m = ParamModel::fit(&[1.0, 2.0, 5.0], f).unwrap();
            assert_eq!(m.sample(50, 3), m.sample(50, 3));
        }
    }
}
