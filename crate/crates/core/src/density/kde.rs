use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Bandwidth selection rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    /// `0.9 * min(sd, IQR / 1.34) * n^(-1/5)`
    #[default]
    Silverman,
    Fixed(f64),
}

/// Gaussian-kernel density estimate over a fixed sample.
#[derive(Clone, Debug, PartialEq)]
pub struct KdeModel {
    samples: Vec<f64>,
    bandwidth: f64,
}

pub fn standard_normal_pdf(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * PI).sqrt()
}

impl KdeModel {
    /// Wraps samples and a bandwidth without fitting. Needs at least one
    /// sample; [`KdeModel::fit`] needs two.
    pub fn new(samples: Vec<f64>, bandwidth: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("kde needs at least one sample".into()));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("kde samples must be finite".into()));
        }
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::InvalidInput(format!(
                "bandwidth must be positive, got {bandwidth}"
            )));
        }
        Ok(KdeModel { samples, bandwidth })
    }

    pub fn fit(samples: &[f64], rule: Bandwidth) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "kde fit needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        let h = match rule {
            Bandwidth::Silverman => silverman_bandwidth(samples)?,
            Bandwidth::Fixed(h) => h,
        };
        Self::new(samples.to_vec(), h)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let sum: f64 = self
            .samples
            .iter()
            .map(|&xi| standard_normal_pdf((x - xi) / h))
            .sum();
        sum / (self.samples.len() as f64 * h)
    }

    /// Mean of the estimated law (the sample mean).
    pub fn mean(&self) -> f64 {
        mean(&self.samples)
    }

    /// Variance of the estimated law: population variance plus `h^2`.
    pub fn variance(&self) -> f64 {
        population_variance(&self.samples) + self.bandwidth * self.bandwidth
    }

    /// Draws by picking a sample uniformly and adding `N(0, h^2)` noise.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n)
            .map(|_| {
                let k = rng.random_range(0..self.samples.len());
                let z: f64 = StandardNormal.sample(rng);
                self.samples[k] + self.bandwidth * z
            })
            .collect()
    }

    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        self.sample_with(&mut rng_from_seed(seed), n)
    }
}

pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InvalidInput("silverman rule needs 2 samples".into()));
    }
    let sd = sample_variance(samples).sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr / 1.34),
        (true, false) => sd,
        (false, true) => iqr / 1.34,
        (false, false) => {
            return Err(Error::InvalidInput(
                "all samples identical: silverman bandwidth is zero".into(),
            ))
        }
    };
    Ok(0.9 * spread * (n as f64).powf(-0.2))
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub(crate) fn population_variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

fn sample_variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

/// Linear-interpolation quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}
