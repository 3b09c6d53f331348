//! Per-location demand densities and integer scenario generation.

mod kde;
mod parametric;
mod scenarios;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use kde::{silverman_bandwidth, standard_normal_pdf, Bandwidth, KdeModel};
pub use parametric::{Family, ParamModel};
pub use scenarios::ScenarioSet;

use crate::error::{Error, Result};
use crate::ingest::{read_series_csv, DemandSeries};
use crate::rng::{derive_seed, rng_from_seed};
use crate::ZoneId;

/// A fitted daily-demand law.
#[derive(Clone, Debug, PartialEq)]
pub enum DensityModel {
    Kde(KdeModel),
    Parametric(ParamModel),
    /// All mass on one value. Used for deterministic checks.
    PointMass(f64),
}

/// What to fit: the KDE or one of the parametric families.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FitSpec {
    Kde(Bandwidth),
    Parametric(Family),
}

impl DensityModel {
    pub fn fit(samples: &[f64], spec: FitSpec) -> Result<Self> {
        Ok(match spec {
            FitSpec::Kde(rule) => DensityModel::Kde(KdeModel::fit(samples, rule)?),
            FitSpec::Parametric(family) => DensityModel::Parametric(ParamModel::fit(samples, family)?),
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            DensityModel::Kde(_) => "kde",
            DensityModel::Parametric(m) => m.family().name(),
            DensityModel::PointMass(_) => "point_mass",
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            DensityModel::Kde(m) => m.mean(),
            DensityModel::Parametric(m) => m.mean(),
            DensityModel::PointMass(v) => *v,
        }
    }

    /// Density at `x`; `None` for a point mass.
    pub fn pdf(&self, x: f64) -> Option<f64> {
        match self {
            DensityModel::Kde(m) => Some(m.pdf(x)),
            DensityModel::Parametric(m) => Some(m.pdf(x)),
            DensityModel::PointMass(_) => None,
        }
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        match self {
            DensityModel::Kde(m) => m.sample_with(rng, n),
            DensityModel::Parametric(m) => m.sample_with(rng, n),
            DensityModel::PointMass(v) => vec![*v; n],
        }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        self.sample_with(&mut rng_from_seed(seed), n)
    }

    /// An interval holding practically all of the mass, for plotting grids.
    pub fn plot_range(&self) -> (f64, f64) {
        match self {
            DensityModel::Kde(m) => {
                let s = m.samples();
                let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo - 4.0 * m.bandwidth(), hi + 4.0 * m.bandwidth())
            }
            DensityModel::Parametric(m) => match *m {
                ParamModel::Gaussian { mean, variance } => {
                    (mean - 4.0 * variance.sqrt(), mean + 4.0 * variance.sqrt())
                }
                ParamModel::Laplace { location, scale } => {
                    (location - 8.0 * scale, location + 8.0 * scale)
                }
                ParamModel::Lognormal {
                    log_mean,
                    log_variance,
                } => (0.0, (log_mean + 4.0 * log_variance.sqrt()).exp()),
                ParamModel::Exponential { rate } => (0.0, 8.0 / rate),
            },
            DensityModel::PointMass(v) => (*v, *v),
        }
    }
}

/// Demand model of one location.
#[derive(Clone, Debug, PartialEq)]
pub struct LocationDensity {
    pub location: ZoneId,
    pub model: DensityModel,
}

/// Rounds half away from zero, then clamps at 0.
pub fn to_demand(v: f64) -> u64 {
    // `as` saturates; NaN maps to 0
    v.round().max(0.0) as u64
}

/// `n` equal-weight scenarios. Location `i` draws its column from its own
/// stream `derive_seed(seed, i)`, so columns do not depend on each other.
pub fn make_scenarios(densities: &[LocationDensity], n: usize, seed: u64) -> Result<ScenarioSet> {
    if densities.is_empty() {
        return Err(Error::InvalidInput("no location densities".into()));
    }
    if n == 0 {
        return Err(Error::InvalidInput("scenario count must be at least 1".into()));
    }
    let columns: Vec<Vec<u64>> = densities
        .iter()
        .enumerate()
        .map(|(i, d)| {
            d.model
                .sample(n, derive_seed(seed, i as u64))
                .into_iter()
                .map(to_demand)
                .collect()
        })
        .collect();
    let demands = (0..n).map(|s| columns.iter().map(|c| c[s]).collect()).collect();
    let locations = densities.iter().map(|d| d.location).collect();
    ScenarioSet::uniform(locations, demands)
}

/// Writes `location,x,pdf` on an evenly spaced grid of `points` values per
/// location. Point masses are skipped.
pub fn write_density_grid<W: Write>(densities: &[LocationDensity], points: usize, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["location", "x", "pdf"])?;
    let points = points.max(2);
    for d in densities {
        let (lo, hi) = d.model.plot_range();
        for k in 0..points {
            let x = lo + (hi - lo) * k as f64 / (points - 1) as f64;
            if let Some(p) = d.model.pdf(x) {
                w.write_record([d.location.to_string(), x.to_string(), p.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct DensityFile {
    #[serde(default, rename = "location")]
    locations: Vec<DensityEntry>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct DensityEntry {
    id: ZoneId,
    /// `kde`, `point_mass` or a parametric family name.
    family: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bandwidth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    samples_path: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    samples: Vec<f64>,
}

/// Serializes densities as TOML, one `[[location]]` table each. KDE samples
/// are referenced through `samples_path` (a demand-series CSV, relative to
/// the density file) when given, and written inline otherwise.
pub fn densities_to_toml(densities: &[LocationDensity], samples_path: Option<&str>) -> Result<String> {
    let locations = densities
        .iter()
        .map(|d| {
            let mut e = DensityEntry {
                id: d.location,
                family: d.model.kind().to_string(),
                ..Default::default()
            };
            match &d.model {
                DensityModel::Kde(m) => {
                    e.bandwidth = Some(m.bandwidth());
                    match samples_path {
                        Some(p) => e.samples_path = Some(p.to_string()),
                        None => e.samples = m.samples().to_vec(),
                    }
                }
                DensityModel::Parametric(m) => e.params = m.params(),
                DensityModel::PointMass(v) => e.params = vec![*v],
            }
            e
        })
        .collect();
    toml::to_string(&DensityFile { locations }).map_err(|e| Error::Format(e.to_string()))
}

/// Parses a density file. `base_dir` resolves relative `samples_path`s.
pub fn densities_from_toml(text: &str, base_dir: &Path) -> Result<Vec<LocationDensity>> {
    let file: DensityFile = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    if file.locations.is_empty() {
        return Err(Error::Format("density file lists no locations".into()));
    }
    let mut series_cache: BTreeMap<PathBuf, BTreeMap<ZoneId, DemandSeries>> = BTreeMap::new();
    file.locations
        .into_iter()
        .map(|e| {
            let model = match e.family.as_str() {
                "kde" => {
                    let samples = match &e.samples_path {
                        Some(p) => {
                            let path = base_dir.join(p);
                            if !series_cache.contains_key(&path) {
                                let f = std::fs::File::open(&path)?;
                                series_cache.insert(path.clone(), read_series_csv(f)?);
                            }
                            series_cache[&path]
                                .get(&e.id)
                                .ok_or_else(|| {
                                    Error::Format(format!(
                                        "{} has no series for location {}",
                                        path.display(),
                                        e.id
                                    ))
                                })?
                                .samples()
                        }
                        None => e.samples.clone(),
                    };
                    let bandwidth = match e.bandwidth {
                        Some(h) => h,
                        None => silverman_bandwidth(&samples)?,
                    };
                    DensityModel::Kde(KdeModel::new(samples, bandwidth)?)
                }
                "point_mass" => match e.params.as_slice() {
                    [v] if v.is_finite() => DensityModel::PointMass(*v),
                    _ => {
                        return Err(Error::Format(format!(
                            "point mass for location {} needs one finite parameter",
                            e.id
                        )))
                    }
                },
                other => DensityModel::Parametric(ParamModel::new(other.parse()?, &e.params)?),
            };
            Ok(LocationDensity {
                location: e.id,
                model,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(location: ZoneId, v: f64) -> LocationDensity {
        LocationDensity {
            location,
            model: DensityModel::PointMass(v),
        }
    }

    #[test]
    fn constant_model_rounds() {
        let set = make_scenarios(&[point(3, 4.4)], 3, 1).unwrap();
        assert_eq!(set.demands(), &[vec![4], vec![4], vec![4]]);
        assert!(set.probabilities().iter().all(|&p| p == 1.0 / 3.0));
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        assert_eq!(to_demand(2.5), 3);
        assert_eq!(to_demand(2.49), 2);
        assert_eq!(to_demand(-0.5), 0);
        assert_eq!(to_demand(f64::NAN), 0);
    }

    #[test]
    fn single_scenario_has_probability_one() {
        let set = make_scenarios(&[point(1, 2.0), point(2, 3.0)], 1, 5).unwrap();
        assert_eq!(set.probabilities(), &[1.0]);
    }

    #[test]
    fn negative_draws_clamp_to_zero() {
        let g = LocationDensity {
            location: 1,
            model: DensityModel::Parametric(ParamModel::new(Family::Gaussian, &[-10.0, 1.0]).unwrap()),
        };
        let set = make_scenarios(&[g], 100, 11).unwrap();
        assert!(set.demands().iter().all(|r| r[0] == 0));
    }

    #[test]
    fn toml_round_trip_inline() {
        let ds = vec![
            LocationDensity {
                location: 7,
                model: DensityModel::Kde(KdeModel::new(vec![1.0, 4.0, 9.0], 0.75).unwrap()),
            },
            LocationDensity {
                location: 9,
                model: DensityModel::Parametric(ParamModel::new(Family::Laplace, &[3.0, 0.5]).unwrap()),
            },
            point(11, 4.4),
        ];
        let text = densities_to_toml(&ds, None).unwrap();
        assert!(text.contains("[[location]]"));
        assert_eq!(densities_from_toml(&text, Path::new(".")).unwrap(), ds);
    }

    #[test]
    fn missing_bandwidth_uses_silverman() {
        let text = "[[location]]\nid = 1\nfamily = \"kde\"\nsamples = [1.0, 2.0, 3.0, 4.0]\n";
        let ds = densities_from_toml(text, Path::new(".")).unwrap();
        let DensityModel::Kde(m) = &ds[0].model else { panic!() };
        assert_eq!(m.bandwidth(), silverman_bandwidth(&[1.0, 2.0, 3.0, 4.0]).unwrap());
    }

    #[test]
    fn unknown_family_is_rejected() {
        let text = "[[location]]\nid = 1\nfamily = \"cauchy\"\nparams = [0.0, 1.0]\n";
        assert!(densities_from_toml(text, Path::new(".")).is_err());
    }

    #[test]
    fn grid_has_header_and_rows() {
        let ds = vec![LocationDensity {
            location: 5,
            model: DensityModel::Kde(KdeModel::new(vec![0.0], 1.0).unwrap()),
        }];
        let mut buf = Vec::new();
        write_density_grid(&ds, 11, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("location,x,pdf\n5,-4,"));
        assert_eq!(text.lines().count(), 12);
    }
}
