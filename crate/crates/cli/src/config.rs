//! Run configuration: a TOML file, then command-line overrides.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use fleet_sp::density::{Bandwidth, Family, FitSpec};
use fleet_sp::ingest::{TripColumns, DATE_FORMAT};
use fleet_sp::model::{ModelOptions, Variant};
use fleet_sp::saa::{SolveOptions, SolverKind};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub ingest: Ingest,
    pub economics: Economics,
    pub density: Density,
    pub model: Model,
    pub solver: Solver,
    pub saa: Saa,
    pub evaluate: Evaluate,
}

/// Inputs default to the files an upstream command writes into
/// `output_dir`.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Trip CSV files, or directories whose `*.csv` files are all read.
    pub trips: Vec<PathBuf>,
    pub output_dir: PathBuf,
    pub instance: Option<PathBuf>,
    pub train_series: Option<PathBuf>,
    pub test_series: Option<PathBuf>,
    pub densities: Option<PathBuf>,
    pub scenarios: Option<PathBuf>,
    pub solution: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Ingest {
    pub k: usize,
    /// First test day, `YYYY-MM-DD`.
    pub cutoff: String,
    pub pickup_datetime_column: String,
    pub pickup_location_column: String,
    pub dropoff_location_column: String,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Economics {
    pub revenue: f64,
    pub transfer: f64,
    /// Fleet size `C`. When set it also overrides the capacity stored in
    /// instance files.
    pub capacity: Option<u64>,
    pub holding_mean: f64,
    pub holding_variance: f64,
    pub holding_seed: u64,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Density {
    /// `kde` or a parametric family name.
    pub family: String,
    /// Fixed KDE bandwidth; Silverman's rule when absent.
    pub bandwidth: Option<f64>,
    pub grid_points: usize,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Model {
    pub variant: Variant,
    pub require_full_service: bool,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Solver {
    pub kind: SolverKind,
    pub tolerance: Option<f64>,
    pub max_iter: Option<usize>,
    pub multi_cut: bool,
    pub single_theta: bool,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Saa {
    pub replications: usize,
    pub scenarios: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Evaluate {
    pub train_objective: Option<f64>,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            trips: Vec::new(),
            output_dir: PathBuf::from("out"),
            instance: None,
            train_series: None,
            test_series: None,
            densities: None,
            scenarios: None,
            solution: None,
        }
    }
}

impl Default for Ingest {
    fn default() -> Self {
        let cols = TripColumns::default();
        Ingest {
            k: 20,
            cutoff: "2019-01-01".into(),
            pickup_datetime_column: cols.pickup_datetime,
            pickup_location_column: cols.pickup_location,
            dropoff_location_column: cols.dropoff_location,
        }
    }
}

impl Default for Economics {
    fn default() -> Self {
        Economics {
            revenue: 100.0,
            transfer: 5.0,
            capacity: None,
            holding_mean: 20.0,
            holding_variance: 9.0,
            holding_seed: 1,
        }
    }
}

impl Default for Density {
    fn default() -> Self {
        Density {
            family: "kde".into(),
            bandwidth: None,
            grid_points: 200,
        }
    }
}

impl Default for Saa {
    fn default() -> Self {
        Saa {
            replications: 10,
            scenarios: 20,
            seed: 1,
        }
    }
}

/// Fleet size used when building an instance without an explicit capacity.
pub const DEFAULT_CAPACITY: u64 = 15_000;

impl RunConfig {
    /// Parses a config file. Relative paths in it are taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.paths.rebase(base);
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let e = &self.economics;
        if !(e.revenue.is_finite() && e.revenue > 0.0) {
            return bad(format!("revenue must be positive, got {}", e.revenue));
        }
        if !(e.transfer.is_finite() && e.transfer >= 0.0) {
            return bad(format!("transfer cost must be nonnegative, got {}", e.transfer));
        }
        if e.capacity == Some(0) {
            return bad("capacity must be positive".into());
        }
        if !(e.holding_variance.is_finite() && e.holding_variance >= 0.0 && e.holding_mean.is_finite()) {
            return bad("holding cost mean and variance must be finite, variance nonnegative".into());
        }
        if self.ingest.k == 0 {
            return bad("k must be positive".into());
        }
        if self.saa.replications == 0 || self.saa.scenarios == 0 {
            return bad("SAA replications and scenarios must be positive".into());
        }
        if let Some(h) = self.density.bandwidth {
            if !(h.is_finite() && h > 0.0) {
                return bad(format!("bandwidth must be positive, got {h}"));
            }
        }
        if let Some(t) = self.solver.tolerance {
            if !(t.is_finite() && t > 0.0) {
                return bad(format!("tolerance must be positive, got {t}"));
            }
        }
        self.cutoff()?;
        self.fit_spec()?;
        Ok(())
    }

    pub fn cutoff(&self) -> CliResult<NaiveDate> {
        NaiveDate::parse_from_str(&self.ingest.cutoff, DATE_FORMAT)
            .map_err(|e| CliError::Config(format!("cutoff `{}`: {e}", self.ingest.cutoff)))
    }

    pub fn fit_spec(&self) -> CliResult<FitSpec> {
        fit_spec(&self.density.family, self.density.bandwidth)
    }

    pub fn columns(&self) -> TripColumns {
        TripColumns {
            pickup_datetime: self.ingest.pickup_datetime_column.clone(),
            pickup_location: self.ingest.pickup_location_column.clone(),
            dropoff_location: self.ingest.dropoff_location_column.clone(),
        }
    }

    pub fn model_options(&self) -> ModelOptions {
        ModelOptions {
            variant: self.model.variant,
            require_full_service: self.model.require_full_service,
        }
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            solver: self.solver.kind,
            model: self.model_options(),
            tolerance: self.solver.tolerance,
            max_iter: self.solver.max_iter,
            multi_cut: self.solver.multi_cut,
            single_theta: self.solver.single_theta,
            ..Default::default()
        }
    }

    /// `explicit`, or `name` inside the output directory.
    pub fn input(&self, explicit: &Option<PathBuf>, name: &str) -> PathBuf {
        explicit.clone().unwrap_or_else(|| self.output(name))
    }

    pub fn output(&self, name: &str) -> PathBuf {
        self.paths.output_dir.join(name)
    }
}

pub fn fit_spec(family: &str, bandwidth: Option<f64>) -> CliResult<FitSpec> {
    if family == "kde" {
        return Ok(FitSpec::Kde(bandwidth.map_or(Bandwidth::Silverman, Bandwidth::Fixed)));
    }
    family
        .parse::<Family>()
        .map(FitSpec::Parametric)
        .map_err(|e| CliError::Config(e.to_string()))
}

impl Paths {
    fn rebase(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.trips.iter_mut().for_each(join);
        join(&mut self.output_dir);
        for p in [
            &mut self.instance,
            &mut self.train_series,
            &mut self.test_series,
            &mut self.densities,
            &mut self.scenarios,
            &mut self.solution,
        ]
        .into_iter()
        .flatten()
        {
            join(p);
        }
    }
}
