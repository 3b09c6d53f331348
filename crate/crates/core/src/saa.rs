//! Sample average approximation: `M` independent `N`-scenario problems,
//! their mean optimal value, and out-of-sample scoring of an allocation.

use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::benders::{self, BendersOptions};
use crate::density::{make_scenarios, LocationDensity, ScenarioSet};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::lp::MipOptions;
use crate::model::{build_extensive, evaluate_first_stage, Instance, ModelOptions, Solution};
use crate::rng::derive_seed;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    #[default]
    Extensive,
    Benders,
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "extensive" => Ok(SolverKind::Extensive),
            "benders" => Ok(SolverKind::Benders),
            other => Err(Error::InvalidInput(format!("unknown solver `{other}`"))),
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolverKind::Extensive => "extensive",
            SolverKind::Benders => "benders",
        })
    }
}

/// Solver settings shared by SAA replications and one-off solves.
#[derive(Clone, Debug, Default)]
pub struct SolveOptions {
    pub solver: SolverKind,
    pub model: ModelOptions,
    pub mip: MipOptions,
    /// Benders stopping tolerance, see [`BendersOptions::tolerance`].
    pub tolerance: Option<f64>,
    pub max_iter: Option<usize>,
    pub multi_cut: bool,
    /// Keep a single aggregate `θ` even when the recourse separates by
    /// location, see [`BendersOptions::split_locations`].
    pub single_theta: bool,
    pub exec: Execution,
}

impl SolveOptions {
    fn benders(&self) -> BendersOptions {
        let defaults = BendersOptions::default();
        BendersOptions {
            model: self.model,
            tolerance: self.tolerance,
            max_iter: self.max_iter.unwrap_or(defaults.max_iter),
            multi_cut: self.multi_cut,
            split_locations: !self.single_theta,
            exec: self.exec,
            mip: self.mip.clone(),
            ..defaults
        }
    }
}

/// Solved scenario problem. `converged` is `false` only for a Benders run
/// that hit its iteration limit.
#[derive(Clone, Debug)]
pub struct Solved {
    pub solution: Solution,
    pub converged: bool,
    pub log: Vec<benders::IterationLog>,
}

/// Solves the two-stage problem over `scenarios`. Identical scenario rows
/// are merged first, which leaves the optimum unchanged.
pub fn solve_scenarios(instance: &Instance, scenarios: &ScenarioSet, opts: &SolveOptions) -> Result<Solved> {
    let merged = scenarios.consolidated();
    match opts.solver {
        SolverKind::Extensive => {
            let solution = build_extensive(instance, &merged, opts.model)?.solve(&opts.mip)?;
            Ok(Solved {
                solution,
                converged: true,
                log: Vec::new(),
            })
        }
        SolverKind::Benders => {
            let res = benders::run(instance, &merged, &opts.benders())?;
            Ok(Solved {
                solution: res.solution,
                converged: res.converged,
                log: res.state.log,
            })
        }
    }
}

#[derive(Clone, Debug)]
pub struct SaaConfig {
    /// `M`
    pub replications: usize,
    /// `N`
    pub scenarios: usize,
    pub seed: u64,
    pub solve: SolveOptions,
    /// Fan-out over replications.
    pub exec: Execution,
}

impl SaaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 || self.scenarios == 0 {
            return Err(Error::InvalidInput(format!(
                "SAA needs M >= 1 and N >= 1, got M = {} and N = {}",
                self.replications, self.scenarios
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Replication {
    pub index: usize,
    pub seed: u64,
    /// `z_N^k`; NaN when the replication failed.
    pub objective: f64,
    /// `x̂^k`; empty when the replication failed.
    pub x: Vec<u64>,
    pub time_s: f64,
    pub converged: bool,
    /// Why the replication was excluded, if it was.
    pub failure: Option<String>,
    /// The failure was an infeasible problem rather than a numeric or
    /// convergence issue.
    pub infeasible: bool,
}

impl Replication {
    pub fn included(&self) -> bool {
        self.failure.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct SaaReport {
    pub replications: Vec<Replication>,
    /// `z̄_N` over included replications; NaN if none.
    pub mean: f64,
    /// Sample standard deviation of the included `z_N^k`; 0 for fewer than
    /// two.
    pub std_dev: f64,
}

impl SaaReport {
    fn assemble(replications: Vec<Replication>) -> SaaReport {
        let values: Vec<f64> = replications
            .iter()
            .filter(|r| r.included())
            .map(|r| r.objective)
            .collect();
        let n = values.len();
        let mean = if n == 0 {
            f64::NAN
        } else {
            values.iter().sum::<f64>() / n as f64
        };
        let std_dev = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        SaaReport {
            replications,
            mean,
            std_dev,
        }
    }

    pub fn included(&self) -> usize {
        self.replications.iter().filter(|r| r.included()).count()
    }

    pub fn any_infeasible(&self) -> bool {
        self.replications.iter().any(|r| r.infeasible)
    }

    /// Replication whose allocation is deployed: the lower median by
    /// objective among included ones, earlier replication on ties.
    pub fn deployed(&self) -> Option<&Replication> {
        let mut ok: Vec<&Replication> = self.replications.iter().filter(|r| r.included()).collect();
        ok.sort_by(|a, b| a.objective.total_cmp(&b.objective).then(a.index.cmp(&b.index)));
        ok.get(ok.len().saturating_sub(1) / 2).copied()
    }

    /// Writes `replication,objective,time_s,converged` rows and a closing
    /// `mean` row whose `time_s` column holds the standard deviation.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["replication", "objective", "time_s", "converged"])?;
        for r in &self.replications {
            w.write_record([
                r.index.to_string(),
                r.objective.to_string(),
                r.time_s.to_string(),
                r.included().to_string(),
            ])?;
        }
        w.write_record([
            "mean".to_string(),
            self.mean.to_string(),
            self.std_dev.to_string(),
            format!("{}/{}", self.included(), self.replications.len()),
        ])?;
        w.flush()?;
        Ok(())
    }
}

/// Child seed of replication `k`.
pub fn replication_seed(seed: u64, k: usize) -> u64 {
    derive_seed(seed, k as u64)
}

/// Samples and solves one replication from an explicit seed.
pub fn run_replication(
    instance: &Instance,
    densities: &[LocationDensity],
    n: usize,
    index: usize,
    seed: u64,
    opts: &SolveOptions,
) -> Replication {
    let start = Instant::now();
    let outcome = make_scenarios(densities, n, seed).and_then(|sc| solve_scenarios(instance, &sc, opts));
    let time_s = start.elapsed().as_secs_f64();
    let mut rep = Replication {
        index,
        seed,
        objective: f64::NAN,
        x: Vec::new(),
        time_s,
        converged: false,
        failure: None,
        infeasible: false,
    };
    match outcome {
        Ok(solved) if solved.converged => {
            rep.objective = solved.solution.objective;
            rep.x = solved.solution.x;
            rep.converged = true;
        }
        Ok(solved) => {
            rep.x = solved.solution.x;
            rep.failure = Some("iteration limit reached".into());
        }
        Err(e) => {
            rep.infeasible = matches!(e, Error::Infeasible(_));
            rep.failure = Some(e.to_string());
        }
    }
    if let Some(why) = &rep.failure {
        warn!("replication {index} excluded: {why}");
    }
    rep
}

pub fn run_saa(instance: &Instance, densities: &[LocationDensity], config: &SaaConfig) -> Result<SaaReport> {
    config.validate()?;
    instance.validate()?;
    if densities.len() != instance.len() {
        return Err(Error::Dimension(format!(
            "{} densities for {} locations",
            densities.len(),
            instance.len()
        )));
    }
    if let Some((d, l)) = densities
        .iter()
        .zip(&instance.locations)
        .find(|(d, l)| d.location != **l)
    {
        return Err(Error::InvalidInput(format!(
            "density for location {} where the instance has {l}",
            d.location
        )));
    }
    let reps = config.exec.map_range(config.replications, |k| {
        run_replication(
            instance,
            densities,
            config.scenarios,
            k,
            replication_seed(config.seed, k),
            &config.solve,
        )
    });
    Ok(SaaReport::assemble(reps))
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutOfSample {
    /// Mean profit over the test scenarios, holding cost included.
    pub expected: f64,
    /// Profit of each test scenario, holding cost included.
    pub per_scenario: Vec<f64>,
    /// `|train - test| / |train|` when a training objective was supplied.
    pub gap: Option<f64>,
}

/// Scores a fixed allocation on held-out scenarios (usually one per test
/// day, see [`ScenarioSet::uniform`]).
pub fn evaluate_out_of_sample(
    instance: &Instance,
    x: &[u64],
    test: &ScenarioSet,
    options: ModelOptions,
    train_objective: Option<f64>,
    exec: Execution,
) -> Result<OutOfSample> {
    let value = evaluate_first_stage(instance, x, test, options, exec)?;
    let holding = instance.holding_cost(x);
    let per_scenario = value.per_scenario.iter().map(|q| q - holding).collect();
    let gap = train_objective.map(|train| relative_gap(train, value.expected));
    Ok(OutOfSample {
        expected: value.expected,
        per_scenario,
        gap,
    })
}

/// `|train - test| / |train|`, with `0/0` read as no gap.
pub fn relative_gap(train: f64, test: f64) -> f64 {
    let diff = (train - test).abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / train.abs()
    }
}
