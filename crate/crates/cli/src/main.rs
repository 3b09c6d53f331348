//! `fleet-sp`: ingest trips, fit demand densities, sample scenarios, solve
//! the two-stage fleet allocation problem and score it out of sample.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fleet_sp::model::Variant;
use fleet_sp::saa::SolverKind;

use config::RunConfig;
use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "fleet-sp", version, about = "Car-sharing fleet rebalancing under demand uncertainty")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    overrides: Overrides,

    /// Log progress to stderr; repeat for more detail.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Aggregate trip records into train/test demand series and build the
    /// instance file.
    Ingest {
        /// Trip CSV files or directories; replaces `paths.trips`.
        trips: Vec<PathBuf>,
    },
    /// Fit per-location densities to the training series.
    Fit,
    /// Draw one scenario set from the fitted densities.
    Sample,
    /// Solve the two-stage problem over the scenario file.
    Solve,
    /// Run sample average approximation from the fitted densities.
    Saa,
    /// Score an allocation on held-out demand.
    Evaluate {
        /// Test demand: a series CSV or a scenario CSV.
        #[arg(long)]
        test: Option<PathBuf>,
        /// Training demand, scored with the same allocation for the gap.
        #[arg(long, conflicts_with = "train_objective")]
        train: Option<PathBuf>,
        #[arg(long)]
        train_objective: Option<f64>,
    },
    /// Run SAA under the KDE and each parametric family with shared seeds.
    Compare,
}

/// Flags that override the config file.
#[derive(Debug, Args)]
struct Overrides {
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    #[arg(short, long, global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    instance: Option<PathBuf>,
    #[arg(long, global = true)]
    train_series: Option<PathBuf>,
    #[arg(long, global = true)]
    test_series: Option<PathBuf>,
    #[arg(long, global = true)]
    densities: Option<PathBuf>,
    #[arg(long, global = true)]
    scenarios: Option<PathBuf>,
    #[arg(long, global = true)]
    solution: Option<PathBuf>,
    #[arg(short = 'k', long, global = true)]
    k: Option<usize>,
    /// First test day, `YYYY-MM-DD`.
    #[arg(long, global = true)]
    cutoff: Option<String>,
    /// Fleet size; overrides the instance file's capacity too.
    #[arg(long, global = true)]
    capacity: Option<u64>,
    /// `kde`, `gaussian`, `laplace`, `lognormal` or `exponential`.
    #[arg(long, global = true)]
    family: Option<String>,
    #[arg(long, global = true)]
    bandwidth: Option<f64>,
    #[arg(long, global = true, value_parser = parse_variant)]
    variant: Option<Variant>,
    #[arg(long, global = true)]
    require_full_service: bool,
    #[arg(long, global = true, value_parser = parse_solver)]
    solver: Option<SolverKind>,
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    #[arg(long, global = true)]
    multi_cut: bool,
    /// One aggregate recourse variable in the Benders master.
    #[arg(long, global = true)]
    single_theta: bool,
    #[arg(short = 'm', long, global = true)]
    replications: Option<usize>,
    #[arg(short = 'n', long, global = true)]
    scenario_count: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: fleet_sp::Error| e.to_string())
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    s.parse().map_err(|e: fleet_sp::Error| e.to_string())
}

impl Overrides {
    fn apply(self, cfg: &mut RunConfig) {
        let p = &mut cfg.paths;
        set(&mut p.output_dir, self.output_dir);
        for (slot, v) in [
            (&mut p.instance, self.instance),
            (&mut p.train_series, self.train_series),
            (&mut p.test_series, self.test_series),
            (&mut p.densities, self.densities),
            (&mut p.scenarios, self.scenarios),
            (&mut p.solution, self.solution),
        ] {
            if v.is_some() {
                *slot = v;
            }
        }
        set(&mut cfg.ingest.k, self.k);
        set(&mut cfg.ingest.cutoff, self.cutoff);
        if self.capacity.is_some() {
            cfg.economics.capacity = self.capacity;
        }
        set(&mut cfg.density.family, self.family);
        if self.bandwidth.is_some() {
            cfg.density.bandwidth = self.bandwidth;
        }
        set(&mut cfg.model.variant, self.variant);
        cfg.model.require_full_service |= self.require_full_service;
        set(&mut cfg.solver.kind, self.solver);
        if self.tolerance.is_some() {
            cfg.solver.tolerance = self.tolerance;
        }
        if self.max_iter.is_some() {
            cfg.solver.max_iter = self.max_iter;
        }
        cfg.solver.multi_cut |= self.multi_cut;
        cfg.solver.single_theta |= self.single_theta;
        set(&mut cfg.saa.replications, self.replications);
        set(&mut cfg.saa.scenarios, self.scenario_count);
        set(&mut cfg.saa.seed, self.seed);
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn threads_from_env() -> CliResult<()> {
    let Ok(raw) = std::env::var("FLEET_SP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("FLEET_SP_THREADS must be a positive integer, got `{raw}`")))?;
    if !fleet_sp::exec::init_thread_pool(n) {
        log::warn!("FLEET_SP_THREADS ignored: no thread pool in this build");
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<String> {
    let mut cfg = match &cli.overrides.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cli.overrides.apply(&mut cfg);
    cfg.validate()?;
    threads_from_env()?;
    match cli.command {
        Command::Ingest { trips } => {
            if !trips.is_empty() {
                cfg.paths.trips = trips;
            }
            commands::ingest(&cfg)
        }
        Command::Fit => commands::fit(&cfg),
        Command::Sample => commands::sample(&cfg),
        Command::Solve => commands::solve(&cfg),
        Command::Saa => commands::saa(&cfg),
        Command::Evaluate {
            test,
            train,
            train_objective,
        } => commands::evaluate(&cfg, test, train, train_objective.or(cfg.evaluate.train_objective)),
        Command::Compare => commands::compare(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
