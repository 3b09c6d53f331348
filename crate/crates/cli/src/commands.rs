//! One function per subcommand. Each returns its one-line summary.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use fleet_sp::benders::write_convergence_csv;
use fleet_sp::density::{
    densities_from_toml, densities_to_toml, make_scenarios, write_density_grid, DensityModel, FitSpec,
    LocationDensity, ScenarioSet,
};
use fleet_sp::ingest::{
    aggregate_daily_demand, align, parse_trips, read_series_csv, split_train_test, top_k_locations,
    write_series_csv, DemandSeries,
};
use fleet_sp::model::{read_allocation, sample_holding_costs, write_allocation, Instance};
use fleet_sp::saa::{evaluate_out_of_sample, run_saa, solve_scenarios, SaaConfig, SaaReport};
use fleet_sp::{Execution, ZoneId};
use log::info;

use crate::config::{fit_spec, RunConfig, DEFAULT_CAPACITY};
use crate::error::{CliError, CliResult, WithPath};

pub fn ingest(cfg: &RunConfig) -> CliResult<String> {
    let files = trip_files(&cfg.paths.trips)?;
    let columns = cfg.columns();
    let mut records = Vec::new();
    let mut skipped = 0;
    for path in &files {
        let parsed = parse_trips(BufReader::new(File::open(path).at(path)?), &columns).at(path)?;
        info!("{}: {} trips, {} rows skipped", path.display(), parsed.records.len(), parsed.skipped);
        records.extend(parsed.records);
        skipped += parsed.skipped;
    }
    let series = aggregate_daily_demand(&records)?;
    let locations = top_k_locations(&series, cfg.ingest.k)?;
    let cutoff = cfg.cutoff()?;
    let mut train = Vec::with_capacity(locations.len());
    let mut test = Vec::with_capacity(locations.len());
    for l in &locations {
        let (a, b) = split_train_test(&series[l], cutoff)?;
        train.push(a);
        test.push(b);
    }
    let e = &cfg.economics;
    let holding = sample_holding_costs(locations.len(), e.holding_mean, e.holding_variance, e.holding_seed)?;
    let capacity = e.capacity.unwrap_or(DEFAULT_CAPACITY);
    let instance = Instance::uniform(locations.clone(), e.revenue, holding, e.transfer, capacity)?;

    fs::create_dir_all(&cfg.paths.output_dir).at(&cfg.paths.output_dir)?;
    write_file(&cfg.output("train_series.csv"), |w| write_series_csv(&train, w))?;
    write_file(&cfg.output("test_series.csv"), |w| write_series_csv(&test, w))?;
    write_file(&cfg.output("instance.csv"), |w| instance.write_csv(w))?;
    Ok(format!(
        "ingested {} trips from {} files ({skipped} rows skipped); top {} locations, {} train and {} test days",
        records.len(),
        files.len(),
        locations.len(),
        train.first().map_or(0, |s| s.len()),
        test.first().map_or(0, |s| s.len()),
    ))
}

pub fn fit(cfg: &RunConfig) -> CliResult<String> {
    let instance = load_instance(cfg)?;
    let train_path = cfg.input(&cfg.paths.train_series, "train_series.csv");
    let series = load_series(&train_path)?;
    let densities = fit_densities(&instance.locations, &series, cfg.fit_spec()?)?;

    let out = cfg.output("densities.toml");
    fs::create_dir_all(&cfg.paths.output_dir).at(&cfg.paths.output_dir)?;
    let samples_path = samples_reference(&train_path, &cfg.paths.output_dir);
    let text = densities_to_toml(&densities, samples_path.as_deref())?;
    fs::write(&out, text).at(&out)?;
    write_file(&cfg.output("density_grid.csv"), |w| {
        write_density_grid(&densities, cfg.density.grid_points, w)
    })?;
    let points = densities
        .iter()
        .filter(|d| matches!(d.model, DensityModel::PointMass(_)))
        .count();
    Ok(format!(
        "fitted {} densities ({}), {points} constant series as point masses",
        densities.len(),
        cfg.density.family
    ))
}

pub fn sample(cfg: &RunConfig) -> CliResult<String> {
    let instance = load_instance(cfg)?;
    let densities = load_densities(cfg, &instance)?;
    let set = make_scenarios(&densities, cfg.saa.scenarios, cfg.saa.seed)?;
    fs::create_dir_all(&cfg.paths.output_dir).at(&cfg.paths.output_dir)?;
    write_file(&cfg.output("scenarios.csv"), |w| set.write_csv(w))?;
    Ok(format!(
        "sampled {} scenarios over {} locations (seed {})",
        set.len(),
        set.width(),
        cfg.saa.seed
    ))
}

pub fn solve(cfg: &RunConfig) -> CliResult<String> {
    let instance = load_instance(cfg)?;
    let path = cfg.input(&cfg.paths.scenarios, "scenarios.csv");
    let set = ScenarioSet::read_csv(BufReader::new(File::open(&path).at(&path)?)).at(&path)?;
    let set = reorder(set, &instance.locations).at(&path)?;
    let solved = solve_scenarios(&instance, &set, &cfg.solve_options())?;

    fs::create_dir_all(&cfg.paths.output_dir).at(&cfg.paths.output_dir)?;
    write_file(&cfg.output("solution.csv"), |w| solved.solution.write_x_csv(&instance.locations, w))?;
    if !solved.log.is_empty() {
        write_file(&cfg.output("convergence.csv"), |w| write_convergence_csv(&solved.log, w))?;
    }
    let status = if solved.converged { "" } else { ", iteration limit reached" };
    Ok(format!(
        "objective {} ({} over {} scenarios{status})",
        solved.solution.objective,
        cfg.solver.kind,
        set.len()
    ))
}

pub fn saa(cfg: &RunConfig) -> CliResult<String> {
    let instance = load_instance(cfg)?;
    let densities = load_densities(cfg, &instance)?;
    let report = run_saa(&instance, &densities, &saa_config(cfg))?;
    fs::create_dir_all(&cfg.paths.output_dir).at(&cfg.paths.output_dir)?;
    write_file(&cfg.output("saa_report.csv"), |w| report.write_csv(w))?;
    let deployed = report.deployed().ok_or_else(|| all_failed(&report))?;
    write_file(&cfg.output("solution.csv"), |w| {
        write_allocation(&instance.locations, &deployed.x, w)
    })?;
    Ok(format!(
        "mean objective {} (std dev {}) over {}/{} replications; deployed replication {}",
        report.mean,
        report.std_dev,
        report.included(),
        report.replications.len(),
        deployed.index
    ))
}

pub fn evaluate(
    cfg: &RunConfig,
    test: Option<PathBuf>,
    train: Option<PathBuf>,
    train_objective: Option<f64>,
) -> CliResult<String> {
    let instance = load_instance(cfg)?;
    let sol_path = cfg.input(&cfg.paths.solution, "solution.csv");
    let x = read_allocation(&instance.locations, File::open(&sol_path).at(&sol_path)?).at(&sol_path)?;
    let test_path = test.unwrap_or_else(|| cfg.input(&cfg.paths.test_series, "test_series.csv"));
    let test_set = load_demand(&test_path, &instance.locations)?;
    let options = cfg.model_options();
    let train_objective = match (train_objective, train) {
        (Some(v), _) => Some(v),
        (None, Some(path)) => {
            let set = load_demand(&path, &instance.locations)?;
            Some(evaluate_out_of_sample(&instance, &x, &set, options, None, Execution::Parallel)?.expected)
        }
        (None, None) => None,
    };
    let result = evaluate_out_of_sample(&instance, &x, &test_set, options, train_objective, Execution::Parallel)?;

    fs::create_dir_all(&cfg.paths.output_dir).at(&cfg.paths.output_dir)?;
    let out = cfg.output("evaluation.csv");
    write_file(&out, |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["scenario", "profit"])?;
        for (s, v) in result.per_scenario.iter().enumerate() {
            w.write_record([s.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    })?;
    let gap = match (train_objective, result.gap) {
        (Some(t), Some(g)) => format!(", train {t}, gap {g}"),
        _ => String::new(),
    };
    Ok(format!(
        "expected profit {} over {} test scenarios{gap}",
        result.expected,
        test_set.len()
    ))
}

/// Families in report order.
const COMPARED: [&str; 5] = ["kde", "gaussian", "laplace", "lognormal", "exponential"];

pub fn compare(cfg: &RunConfig) -> CliResult<String> {
    let instance = load_instance(cfg)?;
    let train_path = cfg.input(&cfg.paths.train_series, "train_series.csv");
    let series = load_series(&train_path)?;
    let config = saa_config(cfg);

    let mut rows = Vec::with_capacity(COMPARED.len());
    for family in COMPARED {
        let spec = fit_spec(family, cfg.density.bandwidth)?;
        let row = match fit_densities(&instance.locations, &series, spec) {
            Err(e) => {
                info!("{family}: fit failed: {e}");
                CompareRow::failed(family, config.replications, "fit_failed")
            }
            Ok(densities) => {
                let report = run_saa(&instance, &densities, &config)?;
                CompareRow::from_report(family, &report)
            }
        };
        info!("{family}: {} ({})", row.objective, row.status);
        rows.push(row);
    }

    fs::create_dir_all(&cfg.paths.output_dir).at(&cfg.paths.output_dir)?;
    write_file(&cfg.output("compare.csv"), |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["family", "objective", "std_dev", "included", "replications", "status"])?;
        for r in &rows {
            w.write_record([
                r.family.to_string(),
                r.objective.to_string(),
                r.std_dev.to_string(),
                r.included.to_string(),
                r.replications.to_string(),
                r.status.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    let summary: Vec<String> = rows.iter().map(|r| format!("{} {}", r.family, r.cell())).collect();
    Ok(format!("compared {} families: {}", rows.len(), summary.join(", ")))
}

struct CompareRow {
    family: &'static str,
    objective: f64,
    std_dev: f64,
    included: usize,
    replications: usize,
    status: &'static str,
}

impl CompareRow {
    fn failed(family: &'static str, replications: usize, status: &'static str) -> Self {
        CompareRow {
            family,
            objective: f64::NAN,
            std_dev: f64::NAN,
            included: 0,
            replications,
            status,
        }
    }

    /// Any replication infeasible marks the family infeasible; the mean
    /// over the rest is still reported.
    fn from_report(family: &'static str, report: &SaaReport) -> Self {
        let status = if report.any_infeasible() {
            "infeasible"
        } else if report.included() < report.replications.len() {
            "failed"
        } else {
            "ok"
        };
        CompareRow {
            family,
            objective: report.mean,
            std_dev: report.std_dev,
            included: report.included(),
            replications: report.replications.len(),
            status,
        }
    }

    fn cell(&self) -> String {
        match self.status {
            "ok" => self.objective.to_string(),
            s => s.to_string(),
        }
    }
}

fn saa_config(cfg: &RunConfig) -> SaaConfig {
    let mut solve = cfg.solve_options();
    // replications already fan out
    solve.exec = Execution::Sequential;
    SaaConfig {
        replications: cfg.saa.replications,
        scenarios: cfg.saa.scenarios,
        seed: cfg.saa.seed,
        solve,
        exec: Execution::Parallel,
    }
}

fn all_failed(report: &SaaReport) -> CliError {
    let first = report
        .replications
        .iter()
        .find_map(|r| r.failure.clone())
        .unwrap_or_default();
    CliError::Solver(format!(
        "all {} SAA replications failed, first: {first}",
        report.replications.len()
    ))
}

/// Fits every instance location in order. A series with a single distinct
/// value becomes a point mass under every family.
fn fit_densities(
    locations: &[ZoneId],
    series: &BTreeMap<ZoneId, DemandSeries>,
    spec: FitSpec,
) -> fleet_sp::Result<Vec<LocationDensity>> {
    locations
        .iter()
        .map(|&l| {
            let s = series.get(&l).ok_or_else(|| {
                fleet_sp::Error::InvalidInput(format!("training series has no location {l}"))
            })?;
            let samples = s.samples();
            let model = match samples.split_first() {
                None => return Err(fleet_sp::Error::InvalidInput(format!("location {l} has no training days"))),
                Some((&v, rest)) if rest.iter().all(|&r| r == v) => DensityModel::PointMass(v),
                _ => DensityModel::fit(&samples, spec).map_err(|e| match e {
                    fleet_sp::Error::InvalidInput(m) => {
                        fleet_sp::Error::InvalidInput(format!("location {l}: {m}"))
                    }
                    other => other,
                })?,
            };
            Ok(LocationDensity { location: l, model })
        })
        .collect()
}

/// How the density file points at the training series: by file name when
/// both live in the output directory, by absolute path otherwise.
fn samples_reference(train: &Path, out_dir: &Path) -> Option<String> {
    let same_dir = match (train.parent(), out_dir.canonicalize().ok()) {
        (Some(p), Some(out)) => p.canonicalize().ok().as_ref() == Some(&out),
        _ => false,
    };
    if same_dir {
        train.file_name().map(|n| n.to_string_lossy().into_owned())
    } else {
        train
            .canonicalize()
            .ok()
            .map(|p| p.to_string_lossy().into_owned())
    }
}

fn load_instance(cfg: &RunConfig) -> CliResult<Instance> {
    let path = cfg.input(&cfg.paths.instance, "instance.csv");
    let mut instance = Instance::read_csv(BufReader::new(File::open(&path).at(&path)?)).at(&path)?;
    if let Some(c) = cfg.economics.capacity {
        instance.capacity = c;
    }
    Ok(instance)
}

fn load_series(path: &Path) -> CliResult<BTreeMap<ZoneId, DemandSeries>> {
    read_series_csv(BufReader::new(File::open(path).at(path)?)).at(path)
}

fn load_densities(cfg: &RunConfig, instance: &Instance) -> CliResult<Vec<LocationDensity>> {
    let path = cfg.input(&cfg.paths.densities, "densities.toml");
    let text = fs::read_to_string(&path).at(&path)?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut by_id: BTreeMap<ZoneId, LocationDensity> = densities_from_toml(&text, base)
        .at(&path)?
        .into_iter()
        .map(|d| (d.location, d))
        .collect();
    instance
        .locations
        .iter()
        .map(|l| {
            by_id.remove(l).ok_or_else(|| CliError::File {
                path: path.clone(),
                source: fleet_sp::Error::Format(format!("no density for location {l}")),
            })
        })
        .collect()
}

/// A demand CSV: a `location,date,count` series (one scenario per day) or
/// a scenario file, told apart by the header.
fn load_demand(path: &Path, locations: &[ZoneId]) -> CliResult<ScenarioSet> {
    let mut text = String::new();
    File::open(path).at(path)?.read_to_string(&mut text).at(path)?;
    let header = text.lines().next().unwrap_or("");
    let is_series = header.split(',').any(|h| h.trim() == "date");
    if is_series {
        let series = read_series_csv(text.as_bytes()).at(path)?;
        let (_, rows) = align(&series, locations).at(path)?;
        ScenarioSet::uniform(locations.to_vec(), rows).at(path)
    } else {
        let set = ScenarioSet::read_csv(text.as_bytes()).at(path)?;
        reorder(set, locations).at(path)
    }
}

/// Permutes scenario columns into instance order.
fn reorder(set: ScenarioSet, locations: &[ZoneId]) -> fleet_sp::Result<ScenarioSet> {
    if set.locations() == locations {
        return Ok(set);
    }
    let idx = locations
        .iter()
        .map(|l| {
            set.locations().iter().position(|m| m == l).ok_or_else(|| {
                fleet_sp::Error::Dimension(format!("scenario file has no column for location {l}"))
            })
        })
        .collect::<fleet_sp::Result<Vec<_>>>()?;
    if set.width() != locations.len() {
        return Err(fleet_sp::Error::Dimension(format!(
            "scenario file has {} locations, instance has {}",
            set.width(),
            locations.len()
        )));
    }
    let demands = set
        .demands()
        .iter()
        .map(|d| idx.iter().map(|&k| d[k]).collect())
        .collect();
    ScenarioSet::new(locations.to_vec(), demands, set.probabilities().to_vec())
}

fn trip_files(inputs: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    if inputs.is_empty() {
        return Err(CliError::Config("no trip files given".into()));
    }
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .at(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        return Err(CliError::Config("trip directories contain no CSV files".into()));
    }
    Ok(files)
}

fn write_file<F>(path: &Path, write: F) -> CliResult<()>
where
    F: FnOnce(&mut BufWriter<File>) -> fleet_sp::Result<()>,
{
    let mut w = BufWriter::new(File::create(path).at(path)?);
    write(&mut w).at(path)?;
    w.flush().at(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use fleet_sp::density::Family;

    #[test]
    fn constant_series_become_point_masses() {
        let day = |d| chrono::NaiveDate::from_ymd_opt(2018, 1, d).unwrap();
        let mut series = BTreeMap::new();
        series.insert(3, DemandSeries::new(3, vec![day(1), day(2)], vec![7, 7]).unwrap());
        series.insert(5, DemandSeries::new(5, vec![day(1), day(2), day(3)], vec![1, 4, 2]).unwrap());
        for family in Family::ALL {
            let d = fit_densities(&[5, 3], &series, FitSpec::Parametric(family)).unwrap();
            assert_eq!(d[0].location, 5);
            assert_eq!(d[0].model.kind(), family.name());
            assert_eq!(d[1].model, DensityModel::PointMass(7.0));
        }
    }

    #[test]
    fn reorder_permutes_columns() {
        let set = ScenarioSet::uniform(vec![2, 1], vec![vec![20, 10], vec![21, 11]]).unwrap();
        let r = reorder(set, &[1, 2]).unwrap();
        assert_eq!(r.locations(), &[1, 2]);
        assert_eq!(r.demands(), &[vec![10, 20], vec![11, 21]]);
        let set = ScenarioSet::uniform(vec![2, 1], vec![vec![20, 10]]).unwrap();
        assert!(reorder(set, &[1, 3]).is_err());
    }
}
