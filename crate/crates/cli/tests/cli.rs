use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fleet_sp::density::ScenarioSet;
use fleet_sp::ingest::read_series_csv;
use fleet_sp::model::{read_allocation, Instance};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/two_locations")
}

fn config() -> PathBuf {
    fixture().join("config.toml")
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fleet-sp"))
        .args(args)
        .arg("--output-dir")
        .arg(out)
        .env_remove("FLEET_SP_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(args: &[&str], out: &Path) -> String {
    let o = run(args, out);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    let s = stdout(&o);
    assert_eq!(s.lines().count(), 1, "one summary line, got {s:?}");
    s
}

fn code(args: &[&str], out: &Path) -> i32 {
    run(args, out).status.code().expect("exit code")
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn solve_fixture_prints_800() {
    let cfg = config();
    for solver in ["benders", "extensive"] {
        let dir = tempfile::tempdir().unwrap();
        let line = ok(&["solve", "--config", cfg.to_str().unwrap(), "--solver", solver], dir.path());
        assert!(line.starts_with("objective 800 "), "{line}");
        // all ten cars sit where the demand is
        assert_eq!(read(&dir.path().join("solution.csv")), "location,x\n1,6\n2,4\n");
        assert_eq!(dir.path().join("convergence.csv").exists(), solver == "benders");
    }
}

#[test]
fn capacity_flag_overrides_the_instance_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config();
    // five cars serve five trips: 5 * 100 - 5 * 20
    let line = ok(&["solve", "-c", cfg.to_str().unwrap(), "--capacity", "5"], dir.path());
    assert!(line.starts_with("objective 400 "), "{line}");
}

#[test]
fn compare_with_point_masses_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let line = ok(&["compare", "-c", config().to_str().unwrap()], dir.path());
    assert!(line.starts_with("compared 5 families"), "{line}");
    let mut r = csv::Reader::from_path(dir.path().join("compare.csv")).unwrap();
    assert_eq!(
        r.headers().unwrap(),
        vec!["family", "objective", "std_dev", "included", "replications", "status"]
    );
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    let families: Vec<&str> = rows.iter().map(|r| &r[0]).collect();
    assert_eq!(families, ["kde", "gaussian", "laplace", "lognormal", "exponential"]);
    for row in &rows {
        assert_eq!(&row[1], &rows[0][1]);
        assert_eq!(&row[1], "800");
        assert_eq!(&row[2], "0");
        assert_eq!(&row[5], "ok");
    }
}

#[test]
fn compare_reports_infeasible_families() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config();
    let o = run(
        &["compare", "-c", cfg.to_str().unwrap(), "--capacity", "5", "--require-full-service"],
        dir.path(),
    );
    assert!(o.status.success());
    let text = read(&dir.path().join("compare.csv"));
    assert_eq!(text.lines().filter(|l| l.ends_with(",infeasible")).count(), 5, "{text}");
}

#[test]
fn evaluate_on_training_data_has_no_gap() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config();
    let cfg = cfg.to_str().unwrap();
    ok(&["solve", "-c", cfg], dir.path());
    let train = fixture().join("train_series.csv");
    let line = ok(&["evaluate", "-c", cfg, "--train", train.to_str().unwrap()], dir.path());
    assert!(line.contains("expected profit 800 "), "{line}");
    assert!(line.ends_with("gap 0\n"), "{line}");

    let line = ok(&["evaluate", "-c", cfg, "--train-objective", "800"], dir.path());
    assert!(line.ends_with("gap 0\n"), "{line}");
    let line = ok(&["evaluate", "-c", cfg, "--train-objective", "1000"], dir.path());
    assert!(line.ends_with("gap 0.2\n"), "{line}");

    let mut r = csv::Reader::from_path(dir.path().join("evaluation.csv")).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["scenario", "profit"]);
    let profits: Vec<f64> = r.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
    assert_eq!(profits, vec![800.0; 3]);
}

#[test]
fn evaluate_accepts_scenario_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config();
    let cfg = cfg.to_str().unwrap();
    ok(&["solve", "-c", cfg], dir.path());
    let sc = fixture().join("scenarios.csv");
    let sc = sc.to_str().unwrap();
    let line = ok(&["evaluate", "-c", cfg, "--test", sc, "--train", sc], dir.path());
    assert!(line.starts_with("expected profit 800 over 1 test scenarios"), "{line}");
    assert!(line.ends_with("gap 0\n"), "{line}");
}

#[test]
fn saa_deploys_a_replication() {
    let dir = tempfile::tempdir().unwrap();
    let line = ok(&["saa", "-c", config().to_str().unwrap()], dir.path());
    assert!(line.starts_with("mean objective 800 (std dev 0) over 3/3"), "{line}");
    let report = read(&dir.path().join("saa_report.csv"));
    assert_eq!(report.lines().next(), Some("replication,objective,time_s,converged"));
    assert_eq!(report.lines().last(), Some("mean,800,0,3/3"));
    assert_eq!(read(&dir.path().join("solution.csv")), "location,x\n1,6\n2,4\n");
}

#[test]
fn exit_codes_follow_the_failure_class() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let cfg = config();
    let cfg = cfg.to_str().unwrap();

    // config class
    assert_eq!(code(&["solve", "-c", "/nonexistent/config.toml"], out), 2);
    assert_eq!(code(&["solve", "--no-such-flag"], out), 2);
    assert_eq!(code(&["frobnicate"], out), 2);
    assert_eq!(code(&["solve", "-c", cfg, "--variant", "sideways"], out), 2);
    assert_eq!(code(&["saa", "-c", cfg, "-m", "0"], out), 2);
    let bad = out.join("bad.toml");
    fs::write(&bad, "[saa]\nreplications = \"many\"\n").unwrap();
    assert_eq!(code(&["solve", "-c", bad.to_str().unwrap()], out), 2);
    let unknown = out.join("unknown.toml");
    fs::write(&unknown, "[solver]\nkindd = \"benders\"\n").unwrap();
    assert_eq!(code(&["solve", "-c", unknown.to_str().unwrap()], out), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_fleet-sp"))
        .args(["solve", "-c", cfg, "-o"])
        .arg(out)
        .env("FLEET_SP_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));

    // i/o class
    assert_eq!(code(&["solve", "--instance", "/nonexistent/instance.csv", "-c", cfg], out), 3);
    let garbled = out.join("garbled.csv");
    fs::write(&garbled, "scenario,probability,loc_1,loc_2\n0,1,six,4\n").unwrap();
    assert_eq!(code(&["solve", "-c", cfg, "--scenarios", garbled.to_str().unwrap()], out), 3);
    let trips = out.join("trips.csv");
    fs::write(&trips, "when,where\n2018-01-01 10:00:00,1\n").unwrap();
    assert_eq!(code(&["ingest", trips.to_str().unwrap()], out), 3);

    // solver class
    for solver in ["extensive", "benders"] {
        let args = ["solve", "-c", cfg, "--solver", solver, "--capacity", "5", "--require-full-service"];
        assert_eq!(code(&args, out), 4);
    }
    assert_eq!(code(&["saa", "-c", cfg, "--capacity", "5", "--require-full-service"], out), 4);

    assert_eq!(code(&["--help"], out), 0);
}

/// Synthetic trip file: location `z` in 1..=4 gets `z + (day % 3)` pickups
/// a day over 40 days, plus one unparseable row.
fn write_trips(path: &Path) {
    let mut f = fs::File::create(path).unwrap();
    writeln!(f, "VendorID,lpep_pickup_datetime,PULocationID,DOLocationID").unwrap();
    let start = chrono::NaiveDate::from_ymd_opt(2018, 12, 1).unwrap();
    for day in 0..40u32 {
        let date = start + chrono::Days::new(day as u64);
        for z in 1..=4u32 {
            for k in 0..z + day % 3 {
                writeln!(f, "2,{} {:02}:{:02}:00,{z},{}", date, 6 + k % 12, k % 60, 5 - z).unwrap();
            }
        }
    }
    writeln!(f, "2,not a time,1,2").unwrap();
}

fn pipeline(dir: &Path) -> Vec<String> {
    let trips = dir.join("trips");
    fs::create_dir_all(&trips).unwrap();
    write_trips(&trips.join("green_2018.csv"));
    let cfg = dir.join("run.toml");
    fs::write(
        &cfg,
        "[paths]\ntrips = [\"trips\"]\noutput_dir = \"out\"\n\
         [ingest]\nk = 3\ncutoff = \"2019-01-01\"\n\
         [economics]\ncapacity = 40\nholding_seed = 4\n\
         [solver]\nkind = \"benders\"\n\
         [saa]\nreplications = 2\nscenarios = 6\nseed = 9\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let out = dir.join("out");
    let mut lines = Vec::new();
    for cmd in ["ingest", "fit", "sample", "solve", "saa", "evaluate", "compare"] {
        let o = Command::new(env!("CARGO_BIN_EXE_fleet-sp"))
            .args([cmd, "-c", cfg])
            .output()
            .unwrap();
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        lines.push(stdout(&o));
    }
    assert!(out.join("instance.csv").exists());
    lines
}

#[test]
fn pipeline_outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let lines = pipeline(dir.path());
    assert!(lines[0].starts_with("ingested "), "{}", lines[0]);
    assert!(lines[0].contains("(1 rows skipped)"), "{}", lines[0]);
    assert!(lines[0].contains("31 train and 9 test days"), "{}", lines[0]);
    let out = dir.path().join("out");

    // the three busiest zones, busiest first
    let instance = Instance::read_csv(fs::File::open(out.join("instance.csv")).unwrap()).unwrap();
    assert_eq!(instance.locations, vec![4, 3, 2]);
    assert_eq!(instance.capacity, 40);
    assert!(instance.revenue.iter().all(|&r| r == 100.0));
    assert!(instance.holding.iter().all(|&h| h >= 0.01));
    let mut again = Vec::new();
    instance.write_csv(&mut again).unwrap();
    assert_eq!(String::from_utf8(again).unwrap(), read(&out.join("instance.csv")));

    let train = read_series_csv(fs::File::open(out.join("train_series.csv")).unwrap()).unwrap();
    assert_eq!(train[&4].len(), 31);
    assert_eq!(train[&4].counts()[..3], [4, 5, 6]);
    let mut again = Vec::new();
    fleet_sp::ingest::write_series_csv(train.values(), &mut again).unwrap();
    let sorted_by_id = read_series_csv(again.as_slice()).unwrap();
    assert_eq!(sorted_by_id, train);

    let scenarios = ScenarioSet::read_csv(fs::File::open(out.join("scenarios.csv")).unwrap()).unwrap();
    assert_eq!(scenarios.len(), 6);
    assert_eq!(scenarios.locations(), &[4, 3, 2]);
    let mut again = Vec::new();
    scenarios.write_csv(&mut again).unwrap();
    assert_eq!(String::from_utf8(again).unwrap(), read(&out.join("scenarios.csv")));

    let x = read_allocation(&instance.locations, fs::File::open(out.join("solution.csv")).unwrap()).unwrap();
    assert!(x.iter().sum::<u64>() <= 40);

    let text = read(&out.join("densities.toml"));
    let densities = fleet_sp::density::densities_from_toml(&text, &out).unwrap();
    assert_eq!(densities.len(), 3);
    assert!(densities.iter().all(|d| d.model.kind() == "kde"));

    let mut grid = csv::Reader::from_path(out.join("density_grid.csv")).unwrap();
    assert_eq!(grid.headers().unwrap(), vec!["location", "x", "pdf"]);
    assert_eq!(grid.records().count(), 3 * 200);

    let compare = read(&out.join("compare.csv"));
    assert_eq!(compare.lines().count(), 6);
    assert!(lines[6].starts_with("compared 5 families"));
}

/// Strips the wall-clock column from a SAA report.
fn without_times(report: &str) -> String {
    report
        .lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            if f[0] != "mean" {
                f.remove(2);
            }
            f.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn reruns_are_bitwise_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let la = pipeline(a.path());
    let lb = pipeline(b.path());
    assert_eq!(la, lb);
    for name in [
        "train_series.csv",
        "test_series.csv",
        "instance.csv",
        "densities.toml",
        "density_grid.csv",
        "scenarios.csv",
        "solution.csv",
        "convergence.csv",
        "evaluation.csv",
        "compare.csv",
    ] {
        let (fa, fb) = (a.path().join("out").join(name), b.path().join("out").join(name));
        if name == "convergence.csv" {
            // timing columns differ between runs
            let strip = |p: &Path| -> Vec<String> {
                read(p)
                    .lines()
                    .map(|l| l.split(',').take(4).collect::<Vec<_>>().join(","))
                    .collect()
            };
            assert_eq!(strip(&fa), strip(&fb));
        } else {
            assert_eq!(fs::read(&fa).unwrap(), fs::read(&fb).unwrap(), "{name} differs");
        }
    }
    let ra = read(&a.path().join("out/saa_report.csv"));
    let rb = read(&b.path().join("out/saa_report.csv"));
    assert_eq!(without_times(&ra), without_times(&rb));
}
