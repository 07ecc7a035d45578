use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use analogcast_core::experiment::parse_config;
use analogcast_core::{RunConfig, Series};

fn analogcast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_analogcast"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Deterministic wiggly series with its last 35 points copied from earlier.
fn write_fixture(path: &Path) {
    let mut v: Vec<f64> = (0..220)
        .map(|i| {
            let t = i as f64;
            100.0 + 5.0 * (t * 0.31).sin() + 3.0 * (t * 0.77).cos() + 0.02 * t
        })
        .collect();
    let n = v.len();
    let motif = v[60..95].to_vec();
    v[n - 35..].copy_from_slice(&motif);
    let s = Series::from_values("FIX", v).unwrap();
    s.write_csv(fs::File::create(path).unwrap(), "Adj Close")
        .unwrap();
}

#[test]
fn print_config_dumps_defaults() {
    let o = analogcast(&["--print-config"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(parse_config(&stdout(&o)).unwrap(), RunConfig::default());
}

#[test]
fn flags_override_defaults() {
    let o = analogcast(&[
        "--print-config",
        "--seed",
        "9",
        "--horizons",
        "5,10",
        "--measures",
        "tau,weak",
        "--arima-grid",
        "2,3",
        "--pop",
        "64",
        "--max-depth",
        "3",
        "--rolling",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cfg = parse_config(&stdout(&o)).unwrap();
    assert_eq!(cfg.seed, 9);
    assert_eq!(cfg.horizons, [5, 10]);
    assert_eq!(cfg.measures.len(), 2);
    assert_eq!((cfg.arima_max_p, cfg.arima_max_q), (2, 3));
    assert_eq!(cfg.gp.population_size, 64);
    assert_eq!((cfg.gp.max_depth, cfg.gp.init_max_depth), (3, 3));
    assert!(cfg.rolling);

    let o = analogcast(&["--print-config", "--arima-grid", "1"]);
    let cfg = parse_config(&stdout(&o)).unwrap();
    assert_eq!((cfg.arima_max_p, cfg.arima_max_q), (1, 1));
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let first = analogcast(&["--print-config", "--seed", "31", "--gens", "12"]);
    let path = dir.path().join("run.toml");
    fs::write(&path, stdout(&first)).unwrap();
    let second = analogcast(&["--print-config", "--config", path.to_str().unwrap()]);
    assert_eq!(stdout(&first), stdout(&second));
    let third = analogcast(&[
        "--print-config",
        "--config",
        path.to_str().unwrap(),
        "--seed",
        "1",
    ]);
    assert_eq!(
        parse_config(&stdout(&third)).unwrap().gp.max_generations,
        12
    );
}

#[test]
fn invalid_config_is_rejected() {
    let o = analogcast(&["--horizons", "0"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("config:"), "{}", stderr(&o));

    let o = analogcast(&["--measures", "weak"]);
    assert!(!o.status.success());

    let o = analogcast(&["--measures", "pearson"]);
    assert!(!o.status.success());
}

#[test]
fn missing_input_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.csv");
    let o = analogcast(&[
        "--input",
        dir.path().join("absent.csv").to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("load:"), "{}", stderr(&o));
    assert!(!report.exists());
}

#[test]
fn end_to_end_run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("FIX.csv");
    write_fixture(&input);
    let run = |tag: &str| {
        let report = dir.path().join(format!("report-{tag}.csv"));
        let paths = dir.path().join(format!("paths-{tag}.csv"));
        let o = analogcast(&[
            "--input",
            input.to_str().unwrap(),
            "--horizons",
            "5,10",
            "--pop",
            "80",
            "--gens",
            "20",
            "--arima-grid",
            "2",
            "--seed",
            "5",
            "--report",
            report.to_str().unwrap(),
            "--paths",
            paths.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains("wilcoxon:"));
        (fs::read(report).unwrap(), fs::read(paths).unwrap())
    };
    let (r1, p1) = run("a");
    let (r2, p2) = run("b");
    assert_eq!(r1, r2);
    assert_eq!(p1, p2);

    let report = String::from_utf8(r1).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines[0], "case,model,direction_mismatches,mape,rmse");
    assert_eq!(lines.len(), 1 + 4 + 1);
    assert!(lines[5].starts_with("wilcoxon,"));
    let paths = String::from_utf8(p1).unwrap();
    assert_eq!(paths.lines().count(), 1 + 5 + 10);
}
