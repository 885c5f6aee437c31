use std::path::Path;
use std::process::{Command, Output};

fn perimean(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perimean"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = perimean(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(dir: &Path, args: &[&str]) -> String {
    let out = perimean(dir, args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn fixture(dir: &Path, steps: &str) {
    ok(
        dir,
        &[
            "fixture",
            "--seed",
            "4",
            "--steps",
            steps,
            "--output-dir",
            "fx",
        ],
    );
}

#[test]
fn full_pipeline_on_the_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fixture(d, "2189");
    ok(
        d,
        &[
            "ingest",
            "--input",
            "fx/discharge.csv",
            "--output",
            "series.csv",
        ],
    );
    let table = ok(
        d,
        &[
            "test",
            "--input",
            "series.csv",
            "--periods",
            "2007-02-05..2008-02-04,2008-02-05..2009-02-04,2009-02-05..2010-02-04,2010-02-05..2011-02-04",
            "--output-dir",
            "tests",
        ],
    );
    let g_row = table.lines().find(|l| l.starts_with("g p-value ")).unwrap();
    assert_eq!(g_row.split_whitespace().count(), 2 + 4);
    let tests = json(&d.join("tests/tests.json"));
    assert_eq!(tests["periods"].as_array().unwrap().len(), 4);
    let first = &tests["periods"][0]["tests"][0];
    assert_eq!(first["name"], "fisher_g");
    assert!(first["p_value"].as_f64().unwrap() < 0.01);

    ok(
        d,
        &[
            "fit",
            "--input",
            "series.csv",
            "--period",
            "2007-02-05..2010-02-04",
            "--dump-rms",
            "--output-dir",
            "fit",
        ],
    );
    let fit = json(&d.join("fit/fit.json"));
    for key in [
        "alpha",
        "sigma",
        "gamma",
        "sigma_H",
        "base_period_years",
        "terms",
        "rms_trace",
        "config",
    ] {
        assert!(fit.get(key).is_some(), "missing {key}");
    }
    let rms = std::fs::read_to_string(d.join("fit/rms.csv")).unwrap();
    assert!(rms.starts_with("l,k,rms\n1,0,"));

    let out = ok(
        d,
        &[
            "forecast",
            "--fit",
            "fit/fit.json",
            "--holdout",
            "series.csv",
            "--horizon",
            "1094",
            "--paths",
            "200",
            "--seed",
            "1",
            "--output-dir",
            "fc",
        ],
    );
    assert_eq!(out.lines().count(), 23);
    let coverage = std::fs::read_to_string(d.join("fc/coverage.csv")).unwrap();
    let lines: Vec<&str> = coverage.lines().collect();
    assert_eq!(
        lines[0],
        "multiplier,forecast_pct,holdout_pct,difference_pct"
    );
    assert_eq!(lines.len(), 23);
    assert!(lines[1].starts_with("0.5,"));
    assert!(lines[22].starts_with("2.6,"));
    let envelope = std::fs::read_to_string(d.join("fc/envelope.csv")).unwrap();
    assert_eq!(envelope.lines().count(), 1 + 1095);
    assert!(d.join("fc/bands.csv").exists());
    assert_eq!(json(&d.join("fc/forecast.json"))["config"]["n_paths"], 200);
}

#[test]
fn forecast_without_holdout_omits_its_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fixture(d, "1094");
    ok(
        d,
        &["fit", "--input", "fx/series.csv", "--output-dir", "fit"],
    );
    ok(
        d,
        &[
            "forecast",
            "--fit",
            "fit/fit.json",
            "--paths",
            "20",
            "--horizon",
            "30",
            "--output-dir",
            "fc",
        ],
    );
    let coverage = std::fs::read_to_string(d.join("fc/coverage.csv")).unwrap();
    assert!(coverage.starts_with("multiplier,forecast_pct\n"));
}

#[test]
fn short_holdout_names_both_lengths() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fixture(d, "1194");
    ok(
        d,
        &[
            "fit",
            "--input",
            "fx/series.csv",
            "--period",
            "2007-02-05..2010-02-04",
            "--output-dir",
            "fit",
        ],
    );
    let err = fails(
        d,
        &[
            "forecast",
            "--fit",
            "fit/fit.json",
            "--holdout",
            "fx/series.csv",
            "--paths",
            "20",
            "--output-dir",
            "fc",
        ],
    );
    assert!(err.contains("99") && err.contains("1095"), "{err}");
    assert!(!d.join("fc/coverage.csv").exists());
}

#[test]
fn constant_series_fails_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let mut csv = String::from("date,value\n");
    for day in 1..=28 {
        csv.push_str(&format!("2011-02-{day:02},7.0\n"));
    }
    std::fs::write(d.join("flat.csv"), csv).unwrap();
    let err = fails(d, &["fit", "--input", "flat.csv", "--output-dir", "fit"]);
    assert!(err.contains("variance"), "{err}");
    assert!(!d.join("fit/fit.json").exists());
}

#[test]
fn ingest_reports_missing_columns_and_honours_no_log() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(
        d.join("raw.csv"),
        "date,region,reservoir,river,discharge\n\
         2010-01-01,Antioquia,R1,A,100\n2010-01-01,Valle,R2,B,50\n\
         2010-01-02,Antioquia,R1,A,120\n2010-01-02,Valle,R2,B,30\n",
    )
    .unwrap();
    ok(
        d,
        &[
            "ingest",
            "--input",
            "raw.csv",
            "--output",
            "raw_series.csv",
            "--no-log",
        ],
    );
    let s = std::fs::read_to_string(d.join("raw_series.csv")).unwrap();
    assert_eq!(s, "date,value\n2010-01-01,150\n2010-01-02,150\n");
    ok(
        d,
        &["ingest", "--input", "raw.csv", "--output", "log_series.csv"],
    );
    let s = std::fs::read_to_string(d.join("log_series.csv")).unwrap();
    assert!(s.contains(&format!("2010-01-01,{}", 150f64.ln())));

    let err = fails(
        d,
        &[
            "ingest",
            "--input",
            "raw.csv",
            "--output",
            "x.csv",
            "--discharge-column",
            "flow",
        ],
    );
    assert!(err.contains("flow"), "{err}");
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fixture(d, "1094");
    std::fs::write(
        d.join("run.toml"),
        "lambda = 1600.0\nfixed_count = 5\nseed = 8\n",
    )
    .unwrap();
    ok(
        d,
        &[
            "--config",
            "run.toml",
            "fit",
            "--input",
            "fx/series.csv",
            "--lambda",
            "100000",
            "--output-dir",
            "fit",
        ],
    );
    let fit = json(&d.join("fit/fit.json"));
    assert_eq!(fit["config"]["lambda"], 100000.0);
    assert_eq!(fit["config"]["truncation"]["fixed_count"], 5);
    assert_eq!(fit["config"]["seed"], 8);
    assert_eq!(fit["config"]["n_paths"], 10000);
    assert_eq!(fit["terms"].as_array().unwrap().len(), 5);

    std::fs::write(d.join("bad.toml"), "lamda = 3\n").unwrap();
    fails(
        d,
        &[
            "--config",
            "bad.toml",
            "fit",
            "--input",
            "fx/series.csv",
            "--output-dir",
            "fit2",
        ],
    );
}

#[test]
fn simulate_writes_summary_and_paths() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fixture(d, "1094");
    ok(
        d,
        &["fit", "--input", "fx/series.csv", "--output-dir", "fit"],
    );
    ok(
        d,
        &[
            "simulate",
            "--fit",
            "fit/fit.json",
            "--paths",
            "6",
            "--horizon",
            "10",
            "--dump-paths",
            "--output-dir",
            "sim",
        ],
    );
    let summary = std::fs::read_to_string(d.join("sim/summary.csv")).unwrap();
    assert!(summary.starts_with("step,date,mean,min,max,q05,q95\n"));
    assert_eq!(summary.lines().count(), 12);
    let paths = std::fs::read_to_string(d.join("sim/paths.csv")).unwrap();
    assert_eq!(paths.lines().count(), 7);
    let sim = json(&d.join("sim/simulation.json"));
    assert_eq!(sim["simulation"]["mu_offset"], 1094);

    let err = fails(
        d,
        &[
            "simulate",
            "--fit",
            "fit/fit.json",
            "--paths",
            "5",
            "--output-dir",
            "sim2",
        ],
    );
    assert!(err.contains("even"), "{err}");
}
