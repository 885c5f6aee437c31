use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::{Duration, NaiveDate};
use perimean::diagnostics::{format_table, run_diagnostics, DiagnosticsConfig, TestEntry};
use perimean::forecast::{forecast_report_parts, pct};
use perimean::harmonic::{write_rms_csv, write_terms_csv, FitDocument};
use perimean::series::{
    aggregate_system_with, ingest_csv, log_transform, read_series_file, slice_period,
    write_series_csv, CsvSchema, GapPolicy, TimeSeries,
};
use perimean::simulate::{summarize, write_paths_csv, write_summary_csv};
use perimean::trend::write_trend_csv;
use perimean::{fit, generate, simulate_ensemble, FixtureSpec, SimulationConfig};
use serde::Serialize;
use serde_json::json;

use crate::config::{parse_period, FileConfig, Overrides, RunConfig};
use crate::{Cli, Command, EnsembleArgs, FitArgs, FixtureArgs, ForecastArgs, IngestArgs, Preset};
use crate::{SimulateArgs, TestArgs};

pub fn run(cli: Cli) -> Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Test(a) => {
            let flags = Overrides {
                periods: a.periods.clone(),
                ..Overrides::default()
            };
            test(a, RunConfig::resolve(file, flags)?)
        }
        Command::Fit(a) => {
            let flags = Overrides {
                lambda: a.lambda,
                gamma: a.gamma,
                rms_tol: a.rms_tol,
                fixed_count: a.fixed_count,
                ..Overrides::default()
            };
            fit_cmd(a, RunConfig::resolve(file, flags)?)
        }
        Command::Simulate(a) => {
            let config = RunConfig::resolve(file, a.ensemble.overrides())?;
            simulate(a, config)
        }
        Command::Forecast(a) => {
            let flags = Overrides {
                multipliers: a.multipliers.clone(),
                ..a.ensemble.overrides()
            };
            forecast(a, RunConfig::resolve(file, flags)?)
        }
        Command::Fixture(a) => {
            let flags = Overrides {
                seed: a.seed,
                ..Overrides::default()
            };
            fixture(a, RunConfig::resolve(file, flags)?)
        }
    }
}

/// Writes through a temporary sibling and renames, so a failed run never
/// leaves a half-written file under the final name.
fn write_atomic(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let file = File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    let mut w = BufWriter::new(file);
    let result = f(&mut w).and_then(|()| w.flush().map_err(Into::into));
    drop(w);
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(e.context(format!("writing {}", path.display())));
    }
    std::fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn read_series(path: &Path) -> Result<TimeSeries> {
    read_series_file(path).with_context(|| format!("reading series {}", path.display()))
}

fn ingest(a: IngestArgs) -> Result<()> {
    let schema = CsvSchema {
        date: a.date_column,
        region: a.region_column,
        reservoir: a.reservoir_column,
        river: a.river_column,
        discharge: a.discharge_column,
    };
    let mut records = Vec::new();
    for path in &a.input {
        records.extend(
            ingest_csv(path, &schema).with_context(|| format!("ingesting {}", path.display()))?,
        );
    }
    let policy = match a.max_gap_days {
        Some(max_gap_days) => GapPolicy::Interpolate { max_gap_days },
        None => GapPolicy::Fail,
    };
    let aggregate = aggregate_system_with(&records, policy)?;
    let series = if a.no_log {
        aggregate
    } else {
        log_transform(&aggregate)?
    };

    if let Some(dir) = a.output.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    write_atomic(&a.output, |w| Ok(write_series_csv(&series, w)?))?;
    let mut rivers: Vec<&str> = records.iter().map(|r| r.river.as_str()).collect();
    rivers.sort_unstable();
    rivers.dedup();
    let summary = json!({
        "config": {
            "schema": schema,
            "log_transform": !a.no_log,
            "max_gap_days": a.max_gap_days,
        },
        "records": records.len(),
        "rivers": rivers.len(),
        "n": series.len(),
        "start_date": series.start_date(),
        "end_date": series.end_date(),
    });
    write_json(&a.output.with_extension("json"), &summary)?;
    println!(
        "{} records from {} rivers -> {} days ({} to {})",
        records.len(),
        rivers.len(),
        series.len(),
        series.start_date(),
        series.end_date()
    );
    Ok(())
}

#[derive(Serialize)]
struct PeriodTests {
    start_date: String,
    end_date: String,
    n: usize,
    tests: Vec<TestEntry>,
}

fn test(a: TestArgs, config: RunConfig) -> Result<()> {
    let series = read_series(&a.input)?;
    let slices: Vec<TimeSeries> = if config.periods.is_empty() {
        vec![series]
    } else {
        config
            .periods
            .iter()
            .map(|&(s, e)| slice_period(&series, s, e))
            .collect::<perimean::Result<_>>()?
    };
    let diag = DiagnosticsConfig {
        adf_max_lag: a.max_lag,
        g_test_family: slices.len(),
        ..DiagnosticsConfig::default()
    };
    let reports = slices
        .iter()
        .map(|s| run_diagnostics(s, &diag))
        .collect::<perimean::Result<Vec<_>>>()?;

    ensure_dir(&a.output_dir)?;
    let periods: Vec<PeriodTests> = reports
        .iter()
        .map(|r| PeriodTests {
            start_date: r.start_date.clone(),
            end_date: r.end_date.clone(),
            n: r.n,
            tests: r.entries(),
        })
        .collect();
    write_json(
        &a.output_dir.join("tests.json"),
        &json!({ "config": config, "diagnostics": diag, "periods": periods }),
    )?;
    print!("{}", format_table(&reports));
    Ok(())
}

#[derive(Serialize)]
struct FitFile<'a> {
    config: &'a RunConfig,
    period: Option<(NaiveDate, NaiveDate)>,
    #[serde(flatten)]
    fit: FitDocument,
}

fn fit_cmd(a: FitArgs, config: RunConfig) -> Result<()> {
    let series = read_series(&a.input)?;
    let period = a.period.as_deref().map(parse_period).transpose()?;
    let series = match period {
        Some((s, e)) => slice_period(&series, s, e)?,
        None => series,
    };
    let model = fit(&series, &config.fit_config()).context("fitting the model")?;

    ensure_dir(&a.output_dir)?;
    let doc = FitDocument::from(&model);
    write_json(
        &a.output_dir.join("fit.json"),
        &FitFile {
            config: &config,
            period,
            fit: doc.clone(),
        },
    )?;
    write_atomic(&a.output_dir.join("terms.csv"), |w| {
        Ok(write_terms_csv(&model.harmonics, w)?)
    })?;
    write_atomic(&a.output_dir.join("trend.csv"), |w| {
        Ok(write_trend_csv(&series, &model.trend, w)?)
    })?;
    if a.dump_rms {
        write_atomic(&a.output_dir.join("rms.csv"), |w| {
            Ok(write_rms_csv(&model.rms_trace, w)?)
        })?;
    }
    println!(
        "{}..{}  alpha {:.4}  sigma {:.4}  sigma_H {:.4}  terms {}",
        doc.start_date,
        doc.end_date,
        doc.alpha,
        doc.sigma,
        doc.sigma_h,
        doc.terms.len()
    );
    Ok(())
}

fn load_fit(path: &Path) -> Result<FitDocument> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing fit file {}", path.display()))
}

/// Ensemble starting at the last fitted observation; column 0 is that day.
fn ensemble_config(doc: &FitDocument, config: &RunConfig) -> SimulationConfig {
    SimulationConfig {
        n_paths: config.n_paths,
        n_steps: config.horizon,
        dt_years: doc.dt_years,
        h0: doc.last_value,
        seed: config.seed,
        mu_offset: doc.n_samples - 1,
    }
}

fn simulate_from(
    args: &EnsembleArgs,
    config: &RunConfig,
) -> Result<(FitDocument, perimean::SimulationEnsemble)> {
    let doc = load_fit(&args.fit)?;
    let sim = ensemble_config(&doc, config);
    let ensemble = simulate_ensemble(&doc.harmonics()?, &doc.params()?, &sim)?;
    Ok((doc, ensemble))
}

fn simulate(a: SimulateArgs, config: RunConfig) -> Result<()> {
    let (doc, ensemble) = simulate_from(&a.ensemble, &config)?;
    ensure_dir(&a.output_dir)?;
    let summary = summarize(&ensemble);
    write_atomic(&a.output_dir.join("summary.csv"), |w| {
        Ok(write_summary_csv(&summary, doc.end_date, w)?)
    })?;
    if a.dump_paths {
        write_atomic(&a.output_dir.join("paths.csv"), |w| {
            Ok(write_paths_csv(&ensemble, w)?)
        })?;
    }
    write_json(
        &a.output_dir.join("simulation.json"),
        &json!({
            "config": config,
            "simulation": ensemble.config(),
            "origin_date": doc.end_date,
        }),
    )?;
    let last = summary.last().expect("at least one step");
    println!(
        "{} paths x {} steps; final mean {:.4}, range [{:.4}, {:.4}]",
        ensemble.n_paths(),
        config.horizon,
        last.mean,
        last.min,
        last.max
    );
    Ok(())
}

/// The `horizon` holdout days right after `end`, or a size error naming both
/// lengths when the file does not reach that far.
fn holdout_window(series: &TimeSeries, end: NaiveDate, horizon: usize) -> Result<TimeSeries> {
    let first = end + Duration::days(1);
    if series.start_date() > first || series.end_date() < first {
        bail!(
            "holdout covers {}..{} but the forecast starts on {first}",
            series.start_date(),
            series.end_date()
        );
    }
    let offset = (first - series.start_date()).num_days() as usize;
    let available = series.len() - offset;
    if available < horizon {
        return Err(perimean::Error::Size(format!(
            "holdout has {available} observations after {end} but the forecast horizon is {horizon}"
        ))
        .into());
    }
    Ok(slice_period(
        series,
        first,
        first + Duration::days(horizon as i64 - 1),
    )?)
}

fn forecast(a: ForecastArgs, config: RunConfig) -> Result<()> {
    let doc = load_fit(&a.ensemble.fit)?;
    let holdout = match &a.holdout {
        Some(p) => Some(holdout_window(
            &read_series(p)?,
            doc.end_date,
            config.horizon,
        )?),
        None => None,
    };
    let (doc, ensemble) = simulate_from(&a.ensemble, &config)?;
    let report = forecast_report_parts(
        &doc.harmonics()?,
        doc.sigma_h,
        doc.end_date,
        &ensemble,
        holdout.as_ref(),
        &config.multipliers,
    )?;

    ensure_dir(&a.output_dir)?;
    write_atomic(&a.output_dir.join("envelope.csv"), |w| {
        Ok(report.write_envelope_csv(w)?)
    })?;
    write_atomic(&a.output_dir.join("bands.csv"), |w| {
        Ok(report.write_bands_csv(w)?)
    })?;
    write_atomic(&a.output_dir.join("coverage.csv"), |w| {
        Ok(report.coverage.write_csv(w)?)
    })?;
    write_json(
        &a.output_dir.join("forecast.json"),
        &json!({
            "config": config,
            "simulation": ensemble.config(),
            "origin_date": doc.end_date,
            "sigma_H": doc.sigma_h,
            "coverage": report.coverage.rows,
        }),
    )?;

    let has_holdout = report.coverage.has_holdout();
    if has_holdout {
        println!(
            "{:>10}  {:>9}  {:>9}  {:>10}",
            "multiplier", "forecast", "holdout", "difference"
        );
    } else {
        println!("{:>10}  {:>9}", "multiplier", "forecast");
    }
    for r in &report.coverage.rows {
        print!("{:>10.1}  {:>8}%", r.multiplier, pct(r.forecast));
        if let (Some(h), Some(d)) = (r.holdout, r.difference) {
            print!("  {:>8}%  {:>9}%", pct(h), pct(d));
        }
        println!();
    }
    Ok(())
}

fn fixture(a: FixtureArgs, config: RunConfig) -> Result<()> {
    let mut spec = match a.preset {
        Preset::ThreeYear => FixtureSpec::three_year(config.seed),
        Preset::MultiHarmonic => FixtureSpec::multi_harmonic(config.seed),
    };
    if let Some(steps) = a.steps {
        spec.n_steps = steps;
    }
    let fx = generate(&spec)?;
    ensure_dir(&a.output_dir)?;
    write_atomic(&a.output_dir.join("discharge.csv"), |w| {
        Ok(fx.write_discharge_csv(w)?)
    })?;
    write_atomic(&a.output_dir.join("series.csv"), |w| {
        Ok(write_series_csv(&fx.series, w)?)
    })?;
    write_atomic(&a.output_dir.join("truth.json"), |w| {
        fx.write_truth_json(&mut *w)?;
        w.write_all(b"\n")?;
        Ok(())
    })?;
    println!(
        "{} values from {} to {}",
        fx.series.len(),
        fx.series.start_date(),
        fx.series.end_date()
    );
    Ok(())
}
