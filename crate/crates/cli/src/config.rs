//! Run configuration: flags override the config file, which overrides the
//! built-in defaults.

use std::path::Path;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use perimean::harmonic::Truncation;
use perimean::trend::DEFAULT_LAMBDA;
use serde::{Deserialize, Serialize};

pub const DEFAULT_PATHS: usize = 10_000;
pub const DEFAULT_HORIZON: usize = 1095;
pub const DEFAULT_RMS_TOL: f64 = 1e-5;

/// Flat key/value config file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
    pub rms_tol: Option<f64>,
    pub fixed_count: Option<usize>,
    pub n_paths: Option<usize>,
    pub seed: Option<u64>,
    pub multipliers: Option<MultiplierSpec>,
    pub periods: Option<Vec<String>>,
    pub horizon: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MultiplierSpec {
    Grid(String),
    List(Vec<f64>),
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config file {}", path.display()))
    }
}

/// Values given on the command line; `None` means "not given".
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
    pub rms_tol: Option<f64>,
    pub fixed_count: Option<usize>,
    pub n_paths: Option<usize>,
    pub seed: Option<u64>,
    pub multipliers: Option<String>,
    pub periods: Option<Vec<String>>,
    pub horizon: Option<usize>,
}

/// The effective configuration, echoed into every JSON output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub lambda: f64,
    pub gamma: f64,
    pub truncation: Truncation,
    pub n_paths: usize,
    pub seed: u64,
    pub multipliers: Vec<f64>,
    pub periods: Vec<(NaiveDate, NaiveDate)>,
    pub horizon: usize,
}

impl RunConfig {
    pub fn resolve(file: FileConfig, flags: Overrides) -> Result<Self> {
        let truncation = match (flags.rms_tol, flags.fixed_count) {
            (Some(t), None) => Truncation::RmsTolerance(t),
            (None, Some(c)) => Truncation::FixedCount(c),
            (Some(_), Some(_)) => bail!("--rms-tol and --fixed-count are mutually exclusive"),
            (None, None) => match (file.rms_tol, file.fixed_count) {
                (Some(_), Some(_)) => bail!("config sets both rms_tol and fixed_count"),
                (None, Some(c)) => Truncation::FixedCount(c),
                (t, None) => Truncation::RmsTolerance(t.unwrap_or(DEFAULT_RMS_TOL)),
            },
        };
        match truncation {
            Truncation::RmsTolerance(t) if !(t > 0.0 && t.is_finite()) => {
                bail!("rms tolerance must be positive, got {t}")
            }
            Truncation::FixedCount(0) => bail!("fixed count must be at least 1"),
            _ => {}
        }

        let multipliers = match flags.multipliers {
            Some(s) => parse_multipliers(&s)?,
            None => match file.multipliers {
                Some(MultiplierSpec::Grid(s)) => parse_multipliers(&s)?,
                Some(MultiplierSpec::List(v)) => v,
                None => perimean::default_multipliers(),
            },
        };
        let periods = flags
            .periods
            .or(file.periods)
            .unwrap_or_default()
            .iter()
            .map(|p| parse_period(p))
            .collect::<Result<Vec<_>>>()?;

        let config = Self {
            lambda: flags.lambda.or(file.lambda).unwrap_or(DEFAULT_LAMBDA),
            gamma: flags.gamma.or(file.gamma).unwrap_or(0.0),
            truncation,
            n_paths: flags.n_paths.or(file.n_paths).unwrap_or(DEFAULT_PATHS),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            multipliers,
            periods,
            horizon: flags.horizon.or(file.horizon).unwrap_or(DEFAULT_HORIZON),
        };
        if !(config.lambda > 0.0 && config.lambda.is_finite()) {
            bail!("lambda must be positive, got {}", config.lambda);
        }
        if config.horizon == 0 {
            bail!("horizon must be at least one day");
        }
        Ok(config)
    }

    pub fn fit_config(&self) -> perimean::FitConfig {
        perimean::FitConfig {
            lambda: self.lambda,
            gamma: self.gamma,
            truncation: self.truncation,
        }
    }
}

/// `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_multipliers(s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    let out: Vec<f64> = if s.contains(':') {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .with_context(|| format!("bad multiplier grid `{s}`"))?;
        let [start, stop, step] = parts[..] else {
            bail!("multiplier grid `{s}` must be start:stop:step");
        };
        if step.is_nan() || step <= 0.0 || stop < start {
            bail!("multiplier grid `{s}` is empty");
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        // rounding keeps 0.5:2.6:0.1 on the same decimals as the default grid
        (0..=count)
            .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
            .collect()
    } else {
        s.split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .with_context(|| format!("bad multiplier list `{s}`"))?
    };
    if out.is_empty() {
        bail!("no multipliers in `{s}`");
    }
    Ok(out)
}

/// `YYYY-MM-DD..YYYY-MM-DD`, both ends inclusive.
pub fn parse_period(s: &str) -> Result<(NaiveDate, NaiveDate)> {
    let (a, b) = s
        .split_once("..")
        .with_context(|| format!("period `{s}` must look like 2007-02-05..2010-02-04"))?;
    let a: NaiveDate = a
        .trim()
        .parse()
        .with_context(|| format!("bad start date in `{s}`"))?;
    let b: NaiveDate = b
        .trim()
        .parse()
        .with_context(|| format!("bad end date in `{s}`"))?;
    if b < a {
        bail!("period `{s}` ends before it starts");
    }
    Ok((a, b))
}
