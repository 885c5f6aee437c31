//! Forecast bands around the fitted reversion level and their coverage.
//!
//! Horizon index `i` is the `i`-th day after the fitted period. It matches
//! ensemble column `i + 1` (column 0 holds the last observation) and
//! `μ̂̂(N + i) = μ̂̂(i)` by periodic extension.

use std::io::Write;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonic::{HarmonicModel, ModelFit};
use crate::series::TimeSeries;
use crate::simulate::{envelope, Envelope, SimulationEnsemble};

/// `0.5, 0.6, …, 2.6`.
pub fn default_multipliers() -> Vec<f64> {
    (5..=26).map(|i| i as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSet {
    pub multipliers: Vec<f64>,
    pub center: Vec<f64>,
    pub sigma_h: f64,
    /// `lower[j][i] = center[i] − multipliers[j]·sigma_h`.
    pub lower: Vec<Vec<f64>>,
    pub upper: Vec<Vec<f64>>,
}

impl BandSet {
    pub fn around(center: Vec<f64>, sigma_h: f64, multipliers: &[f64]) -> Result<Self> {
        if multipliers.is_empty() {
            return Err(Error::Config("no band multipliers given".into()));
        }
        if let Some(m) = multipliers.iter().find(|m| !(**m >= 0.0 && m.is_finite())) {
            return Err(Error::Config(format!(
                "band multiplier {m} must be non-negative"
            )));
        }
        if !(sigma_h >= 0.0 && sigma_h.is_finite()) {
            return Err(Error::Config(format!(
                "sigma_H must be non-negative, got {sigma_h}"
            )));
        }
        if center.is_empty() {
            return Err(Error::Size("band horizon must be at least one step".into()));
        }
        let lower = multipliers
            .iter()
            .map(|m| center.iter().map(|c| c - m * sigma_h).collect())
            .collect();
        let upper = multipliers
            .iter()
            .map(|m| center.iter().map(|c| c + m * sigma_h).collect())
            .collect();
        Ok(Self {
            multipliers: multipliers.to_vec(),
            center,
            sigma_h,
            lower,
            upper,
        })
    }

    pub fn horizon(&self) -> usize {
        self.center.len()
    }

    fn contains(&self, band: usize, i: usize, v: f64) -> bool {
        self.lower[band][i] <= v && v <= self.upper[band][i]
    }
}

/// Bands `μ̂̂(i) ± m·σ_H` for `i = 0..horizon_steps`.
pub fn build_bands(
    harmonics: &HarmonicModel,
    sigma_h: f64,
    horizon_steps: usize,
    multipliers: &[f64],
) -> Result<BandSet> {
    if horizon_steps == 0 {
        return Err(Error::Size("band horizon must be at least one step".into()));
    }
    BandSet::around(harmonics.path(0, horizon_steps), sigma_h, multipliers)
}

impl ModelFit {
    pub fn bands(&self, horizon_steps: usize, multipliers: &[f64]) -> Result<BandSet> {
        build_bands(&self.harmonics, self.sigma_h, horizon_steps, multipliers)
    }
}

/// Mean over paths of the fraction of forecast points inside each band.
pub fn ensemble_coverage(ensemble: &SimulationEnsemble, bands: &BandSet) -> Result<Vec<f64>> {
    let horizon = ensemble.config().n_steps;
    if horizon != bands.horizon() {
        return Err(Error::Size(format!(
            "ensemble horizon {horizon} differs from band horizon {}",
            bands.horizon()
        )));
    }
    // integer counts keep the reduction exact and partition-independent
    let counts = (0..ensemble.n_paths())
        .into_par_iter()
        .map(|p| count_inside(&ensemble.path(p)[1..], bands))
        .reduce(
            || vec![0u64; bands.multipliers.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let total = (ensemble.n_paths() * horizon) as f64;
    Ok(counts.into_iter().map(|c| c as f64 / total).collect())
}

fn count_inside(values: &[f64], bands: &BandSet) -> Vec<u64> {
    (0..bands.multipliers.len())
        .map(|b| {
            values
                .iter()
                .enumerate()
                .filter(|(i, v)| bands.contains(b, *i, **v))
                .count() as u64
        })
        .collect()
}

/// Fraction of held-out observations inside each band.
pub fn holdout_coverage(series: &TimeSeries, bands: &BandSet) -> Result<Vec<f64>> {
    if series.len() != bands.horizon() {
        return Err(Error::Size(format!(
            "holdout has {} observations but the forecast horizon is {}",
            series.len(),
            bands.horizon()
        )));
    }
    let n = series.len() as f64;
    Ok(count_inside(series.values(), bands)
        .into_iter()
        .map(|c| c as f64 / n)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub multiplier: f64,
    pub forecast: f64,
    pub holdout: Option<f64>,
    /// `holdout − forecast`.
    pub difference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageTable {
    pub rows: Vec<CoverageRow>,
}

impl CoverageTable {
    pub fn new(multipliers: &[f64], forecast: &[f64], holdout: Option<&[f64]>) -> Result<Self> {
        if forecast.len() != multipliers.len()
            || holdout.is_some_and(|h| h.len() != multipliers.len())
        {
            return Err(Error::Size("coverage columns differ in length".into()));
        }
        let rows = multipliers
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                let h = holdout.map(|h| h[i]);
                CoverageRow {
                    multiplier: m,
                    forecast: forecast[i],
                    holdout: h,
                    difference: h.map(|h| h - forecast[i]),
                }
            })
            .collect();
        Ok(Self { rows })
    }

    pub fn has_holdout(&self) -> bool {
        self.rows.first().is_some_and(|r| r.holdout.is_some())
    }

    /// `multiplier,forecast_pct[,holdout_pct,difference_pct]`, two decimals.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        if self.has_holdout() {
            w.write_record([
                "multiplier",
                "forecast_pct",
                "holdout_pct",
                "difference_pct",
            ])?;
        } else {
            w.write_record(["multiplier", "forecast_pct"])?;
        }
        for r in &self.rows {
            let mut rec = vec![format!("{:.1}", r.multiplier), pct(r.forecast)];
            if let (Some(h), Some(d)) = (r.holdout, r.difference) {
                rec.push(pct(h));
                rec.push(pct(d));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Percentage with two decimals; negative zero prints as `0.00`.
pub fn pct(fraction: f64) -> String {
    let s = format!("{:.2}", fraction * 100.0);
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastReport {
    /// Date of ensemble column 0 (last fitted observation).
    pub origin_date: NaiveDate,
    pub envelope: Envelope,
    pub bands: BandSet,
    pub coverage: CoverageTable,
}

pub fn forecast_report(
    fit: &ModelFit,
    ensemble: &SimulationEnsemble,
    holdout: Option<&TimeSeries>,
    multipliers: &[f64],
) -> Result<ForecastReport> {
    forecast_report_parts(
        &fit.harmonics,
        fit.sigma_h,
        fit.end_date,
        ensemble,
        holdout,
        multipliers,
    )
}

/// Same as [`forecast_report`] from the stored pieces of a fit.
pub fn forecast_report_parts(
    harmonics: &HarmonicModel,
    sigma_h: f64,
    origin_date: NaiveDate,
    ensemble: &SimulationEnsemble,
    holdout: Option<&TimeSeries>,
    multipliers: &[f64],
) -> Result<ForecastReport> {
    let bands = build_bands(harmonics, sigma_h, ensemble.config().n_steps, multipliers)?;
    let forecast = ensemble_coverage(ensemble, &bands)?;
    let held = holdout.map(|h| holdout_coverage(h, &bands)).transpose()?;
    let coverage = CoverageTable::new(multipliers, &forecast, held.as_deref())?;
    Ok(ForecastReport {
        origin_date,
        envelope: envelope(ensemble),
        bands,
        coverage,
    })
}

impl ForecastReport {
    pub fn date_at(&self, step: usize) -> NaiveDate {
        self.origin_date + Duration::days(step as i64)
    }

    /// `step,date,lower,upper` for every ensemble column.
    pub fn write_envelope_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["step", "date", "lower", "upper"])?;
        for (s, (lo, hi)) in self
            .envelope
            .lower
            .iter()
            .zip(&self.envelope.upper)
            .enumerate()
        {
            w.write_record([
                s.to_string(),
                self.date_at(s).to_string(),
                lo.to_string(),
                hi.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `step,date,center` then `lower_m,upper_m` per multiplier.
    pub fn write_bands_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["step".to_string(), "date".into(), "center".into()];
        for m in &self.bands.multipliers {
            header.push(format!("lower_{m:.1}"));
            header.push(format!("upper_{m:.1}"));
        }
        w.write_record(&header)?;
        for i in 0..self.bands.horizon() {
            let step = i + 1;
            let mut row = vec![
                step.to_string(),
                self.date_at(step).to_string(),
                self.bands.center[i].to_string(),
            ];
            for b in 0..self.bands.multipliers.len() {
                row.push(self.bands.lower[b][i].to_string());
                row.push(self.bands.upper[b][i].to_string());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `envelope.csv`, `bands.csv` and `coverage.csv` into `dir`.
    pub fn write_to_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.write_envelope_csv(std::fs::File::create(dir.join("envelope.csv"))?)?;
        self.write_bands_csv(std::fs::File::create(dir.join("bands.csv"))?)?;
        self.coverage
            .write_csv(std::fs::File::create(dir.join("coverage.csv"))?)?;
        Ok(())
    }
}
