//! Two-phase estimation of `dH = α(μ(t) − H)dt + σ H^γ dB` with a periodic
//! Fourier reversion level.
//!
//! Phase one regresses the Euler increments on the deviation from the HP
//! trend `m` (with drift correction `ṁ`) and recovers `μ̂ = m + ṁ/α̂`. The DFT
//! of `μ̂` is truncated to its dominant harmonics, and phase two re-runs the
//! closed-form estimator against that truncated `μ̂̂`.

use std::f64::consts::PI;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::dft;
use crate::error::{require_len, Error, Result};
use crate::series::{describe, TimeSeries};
use crate::trend::{estimate_trend, TrendEstimate, DEFAULT_LAMBDA};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SDEParams {
    /// Reversion rate, per year.
    pub alpha: f64,
    pub sigma: f64,
    /// Variance elasticity; 0 gives additive noise.
    pub gamma: f64,
}

impl SDEParams {
    pub fn new(alpha: f64, sigma: f64, gamma: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::Domain(format!(
                "sigma must be non-negative, got {sigma}"
            )));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::Domain(format!(
                "gamma must be non-negative, got {gamma}"
            )));
        }
        Ok(Self {
            alpha,
            sigma,
            gamma,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicTerm {
    pub k: usize,
    pub a: f64,
    pub phi: f64,
}

/// `μ̂̂_n = Σ a_k cos(2πkn/N + φ_k)`, periodic in `n` with period `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicModel {
    pub base_period_years: f64,
    pub terms: Vec<HarmonicTerm>,
    pub n_samples: usize,
}

impl HarmonicModel {
    pub fn new(base_period_years: f64, terms: Vec<HarmonicTerm>, n_samples: usize) -> Result<Self> {
        if n_samples == 0 {
            return Err(Error::Domain(
                "harmonic model needs a positive sample count".into(),
            ));
        }
        if !(base_period_years > 0.0) {
            return Err(Error::Domain("base period must be positive".into()));
        }
        let mut ks: Vec<usize> = terms.iter().map(|t| t.k).collect();
        ks.sort_unstable();
        if ks.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain("duplicate harmonic index".into()));
        }
        Ok(Self {
            base_period_years,
            terms,
            n_samples,
        })
    }

    pub fn evaluate(&self, n: usize) -> f64 {
        evaluate_mu(self, n)
    }

    /// `len` consecutive values starting at index `offset`.
    pub fn path(&self, offset: usize, len: usize) -> Vec<f64> {
        (offset..offset + len)
            .map(|n| evaluate_mu(self, n))
            .collect()
    }
}

pub fn evaluate_mu(model: &HarmonicModel, n: usize) -> f64 {
    let big_n = model.n_samples;
    let idx = (n % big_n) as f64;
    model
        .terms
        .iter()
        .map(|t| t.a * (2.0 * PI * t.k as f64 * idx / big_n as f64 + t.phi).cos())
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// Stop before the first term whose contribution `Σ term²/n` is below this.
    RmsTolerance(f64),
    /// Keep this many terms, `k = 0` included.
    FixedCount(usize),
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::RmsTolerance(1e-5)
    }
}

/// One entry of the truncation diagnostic: after `l` terms, the last added
/// harmonic `k` changed the reconstruction by `rms`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmsPoint {
    pub l: usize,
    pub k: usize,
    pub rms: f64,
}

fn closed_form(
    h: &[f64],
    level: &[f64],
    level_dot: Option<&[f64]>,
    dt: f64,
    gamma: f64,
) -> Result<SDEParams> {
    let n = h.len();
    require_len("estimator", n, 3)?;
    if level.len() != n || level_dot.is_some_and(|d| d.len() != n) {
        return Err(Error::Size("series and trend lengths differ".into()));
    }
    if gamma != 0.0 {
        if let Some(i) = h.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::Domain(format!(
                "gamma = {gamma} needs positive levels, index {i} is {}",
                h[i]
            )));
        }
    }
    let drift = |i: usize| level_dot.map_or(0.0, |d| d[i]);

    let mut num = 0.0;
    let mut den = 0.0;
    for i in 1..n {
        let prev = h[i - 1];
        let scale = prev.powf(gamma);
        let dev = level[i - 1] - prev;
        num += (h[i] - prev - drift(i - 1) * dt) * dev / (scale * scale);
        den += (dev / scale) * (dev / scale);
    }
    den *= dt;
    if !(den > 0.0) || !den.is_finite() || !num.is_finite() {
        return Err(Error::Numeric("degenerate estimator denominator".into()));
    }
    let alpha = num / den;
    if !(alpha > 0.0) {
        return Err(Error::Estimation(format!(
            "no mean reversion detected (alpha = {alpha})"
        )));
    }

    let mut ss = 0.0;
    for i in 1..n {
        let prev = h[i - 1];
        let r =
            (h[i] - prev - (alpha * (level[i - 1] - prev) + drift(i - 1)) * dt) / prev.powf(gamma);
        ss += r * r;
    }
    let sigma = (ss / ((n - 1) as f64 * dt)).sqrt();
    Ok(SDEParams {
        alpha,
        sigma,
        gamma,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phase1 {
    pub params: SDEParams,
    /// `m + ṁ/α̂`.
    pub mu_hat: Vec<f64>,
}

pub fn estimate_phase1(series: &TimeSeries, trend: &TrendEstimate, gamma: f64) -> Result<Phase1> {
    let params = closed_form(
        series.values(),
        &trend.m,
        Some(&trend.m_dot),
        series.dt_years(),
        gamma,
    )?;
    let mu_hat = trend
        .m
        .iter()
        .zip(&trend.m_dot)
        .map(|(m, md)| m + md / params.alpha)
        .collect();
    Ok(Phase1 { params, mu_hat })
}

/// Single-sided spectrum `k = 0..=L`, `L = ⌊N/2⌋`.
///
/// `a_0 = Re M̂_0 / N` is the signal mean, `a_k = 2|M̂_k|/N` for `0 < k < N/2`,
/// and the Nyquist term of an even `N` is `|M̂_{N/2}|/N`.
pub fn extract_harmonics(mu_hat: &[f64]) -> Result<Vec<HarmonicTerm>> {
    let n = mu_hat.len();
    require_len("harmonic extraction", n, 4)?;
    let spec = dft::forward(mu_hat);
    let nf = n as f64;
    let half = n / 2;
    let terms = (0..=half)
        .map(|k| {
            let c = spec[k];
            if k == 0 {
                return HarmonicTerm {
                    k,
                    a: c.re / nf,
                    phi: 0.0,
                };
            }
            let scale = if 2 * k == n { 1.0 } else { 2.0 };
            let mut phi = c.im.atan2(c.re);
            if phi <= -PI {
                phi = PI;
            }
            HarmonicTerm {
                k,
                a: scale * c.norm() / nf,
                phi,
            }
        })
        .collect();
    Ok(terms)
}

/// Mean square of a single term over one period.
fn term_rms(term: &HarmonicTerm, n_samples: usize) -> f64 {
    let nf = n_samples as f64;
    (0..n_samples)
        .map(|n| {
            let v = term.a * (2.0 * PI * term.k as f64 * n as f64 / nf + term.phi).cos();
            v * v
        })
        .sum::<f64>()
        / nf
}

/// Selects harmonics in decreasing order of their contribution, `k = 0` first.
///
/// Terms are ranked by amplitude; the unpaired Nyquist term is ranked by its
/// mean-square contribution, which is what the amplitude means for the paired
/// terms. With an RMS tolerance the term that falls below it is recorded in the
/// trace but not kept.
pub fn truncate_harmonics(
    spectrum: &[HarmonicTerm],
    n_samples: usize,
    base_period_years: f64,
    criterion: Truncation,
) -> Result<(HarmonicModel, Vec<RmsPoint>)> {
    if spectrum.is_empty() {
        return Err(Error::Size("empty spectrum".into()));
    }
    match criterion {
        Truncation::RmsTolerance(tol) if !(tol > 0.0) => {
            return Err(Error::Config(format!(
                "RMS tolerance must be positive, got {tol}"
            )))
        }
        Truncation::FixedCount(0) => {
            return Err(Error::Config(
                "fixed harmonic count must be at least 1".into(),
            ))
        }
        _ => {}
    }

    let rank_key = |t: &HarmonicTerm| {
        if 2 * t.k == n_samples {
            t.a * std::f64::consts::SQRT_2
        } else {
            t.a
        }
    };
    let mut ordered: Vec<HarmonicTerm> = spectrum.to_vec();
    ordered.sort_by(|x, y| match (x.k, y.k) {
        (0, 0) => std::cmp::Ordering::Equal,
        (0, _) => std::cmp::Ordering::Less,
        (_, 0) => std::cmp::Ordering::Greater,
        _ => rank_key(y).total_cmp(&rank_key(x)).then(x.k.cmp(&y.k)),
    });

    let mut selected = Vec::new();
    let mut trace = Vec::new();
    for term in ordered {
        if let Truncation::FixedCount(c) = criterion {
            if selected.len() == c {
                break;
            }
        }
        let rms = term_rms(&term, n_samples);
        trace.push(RmsPoint {
            l: selected.len() + 1,
            k: term.k,
            rms,
        });
        if let Truncation::RmsTolerance(tol) = criterion {
            if rms < tol {
                break;
            }
        }
        selected.push(term);
    }
    Ok((
        HarmonicModel::new(base_period_years, selected, n_samples)?,
        trace,
    ))
}

pub fn estimate_phase2(
    series: &TimeSeries,
    model: &HarmonicModel,
    gamma: f64,
) -> Result<SDEParams> {
    let mu = model.path(0, series.len());
    closed_form(series.values(), &mu, None, series.dt_years(), gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub lambda: f64,
    pub gamma: f64,
    pub truncation: Truncation,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
            gamma: 0.0,
            truncation: Truncation::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFit {
    pub phase1: SDEParams,
    pub phase2: SDEParams,
    pub trend: TrendEstimate,
    pub mu_hat: Vec<f64>,
    pub harmonics: HarmonicModel,
    pub rms_trace: Vec<RmsPoint>,
    /// Sample standard deviation of the fitted series.
    pub sigma_h: f64,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub dt_years: f64,
    pub last_value: f64,
}

pub fn fit(series: &TimeSeries, config: &FitConfig) -> Result<ModelFit> {
    let stats = describe(series)?;
    if stats.std_dev == 0.0 {
        return Err(Error::Estimation(
            "series has no variance; reversion rate is undefined".into(),
        ));
    }
    let trend = estimate_trend(series, config.lambda)?;
    let phase1 = estimate_phase1(series, &trend, config.gamma)?;
    let spectrum = extract_harmonics(&phase1.mu_hat)?;
    let n = series.len();
    let (harmonics, rms_trace) = truncate_harmonics(
        &spectrum,
        n,
        n as f64 * series.dt_years(),
        config.truncation,
    )?;
    let phase2 = estimate_phase2(series, &harmonics, config.gamma)?;
    Ok(ModelFit {
        phase1: phase1.params,
        phase2,
        trend,
        mu_hat: phase1.mu_hat,
        harmonics,
        rms_trace,
        sigma_h: stats.std_dev,
        start_date: series.start_date(),
        end_date: series.end_date(),
        dt_years: series.dt_years(),
        last_value: series.last(),
    })
}

/// Serialized form of a [`ModelFit`]. The top-level `alpha`/`sigma` are the
/// re-estimated (phase two) values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDocument {
    pub alpha: f64,
    pub sigma: f64,
    pub gamma: f64,
    #[serde(rename = "sigma_H")]
    pub sigma_h: f64,
    pub base_period_years: f64,
    pub terms: Vec<HarmonicTerm>,
    pub rms_trace: Vec<RmsPoint>,
    pub phase1: SDEParams,
    pub n_samples: usize,
    pub dt_years: f64,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub last_value: f64,
}

impl From<&ModelFit> for FitDocument {
    fn from(f: &ModelFit) -> Self {
        Self {
            alpha: f.phase2.alpha,
            sigma: f.phase2.sigma,
            gamma: f.phase2.gamma,
            sigma_h: f.sigma_h,
            base_period_years: f.harmonics.base_period_years,
            terms: f.harmonics.terms.clone(),
            rms_trace: f.rms_trace.clone(),
            phase1: f.phase1,
            n_samples: f.harmonics.n_samples,
            dt_years: f.dt_years,
            start_date: f.start_date,
            end_date: f.end_date,
            last_value: f.last_value,
        }
    }
}

impl FitDocument {
    pub fn params(&self) -> Result<SDEParams> {
        SDEParams::new(self.alpha, self.sigma, self.gamma)
    }

    pub fn harmonics(&self) -> Result<HarmonicModel> {
        HarmonicModel::new(self.base_period_years, self.terms.clone(), self.n_samples)
    }
}

/// `k,a_k,phi_k` rows in increasing `k`.
pub fn write_terms_csv<W: std::io::Write>(model: &HarmonicModel, writer: W) -> Result<()> {
    let mut terms = model.terms.clone();
    terms.sort_by_key(|t| t.k);
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["k", "a_k", "phi_k"])?;
    for t in terms {
        w.write_record([t.k.to_string(), t.a.to_string(), t.phi.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rms_csv<W: std::io::Write>(trace: &[RmsPoint], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["l", "k", "rms"])?;
    for p in trace {
        w.write_record([p.l.to_string(), p.k.to_string(), p.rms.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
