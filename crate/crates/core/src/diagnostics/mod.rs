//! Diagnostic battery: periodicity, normality of differences, unit root and
//! variance ratio.

mod adf;
mod normality;
mod spectral;
mod variance_ratio;

pub use adf::{
    adf_test, adf_test_values, default_max_lag, mackinnon_critical_values, mackinnon_p_value,
    AdfResult, CriticalValues,
};
pub use normality::{jarque_bera, jarque_bera_values, JarqueBera};
pub use spectral::{
    bonferroni, fisher_g_pvalue, fisher_g_test, periodogram, periodogram_values, GTestResult,
    Periodogram,
};
pub use variance_ratio::{variance_ratio_test, variance_ratio_values, VRResult, DEFAULT_HORIZONS};

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::Result;
use crate::series::{describe, difference, DescriptiveStats, TimeSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsConfig {
    /// `None` uses `⌊12 (n/100)^{1/4}⌋`.
    pub adf_max_lag: Option<usize>,
    pub vr_horizons: Vec<usize>,
    /// Number of simultaneously tested periods for the Bonferroni adjustment
    /// of the g-test p-value. 1 disables the adjustment.
    pub g_test_family: usize,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            adf_max_lag: None,
            vr_horizons: DEFAULT_HORIZONS.to_vec(),
            g_test_family: 1,
        }
    }
}

/// Everything reported for one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub label: String,
    pub start_date: String,
    pub end_date: String,
    pub n: usize,
    pub levels: DescriptiveStats,
    pub differences: DescriptiveStats,
    pub g_test: GTestResult,
    /// Bonferroni-adjusted over `g_test_family` periods.
    pub g_test_p_adjusted: f64,
    pub g_test_family: usize,
    pub jarque_bera: JarqueBera,
    /// ADF on the levels.
    pub adf_levels: AdfResult,
    /// ADF on the first differences.
    pub adf: AdfResult,
    pub vr: Vec<VRResult>,
}

/// One serialized test: `{name, statistic, p_value, params}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestEntry {
    pub name: String,
    pub statistic: f64,
    pub p_value: f64,
    pub params: Value,
}

pub fn run_diagnostics(series: &TimeSeries, config: &DiagnosticsConfig) -> Result<TestReport> {
    let diffs = difference(series)?;
    let g = fisher_g_test(&periodogram(series)?)?;
    let family = config.g_test_family.max(1);
    Ok(TestReport {
        label: series.label().to_string(),
        start_date: series.start_date().to_string(),
        end_date: series.end_date().to_string(),
        n: series.len(),
        levels: describe(series)?,
        differences: describe(&diffs)?,
        g_test: g,
        g_test_p_adjusted: bonferroni(g.p_value, family),
        g_test_family: family,
        jarque_bera: jarque_bera(&diffs)?,
        adf_levels: adf_test(series, config.adf_max_lag)?,
        adf: adf_test(&diffs, config.adf_max_lag)?,
        vr: variance_ratio_test(series, &config.vr_horizons)?,
    })
}

fn two_sided_normal_p(z: f64) -> f64 {
    2.0 * (1.0 - Normal::standard().cdf(z.abs()))
}

impl TestReport {
    pub fn entries(&self) -> Vec<TestEntry> {
        let mut out = vec![
            TestEntry {
                name: "fisher_g".into(),
                statistic: self.g_test.g,
                p_value: self.g_test.p_value,
                params: json!({
                    "n": self.n,
                    "ordinates": self.n / 2,
                    "peak_index": self.g_test.peak_index,
                    "family_size": self.g_test_family,
                    "p_value_bonferroni": self.g_test_p_adjusted,
                }),
            },
            TestEntry {
                name: "jarque_bera".into(),
                statistic: self.jarque_bera.statistic,
                p_value: self.jarque_bera.p_value,
                params: json!({
                    "series": "difference",
                    "skewness": self.jarque_bera.skewness,
                    "kurtosis": self.jarque_bera.kurtosis,
                }),
            },
        ];
        for (name, series, adf) in [
            ("adf_levels", "levels", &self.adf_levels),
            ("adf_difference", "difference", &self.adf),
        ] {
            out.push(TestEntry {
                name: name.into(),
                statistic: adf.statistic,
                p_value: adf.p_value,
                params: json!({
                    "series": series,
                    "deterministic": "constant",
                    "lag": adf.lag,
                    "max_lag": adf.max_lag,
                    "nobs": adf.nobs,
                    "critical_values": adf.critical_values,
                }),
            });
        }
        for v in &self.vr {
            out.push(TestEntry {
                name: format!("variance_ratio_{}", v.k),
                statistic: v.vr,
                p_value: two_sided_normal_p(v.z_robust),
                params: json!({
                    "k": v.k,
                    "z_robust": v.z_robust,
                    "z_homo": v.z_homo,
                    "p_value_homo": two_sided_normal_p(v.z_homo),
                }),
            });
        }
        out
    }
}

/// Aligned text table with one column per period.
pub fn format_table(reports: &[TestReport]) -> String {
    let mut rows: Vec<(String, Vec<String>)> = Vec::new();
    let mut push = |name: &str, f: &dyn Fn(&TestReport) -> String| {
        rows.push((name.to_string(), reports.iter().map(f).collect()));
    };
    push("Period", &|r| format!("{}..{}", r.start_date, r.end_date));
    push("N", &|r| r.n.to_string());
    push("g-statistic", &|r| format!("{:.6}", r.g_test.g));
    push("g p-value", &|r| format!("{:.6}", r.g_test.p_value));
    push("g p-value (Bonf.)", &|r| {
        format!("{:.6}", r.g_test_p_adjusted)
    });
    push("Mean", &|r| format!("{:.4}", r.levels.mean));
    push("Std. dev.", &|r| format!("{:.4}", r.levels.std_dev));
    push("ADF (levels)", &|r| {
        format!("{:.4}", r.adf_levels.statistic)
    });
    push("Diff mean", &|r| format!("{:.4}", r.differences.mean));
    push("Diff std. dev.", &|r| {
        format!("{:.4}", r.differences.std_dev)
    });
    push("ADF (diff)", &|r| format!("{:.4}", r.adf.statistic));
    push("Jarque-Bera", &|r| {
        format!("{:.4}", r.jarque_bera.statistic)
    });
    push("JB p-value", &|r| format!("{:.4}", r.jarque_bera.p_value));
    let horizons: Vec<usize> = reports
        .first()
        .map(|r| r.vr.iter().map(|v| v.k).collect())
        .unwrap_or_default();
    for (i, k) in horizons.iter().enumerate() {
        push(&format!("VR({k})"), &|r| format!("{:.4}", r.vr[i].vr));
        push("  z robust", &|r| format!("{:.4}", r.vr[i].z_robust));
        push("  z homosk.", &|r| format!("{:.4}", r.vr[i].z_homo));
    }

    let name_w = rows
        .iter()
        .map(|(n, _)| n.chars().count())
        .max()
        .unwrap_or(0);
    let col_w: Vec<usize> = (0..reports.len())
        .map(|c| rows.iter().map(|(_, v)| v[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (name, vals) in &rows {
        let _ = write!(out, "{name:<name_w$}");
        for (v, w) in vals.iter().zip(&col_w) {
            let _ = write!(out, "  {v:>w$}");
        }
        out.push('\n');
    }
    out
}
