//! Periodogram and Fisher's exact g test for a hidden periodicity.

use serde::{Deserialize, Serialize};

use crate::dft;
use crate::error::{require_len, Error, Result};
use crate::series::TimeSeries;

/// Raw periodogram at the Fourier frequencies `k/n`, `k = 1..=n/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Periodogram {
    /// Cycles per sample.
    pub frequencies: Vec<f64>,
    pub ordinates: Vec<f64>,
    pub n: usize,
}

pub fn periodogram(series: &TimeSeries) -> Result<Periodogram> {
    periodogram_values(series.values())
}

/// `I(ω_k) = |Σ_t (x_t − x̄) e^{−i2πkt/n}|² / n` for `k = 1..=⌊n/2⌋`.
pub fn periodogram_values(values: &[f64]) -> Result<Periodogram> {
    let n = values.len();
    require_len("periodogram", n, 4)?;
    let mean = values.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let spectrum = dft::forward(&centered);
    let half = n / 2;
    let ordinates = (1..=half)
        .map(|k| spectrum[k].norm_sqr() / n as f64)
        .collect();
    let frequencies = (1..=half).map(|k| k as f64 / n as f64).collect();
    Ok(Periodogram {
        frequencies,
        ordinates,
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GTestResult {
    pub g: f64,
    pub p_value: f64,
    /// Index into `Periodogram::ordinates` (frequency `(peak_index + 1) / n`).
    pub peak_index: usize,
}

pub fn fisher_g_test(pg: &Periodogram) -> Result<GTestResult> {
    let m = pg.ordinates.len();
    require_len("fisher g test (ordinates)", m, 3)?;
    let total: f64 = pg.ordinates.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Domain(
            "degenerate periodogram: all ordinates are zero".into(),
        ));
    }
    let (peak_index, peak) = pg
        .ordinates
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty");
    let g = peak / total;
    Ok(GTestResult {
        g,
        p_value: fisher_g_pvalue(g, m),
        peak_index,
    })
}

/// Exact null tail `P(g > x)` for `m` ordinates:
/// `Σ_{j=1}^{⌊1/x⌋} (−1)^{j−1} C(m,j) (1 − jx)^{m−1}`.
///
/// Terms are built in log space. Once the largest term exceeds `1e4` the
/// alternating sum loses too many digits to cancellation; that only happens
/// for `x` near `1/m`, where `1 − p` is below `1e-5` for `m` up to 20000, so
/// 1 is returned there.
pub fn fisher_g_pvalue(x: f64, m: usize) -> f64 {
    if m == 0 || x.is_nan() {
        return f64::NAN;
    }
    let mf = m as f64;
    if x <= 1.0 / mf {
        return 1.0;
    }
    if x >= 1.0 {
        return 0.0;
    }
    let j_max = ((1.0 / x).floor() as usize).min(m);
    let mut log_binom = 0.0_f64;
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    let mut max_term = 0.0_f64;
    for j in 1..=j_max {
        log_binom += ((m - j + 1) as f64).ln() - (j as f64).ln();
        let base = 1.0 - j as f64 * x;
        if base <= 0.0 {
            break;
        }
        let term = (log_binom + (mf - 1.0) * base.ln()).exp();
        max_term = max_term.max(term);
        let signed = if j % 2 == 1 { term } else { -term };
        // Neumaier compensated summation
        let t = sum + signed;
        if sum.abs() >= signed.abs() {
            comp += (sum - t) + signed;
        } else {
            comp += (signed - t) + sum;
        }
        sum = t;
    }
    let p = if max_term > 1e4 { 1.0 } else { sum + comp };
    p.clamp(0.0, 1.0)
}

/// Bonferroni adjustment over `tests` simultaneous series.
pub fn bonferroni(p_value: f64, tests: usize) -> f64 {
    (p_value * tests.max(1) as f64).min(1.0)
}
