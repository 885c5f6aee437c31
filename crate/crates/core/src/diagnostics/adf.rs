//! Augmented Dickey–Fuller unit-root test with a constant term.
//!
//! Regression: `Δy_t = c + β y_{t−1} + Σ_{j=1}^{p} γ_j Δy_{t−j} + e_t`.
//! The lag order `p` is picked by BIC over `0..=max_lag` on a common sample,
//! then the chosen model is refitted on all available observations.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalValues {
    pub one_pct: f64,
    pub five_pct: f64,
    pub ten_pct: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    /// t-statistic on the lagged level.
    pub statistic: f64,
    pub lag: usize,
    pub max_lag: usize,
    pub nobs: usize,
    /// Approximate MacKinnon p-value.
    pub p_value: f64,
    pub critical_values: CriticalValues,
}

/// `⌊12 (n/100)^{1/4}⌋`.
pub fn default_max_lag(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

pub fn adf_test(series: &TimeSeries, max_lag: Option<usize>) -> Result<AdfResult> {
    adf_test_values(series.values(), max_lag)
}

pub fn adf_test_values(y: &[f64], max_lag: Option<usize>) -> Result<AdfResult> {
    let n = y.len();
    let max_lag = max_lag.unwrap_or_else(|| default_max_lag(n));
    // common-sample size must exceed the parameter count of the largest model
    if n <= max_lag + 2 || n - 1 - max_lag <= max_lag + 2 {
        return Err(Error::Size(format!(
            "ADF with max_lag {max_lag} needs more than {} observations, got {n}",
            2 * max_lag + 3
        )));
    }
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();

    let mut best: Option<(f64, usize)> = None;
    for p in 0..=max_lag {
        let fit = fit_regression(y, &dy, p, max_lag)?;
        let k = (p + 2) as f64;
        let nobs = fit.nobs as f64;
        let bic = nobs * (fit.rss / nobs).ln() + k * nobs.ln();
        if best.is_none_or(|(b, _)| bic < b) {
            best = Some((bic, p));
        }
    }
    let lag = best.expect("at least one lag").1;
    let fit = fit_regression(y, &dy, lag, lag)?;
    let critical_values = mackinnon_critical_values(fit.nobs);
    Ok(AdfResult {
        statistic: fit.t_level,
        lag,
        max_lag,
        nobs: fit.nobs,
        p_value: mackinnon_p_value(fit.t_level),
        critical_values,
    })
}

struct Fit {
    t_level: f64,
    rss: f64,
    nobs: usize,
}

/// `start_lag` fixes the first usable `Δy` index so models with different
/// `p` can share a sample.
fn fit_regression(y: &[f64], dy: &[f64], p: usize, start_lag: usize) -> Result<Fit> {
    let first = start_lag; // index into dy
    let nobs = dy.len() - first;
    let ncols = p + 2;
    let mut x = DMatrix::<f64>::zeros(nobs, ncols);
    let mut rhs = DVector::<f64>::zeros(nobs);
    for (row, t) in (first..dy.len()).enumerate() {
        rhs[row] = dy[t];
        x[(row, 0)] = 1.0;
        x[(row, 1)] = y[t];
        for j in 1..=p {
            x[(row, 1 + j)] = dy[t - j];
        }
    }
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * &rhs;
    let chol = xtx
        .cholesky()
        .ok_or_else(|| Error::Numeric("singular ADF regression".into()))?;
    let beta = chol.solve(&xty);
    let resid = &rhs - &x * &beta;
    let rss = resid.norm_squared();
    let dof = nobs as f64 - ncols as f64;
    let s2 = rss / dof;
    let inv = chol.inverse();
    let se = (s2 * inv[(1, 1)]).sqrt();
    if !(se > 0.0) || !se.is_finite() {
        return Err(Error::Numeric("degenerate ADF standard error".into()));
    }
    Ok(Fit {
        t_level: beta[1] / se,
        rss,
        nobs,
    })
}

/// Response-surface critical values for the constant-only case.
pub fn mackinnon_critical_values(nobs: usize) -> CriticalValues {
    let t = nobs as f64;
    let surf = |b: [f64; 4]| b[0] + b[1] / t + b[2] / (t * t) + b[3] / (t * t * t);
    CriticalValues {
        one_pct: surf([-3.43035, -6.5393, -16.786, -79.433]),
        five_pct: surf([-2.86154, -2.8903, -4.234, -40.040]),
        ten_pct: surf([-2.56677, -1.5384, -2.809, 0.0]),
    }
}

/// Asymptotic p-value from MacKinnon's normal-quantile polynomials
/// (constant, one variable).
pub fn mackinnon_p_value(stat: f64) -> f64 {
    const TAU_MAX: f64 = 2.74;
    const TAU_MIN: f64 = -18.83;
    const TAU_STAR: f64 = -1.61;
    if stat > TAU_MAX {
        return 1.0;
    }
    if stat < TAU_MIN {
        return 0.0;
    }
    let z = if stat <= TAU_STAR {
        2.1659 + 1.4412 * stat + 0.038269 * stat * stat
    } else {
        1.7339 + 0.93202 * stat - 0.12745 * stat * stat - 0.010368 * stat.powi(3)
    };
    Normal::standard().cdf(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn ar1(seed: u64, n: usize, phi: f64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut y = Vec::with_capacity(n);
        let mut prev = 0.0;
        for _ in 0..n {
            let e: f64 = StandardNormal.sample(&mut rng);
            prev = phi * prev + e;
            y.push(prev);
        }
        y
    }

    #[test]
    fn random_walk_rarely_rejects() {
        let cv = mackinnon_critical_values(1000).five_pct;
        assert!((cv + 2.864).abs() < 0.01);
        let fails = (0..200)
            .filter(|&s| adf_test_values(&ar1(s, 1000, 1.0), None).unwrap().statistic > -2.86)
            .count();
        assert!(fails >= 180, "{fails}/200");
    }

    #[test]
    fn stationary_ar1_rejects() {
        let rejects = (0..200)
            .filter(|&s| {
                adf_test_values(&ar1(500 + s, 1000, 0.2), None)
                    .unwrap()
                    .statistic
                    < -2.86
            })
            .count();
        assert!(rejects >= 198, "{rejects}/200");
    }

    #[test]
    fn white_noise_selects_small_lag() {
        let r = adf_test_values(&ar1(1, 1000, 0.0), Some(10)).unwrap();
        assert!(r.lag <= 2);
        assert!(r.statistic < -20.0);
        assert!(r.p_value < 1e-3);
        assert_eq!(r.max_lag, 10);
    }

    #[test]
    fn p_value_matches_critical_values() {
        // asymptotic 5% and 1% points map back to their levels
        assert!((mackinnon_p_value(-2.86154) - 0.05).abs() < 0.003);
        assert!((mackinnon_p_value(-3.43035) - 0.01).abs() < 0.002);
        assert!(mackinnon_p_value(-38.76) == 0.0);
        assert!(mackinnon_p_value(3.0) == 1.0);
    }

    #[test]
    fn default_lag_rule() {
        assert_eq!(default_max_lag(100), 12);
        assert_eq!(default_max_lag(1000), 21);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            adf_test_values(&[1.0, 2.0, 3.0], Some(2)),
            Err(Error::Size(_))
        ));
        // constant series: lagged level is collinear with the intercept
        assert!(matches!(
            adf_test_values(&[5.0; 50], Some(1)),
            Err(Error::Numeric(_))
        ));
    }
}
