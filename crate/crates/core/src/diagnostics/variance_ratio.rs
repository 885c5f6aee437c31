//! Lo–MacKinlay variance ratio test on a level series (log scale).
//!
//! Uses overlapping `k`-period increments with the unbiased variance
//! estimators, and reports both the homoskedastic and the
//! heteroskedasticity-consistent z statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// The horizons reported in the usual layout.
pub const DEFAULT_HORIZONS: [usize; 4] = [2, 4, 8, 16];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VRResult {
    pub k: usize,
    pub vr: f64,
    pub z_robust: f64,
    pub z_homo: f64,
}

pub fn variance_ratio_test(series: &TimeSeries, horizons: &[usize]) -> Result<Vec<VRResult>> {
    variance_ratio_values(series.values(), horizons)
}

pub fn variance_ratio_values(levels: &[f64], horizons: &[usize]) -> Result<Vec<VRResult>> {
    if horizons.is_empty() {
        return Err(Error::Config("no variance ratio horizons given".into()));
    }
    if let Some(&bad) = horizons.iter().find(|&&k| k < 2) {
        return Err(Error::Config(format!(
            "variance ratio horizon {bad} must be at least 2"
        )));
    }
    let k_max = *horizons.iter().max().expect("non-empty");
    if levels.len() < 10 * k_max {
        return Err(Error::Size(format!(
            "variance ratio at k = {k_max} needs at least {} observations, got {}",
            10 * k_max,
            levels.len()
        )));
    }

    // T increments from T + 1 levels
    let t = levels.len() - 1;
    let tf = t as f64;
    let mu = (levels[t] - levels[0]) / tf;
    let dev: Vec<f64> = levels.windows(2).map(|w| w[1] - w[0] - mu).collect();
    let dev2: Vec<f64> = dev.iter().map(|d| d * d).collect();
    let ss: f64 = dev2.iter().sum();
    let var_a = ss / (tf - 1.0);
    if !(var_a > 0.0) {
        return Err(Error::Domain(
            "variance ratio on a series with constant increments".into(),
        ));
    }

    horizons
        .iter()
        .map(|&k| {
            let kf = k as f64;
            let m = kf * (tf - kf + 1.0) * (1.0 - kf / tf);
            let var_c: f64 = (k..=t)
                .map(|i| {
                    let d = levels[i] - levels[i - k] - kf * mu;
                    d * d
                })
                .sum::<f64>()
                / m;
            let vr = var_c / var_a;

            let phi_homo = 2.0 * (2.0 * kf - 1.0) * (kf - 1.0) / (3.0 * kf * tf);
            let mut phi_robust = 0.0;
            for j in 1..k {
                let num: f64 = (j..t).map(|i| dev2[i] * dev2[i - j]).sum();
                let delta = num / (ss * ss);
                let w = 2.0 * (kf - j as f64) / kf;
                phi_robust += w * w * delta;
            }
            Ok(VRResult {
                k,
                vr,
                z_robust: (vr - 1.0) / phi_robust.sqrt(),
                z_homo: (vr - 1.0) / phi_homo.sqrt(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_walk(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut acc = 0.0;
        (0..n)
            .map(|_| {
                let e: f64 = StandardNormal.sample(&mut rng);
                acc += e;
                acc
            })
            .collect()
    }

    #[test]
    fn random_walk_vr2_near_one() {
        let ok = (0..200)
            .filter(|&s| {
                let r = variance_ratio_values(&random_walk(s, 2000), &[2]).unwrap();
                (0.9..=1.1).contains(&r[0].vr)
            })
            .count();
        assert!(ok >= 190, "{ok}/200");
    }

    #[test]
    fn iid_increments_average_to_one() {
        let mean = (0..500)
            .map(|s| variance_ratio_values(&random_walk(1000 + s, 5000), &[2]).unwrap()[0].vr)
            .sum::<f64>()
            / 500.0;
        assert!((0.98..=1.02).contains(&mean), "{mean}");
    }

    #[test]
    fn alternating_series_is_anti_persistent() {
        let mut prev = f64::INFINITY;
        for n in [100usize, 1000, 10000] {
            let x: Vec<f64> = (0..n)
                .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
                .collect();
            let vr = variance_ratio_values(&x, &[2]).unwrap()[0].vr;
            assert!(vr >= 0.0 && vr < prev);
            prev = vr;
        }
        assert!(prev < 1e-3, "{prev}");
    }

    #[test]
    fn homoskedastic_and_robust_agree_under_gaussian_null() {
        let r = variance_ratio_values(&random_walk(9, 4000), &DEFAULT_HORIZONS).unwrap();
        for v in &r {
            assert!(
                (v.z_homo - v.z_robust).abs() < 0.35 * v.z_homo.abs().max(1.0),
                "{v:?}"
            );
        }
    }

    #[test]
    fn mean_reversion_is_detected() {
        // AR(1) levels with coefficient 0.7
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut x = 0.0;
        let levels: Vec<f64> = (0..1096)
            .map(|_| {
                let e: f64 = StandardNormal.sample(&mut rng);
                x = 0.7 * x + e;
                x
            })
            .collect();
        let r = variance_ratio_values(&levels, &DEFAULT_HORIZONS).unwrap();
        let vr16 = r.iter().find(|v| v.k == 16).unwrap();
        assert!(vr16.vr < 0.5 && vr16.z_robust < -2.58, "{vr16:?}");
    }

    #[test]
    fn errors() {
        let x = random_walk(1, 100);
        assert!(matches!(
            variance_ratio_values(&x, &[16]),
            Err(Error::Size(_))
        ));
        assert!(matches!(
            variance_ratio_values(&x, &[1]),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            variance_ratio_values(&x, &[]),
            Err(Error::Config(_))
        ));
    }
}
