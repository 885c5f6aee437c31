use serde::{Deserialize, Serialize};

use crate::error::{require_len, Error, Result};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JarqueBera {
    pub statistic: f64,
    pub p_value: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

pub fn jarque_bera(series: &TimeSeries) -> Result<JarqueBera> {
    jarque_bera_values(series.values())
}

/// `JB = n/6 (S² + (K − 3)²/4)` with moment-based skewness and kurtosis;
/// the χ²(2) tail is `exp(−JB/2)`.
pub fn jarque_bera_values(values: &[f64]) -> Result<JarqueBera> {
    require_len("jarque-bera", values.len(), 8)?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    // rounding noise around a constant level counts as zero variance
    let floor = 1e-14 * mean.abs();
    if !(m2 > floor * floor) {
        return Err(Error::Domain(
            "jarque-bera on a series with zero variance".into(),
        ));
    }
    let skewness = m3 / m2.powf(1.5);
    let kurtosis = m4 / (m2 * m2);
    let statistic = n / 6.0 * (skewness * skewness + (kurtosis - 3.0).powi(2) / 4.0);
    Ok(JarqueBera {
        statistic,
        p_value: (-statistic / 2.0).exp(),
        skewness,
        kurtosis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn two_point_sample() {
        let x: Vec<f64> = (0..1000)
            .map(|i| if i % 2 == 0 { -1.0 } else { 1.0 })
            .collect();
        let jb = jarque_bera_values(&x).unwrap();
        assert!(jb.skewness.abs() < 1e-12);
        assert!((jb.kurtosis - 1.0).abs() < 1e-12);
        assert!((jb.statistic - 1000.0 / 6.0).abs() < 1e-9);
        assert!(jb.p_value < 1e-30);
    }

    #[test]
    fn reference_statistic_does_not_reject() {
        // 4.3062 < 5.99, the 5% χ²(2) critical value
        assert!((-4.3062f64 / 2.0).exp() > 0.05);
        assert!(((-5.991_464_547_107_979f64 / 2.0).exp() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn normal_samples_pass_at_nominal_rate() {
        let passes = (0..1000u64)
            .filter(|&seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let x: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect();
                jarque_bera_values(&x).unwrap().statistic < 5.99
            })
            .count();
        assert!((930..=970).contains(&passes), "{passes}/1000");
    }

    #[test]
    fn zero_variance_and_size() {
        assert!(matches!(
            jarque_bera_values(&[2.0; 20]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            jarque_bera_values(&[1.0, 2.0, 3.0]),
            Err(Error::Size(_))
        ));
    }

    #[test]
    fn affine_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..500).map(|_| StandardNormal.sample(&mut rng)).collect();
        let a = jarque_bera_values(&x).unwrap();
        for (s, b) in [(2.5, -7.0), (-0.3, 100.0), (1e3, 0.5)] {
            let y: Vec<f64> = x.iter().map(|v| s * v + b).collect();
            let c = jarque_bera_values(&y).unwrap();
            assert!(
                (a.statistic - c.statistic).abs() < 1e-10,
                "{} vs {}",
                a.statistic,
                c.statistic
            );
        }
    }
}
