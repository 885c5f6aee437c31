//! Hodrick–Prescott trend and its time derivative.

use serde::{Deserialize, Serialize};

use crate::error::{require_len, Error, Result};
use crate::series::TimeSeries;

/// Smoothing parameter used for daily data.
pub const DEFAULT_LAMBDA: f64 = 40_000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendEstimate {
    pub m: Vec<f64>,
    /// Per year.
    pub m_dot: Vec<f64>,
    pub lambda: f64,
}

/// Symmetric positive-definite matrix with bandwidth 2, factored as `L D Lᵀ`.
#[derive(Debug, Clone)]
pub struct Pentadiagonal {
    diag: Vec<f64>,
    off1: Vec<f64>,
    off2: Vec<f64>,
}

impl Pentadiagonal {
    /// `I + λ DᵀD` with `D` the `(n−2) × n` second-difference operator.
    pub fn hp_system(n: usize, lambda: f64) -> Self {
        let mut diag = vec![1.0; n];
        let mut off1 = vec![0.0; n.saturating_sub(1)];
        let mut off2 = vec![0.0; n.saturating_sub(2)];
        const ROW: [f64; 3] = [1.0, -2.0, 1.0];
        for r in 0..n.saturating_sub(2) {
            for (a, &ra) in ROW.iter().enumerate() {
                diag[r + a] += lambda * ra * ra;
                for (b, &rb) in ROW.iter().enumerate().skip(a + 1) {
                    let v = lambda * ra * rb;
                    match b - a {
                        1 => off1[r + a] += v,
                        _ => off2[r + a] += v,
                    }
                }
            }
        }
        Self { diag, off1, off2 }
    }

    /// `I/λ + D Dᵀ`, the `(n−2) × (n−2)` system behind the difference form
    /// `m = x − Dᵀ (I/λ + D Dᵀ)⁻¹ D x` of the same filter.
    pub fn hp_difference_system(n: usize, lambda: f64) -> Self {
        let k = n.saturating_sub(2);
        Self {
            diag: vec![6.0 + 1.0 / lambda; k],
            off1: vec![-4.0; k.saturating_sub(1)],
            off2: vec![1.0; k.saturating_sub(2)],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                if i >= 1 {
                    acc += self.off1[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    acc += self.off1[i] * x[i + 1];
                }
                if i >= 2 {
                    acc += self.off2[i - 2] * x[i - 2];
                }
                if i + 2 < n {
                    acc += self.off2[i] * x[i + 2];
                }
                acc
            })
            .collect()
    }

    /// Solves `A x = b` by banded `L D Lᵀ` elimination followed by one step
    /// of iterative refinement.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let factor = self.factor()?;
        let mut x = factor.solve(b);
        let ax = self.mul_vec(&x);
        let resid: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let corr = factor.solve(&resid);
        for (xi, ci) in x.iter_mut().zip(corr) {
            *xi += ci;
        }
        Ok(x)
    }

    fn factor(&self) -> Result<LdlFactor> {
        let n = self.len();
        let mut d = vec![0.0; n];
        // l1[i] = L[i][i-1], l2[i] = L[i][i-2]
        let mut l1 = vec![0.0; n];
        let mut l2 = vec![0.0; n];
        for i in 0..n {
            let mut di = self.diag[i];
            if i >= 1 {
                di -= l1[i] * l1[i] * d[i - 1];
            }
            if i >= 2 {
                di -= l2[i] * l2[i] * d[i - 2];
            }
            if !(di > 0.0) {
                return Err(Error::Numeric(format!(
                    "pentadiagonal pivot {i} is not positive"
                )));
            }
            d[i] = di;
            if i + 2 < n {
                l2[i + 2] = self.off2[i] / di;
            }
            if i + 1 < n {
                let mut a = self.off1[i];
                if i >= 1 {
                    a -= l2[i + 1] * l1[i] * d[i - 1];
                }
                l1[i + 1] = a / di;
            }
        }
        Ok(LdlFactor { d, l1, l2 })
    }
}

struct LdlFactor {
    d: Vec<f64>,
    l1: Vec<f64>,
    l2: Vec<f64>,
}

impl LdlFactor {
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let mut z = b.to_vec();
        for i in 0..n {
            if i >= 1 {
                z[i] -= self.l1[i] * z[i - 1];
            }
            if i >= 2 {
                z[i] -= self.l2[i] * z[i - 2];
            }
        }
        for (zi, di) in z.iter_mut().zip(&self.d) {
            *zi /= di;
        }
        for i in (0..n).rev() {
            if i + 1 < n {
                z[i] -= self.l1[i + 1] * z[i + 1];
            }
            if i + 2 < n {
                z[i] -= self.l2[i + 2] * z[i + 2];
            }
        }
        z
    }
}

/// Minimizer of `Σ(x_i − m_i)² + λ Σ(Δ²m_i)²`.
///
/// Solved through the second differences of `x`, so constant and linear
/// inputs come back unchanged up to rounding in `Δ²x`.
pub fn hp_filter(values: &[f64], lambda: f64) -> Result<Vec<f64>> {
    require_len("hp filter", values.len(), 4)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Config(format!(
            "HP lambda must be positive, got {lambda}"
        )));
    }
    let d2: Vec<f64> = values
        .windows(3)
        .map(|w| w[0] - 2.0 * w[1] + w[2])
        .collect();
    let z = Pentadiagonal::hp_difference_system(values.len(), lambda).solve(&d2)?;
    let n = values.len();
    Ok((0..n)
        .map(|i| {
            // (Dᵀ z)_i = z_{i−2} − 2 z_{i−1} + z_i
            let mut dz = 0.0;
            if i >= 2 {
                dz += z[i - 2];
            }
            if i >= 1 && i - 1 < n - 2 {
                dz -= 2.0 * z[i - 1];
            }
            if i < n - 2 {
                dz += z[i];
            }
            values[i] - dz
        })
        .collect())
}

/// Central differences inside, one-sided three-point rules at both ends.
pub fn three_point_derivative(m: &[f64], dt_years: f64) -> Result<Vec<f64>> {
    let n = m.len();
    require_len("three-point derivative", n, 3)?;
    if !(dt_years > 0.0) {
        return Err(Error::Config(format!(
            "dt must be positive, got {dt_years}"
        )));
    }
    let h2 = 2.0 * dt_years;
    let mut out = Vec::with_capacity(n);
    out.push((-3.0 * m[0] + 4.0 * m[1] - m[2]) / h2);
    out.extend(m.windows(3).map(|w| (w[2] - w[0]) / h2));
    out.push((3.0 * m[n - 1] - 4.0 * m[n - 2] + m[n - 3]) / h2);
    Ok(out)
}

pub fn estimate_trend(series: &TimeSeries, lambda: f64) -> Result<TrendEstimate> {
    let m = hp_filter(series.values(), lambda)?;
    let m_dot = three_point_derivative(&m, series.dt_years())?;
    Ok(TrendEstimate { m, m_dot, lambda })
}

/// Writes `index,date,value,trend,trend_derivative`.
pub fn write_trend_csv<W: std::io::Write>(
    series: &TimeSeries,
    trend: &TrendEstimate,
    writer: W,
) -> Result<()> {
    if trend.m.len() != series.len() {
        return Err(Error::Size(format!(
            "trend length {} differs from series length {}",
            trend.m.len(),
            series.len()
        )));
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["index", "date", "value", "trend", "trend_derivative"])?;
    for i in 0..series.len() {
        w.write_record([
            i.to_string(),
            series.date_at(i).to_string(),
            series.values()[i].to_string(),
            trend.m[i].to_string(),
            trend.m_dot[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
