//! Euler–Maruyama ensembles with antithetic pairs.
//!
//! Pair `j` draws its normals from a ChaCha stream selected by `(seed, j)`,
//! so an ensemble is bit-identical however the pairs are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonic::{evaluate_mu, HarmonicModel, SDEParams};
use crate::series::DAILY_DT;

/// `h + α(μ − h)dt + σ h^γ √dt ε`.
pub fn euler_step(h: f64, mu_t: f64, params: &SDEParams, dt: f64, eps: f64) -> Result<f64> {
    if ![h, mu_t, dt, eps, params.alpha, params.sigma, params.gamma]
        .iter()
        .all(|v| v.is_finite())
    {
        return Err(Error::Numeric("non-finite input to Euler step".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::Numeric(format!(
            "time step must be positive, got {dt}"
        )));
    }
    if params.gamma != 0.0 && !(h > 0.0) {
        return Err(Error::Numeric(format!(
            "level {h} must be positive when gamma != 0"
        )));
    }
    Ok(step(h, mu_t, params, dt.sqrt(), dt, eps))
}

#[inline]
fn step(h: f64, mu_t: f64, p: &SDEParams, sqrt_dt: f64, dt: f64, eps: f64) -> f64 {
    h + p.alpha * (mu_t - h) * dt + p.sigma * h.powf(p.gamma) * sqrt_dt * eps
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// Even; paths `2j` and `2j + 1` are antithetic twins.
    pub n_paths: usize,
    pub n_steps: usize,
    pub dt_years: f64,
    pub h0: f64,
    pub seed: u64,
    /// Harmonic index of column 0; step `i` uses `μ(mu_offset + i)`.
    #[serde(default)]
    pub mu_offset: usize,
}

impl SimulationConfig {
    pub fn new(n_paths: usize, n_steps: usize, h0: f64, seed: u64) -> Self {
        Self {
            n_paths,
            n_steps,
            dt_years: DAILY_DT,
            h0,
            seed,
            mu_offset: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 || !self.n_paths.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "path count must be even and positive, got {}",
                self.n_paths
            )));
        }
        if self.n_steps == 0 {
            return Err(Error::Config("at least one step is required".into()));
        }
        if !(self.dt_years > 0.0 && self.dt_years.is_finite()) {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.dt_years
            )));
        }
        if !self.h0.is_finite() {
            return Err(Error::Config("initial value must be finite".into()));
        }
        Ok(())
    }
}

/// Row-major `n_paths × (n_steps + 1)` matrix of simulated levels.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationEnsemble {
    data: Vec<f64>,
    config: SimulationConfig,
}

impl SimulationEnsemble {
    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn n_paths(&self) -> usize {
        self.config.n_paths
    }

    /// Columns per path, `n_steps + 1`.
    pub fn width(&self) -> usize {
        self.config.n_steps + 1
    }

    pub fn path(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn paths(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.width())
    }

    /// Antithetic twin of path `i`.
    pub fn pair_index(&self, i: usize) -> usize {
        i ^ 1
    }

    pub fn column(&self, step: usize) -> Vec<f64> {
        self.paths().map(|p| p[step]).collect()
    }

    /// Builds an ensemble from explicit paths, one antithetic pair per two rows.
    pub fn from_paths(paths: Vec<Vec<f64>>, config: SimulationConfig) -> Result<Self> {
        if paths.len() != config.n_paths || paths.iter().any(|p| p.len() != config.n_steps + 1) {
            return Err(Error::Size("paths do not match the configuration".into()));
        }
        Ok(Self {
            data: paths.concat(),
            config,
        })
    }
}

pub fn simulate_ensemble(
    model: &HarmonicModel,
    params: &SDEParams,
    config: &SimulationConfig,
) -> Result<SimulationEnsemble> {
    config.validate()?;
    let width = config.n_steps + 1;
    let mu: Vec<f64> = (0..config.n_steps)
        .map(|i| evaluate_mu(model, config.mu_offset + i))
        .collect();
    let dt = config.dt_years;
    let sqrt_dt = dt.sqrt();

    let mut data = vec![0.0; config.n_paths * width];
    data.par_chunks_mut(2 * width)
        .enumerate()
        .for_each(|(pair, rows)| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(pair as u64);
            let (plus, minus) = rows.split_at_mut(width);
            plus[0] = config.h0;
            minus[0] = config.h0;
            for i in 0..config.n_steps {
                let eps: f64 = StandardNormal.sample(&mut rng);
                plus[i + 1] = step(plus[i], mu[i], params, sqrt_dt, dt, eps);
                minus[i + 1] = step(minus[i], mu[i], params, sqrt_dt, dt, -eps);
            }
        });

    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(
            "simulation produced non-finite values".into(),
        ));
    }
    Ok(SimulationEnsemble {
        data,
        config: *config,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Pointwise min and max over paths, one entry per column.
pub fn envelope(ensemble: &SimulationEnsemble) -> Envelope {
    let w = ensemble.width();
    let mut lower = vec![f64::INFINITY; w];
    let mut upper = vec![f64::NEG_INFINITY; w];
    for p in ensemble.paths() {
        for ((lo, hi), &v) in lower.iter_mut().zip(upper.iter_mut()).zip(p) {
            *lo = lo.min(v);
            *hi = hi.max(v);
        }
    }
    Envelope { lower, upper }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub step: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub q05: f64,
    pub q95: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn summarize(ensemble: &SimulationEnsemble) -> Vec<StepSummary> {
    (0..ensemble.width())
        .into_par_iter()
        .map(|step| {
            let mut col = ensemble.column(step);
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            col.sort_by(f64::total_cmp);
            StepSummary {
                step,
                mean,
                min: col[0],
                max: col[col.len() - 1],
                q05: quantile_sorted(&col, 0.05),
                q95: quantile_sorted(&col, 0.95),
            }
        })
        .collect()
}

/// `step,date,mean,min,max,q05,q95`; `date0` is the date of column 0.
pub fn write_summary_csv<W: std::io::Write>(
    summary: &[StepSummary],
    date0: chrono::NaiveDate,
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["step", "date", "mean", "min", "max", "q05", "q95"])?;
    for s in summary {
        w.write_record([
            s.step.to_string(),
            (date0 + chrono::Duration::days(s.step as i64)).to_string(),
            s.mean.to_string(),
            s.min.to_string(),
            s.max.to_string(),
            s.q05.to_string(),
            s.q95.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Wide dump: `path,twin,s0,s1,…`.
pub fn write_paths_csv<W: std::io::Write>(ensemble: &SimulationEnsemble, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["path".to_string(), "twin".to_string()];
    header.extend((0..ensemble.width()).map(|s| format!("s{s}")));
    w.write_record(&header)?;
    for (i, p) in ensemble.paths().enumerate() {
        let mut row = vec![i.to_string(), ensemble.pair_index(i).to_string()];
        row.extend(p.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::HarmonicTerm;

    fn flat(level: f64) -> HarmonicModel {
        HarmonicModel::new(
            3.0,
            vec![HarmonicTerm {
                k: 0,
                a: level,
                phi: 0.0,
            }],
            1095,
        )
        .unwrap()
    }

    fn seasonal() -> HarmonicModel {
        HarmonicModel::new(
            3.0,
            vec![
                HarmonicTerm {
                    k: 0,
                    a: 7.39,
                    phi: 0.0,
                },
                HarmonicTerm {
                    k: 3,
                    a: 0.29,
                    phi: -2.77,
                },
                HarmonicTerm {
                    k: 6,
                    a: 0.22,
                    phi: 2.82,
                },
            ],
            1095,
        )
        .unwrap()
    }

    #[test]
    fn euler_step_examples() {
        let p = SDEParams {
            alpha: 112.0,
            sigma: 3.0,
            gamma: 0.0,
        };
        let dt = 1.0 / 365.0;
        assert_eq!(euler_step(7.0, 7.0, &p, dt, 0.0).unwrap(), 7.0);
        let h = euler_step(7.0, 7.4, &p, dt, 0.0).unwrap();
        assert!((h - (7.0 + 112.0 * 0.4 / 365.0)).abs() < 1e-12);
        assert!((h - 7.12274).abs() < 1e-5);
        let up = euler_step(7.0, 7.4, &p, dt, 1.0).unwrap();
        let down = euler_step(7.0, 7.4, &p, dt, -1.0).unwrap();
        assert_eq!((up + down) / 2.0, h);
        assert!(matches!(
            euler_step(f64::NAN, 7.0, &p, dt, 0.0),
            Err(Error::Numeric(_))
        ));
        assert!(matches!(
            euler_step(7.0, 7.0, &p, dt, f64::INFINITY),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn zero_volatility_paths_are_identical() {
        let p = SDEParams {
            alpha: 112.0,
            sigma: 0.0,
            gamma: 0.0,
        };
        let cfg = SimulationConfig::new(6, 200, 6.5, 1);
        let e = simulate_ensemble(&seasonal(), &p, &cfg).unwrap();
        let first = e.path(0).to_vec();
        assert!(e.paths().all(|row| row == first.as_slice()));
        let env = envelope(&e);
        assert_eq!(env.lower, first);
        assert_eq!(env.upper, first);
    }

    #[test]
    fn antithetic_pairs_average_to_deterministic_path() {
        let model = seasonal();
        let p = SDEParams {
            alpha: 112.0,
            sigma: 3.0,
            gamma: 0.0,
        };
        let cfg = SimulationConfig::new(20, 1095, 7.2, 99);
        let e = simulate_ensemble(&model, &p, &cfg).unwrap();
        let det = simulate_ensemble(&model, &SDEParams { sigma: 0.0, ..p }, &cfg).unwrap();
        for j in 0..10 {
            let a = e.path(2 * j);
            let b = e.path(e.pair_index(2 * j));
            for ((x, y), d) in a.iter().zip(b).zip(det.path(0)) {
                assert!(((x + y) / 2.0 - d).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let p = SDEParams {
            alpha: 112.0,
            sigma: 3.0,
            gamma: 0.0,
        };
        let cfg = SimulationConfig::new(8, 100, 7.0, 5);
        let a = simulate_ensemble(&seasonal(), &p, &cfg).unwrap();
        let b = simulate_ensemble(&seasonal(), &p, &cfg).unwrap();
        assert_eq!(a, b);
        let c = simulate_ensemble(&seasonal(), &p, &SimulationConfig { seed: 6, ..cfg }).unwrap();
        assert_ne!(a, c);
        // a pair's draws do not depend on how many pairs are simulated
        let wide =
            simulate_ensemble(&seasonal(), &p, &SimulationConfig { n_paths: 16, ..cfg }).unwrap();
        assert_eq!(wide.path(3), a.path(3));
    }

    #[test]
    fn pair_index_is_a_fixed_point_free_involution() {
        let p = SDEParams {
            alpha: 1.0,
            sigma: 1.0,
            gamma: 0.0,
        };
        let e = simulate_ensemble(&flat(0.0), &p, &SimulationConfig::new(10, 3, 0.0, 0)).unwrap();
        for i in 0..10 {
            assert_ne!(e.pair_index(i), i);
            assert_eq!(e.pair_index(e.pair_index(i)), i);
        }
    }

    #[test]
    fn config_validation() {
        let p = SDEParams {
            alpha: 1.0,
            sigma: 1.0,
            gamma: 0.0,
        };
        for cfg in [
            SimulationConfig::new(3, 10, 1.0, 0),
            SimulationConfig::new(0, 10, 1.0, 0),
            SimulationConfig::new(2, 0, 1.0, 0),
        ] {
            assert!(matches!(
                simulate_ensemble(&flat(1.0), &p, &cfg),
                Err(Error::Config(_))
            ));
        }
    }

    #[test]
    fn ensemble_mean_tracks_deterministic_path() {
        let p = SDEParams {
            alpha: 112.0,
            sigma: 3.0,
            gamma: 0.0,
        };
        let cfg = SimulationConfig::new(10_000, 400, 7.39, 21);
        let e = simulate_ensemble(&flat(7.39), &p, &cfg).unwrap();
        let bound = 4.0 * (3.0 / (2.0f64 * 112.0).sqrt()) / (10_000f64).sqrt();
        for s in summarize(&e) {
            assert!((s.mean - 7.39).abs() < bound, "step {}: {}", s.step, s.mean);
        }
    }

    #[test]
    fn envelope_properties() {
        let p = SDEParams {
            alpha: 112.0,
            sigma: 3.0,
            gamma: 0.0,
        };
        let e =
            simulate_ensemble(&seasonal(), &p, &SimulationConfig::new(40, 300, 7.0, 8)).unwrap();
        let env = envelope(&e);
        assert_eq!(env.lower[0], env.upper[0]);
        assert!(env.lower.iter().zip(&env.upper).all(|(l, u)| l <= u));

        // a sub-ensemble never has a wider envelope
        let sub_cfg = SimulationConfig {
            n_paths: 20,
            ..*e.config()
        };
        let sub =
            SimulationEnsemble::from_paths((0..20).map(|i| e.path(i).to_vec()).collect(), sub_cfg)
                .unwrap();
        let sub_env = envelope(&sub);
        for i in 0..e.width() {
            assert!(env.lower[i] <= sub_env.lower[i] && env.upper[i] >= sub_env.upper[i]);
        }

        let single_cfg = SimulationConfig {
            n_paths: 2,
            ..*e.config()
        };
        let single = SimulationEnsemble::from_paths(
            vec![e.path(0).to_vec(), e.path(0).to_vec()],
            single_cfg,
        )
        .unwrap();
        let s_env = envelope(&single);
        assert_eq!(s_env.lower, e.path(0));
        assert_eq!(s_env.upper, e.path(0));
    }

    #[test]
    fn summary_quantiles() {
        assert_eq!(quantile_sorted(&[0.0, 1.0, 2.0, 3.0, 4.0], 0.5), 2.0);
        assert!((quantile_sorted(&[0.0, 10.0], 0.05) - 0.5).abs() < 1e-12);
        let p = SDEParams {
            alpha: 112.0,
            sigma: 3.0,
            gamma: 0.0,
        };
        let e =
            simulate_ensemble(&seasonal(), &p, &SimulationConfig::new(100, 50, 7.0, 2)).unwrap();
        let mut buf = Vec::new();
        let date0 = chrono::NaiveDate::from_ymd_opt(2010, 2, 4).unwrap();
        write_summary_csv(&summarize(&e), date0, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("step,date,mean,min,max,q05,q95\n0,2010-02-04,7,7,7,7,7\n"));
        assert_eq!(text.lines().count(), 52);
    }
}
