//! Synthetic series drawn from a known model, for recovery studies.

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonic::{evaluate_mu, HarmonicModel, HarmonicTerm, SDEParams};
use crate::series::{TimeSeries, DAILY_DT};
use crate::simulate::euler_step;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub params: SDEParams,
    pub harmonics: HarmonicModel,
    /// Euler steps; the series has `n_steps + 1` values starting at `h0`.
    pub n_steps: usize,
    pub dt_years: f64,
    pub seed: u64,
    pub h0: f64,
    pub start_date: NaiveDate,
}

fn three_year_model(terms: &[(usize, f64, f64)]) -> HarmonicModel {
    let terms = terms
        .iter()
        .map(|&(k, a, phi)| HarmonicTerm { k, a, phi })
        .collect();
    HarmonicModel::new(3.0, terms, 1095).expect("valid preset")
}

impl FixtureSpec {
    /// α = 112, σ = 3, γ = 0 around a level with annual and semi-annual
    /// components on a 3-year, 1095-day base period.
    pub fn three_year(seed: u64) -> Self {
        let harmonics = three_year_model(&[(0, 7.39, 0.0), (3, 0.29, -2.77), (6, 0.22, 2.82)]);
        Self::with_harmonics(harmonics, seed)
    }

    /// Same dynamics with a 24-term level whose spread matches a strongly
    /// seasonal 3-year hydrological cycle (historical std ≈ 0.43).
    pub fn multi_harmonic(seed: u64) -> Self {
        let harmonics = three_year_model(&[
            (0, 7.3855, 0.0),
            (1, 0.2437, -2.8697),
            (2, 0.1911, -2.2169),
            (3, 0.2870, -2.7679),
            (4, 0.0788, -2.6436),
            (5, 0.1210, -2.4869),
            (6, 0.2196, 2.8195),
            (7, 0.0624, 2.9606),
            (8, 0.0830, 2.6283),
            (9, 0.0777, -2.0236),
            (10, 0.0339, -2.1917),
            (12, 0.0134, -1.6143),
            (13, 0.0102, 3.0137),
            (15, 0.0106, 2.5409),
            (16, 0.0173, 2.5542),
            (17, 0.0181, -0.9897),
            (18, 0.0147, -2.0683),
            (19, 0.0136, -2.5095),
            (20, 0.0070, -1.3500),
            (22, 0.0091, -1.9034),
            (24, 0.0069, -1.8858),
            (26, 0.0066, -2.1194),
            (27, 0.0046, -1.7297),
            (30, 0.0049, -1.8031),
        ]);
        Self::with_harmonics(harmonics, seed)
    }

    fn with_harmonics(harmonics: HarmonicModel, seed: u64) -> Self {
        let h0 = evaluate_mu(&harmonics, 0);
        Self {
            params: SDEParams {
                alpha: 112.0,
                sigma: 3.0,
                gamma: 0.0,
            },
            harmonics,
            n_steps: 1095,
            dt_years: DAILY_DT,
            seed,
            h0,
            start_date: NaiveDate::from_ymd_opt(2007, 2, 5).expect("valid date"),
        }
    }

    /// The true `μ` over the generated series.
    pub fn mu_path(&self) -> Vec<f64> {
        self.harmonics.path(0, self.n_steps + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub series: TimeSeries,
    pub spec: FixtureSpec,
}

/// One Euler–Maruyama path; step `i` uses `μ(i)`.
pub fn generate(spec: &FixtureSpec) -> Result<Fixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut values = Vec::with_capacity(spec.n_steps + 1);
    let mut h = spec.h0;
    values.push(h);
    for i in 0..spec.n_steps {
        let eps: f64 = StandardNormal.sample(&mut rng);
        h = euler_step(
            h,
            evaluate_mu(&spec.harmonics, i),
            &spec.params,
            spec.dt_years,
            eps,
        )?;
        values.push(h);
    }
    let series = TimeSeries::new(
        spec.start_date,
        spec.dt_years,
        values,
        format!("fixture-{}", spec.seed),
    )?;
    Ok(Fixture {
        series,
        spec: spec.clone(),
    })
}

impl Fixture {
    /// The series as single-river discharge rows (`e^H` in m³/s) in the
    /// default ingest schema, so ingesting and log-transforming it gives the
    /// series back.
    pub fn write_discharge_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["date", "region", "reservoir", "river", "discharge"])?;
        for (i, v) in self.series.values().iter().enumerate() {
            w.write_record([
                self.series.date_at(i).to_string(),
                "Antioquia".into(),
                "synthetic".into(),
                format!("fixture-{}", self.spec.seed),
                v.exp().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Ground-truth sidecar: the full spec as pretty JSON.
    pub fn write_truth_json<W: std::io::Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, &self.spec).map_err(Error::from)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_volatility_converges_to_level() {
        let mut spec = FixtureSpec::three_year(0);
        spec.params.sigma = 0.0;
        spec.h0 = 6.0;
        let f = generate(&spec).unwrap();
        let mu = spec.mu_path();
        let tail_err = f.series.values()[100..]
            .iter()
            .zip(&mu[100..])
            .map(|(h, m)| (h - m).abs())
            .fold(0.0, f64::max);
        // the lag behind a moving level is about |μ'|/α ≈ 0.04
        assert!(tail_err < 0.05, "{tail_err}");
        assert!((f.series.values()[0] - 6.0).abs() < 1e-15);
    }

    #[test]
    fn same_seed_same_series() {
        let a = generate(&FixtureSpec::three_year(42)).unwrap();
        let b = generate(&FixtureSpec::three_year(42)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.series.len(), 1096);
        assert_ne!(
            a.series,
            generate(&FixtureSpec::three_year(43)).unwrap().series
        );
    }

    #[test]
    fn mean_near_level() {
        for seed in 0..100 {
            let f = generate(&FixtureSpec::three_year(seed)).unwrap();
            let mean = f.series.values().iter().sum::<f64>() / f.series.len() as f64;
            assert!((mean - 7.39).abs() < 0.1, "seed {seed}: {mean}");
        }
    }

    #[test]
    fn spec_serializes() {
        let spec = FixtureSpec::multi_harmonic(3);
        let json = serde_json::to_string(&spec).unwrap();
        let back: FixtureSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        assert_eq!(spec.harmonics.terms.len(), 24);
    }

    #[test]
    fn discharge_csv_ingests_back_to_the_series() {
        use crate::series::{aggregate_system, ingest_reader, log_transform, CsvSchema};
        let f = generate(&FixtureSpec::three_year(5)).unwrap();
        let mut buf = Vec::new();
        f.write_discharge_csv(&mut buf).unwrap();
        let records = ingest_reader(buf.as_slice(), &CsvSchema::default()).unwrap();
        let back = log_transform(&aggregate_system(&records).unwrap()).unwrap();
        assert_eq!(back.start_date(), f.series.start_date());
        assert_eq!(back.len(), f.series.len());
        for (a, b) in back.values().iter().zip(f.series.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        let mut truth = Vec::new();
        f.write_truth_json(&mut truth).unwrap();
        let spec: FixtureSpec = serde_json::from_slice(&truth).unwrap();
        assert_eq!(spec, f.spec);
    }
}
