//! Estimation, diagnostics, simulation and forecasting for one-factor
//! mean-reversion processes whose reversion level is a periodic Fourier
//! trend:
//!
//! ```text
//! dH_t = α (μ(t) − H_t) dt + σ H_t^γ dB_t,   μ(t) = Σ_k a_k cos(2πkt/N + φ_k)
//! ```
//!
//! The pipeline is: [`series`] (ingest, aggregate, log) → [`diagnostics`]
//! (periodicity, normality, unit root, variance ratio) → [`trend`] (HP filter)
//! → [`harmonic`] (two-phase estimation) → [`simulate`] (antithetic
//! Euler–Maruyama ensembles) → [`forecast`] (bands and coverage).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod dft;
pub mod diagnostics;
pub mod error;
pub mod fixture;
pub mod forecast;
pub mod harmonic;
pub mod series;
pub mod simulate;
pub mod trend;

pub use error::{Error, Result};
pub use fixture::{generate, Fixture, FixtureSpec};
pub use forecast::{
    build_bands, default_multipliers, ensemble_coverage, forecast_report, holdout_coverage,
    BandSet, CoverageRow, CoverageTable, ForecastReport,
};
pub use harmonic::{
    estimate_phase1, estimate_phase2, evaluate_mu, extract_harmonics, fit, truncate_harmonics,
    FitConfig, FitDocument, HarmonicModel, HarmonicTerm, ModelFit, RmsPoint, SDEParams, Truncation,
};
pub use series::{
    aggregate_system, describe, difference, ingest_csv, log_transform, slice_period,
    DescriptiveStats, RiverRecord, TimeSeries,
};
pub use simulate::{envelope, euler_step, simulate_ensemble, SimulationConfig, SimulationEnsemble};
pub use trend::{estimate_trend, hp_filter, three_point_derivative, TrendEstimate};
