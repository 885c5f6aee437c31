//! Shared inputs for the criterion benchmarks.

use perimean::{generate, FixtureSpec, TimeSeries};

/// A 3-year daily series drawn from the default synthetic model.
pub fn sample_period(seed: u64) -> TimeSeries {
    generate(&FixtureSpec::three_year(seed))
        .expect("fixture generation")
        .series
}
