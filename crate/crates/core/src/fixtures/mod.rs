//! Seeded synthetic populations: archetype daily profiles, a two-regime daily
//! traffic series, and DDR tables whose mobility follows the reference
//! Markov mixture.

mod population;
mod traffic;

pub use population::{
    fixture_start, generate, DeviceTruth, Fixture, FixtureProfile, GroundTruth, CELL_POOL, FIXTURE_DAYS,
    HOURLY_NOISE, LOW_ACTIVITY_SHARE,
};
pub use traffic::{archetype_labels, archetype_profiles, Archetype, DailySeriesSpec, PEAK_SHARE};
