//! Monte Carlo estimates: event frequencies, empirical privacy gaps,
//! attack precision and spreading statistics.
//!
//! Trial `i` of an estimate always draws from stream `i` of the supplied
//! [`StreamFamily`](crate::model::StreamFamily), and per-trial counts are
//! summed, so results do not depend on the number of worker threads.

mod attack;
mod events;
mod montecarlo;
mod result;
mod spreading;

pub use attack::{estimate_attack_precision, AttackEstimate, AttackSpec};
pub use events::EventSpec;
pub use montecarlo::{
    estimate_dp_gap, estimate_event, estimate_events, estimate_source_prefix_disclosure,
    DpGapEstimate, EstimateError,
};
pub use result::{median, quantile, EstimateResult, MIN_SUCCESSES, Z_99};
pub use spreading::{
    estimate_spreading, late_round_active_fraction, Band, RoundBand, SpreadingOptions,
    SpreadingSummary, PLATEAU_INFORMED_FRACTION,
};
