//! Experiment harness around the `gossip-dp` library: spec files, grid
//! expansion, deterministic seed fan-out and CSV output.

pub mod format;
pub mod run;
pub mod spec;

pub use run::{run_experiment, RunError, RunReport};
pub use spec::{parse_spec, parse_spec_str, ExperimentSpec, Kind, SpecError};

/// Environment variable that replaces a spec's `seed`.
pub const SEED_ENV: &str = "GOSSIP_SEED";

/// Applies `GOSSIP_SEED` when set.
pub fn apply_seed_override(
    spec: &mut ExperimentSpec,
    value: Option<&str>,
) -> Result<(), SpecError> {
    if let Some(raw) = value {
        spec.seed = raw.trim().parse().map_err(|_| SpecError::Invalid {
            key: SEED_ENV.to_string(),
            line: None,
            message: format!("`{raw}` is not an unsigned integer"),
        })?;
    }
    Ok(())
}
