use rayon::prelude::*;

use crate::model::{Completion, GossipConfig, NullSink, StreamFamily};
use crate::protocols::{run_sync_into, RoundTrace};

use super::montecarlo::EstimateError;
use super::result::{median, quantile};

/// Fraction of `n` the informed count must exceed before rounds count
/// toward the late-round plateau.
pub const PLATEAU_INFORMED_FRACTION: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpreadingOptions {
    /// Trajectories are kept for at most this many rounds; completion and
    /// message statistics always use whole runs.
    pub max_trajectory_rounds: usize,
}

impl Default for SpreadingOptions {
    fn default() -> Self {
        SpreadingOptions {
            max_trajectory_rounds: 100_000,
        }
    }
}

/// Median and 10/90 percentiles of one per-round quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub p10: f64,
    pub median: f64,
    pub p90: f64,
}

impl Band {
    fn of(values: &mut [f64]) -> Band {
        values.sort_by(f64::total_cmp);
        Band {
            p10: quantile(values, 0.1),
            median: median(values),
            p90: quantile(values, 0.9),
        }
    }
}

/// Informed fraction at the end of the round, active fraction at its start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundBand {
    pub round: u64,
    pub informed: Band,
    pub active: Band,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpreadingSummary {
    pub n: usize,
    pub s: f64,
    /// Runs that reached every node, in trial order.
    pub completion_rounds: Vec<u64>,
    pub total_messages: Vec<u64>,
    /// Per-run mean active fraction over rounds that start with more than
    /// 99% of nodes informed; `None` for runs without such a round.
    pub plateaus: Vec<Option<f64>>,
    /// Runs stopped by the step cap, left out of everything above.
    pub capped: u64,
    /// Finished runs are padded with their last round's values.
    pub trajectory: Vec<RoundBand>,
}

impl SpreadingSummary {
    pub fn median_completion_round(&self) -> Option<f64> {
        sorted_median(self.completion_rounds.iter().map(|&r| r as f64))
    }

    pub fn median_total_messages(&self) -> Option<f64> {
        sorted_median(self.total_messages.iter().map(|&m| m as f64))
    }

    pub fn median_plateau(&self) -> Option<f64> {
        sorted_median(self.plateaus.iter().flatten().copied())
    }
}

fn sorted_median(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(median(&v))
}

struct RunStats {
    rounds: u64,
    messages: u64,
    plateau: Option<f64>,
    /// (informed, active) per round, truncated.
    trajectory: Vec<(u32, u32)>,
}

/// Late-round plateau of one run.
pub fn late_round_active_fraction(rounds: &RoundTrace, n: usize) -> Option<f64> {
    let threshold = PLATEAU_INFORMED_FRACTION * n as f64;
    let records = rounds.records();
    let late: Vec<f64> = records
        .windows(2)
        .filter(|w| w[0].informed as f64 > threshold)
        .map(|w| w[1].active as f64 / n as f64)
        .collect();
    if late.is_empty() {
        return None;
    }
    Some(late.iter().sum::<f64>() / late.len() as f64)
}

/// Runs `trials` synchronous executions and summarizes how the rumor
/// spreads.
pub fn estimate_spreading(
    config: &GossipConfig,
    trials: u64,
    streams: &StreamFamily,
    options: SpreadingOptions,
) -> Result<SpreadingSummary, EstimateError> {
    if trials == 0 {
        return Err(EstimateError::NoTrials);
    }
    let n = config.n();
    let runs: Vec<Option<RunStats>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let (status, rounds) =
                run_sync_into(config, &mut streams.stream(trial), &mut NullSink)?;
            if status.completion != Completion::Completed {
                return Ok(None);
            }
            let trajectory = rounds
                .records()
                .iter()
                .take(options.max_trajectory_rounds)
                .map(|r| (r.informed as u32, r.active as u32))
                .collect();
            Ok(Some(RunStats {
                rounds: rounds.len() as u64,
                messages: status.steps,
                plateau: late_round_active_fraction(&rounds, n),
                trajectory,
            }))
        })
        .collect::<Result<_, crate::protocols::ProtocolError>>()?;

    let capped = runs.iter().filter(|r| r.is_none()).count() as u64;
    let done: Vec<&RunStats> = runs.iter().flatten().collect();
    let longest = done.iter().map(|r| r.trajectory.len()).max().unwrap_or(0);
    let nf = n as f64;
    let trajectory = (0..longest)
        .into_par_iter()
        .map(|round| {
            let mut informed = Vec::with_capacity(done.len());
            let mut active = Vec::with_capacity(done.len());
            for run in &done {
                let (i, a) = run
                    .trajectory
                    .get(round)
                    .or(run.trajectory.last())
                    .copied()
                    .unwrap();
                informed.push(i as f64 / nf);
                active.push(a as f64 / nf);
            }
            RoundBand {
                round: round as u64,
                informed: Band::of(&mut informed),
                active: Band::of(&mut active),
            }
        })
        .collect();

    Ok(SpreadingSummary {
        n,
        s: config.s(),
        completion_rounds: done.iter().map(|r| r.rounds).collect(),
        total_messages: done.iter().map(|r| r.messages).collect(),
        plateaus: done.iter().map(|r| r.plateau).collect(),
        capped,
        trajectory,
    })
}
