use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::adversary::{ObservingSink, TimedEntry};
use crate::model::{Completion, GossipConfig, StreamFamily};
use crate::protocols::{run_variant_into, stays_active, ProtocolError};

use super::events::EventSpec;
use super::result::EstimateResult;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("at least one trial is required")]
    NoTrials,
    #[error("at least one event is required")]
    NoEvents,
    #[error("the two configurations differ in more than their source")]
    ConfigMismatch,
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Attack(#[from] crate::adversary::AttackError),
}

/// Sum of per-trial counts; associative, so the parallel result does not
/// depend on how trials are split between workers.
#[derive(Debug, Clone)]
struct Tally {
    hits: Vec<u64>,
    incomplete: u64,
}

impl Tally {
    fn new(events: usize) -> Self {
        Tally {
            hits: vec![0; events],
            incomplete: 0,
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.hits.iter_mut().zip(other.hits) {
            *a += b;
        }
        self.incomplete += other.incomplete;
        self
    }
}

/// Runs one simulation, stopping as soon as every event is decided.
/// Returns which events hold and whether the run was capped first.
fn simulate_events(
    config: &GossipConfig,
    events: &[EventSpec],
    streams: &StreamFamily,
    trial: u64,
) -> Result<(Vec<bool>, bool), ProtocolError> {
    let decided = |entries: &[TimedEntry]| events.iter().all(|e| e.decided(entries));
    let mut sink = ObservingSink::new(config.curious(), config.source(), decided);
    if let Some(horizon) = events
        .iter()
        .map(|e| e.step_horizon())
        .collect::<Option<Vec<_>>>()
    {
        if let Some(&h) = horizon.iter().max() {
            sink = sink.stop_after_steps(h);
        }
    }
    let status = run_variant_into(config, &mut streams.stream(trial), &mut sink)?;
    let view = sink.into_view();
    let holds = events.iter().map(|e| e.holds(&view)).collect();
    Ok((holds, status.completion == Completion::Capped))
}

/// Frequencies of several events over the same `trials` simulations.
///
/// Trial `i` draws from `streams.stream(i)`. A run that hits the step cap
/// is evaluated on what was observed so far and counted as incomplete.
pub fn estimate_events(
    config: &GossipConfig,
    events: &[EventSpec],
    trials: u64,
    streams: &StreamFamily,
) -> Result<Vec<EstimateResult>, EstimateError> {
    if trials == 0 {
        return Err(EstimateError::NoTrials);
    }
    if events.is_empty() {
        return Err(EstimateError::NoEvents);
    }
    let tally = (0..trials)
        .into_par_iter()
        .try_fold(
            || Tally::new(events.len()),
            |mut acc, trial| {
                let (holds, capped) = simulate_events(config, events, streams, trial)?;
                for (h, hit) in acc.hits.iter_mut().zip(holds) {
                    *h += hit as u64;
                }
                acc.incomplete += capped as u64;
                Ok::<_, ProtocolError>(acc)
            },
        )
        .try_reduce(|| Tally::new(events.len()), |a, b| Ok(a.merge(b)))?;
    Ok(tally
        .hits
        .iter()
        .map(|&h| EstimateResult::from_counts(h, trials).with_incomplete(tally.incomplete))
        .collect())
}

pub fn estimate_event(
    config: &GossipConfig,
    event: EventSpec,
    trials: u64,
    streams: &StreamFamily,
) -> Result<EstimateResult, EstimateError> {
    Ok(estimate_events(config, &[event], trials, streams)?.remove(0))
}

/// Empirical `max_E p_i(E) - p_j(E)` over a declared event family: a lower
/// estimate of the `epsilon = 0` privacy loss restricted to that family.
#[derive(Debug, Clone, PartialEq)]
pub struct DpGapEstimate {
    pub gap: f64,
    /// Index of the maximizing event in the family.
    pub argmax: usize,
    /// Combined half-width `sqrt(ci_i^2 + ci_j^2)` at the maximizing event.
    pub ci_half_width: f64,
    pub under_i: Vec<EstimateResult>,
    pub under_j: Vec<EstimateResult>,
}

/// Estimates the gap between two sources.
///
/// Runs under `config_i` use `streams`; runs under `config_j` use the next
/// `trials` indices, so the two samples are independent.
pub fn estimate_dp_gap(
    config_i: &GossipConfig,
    config_j: &GossipConfig,
    events: &[EventSpec],
    trials: u64,
    streams: &StreamFamily,
) -> Result<DpGapEstimate, EstimateError> {
    let same_shape = config_i.n() == config_j.n()
        && config_i.f() == config_j.f()
        && config_i.s() == config_j.s()
        && config_i.variant() == config_j.variant()
        && config_i.step_cap() == config_j.step_cap();
    if !same_shape {
        return Err(EstimateError::ConfigMismatch);
    }
    let under_i = estimate_events(config_i, events, trials, streams)?;
    let under_j = estimate_events(config_j, events, trials, &streams.offset(trials))?;
    let (argmax, gap) = under_i
        .iter()
        .zip(&under_j)
        .map(|(a, b)| a.estimate - b.estimate)
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, g)| {
            if g > best.1 {
                (k, g)
            } else {
                best
            }
        });
    let ci_half_width = under_i[argmax]
        .ci_half_width
        .hypot(under_j[argmax].ci_half_width);
    Ok(DpGapEstimate {
        gap,
        argmax,
        ci_half_width,
        under_i,
        under_j,
    })
}

/// Probability that the source reaches a curious node before it is first
/// muted, simulated on the source's own sends only.
///
/// Each send goes to a uniform node among `n`; a fraction `f / n` of them
/// is curious. The muting coin is tossed for every send, and the send that
/// mutes the source still goes out.
pub fn estimate_source_prefix_disclosure(
    n: usize,
    f: usize,
    s: f64,
    trials: u64,
    streams: &StreamFamily,
) -> Result<EstimateResult, EstimateError> {
    if trials == 0 {
        return Err(EstimateError::NoTrials);
    }
    if f == 0 {
        return Ok(EstimateResult::from_counts(0, trials));
    }
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = streams.stream(trial);
            loop {
                let stays = stays_active(&mut rng, s);
                if rng.random_range(0..n) >= n - f {
                    return 1;
                }
                if !stays {
                    return 0;
                }
            }
        })
        .sum();
    Ok(EstimateResult::from_counts(hits, trials))
}
