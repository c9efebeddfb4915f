use std::fmt;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;

use crate::adversary::{
    map_attack, multi_rumor_attack, silence_attack, AttackError, AttackOutcome, ObservedSequence,
    ObservingSink, Prior, TimedEntry,
};
use crate::model::{Completion, CuriousSet, GossipConfig, NodeId, RngStream, StreamFamily};
use crate::protocols::{run_variant_into, ProtocolError};

use super::montecarlo::EstimateError;
use super::result::EstimateResult;

/// Which attack to run, with its parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackSpec {
    /// MAP attack with a prior of `prior_size` honest nodes, the source among
    /// them and the rest drawn at random.
    Map { prior_size: usize },
    /// `rumors` independent runs from the same source, `k` distinct senders
    /// kept per run.
    MultiRumor { rumors: usize, k: usize },
    /// Silence detection over the `window` entries after the first.
    Silence { window: usize },
}

impl AttackSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AttackSpec::Map { .. } => "map",
            AttackSpec::MultiRumor { .. } => "multi_rumor",
            AttackSpec::Silence { .. } => "silence",
        }
    }

    /// The attack's headline parameter: prior size, rumor count or window.
    pub fn param(&self) -> usize {
        match *self {
            AttackSpec::Map { prior_size } => prior_size,
            AttackSpec::MultiRumor { rumors, .. } => rumors,
            AttackSpec::Silence { window } => window,
        }
    }

    fn validate(&self, config: &GossipConfig) -> Result<(), AttackError> {
        let honest = config.n() - config.f();
        match *self {
            AttackSpec::Map { prior_size: 0 } => Err(AttackError::EmptyPrior),
            AttackSpec::Map { prior_size } if prior_size > honest => {
                Err(AttackError::PriorTooLarge {
                    size: prior_size,
                    honest,
                })
            }
            AttackSpec::MultiRumor { rumors: 0, .. } => Err(AttackError::NoObservations),
            AttackSpec::MultiRumor { k: 0, .. } | AttackSpec::Silence { window: 0 } => {
                Err(AttackError::ZeroWindow)
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for AttackSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.name(), self.param())
    }
}

/// Success rate of an attack, abstentions counted as failures.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackEstimate {
    pub precision: EstimateResult,
    pub abstentions: u64,
    pub abstain_rate: f64,
    /// Precision over the trials where the attack made a prediction.
    pub precision_when_predicting: Option<EstimateResult>,
}

#[derive(Debug, Clone, Copy, Default)]
struct AttackTally {
    correct: u64,
    abstained: u64,
    incomplete: u64,
}

impl AttackTally {
    fn add(mut self, other: AttackTally) -> Self {
        self.correct += other.correct;
        self.abstained += other.abstained;
        self.incomplete += other.incomplete;
        self
    }
}

/// Estimates an attack's precision over `trials` independent trials.
///
/// Every trial draws its source uniformly among honest nodes, so the
/// source in `config` is ignored.
pub fn estimate_attack_precision(
    config: &GossipConfig,
    attack: AttackSpec,
    trials: u64,
    streams: &StreamFamily,
) -> Result<AttackEstimate, EstimateError> {
    if trials == 0 {
        return Err(EstimateError::NoTrials);
    }
    attack.validate(config)?;
    let tally = (0..trials)
        .into_par_iter()
        .map(|trial| attack_trial(config, attack, &mut streams.stream(trial)))
        .try_reduce(AttackTally::default, |a, b| Ok(a.add(b)))?;

    let predicted = trials - tally.abstained;
    Ok(AttackEstimate {
        precision: EstimateResult::from_counts(tally.correct, trials)
            .with_incomplete(tally.incomplete),
        abstentions: tally.abstained,
        abstain_rate: tally.abstained as f64 / trials as f64,
        precision_when_predicting: (predicted > 0)
            .then(|| EstimateResult::from_counts(tally.correct, predicted)),
    })
}

fn random_honest_node<R: Rng + ?Sized>(curious: &CuriousSet, rng: &mut R) -> NodeId {
    let honest = curious.n() - curious.len();
    NodeId(rng.random_range(0..honest) as u32)
}

fn attack_trial(
    config: &GossipConfig,
    attack: AttackSpec,
    rng: &mut RngStream,
) -> Result<AttackTally, EstimateError> {
    let curious = config.curious();
    let source = random_honest_node(&curious, rng);
    let config = config
        .clone()
        .with_source(source)
        .expect("honest nodes are valid sources");

    let mut incomplete = 0;
    let outcome: AttackOutcome = match attack {
        AttackSpec::Map { prior_size } => {
            let prior = sample_prior(&curious, source, prior_size, rng);
            let stop = |e: &[TimedEntry]| prior.contains(e[e.len() - 1].event.sender);
            let (view, capped) = observe_until(&config, rng, stop)?;
            incomplete += capped as u64;
            map_attack(&view, &prior, rng)
        }
        AttackSpec::MultiRumor { rumors, k } => {
            let mut views = Vec::with_capacity(rumors);
            for _ in 0..rumors {
                let mut distinct: Vec<NodeId> = Vec::with_capacity(k);
                let stop = |e: &[TimedEntry]| {
                    let sender = e[e.len() - 1].event.sender;
                    if !curious.contains(sender) && !distinct.contains(&sender) {
                        distinct.push(sender);
                    }
                    distinct.len() >= k
                };
                let (view, capped) = observe_until(&config, rng, stop)?;
                incomplete += capped as u64;
                views.push(view);
            }
            multi_rumor_attack(&views, k, rng)?
        }
        AttackSpec::Silence { window } => {
            let stop = |e: &[TimedEntry]| {
                let last = e.len() - 1;
                e.len() > window || (last > 0 && e[last].event.sender == e[0].event.sender)
            };
            let (view, capped) = observe_until(&config, rng, stop)?;
            incomplete += capped as u64;
            silence_attack(&view, window)?
        }
    };
    Ok(AttackTally {
        correct: outcome.correct as u64,
        abstained: outcome.abstained() as u64,
        incomplete: incomplete.min(1),
    })
}

/// `source` plus `size - 1` other honest nodes chosen uniformly.
fn sample_prior<R: Rng + ?Sized>(
    curious: &CuriousSet,
    source: NodeId,
    size: usize,
    rng: &mut R,
) -> Prior {
    let others = curious.n() - curious.len() - 1;
    let picked = index::sample(rng, others, size - 1).into_iter().map(|i| {
        // Skip over the source's id.
        let id = if i >= source.index() { i + 1 } else { i };
        NodeId(id as u32)
    });
    Prior::new(std::iter::once(source).chain(picked), curious).expect("members are honest")
}

fn observe_until<F>(
    config: &GossipConfig,
    rng: &mut RngStream,
    stop: F,
) -> Result<(ObservedSequence, bool), ProtocolError>
where
    F: FnMut(&[TimedEntry]) -> bool,
{
    let mut sink = ObservingSink::new(config.curious(), config.source(), stop);
    let status = run_variant_into(config, rng, &mut sink)?;
    Ok((
        sink.into_view().into_untimed(),
        status.completion == Completion::Capped,
    ))
}
