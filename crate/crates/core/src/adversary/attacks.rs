use std::collections::HashMap;

use rand::seq::IndexedRandom;
use rand::Rng;
use thiserror::Error;

use crate::model::{CuriousSet, NodeId};

use super::observe::ObservedSequence;

/// Result of one source-location attack against one execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttackOutcome {
    /// `None` when the attack abstains.
    pub predicted: Option<NodeId>,
    pub correct: bool,
    /// Rank of the true source's first entry as a sender, if any.
    pub rank_of_source: Option<usize>,
}

impl AttackOutcome {
    pub fn score(predicted: Option<NodeId>, source: NodeId, rank_of_source: Option<usize>) -> Self {
        AttackOutcome {
            predicted,
            correct: predicted == Some(source),
            rank_of_source,
        }
    }

    pub fn abstained(&self) -> bool {
        self.predicted.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AttackError {
    #[error("the prior must contain at least one node")]
    EmptyPrior,
    #[error("prior node {0} is curious and cannot be the source")]
    CuriousInPrior(NodeId),
    #[error("prior node {node} is not a node of a graph with n = {n}")]
    PriorOutOfRange { node: NodeId, n: usize },
    #[error("a prior of {size} nodes does not fit among {honest} honest nodes")]
    PriorTooLarge { size: usize, honest: usize },
    #[error("no observations to attack")]
    NoObservations,
    #[error("observations come from different sources")]
    MixedSources,
    #[error("window size must be at least 1")]
    ZeroWindow,
}

/// The set of nodes the adversary knows contains the source; uniform
/// weight on each member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prior {
    members: Vec<NodeId>,
    flags: Vec<bool>,
}

impl Prior {
    pub fn new<I>(nodes: I, curious: &CuriousSet) -> Result<Self, AttackError>
    where
        I: IntoIterator<Item = NodeId>,
    {
        let n = curious.n();
        let mut flags = vec![false; n];
        let mut members = Vec::new();
        for node in nodes {
            if node.index() >= n {
                return Err(AttackError::PriorOutOfRange { node, n });
            }
            if curious.contains(node) {
                return Err(AttackError::CuriousInPrior(node));
            }
            if !flags[node.index()] {
                flags[node.index()] = true;
                members.push(node);
            }
        }
        if members.is_empty() {
            return Err(AttackError::EmptyPrior);
        }
        members.sort_unstable();
        Ok(Prior { members, flags })
    }

    /// Every non-curious node.
    pub fn all_honest(curious: &CuriousSet) -> Self {
        let honest = (0..curious.n() as u32)
            .map(NodeId)
            .filter(|id| !curious.contains(*id));
        Prior::new(honest, curious).expect("f <= n - 2 leaves honest nodes")
    }

    #[inline]
    pub fn contains(&self, node: NodeId) -> bool {
        self.flags.get(node.index()).copied().unwrap_or(false)
    }

    pub fn members(&self) -> &[NodeId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// MAP estimate under a uniform prior over `prior`: the first observed
/// sender that belongs to the prior. Without one, a uniform guess from the
/// prior.
pub fn map_attack<R: Rng + ?Sized>(
    observed: &ObservedSequence,
    prior: &Prior,
    rng: &mut R,
) -> AttackOutcome {
    let predicted = observed
        .senders()
        .find(|s| prior.contains(*s))
        .unwrap_or_else(|| *prior.members().choose(rng).expect("prior is non-empty"));
    let source = observed.true_source();
    AttackOutcome::score(Some(predicted), source, observed.first_rank(source))
}

/// Up to `k` distinct non-curious senders with the rank of their first entry.
pub fn first_distinct_senders(observed: &ObservedSequence, k: usize) -> Vec<(NodeId, usize)> {
    let mut out: Vec<(NodeId, usize)> = Vec::with_capacity(k);
    for (rank, sender) in observed.senders().enumerate() {
        if out.len() == k {
            break;
        }
        if observed.curious().contains(sender) || out.iter().any(|(s, _)| *s == sender) {
            continue;
        }
        out.push((sender, rank));
    }
    out
}

/// Attack on several rumors spread by the same source.
///
/// Each instance contributes its first `k` distinct non-curious senders. The
/// prediction is the node present in the most instances; ties go to the
/// smallest earliest rank over all instances, then uniformly at random.
pub fn multi_rumor_attack<R: Rng + ?Sized>(
    observations: &[ObservedSequence],
    k: usize,
    rng: &mut R,
) -> Result<AttackOutcome, AttackError> {
    if k == 0 {
        return Err(AttackError::ZeroWindow);
    }
    let first = observations.first().ok_or(AttackError::NoObservations)?;
    let source = first.true_source();
    if observations.iter().any(|o| o.true_source() != source) {
        return Err(AttackError::MixedSources);
    }

    // node -> (instances, earliest rank)
    let mut tally: HashMap<NodeId, (usize, usize)> = HashMap::new();
    for obs in observations {
        for (node, rank) in first_distinct_senders(obs, k) {
            let e = tally.entry(node).or_insert((0, usize::MAX));
            e.0 += 1;
            e.1 = e.1.min(rank);
        }
    }
    let best = tally
        .iter()
        .map(|(_, &(count, rank))| (count, std::cmp::Reverse(rank)))
        .max();
    let predicted = best.and_then(|key| {
        let mut tied: Vec<NodeId> = tally
            .iter()
            .filter(|(_, &(c, r))| (c, std::cmp::Reverse(r)) == key)
            .map(|(node, _)| *node)
            .collect();
        tied.sort_unstable();
        tied.choose(rng).copied()
    });
    let rank_of_source = observations
        .iter()
        .filter_map(|o| o.first_rank(source))
        .min();
    Ok(AttackOutcome::score(predicted, source, rank_of_source))
}

/// `ceil(ln(n)^2)`.
pub fn default_silence_window(n: usize) -> usize {
    let l = (n as f64).ln();
    (l * l).ceil() as usize
}

/// Accuses the first observed sender if it does not show up again as a
/// sender among the next `r` entries; abstains otherwise or when nothing was
/// observed.
pub fn silence_attack(observed: &ObservedSequence, r: usize) -> Result<AttackOutcome, AttackError> {
    if r == 0 {
        return Err(AttackError::ZeroWindow);
    }
    let source = observed.true_source();
    let rank = observed.first_rank(source);
    let Some(first) = observed.entries().first() else {
        return Ok(AttackOutcome::score(None, source, rank));
    };
    let x = first.sender;
    let speaks_again = observed.senders().skip(1).take(r).any(|s| s == x);
    let predicted = (!speaks_again).then_some(x);
    Ok(AttackOutcome::score(predicted, source, rank))
}
