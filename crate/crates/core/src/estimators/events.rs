use std::fmt;

use crate::adversary::{TimedEntry, TimedObservedSequence};
use crate::model::NodeId;

/// A set of observations, usable as a boolean test on one observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventSpec {
    /// The first observed entry is sent by `node`.
    FirstSenderIs(NodeId),
    /// `node` sends one of the first `r` observed entries.
    SenderRankLe { node: NodeId, r: usize },
    /// The very first message of the run (global index 0) reaches a curious
    /// node and is sent by `node`. Needs the timed view.
    TimedFirstDisclosure(NodeId),
}

impl EventSpec {
    pub fn holds(&self, view: &TimedObservedSequence) -> bool {
        let entries = view.entries();
        match *self {
            EventSpec::FirstSenderIs(node) => {
                entries.first().is_some_and(|e| e.event.sender == node)
            }
            EventSpec::SenderRankLe { node, r } => {
                entries.iter().take(r).any(|e| e.event.sender == node)
            }
            EventSpec::TimedFirstDisclosure(node) => view.first_step_disclosure() == Some(node),
        }
    }

    /// Whether more entries can no longer change [`EventSpec::holds`].
    pub fn decided(&self, entries: &[TimedEntry]) -> bool {
        match *self {
            EventSpec::FirstSenderIs(_) | EventSpec::TimedFirstDisclosure(_) => !entries.is_empty(),
            EventSpec::SenderRankLe { node, r } => {
                entries.len() >= r || entries.iter().any(|e| e.event.sender == node)
            }
        }
    }

    /// Number of global steps after which the event is decided regardless of
    /// what was observed, if any.
    pub fn step_horizon(&self) -> Option<u64> {
        match self {
            EventSpec::TimedFirstDisclosure(_) => Some(1),
            _ => None,
        }
    }
}

impl fmt::Display for EventSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventSpec::FirstSenderIs(node) => write!(f, "first_sender_is({node})"),
            EventSpec::SenderRankLe { node, r } => write!(f, "sender_rank_le({node},{r})"),
            EventSpec::TimedFirstDisclosure(node) => write!(f, "timed_first_disclosure({node})"),
        }
    }
}
