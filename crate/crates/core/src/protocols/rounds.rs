use std::collections::HashSet;

use thiserror::Error;

use crate::model::Event;

/// Counters for one synchronous round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundRecord {
    pub round: u64,
    /// Informed nodes at the end of the round.
    pub informed: u64,
    /// Active nodes at the start of the round (the senders).
    pub active: u64,
    pub messages_sent: u64,
    pub cumulative_messages: u64,
    /// Senders that stayed active without receiving anything this round.
    pub retained: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RoundError {
    #[error("round {round}: informed count decreased")]
    InformedDecreased { round: u64 },
    #[error("round {round}: no active node")]
    NoActiveNode { round: u64 },
    #[error("round {round}: cumulative message count is inconsistent")]
    MessageCount { round: u64 },
    #[error("round {round}: expected {expected} active nodes next round, recorded {found}")]
    Conservation {
        round: u64,
        expected: u64,
        found: u64,
    },
    #[error("round counters cover {counted} events but the trace has {events}")]
    EventCount { counted: u64, events: usize },
}

/// Per-round counters of a synchronous run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RoundTrace {
    records: Vec<RoundRecord>,
}

impl RoundTrace {
    pub fn push(&mut self, record: RoundRecord) {
        self.records.push(record);
    }

    pub fn records(&self) -> &[RoundRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn total_messages(&self) -> u64 {
        self.records.last().map_or(0, |r| r.cumulative_messages)
    }

    /// Checks monotonicity and recomputes each round's successor active
    /// count from the raw events: `|receivers| + retained`.
    pub fn validate(&self, events: &[Event]) -> Result<(), RoundError> {
        let mut prev_informed = 0;
        let mut cumulative = 0u64;
        for (i, rec) in self.records.iter().enumerate() {
            let round = rec.round;
            if rec.informed < prev_informed {
                return Err(RoundError::InformedDecreased { round });
            }
            prev_informed = rec.informed;
            if rec.active == 0 {
                return Err(RoundError::NoActiveNode { round });
            }
            let start = cumulative;
            cumulative += rec.messages_sent;
            if cumulative != rec.cumulative_messages || cumulative as usize > events.len() {
                return Err(RoundError::MessageCount { round });
            }
            if let Some(next) = self.records.get(i + 1) {
                if rec.messages_sent != rec.active {
                    return Err(RoundError::MessageCount { round });
                }
                let receivers: HashSet<_> = events[start as usize..cumulative as usize]
                    .iter()
                    .map(|e| e.receiver)
                    .collect();
                let expected = receivers.len() as u64 + rec.retained;
                if expected != next.active {
                    return Err(RoundError::Conservation {
                        round,
                        expected,
                        found: next.active,
                    });
                }
            }
        }
        if cumulative as usize != events.len() {
            return Err(RoundError::EventCount {
                counted: cumulative,
                events: events.len(),
            });
        }
        Ok(())
    }
}
