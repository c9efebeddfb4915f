use std::io::{self, Write};

use thiserror::Error;

use super::config::{GossipConfig, NodeId};

/// One `tell_gossip` call: `sender` told the rumor to `receiver`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    pub sender: NodeId,
    pub receiver: NodeId,
}

impl Event {
    pub fn new(sender: NodeId, receiver: NodeId) -> Self {
        Event { sender, receiver }
    }
}

/// Whether an engine should keep going after an event was recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

/// Receives events in global order as an engine produces them.
///
/// `step` is the event's index in the omniscient sequence. Returning
/// [`Flow::Stop`] ends the run early; engines report that as
/// [`Completion::Stopped`].
pub trait EventSink {
    fn record(&mut self, step: u64, event: Event) -> Flow;
}

impl EventSink for Vec<Event> {
    fn record(&mut self, _step: u64, event: Event) -> Flow {
        self.push(event);
        Flow::Continue
    }
}

impl<S: EventSink + ?Sized> EventSink for &mut S {
    fn record(&mut self, step: u64, event: Event) -> Flow {
        (**self).record(step, event)
    }
}

/// Discards events; used when only aggregate counters matter.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl EventSink for NullSink {
    fn record(&mut self, _step: u64, _event: Event) -> Flow {
        Flow::Continue
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completion {
    /// Every node is informed.
    Completed,
    /// The step cap was reached first.
    Capped,
    /// The event sink asked the engine to stop.
    Stopped,
}

impl Completion {
    pub fn as_str(self) -> &'static str {
        match self {
            Completion::Completed => "completed",
            Completion::Capped => "capped",
            Completion::Stopped => "stopped",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("trace has no events")]
    Empty,
    #[error("first event is sent by {found}, not by the source {expected}")]
    FirstSenderNotSource { expected: NodeId, found: NodeId },
    #[error("event {step} references node {node} outside 0..{n}")]
    NodeOutOfRange { step: usize, node: NodeId, n: usize },
    #[error("event {step}: sender {sender} was not informed yet")]
    UninformedSender { step: usize, sender: NodeId },
    #[error("trace is marked completed but only {informed} of {n} nodes were informed")]
    IncompleteCoverage { informed: usize, n: usize },
}

/// The omniscient ordered list of `(sender, receiver)` events of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionTrace {
    config: GossipConfig,
    events: Vec<Event>,
    completion: Completion,
}

impl ExecutionTrace {
    pub fn new(config: GossipConfig, events: Vec<Event>, completion: Completion) -> Self {
        ExecutionTrace {
            config,
            events,
            completion,
        }
    }

    pub fn config(&self) -> &GossipConfig {
        &self.config
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn completion(&self) -> Completion {
        self.completion
    }

    pub fn is_complete(&self) -> bool {
        self.completion == Completion::Completed
    }

    /// Replays the informed set and checks every structural invariant.
    pub fn validate(&self) -> Result<(), TraceError> {
        let n = self.config.n();
        let source = self.config.source();
        let first = self.events.first().ok_or(TraceError::Empty)?;
        if first.sender != source {
            return Err(TraceError::FirstSenderNotSource {
                expected: source,
                found: first.sender,
            });
        }
        let mut informed = vec![false; n];
        informed[source.index()] = true;
        let mut count = 1;
        for (step, ev) in self.events.iter().enumerate() {
            for node in [ev.sender, ev.receiver] {
                if node.index() >= n {
                    return Err(TraceError::NodeOutOfRange { step, node, n });
                }
            }
            if !informed[ev.sender.index()] {
                return Err(TraceError::UninformedSender {
                    step,
                    sender: ev.sender,
                });
            }
            if !informed[ev.receiver.index()] {
                informed[ev.receiver.index()] = true;
                count += 1;
            }
        }
        if self.is_complete() && count != n {
            return Err(TraceError::IncompleteCoverage { informed: count, n });
        }
        Ok(())
    }

    /// Writes `step,sender,receiver` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "step,sender,receiver")?;
        for (step, ev) in self.events.iter().enumerate() {
            writeln!(out, "{step},{},{}", ev.sender, ev.receiver)?;
        }
        Ok(())
    }
}
