use crate::model::{CuriousSet, Event, EventSink, ExecutionTrace, Flow, NodeId};

/// The adversary's view: every message received by a curious node, in
/// order, without global indices.
///
/// `true_source` is ground truth carried along for scoring attacks; attacks
/// never read it to make a prediction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservedSequence {
    entries: Vec<Event>,
    curious: CuriousSet,
    true_source: NodeId,
}

impl ObservedSequence {
    pub fn new(entries: Vec<Event>, curious: CuriousSet, true_source: NodeId) -> Self {
        debug_assert!(entries.iter().all(|e| curious.contains(e.receiver)));
        ObservedSequence {
            entries,
            curious,
            true_source,
        }
    }

    pub fn entries(&self) -> &[Event] {
        &self.entries
    }

    pub fn senders(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.entries.iter().map(|e| e.sender)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn curious(&self) -> &CuriousSet {
        &self.curious
    }

    pub fn true_source(&self) -> NodeId {
        self.true_source
    }

    /// `t_d(node)`: rank of the first entry sent by `node`.
    pub fn first_rank(&self, node: NodeId) -> Option<usize> {
        self.entries.iter().position(|e| e.sender == node)
    }
}

/// One observed message with its global index in the omniscient sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimedEntry {
    pub step: u64,
    pub event: Event,
}

/// The view of an adversary that also knows global send indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimedObservedSequence {
    entries: Vec<TimedEntry>,
    curious: CuriousSet,
    true_source: NodeId,
}

impl TimedObservedSequence {
    pub fn new(curious: CuriousSet, true_source: NodeId) -> Self {
        TimedObservedSequence {
            entries: Vec::new(),
            curious,
            true_source,
        }
    }

    pub fn entries(&self) -> &[TimedEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn true_source(&self) -> NodeId {
        self.true_source
    }

    /// Sender of the message at global index 0, if a curious node received it.
    pub fn first_step_disclosure(&self) -> Option<NodeId> {
        self.entries
            .first()
            .filter(|e| e.step == 0)
            .map(|e| e.event.sender)
    }

    /// Drops the global indices.
    pub fn untimed(&self) -> ObservedSequence {
        ObservedSequence::new(
            self.entries.iter().map(|e| e.event).collect(),
            self.curious,
            self.true_source,
        )
    }

    pub fn into_untimed(self) -> ObservedSequence {
        ObservedSequence::new(
            self.entries.into_iter().map(|e| e.event).collect(),
            self.curious,
            self.true_source,
        )
    }

    fn push(&mut self, entry: TimedEntry) {
        self.entries.push(entry);
    }
}

/// Order-preserving subsequence of events whose receiver is curious.
pub fn observe(trace: &ExecutionTrace, curious: &CuriousSet) -> ObservedSequence {
    let entries = trace
        .events()
        .iter()
        .copied()
        .filter(|e| curious.contains(e.receiver))
        .collect();
    ObservedSequence::new(entries, *curious, trace.config().source())
}

/// Same subsequence as [`observe`], keeping each entry's global index.
pub fn observe_timed(trace: &ExecutionTrace, curious: &CuriousSet) -> TimedObservedSequence {
    let mut seq = TimedObservedSequence::new(*curious, trace.config().source());
    for (step, e) in trace.events().iter().enumerate() {
        if curious.contains(e.receiver) {
            seq.push(TimedEntry {
                step: step as u64,
                event: *e,
            });
        }
    }
    seq
}

/// Builds the timed view while an engine runs, so callers can stop a run as
/// soon as what they measure is decided.
///
/// `stop` is consulted after every newly observed entry. With
/// `stop_after_steps(k)` the run also ends once `k` events have happened,
/// observed or not.
pub struct ObservingSink<F> {
    view: TimedObservedSequence,
    stop: F,
    step_limit: Option<u64>,
}

impl<F> ObservingSink<F>
where
    F: FnMut(&[TimedEntry]) -> bool,
{
    pub fn new(curious: CuriousSet, true_source: NodeId, stop: F) -> Self {
        ObservingSink {
            view: TimedObservedSequence::new(curious, true_source),
            stop,
            step_limit: None,
        }
    }

    pub fn stop_after_steps(mut self, steps: u64) -> Self {
        self.step_limit = Some(steps);
        self
    }

    pub fn view(&self) -> &TimedObservedSequence {
        &self.view
    }

    pub fn into_view(self) -> TimedObservedSequence {
        self.view
    }
}

impl<F> EventSink for ObservingSink<F>
where
    F: FnMut(&[TimedEntry]) -> bool,
{
    fn record(&mut self, step: u64, event: Event) -> Flow {
        if self.view.curious.contains(event.receiver) {
            self.view.push(TimedEntry { step, event });
            if (self.stop)(&self.view.entries) {
                return Flow::Stop;
            }
        }
        match self.step_limit {
            Some(limit) if step + 1 >= limit => Flow::Stop,
            _ => Flow::Continue,
        }
    }
}
