use rand::Rng;

use crate::model::{Event, EventSink, Flow, GossipConfig, NodeId};

use super::ProtocolError;

const ABSENT: u32 = u32::MAX;

/// A set of nodes with O(1) insert, remove and uniform sampling.
#[derive(Debug, Clone)]
pub struct ActiveSet {
    members: Vec<NodeId>,
    slot: Vec<u32>,
}

impl ActiveSet {
    pub fn new(n: usize) -> Self {
        ActiveSet {
            members: Vec::new(),
            slot: vec![ABSENT; n],
        }
    }

    #[inline]
    pub fn contains(&self, id: NodeId) -> bool {
        self.slot[id.index()] != ABSENT
    }

    /// Returns `true` if `id` was not already present.
    #[inline]
    pub fn insert(&mut self, id: NodeId) -> bool {
        if self.contains(id) {
            return false;
        }
        self.slot[id.index()] = self.members.len() as u32;
        self.members.push(id);
        true
    }

    /// Returns `true` if `id` was present.
    #[inline]
    pub fn remove(&mut self, id: NodeId) -> bool {
        let pos = self.slot[id.index()];
        if pos == ABSENT {
            return false;
        }
        let last = self.members.pop().expect("slot points into members");
        if last != id {
            self.members[pos as usize] = last;
            self.slot[last.index()] = pos;
        }
        self.slot[id.index()] = ABSENT;
        true
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> NodeId {
        self.members[rng.random_range(0..self.members.len())]
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn as_slice(&self) -> &[NodeId] {
        &self.members
    }

    /// Empties the set and returns its former members in internal order.
    pub fn drain(&mut self) -> Vec<NodeId> {
        for id in &self.members {
            self.slot[id.index()] = ABSENT;
        }
        std::mem::take(&mut self.members)
    }
}

/// Informed-node flags with a running count.
#[derive(Debug, Clone)]
pub struct InformedSet {
    flags: Vec<bool>,
    count: usize,
}

impl InformedSet {
    pub fn new(n: usize) -> Self {
        InformedSet {
            flags: vec![false; n],
            count: 0,
        }
    }

    #[inline]
    pub fn contains(&self, id: NodeId) -> bool {
        self.flags[id.index()]
    }

    #[inline]
    pub fn insert(&mut self, id: NodeId) -> bool {
        let slot = &mut self.flags[id.index()];
        if *slot {
            return false;
        }
        *slot = true;
        self.count += 1;
        true
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn is_full(&self) -> bool {
        self.count == self.flags.len()
    }
}

/// Informed set `I`, active set `A` and the number of calls made so far.
#[derive(Debug, Clone)]
pub struct ProtocolState {
    n: usize,
    informed: InformedSet,
    active: ActiveSet,
    steps: u64,
}

impl ProtocolState {
    /// `I = A = {source}`.
    pub fn new(config: &GossipConfig) -> Self {
        let n = config.n();
        let mut informed = InformedSet::new(n);
        let mut active = ActiveSet::new(n);
        informed.insert(config.source());
        active.insert(config.source());
        ProtocolState {
            n,
            informed,
            active,
            steps: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn informed(&self) -> &InformedSet {
        &self.informed
    }

    pub fn active(&self) -> &ActiveSet {
        &self.active
    }

    pub fn active_mut(&mut self) -> &mut ActiveSet {
        &mut self.active
    }

    /// Calls made so far; also the global index of the next event.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// `sender` tells the rumor to a node drawn uniformly from all `n` nodes
    /// (itself included). The receiver becomes informed and active, and the
    /// event goes to `sink`.
    pub fn tell_gossip<R, S>(
        &mut self,
        sender: NodeId,
        rng: &mut R,
        sink: &mut S,
    ) -> Result<(NodeId, Flow), ProtocolError>
    where
        R: Rng + ?Sized,
        S: EventSink + ?Sized,
    {
        if sender.index() >= self.n || !self.informed.contains(sender) {
            return Err(ProtocolError::SenderNotInformed(sender));
        }
        let receiver = NodeId(rng.random_range(0..self.n as u32));
        self.informed.insert(receiver);
        self.active.insert(receiver);
        let step = self.steps;
        self.steps += 1;
        let flow = sink.record(step, Event::new(sender, receiver));
        Ok((receiver, flow))
    }
}

/// Coin for "stays active after sending"; no draw at the extremes.
#[inline]
pub(crate) fn stays_active<R: Rng + ?Sized>(rng: &mut R, s: f64) -> bool {
    if s >= 1.0 {
        true
    } else if s <= 0.0 {
        false
    } else {
        rng.random_bool(s)
    }
}
