//! Muting-parameterized push gossip on the complete graph.
//!
//! Nodes that know the rumor tell it to uniformly random nodes; after every
//! send a node stays active with probability `s`. A fixed set of curious
//! nodes reports every message it receives, in order, to an adversary who
//! tries to locate the source.
//!
//! * [`model`]: configuration, node ids, traces and random streams.
//! * [`protocols`]: asynchronous, synchronous and delayed-start engines.
//! * [`adversary`]: the adversary's view and source-location attacks.
//! * [`bounds`]: closed-form privacy and speed guarantees, mean dynamics.
//! * [`estimators`]: Monte Carlo estimates with confidence intervals.

pub mod adversary;
pub mod bounds;
pub mod estimators;
pub mod model;
pub mod protocols;

pub use model::{
    spawn_stream, CuriousSet, Event, ExecutionTrace, GossipConfig, NodeId, RngStream, StreamFamily,
    Variant,
};
