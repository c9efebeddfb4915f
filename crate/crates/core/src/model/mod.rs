//! Domain types shared by every other module.

mod config;
mod rng;
mod trace;

pub use config::{default_step_cap, ConfigError, CuriousSet, GossipConfig, NodeId, Variant};
pub use rng::{spawn_stream, RngStream, StreamFamily, STREAMS_PER_GRID_POINT};
pub use trace::{Completion, Event, EventSink, ExecutionTrace, Flow, NullSink, TraceError};
