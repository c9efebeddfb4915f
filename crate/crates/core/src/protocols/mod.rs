//! Gossip engines: asynchronous parameterized gossip, its synchronous
//! round-based version, and delayed-start gossip.

mod engines;
mod rounds;
mod state;

use thiserror::Error;

use crate::model::{NodeId, Variant};

pub use engines::{
    run_async, run_async_into, run_delayed_start, run_delayed_start_into, run_sync, run_sync_into,
    run_variant_into, RunStatus,
};
pub use rounds::{RoundError, RoundRecord, RoundTrace};
pub(crate) use state::stays_active;
pub use state::{ActiveSet, InformedSet, ProtocolState};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("node {0} called tell_gossip without being informed")]
    SenderNotInformed(NodeId),
    #[error("engine expects the {expected} variant, config selects {found}")]
    WrongVariant { expected: Variant, found: Variant },
}
