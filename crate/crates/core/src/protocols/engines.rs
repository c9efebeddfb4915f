use rand::Rng;

use crate::model::{Completion, Event, EventSink, ExecutionTrace, Flow, GossipConfig, Variant};

use super::rounds::{RoundRecord, RoundTrace};
use super::state::{stays_active, ProtocolState};
use super::ProtocolError;

/// How a run ended and how many `tell_gossip` calls it made.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunStatus {
    pub completion: Completion,
    pub steps: u64,
}

fn expect_variant(config: &GossipConfig, expected: Variant) -> Result<(), ProtocolError> {
    if config.variant() != expected {
        return Err(ProtocolError::WrongVariant {
            expected,
            found: config.variant(),
        });
    }
    Ok(())
}

fn collect<F>(config: &GossipConfig, run: F) -> Result<ExecutionTrace, ProtocolError>
where
    F: FnOnce(&mut Vec<Event>) -> Result<RunStatus, ProtocolError>,
{
    let mut events = Vec::new();
    let status = run(&mut events)?;
    Ok(ExecutionTrace::new(
        config.clone(),
        events,
        status.completion,
    ))
}

/// Asynchronous parameterized gossip; returns the full trace.
pub fn run_async<R: Rng + ?Sized>(
    config: &GossipConfig,
    rng: &mut R,
) -> Result<ExecutionTrace, ProtocolError> {
    collect(config, |events| run_async_into(config, rng, events))
}

/// Asynchronous parameterized gossip streaming its events into `sink`.
///
/// Each step samples `i` uniformly from `A`, drops it from `A` with
/// probability `1 - s`, then lets it call `tell_gossip`.
pub fn run_async_into<R, S>(
    config: &GossipConfig,
    rng: &mut R,
    sink: &mut S,
) -> Result<RunStatus, ProtocolError>
where
    R: Rng + ?Sized,
    S: EventSink + ?Sized,
{
    expect_variant(config, Variant::Parameterized)?;
    let mut state = ProtocolState::new(config);
    push_loop(&mut state, config.s(), config.step_cap(), rng, sink)
}

/// Delayed-start gossip; returns the full trace.
pub fn run_delayed_start<R: Rng + ?Sized>(
    config: &GossipConfig,
    rng: &mut R,
) -> Result<ExecutionTrace, ProtocolError> {
    collect(config, |events| run_delayed_start_into(config, rng, events))
}

/// The source tells one node and leaves `A`; standard asynchronous push
/// (`s = 1`) runs from there. The source rejoins `A` only if it is told
/// the rumor again.
pub fn run_delayed_start_into<R, S>(
    config: &GossipConfig,
    rng: &mut R,
    sink: &mut S,
) -> Result<RunStatus, ProtocolError>
where
    R: Rng + ?Sized,
    S: EventSink + ?Sized,
{
    expect_variant(config, Variant::DelayedStart)?;
    let mut state = ProtocolState::new(config);
    let source = config.source();
    state.active_mut().remove(source);
    let (_, flow) = state.tell_gossip(source, rng, sink)?;
    if state.informed().is_full() {
        return Ok(status(&state, Completion::Completed));
    }
    if flow == Flow::Stop {
        return Ok(status(&state, Completion::Stopped));
    }
    push_loop(&mut state, 1.0, config.step_cap(), rng, sink)
}

/// Runs whichever asynchronous engine `config.variant()` selects.
pub fn run_variant_into<R, S>(
    config: &GossipConfig,
    rng: &mut R,
    sink: &mut S,
) -> Result<RunStatus, ProtocolError>
where
    R: Rng + ?Sized,
    S: EventSink + ?Sized,
{
    match config.variant() {
        Variant::Parameterized => run_async_into(config, rng, sink),
        Variant::DelayedStart => run_delayed_start_into(config, rng, sink),
    }
}

fn status(state: &ProtocolState, completion: Completion) -> RunStatus {
    RunStatus {
        completion,
        steps: state.steps(),
    }
}

fn push_loop<R, S>(
    state: &mut ProtocolState,
    s: f64,
    cap: u64,
    rng: &mut R,
    sink: &mut S,
) -> Result<RunStatus, ProtocolError>
where
    R: Rng + ?Sized,
    S: EventSink + ?Sized,
{
    while !state.informed().is_full() {
        if state.steps() >= cap {
            return Ok(status(state, Completion::Capped));
        }
        let sender = state.active().sample(rng);
        if !stays_active(rng, s) {
            state.active_mut().remove(sender);
        }
        let (_, flow) = state.tell_gossip(sender, rng, sink)?;
        if flow == Flow::Stop && !state.informed().is_full() {
            return Ok(status(state, Completion::Stopped));
        }
    }
    Ok(status(state, Completion::Completed))
}

/// Synchronous rounds; returns the full trace and the per-round counts.
pub fn run_sync<R: Rng + ?Sized>(
    config: &GossipConfig,
    rng: &mut R,
) -> Result<(ExecutionTrace, RoundTrace), ProtocolError> {
    let mut events = Vec::new();
    let (status, rounds) = run_sync_into(config, rng, &mut events)?;
    Ok((
        ExecutionTrace::new(config.clone(), events, status.completion),
        rounds,
    ))
}

/// Synchronous version of parameterized gossip.
///
/// Every node of the round-start snapshot of `A` sends exactly one message,
/// then stays active with probability `s`. Receivers are active in the next
/// round. Rounds are atomic: the run ends at the end of the round in which
/// the last node is informed (unless the cap or the sink interrupts it).
pub fn run_sync_into<R, S>(
    config: &GossipConfig,
    rng: &mut R,
    sink: &mut S,
) -> Result<(RunStatus, RoundTrace), ProtocolError>
where
    R: Rng + ?Sized,
    S: EventSink + ?Sized,
{
    expect_variant(config, Variant::Parameterized)?;
    let s = config.s();
    let cap = config.step_cap();
    let mut state = ProtocolState::new(config);
    let mut rounds = RoundTrace::default();
    // Round in which each node last received a message, offset by one.
    let mut received_in = vec![0u64; config.n()];
    let mut stayed = Vec::new();
    let mut round = 0u64;

    while !state.informed().is_full() {
        let senders = state.active_mut().drain();
        let start_steps = state.steps();
        stayed.clear();
        let mut interrupted = None;
        for &sender in &senders {
            if state.steps() >= cap {
                interrupted = Some(Completion::Capped);
                break;
            }
            let (receiver, flow) = state.tell_gossip(sender, rng, sink)?;
            received_in[receiver.index()] = round + 1;
            if stays_active(rng, s) {
                state.active_mut().insert(sender);
                stayed.push(sender);
            }
            if flow == Flow::Stop {
                interrupted = Some(Completion::Stopped);
                break;
            }
        }
        let retained = stayed
            .iter()
            .filter(|id| received_in[id.index()] != round + 1)
            .count() as u64;
        rounds.push(RoundRecord {
            round,
            informed: state.informed().len() as u64,
            active: senders.len() as u64,
            messages_sent: state.steps() - start_steps,
            cumulative_messages: state.steps(),
            retained,
        });
        if let Some(completion) = interrupted {
            let completion = if state.informed().is_full() {
                Completion::Completed
            } else {
                completion
            };
            return Ok((status(&state, completion), rounds));
        }
        round += 1;
    }
    Ok((status(&state, Completion::Completed), rounds))
}
