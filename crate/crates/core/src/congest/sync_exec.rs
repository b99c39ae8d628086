//! Lock-step executor: every message sent in round `t` is delivered at the
//! start of round `t + 1`, and a node computes in a round exactly when its
//! inbox is non-empty.

use std::collections::BTreeMap;

use super::{
    digest_debug, validate_outbox, Counters, EventRecord, NodeCtx, NodeProgram, Observations,
    Round, SimConfig, SimError, Transcript,
};
use crate::graph::{Graph, NodeId};

#[derive(Debug, Clone)]
pub struct SyncOutcome<P: NodeProgram> {
    pub states: Vec<P::State>,
    /// Per node, the (round, inbox) pairs it computed on, in round order.
    pub observations: Observations<P::Msg>,
    pub transcript: Transcript,
}

/// Runs `prog` on `g` until no messages remain in flight. Errors if the
/// program violates the messaging rules or outlives `cfg.max_rounds`.
pub fn run_sync<P: NodeProgram>(
    prog: &P,
    g: &Graph,
    cfg: &SimConfig,
) -> Result<SyncOutcome<P>, SimError> {
    let n = g.n();
    let budget = prog.bit_budget(n);
    let mut counters = Counters::default();
    let mut events = Vec::new();
    let mut states: Vec<P::State> = Vec::with_capacity(n);
    let mut observations: Observations<P::Msg> = vec![Vec::new(); n];
    // Messages sent in the round just executed, pending delivery.
    let mut pending: Vec<(NodeId, NodeId, P::Msg)> = Vec::new();

    for v in 0..n {
        let ctx = NodeCtx {
            id: v,
            neighbors: g.neighbors(v),
            n,
        };
        let (state, outbox) = prog.init(&ctx);
        validate_outbox(prog, &ctx, 1, &outbox, budget, &mut counters.max_payload_bits)?;
        counters.steps += 1;
        counters.alg_msgs += outbox.len() as u64;
        if !outbox.is_empty() {
            counters.rounds = 1;
        }
        for (to, msg) in outbox {
            pending.push((v, to, msg));
        }
        states.push(state);
    }

    let mut round: Round = 1;
    while !pending.is_empty() {
        round += 1;
        if round > cfg.max_rounds {
            return Err(SimError::RoundBudgetExceeded {
                max: cfg.max_rounds,
            });
        }
        let mut inboxes: BTreeMap<NodeId, Vec<(NodeId, P::Msg)>> = BTreeMap::new();
        for (from, to, msg) in std::mem::take(&mut pending) {
            inboxes.entry(to).or_default().push((from, msg));
        }
        for (v, mut inbox) in inboxes {
            inbox.sort_by_key(|&(from, _)| from);
            if cfg.record_events {
                for (from, msg) in &inbox {
                    counters.events += 1;
                    events.push(EventRecord {
                        time: (round - 1) as f64,
                        seq: counters.events,
                        node: v,
                        from: Some(*from),
                        kind: "alg",
                        round,
                        digest: digest_debug(msg),
                    });
                }
            } else {
                counters.events += inbox.len() as u64;
            }
            if counters.events > cfg.event_cap {
                return Err(SimError::EventCapExceeded { cap: cfg.event_cap });
            }
            let ctx = NodeCtx {
                id: v,
                neighbors: g.neighbors(v),
                n,
            };
            let outbox = prog.on_round(&ctx, &mut states[v], round, &inbox);
            counters.steps += 1;
            validate_outbox(prog, &ctx, round, &outbox, budget, &mut counters.max_payload_bits)?;
            counters.alg_msgs += outbox.len() as u64;
            if !outbox.is_empty() {
                counters.rounds = round;
            }
            observations[v].push((round, inbox));
            for (to, msg) in outbox {
                pending.push((v, to, msg));
            }
        }
    }
    counters.sim_time = counters.rounds as f64;

    Ok(SyncOutcome {
        states,
        observations,
        transcript: Transcript { counters, events },
    })
}
