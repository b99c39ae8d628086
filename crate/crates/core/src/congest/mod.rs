//! Simulator for message-passing algorithms on a graph.
//!
//! Programs follow the synchronous round discipline: a node wakes once,
//! then reacts to the batch of messages delivered each round, sending only
//! to graph neighbors under a per-message bit budget. The synchronous
//! executor runs rounds in lock step; the asynchronous executor delivers
//! each message with its own delay and interposes a synchronizer so that
//! per-node observable behavior is identical.

mod async_exec;
pub mod programs;
mod sync_exec;

pub use async_exec::{gamma_init, run_async, AsyncOutcome, GammaInit, Synchronizer};
pub use sync_exec::{run_sync, SyncOutcome};

use serde::Serialize;
use std::path::Path;
use thiserror::Error;

use crate::graph::{Graph, NodeId, Weight};
use crate::hashing::{mix2, DOMAIN_DELAY};

pub type Round = u64;

/// Per node, the (round, inbox) pairs it computed on, in round order. Two
/// executions are observationally equal when these match node for node.
pub type Observations<M> = Vec<Vec<(Round, Vec<(NodeId, M)>)>>;

/// Simulated time in millionths of a time unit; all message delays lie in
/// (0, 1] so comparisons and sums stay exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Hash)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const UNIT: SimTime = SimTime(1_000_000);

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / Self::UNIT.0 as f64
    }

    pub fn saturating_add(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_add(other.0))
    }
}

/// What a node is allowed to know locally: its id, its incident edges, and
/// the network size.
pub struct NodeCtx<'a> {
    pub id: NodeId,
    pub neighbors: &'a [(NodeId, Weight)],
    pub n: usize,
}

impl NodeCtx<'_> {
    pub fn weight_to(&self, y: NodeId) -> Option<Weight> {
        self.neighbors
            .binary_search_by_key(&y, |&(v, _)| v)
            .ok()
            .map(|i| self.neighbors[i].1)
    }
}

/// A per-node state machine driven by message receipt.
pub trait NodeProgram {
    type State: Clone + PartialEq + std::fmt::Debug;
    type Msg: Clone + PartialEq + std::fmt::Debug;

    /// Round-1 wakeup: initial state and the messages sent that round.
    fn init(&self, ctx: &NodeCtx) -> (Self::State, Vec<(NodeId, Self::Msg)>);

    /// Reaction to the messages delivered in one round, given sorted by
    /// sender id. Not called on rounds with an empty inbox.
    fn on_round(
        &self,
        ctx: &NodeCtx,
        state: &mut Self::State,
        round: Round,
        inbox: &[(NodeId, Self::Msg)],
    ) -> Vec<(NodeId, Self::Msg)>;

    /// Size of a payload on the wire, in bits.
    fn payload_bits(&self, msg: &Self::Msg) -> u64;

    /// Largest payload the program is allowed to send on a graph with `n`
    /// vertices; both executors enforce it per message.
    fn bit_budget(&self, n: usize) -> u64;
}

/// Bits needed to write `x` in binary; 1 for zero.
pub fn bit_width(x: u64) -> u64 {
    (64 - x.leading_zeros() as u64).max(1)
}

/// Smallest `b` with `2^b >= x`; 0 for `x <= 1`.
pub fn ceil_log2(x: u64) -> u64 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros() as u64
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("node {node} addressed non-neighbor {to} in round {round}")]
    BadAddress { node: NodeId, to: NodeId, round: Round },
    #[error("node {node} sent {count} messages to {to} in round {round}; the model allows one per edge per round")]
    DuplicateMessage {
        node: NodeId,
        to: NodeId,
        round: Round,
        count: usize,
    },
    #[error("node {node} sent a {bits}-bit payload in round {round}, over the {budget}-bit budget")]
    PayloadOverBudget {
        node: NodeId,
        round: Round,
        bits: u64,
        budget: u64,
    },
    #[error("program still active after the {max}-round budget")]
    RoundBudgetExceeded { max: u64 },
    #[error("round-{round} message reached node {node} after it entered round {entered}; the synchronizer's decomposition does not cover the graph")]
    SynchronizerViolation {
        node: NodeId,
        round: Round,
        entered: Round,
    },
    #[error("decomposition is over {got} vertices but the graph has {expected}")]
    DecompositionMismatch { expected: usize, got: usize },
    #[error("event cap of {cap} exceeded; likely a livelock")]
    EventCapExceeded { cap: u64 },
    #[error("delay schedule exhausted at message index {index}")]
    ScheduleExhausted { index: u64 },
    #[error("schedule line {line}: malformed entry {content:?}")]
    ScheduleParse { line: usize, content: String },
    #[error("schedule line {line}: delay {value} outside (0, 1]")]
    ScheduleValue { line: usize, value: f64 },
    #[error("schedule index {index} duplicated")]
    ScheduleDup { index: u64 },
    #[error("schedule indices not contiguous: missing {index}")]
    ScheduleGap { index: u64 },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Message counters for one execution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Counters {
    /// Messages the program itself sent.
    pub alg_msgs: u64,
    /// Acknowledgements of program messages (asynchronous mode only).
    pub ack_msgs: u64,
    /// Synchronizer control traffic beyond acknowledgements.
    pub sync_msgs: u64,
    /// Total simulated time in time units.
    pub sim_time: f64,
    /// Largest round in which a program message was sent.
    pub rounds: u64,
    /// Compute phases each node executed.
    pub steps: u64,
    /// Events processed by the executor.
    pub events: u64,
    /// Largest program payload observed, in bits.
    pub max_payload_bits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRecord {
    pub time: f64,
    pub seq: u64,
    pub node: NodeId,
    pub from: Option<NodeId>,
    pub kind: &'static str,
    pub round: Round,
    /// Hash of the payload's debug form; 0 for control traffic.
    pub digest: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Transcript {
    pub counters: Counters,
    /// Per-delivery log, populated only when event recording is on.
    pub events: Vec<EventRecord>,
}

#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    /// Rounds after which a synchronous run aborts.
    pub max_rounds: u64,
    pub record_events: bool,
    /// Hard cap on processed events; trips on runaway control traffic.
    pub event_cap: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            max_rounds: 1_000_000,
            record_events: false,
            event_cap: 100_000_000,
        }
    }
}

/// Per-message delays in (0, 1], either hashed from a seed or loaded from an
/// explicit schedule file.
#[derive(Debug, Clone)]
pub enum DelaySchedule {
    Seeded { seed: u64 },
    Explicit { delays: Vec<SimTime> },
}

impl DelaySchedule {
    pub fn seeded(seed: u64) -> Self {
        DelaySchedule::Seeded { seed }
    }

    /// Parses lines of `msg_index delay`; indices must cover `0..k` exactly
    /// and delays must lie in (0, 1].
    pub fn parse(text: &str) -> Result<Self, SimError> {
        let mut entries: Vec<(u64, SimTime)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let mut toks = line.split_whitespace();
            let parsed = match (toks.next(), toks.next(), toks.next()) {
                (Some(i), Some(d), None) => i
                    .parse::<u64>()
                    .ok()
                    .and_then(|i| d.parse::<f64>().ok().map(|d| (i, d))),
                _ => None,
            };
            let Some((index, delay)) = parsed else {
                return Err(SimError::ScheduleParse {
                    line: lineno + 1,
                    content: line.to_string(),
                });
            };
            if !(delay > 0.0 && delay <= 1.0) {
                return Err(SimError::ScheduleValue {
                    line: lineno + 1,
                    value: delay,
                });
            }
            let micros = ((delay * SimTime::UNIT.0 as f64).round() as u64).clamp(1, SimTime::UNIT.0);
            entries.push((index, SimTime(micros)));
        }
        entries.sort_unstable_by_key(|&(i, _)| i);
        let mut delays = Vec::with_capacity(entries.len());
        for (pos, (index, d)) in entries.into_iter().enumerate() {
            match index.cmp(&(pos as u64)) {
                std::cmp::Ordering::Less => return Err(SimError::ScheduleDup { index }),
                std::cmp::Ordering::Greater => return Err(SimError::ScheduleGap { index: pos as u64 }),
                std::cmp::Ordering::Equal => delays.push(d),
            }
        }
        Ok(DelaySchedule::Explicit { delays })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Delay of the `index`-th message sent in a run.
    pub fn delay(&self, index: u64) -> Result<SimTime, SimError> {
        match self {
            DelaySchedule::Seeded { seed } => {
                let h = mix2(mix2(*seed, DOMAIN_DELAY), index);
                Ok(SimTime(1 + h % SimTime::UNIT.0))
            }
            DelaySchedule::Explicit { delays } => delays
                .get(index as usize)
                .copied()
                .ok_or(SimError::ScheduleExhausted { index }),
        }
    }
}

/// Rooted spanning forest used by the tree-based synchronizers.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanningForest {
    pub parent: Vec<Option<NodeId>>,
    pub children: Vec<Vec<NodeId>>,
    /// Tree height in edges, maximized over components.
    pub height: u64,
}

/// Breadth-first forest with the minimum id of each component as its root.
pub fn spanning_forest(g: &Graph) -> SpanningForest {
    let n = g.n();
    let mut parent: Vec<Option<NodeId>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut children = vec![Vec::new(); n];
    let mut height = 0u64;
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut frontier = vec![root];
        let mut depth = 0u64;
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &v in &frontier {
                for &(u, _) in g.neighbors(v) {
                    if !seen[u] {
                        seen[u] = true;
                        parent[u] = Some(v);
                        children[v].push(u);
                        next.push(u);
                    }
                }
            }
            if !next.is_empty() {
                depth += 1;
            }
            frontier = next;
        }
        height = height.max(depth);
    }
    SpanningForest {
        parent,
        children,
        height,
    }
}

pub(crate) fn digest_debug(x: &impl std::fmt::Debug) -> u64 {
    // FNV-1a over the debug rendering: stable, order-free of hasher state.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in format!("{x:?}").bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    h
}

/// Validates one round's outbox for a node: addresses must be neighbors,
/// at most one message per neighbor, payloads within budget.
pub(crate) fn validate_outbox<P: NodeProgram>(
    prog: &P,
    ctx: &NodeCtx,
    round: Round,
    outbox: &[(NodeId, P::Msg)],
    budget: u64,
    max_seen: &mut u64,
) -> Result<(), SimError> {
    let mut tos: Vec<NodeId> = Vec::with_capacity(outbox.len());
    for (to, msg) in outbox {
        if ctx.weight_to(*to).is_none() {
            return Err(SimError::BadAddress {
                node: ctx.id,
                to: *to,
                round,
            });
        }
        let bits = prog.payload_bits(msg);
        *max_seen = (*max_seen).max(bits);
        if bits > budget {
            return Err(SimError::PayloadOverBudget {
                node: ctx.id,
                round,
                bits,
                budget,
            });
        }
        tos.push(*to);
    }
    tos.sort_unstable();
    if let Some(w) = tos.windows(2).find(|w| w[0] == w[1]) {
        let count = tos.iter().filter(|&&t| t == w[0]).count();
        return Err(SimError::DuplicateMessage {
            node: ctx.id,
            to: w[0],
            round,
            count,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_path, gen_star};

    #[test]
    fn sim_time_units() {
        assert_eq!(SimTime::UNIT.as_f64(), 1.0);
        assert_eq!(SimTime(500_000).as_f64(), 0.5);
        assert!(SimTime(1) > SimTime::ZERO);
    }

    #[test]
    fn seeded_delays_are_deterministic_and_in_range() {
        let s = DelaySchedule::seeded(9);
        for i in 0..1000 {
            let d = s.delay(i).unwrap();
            assert_eq!(d, s.delay(i).unwrap());
            assert!(d > SimTime::ZERO && d <= SimTime::UNIT);
        }
    }

    #[test]
    fn schedule_parsing_and_errors() {
        let s = DelaySchedule::parse("0 0.5\n1 1\n2 0.25\n").unwrap();
        assert_eq!(s.delay(0).unwrap(), SimTime(500_000));
        assert_eq!(s.delay(1).unwrap(), SimTime::UNIT);
        assert_eq!(s.delay(2).unwrap(), SimTime(250_000));
        assert!(matches!(s.delay(3), Err(SimError::ScheduleExhausted { index: 3 })));

        assert!(matches!(
            DelaySchedule::parse("0 nope\n"),
            Err(SimError::ScheduleParse { line: 1, .. })
        ));
        assert!(matches!(
            DelaySchedule::parse("0 0.0\n"),
            Err(SimError::ScheduleValue { line: 1, .. })
        ));
        assert!(matches!(
            DelaySchedule::parse("0 0.5\n0 0.6\n"),
            Err(SimError::ScheduleDup { index: 0 })
        ));
        assert!(matches!(
            DelaySchedule::parse("1 0.5\n"),
            Err(SimError::ScheduleGap { index: 0 })
        ));
    }

    #[test]
    fn forest_roots_and_heights() {
        let f = spanning_forest(&gen_star(5, 1, 0));
        assert_eq!(f.parent[0], None);
        assert_eq!(f.height, 1);
        assert_eq!(f.children[0], vec![1, 2, 3, 4]);

        let f = spanning_forest(&gen_path(4, 1, 0));
        assert_eq!(f.height, 3);

        let g = Graph::new(4, [(2, 3, 1)]).unwrap();
        let f = spanning_forest(&g);
        assert_eq!(f.parent, vec![None, None, None, Some(2)]);
        assert_eq!(f.height, 1);
    }

    #[test]
    fn bit_helpers() {
        assert_eq!(bit_width(0), 1);
        assert_eq!(bit_width(1), 1);
        assert_eq!(bit_width(5), 3);
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(5), 3);
        assert_eq!(ceil_log2(8), 3);
        assert_eq!(ceil_log2(9), 4);
    }
}
