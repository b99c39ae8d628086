//! Event-driven executor. Each message carries its own delay in (0, 1];
//! a synchronizer decides when a node may start simulating its next round,
//! so per-node observable behavior matches the lock-step executor exactly.
//!
//! Every program message is acknowledged. A node is safe for round `t` once
//! all its round-`t` messages are acknowledged. The synchronizers differ in
//! how safety knowledge reaches the neighbors that wait on it:
//!
//! * alpha: each node broadcasts its safety to all neighbors.
//! * beta: safety is aggregated up a global spanning forest and release
//!   flows back down it.
//! * gamma: safety is aggregated inside each cluster tree of a supplied
//!   decomposition, announced across the sparsified inter-cluster edges,
//!   and release flows down the cluster trees after a second aggregation.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::programs::{reassemble_clustering, ClusterProgram, NotifyF};
use super::{
    digest_debug, spanning_forest, validate_outbox, Counters, DelaySchedule, EventRecord,
    NodeCtx, NodeProgram, Observations, Round, SimConfig, SimError, SimTime, Transcript,
};
use crate::geomcap::GeomCapParams;
use crate::graph::{Graph, NodeId};
use crate::hashing::{mix2, DOMAIN_INIT_NOTIFY};
use crate::spanner::{sparsify, SparsifiedDecomposition};

#[derive(Debug, Clone, Copy)]
pub enum Synchronizer<'a> {
    Alpha,
    Beta,
    /// Needs a decomposition whose sparsified edge set joins every pair of
    /// adjacent clusters; the spanner construction provides one.
    Gamma(&'a SparsifiedDecomposition),
}

#[derive(Debug, Clone)]
pub struct AsyncOutcome<P: NodeProgram> {
    pub states: Vec<P::State>,
    pub observations: Observations<P::Msg>,
    pub transcript: Transcript,
}

#[derive(Debug, Clone, PartialEq)]
enum Wire<M> {
    Alg { round: Round, msg: M },
    Ack { round: Round },
    /// alpha: sender is safe for `round`.
    Safe { round: Round },
    /// beta/gamma: sender's whole subtree is safe for `round`.
    SubtreeSafe { round: Round },
    /// gamma: sender's whole subtree saw cluster safety and its sparsified
    /// neighbors' safety for `round`.
    SubtreeReady { round: Round },
    /// gamma: the sender's cluster is entirely safe for `round`.
    ClusterSafe { round: Round },
    /// gamma: sent across a sparsified inter-cluster edge after ClusterSafe.
    FSafe { round: Round },
    /// beta/gamma: permission to start `round + 1`.
    Go { round: Round },
}

impl<M> Wire<M> {
    fn kind(&self) -> &'static str {
        match self {
            Wire::Alg { .. } => "alg",
            Wire::Ack { .. } => "ack",
            Wire::Safe { .. } => "safe",
            Wire::SubtreeSafe { .. } => "subtree-safe",
            Wire::SubtreeReady { .. } => "subtree-ready",
            Wire::ClusterSafe { .. } => "cluster-safe",
            Wire::FSafe { .. } => "f-safe",
            Wire::Go { .. } => "go",
        }
    }

    fn round(&self) -> Round {
        match self {
            Wire::Alg { round, .. }
            | Wire::Ack { round }
            | Wire::Safe { round }
            | Wire::SubtreeSafe { round }
            | Wire::SubtreeReady { round }
            | Wire::ClusterSafe { round }
            | Wire::FSafe { round }
            | Wire::Go { round } => *round,
        }
    }
}

struct Delivery<M> {
    at: SimTime,
    seq: u64,
    from: NodeId,
    to: NodeId,
    wire: Wire<M>,
}

impl<M> PartialEq for Delivery<M> {
    fn eq(&self, other: &Self) -> bool {
        self.at == other.at && self.seq == other.seq
    }
}
impl<M> Eq for Delivery<M> {}
impl<M> PartialOrd for Delivery<M> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<M> Ord for Delivery<M> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.at, self.seq).cmp(&(other.at, other.seq))
    }
}

/// Synchronizer wiring, resolved per run. Both tree-based synchronizers
/// share the aggregation skeleton; the sparsified adjacency is what turns
/// beta's global forest into gamma's cluster forest.
enum Plan {
    Alpha,
    Tree {
        parent: Vec<Option<NodeId>>,
        children: Vec<Vec<NodeId>>,
        /// Inter-cluster sparsified adjacency; `Some` selects gamma.
        f_adj: Option<Vec<Vec<NodeId>>>,
    },
}

#[derive(Debug, Default)]
struct SyncState {
    /// Outstanding acknowledgements, by round of the sends.
    unacked: std::collections::BTreeMap<Round, u64>,
    /// alpha: neighbors known safe, by round.
    nbr_safe: std::collections::BTreeMap<Round, u64>,
    /// Children whose subtrees reported safe, by round.
    child_safe: std::collections::BTreeMap<Round, u64>,
    /// Children whose subtrees reported ready, by round.
    child_ready: std::collections::BTreeMap<Round, u64>,
    /// gamma: sparsified neighbors known cluster-safe, by round.
    f_safe: std::collections::BTreeMap<Round, u64>,
    /// gamma: rounds whose own-cluster safety announcement arrived.
    cluster_safe: std::collections::BTreeSet<Round>,
    /// Rounds whose safety output (broadcast, report, or issue) was sent.
    sent_safe: std::collections::BTreeSet<Round>,
    /// Rounds whose readiness output was sent.
    sent_ready: std::collections::BTreeSet<Round>,
    /// gamma: rounds whose FSafe announcements went out.
    sent_f: std::collections::BTreeSet<Round>,
}

struct NodeRt<P: NodeProgram> {
    state: P::State,
    round: Round,
    /// Program messages buffered by the round they were sent in.
    buf: std::collections::BTreeMap<Round, Vec<(NodeId, P::Msg)>>,
    sync: SyncState,
}

struct Engine<'a, P: NodeProgram> {
    g: &'a Graph,
    prog: &'a P,
    plan: Plan,
    schedule: &'a DelaySchedule,
    /// Number of synchronous rounds simulated; entry into rounds
    /// `2..=t_max` is gated, and sends in round `t_max` are an error.
    t_max: Round,
    cfg: SimConfig,
    budget: u64,
    nodes: Vec<NodeRt<P>>,
    observations: Observations<P::Msg>,
    queue: BinaryHeap<Reverse<Delivery<P::Msg>>>,
    now: SimTime,
    seq: u64,
    msg_index: u64,
    counters: Counters,
    events: Vec<EventRecord>,
}

/// Runs `rounds` synchronous rounds of `prog` on `g` over an asynchronous
/// network. `rounds` must cover the program's quiescence: one more round
/// than its last send, so the final messages are consumed. Delivery of a
/// program message into an already-started round is reported as a
/// synchronizer violation (it indicates an unusable gamma decomposition).
pub fn run_async<P: NodeProgram>(
    prog: &P,
    g: &Graph,
    sync: Synchronizer<'_>,
    schedule: &DelaySchedule,
    rounds: u64,
    cfg: &SimConfig,
) -> Result<AsyncOutcome<P>, SimError> {
    assert!(rounds >= 1, "a run simulates at least the wakeup round");
    let n = g.n();
    let plan = match sync {
        Synchronizer::Alpha => Plan::Alpha,
        Synchronizer::Beta => {
            let f = spanning_forest(g);
            Plan::Tree {
                parent: f.parent,
                children: f.children,
                f_adj: None,
            }
        }
        Synchronizer::Gamma(decomp) => {
            if decomp.clustering.n() != n {
                return Err(SimError::DecompositionMismatch {
                    expected: n,
                    got: decomp.clustering.n(),
                });
            }
            let mut children = vec![Vec::new(); n];
            let parent = decomp.clustering.parent.clone();
            for (v, p) in parent.iter().enumerate() {
                if let Some(p) = p {
                    children[*p].push(v);
                }
            }
            let mut f_adj = vec![Vec::new(); n];
            for &(u, v) in &decomp.f {
                if decomp.clustering.center[u] != decomp.clustering.center[v] {
                    f_adj[u].push(v);
                    f_adj[v].push(u);
                }
            }
            for l in &mut f_adj {
                l.sort_unstable();
            }
            Plan::Tree {
                parent,
                children,
                f_adj: Some(f_adj),
            }
        }
    };

    let mut eng: Engine<P> = Engine {
        g,
        prog,
        plan,
        schedule,
        t_max: rounds,
        cfg: *cfg,
        budget: prog.bit_budget(n),
        nodes: Vec::with_capacity(n),
        observations: vec![Vec::new(); n],
        queue: BinaryHeap::new(),
        now: SimTime::ZERO,
        seq: 0,
        msg_index: 0,
        counters: Counters::default(),
        events: Vec::new(),
    };
    eng.run()?;

    let Engine {
        nodes,
        observations,
        counters,
        events,
        ..
    } = eng;
    Ok(AsyncOutcome {
        states: nodes.into_iter().map(|rt| rt.state).collect(),
        observations,
        transcript: Transcript { counters, events },
    })
}

impl<P: NodeProgram> Engine<'_, P> {
    fn run(&mut self) -> Result<(), SimError> {
        let n = self.g.n();
        let prog = self.prog;
        let g = self.g;
        for v in 0..n {
            let ctx = NodeCtx {
                id: v,
                neighbors: g.neighbors(v),
                n,
            };
            let (state, outbox) = prog.init(&ctx);
            self.counters.steps += 1;
            validate_outbox(prog, &ctx, 1, &outbox, self.budget, &mut self.counters.max_payload_bits)?;
            self.nodes.push(NodeRt {
                state,
                round: 1,
                buf: Default::default(),
                sync: SyncState::default(),
            });
            self.dispatch_outbox(v, 1, outbox)?;
        }
        for v in 0..n {
            self.try_progress(v)?;
        }

        while let Some(Reverse(d)) = self.queue.pop() {
            self.counters.events += 1;
            if self.counters.events > self.cfg.event_cap {
                return Err(SimError::EventCapExceeded {
                    cap: self.cfg.event_cap,
                });
            }
            debug_assert!(d.at >= self.now, "event times must be nondecreasing");
            self.now = d.at;
            if self.cfg.record_events {
                self.events.push(EventRecord {
                    time: d.at.as_f64(),
                    seq: d.seq,
                    node: d.to,
                    from: Some(d.from),
                    kind: d.wire.kind(),
                    round: d.wire.round(),
                    digest: match &d.wire {
                        Wire::Alg { msg, .. } => digest_debug(msg),
                        _ => 0,
                    },
                });
            }
            self.process(d)?;
        }

        for (v, rt) in self.nodes.iter().enumerate() {
            assert_eq!(
                rt.round, self.t_max,
                "node {v} stalled at round {} of {}; the synchronizer deadlocked",
                rt.round, self.t_max
            );
        }
        self.counters.sim_time = self.now.as_f64();
        Ok(())
    }

    fn process(&mut self, d: Delivery<P::Msg>) -> Result<(), SimError> {
        let v = d.to;
        match d.wire {
            Wire::Alg { round, msg } => {
                if round + 1 <= self.nodes[v].round {
                    return Err(SimError::SynchronizerViolation {
                        node: v,
                        round,
                        entered: self.nodes[v].round,
                    });
                }
                self.send(v, d.from, Wire::Ack { round })?;
                self.nodes[v].buf.entry(round).or_default().push((d.from, msg));
                Ok(())
            }
            Wire::Ack { round } => {
                let left = self.nodes[v]
                    .sync
                    .unacked
                    .get_mut(&round)
                    .expect("acknowledgement for a round with no sends");
                *left = left.checked_sub(1).expect("surplus acknowledgement");
                self.try_progress(v)
            }
            Wire::Safe { round } => {
                *self.nodes[v].sync.nbr_safe.entry(round).or_insert(0) += 1;
                self.try_progress(v)
            }
            Wire::SubtreeSafe { round } => {
                *self.nodes[v].sync.child_safe.entry(round).or_insert(0) += 1;
                self.try_progress(v)
            }
            Wire::SubtreeReady { round } => {
                *self.nodes[v].sync.child_ready.entry(round).or_insert(0) += 1;
                self.try_progress(v)
            }
            Wire::ClusterSafe { round } => {
                self.on_cluster_safe(v, round)?;
                self.try_progress(v)
            }
            Wire::FSafe { round } => {
                *self.nodes[v].sync.f_safe.entry(round).or_insert(0) += 1;
                self.try_progress(v)
            }
            Wire::Go { round } => {
                debug_assert_eq!(self.nodes[v].round, round, "release out of order");
                let kids = match &self.plan {
                    Plan::Tree { children, .. } => children[v].clone(),
                    Plan::Alpha => unreachable!("alpha sends no release messages"),
                };
                for c in kids {
                    self.send(v, c, Wire::Go { round })?;
                }
                self.enter_round(v, round + 1)?;
                self.try_progress(v)
            }
        }
    }

    /// Marks the node's cluster safe for `round`, relays the announcement
    /// down the cluster tree, and tells sparsified neighbors across cluster
    /// boundaries.
    fn on_cluster_safe(&mut self, v: NodeId, round: Round) -> Result<(), SimError> {
        if !self.nodes[v].sync.cluster_safe.insert(round) {
            return Ok(());
        }
        let (kids, f_nbrs) = match &self.plan {
            Plan::Tree {
                children,
                f_adj: Some(f_adj),
                ..
            } => (children[v].clone(), f_adj[v].clone()),
            _ => unreachable!("cluster safety only exists under gamma"),
        };
        for c in kids {
            self.send(v, c, Wire::ClusterSafe { round })?;
        }
        if self.nodes[v].sync.sent_f.insert(round) {
            for u in f_nbrs {
                self.send(v, u, Wire::FSafe { round })?;
            }
        }
        Ok(())
    }

    /// Drives node `v` through every synchronizer transition currently
    /// enabled, entering rounds as they unlock.
    fn try_progress(&mut self, v: NodeId) -> Result<(), SimError> {
        loop {
            let t = self.nodes[v].round;
            if t >= self.t_max || !self.progress_once(v, t)? {
                return Ok(());
            }
        }
    }

    /// One pass of the round-`t` machinery for `v`; true when `v` entered
    /// round `t + 1`.
    fn progress_once(&mut self, v: NodeId, t: Round) -> Result<bool, SimError> {
        let g = self.g;
        let self_safe = self.nodes[v].sync.unacked.get(&t) == Some(&0);
        let tree = match &self.plan {
            Plan::Alpha => None,
            Plan::Tree {
                parent,
                children,
                f_adj,
            } => Some((
                parent[v],
                children[v].clone(),
                f_adj.as_ref().map(|fa| fa[v].len() as u64),
            )),
        };
        let Some((up, kids, f_deg)) = tree else {
            if self_safe && self.nodes[v].sync.sent_safe.insert(t) {
                for &(u, _) in g.neighbors(v) {
                    self.send(v, u, Wire::Safe { round: t })?;
                }
            }
            let deg = g.neighbors(v).len() as u64;
            if self_safe && self.nodes[v].sync.nbr_safe.get(&t).copied().unwrap_or(0) == deg {
                self.enter_round(v, t + 1)?;
                return Ok(true);
            }
            return Ok(false);
        };

        let n_kids = kids.len() as u64;
        let kids_safe = self.nodes[v].sync.child_safe.get(&t).copied().unwrap_or(0) == n_kids;
        if self_safe && kids_safe && !self.nodes[v].sync.sent_safe.contains(&t) {
            self.nodes[v].sync.sent_safe.insert(t);
            match (up, f_deg.is_some()) {
                (Some(p), _) => self.send(v, p, Wire::SubtreeSafe { round: t })?,
                (None, false) => {
                    // Whole component safe: release it.
                    for &c in &kids {
                        self.send(v, c, Wire::Go { round: t })?;
                    }
                    self.enter_round(v, t + 1)?;
                    return Ok(true);
                }
                (None, true) => self.on_cluster_safe(v, t)?,
            }
        }
        if let Some(f_deg) = f_deg {
            let ready = self.nodes[v].sync.cluster_safe.contains(&t)
                && self.nodes[v].sync.f_safe.get(&t).copied().unwrap_or(0) == f_deg;
            let kids_ready =
                self.nodes[v].sync.child_ready.get(&t).copied().unwrap_or(0) == n_kids;
            if ready && kids_ready && !self.nodes[v].sync.sent_ready.contains(&t) {
                self.nodes[v].sync.sent_ready.insert(t);
                match up {
                    Some(p) => self.send(v, p, Wire::SubtreeReady { round: t })?,
                    None => {
                        for &c in &kids {
                            self.send(v, c, Wire::Go { round: t })?;
                        }
                        self.enter_round(v, t + 1)?;
                        return Ok(true);
                    }
                }
            }
        }
        Ok(false)
    }

    /// Starts round `t1` at `v`: consume the buffered inbox, compute, send.
    fn enter_round(&mut self, v: NodeId, t1: Round) -> Result<(), SimError> {
        let prog = self.prog;
        let g = self.g;
        let mut inbox = {
            let rt = &mut self.nodes[v];
            debug_assert_eq!(rt.round + 1, t1, "round entry out of order");
            rt.round = t1;
            rt.buf.remove(&(t1 - 1)).unwrap_or_default()
        };
        inbox.sort_unstable_by_key(|&(from, _)| from);
        let mut outbox = Vec::new();
        if !inbox.is_empty() {
            let ctx = NodeCtx {
                id: v,
                neighbors: g.neighbors(v),
                n: g.n(),
            };
            outbox = prog.on_round(&ctx, &mut self.nodes[v].state, t1, &inbox);
            self.counters.steps += 1;
            validate_outbox(prog, &ctx, t1, &outbox, self.budget, &mut self.counters.max_payload_bits)?;
            self.observations[v].push((t1, inbox));
        }
        self.dispatch_outbox(v, t1, outbox)
    }

    fn dispatch_outbox(
        &mut self,
        v: NodeId,
        t: Round,
        outbox: Vec<(NodeId, P::Msg)>,
    ) -> Result<(), SimError> {
        if t == self.t_max && !outbox.is_empty() {
            // A send in the last simulated round could never be consumed.
            return Err(SimError::RoundBudgetExceeded { max: self.t_max });
        }
        self.nodes[v].sync.unacked.insert(t, outbox.len() as u64);
        if !outbox.is_empty() {
            self.counters.rounds = self.counters.rounds.max(t);
        }
        for (to, msg) in outbox {
            self.send(v, to, Wire::Alg { round: t, msg })?;
        }
        Ok(())
    }

    fn send(&mut self, from: NodeId, to: NodeId, wire: Wire<P::Msg>) -> Result<(), SimError> {
        match &wire {
            Wire::Alg { .. } => self.counters.alg_msgs += 1,
            Wire::Ack { .. } => self.counters.ack_msgs += 1,
            _ => self.counters.sync_msgs += 1,
        }
        let delay = self.schedule.delay(self.msg_index)?;
        self.msg_index += 1;
        self.seq += 1;
        self.queue.push(Reverse(Delivery {
            at: self.now.saturating_add(delay),
            seq: self.seq,
            from,
            to,
            wire,
        }));
        Ok(())
    }
}

/// Builds the decomposition the gamma synchronizer itself needs, entirely
/// inside the simulator: the clustering program runs under alpha, each node
/// reads its tree edges off its final state, computes its sparsified picks
/// from per-neighbor knowledge, and a final one-round program tells every
/// pick's far endpoint about the edge.
#[derive(Debug, Clone)]
pub struct GammaInit {
    pub decomp: SparsifiedDecomposition,
    pub cluster_counters: Counters,
    pub notify_counters: Counters,
}

impl GammaInit {
    pub fn total_msgs(&self) -> u64 {
        let c = &self.cluster_counters;
        let n = &self.notify_counters;
        c.alg_msgs + c.ack_msgs + c.sync_msgs + n.alg_msgs + n.ack_msgs + n.sync_msgs
    }

    pub fn total_time(&self) -> f64 {
        self.cluster_counters.sim_time + self.notify_counters.sim_time
    }
}

/// Distributed construction of the spanner decomposition for stretch
/// parameter `k >= 2` on an unweighted graph: radius `k - 1` and retention
/// probability `1 - n^(-1/k)`, identical to the sequential construction for
/// the same seed. Message delays inside the construction are derived from
/// `seed`.
pub fn gamma_init(g: &Graph, k: u64, seed: u64) -> Result<GammaInit, SimError> {
    assert!(k >= 2, "decomposition needs k >= 2");
    assert!(g.is_unweighted(), "decomposition is defined on unweighted graphs");
    let n = g.n();
    let r = k - 1;
    if n <= 1 {
        let clustering = crate::cluster::cluster_with_offsets(g, r, &vec![0; n])
            .expect("offsets of zero are always valid");
        let f = sparsify(g, &clustering);
        return Ok(GammaInit {
            decomp: SparsifiedDecomposition { clustering, f },
            cluster_counters: Counters::default(),
            notify_counters: Counters::default(),
        });
    }

    let p = 1.0 - (n as f64).powf(-1.0 / k as f64);
    let geom = GeomCapParams::new(p, r).expect("retention probability is in (0, 1) for n >= 2");
    let prog = ClusterProgram { geom, seed };
    let cfg = SimConfig::default();
    // The clustering is quiescent after round r + 1; one more round consumes
    // the final messages.
    let out = run_async(
        &prog,
        g,
        Synchronizer::Alpha,
        &DelaySchedule::seeded(seed),
        r + 2,
        &cfg,
    )?;
    let clustering = reassemble_clustering(g, &prog, &out.states);
    let f = sparsify(g, &clustering);

    let notify = NotifyF::new(g, &clustering, &f);
    let notify_out = run_async(
        &notify,
        g,
        Synchronizer::Alpha,
        &DelaySchedule::seeded(mix2(seed, DOMAIN_INIT_NOTIFY)),
        2,
        &cfg,
    )?;
    for (v, st) in notify_out.states.iter().enumerate() {
        debug_assert_eq!(
            st.peer_centers.len(),
            notify.f_deg(v),
            "every sparsified edge must be known at both endpoints"
        );
    }

    Ok(GammaInit {
        decomp: SparsifiedDecomposition { clustering, f },
        cluster_counters: out.transcript.counters,
        notify_counters: notify_out.transcript.counters,
    })
}
