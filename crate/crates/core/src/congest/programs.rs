//! Node programs. Each is written once against the synchronous semantics
//! and runs unchanged under any synchronizer.

use std::collections::BTreeMap;

use super::{bit_width, ceil_log2, NodeCtx, NodeProgram, Round};
use crate::cluster::{ClusterParams, Clustering};
use crate::geomcap::{sample_offset, DistError, GeomCapParams};
use crate::graph::{Dist, Graph, NodeId};

/// Flooding breadth-first search: hop distances from `src`.
#[derive(Debug, Clone, Copy)]
pub struct FloodBfs {
    pub src: NodeId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfsState {
    pub dist: Option<u64>,
}

impl NodeProgram for FloodBfs {
    type State = BfsState;
    type Msg = u64;

    fn init(&self, ctx: &NodeCtx) -> (BfsState, Vec<(NodeId, u64)>) {
        if ctx.id == self.src {
            let out = ctx.neighbors.iter().map(|&(u, _)| (u, 0)).collect();
            (BfsState { dist: Some(0) }, out)
        } else {
            (BfsState { dist: None }, vec![])
        }
    }

    fn on_round(
        &self,
        ctx: &NodeCtx,
        state: &mut BfsState,
        _round: Round,
        inbox: &[(NodeId, u64)],
    ) -> Vec<(NodeId, u64)> {
        let cand = inbox.iter().map(|&(_, d)| d).min().expect("non-empty inbox") + 1;
        if state.dist.is_none_or(|d| cand < d) {
            state.dist = Some(cand);
            ctx.neighbors.iter().map(|&(u, _)| (u, cand)).collect()
        } else {
            vec![]
        }
    }

    fn payload_bits(&self, msg: &u64) -> u64 {
        bit_width(*msg)
    }

    fn bit_budget(&self, n: usize) -> u64 {
        bit_width(n as u64)
    }
}

/// Leader election by min-id flooding within each component.
#[derive(Debug, Clone, Copy)]
pub struct LeaderElect;

#[derive(Debug, Clone, PartialEq)]
pub struct LeaderState {
    pub leader: NodeId,
}

impl NodeProgram for LeaderElect {
    type State = LeaderState;
    type Msg = u64;

    fn init(&self, ctx: &NodeCtx) -> (LeaderState, Vec<(NodeId, u64)>) {
        let out = ctx
            .neighbors
            .iter()
            .map(|&(u, _)| (u, ctx.id as u64))
            .collect();
        (LeaderState { leader: ctx.id }, out)
    }

    fn on_round(
        &self,
        ctx: &NodeCtx,
        state: &mut LeaderState,
        _round: Round,
        inbox: &[(NodeId, u64)],
    ) -> Vec<(NodeId, u64)> {
        let best = inbox.iter().map(|&(_, id)| id).min().expect("non-empty inbox");
        if (best as NodeId) < state.leader {
            state.leader = best as NodeId;
            ctx.neighbors.iter().map(|&(u, _)| (u, best)).collect()
        } else {
            vec![]
        }
    }

    fn payload_bits(&self, msg: &u64) -> u64 {
        bit_width(*msg)
    }

    fn bit_budget(&self, n: usize) -> u64 {
        bit_width(n.saturating_sub(1) as u64)
    }
}

/// Distributed ball-growing clustering. Every node draws its own capped
/// geometric head start from the shared seed, wakes with the key
/// `(r - offset, id)`, and relaxes keys lexicographically as neighbors
/// announce theirs, so the fixpoint equals the sequential clustering. A
/// node also remembers the last key heard per neighbor, which is exactly
/// what reassembly needs to place tree edges.
#[derive(Debug, Clone, Copy)]
pub struct ClusterProgram {
    pub geom: GeomCapParams,
    pub seed: u64,
}

/// Spells out the shared parameters; fails on an invalid probability.
pub fn distributed_cluster_program(
    p: f64,
    r: u64,
    seed: u64,
) -> Result<ClusterProgram, DistError> {
    Ok(ClusterProgram {
        geom: GeomCapParams::new(p, r)?,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterState {
    pub dist: Dist,
    pub center: NodeId,
    /// Last `(dist, center)` announced by each neighbor.
    pub known: BTreeMap<NodeId, (Dist, NodeId)>,
}

impl NodeProgram for ClusterProgram {
    type State = ClusterState;
    type Msg = (Dist, NodeId);

    fn init(&self, ctx: &NodeCtx) -> (ClusterState, Vec<(NodeId, Self::Msg)>) {
        let delta = sample_offset(self.geom, self.seed, ctx.id as u64);
        let dist = (self.geom.r - delta) as Dist;
        let out = ctx
            .neighbors
            .iter()
            .map(|&(u, _)| (u, (dist, ctx.id)))
            .collect();
        (
            ClusterState {
                dist,
                center: ctx.id,
                known: BTreeMap::new(),
            },
            out,
        )
    }

    fn on_round(
        &self,
        ctx: &NodeCtx,
        state: &mut ClusterState,
        _round: Round,
        inbox: &[(NodeId, Self::Msg)],
    ) -> Vec<(NodeId, Self::Msg)> {
        let mut best = (state.dist, state.center);
        for &(y, (d, c)) in inbox {
            state.known.insert(y, (d, c));
            let w = ctx.weight_to(y).expect("messages only arrive from neighbors");
            let cand = (d + w, c);
            if cand < best {
                best = cand;
            }
        }
        if best < (state.dist, state.center) {
            (state.dist, state.center) = best;
            ctx.neighbors.iter().map(|&(u, _)| (u, best)).collect()
        } else {
            vec![]
        }
    }

    fn payload_bits(&self, msg: &(Dist, NodeId)) -> u64 {
        bit_width(msg.0 as u64) + bit_width(msg.1 as u64)
    }

    fn bit_budget(&self, n: usize) -> u64 {
        2 * ceil_log2(n as u64 + self.geom.r + 2).max(1)
    }
}

/// Rebuilds the clustering from per-node final states: levels and centers
/// are read off directly, and each non-center's tree parent is the smallest
/// neighbor it knows to sit one exact step closer inside the same cluster.
pub fn reassemble_clustering(g: &Graph, prog: &ClusterProgram, states: &[ClusterState]) -> Clustering {
    assert_eq!(states.len(), g.n(), "one state per vertex");
    let center: Vec<NodeId> = states.iter().map(|s| s.center).collect();
    let level: Vec<Dist> = states.iter().map(|s| s.dist).collect();
    let parent = (0..g.n())
        .map(|v| {
            if center[v] == v {
                return None;
            }
            let pick = g
                .neighbors(v)
                .iter()
                .find(|&&(y, w)| {
                    states[v].known.get(&y) == Some(&(level[v] - w, center[v]))
                })
                .map(|&(y, _)| y);
            Some(pick.expect("non-center vertex missing a tree predecessor"))
        })
        .collect();
    Clustering {
        params: ClusterParams {
            p: Some(prog.geom.p),
            r: prog.geom.r,
            seed: Some(prog.seed),
        },
        center,
        level,
        parent,
    }
}

/// One-round broadcast that tells each far endpoint of a sparsified edge
/// who its peer's center is, completing both-endpoint knowledge of the
/// inter-cluster edge set.
#[derive(Debug, Clone)]
pub struct NotifyF {
    f_adj: Vec<Vec<NodeId>>,
    center: Vec<NodeId>,
}

impl NotifyF {
    pub fn new(g: &Graph, clustering: &Clustering, f: &[(NodeId, NodeId)]) -> Self {
        let mut f_adj = vec![Vec::new(); g.n()];
        for &(u, v) in f {
            f_adj[u].push(v);
            f_adj[v].push(u);
        }
        for l in &mut f_adj {
            l.sort_unstable();
        }
        NotifyF {
            f_adj,
            center: clustering.center.clone(),
        }
    }

    pub fn f_deg(&self, v: NodeId) -> usize {
        self.f_adj[v].len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NotifyState {
    /// Per sparsified neighbor, that neighbor's center.
    pub peer_centers: BTreeMap<NodeId, NodeId>,
}

impl NodeProgram for NotifyF {
    type State = NotifyState;
    type Msg = u64;

    fn init(&self, ctx: &NodeCtx) -> (NotifyState, Vec<(NodeId, u64)>) {
        let out = self.f_adj[ctx.id]
            .iter()
            .map(|&u| (u, self.center[ctx.id] as u64))
            .collect();
        (
            NotifyState {
                peer_centers: BTreeMap::new(),
            },
            out,
        )
    }

    fn on_round(
        &self,
        _ctx: &NodeCtx,
        state: &mut NotifyState,
        _round: Round,
        inbox: &[(NodeId, u64)],
    ) -> Vec<(NodeId, u64)> {
        for &(y, c) in inbox {
            state.peer_centers.insert(y, c as NodeId);
        }
        vec![]
    }

    fn payload_bits(&self, msg: &u64) -> u64 {
        bit_width(*msg)
    }

    fn bit_budget(&self, n: usize) -> u64 {
        bit_width(n.saturating_sub(1) as u64)
    }
}
