//! Ball-growing clustering.
//!
//! Every vertex `v` draws a capped-geometric head start `delta[v]` and starts
//! growing a ball at time `r - delta[v]`. Vertex `x` joins the cluster of the
//! vertex `u` minimizing `r - delta[u] + d(u, x)`, ties broken toward the
//! smallest id. Equivalently these are the shortest-path distances from a
//! virtual source attached to every vertex v with weight `r - delta[v]`;
//! `level[x]` is that distance and `center[x]` the winning u.
//!
//! Each cluster is supported by a shortest-path tree of weighted height at
//! most `r` rooted at its center, so cluster diameter inside the cluster is
//! at most `2r` unconditionally.

use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use thiserror::Error;

use crate::geomcap::{sample_offsets, DistError, GeomCapParams};
use crate::graph::{Dist, Graph, NodeId};

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("expected {expected} offsets, got {got}")]
    OffsetCountMismatch { expected: usize, got: usize },
    #[error("offset {delta} at vertex {v} exceeds cap {r}")]
    OffsetExceedsCap { v: NodeId, delta: u64, r: u64 },
    #[error("cluster of center {center} induces a disconnected subgraph")]
    DisconnectedCluster { center: NodeId },
}

/// Parameters a clustering was produced under. `p` and `seed` are absent
/// when the offsets were supplied directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub p: Option<f64>,
    pub r: u64,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub params: ClusterParams,
    /// Center vertex of the cluster containing each vertex.
    pub center: Vec<NodeId>,
    /// Distance from the virtual source; `level[v] - level[center[v]]` is
    /// the tree distance from the center.
    pub level: Vec<Dist>,
    /// Tree parent; `None` exactly for centers.
    pub parent: Vec<Option<NodeId>>,
}

impl Clustering {
    pub fn n(&self) -> usize {
        self.center.len()
    }

    /// Distinct cluster centers in ascending order.
    pub fn centers(&self) -> Vec<NodeId> {
        let mut cs: Vec<NodeId> = self.center.clone();
        cs.sort_unstable();
        cs.dedup();
        cs
    }

    /// Members of each cluster keyed by center.
    pub fn members(&self) -> BTreeMap<NodeId, Vec<NodeId>> {
        let mut map: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for (v, &c) in self.center.iter().enumerate() {
            map.entry(c).or_default().push(v);
        }
        map
    }
}

/// Runs the ball-growing search with explicit per-vertex head starts.
///
/// A multi-source Dijkstra over lexicographic `(distance, center)` keys:
/// every vertex is seeded with key `(r - delta[v], v)`, and relaxation adds
/// the edge weight to the distance while carrying the originating center.
/// The id component only ever breaks exact distance ties, which realizes
/// min-id tie-breaking without any fractional arithmetic.
pub fn cluster_with_offsets(g: &Graph, r: u64, delta: &[u64]) -> Result<Clustering, ClusterError> {
    let n = g.n();
    if delta.len() != n {
        return Err(ClusterError::OffsetCountMismatch {
            expected: n,
            got: delta.len(),
        });
    }
    if let Some(v) = (0..n).find(|&v| delta[v] > r) {
        return Err(ClusterError::OffsetExceedsCap { v, delta: delta[v], r });
    }

    let mut best: Vec<(Dist, NodeId)> = (0..n).map(|v| ((r - delta[v]) as Dist, v)).collect();
    let mut heap: BinaryHeap<Reverse<(Dist, NodeId, NodeId)>> = (0..n)
        .map(|v| Reverse((best[v].0, best[v].1, v)))
        .collect();
    let mut settled = vec![false; n];
    while let Some(Reverse((d, c, v))) = heap.pop() {
        if settled[v] || (d, c) != best[v] {
            continue;
        }
        settled[v] = true;
        for &(u, w) in g.neighbors(v) {
            let nd = d.checked_add(w).expect("distance overflow");
            if (nd, c) < best[u] {
                best[u] = (nd, c);
                heap.push(Reverse((nd, c, u)));
            }
        }
    }

    let center: Vec<NodeId> = best.iter().map(|&(_, c)| c).collect();
    let level: Vec<Dist> = best.iter().map(|&(d, _)| d).collect();
    let parent = derive_parents(g, &center, &level);
    Ok(Clustering {
        params: ClusterParams { p: None, r, seed: None },
        center,
        level,
        parent,
    })
}

/// Tree parent of each non-center vertex: the minimum-id neighbor one exact
/// step closer to the center inside the same cluster. Such a neighbor always
/// exists because levels are realized along shortest paths from centers.
fn derive_parents(g: &Graph, center: &[NodeId], level: &[Dist]) -> Vec<Option<NodeId>> {
    (0..g.n())
        .map(|v| {
            if center[v] == v {
                return None;
            }
            let pick = g
                .neighbors(v)
                .iter()
                .find(|&&(y, w)| center[y] == center[v] && level[y] == level[v] - w)
                .map(|&(y, _)| y);
            Some(pick.expect("non-center vertex missing a tree predecessor"))
        })
        .collect()
}

/// Whether the cap is at least the weighted diameter bound `n * w_max`,
/// where growing balls degenerates to whole connected components.
pub fn cap_is_degenerate(g: &Graph, r: u64) -> bool {
    r >= (g.n() as u64).saturating_mul(g.w_max() as u64)
}

/// Samples head starts from `GeomCap(p, r)` under `seed` and clusters.
///
/// When `r >= n * w_max` no ball can be cut short by the cap, so the result
/// is one cluster per connected component, centered at the component's
/// minimum id, without sampling at all.
pub fn cluster(g: &Graph, p: f64, r: u64, seed: u64) -> Result<Clustering, ClusterError> {
    if cap_is_degenerate(g, r) {
        return Ok(component_clustering(g, p, r, seed));
    }
    let params = GeomCapParams::new(p, r)?;
    let delta = sample_offsets(params, g.n(), seed);
    let mut c = cluster_with_offsets(g, r, &delta)?;
    c.params = ClusterParams {
        p: Some(p),
        r,
        seed: Some(seed),
    };
    Ok(c)
}

fn component_clustering(g: &Graph, p: f64, r: u64, seed: u64) -> Clustering {
    let n = g.n();
    let comp = g.components();
    let mut level: Vec<Dist> = vec![0; n];
    for root in 0..n {
        if comp[root] != root {
            continue;
        }
        for (v, d) in g.sssp(root).into_iter().enumerate() {
            if comp[v] == root {
                level[v] = d.expect("component member unreachable from its root");
            }
        }
    }
    let parent = derive_parents(g, &comp, &level);
    Clustering {
        params: ClusterParams {
            p: Some(p),
            r,
            seed: Some(seed),
        },
        center: comp,
        level,
        parent,
    }
}

/// Exact diameter of each cluster measured inside its induced subgraph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiameterReport {
    /// Center -> strong diameter of its cluster.
    pub per_cluster: BTreeMap<NodeId, Dist>,
    pub max: Dist,
}

pub fn strong_diameter(g: &Graph, c: &Clustering) -> Result<DiameterReport, ClusterError> {
    let mut per_cluster = BTreeMap::new();
    for (&root, members) in &c.members() {
        let index: BTreeMap<NodeId, usize> =
            members.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut diam: Dist = 0;
        for &src in members {
            // Dijkstra restricted to the induced subgraph of this cluster.
            let mut dist: Vec<Option<Dist>> = vec![None; members.len()];
            dist[index[&src]] = Some(0);
            let mut heap = BinaryHeap::new();
            heap.push(Reverse((0, src)));
            while let Some(Reverse((d, v))) = heap.pop() {
                if dist[index[&v]] != Some(d) {
                    continue;
                }
                for &(u, w) in g.neighbors(v) {
                    if c.center[u] != root {
                        continue;
                    }
                    let nd = d.checked_add(w).expect("distance overflow");
                    if dist[index[&u]].map_or(true, |cur| nd < cur) {
                        dist[index[&u]] = Some(nd);
                        heap.push(Reverse((nd, u)));
                    }
                }
            }
            for d in &dist {
                match d {
                    Some(d) => diam = diam.max(*d),
                    None => return Err(ClusterError::DisconnectedCluster { center: root }),
                }
            }
        }
        per_cluster.insert(root, diam);
    }
    let max = per_cluster.values().copied().max().unwrap_or(0);
    Ok(DiameterReport { per_cluster, max })
}

/// First tree-support violation found, scanning vertices in id order.
#[derive(Debug, Error, PartialEq)]
pub enum TreeSupportViolation {
    #[error("clustering shape does not match graph with {n} vertices")]
    ShapeMismatch { n: usize },
    #[error("center {c} of vertex {v} maps to {actual}, not itself")]
    CenterNotSelf { v: NodeId, c: NodeId, actual: NodeId },
    #[error("vertex {v}: level {level} outside [0, {r}]")]
    LevelOutOfRange { v: NodeId, level: Dist, r: u64 },
    #[error("center {v} has a parent")]
    CenterHasParent { v: NodeId },
    #[error("non-center vertex {v} has no parent")]
    MissingParent { v: NodeId },
    #[error("vertex {v}: parent {p} is not a neighbor")]
    ParentNotAdjacent { v: NodeId, p: NodeId },
    #[error("vertex {v}: parent {p} lies in a different cluster")]
    ParentInOtherCluster { v: NodeId, p: NodeId },
    #[error("vertex {v}: level {level} does not exceed parent's {plevel} by the edge weight {w}")]
    LevelStepMismatch {
        v: NodeId,
        level: Dist,
        plevel: Dist,
        w: Dist,
    },
    #[error("vertex {v}: parent walk accumulates weight {total} > cap {r}")]
    WalkTooHeavy { v: NodeId, total: Dist, r: u64 },
}

/// Checks that the parent pointers form trees rooted at centers, with levels
/// decreasing by exactly the edge weight along each parent edge and total
/// root-to-leaf weight at most `r`.
pub fn verify_tree_support(g: &Graph, c: &Clustering) -> Result<(), TreeSupportViolation> {
    let n = g.n();
    if c.center.len() != n || c.level.len() != n || c.parent.len() != n {
        return Err(TreeSupportViolation::ShapeMismatch { n });
    }
    let r = c.params.r;
    for v in 0..n {
        let cv = c.center[v];
        if cv >= n || c.center[cv] != cv {
            return Err(TreeSupportViolation::CenterNotSelf {
                v,
                c: cv,
                actual: if cv < n { c.center[cv] } else { cv },
            });
        }
        if c.level[v] < 0 || c.level[v] as u128 > r as u128 {
            return Err(TreeSupportViolation::LevelOutOfRange {
                v,
                level: c.level[v],
                r,
            });
        }
        match (c.parent[v], cv == v) {
            (Some(_), true) => return Err(TreeSupportViolation::CenterHasParent { v }),
            (None, false) => return Err(TreeSupportViolation::MissingParent { v }),
            (None, true) => {}
            (Some(p), false) => {
                let Some(w) = g.weight(v, p) else {
                    return Err(TreeSupportViolation::ParentNotAdjacent { v, p });
                };
                if c.center[p] != cv {
                    return Err(TreeSupportViolation::ParentInOtherCluster { v, p });
                }
                if c.level[v] != c.level[p] + w {
                    return Err(TreeSupportViolation::LevelStepMismatch {
                        v,
                        level: c.level[v],
                        plevel: c.level[p],
                        w,
                    });
                }
            }
        }
    }
    // Levels strictly decrease along parent edges (weights are >= 1), so the
    // walks terminate; only the accumulated weight needs checking.
    for v in 0..n {
        let mut total: Dist = 0;
        let mut x = v;
        while let Some(p) = c.parent[x] {
            total += c.level[x] - c.level[p];
            x = p;
        }
        if total as u128 > r as u128 {
            return Err(TreeSupportViolation::WalkTooHeavy { v, total, r });
        }
    }
    Ok(())
}
