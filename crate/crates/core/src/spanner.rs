//! Cluster-graph sparsification and spanners built from it.
//!
//! After clustering an unweighted graph, each vertex keeps at most one edge
//! into every neighboring cluster that either sits one level below it or
//! ties its level with a smaller center id. The union `F` of those picks
//! spans every adjacency between clusters; adding the cluster trees turns it
//! into a `(2k-1)`-spanner when the clustering ran with `r = k - 1` and
//! `p = 1 - n^(-1/k)`.

use serde::Serialize;
use std::collections::BTreeSet;
use thiserror::Error;

use crate::cluster::{cluster, ClusterError, Clustering};
use crate::graph::{Graph, NodeId};

#[derive(Debug, Error, PartialEq)]
pub enum SpannerError {
    #[error("stretch parameter k must be at least 2, got {0}")]
    BadK(u64),
    #[error("spanner construction requires an unweighted graph")]
    Weighted,
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

/// A clustering together with its sparsified edge set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparsifiedDecomposition {
    pub clustering: Clustering,
    /// Canonical `(u, v)` with `u < v`, sorted.
    pub f: Vec<(NodeId, NodeId)>,
}

/// The edges vertex `x` contributes: one per distinct neighboring cluster
/// reachable through a neighbor one level down, or at equal level with a
/// smaller center id; within a cluster the `(level, id)`-smallest such
/// neighbor is chosen. Returned as `(x, y)` pairs.
pub fn sparsify_at(g: &Graph, c: &Clustering, x: NodeId) -> Vec<(NodeId, NodeId)> {
    let lx = c.level[x];
    let cx = c.center[x];
    let mut best: std::collections::BTreeMap<NodeId, (i64, NodeId)> = Default::default();
    for &(y, _) in g.neighbors(x) {
        let qualifies = c.level[y] == lx - 1 || (c.level[y] == lx && c.center[y] < cx);
        if !qualifies {
            continue;
        }
        let cand = (c.level[y], y);
        best.entry(c.center[y])
            .and_modify(|cur| {
                if cand < *cur {
                    *cur = cand;
                }
            })
            .or_insert(cand);
    }
    best.values().map(|&(_, y)| (x, y)).collect()
}

/// Union of the per-vertex picks over all vertices, deduplicated into
/// canonical undirected form. Requires an unweighted graph.
pub fn sparsify(g: &Graph, c: &Clustering) -> Vec<(NodeId, NodeId)> {
    assert!(g.is_unweighted(), "sparsification is defined on unweighted graphs");
    let mut set = BTreeSet::new();
    for x in 0..g.n() {
        for (a, b) in sparsify_at(g, c, x) {
            set.insert((a.min(b), a.max(b)));
        }
    }
    set.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpannerResult {
    pub k: u64,
    pub p: f64,
    pub r: u64,
    pub seed: u64,
    pub decomp: SparsifiedDecomposition,
    /// Spanner edges: `F` plus all cluster-tree edges, canonical and sorted.
    pub h: Vec<(NodeId, NodeId)>,
}

/// Builds a `(2k-1)`-spanner of an unweighted graph.
pub fn build_spanner(g: &Graph, k: u64, seed: u64) -> Result<SpannerResult, SpannerError> {
    if k < 2 {
        return Err(SpannerError::BadK(k));
    }
    if !g.is_unweighted() {
        return Err(SpannerError::Weighted);
    }
    let n = g.n();
    let r = k - 1;
    let p = 1.0 - (n.max(1) as f64).powf(-1.0 / k as f64);
    let clustering = cluster(g, p, r, seed)?;
    let f = sparsify(g, &clustering);
    let mut h: BTreeSet<(NodeId, NodeId)> = f.iter().copied().collect();
    for (v, parent) in clustering.parent.iter().enumerate() {
        if let Some(p) = parent {
            h.insert((v.min(*p), v.max(*p)));
        }
    }
    Ok(SpannerResult {
        k,
        p,
        r,
        seed,
        decomp: SparsifiedDecomposition { clustering, f },
        h: h.into_iter().collect(),
    })
}

#[derive(Debug, Error, PartialEq)]
pub enum CoverageViolation {
    #[error("edge ({u}, {v}) is joined to neither endpoint's cluster by the sparsified set")]
    Uncovered { u: NodeId, v: NodeId },
}

/// Checks that for every graph edge `(u, v)`, some sparsified edge joins `u`
/// to the cluster of `v` or `v` to the cluster of `u`.
pub fn verify_coverage(
    g: &Graph,
    c: &Clustering,
    f: &[(NodeId, NodeId)],
) -> Result<(), CoverageViolation> {
    let mut incident: Vec<Vec<NodeId>> = vec![Vec::new(); g.n()];
    for &(a, b) in f {
        incident[a].push(b);
        incident[b].push(a);
    }
    for &(u, v, _) in g.edges() {
        let into = |from: NodeId, target_cluster: NodeId| {
            incident[from].iter().any(|&z| c.center[z] == target_cluster)
        };
        if !into(u, c.center[v]) && !into(v, c.center[u]) {
            return Err(CoverageViolation::Uncovered { u, v });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StretchReport {
    /// Worst ratio of spanner distance to edge weight; infinite if some edge
    /// is disconnected in the spanner.
    pub max_stretch: f64,
    pub worst_edge: Option<(NodeId, NodeId)>,
    pub ok: bool,
}

/// Measures the per-edge stretch of the subgraph `h` against every edge of
/// `g`. Edges of `h` must exist in `g`; they inherit its weights.
pub fn verify_stretch(g: &Graph, h: &[(NodeId, NodeId)], bound: f64) -> StretchReport {
    let h_edges: Vec<(NodeId, NodeId, i64)> = h
        .iter()
        .map(|&(u, v)| {
            let w = g.weight(u, v).expect("spanner edge must exist in the graph");
            (u, v, w)
        })
        .collect();
    let hg = Graph::new(g.n(), h_edges).expect("canonical spanner edges");
    let mut max_stretch = 0.0f64;
    let mut worst_edge = None;
    for src in 0..g.n() {
        if g.degree(src) == 0 {
            continue;
        }
        let dist = hg.sssp(src);
        for &(u, w) in g.neighbors(src) {
            if u < src {
                continue;
            }
            let stretch = match dist[u] {
                Some(d) => d as f64 / w as f64,
                None => f64::INFINITY,
            };
            if stretch > max_stretch {
                max_stretch = stretch;
                worst_edge = Some((src, u));
            }
        }
    }
    StretchReport {
        max_stretch,
        worst_edge,
        ok: max_stretch <= bound,
    }
}
