//! Undirected graphs with positive integer weights.
//!
//! Vertices are dense ids `0..n`. Parallel edges and self-loops are rejected
//! at construction. Distances are 64-bit; overflow during a shortest-path
//! computation is a checked failure, not a silent wraparound.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

use crate::hashing::{mix2, mix64, unit_half_open, uniform_1_to, DOMAIN_GRAPH};

pub type NodeId = usize;
pub type Weight = i64;
pub type Dist = i64;

/// Largest accepted edge weight. Keeps `n * w_max` and all path sums far from
/// `i64` overflow at any realistic scale.
pub const MAX_WEIGHT: Weight = 1 << 40;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex {id} out of range for n = {n}")]
    VertexOutOfRange { id: usize, n: usize },
    #[error("self-loop at vertex {v}")]
    SelfLoop { v: NodeId },
    #[error("duplicate edge ({u}, {v})")]
    DuplicateEdge { u: NodeId, v: NodeId },
    #[error("edge weight {w} outside [1, {MAX_WEIGHT}]")]
    BadWeight { w: Weight },
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected header \"n m\", found {content:?}")]
    BadHeader { line: usize, content: String },
    #[error("line {line}: malformed edge line {content:?}")]
    MalformedLine { line: usize, content: String },
    #[error("line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: GraphError,
    },
    #[error("header promises {expected} edges, found {found}")]
    EdgeCountMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(NodeId, NodeId, Weight)>,
    adj: Vec<Vec<(NodeId, Weight)>>,
    w_max: Weight,
}

impl Graph {
    /// Builds a graph from an edge list. Edges may be given in either
    /// endpoint order; they are stored canonically with `u < v`.
    pub fn new(
        n: usize,
        edges: impl IntoIterator<Item = (NodeId, NodeId, Weight)>,
    ) -> Result<Self, GraphError> {
        let mut canon = Vec::new();
        let mut seen = BTreeSet::new();
        for (a, b, w) in edges {
            Self::check_edge(n, a, b, w)?;
            let (u, v) = (a.min(b), a.max(b));
            if !seen.insert((u, v)) {
                return Err(GraphError::DuplicateEdge { u, v });
            }
            canon.push((u, v, w));
        }
        canon.sort_unstable();
        Ok(Self::from_canonical(n, canon))
    }

    fn check_edge(n: usize, a: NodeId, b: NodeId, w: Weight) -> Result<(), GraphError> {
        if a >= n {
            return Err(GraphError::VertexOutOfRange { id: a, n });
        }
        if b >= n {
            return Err(GraphError::VertexOutOfRange { id: b, n });
        }
        if a == b {
            return Err(GraphError::SelfLoop { v: a });
        }
        if !(1..=MAX_WEIGHT).contains(&w) {
            return Err(GraphError::BadWeight { w });
        }
        Ok(())
    }

    fn from_canonical(n: usize, edges: Vec<(NodeId, NodeId, Weight)>) -> Self {
        let mut adj = vec![Vec::new(); n];
        let mut w_max = 1;
        for &(u, v, w) in &edges {
            adj[u].push((v, w));
            adj[v].push((u, w));
            w_max = w_max.max(w);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Self { n, edges, adj, w_max }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Canonical edge list: `u < v`, sorted lexicographically.
    pub fn edges(&self) -> &[(NodeId, NodeId, Weight)] {
        &self.edges
    }

    /// Neighbors of `v` with edge weights, sorted by neighbor id.
    pub fn neighbors(&self, v: NodeId) -> &[(NodeId, Weight)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v].len()
    }

    /// Maximum edge weight present; 1 for an edgeless graph.
    pub fn w_max(&self) -> Weight {
        self.w_max
    }

    pub fn is_unweighted(&self) -> bool {
        self.edges.iter().all(|&(_, _, w)| w == 1)
    }

    pub fn weight(&self, u: NodeId, v: NodeId) -> Option<Weight> {
        let (a, b) = (u.min(v), u.max(v));
        self.adj[a]
            .binary_search_by_key(&b, |&(y, _)| y)
            .ok()
            .map(|i| self.adj[a][i].1)
    }

    /// Single-source shortest-path distances; `None` marks unreachable
    /// vertices. Panics on 64-bit distance overflow.
    pub fn sssp(&self, src: NodeId) -> Vec<Option<Dist>> {
        assert!(src < self.n, "source {src} out of range");
        let mut dist: Vec<Option<Dist>> = vec![None; self.n];
        dist[src] = Some(0);
        let mut heap = std::collections::BinaryHeap::new();
        heap.push(std::cmp::Reverse((0, src)));
        while let Some(std::cmp::Reverse((d, v))) = heap.pop() {
            if dist[v] != Some(d) {
                continue;
            }
            for &(u, w) in &self.adj[v] {
                let nd = d.checked_add(w).expect("distance overflow");
                if dist[u].map_or(true, |cur| nd < cur) {
                    dist[u] = Some(nd);
                    heap.push(std::cmp::Reverse((nd, u)));
                }
            }
        }
        dist
    }

    /// Connected-component label of each vertex: the minimum vertex id in
    /// its component.
    pub fn components(&self) -> Vec<NodeId> {
        let mut label = vec![usize::MAX; self.n];
        for root in 0..self.n {
            if label[root] != usize::MAX {
                continue;
            }
            let mut stack = vec![root];
            label[root] = root;
            while let Some(v) = stack.pop() {
                for &(u, _) in &self.adj[v] {
                    if label[u] == usize::MAX {
                        label[u] = root;
                        stack.push(u);
                    }
                }
            }
        }
        label
    }

    // ── text edge-list format ──────────────────────────────────────────

    /// Parses the text edge-list format: a header line `n m` followed by one
    /// `u v w` line per edge (`w` optional, default 1). Blank lines are
    /// ignored.
    pub fn parse_edge_list(text: &str) -> Result<Self, ParseError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().unwrap_or((1, ""));
        let mut hp = header.split_whitespace();
        let (n, m) = match (
            hp.next().and_then(|t| t.parse::<usize>().ok()),
            hp.next().and_then(|t| t.parse::<usize>().ok()),
            hp.next(),
        ) {
            (Some(n), Some(m), None) => (n, m),
            _ => {
                return Err(ParseError::BadHeader {
                    line: hline,
                    content: header.to_string(),
                })
            }
        };
        let mut canon: Vec<(NodeId, NodeId, Weight)> = Vec::with_capacity(m);
        let mut seen = BTreeSet::new();
        let mut found = 0usize;
        for (lineno, line) in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            let (u, v, w) = match toks.as_slice() {
                [a, b] => match (a.parse::<usize>(), b.parse::<usize>()) {
                    (Ok(u), Ok(v)) => (u, v, 1),
                    _ => {
                        return Err(ParseError::MalformedLine {
                            line: lineno,
                            content: line.to_string(),
                        })
                    }
                },
                [a, b, c] => match (a.parse::<usize>(), b.parse::<usize>(), c.parse::<Weight>()) {
                    (Ok(u), Ok(v), Ok(w)) => (u, v, w),
                    _ => {
                        return Err(ParseError::MalformedLine {
                            line: lineno,
                            content: line.to_string(),
                        })
                    }
                },
                _ => {
                    return Err(ParseError::MalformedLine {
                        line: lineno,
                        content: line.to_string(),
                    })
                }
            };
            Self::check_edge(n, u, v, w).map_err(|source| ParseError::Invalid { line: lineno, source })?;
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(ParseError::Invalid {
                    line: lineno,
                    source: GraphError::DuplicateEdge { u: key.0, v: key.1 },
                });
            }
            canon.push((key.0, key.1, w));
            found += 1;
        }
        if found != m {
            return Err(ParseError::EdgeCountMismatch { expected: m, found });
        }
        canon.sort_unstable();
        Ok(Self::from_canonical(n, canon))
    }

    pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Self, ParseError> {
        Self::parse_edge_list(&std::fs::read_to_string(path)?)
    }

    /// Canonical text form; `parse_edge_list(g.to_edge_list()) == g`.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.n, self.edges.len());
        for &(u, v, w) in &self.edges {
            let _ = writeln!(out, "{u} {v} {w}");
        }
        out
    }

    pub fn save_edge_list(&self, path: impl AsRef<Path>) -> Result<(), ParseError> {
        std::fs::write(path, self.to_edge_list())?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    edges: Vec<(NodeId, NodeId, Weight)>,
}

impl Serialize for Graph {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        GraphJson {
            n: self.n,
            edges: self.edges.clone(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Graph {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let raw = GraphJson::deserialize(de)?;
        Graph::new(raw.n, raw.edges).map_err(D::Error::custom)
    }
}

// ── generators ─────────────────────────────────────────────────────────

fn draw_weight(stream: u64, index: u64, w_max: Weight) -> Weight {
    if w_max == 1 {
        1
    } else {
        uniform_1_to(mix2(stream, index), w_max as u64) as Weight
    }
}

fn graph_stream(seed: u64) -> u64 {
    mix2(seed, DOMAIN_GRAPH)
}

/// Erdős–Rényi G(n, p) with weights uniform in `1..=w_max`.
pub fn gen_random(n: usize, edge_prob: f64, w_max: Weight, seed: u64) -> Graph {
    assert!((0.0..=1.0).contains(&edge_prob), "edge probability out of range");
    let s = graph_stream(seed);
    let mut edges = Vec::new();
    let mut pair = 0u64;
    for u in 0..n {
        for v in (u + 1)..n {
            if unit_half_open(mix2(s, pair)) < edge_prob {
                edges.push((u, v, draw_weight(mix64(s), pair, w_max)));
            }
            pair += 1;
        }
    }
    Graph::from_canonical(n, edges)
}

/// Four-neighbor grid of `width * height` vertices, row-major ids.
pub fn gen_grid(width: usize, height: usize, w_max: Weight, seed: u64) -> Graph {
    let s = graph_stream(seed);
    let id = |x: usize, y: usize| y * width + x;
    let mut edges = Vec::new();
    for y in 0..height {
        for x in 0..width {
            if x + 1 < width {
                edges.push((id(x, y), id(x + 1, y), 0));
            }
            if y + 1 < height {
                edges.push((id(x, y), id(x, y + 1), 0));
            }
        }
    }
    let edges = edges
        .into_iter()
        .enumerate()
        .map(|(i, (u, v, _))| (u, v, draw_weight(s, i as u64, w_max)))
        .collect::<Vec<_>>();
    let mut canon: Vec<_> = edges.into_iter().map(|(u, v, w)| (u.min(v), u.max(v), w)).collect();
    canon.sort_unstable();
    Graph::from_canonical(width * height, canon)
}

/// Path 0 - 1 - ... - (n-1).
pub fn gen_path(n: usize, w_max: Weight, seed: u64) -> Graph {
    let s = graph_stream(seed);
    let edges = (0..n.saturating_sub(1))
        .map(|i| (i, i + 1, draw_weight(s, i as u64, w_max)))
        .collect::<Vec<_>>();
    Graph::from_canonical(n, edges)
}

/// Star with hub 0 and leaves `1..n`.
pub fn gen_star(n: usize, w_max: Weight, seed: u64) -> Graph {
    let s = graph_stream(seed);
    let edges = (1..n)
        .map(|v| (0, v, draw_weight(s, v as u64, w_max)))
        .collect::<Vec<_>>();
    Graph::from_canonical(n, edges)
}

/// Random recursive tree: vertex v attaches to a uniform earlier vertex.
pub fn gen_tree(n: usize, w_max: Weight, seed: u64) -> Graph {
    let s = graph_stream(seed);
    let mut edges = Vec::new();
    for v in 1..n {
        let parent = (mix2(s, v as u64) % v as u64) as usize;
        edges.push((parent.min(v), parent.max(v), draw_weight(mix64(s), v as u64, w_max)));
    }
    edges.sort_unstable();
    Graph::from_canonical(n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_weighted_and_unweighted_lines() {
        let g = Graph::parse_edge_list("3 2\n0 1\n1 2 5\n").unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edges(), &[(0, 1, 1), (1, 2, 5)]);
        assert_eq!(g.w_max(), 5);
        assert!(!g.is_unweighted());
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = Graph::parse_edge_list("zzz\n").unwrap_err();
        assert!(matches!(err, ParseError::BadHeader { line: 1, .. }));

        let err = Graph::parse_edge_list("2 1\n0 x\n").unwrap_err();
        assert!(matches!(err, ParseError::MalformedLine { line: 2, .. }));

        let err = Graph::parse_edge_list("2 1\n0 2\n").unwrap_err();
        assert!(matches!(
            err,
            ParseError::Invalid {
                line: 2,
                source: GraphError::VertexOutOfRange { id: 2, n: 2 }
            }
        ));

        let err = Graph::parse_edge_list("2 1\n1 1\n").unwrap_err();
        assert!(matches!(
            err,
            ParseError::Invalid {
                line: 2,
                source: GraphError::SelfLoop { v: 1 }
            }
        ));

        let err = Graph::parse_edge_list("2 2\n0 1\n1 0 3\n").unwrap_err();
        assert!(matches!(
            err,
            ParseError::Invalid {
                line: 3,
                source: GraphError::DuplicateEdge { u: 0, v: 1 }
            }
        ));

        let err = Graph::parse_edge_list("2 1\n0 1 0\n").unwrap_err();
        assert!(matches!(
            err,
            ParseError::Invalid {
                line: 2,
                source: GraphError::BadWeight { w: 0 }
            }
        ));

        let err = Graph::parse_edge_list("3 2\n0 1\n").unwrap_err();
        assert!(matches!(err, ParseError::EdgeCountMismatch { expected: 2, found: 1 }));
    }

    #[test]
    fn constructor_rejects_duplicates_in_either_orientation() {
        let err = Graph::new(3, [(0, 1, 1), (1, 0, 2)]).unwrap_err();
        assert_eq!(err, GraphError::DuplicateEdge { u: 0, v: 1 });
    }

    #[test]
    fn sssp_handles_weights_and_unreachable() {
        let g = Graph::new(4, [(0, 1, 2), (1, 2, 3)]).unwrap();
        assert_eq!(g.sssp(0), vec![Some(0), Some(2), Some(5), None]);
    }

    #[test]
    fn components_label_by_min_id() {
        let g = Graph::new(5, [(1, 3, 1), (2, 4, 1)]).unwrap();
        assert_eq!(g.components(), vec![0, 1, 2, 1, 2]);
    }

    #[test]
    fn generators_are_deterministic_in_seed() {
        let a = gen_random(40, 0.3, 3, 7);
        let b = gen_random(40, 0.3, 3, 7);
        let c = gen_random(40, 0.3, 3, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(gen_tree(30, 4, 1), gen_tree(30, 4, 1));
    }

    #[test]
    fn grid_shape() {
        let g = gen_grid(3, 2, 1, 0);
        assert_eq!(g.n(), 6);
        assert_eq!(g.m(), 7);
        assert_eq!(g.weight(0, 1), Some(1));
        assert_eq!(g.weight(0, 3), Some(1));
        assert_eq!(g.weight(0, 4), None);
    }

    #[test]
    fn tree_and_path_and_star_shapes() {
        assert_eq!(gen_tree(20, 1, 3).m(), 19);
        assert!(gen_tree(20, 1, 3).components().iter().all(|&c| c == 0));
        assert_eq!(gen_path(5, 1, 0).edges(), &[(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 4, 1)]);
        assert_eq!(gen_star(4, 1, 0).edges(), &[(0, 1, 1), (0, 2, 1), (0, 3, 1)]);
        assert_eq!(gen_path(1, 1, 0).m(), 0);
    }

    #[test]
    fn json_round_trip() {
        let g = gen_random(12, 0.4, 3, 5);
        let s = serde_json::to_string(&g).unwrap();
        let back: Graph = serde_json::from_str(&s).unwrap();
        assert_eq!(g, back);
        assert!(s.starts_with("{\"n\":12,\"edges\":[["));
    }

    #[test]
    fn json_rejects_invalid() {
        let bad = r#"{"n":2,"edges":[[0,0,1]]}"#;
        assert!(serde_json::from_str::<Graph>(bad).is_err());
    }

    proptest! {
        #[test]
        fn edge_list_round_trip(n in 1usize..30, seed in 0u64..500, p in 0.0f64..0.7) {
            let g = gen_random(n, p, 4, seed);
            let back = Graph::parse_edge_list(&g.to_edge_list()).unwrap();
            prop_assert_eq!(g, back);
        }

        #[test]
        fn sssp_satisfies_triangle_inequality(seed in 0u64..200) {
            let g = gen_random(14, 0.3, 3, seed);
            let d0 = g.sssp(0);
            for &(u, v, w) in g.edges() {
                if let (Some(du), Some(dv)) = (d0[u], d0[v]) {
                    prop_assert!((du - dv).abs() <= w);
                }
            }
        }
    }
}
