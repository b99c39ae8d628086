//! Independent re-implementations used to cross-check the fast paths.
//!
//! The clustering oracle here is built the way one would prove it correct:
//! an explicit extra source vertex, edge keys carrying an exact fractional
//! tie-break `id / (n + 1)`, and a quadratic textbook Dijkstra. It shares no
//! code with the production search.

use std::collections::BTreeSet;
use thiserror::Error;

use crate::graph::{Dist, Graph, NodeId};

#[derive(Debug, Error, PartialEq)]
pub enum VerifyError {
    #[error("graph has {n} vertices, above the all-pairs cap {cap}")]
    TooLarge { n: usize, cap: usize },
}

/// An exact `dist + tie/(n+1)` value, kept as an integer pair. Comparison is
/// lexicographic, which equals comparing the rational values because the
/// fractional part is always strictly below 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct FractionalKey {
    pub dist: Dist,
    pub tie: NodeId,
}

/// Reference clustering: shortest paths from one explicit virtual source.
///
/// The source connects to every vertex `v` with weight `r - delta[v]` plus a
/// fractional `v/(n+1)`; original edges have integral weight. Since exactly
/// one fractional term appears on any source-to-vertex path, the winning
/// first hop is recoverable from the fraction, and it is the minimum-id
/// vertex among tied integral distances. Returns `(center, level)`.
pub fn oracle_cluster_fractional(g: &Graph, r: u64, delta: &[u64]) -> (Vec<NodeId>, Vec<Dist>) {
    let n = g.n();
    assert_eq!(delta.len(), n, "one offset per vertex");
    let s = n;
    let mut key: Vec<Option<FractionalKey>> = vec![None; n + 1];
    key[s] = Some(FractionalKey { dist: 0, tie: 0 });
    let mut done = vec![false; n + 1];
    for _ in 0..=n {
        let mut x = usize::MAX;
        for cand in 0..=n {
            if done[cand] || key[cand].is_none() {
                continue;
            }
            if x == usize::MAX || key[cand] < key[x] {
                x = cand;
            }
        }
        if x == usize::MAX {
            break;
        }
        done[x] = true;
        if x == s {
            for v in 0..n {
                debug_assert!(delta[v] <= r);
                let cand = FractionalKey {
                    dist: (r - delta[v]) as Dist,
                    tie: v,
                };
                if key[v].map_or(true, |k| cand < k) {
                    key[v] = Some(cand);
                }
            }
        } else {
            let kx = key[x].unwrap();
            for &(u, w) in g.neighbors(x) {
                let cand = FractionalKey {
                    dist: kx.dist + w,
                    tie: kx.tie,
                };
                if key[u].map_or(true, |k| cand < k) {
                    key[u] = Some(cand);
                }
            }
        }
    }
    let mut center = Vec::with_capacity(n);
    let mut level = Vec::with_capacity(n);
    for v in 0..n {
        let k = key[v].expect("every vertex is adjacent to the virtual source");
        center.push(k.tie);
        level.push(k.dist);
    }
    (center, level)
}

/// All-pairs shortest paths, refusing graphs beyond `cap` vertices.
pub fn apsp(g: &Graph, cap: usize) -> Result<Vec<Vec<Option<Dist>>>, VerifyError> {
    if g.n() > cap {
        return Err(VerifyError::TooLarge { n: g.n(), cap });
    }
    Ok((0..g.n()).map(|v| g.sssp(v)).collect())
}

/// Exhaustive candidate edge set at `x`: for every vertex `u` whose ball
/// reaches `x` at the winning distance (or one past it with a smaller id
/// than the winner), every neighbor of `x` lying on some shortest `u`-to-`x`
/// path. Any correct per-vertex sparsifier choice at `x` must pick edges
/// from this set.
pub fn brute_force_cx(
    g: &Graph,
    r: u64,
    delta: &[u64],
    x: NodeId,
    dists: &[Vec<Option<Dist>>],
) -> BTreeSet<(NodeId, NodeId)> {
    let n = g.n();
    let reach = |u: NodeId| -> Option<Dist> { dists[u][x].map(|d| d + (r - delta[u]) as Dist) };
    let winning = (0..n).filter_map(reach).min().expect("x reaches itself");
    let cx = (0..n)
        .find(|&u| reach(u) == Some(winning))
        .expect("some vertex attains the winning distance");
    let mut out = BTreeSet::new();
    for u in 0..n {
        if u == x {
            continue;
        }
        let Some(du) = reach(u) else { continue };
        let qualifies = du == winning || (du == winning + 1 && u < cx);
        if !qualifies {
            continue;
        }
        for &(y, w) in g.neighbors(x) {
            if let (Some(duy), Some(dux)) = (dists[u][y], dists[u][x]) {
                if duy + w == dux {
                    out.insert((x, y));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::cluster_with_offsets;
    use crate::geomcap::{sample_offsets, GeomCapParams};
    use crate::graph::{gen_path, gen_random};
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use proptest::prelude::*;

    #[test]
    fn oracle_matches_hand_example() {
        let g = gen_path(3, 1, 0);
        let (center, level) = oracle_cluster_fractional(&g, 2, &[2, 0, 0]);
        assert_eq!(center, vec![0, 0, 0]);
        assert_eq!(level, vec![0, 1, 2]);
        let (center, level) = oracle_cluster_fractional(&g, 2, &[0, 2, 0]);
        assert_eq!(center, vec![1, 1, 1]);
        assert_eq!(level, vec![1, 0, 1]);
    }

    #[test]
    fn oracle_agrees_with_fast_path_on_random_instances() {
        for seed in 0..30u64 {
            let g = gen_random(25, 0.15, 3, seed);
            let r = 6u64;
            let params = GeomCapParams::new(0.3, r).unwrap();
            let delta = sample_offsets(params, g.n(), seed);
            let fast = cluster_with_offsets(&g, r, &delta).unwrap();
            let (center, level) = oracle_cluster_fractional(&g, r, &delta);
            assert_eq!(fast.center, center, "seed {seed}");
            assert_eq!(fast.level, level, "seed {seed}");
        }
    }

    #[test]
    fn apsp_respects_cap() {
        let g = gen_path(5, 1, 0);
        assert!(apsp(&g, 4).is_err());
        let d = apsp(&g, 5).unwrap();
        assert_eq!(d[0][4], Some(4));
        assert_eq!(d[2][2], Some(0));
    }

    #[test]
    fn brute_force_cx_on_single_edge_tie() {
        let g = Graph::new(2, [(0, 1, 1)]).unwrap();
        let d = apsp(&g, 10).unwrap();
        // Both vertices level 0 in their own cluster; only vertex 1 sees a
        // qualifying foreign ball (center 0 at one past the winning value).
        assert_eq!(
            brute_force_cx(&g, 1, &[1, 1], 1, &d),
            BTreeSet::from([(1, 0)])
        );
        assert_eq!(brute_force_cx(&g, 1, &[1, 1], 0, &d), BTreeSet::new());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn fractional_key_order_equals_rational_order(
            d1 in 0i64..1000, t1 in 0usize..50, d2 in 0i64..1000, t2 in 0usize..50
        ) {
            let n_plus_1 = BigInt::from(51);
            let a = FractionalKey { dist: d1, tie: t1 };
            let b = FractionalKey { dist: d2, tie: t2 };
            let ra = BigRational::new(BigInt::from(d1) * &n_plus_1 + BigInt::from(t1), n_plus_1.clone());
            let rb = BigRational::new(BigInt::from(d2) * &n_plus_1 + BigInt::from(t2), n_plus_1.clone());
            prop_assert_eq!(a.cmp(&b), ra.cmp(&rb));
        }
    }
}
