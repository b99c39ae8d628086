//! Ball-growing graph clustering and what it buys you.
//!
//! The core primitive partitions a graph into clusters by growing balls
//! from every vertex simultaneously, each with a random head start drawn
//! from a capped geometric distribution. Every cluster comes with a
//! shortest-path tree of radius at most the cap, so cluster diameters are
//! bounded deterministically while the random head starts keep the
//! probability of cutting any short path low.
//!
//! On top of that one primitive:
//!
//! * [`spanner`] keeps one edge per adjacent cluster and the tree edges,
//!   yielding a (2k-1)-spanner with O(n^(1+1/k)) expected edges.
//! * [`ldd`] re-parameterizes the clustering into a low-diameter
//!   decomposition of an integer-weighted graph where each edge is cut
//!   with probability proportional to its weight.
//! * [`congest`] simulates the clustering as a message-passing program on
//!   synchronous and asynchronous networks, with synchronizers whose
//!   control traffic flows over the sparsified decomposition itself.
//!
//! All randomness is hash-derived from explicit 64-bit seeds; every
//! function here is a pure function of its arguments.

pub mod cluster;
pub mod congest;
pub mod geomcap;
pub mod graph;
mod hashing;
pub mod ldd;
pub mod spanner;
pub mod verify;

pub use cluster::{cluster, cluster_with_offsets, ClusterParams, Clustering};
pub use geomcap::GeomCapParams;
pub use graph::{Dist, Graph, NodeId, Weight};
pub use ldd::{estimate_cut_prob, ldd, ldd_params};
pub use spanner::{build_spanner, SpannerResult};
