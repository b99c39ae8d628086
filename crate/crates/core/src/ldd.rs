//! Low-diameter decomposition of weighted graphs.
//!
//! For a cut parameter `beta`, clustering with `p = beta/4` and cap
//! `r = ceil((1/p) ln(n^2/p) + 1/(4p))` yields clusters of strong diameter
//! at most `2r` in which each edge `(u, v)` ends up between two clusters
//! with probability at most `beta * w(u, v)`.

use serde::Serialize;
use std::fmt::Write as _;
use thiserror::Error;

use crate::cluster::{cluster, ClusterError, Clustering};
use crate::graph::Graph;

#[derive(Debug, Error, PartialEq)]
pub enum LddError {
    #[error("beta {0} outside the interval (0, 1]")]
    BadBeta(f64),
    #[error("decomposition needs at least one vertex")]
    EmptyGraph,
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LddParams {
    pub p: f64,
    pub r: u64,
}

/// Derives the sampling probability and cap from `beta` and `n`.
pub fn ldd_params(beta: f64, n: usize) -> Result<LddParams, LddError> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(LddError::BadBeta(beta));
    }
    if n == 0 {
        return Err(LddError::EmptyGraph);
    }
    let p = beta / 4.0;
    let n = n as f64;
    let r = ((1.0 / p) * (n * n / p).ln() + 1.0 / (4.0 * p)).ceil() as u64;
    Ok(LddParams { p, r })
}

pub fn ldd(g: &Graph, beta: f64, seed: u64) -> Result<Clustering, LddError> {
    let params = ldd_params(beta, g.n())?;
    Ok(cluster(g, params.p, params.r, seed)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeCutStat {
    pub u: usize,
    pub v: usize,
    pub w: i64,
    pub cut_count: u64,
    pub frequency: f64,
    /// `beta * w`; the check is vacuous when this reaches 1.
    pub bound: f64,
    /// Three-sigma sampling allowance at this trial count.
    pub margin: f64,
    pub vacuous: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutStats {
    pub beta: f64,
    pub p: f64,
    pub r: u64,
    pub trials: u64,
    pub edges: Vec<EdgeCutStat>,
    /// Sum of observed cut frequencies over all edges.
    pub total_frequency: f64,
    /// `beta * sum of edge weights`, the aggregate expectation bound.
    pub total_bound: f64,
}

impl CutStats {
    pub fn all_pass(&self) -> bool {
        self.edges.iter().all(|e| e.pass || e.vacuous)
    }

    /// CSV rows `u,v,w,frequency,bound,margin,status` with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("u,v,w,frequency,bound,margin,status\n");
        for e in &self.edges {
            let status = if e.vacuous {
                "vacuous"
            } else if e.pass {
                "pass"
            } else {
                "fail"
            };
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{:.6},{:.6},{}",
                e.u, e.v, e.w, e.frequency, e.bound, e.margin, status
            );
        }
        out
    }
}

/// Runs the decomposition under seeds `seed..seed + trials` and tallies how
/// often each edge crosses clusters.
pub fn estimate_cut_prob(g: &Graph, beta: f64, trials: u64, seed: u64) -> Result<CutStats, LddError> {
    let params = ldd_params(beta, g.n())?;
    assert!(trials > 0, "at least one trial");
    let mut counts = vec![0u64; g.m()];
    for t in 0..trials {
        let c = cluster(g, params.p, params.r, seed.wrapping_add(t))?;
        for (i, &(u, v, _)) in g.edges().iter().enumerate() {
            if c.center[u] != c.center[v] {
                counts[i] += 1;
            }
        }
    }
    let mut total_frequency = 0.0;
    let mut total_bound = 0.0;
    let edges = g
        .edges()
        .iter()
        .zip(&counts)
        .map(|(&(u, v, w), &cut_count)| {
            let frequency = cut_count as f64 / trials as f64;
            let bound = beta * w as f64;
            let vacuous = bound >= 1.0;
            let margin = if vacuous {
                0.0
            } else {
                3.0 * (bound * (1.0 - bound) / trials as f64).sqrt()
            };
            total_frequency += frequency;
            total_bound += beta * w as f64;
            EdgeCutStat {
                u,
                v,
                w,
                cut_count,
                frequency,
                bound,
                margin,
                vacuous,
                pass: vacuous || frequency <= bound + margin,
            }
        })
        .collect();
    Ok(CutStats {
        beta,
        p: params.p,
        r: params.r,
        trials,
        edges,
        total_frequency,
        total_bound,
    })
}
