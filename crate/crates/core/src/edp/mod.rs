//! Constant-degree regime: pruning by bounded-length edge-disjoint paths.

mod adaptive;
mod paths;

pub use adaptive::{adaptive_edp, AdaptiveParams, AdaptiveResult, Trial};
pub use paths::{disjoint_bounded_paths, has_p_disjoint_bounded_paths, DEFAULT_STATE_CAP};

use std::collections::VecDeque;

use log::debug;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::graph::{Adjacency, EdgeSet, Node};
use crate::metric::PointSet;
use crate::rng;
use paths::{EdgeGraph, Search};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdpParams {
    /// Number of edge-disjoint paths required.
    pub p: usize,
    /// Hop bound per path.
    pub h: usize,
    pub alpha: f64,
}

impl EdpParams {
    pub fn new(p: usize, h: usize, alpha: f64) -> Result<Self> {
        if p == 0 || h == 0 {
            return invalid("need p >= 1 and h >= 1");
        }
        if !(alpha > 0.0) {
            return invalid("alpha must be positive");
        }
        Ok(EdpParams { p, h, alpha })
    }
}

/// Order in which the certificate queue is drained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PruneOrder {
    /// All queued edges tested in parallel against the current survivors.
    Waves,
    /// One edge at a time, initial queue shuffled by the seed.
    Sequential(u64),
}

/// The largest subset of `edges` in which every edge has `p` edge-disjoint
/// paths of at most `h` hops.
pub fn edp_prune(edges: &EdgeSet, p: usize, h: usize, cap: usize) -> Result<EdgeSet> {
    edp_prune_ordered(edges, p, h, cap, PruneOrder::Waves)
}

/// [`edp_prune`] with an explicit processing order. Every order reaches the
/// same fixed point.
pub fn edp_prune_ordered(edges: &EdgeSet, p: usize, h: usize, cap: usize, order: PruneOrder) -> Result<EdgeSet> {
    if p == 0 || h == 0 {
        return invalid("need p >= 1 and h >= 1");
    }
    let g = EdgeGraph::new(edges);
    let m = g.m();
    let mut alive = vec![true; m];
    if p == 1 {
        return Ok(edges.clone());
    }
    // edges whose stored witness uses a given edge
    let mut dependents: Vec<Vec<u32>> = vec![Vec::new(); m];
    let mut cert: Vec<Vec<u32>> = vec![Vec::new(); m];
    let record = |e: u32, paths: Vec<Vec<u32>>, cert: &mut Vec<Vec<u32>>, dependents: &mut Vec<Vec<u32>>| {
        let c: Vec<u32> = paths.into_iter().flatten().filter(|&f| f != e).collect();
        for &f in &c {
            dependents[f as usize].push(e);
        }
        cert[e as usize] = c;
    };
    match order {
        PruneOrder::Waves => {
            let mut pending: Vec<u32> = (0..m as u32).collect();
            let mut wave = 0;
            while !pending.is_empty() {
                let found: Vec<Option<Vec<Vec<u32>>>> = pending
                    .par_iter()
                    .map_init(
                        || Search::new(g.n(), m, cap),
                        |s, &e| {
                            let (u, v) = g.ends[e as usize];
                            s.find(&g, &alive, u, v, p, h)
                        },
                    )
                    .collect::<Result<_>>()?;
                let mut killed = Vec::new();
                for (&e, f) in pending.iter().zip(found) {
                    match f {
                        Some(paths) => record(e, paths, &mut cert, &mut dependents),
                        None => killed.push(e),
                    }
                }
                debug!("wave {wave}: {} tested, {} pruned", pending.len(), killed.len());
                killed.iter().for_each(|&e| alive[e as usize] = false);
                let mut next = Vec::new();
                for &e in &killed {
                    for d in std::mem::take(&mut dependents[e as usize]) {
                        if alive[d as usize] && cert[d as usize].contains(&e) {
                            next.push(d);
                        }
                    }
                }
                next.sort_unstable();
                next.dedup();
                pending = next;
                wave += 1;
            }
        }
        PruneOrder::Sequential(seed) => {
            let mut queue: Vec<u32> = (0..m as u32).collect();
            queue.shuffle(&mut rng::rng(seed));
            let mut queue = VecDeque::from(queue);
            let mut queued = vec![true; m];
            let mut search = Search::new(g.n(), m, cap);
            while let Some(e) = queue.pop_front() {
                queued[e as usize] = false;
                if !alive[e as usize] {
                    continue;
                }
                let (u, v) = g.ends[e as usize];
                match search.find(&g, &alive, u, v, p, h)? {
                    Some(paths) => record(e, paths, &mut cert, &mut dependents),
                    None => {
                        alive[e as usize] = false;
                        for d in std::mem::take(&mut dependents[e as usize]) {
                            if alive[d as usize] && !queued[d as usize] && cert[d as usize].contains(&e) {
                                queued[d as usize] = true;
                                queue.push_back(d);
                            }
                        }
                    }
                }
            }
        }
    }
    let keep: Vec<_> = edges.iter().zip(&alive).filter(|(_, &a)| a).map(|(e, _)| e).collect();
    Ok(EdgeSet::from_edges(edges.n(), keep))
}

/// Length above which pruning should remove every edge:
/// `D^((2+α)/p) · h · (c0·(k + ln^(1+α) n))^(2h/d)` with `D` the torus
/// diameter for side `n^(1/d)`.
pub fn const_dr(alpha: f64, p: usize, h: usize, n: usize, dim: usize, k: f64, c0: f64) -> f64 {
    let (nf, d) = (n as f64, dim as f64);
    let diameter = nf.powf(1.0 / d) / 2.0 * d.sqrt();
    let poly = c0 * (k + nf.ln().powf(1.0 + alpha));
    diameter.powf((2.0 + alpha) / p as f64) * h as f64 * poly.powf(2.0 * h as f64 / d)
}

/// What pruning a local structure at `(p, h)` leaves behind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RichnessReport {
    pub is_connected_after_prune: bool,
    pub isolated_count: usize,
    pub pruned_edges: usize,
    /// Minimum of hop count over metric distance on sampled pairs.
    pub spanner_contraction: f64,
    /// Maximum of the same ratio.
    pub spanner_expansion: f64,
    /// Sampled pairs with no path after pruning.
    pub unreachable_pairs: usize,
}

/// Prunes a local edge set at `(p, h)` and measures the survivor as a
/// spanner of the metric on `samples` source nodes.
pub fn check_richness(
    local: &EdgeSet,
    p: usize,
    h: usize,
    points: &PointSet,
    samples: usize,
    seed: u64,
    cap: usize,
) -> Result<RichnessReport> {
    let n = local.n();
    if points.n() != n {
        return invalid("points and edges disagree on n");
    }
    let kept = edp_prune(local, p, h, cap)?;
    let adj = Adjacency::new(&kept);
    let sources: Vec<Node> = if samples >= n {
        (0..n as Node).collect()
    } else {
        rand::seq::index::sample(&mut rng::rng(seed), n, samples).into_iter().map(|i| i as Node).collect()
    };
    let per_source: Vec<(f64, f64, usize)> = sources
        .par_iter()
        .map(|&s| {
            let hops = adj.bfs(s);
            let (mut lo, mut hi, mut missing) = (f64::INFINITY, 0.0f64, 0);
            for (v, &hv) in hops.iter().enumerate() {
                let d = points.dist(s, v as Node);
                if v as Node == s || d == 0.0 {
                    continue;
                }
                if hv == crate::graph::UNREACHED {
                    missing += 1;
                    continue;
                }
                let r = hv as f64 / d;
                lo = lo.min(r);
                hi = hi.max(r);
            }
            (lo, hi, missing)
        })
        .collect();
    let (lo, hi, missing) = per_source
        .into_iter()
        .fold((f64::INFINITY, 0.0f64, 0), |a, b| (a.0.min(b.0), a.1.max(b.1), a.2 + b.2));
    Ok(RichnessReport {
        is_connected_after_prune: n <= 1 || adj.is_connected(),
        isolated_count: adj.isolated_count(),
        pruned_edges: local.len() - kept.len(),
        spanner_contraction: lo,
        spanner_expansion: if missing > 0 { f64::INFINITY } else { hi },
        unreachable_pairs: missing,
    })
}
