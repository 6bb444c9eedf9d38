//! Common-neighbour pruning of candidate node pairs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::graph::{sorted_intersection_len, Adjacency, Edge, EdgeSet, Node};

/// Threshold of the common-neighbour test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PruneParams {
    pub m2: usize,
    /// Values above 1 lower the threshold to widen the accepted radius.
    pub loose_factor: f64,
}

impl PruneParams {
    pub fn new(m2: usize, loose_factor: f64) -> Result<PruneParams> {
        if m2 == 0 {
            return invalid("common-neighbour threshold must be at least 1");
        }
        if !(loose_factor >= 1.0) {
            return invalid("loose factor must be at least 1");
        }
        Ok(PruneParams { m2, loose_factor })
    }

    /// `max(1, round(m2 / loose_factor))`.
    pub fn threshold(&self) -> usize {
        ((self.m2 as f64 / self.loose_factor).round() as usize).max(1)
    }
}

/// Pairs whose common-neighbour count reached the threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrunedPairs {
    pub pairs: EdgeSet,
    pub source_threshold: usize,
}

pub fn count_common_neighbors(adj: &Adjacency, u: Node, v: Node) -> Result<usize> {
    if u == v {
        return invalid("common neighbours of a node with itself");
    }
    Ok(sorted_intersection_len(adj.neighbors(u), adj.neighbors(v)))
}

/// `round(theta · C·k)`, at least 2.
pub fn default_m2(ck: f64, theta: f64) -> usize {
    ((theta * ck).round() as usize).max(2)
}

/// Every pair with at least `params.threshold()` common neighbours.
///
/// Candidates come from two-hop walks, so pairs with no common neighbour
/// are never touched. Accepted pairs need not be edges.
pub fn simple_test(adj: &Adjacency, params: &PruneParams) -> PrunedPairs {
    let m = params.threshold();
    let n = adj.n();
    let rows: Vec<Vec<Edge>> = (0..n as Node)
        .into_par_iter()
        .map_init(
            || (vec![0u32; n], Vec::new()),
            |(count, touched), u| {
                for &w in adj.neighbors(u) {
                    for &v in adj.neighbors(w) {
                        if v > u {
                            if count[v as usize] == 0 {
                                touched.push(v);
                            }
                            count[v as usize] += 1;
                        }
                    }
                }
                let mut row: Vec<Edge> = touched
                    .iter()
                    .filter(|&&v| count[v as usize] as usize >= m)
                    .map(|&v| Edge { lo: u, hi: v })
                    .collect();
                row.sort_unstable();
                for &v in touched.iter() {
                    count[v as usize] = 0;
                }
                touched.clear();
                row
            },
        )
        .collect();
    PrunedPairs { pairs: EdgeSet::from_edges(n, rows.concat()), source_threshold: m }
}

/// Local, pruning and amoeba radii derived from `C·k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Radii {
    pub local: f64,
    pub pruned: f64,
    pub amoeba: f64,
}

impl Radii {
    /// `local = (C·k)^(1/d)`, `pruned = θ_pr·K^(2/d)·local`,
    /// `amoeba = θ_ar·K^(3/d)·pruned`.
    pub fn new(ck: f64, dim: usize, categories: usize, theta_pr: f64, theta_ar: f64) -> Radii {
        let d = dim as f64;
        let kc = categories as f64;
        let local = ck.powf(1.0 / d);
        let pruned = theta_pr * kc.powf(2.0 / d) * local;
        let amoeba = theta_ar * kc.powf(3.0 / d) * pruned;
        Radii { local, pruned, amoeba }
    }
}
