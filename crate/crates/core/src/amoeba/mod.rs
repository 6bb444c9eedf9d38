//! Per-category spanners grown from seed cliques over the pruned pairs.

mod grow;
mod labels;
mod seed;

pub use grow::{amoeba_test, grow_amoeba, grow_amoeba_ordered, passes, GrowOrder, GrowingGraph};
pub use labels::{build_distance_labels, label_query, DistanceLabels, LabelEntry, LabelParams};
pub use seed::{find_seed_clique_brute, find_seed_clique_fast, meets_diameter_floors};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{Adjacency, EdgeSet, Node, UNREACHED};
use crate::prune::Radii;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedMode {
    Brute,
    Fast,
    /// Fast search, falling back to brute force when it finds nothing.
    FastThenBrute,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmoebaParams {
    /// Minimum seed clique size.
    pub amoeba_n: usize,
    /// Union edges needed between an endpoint and the other's amoeba neighbourhood.
    pub amoeba_m: usize,
    /// Longest admissible edge, also the spanner scale.
    pub amoeba_r: f64,
    /// Minimum hop diameter of a seed inside every earlier category.
    pub diam_floor: u32,
    pub seed_mode: SeedMode,
    /// Seed candidates tried before giving up.
    pub seed_attempts: usize,
}

impl AmoebaParams {
    pub fn new(
        amoeba_n: usize,
        amoeba_m: usize,
        amoeba_r: f64,
        diam_floor: u32,
        seed_mode: SeedMode,
    ) -> Result<AmoebaParams> {
        if amoeba_m == 0 || amoeba_n < amoeba_m {
            return invalid(format!("need amoeba_n >= amoeba_m >= 1, got {amoeba_n}, {amoeba_m}"));
        }
        if !(amoeba_r > 0.0) {
            return invalid("amoeba radius must be positive");
        }
        Ok(AmoebaParams { amoeba_n, amoeba_m, amoeba_r, diam_floor, seed_mode, seed_attempts: 256 })
    }

    /// Defaults derived from the radii: `amoeba_n = round((local/2)^d)`,
    /// `amoeba_m = max(2, round(amoeba_n / (8^d K² θ_am)))`, floor
    /// `min(⌈ln² n⌉, n)`. `amoeba_n` is raised to `amoeba_m` when smaller.
    pub fn defaults(radii: &Radii, dim: usize, categories: usize, n: usize, theta_am: f64) -> AmoebaParams {
        let d = dim as i32;
        let raw_n = (radii.local / 2.0).powi(d).round() as usize;
        let m = ((raw_n as f64 / (8f64.powi(d) * (categories * categories) as f64 * theta_am))
            .round() as usize)
            .max(2);
        if raw_n < m {
            info!("seed clique size {raw_n} raised to the test threshold {m}");
        }
        let ln = (n as f64).ln();
        let floor = (ln * ln).ceil().min(n as f64) as u32;
        AmoebaParams {
            amoeba_n: raw_n.max(m),
            amoeba_m: m,
            amoeba_r: radii.amoeba,
            diam_floor: floor,
            seed_mode: SeedMode::FastThenBrute,
            seed_attempts: 256,
        }
    }
}

/// One grown edge set per discovered category.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmoebaResult {
    pub category_edges: Vec<EdgeSet>,
    pub seed_cliques: Vec<Vec<Node>>,
    /// Iteration at which each output set was discovered.
    pub category_order: Vec<usize>,
    /// Pruned pairs that no category claimed.
    pub uncovered: usize,
}

/// Hop count times `scale`; infinite across components.
pub fn spanner_distance(adj: &Adjacency, u: Node, v: Node, scale: f64) -> f64 {
    adj.hop_distance(u, v).map_or(f64::INFINITY, |h| h as f64 * scale)
}

/// Double-sweep lower bound on the hop diameter of the component of `start`.
pub(crate) fn hop_diameter_estimate(adj: &Adjacency, start: Node) -> u32 {
    let far = |src: Node| {
        let d = adj.bfs(src);
        d.iter()
            .enumerate()
            .filter(|(_, &h)| h != UNREACHED)
            .max_by_key(|(i, &h)| (h, std::cmp::Reverse(*i)))
            .map(|(i, &h)| (i as Node, h))
            .unwrap_or((src, 0))
    };
    let (a, _) = far(start);
    far(a).1
}

/// Runs `categories` rounds of seed search and growth.
///
/// `strict` feeds the fast seed search; `loose` is the pair set the amoebas
/// grow over (pass the same set twice when no loose pruning is used).
pub fn run_amoeba_stage(
    union: &EdgeSet,
    strict: &EdgeSet,
    loose: &EdgeSet,
    categories: usize,
    params: &AmoebaParams,
) -> Result<AmoebaResult> {
    if categories == 0 {
        return invalid("need at least one category");
    }
    let union_adj = Adjacency::new(union);
    let strict_adj = Adjacency::new(strict);
    let loose_adj = Adjacency::new(loose);
    let mut found: Vec<EdgeSet> = Vec::new();
    let mut prior_adj: Vec<Adjacency> = Vec::new();
    let mut seeds = Vec::new();
    for it in 0..categories {
        let covered = |e| found.iter().any(|s: &EdgeSet| s.contains(e));
        let uncovered: Vec<_> = loose.iter().filter(|&e| !covered(e)).collect();
        if uncovered.is_empty() {
            return Err(Error::SeedNotFound {
                iteration: it,
                reason: "every pruned pair is already covered".into(),
            });
        }
        let floors: Vec<u32> = prior_adj
            .iter()
            .zip(&seeds)
            .map(|(a, s): (&Adjacency, &Vec<Node>)| {
                let diam = hop_diameter_estimate(a, s[0]);
                let f = params.diam_floor.min((diam / 2).max(2));
                if f < params.diam_floor {
                    info!("seed diameter floor clamped from {} to {f} (hop diameter {diam})", params.diam_floor);
                }
                f
            })
            .collect();
        let fast = || {
            find_seed_clique_fast(
                &strict_adj, &loose_adj, &uncovered, categories, params.amoeba_n,
                &prior_adj, &floors, params.seed_attempts, it,
            )
        };
        let brute = || {
            find_seed_clique_brute(
                &loose_adj, &uncovered, params.amoeba_n, &prior_adj, &floors,
                params.seed_attempts, it,
            )
        };
        let seed = match params.seed_mode {
            SeedMode::Brute => brute()?,
            SeedMode::Fast => fast()?,
            SeedMode::FastThenBrute => match fast() {
                Ok(s) => s,
                Err(e) => {
                    warn!("fast seed search failed ({e}); trying brute force");
                    brute()?
                }
            },
        };
        let grown = grow_amoeba(&union_adj, loose, &seed, params.amoeba_m)?;
        info!("category {it}: seed of {} nodes grew to {} edges", seed.len(), grown.len());
        prior_adj.push(Adjacency::new(&grown));
        found.push(grown);
        seeds.push(seed);
    }
    let uncovered = loose.iter().filter(|&e| !found.iter().any(|s| s.contains(e))).count();
    if uncovered > 0 {
        warn!("{uncovered} pruned pairs left without a category");
    }
    Ok(AmoebaResult {
        category_edges: found,
        seed_cliques: seeds,
        category_order: (0..categories).collect(),
        uncovered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spanner_distance_examples() {
        let path = EdgeSet::from_pairs(5, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let a = Adjacency::new(&path);
        assert_eq!(spanner_distance(&a, 2, 2, 7.0), 0.0);
        assert_eq!(spanner_distance(&a, 0, 1, 7.0), 7.0);
        assert_eq!(spanner_distance(&a, 0, 3, 7.0), 21.0);
        assert!(spanner_distance(&a, 0, 4, 7.0).is_infinite());
        assert_eq!(hop_diameter_estimate(&a, 1), 3);
    }

    #[test]
    fn params_validation() {
        assert!(AmoebaParams::new(3, 4, 1.0, 2, SeedMode::Brute).is_err());
        assert!(AmoebaParams::new(3, 0, 1.0, 2, SeedMode::Brute).is_err());
        assert!(AmoebaParams::new(3, 2, 0.0, 2, SeedMode::Brute).is_err());
        let r = Radii::new(5.2, 2, 2, 2.0, 2.0);
        let p = AmoebaParams::defaults(&r, 2, 2, 4096, 1.0);
        assert!(p.amoeba_n >= p.amoeba_m && p.amoeba_m >= 2);
        assert_eq!(p.diam_floor, 70);
    }
}
