//! Category-disjointness verifiers for ensembles of relabeled metrics.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{generate_points, permute_category, PointSet, TorusSpace};
use crate::error::{invalid, Result};
use crate::graph::Node;
use crate::rng;

/// Above this many nodes the checkers only sample.
pub const EXHAUSTIVE_CUTOFF: usize = 256;

/// One point set per category over a shared node set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CategoryEnsemble {
    pub categories: Vec<PointSet>,
    /// `permutations[i][v]` is the lattice node whose position node `v` took.
    pub permutations: Option<Vec<Vec<Node>>>,
}

impl CategoryEnsemble {
    pub fn new(categories: Vec<PointSet>, permutations: Option<Vec<Vec<Node>>>) -> Result<Self> {
        let Some(first) = categories.first() else {
            return invalid("an ensemble needs at least one category");
        };
        let n = first.n();
        if categories.iter().any(|c| c.n() != n) {
            return invalid("categories disagree on the node count");
        }
        if let Some(perms) = &permutations {
            if perms.len() != categories.len()
                || perms.iter().any(|p| p.len() != n || !super::is_permutation(p))
            {
                return invalid("permutations must be one bijection per category");
            }
        }
        Ok(CategoryEnsemble { categories, permutations })
    }

    /// `k` independently generated lattices, each relabeled by its own
    /// random permutation when `permute` is set.
    pub fn generate(
        space: TorusSpace,
        n: usize,
        k: usize,
        jitter: f64,
        permute: bool,
        seed: u64,
    ) -> Result<Self> {
        if k == 0 {
            return invalid("need at least one category");
        }
        let mut cats = Vec::with_capacity(k);
        let mut perms = Vec::with_capacity(k);
        for i in 0..k as u64 {
            let pts = generate_points(space, n, jitter, rng::derive(seed, 2 * i))?;
            let pseed = permute.then(|| rng::derive(seed, 2 * i + 1));
            let (p, sigma) = permute_category(&pts, pseed);
            cats.push(p);
            perms.push(sigma);
        }
        Self::new(cats, permute.then_some(perms))
    }

    pub fn n(&self) -> usize {
        self.categories[0].n()
    }

    pub fn k(&self) -> usize {
        self.categories.len()
    }

    /// Smallest distance between `u` and `v` over all categories.
    pub fn min_distance(&self, u: Node, v: Node) -> f64 {
        self.categories.iter().map(|c| c.dist(u, v)).fold(f64::INFINITY, f64::min)
    }
}

/// A ball pair whose overlap breaks a disjointness bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdViolation {
    pub categories: (usize, usize),
    pub centers: (Node, Node),
    pub radii: (f64, f64),
    pub overlap: usize,
    pub bound: f64,
}

fn intersection_len(a: &[Node], b: &[Node]) -> usize {
    crate::graph::sorted_intersection_len(a, b)
}

/// Checks that balls of radius at most `r_max` in distinct categories share
/// at most `bound` nodes. Small ensembles are checked exhaustively at radius
/// `r_max` (overlaps only grow with the radii); larger ones by `sample`
/// random ball pairs.
pub fn check_lcd(
    ens: &CategoryEnsemble,
    r_max: f64,
    bound: usize,
    sample: usize,
    seed: u64,
) -> Vec<CdViolation> {
    let k = ens.k();
    if k < 2 {
        return Vec::new();
    }
    let n = ens.n();
    let b = bound as f64;
    if n <= EXHAUSTIVE_CUTOFF {
        let balls: Vec<Vec<Vec<Node>>> = ens
            .categories
            .iter()
            .map(|c| (0..n as Node).map(|u| c.ball(u, r_max)).collect())
            .collect();
        let mut out = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                for u in 0..n {
                    for v in 0..n {
                        let overlap = intersection_len(&balls[i][u], &balls[j][v]);
                        if overlap > bound {
                            out.push(CdViolation {
                                categories: (i, j),
                                centers: (u as Node, v as Node),
                                radii: (r_max, r_max),
                                overlap,
                                bound: b,
                            });
                        }
                    }
                }
            }
        }
        return out;
    }
    (0..sample as u64)
        .into_par_iter()
        .filter_map(|t| {
            let mut r = rng::sub_rng(seed, t);
            let i = r.random_range(0..k);
            let j = (i + r.random_range(1..k)) % k;
            let (i, j) = (i.min(j), i.max(j));
            let u = r.random_range(0..n as Node);
            let v = r.random_range(0..n as Node);
            let ru = r_max * (1.0 - r.random::<f64>());
            let rv = r_max * (1.0 - r.random::<f64>());
            let overlap = intersection_len(
                &ens.categories[i].ball(u, ru),
                &ens.categories[j].ball(v, rv),
            );
            (overlap > bound).then_some(CdViolation {
                categories: (i, j),
                centers: (u, v),
                radii: (ru, rv),
                overlap,
                bound: b,
            })
        })
        .collect()
}

/// Constants of the scale-bounded pair-count condition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalCdParams {
    pub scale: f64,
    pub sample: usize,
    pub c1: f64,
    pub c2: f64,
}

impl Default for GlobalCdParams {
    fn default() -> Self {
        GlobalCdParams { scale: 16.0, sample: 1000, c1: 4.0, c2: 4.0 }
    }
}

/// Number of pairs `(a, b) ∈ B × B′` closer than `r` in `points`.
pub fn pairs_within(points: &PointSet, b: &[Node], b2: &[Node], r: f64) -> usize {
    b.iter()
        .map(|&x| b2.iter().filter(|&&y| points.dist(x, y) < r).count())
        .sum()
}

/// Samples disjoint same-category ball pairs with `|B|·|B′| ≤ scale^dim`
/// and radii `r ∈ (0, scale]`, and flags every other category whose close
/// pair count exceeds `c1·(r^dim/n)·|B||B′| + c2·ln²n`.
pub fn check_global_cd(
    ens: &CategoryEnsemble,
    params: &GlobalCdParams,
    seed: u64,
) -> Result<Vec<CdViolation>> {
    if !(params.scale > 0.0) {
        return invalid("global disjointness scale must be positive");
    }
    let k = ens.k();
    if k < 2 {
        return Ok(Vec::new());
    }
    let n = ens.n();
    let d = ens.categories[0].dim() as i32;
    let cap = params.scale.powi(d);
    let vol = ens.categories[0].space.unit_ball_volume();
    // radius whose ball holds about sqrt(cap) nodes
    let rho_cap = (cap.sqrt() / vol).powf(1.0 / d as f64).max(0.5);
    let ln2 = (n as f64).ln().powi(2);
    let found: Vec<Vec<CdViolation>> = (0..params.sample as u64)
        .into_par_iter()
        .map(|t| {
            let mut rg = rng::sub_rng(seed, t);
            let i = rg.random_range(0..k);
            let cat = &ens.categories[i];
            let mut picked = None;
            for _ in 0..100 {
                let u = rg.random_range(0..n as Node);
                let v = rg.random_range(0..n as Node);
                let (ru, rv) = (rho_cap * rg.random::<f64>(), rho_cap * rg.random::<f64>());
                let (bu, bv) = (cat.ball(u, ru), cat.ball(v, rv));
                if (bu.len() * bv.len()) as f64 <= cap && intersection_len(&bu, &bv) == 0 {
                    picked = Some((u, v, ru, rv, bu, bv));
                    break;
                }
            }
            let Some((u, v, ru, rv, bu, bv)) = picked else {
                return Vec::new();
            };
            let r = params.scale * (1.0 - rg.random::<f64>());
            let mut out = Vec::new();
            for j in (0..k).filter(|&j| j != i) {
                let count = pairs_within(&ens.categories[j], &bu, &bv, r);
                let bound = params.c1 * r.powi(d) / n as f64 * (bu.len() * bv.len()) as f64
                    + params.c2 * ln2;
                if count as f64 > bound {
                    out.push(CdViolation {
                        categories: (i, j),
                        centers: (u, v),
                        radii: (ru, rv),
                        overlap: count,
                        bound,
                    });
                }
            }
            out
        })
        .collect();
    Ok(found.into_iter().flatten().collect())
}
