//! Scoring reconstructed distances and categories against ground truth.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amoeba::AmoebaResult;
use crate::error::{invalid, Result};
use crate::graph::{Edge, EdgeSet, Node};
use crate::metric::{CategoryEnsemble, PointSet};
use crate::rng;

/// `q`-quantile by the nearest-rank rule. `values` need not be sorted.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q.clamp(0.0, 1.0) * v.len() as f64).ceil() as usize).max(1);
    v[rank - 1]
}

/// Ordinary least-squares slope and intercept of `y` on `x`.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Random pairs spread evenly over `strata` equal-width bands of true
/// distance in `(lo, hi]`.
pub fn stratified_pairs(
    n: usize,
    truth: impl Fn(Node, Node) -> f64,
    count: usize,
    strata: usize,
    (lo, hi): (f64, f64),
    seed: u64,
) -> Vec<(Node, Node)> {
    let mut r = rng::rng(seed);
    let strata = strata.max(1);
    let per = count.div_ceil(strata);
    let mut bins: Vec<Vec<(Node, Node)>> = vec![Vec::new(); strata];
    let width = (hi - lo) / strata as f64;
    let mut left = count;
    // bands too thin to fill give up after this many draws
    let budget = 400 * count.max(1);
    for _ in 0..budget {
        if left == 0 {
            break;
        }
        let (u, v) = (r.random_range(0..n as Node), r.random_range(0..n as Node));
        if u == v {
            continue;
        }
        let d = truth(u, v);
        if !(d > lo && d <= hi) {
            continue;
        }
        let b = (((d - lo) / width).ceil() as usize).clamp(1, strata) - 1;
        if bins[b].len() < per {
            bins[b].push((u.min(v), u.max(v)));
            left = left.saturating_sub(1);
        }
    }
    bins.into_iter().flatten().take(count).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketError {
    pub lo: f64,
    pub hi: f64,
    pub pairs: usize,
    /// Quantiles of `|est − true|`.
    pub median: f64,
    pub q90: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub pairs_used: usize,
    pub zero_distance_excluded: usize,
    pub unavailable: usize,
    /// `min est/true`.
    pub contraction: f64,
    /// `(Δ, max (est − Δ)⁺/true)` over the grid.
    pub expansion_curve: Vec<(f64, f64)>,
    /// By true-distance decile.
    pub bucket_errors: Vec<BucketError>,
    pub violations: usize,
    /// Violating fraction over the allowed fraction, when a target is given.
    pub violation_budget_used: f64,
}

impl DistortionReport {
    pub fn expansion_at(&self, delta: f64) -> Option<f64> {
        self.expansion_curve.iter().find(|p| p.0 == delta).map(|p| p.1)
    }
}

/// Contraction, expansion curve and per-decile additive errors of `est`
/// against `truth` on `pairs`.
///
/// With `target = Some((λ, Ĉ, Δ))` a pair violates when
/// `est < λ·true` or `est > Ĉ·true + Δ`; the budget is the allowed
/// violating fraction.
pub fn evaluate_distortion(
    truth: impl Fn(Node, Node) -> f64,
    est: impl Fn(Node, Node) -> f64,
    pairs: &[(Node, Node)],
    delta_grid: &[f64],
    target: Option<(f64, f64, f64)>,
    budget: f64,
) -> Result<DistortionReport> {
    let mut zero = 0;
    let mut unavailable = 0;
    let mut rows: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
    for &(u, v) in pairs {
        let t = truth(u, v);
        if t <= 0.0 {
            zero += 1;
            continue;
        }
        let e = est(u, v);
        if !e.is_finite() {
            unavailable += 1;
            continue;
        }
        rows.push((t, e));
    }
    if rows.is_empty() {
        return invalid("no usable pairs to score");
    }
    let contraction = rows.iter().map(|&(t, e)| e / t).fold(f64::INFINITY, f64::min);
    let mut grid = delta_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let expansion_curve = grid
        .iter()
        .map(|&d| (d, rows.iter().map(|&(t, e)| (e - d).max(0.0) / t).fold(0.0, f64::max)))
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let buckets = 10.min(rows.len());
    let bucket_errors = (0..buckets)
        .map(|b| {
            let chunk = &rows[b * rows.len() / buckets..(b + 1) * rows.len() / buckets];
            let err: Vec<f64> = chunk.iter().map(|&(t, e)| (e - t).abs()).collect();
            BucketError {
                lo: chunk[0].0,
                hi: chunk[chunk.len() - 1].0,
                pairs: chunk.len(),
                median: quantile(&err, 0.5),
                q90: quantile(&err, 0.9),
                max: err.iter().copied().fold(0.0, f64::max),
            }
        })
        .collect();
    let violations = target.map_or(0, |(l, c, d)| rows.iter().filter(|&&(t, e)| e < l * t || e > c * t + d).count());
    let violation_budget_used = if target.is_some() {
        violations as f64 / rows.len() as f64 / budget
    } else {
        0.0
    };
    Ok(DistortionReport {
        pairs_used: rows.len(),
        zero_distance_excluded: zero,
        unavailable,
        contraction,
        expansion_curve,
        bucket_errors,
        violations,
        violation_budget_used,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryScore {
    pub true_category: usize,
    /// Index of the discovered set matched to this category.
    pub discovered: Option<usize>,
    pub short_edges: usize,
    pub discovered_edges: usize,
    /// Short edges of this category found in the matched set.
    pub recall: f64,
    /// Matched-set edges at most the amoeba radius long in this category.
    pub precision: f64,
    /// Matched-set edges longer than the amoeba radius in this category.
    pub contamination: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryReport {
    /// `matching[j]` is the true category of discovered set `j`.
    pub matching: Vec<usize>,
    pub categories: Vec<CategoryScore>,
}

fn permutations(k: usize, take: usize) -> Vec<Vec<usize>> {
    fn rec(k: usize, take: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == take {
            out.push(cur.clone());
            return;
        }
        for i in 0..k {
            if !cur.contains(&i) {
                cur.push(i);
                rec(k, take, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(k, take, &mut Vec::new(), &mut out);
    out
}

/// Matches discovered sets to true categories by maximal summed recall of
/// short edges and scores each pair.
///
/// Short edges are pruned pairs at most `local_r` apart in a category;
/// long ones are more than `amoeba_r` apart.
pub fn evaluate_categories(
    truth: &[PointSet],
    result: &AmoebaResult,
    pruned: &EdgeSet,
    local_r: f64,
    amoeba_r: f64,
) -> Result<CategoryReport> {
    let k = truth.len();
    let found = &result.category_edges;
    if k == 0 || k > 6 {
        return invalid("category matching supports 1 to 6 categories");
    }
    if found.len() > k {
        return invalid("more discovered sets than categories");
    }
    let short: Vec<EdgeSet> = truth.iter().map(|p| pruned.filter(|e| p.dist(e.lo, e.hi) <= local_r)).collect();
    let recall = |i: usize, j: usize| {
        let s = &short[i];
        if s.is_empty() {
            return 1.0;
        }
        s.iter().filter(|&e| found[j].contains(e)).count() as f64 / s.len() as f64
    };
    let table: Vec<Vec<f64>> = (0..found.len()).map(|j| (0..k).map(|i| recall(i, j)).collect()).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for perm in permutations(k, found.len()) {
        let score: f64 = perm.iter().enumerate().map(|(j, &i)| table[j][i]).sum();
        if best.as_ref().is_none_or(|b| score > b.0 + 1e-12) {
            best = Some((score, perm));
        }
    }
    let matching = best.map(|b| b.1).unwrap_or_default();
    let categories = (0..k)
        .map(|i| {
            let j = matching.iter().position(|&x| x == i);
            let (edges, precision, contamination, rec) = match j {
                Some(j) => {
                    let set = &found[j];
                    let near = set.iter().filter(|e| truth[i].dist(e.lo, e.hi) <= amoeba_r).count();
                    let p = if set.is_empty() { 1.0 } else { near as f64 / set.len() as f64 };
                    (set.len(), p, set.len() - near, table[j][i])
                }
                None => (0, 1.0, 0, if short[i].is_empty() { 1.0 } else { 0.0 }),
            };
            CategoryScore {
                true_category: i,
                discovered: j,
                short_edges: short[i].len(),
                discovered_edges: edges,
                recall: rec,
                precision,
                contamination,
            }
        })
        .collect();
    Ok(CategoryReport { matching, categories })
}

/// Acceptance split of the common-neighbour test against ground truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimpleTestCheck {
    /// Pairs within `local_r` in some category.
    pub near_pairs: usize,
    pub near_accepted: usize,
    /// Sampled pairs at least `pruned_r` apart in every category.
    pub far_sampled: usize,
    pub far_accepted: usize,
}

impl SimpleTestCheck {
    pub fn near_rate(&self) -> f64 {
        self.near_accepted as f64 / self.near_pairs.max(1) as f64
    }

    pub fn far_rate(&self) -> f64 {
        self.far_accepted as f64 / self.far_sampled.max(1) as f64
    }
}

/// Checks every near pair and `far_samples` random far pairs against the
/// accepted set.
pub fn simple_test_check(
    ensemble: &CategoryEnsemble,
    accepted: &EdgeSet,
    local_r: f64,
    pruned_r: f64,
    far_samples: usize,
    seed: u64,
) -> SimpleTestCheck {
    let n = ensemble.n();
    let near: Vec<Vec<Node>> = (0..n as Node)
        .into_par_iter()
        .map(|u| {
            let mut vs: Vec<Node> = ensemble
                .categories
                .iter()
                .flat_map(|p| p.ball(u, local_r))
                .filter(|&v| v > u)
                .collect();
            vs.sort_unstable();
            vs.dedup();
            vs
        })
        .collect();
    let near_pairs = near.iter().map(Vec::len).sum();
    let near_accepted = near
        .iter()
        .enumerate()
        .map(|(u, vs)| vs.iter().filter(|&&v| accepted.contains(Edge::new(u as Node, v))).count())
        .sum();
    let mut r = rng::rng(seed);
    let (mut far_sampled, mut far_accepted) = (0, 0);
    for _ in 0..far_samples.saturating_mul(50) {
        if far_sampled == far_samples {
            break;
        }
        let (u, v) = (r.random_range(0..n as Node), r.random_range(0..n as Node));
        if u == v || ensemble.categories.iter().any(|p| p.dist(u, v) < pruned_r) {
            continue;
        }
        far_sampled += 1;
        far_accepted += accepted.contains(Edge::new(u, v)) as usize;
    }
    SimpleTestCheck { near_pairs, near_accepted, far_sampled, far_accepted }
}
