use std::cmp::Reverse;
use std::collections::BinaryHeap;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{two_ball_from_counts, two_ball_kappa, BallCounter, NormalizedEstimate};
use crate::error::{invalid, Error, Result};
use crate::estimate::{knn_from_row, DistanceEstimate};
use crate::graph::{Adjacency, Edge, Node};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtParams {
    /// Pairs estimated at or below this are refined directly.
    pub r_scale: f64,
    /// Upper bound on the expansion of the initial estimate.
    pub expansion_bound: f64,
}

impl ExtParams {
    pub fn new(r_scale: f64, expansion_bound: f64) -> Result<Self> {
        if !(r_scale > 0.0) || !(expansion_bound >= 1.0) {
            return invalid("need r_scale > 0 and expansion_bound >= 1");
        }
        Ok(ExtParams { r_scale, expansion_bound })
    }
}

/// Largest usable direct scale, `(n / ln n)^((2d+2)/(2d²+3d))`.
pub fn hat_scale(n: usize, dim: usize) -> f64 {
    let (n, d) = (n as f64, dim as f64);
    (n / n.ln()).powf((2.0 * d + 2.0) / (2.0 * d * d + 3.0 * d))
}

#[derive(Copy, Clone, PartialEq, PartialOrd)]
struct Dist(f64);
impl Eq for Dist {}
impl Ord for Dist {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0)
    }
}

/// Refined short pairs plus shortest paths over long ones.
#[derive(Clone, Debug)]
pub struct ExtendedTwoBall {
    n: usize,
    r_scale: f64,
    long_cut: f64,
    /// Refined short pairs per node, sorted by neighbour.
    short: Vec<Vec<(Node, f64)>>,
    /// Subset of `short` with value at least `long_cut`.
    long: Vec<Vec<(Node, f64)>>,
    pub fallbacks: usize,
}

impl ExtendedTwoBall {
    /// Builds the path structure from already refined short pairs.
    pub fn from_refined<I>(n: usize, r_scale: f64, expansion_bound: f64, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Edge, f64)>,
    {
        let params = ExtParams::new(r_scale, expansion_bound)?;
        let long_cut = params.r_scale / (2.0 * params.expansion_bound);
        let mut short = vec![Vec::new(); n];
        for (e, x) in pairs {
            if e.hi as usize >= n {
                return invalid("pair outside 0..n");
            }
            short[e.lo as usize].push((e.hi, x));
            short[e.hi as usize].push((e.lo, x));
        }
        short.iter_mut().for_each(|r| r.sort_unstable_by_key(|p| p.0));
        let long = short
            .iter()
            .map(|r| r.iter().copied().filter(|&(_, x)| x >= long_cut).collect())
            .collect();
        Ok(ExtendedTwoBall { n, r_scale, long_cut, short, long, fallbacks: 0 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r_scale(&self) -> f64 {
        self.r_scale
    }

    /// Edge length below which short pairs are not used mid-path.
    pub fn long_cut(&self) -> f64 {
        self.long_cut
    }

    fn direct(&self, s: Node, t: Node) -> Option<f64> {
        let r = &self.short[s as usize];
        r.binary_search_by_key(&t, |p| p.0).ok().map(|i| r[i].1)
    }

    /// Path lengths into `t`: the hop at `t` may be any short pair, every
    /// other hop must be long. Short pairs keep their direct value.
    pub fn paths_to(&self, t: Node) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.n];
        let mut heap = BinaryHeap::new();
        dist[t as usize] = 0.0;
        for &(v, x) in &self.short[t as usize] {
            dist[v as usize] = x;
            heap.push(Reverse((Dist(x), v)));
        }
        while let Some(Reverse((Dist(d), u))) = heap.pop() {
            if d > dist[u as usize] {
                continue;
            }
            for &(v, x) in &self.long[u as usize] {
                let nd = d + x;
                if nd < dist[v as usize] {
                    dist[v as usize] = nd;
                    heap.push(Reverse((Dist(nd), v)));
                }
            }
        }
        for &(v, x) in &self.short[t as usize] {
            dist[v as usize] = x;
        }
        dist
    }

    /// Refined direct value for short pairs, otherwise the shorter of the
    /// path lengths into either endpoint.
    pub fn estimate(&self, s: Node, t: Node) -> Result<f64> {
        if s == t {
            return Ok(0.0);
        }
        if let Some(x) = self.direct(s, t) {
            return Ok(x);
        }
        let x = self.paths_to(t)[s as usize].min(self.paths_to(s)[t as usize]);
        if x.is_finite() {
            Ok(x)
        } else {
            Err(Error::EstimateUnavailable { u: s, v: t, reason: "no path over long pairs".into() })
        }
    }

    /// Every pair, materialized. Missing paths read as infinite.
    pub fn to_estimate(&self) -> DistanceEstimate {
        let n = self.n;
        let mut values: Vec<f64> = (0..n as Node).into_par_iter().flat_map_iter(|t| self.paths_to(t)).collect();
        for a in 0..n {
            for b in a + 1..n {
                let x = values[a * n + b].min(values[b * n + a]);
                values[a * n + b] = x;
                values[b * n + a] = x;
            }
        }
        DistanceEstimate::Dense { n, values }
    }
}

/// Two-ball refinement of every pair within the direct scale, then shortest
/// paths over the long refined pairs for the rest.
///
/// The direct scale is `r_scale` capped at [`hat_scale`].
pub fn extended_two_ball(
    union: &Adjacency,
    init: &DistanceEstimate,
    params: &ExtParams,
    dim: usize,
) -> Result<ExtendedTwoBall> {
    let params = ExtParams::new(params.r_scale, params.expansion_bound)?;
    let n = init.n();
    if union.n() != n {
        return invalid("graph and estimate disagree on n");
    }
    let r = params.r_scale.min(hat_scale(n, dim));
    if r < params.r_scale {
        info!("direct scale capped from {} to {r}", params.r_scale);
    }
    let kmax = two_ball_kappa(r, dim, n);
    // nearest lists long enough for every direct pair
    let lists: Vec<(Vec<Node>, Vec<(Node, f64)>)> = (0..n as Node)
        .into_par_iter()
        .map(|s| {
            let row = init.row(s);
            let near = knn_from_row(&row, kmax);
            let short = row
                .iter()
                .enumerate()
                .filter(|&(v, &x)| v as Node > s && x <= r)
                .map(|(v, &x)| (v as Node, x))
                .collect();
            (near, short)
        })
        .collect();
    let refined: Vec<(Edge, f64, bool)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|s| lists[s].1.iter().map(move |&(t, x)| (s as Node, t, x)))
        .map_init(
            || BallCounter::new(n),
            |counter, (s, t, x)| {
                let kappa = two_ball_kappa(x, dim, n);
                let bs = &lists[s as usize].0[..kappa];
                let bt = &lists[t as usize].0[..kappa];
                let c = counter.count(union, s, bs, t, bt);
                if c.edges == 0 {
                    (Edge::new(s, t), x, true)
                } else {
                    (Edge::new(s, t), two_ball_from_counts(kappa, c.edges, dim), false)
                }
            },
        )
        .collect();
    let fallbacks = refined.iter().filter(|p| p.2).count();
    info!("refined {} direct pairs, {fallbacks} kept their initial value", refined.len());
    let mut out =
        ExtendedTwoBall::from_refined(n, r, params.expansion_bound, refined.into_iter().map(|p| (p.0, p.1)))?;
    out.fallbacks = fallbacks;
    Ok(out)
}

impl From<&ExtendedTwoBall> for NormalizedEstimate {
    fn from(e: &ExtendedTwoBall) -> Self {
        NormalizedEstimate { estimate: e.to_estimate(), normalizer: 1.0 }
    }
}
