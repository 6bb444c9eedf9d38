use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::graph::{Edge, EdgeSet, Node};
use crate::metric::PointSet;
use crate::rng;

/// Degree target and normalizer of one small-world category.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwgParams {
    pub k: f64,
    pub c_sw: f64,
    pub dim: usize,
}

impl SwgParams {
    pub fn new(k: f64, c_sw: f64, dim: usize) -> Result<SwgParams> {
        if !(k >= 0.0) || !(c_sw > 0.0) || dim == 0 {
            return invalid(format!("bad small-world parameters k={k}, c_sw={c_sw}, dim={dim}"));
        }
        Ok(SwgParams { k, c_sw, dim })
    }

    /// `C·k`, the product that sets every radius.
    pub fn ck(&self) -> f64 {
        self.c_sw * self.k
    }

    /// Distance up to which edges are certain: `(C·k)^(1/dim)`.
    pub fn local_radius(&self) -> f64 {
        self.ck().powf(1.0 / self.dim as f64)
    }
}

/// Edge probability as a function of distance.
pub trait EdgeProbability: Sync {
    fn prob(&self, r: f64) -> f64;
}

/// `f(r) = min(1, C·k·r^−dim)`.
#[derive(Clone, Copy, Debug)]
pub struct SmallWorld {
    pub ck: f64,
    pub dim: i32,
}

impl From<SwgParams> for SmallWorld {
    fn from(p: SwgParams) -> Self {
        SmallWorld { ck: p.ck(), dim: p.dim as i32 }
    }
}

impl EdgeProbability for SmallWorld {
    fn prob(&self, r: f64) -> f64 {
        if self.ck <= 0.0 {
            0.0
        } else if r <= 0.0 {
            1.0
        } else {
            (self.ck * r.powi(-self.dim)).min(1.0)
        }
    }
}

impl<F: Fn(f64) -> f64 + Sync> EdgeProbability for F {
    fn prob(&self, r: f64) -> f64 {
        self(r)
    }
}

/// Includes each pair independently with the small-world probability.
pub fn sample_single_category(points: &PointSet, params: &SwgParams, seed: u64) -> EdgeSet {
    sample_with(points, &SmallWorld::from(*params), seed)
}

/// Includes each pair `(u, v)` independently with probability `f(d(u, v))`.
/// Row `u` draws from its own derived stream, so the output does not depend
/// on the worker count.
pub fn sample_with(points: &PointSet, f: &dyn EdgeProbability, seed: u64) -> EdgeSet {
    let n = points.n() as Node;
    let rows: Vec<Vec<Edge>> = (0..n)
        .into_par_iter()
        .map(|u| {
            let mut r = rng::sub_rng(seed, u as u64);
            let pu = points.point(u);
            let mut out = Vec::new();
            for v in u + 1..n {
                let p = f.prob(points.space.dist(pu, points.point(v)));
                if p >= 1.0 || (p > 0.0 && r.random::<f64>() < p) {
                    out.push(Edge { lo: u, hi: v });
                }
            }
            out
        })
        .collect();
    EdgeSet::from_edges(n as usize, rows.concat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::calibrate_normalizer;
    use crate::metric::{generate_points, TorusSpace};

    fn grid(side: usize) -> PointSet {
        let s = TorusSpace::euclidean(2, side as f64).unwrap();
        generate_points(s, side * side, 0.0, 0).unwrap()
    }

    #[test]
    fn zero_degree_is_empty() {
        let g = grid(8);
        let p = SwgParams::new(0.0, 0.3, 2).unwrap();
        assert!(sample_single_category(&g, &p, 1).is_empty());
    }

    #[test]
    fn saturated_pairs_always_present() {
        let g = grid(10);
        let p = SwgParams::new(4.0, 0.5, 2).unwrap(); // radius sqrt(2)
        let certain: Vec<Edge> = (0..100u32)
            .flat_map(|u| (u + 1..100).map(move |v| Edge::new(u, v)))
            .filter(|e| g.dist(e.lo, e.hi) <= p.local_radius())
            .collect();
        assert!(!certain.is_empty());
        for s in 0..100 {
            let e = sample_single_category(&g, &p, s);
            assert!(certain.iter().all(|c| e.contains(*c)));
        }
    }

    #[test]
    fn pair_frequency_matches_probability() {
        // two points at distance 2 in d=1 with C·k = 0.5: f = 0.25
        let s = TorusSpace::euclidean(1, 10.0).unwrap();
        let pts = PointSet::new(s, vec![0.0, 2.0], 1).unwrap();
        let p = SwgParams::new(1.0, 0.5, 1).unwrap();
        let hits = (0..10_000).filter(|&t| !sample_single_category(&pts, &p, t).is_empty()).count();
        let freq = hits as f64 / 1e4;
        assert!((freq - 0.25).abs() <= 0.013, "{freq}");
    }

    #[test]
    fn calibrated_unit_degree() {
        let g = grid(32);
        let c = calibrate_normalizer(&g).unwrap();
        let p = SwgParams::new(1.0, c, 2).unwrap();
        let mean: f64 = (0..100)
            .map(|s| 2.0 * sample_single_category(&g, &p, s).len() as f64 / 1024.0)
            .sum::<f64>()
            / 100.0;
        assert!((mean - 1.0).abs() < 0.1, "{mean}");
    }

    #[test]
    fn per_bucket_frequencies() {
        let g = grid(10);
        let p = SwgParams::new(1.0, 1.0, 2).unwrap();
        let f = SmallWorld::from(p);
        // bucket pairs by exact squared distance; compare hit rates to f
        let mut buckets: std::collections::BTreeMap<u64, (f64, Vec<Edge>)> = Default::default();
        for u in 0..100u32 {
            for v in u + 1..100 {
                let d = g.dist(u, v);
                let key = (d * d).round() as u64;
                buckets.entry(key).or_insert((f.prob(d), Vec::new())).1.push(Edge::new(u, v));
            }
        }
        let reps = 1_000u64;
        let mut hits: std::collections::BTreeMap<u64, usize> = Default::default();
        for s in 0..reps {
            let e = sample_single_category(&g, &p, s);
            for (k, (_, pairs)) in &buckets {
                *hits.entry(*k).or_default() += pairs.iter().filter(|x| e.contains(**x)).count();
            }
        }
        for (k, (prob, pairs)) in &buckets {
            let trials = (pairs.len() as u64 * reps) as f64;
            let freq = hits[k] as f64 / trials;
            let sigma = (prob * (1.0 - prob) / trials).sqrt();
            assert!((freq - prob).abs() <= 3.0 * sigma + 1e-12, "bucket {k}: {freq} vs {prob}");
        }
    }

    #[test]
    fn custom_probability() {
        let g = grid(6);
        let none = sample_with(&g, &|_r: f64| 0.0, 1);
        let all = sample_with(&g, &|_r: f64| 1.0, 1);
        assert!(none.is_empty());
        assert_eq!(all.len(), 36 * 35 / 2);
    }
}
