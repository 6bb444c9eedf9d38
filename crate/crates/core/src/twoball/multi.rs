use log::info;

use super::{recursive_two_ball, ExtendedTwoBall, NormalizedEstimate, RecursiveOutput, RecursiveParams};
use crate::error::{invalid, Result};
use crate::estimate::DistanceEstimate;
use crate::graph::{Adjacency, Edge, Node};

/// Recursive refinement up to `n^(1/(d+1))`, shortest paths beyond.
#[derive(Clone, Debug)]
pub struct MultiEstimate {
    pub recursive: RecursiveOutput,
    /// Present when more than one category shares the graph.
    pub extended: Option<ExtendedTwoBall>,
    /// Initial estimates above this take the path branch.
    pub boundary: f64,
    init: DistanceEstimate,
}

impl MultiEstimate {
    pub fn get(&self, s: Node, t: Node) -> Result<f64> {
        match &self.extended {
            Some(ext) if self.init.get(s, t) > self.boundary => ext.estimate(s, t),
            _ => Ok(self.recursive.estimate.get(s, t)),
        }
    }

    /// Every pair, materialized.
    pub fn to_normalized(&self) -> NormalizedEstimate {
        let normalizer = self.recursive.estimate.normalizer;
        let Some(ext) = &self.extended else {
            return self.recursive.estimate.clone();
        };
        let n = self.init.n();
        let paths = ext.to_estimate();
        let mut values = Vec::with_capacity(n * n);
        for s in 0..n as Node {
            let direct = self.recursive.estimate.estimate.row(s);
            let init = self.init.row(s);
            values.extend((0..n).map(|t| if init[t] > self.boundary { paths.get(s, t as Node) } else { direct[t] }));
        }
        NormalizedEstimate { estimate: DistanceEstimate::Dense { n, values }, normalizer }
    }
}

/// Multi-category recursive refinement. With one category this is exactly
/// [`recursive_two_ball`].
pub fn multi_recursive_two_ball(
    union: &Adjacency,
    init: &DistanceEstimate,
    params: &RecursiveParams,
    categories: usize,
    expansion_bound: f64,
    normalizer: f64,
) -> Result<MultiEstimate> {
    if categories == 0 {
        return invalid("need at least one category");
    }
    let n = init.n();
    let boundary = (n as f64).powf(1.0 / (params.dim as f64 + 1.0));
    if categories == 1 {
        return Ok(MultiEstimate {
            recursive: recursive_two_ball(union, init, params, normalizer)?,
            extended: None,
            boundary,
            init: init.clone(),
        });
    }
    let capped = RecursiveParams { x_max: params.x_max.min(boundary), ..*params };
    let recursive = recursive_two_ball(union, init, &capped, normalizer)?;
    let mut short = Vec::new();
    for s in 0..n as Node {
        let row = init.row(s);
        for t in s + 1..n as Node {
            if row[t as usize] <= boundary {
                short.push((Edge::new(s, t), recursive.estimate.get(s, t)));
            }
        }
    }
    info!("{} pairs within the recursive scale {boundary}", short.len());
    let extended = ExtendedTwoBall::from_refined(n, boundary, expansion_bound, short)?;
    Ok(MultiEstimate { recursive, extended: Some(extended), boundary, init: init.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{sample_single_category, SwgParams};
    use crate::metric::{generate_points, TorusSpace};
    use crate::twoball::RecursiveMode;

    fn instance() -> (Adjacency, DistanceEstimate, RecursiveParams) {
        let s = TorusSpace::euclidean(3, 6.0).unwrap();
        let pts = generate_points(s, 216, 0.5, 5).unwrap();
        let e = sample_single_category(&pts, &SwgParams::new(1.0, 3.0, 3).unwrap(), 5);
        let p = RecursiveParams {
            dim: 3,
            c_pd: 4.0,
            c_dim: 2.5,
            floor: 1.0,
            x_max: f64::INFINITY,
            mode: RecursiveMode::Sequential,
        };
        (Adjacency::new(&e), DistanceEstimate::Metric { points: pts, scale: 1.0 }, p)
    }

    #[test]
    fn one_category_is_plain_recursive() {
        let (g, init, p) = instance();
        let m = multi_recursive_two_ball(&g, &init, &p, 1, 1.0, 1.0).unwrap();
        let r = recursive_two_ball(&g, &init, &p, 1.0).unwrap();
        assert!(m.extended.is_none());
        for s in 0..216 {
            for t in 0..216 {
                assert_eq!(m.get(s, t).unwrap(), r.estimate.get(s, t));
            }
        }
    }

    #[test]
    fn routing_boundary() {
        let (g, init, p) = instance();
        let m = multi_recursive_two_ball(&g, &init, &p, 2, 1.0, 1.0).unwrap();
        let ext = m.extended.as_ref().unwrap();
        assert!((m.boundary - 216f64.powf(0.25)).abs() < 1e-12);
        let dense = m.to_normalized();
        let mut routed = 0;
        for s in 0..216 {
            for t in s + 1..216 {
                let x = init.get(s, t);
                let got = dense.get(s, t);
                if x > m.boundary {
                    routed += 1;
                    let want = ext.estimate(s, t).unwrap_or(f64::INFINITY);
                    assert!(got == want, "{s} {t}");
                } else {
                    assert_eq!(got, m.recursive.estimate.get(s, t));
                }
            }
        }
        assert!(routed > 0);
    }
}
