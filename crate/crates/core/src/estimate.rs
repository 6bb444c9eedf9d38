//! Symmetric distance oracles with a common query interface.

use std::collections::BTreeMap;

use crate::amoeba::DistanceLabels;
use crate::error::{invalid, Result};
use crate::graph::{Adjacency, Edge, Node, UNREACHED};
use crate::metric::PointSet;

/// A symmetric distance estimate over nodes `0..n`.
///
/// Unavailable values read as `f64::INFINITY`.
#[derive(Clone, Debug)]
pub enum DistanceEstimate {
    /// Row-major `n × n` matrix.
    Dense { n: usize, values: Vec<f64> },
    /// True positions, distances divided by `scale`.
    Metric { points: PointSet, scale: f64 },
    /// Hop distance in a spanner times `scale`.
    Spanner { adj: Adjacency, scale: f64 },
    /// Beacon labels, hop sums times `scale`.
    Labels { labels: DistanceLabels, scale: f64 },
    /// Selected pairs overridden on top of another estimate.
    Overlay { base: Box<DistanceEstimate>, values: Vec<BTreeMap<Node, f64>> },
}

impl DistanceEstimate {
    pub fn dense(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return invalid("dense estimate needs n² values");
        }
        Ok(DistanceEstimate::Dense { n, values })
    }

    /// Materializes any estimate as a matrix.
    pub fn to_dense(&self) -> Self {
        let n = self.n();
        let values = (0..n as Node).flat_map(|u| self.row(u)).collect();
        DistanceEstimate::Dense { n, values }
    }

    pub fn overlay<I>(base: DistanceEstimate, pairs: I) -> Self
    where
        I: IntoIterator<Item = (Edge, f64)>,
    {
        let mut values = vec![BTreeMap::new(); base.n()];
        for (e, x) in pairs {
            values[e.lo as usize].insert(e.hi, x);
            values[e.hi as usize].insert(e.lo, x);
        }
        DistanceEstimate::Overlay { base: Box::new(base), values }
    }

    pub fn n(&self) -> usize {
        match self {
            DistanceEstimate::Dense { n, .. } => *n,
            DistanceEstimate::Metric { points, .. } => points.n(),
            DistanceEstimate::Spanner { adj, .. } => adj.n(),
            DistanceEstimate::Labels { labels, .. } => labels.n(),
            DistanceEstimate::Overlay { base, .. } => base.n(),
        }
    }

    pub fn get(&self, u: Node, v: Node) -> f64 {
        if u == v {
            return 0.0;
        }
        match self {
            DistanceEstimate::Dense { n, values } => values[u as usize * n + v as usize],
            DistanceEstimate::Metric { points, scale } => points.dist(u, v) / scale,
            DistanceEstimate::Spanner { adj, scale } => {
                adj.hop_distance(u, v).map_or(f64::INFINITY, |h| h as f64 * scale)
            }
            DistanceEstimate::Labels { labels, scale } => {
                labels.query(u, v).map_or(f64::INFINITY, |h| h as f64 * scale)
            }
            DistanceEstimate::Overlay { base, values } => {
                values[u as usize].get(&v).copied().unwrap_or_else(|| base.get(u, v))
            }
        }
    }

    /// Like [`get`](Self::get) but reports a missing value as an error.
    pub fn try_get(&self, u: Node, v: Node) -> Result<f64> {
        let x = self.get(u, v);
        if x.is_finite() {
            Ok(x)
        } else {
            Err(crate::Error::EstimateUnavailable {
                u,
                v,
                reason: "no finite estimate".into(),
            })
        }
    }

    /// Estimates from `u` to every node.
    pub fn row(&self, u: Node) -> Vec<f64> {
        let n = self.n();
        let mut row = match self {
            DistanceEstimate::Dense { values, .. } => {
                values[u as usize * n..(u as usize + 1) * n].to_vec()
            }
            DistanceEstimate::Metric { points, scale } => {
                points.row(u).into_iter().map(|d| d / scale).collect()
            }
            DistanceEstimate::Spanner { adj, scale } => adj
                .bfs(u)
                .into_iter()
                .map(|h| if h == UNREACHED { f64::INFINITY } else { h as f64 * scale })
                .collect(),
            DistanceEstimate::Labels { .. } => (0..n as Node).map(|v| self.get(u, v)).collect(),
            DistanceEstimate::Overlay { base, values } => {
                let mut row = base.row(u);
                for (&v, &x) in &values[u as usize] {
                    row[v as usize] = x;
                }
                row
            }
        };
        row[u as usize] = 0.0;
        row
    }
}

/// The `kappa` nodes with the smallest estimate from `u`, ties broken by
/// ascending id, returned nearest first. `u` itself counts at distance 0.
pub fn knn_ball(est: &DistanceEstimate, u: Node, kappa: usize) -> Result<Vec<Node>> {
    let n = est.n();
    if kappa == 0 || kappa > n {
        return invalid(format!("ball size {kappa} outside [1, {n}]"));
    }
    Ok(knn_from_row(&est.row(u), kappa))
}

/// Nearest `kappa` entries of a distance row.
pub fn knn_from_row(row: &[f64], kappa: usize) -> Vec<Node> {
    let key = |&v: &Node| (row[v as usize], v);
    let cmp = |a: &Node, b: &Node| {
        let (x, i) = key(a);
        let (y, j) = key(b);
        x.total_cmp(&y).then(i.cmp(&j))
    };
    let mut ids: Vec<Node> = (0..row.len() as Node).collect();
    if kappa < ids.len() {
        ids.select_nth_unstable_by(kappa - 1, cmp);
        ids.truncate(kappa);
    }
    ids.sort_unstable_by(cmp);
    ids
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeSet;
    use crate::metric::{generate_points, TorusSpace};

    fn line_dense() -> DistanceEstimate {
        // est(0,·) = (0, 2, 2, 3)
        let v = vec![
            0.0, 2.0, 2.0, 3.0, //
            2.0, 0.0, 1.0, 1.0, //
            2.0, 1.0, 0.0, 1.0, //
            3.0, 1.0, 1.0, 0.0,
        ];
        DistanceEstimate::dense(4, v).unwrap()
    }

    #[test]
    fn knn_examples() {
        let e = line_dense();
        assert_eq!(knn_ball(&e, 0, 1).unwrap(), vec![0]);
        assert_eq!(knn_ball(&e, 0, 2).unwrap(), vec![0, 1]);
        let mut all = knn_ball(&e, 0, 4).unwrap();
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2, 3]);
        assert!(knn_ball(&e, 0, 0).is_err());
        assert!(knn_ball(&e, 0, 5).is_err());
        assert_eq!(knn_ball(&e, 0, 3).unwrap(), knn_ball(&e, 0, 3).unwrap());
    }

    #[test]
    fn knn_equals_true_ball_on_grid() {
        let s = TorusSpace::euclidean(2, 16.0).unwrap();
        let g = generate_points(s, 256, 0.0, 0).unwrap();
        let est = DistanceEstimate::Metric { points: g.clone(), scale: 1.0 };
        for r in [1.0, 2.0, 2.5, 4.0] {
            let ball = g.ball(37, r);
            let mut knn = knn_ball(&est, 37, ball.len()).unwrap();
            knn.sort_unstable();
            assert_eq!(knn, ball);
        }
    }

    #[test]
    fn overlay_and_spanner() {
        let path = EdgeSet::from_pairs(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let sp = DistanceEstimate::Spanner { adj: Adjacency::new(&path), scale: 2.0 };
        assert_eq!(sp.get(0, 3), 6.0);
        assert_eq!(sp.row(1), vec![2.0, 0.0, 2.0, 4.0]);
        let ov = DistanceEstimate::overlay(sp, [(Edge::new(3, 0), 1.5)]);
        assert_eq!(ov.get(0, 3), 1.5);
        assert_eq!(ov.get(3, 0), 1.5);
        assert_eq!(ov.row(3), vec![1.5, 4.0, 2.0, 0.0]);
        let d = ov.to_dense();
        assert_eq!(d.get(0, 3), 1.5);
        assert!(d.try_get(1, 2).is_ok());
        let cut = EdgeSet::from_pairs(3, [(0, 1)]).unwrap();
        let sp = DistanceEstimate::Spanner { adj: Adjacency::new(&cut), scale: 1.0 };
        assert!(sp.try_get(0, 2).is_err());
    }
}
