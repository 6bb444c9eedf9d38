//! Distance refinement by counting union edges between two node balls.

mod dimconst;
mod extended;
mod multi;
mod recursive;

pub use dimconst::{calibrate_dimconst, DimConst};
pub use extended::{extended_two_ball, hat_scale, ExtParams, ExtendedTwoBall};
pub use multi::{multi_recursive_two_ball, MultiEstimate};
pub use recursive::{recursive_two_ball, RecursiveMode, RecursiveOutput, RecursiveParams};

use crate::error::{invalid, Error, Result};
use crate::estimate::{knn_ball, DistanceEstimate};
use crate::graph::{Adjacency, Node};

/// A refined estimate in normalized units, with the normalizer `(C·k)^(1/d)`.
#[derive(Clone, Debug)]
pub struct NormalizedEstimate {
    pub estimate: DistanceEstimate,
    pub normalizer: f64,
}

impl NormalizedEstimate {
    pub fn get(&self, u: Node, v: Node) -> f64 {
        self.estimate.get(u, v)
    }
}

/// Exponent `d(d+2)/(2d+2)` turning a distance into a ball size.
pub fn kappa_exponent(dim: usize) -> f64 {
    let d = dim as f64;
    d * (d + 2.0) / (2.0 * d + 2.0)
}

/// `round(x^(d(d+2)/(2d+2)))` clamped to `[1, n]`.
pub fn two_ball_kappa(x: f64, dim: usize, n: usize) -> usize {
    clamp_kappa(x.powf(kappa_exponent(dim)), n)
}

pub(crate) fn clamp_kappa(raw: f64, n: usize) -> usize {
    if raw.is_nan() {
        return 1;
    }
    (raw.round().max(1.0) as usize).min(n)
}

/// `(κ² / N)^(1/d)`.
pub fn two_ball_from_counts(kappa: usize, count: usize, dim: usize) -> f64 {
    ((kappa as f64).powi(2) / count as f64).powf(1.0 / dim as f64)
}

/// Edge counter between two balls, reusable across queries.
#[derive(Clone, Debug)]
pub struct BallCounter {
    in_s: Vec<u32>,
    in_t: Vec<u32>,
    stamp: u32,
}

/// Result of counting edges between two balls.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BallCount {
    pub edges: usize,
    /// Nodes that were in both balls before disjointifying.
    pub shared: usize,
}

impl BallCounter {
    pub fn new(n: usize) -> BallCounter {
        BallCounter { in_s: vec![0; n], in_t: vec![0; n], stamp: 0 }
    }

    /// Counts union edges with one end in each ball. Nodes in both balls are
    /// dropped from the ball of the larger-id center first.
    pub fn count(&mut self, union: &Adjacency, s: Node, bs: &[Node], t: Node, bt: &[Node]) -> BallCount {
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.in_s.iter_mut().for_each(|x| *x = 0);
            self.in_t.iter_mut().for_each(|x| *x = 0);
            self.stamp = 1;
        }
        let st = self.stamp;
        bs.iter().for_each(|&a| self.in_s[a as usize] = st);
        bt.iter().for_each(|&b| self.in_t[b as usize] = st);
        let shared = bs.iter().filter(|&&a| self.in_t[a as usize] == st).count();
        let s_loses = s > t;
        let in_s = |a: Node, me: &Self| {
            me.in_s[a as usize] == st && !(s_loses && me.in_t[a as usize] == st)
        };
        let mut edges = 0;
        for &b in bt {
            if !s_loses && self.in_s[b as usize] == st {
                continue; // shared node kept on the s side
            }
            edges += union.neighbors(b).iter().filter(|&&a| in_s(a, self)).count();
        }
        BallCount { edges, shared }
    }
}

/// Outcome of one two-ball query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoBallOutcome {
    pub value: f64,
    pub kappa: usize,
    pub count: BallCount,
}

/// Basic two-ball estimate of the normalized distance between `s` and `t`.
///
/// Fails with [`Error::EstimateUnavailable`] when no edge joins the balls;
/// callers fall back to the initial estimate.
pub fn two_ball_estimate(
    union: &Adjacency,
    est: &DistanceEstimate,
    s: Node,
    t: Node,
    dim: usize,
) -> Result<TwoBallOutcome> {
    if s == t {
        return invalid("two-ball test needs distinct endpoints");
    }
    let x = est.try_get(s, t)?;
    let n = est.n();
    let kappa = two_ball_kappa(x, dim, n);
    let bs = knn_ball(est, s, kappa)?;
    let bt = knn_ball(est, t, kappa)?;
    let count = BallCounter::new(n).count(union, s, &bs, t, &bt);
    if count.edges == 0 {
        return Err(Error::EstimateUnavailable { u: s, v: t, reason: "no edges between the balls".into() });
    }
    Ok(TwoBallOutcome { value: two_ball_from_counts(kappa, count.edges, dim), kappa, count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeSet;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn closed_form_examples() {
        assert_eq!(two_ball_from_counts(100, 4, 2), 50.0);
        assert_eq!(two_ball_kappa(64.0, 2, 10_000), 256);
        assert_eq!(two_ball_kappa(64.0, 2, 100), 100);
        assert_eq!(two_ball_kappa(0.0, 2, 100), 1);
    }

    #[test]
    fn counter_disjointifies() {
        // s=0 ball {0,1,2}, t=5 ball {2,4,5}; node 2 is shared and stays with s
        let union = Adjacency::new(&EdgeSet::from_pairs(6, [(0, 4), (1, 2), (2, 5), (1, 5)]).unwrap());
        let mut c = BallCounter::new(6);
        let got = c.count(&union, 0, &[0, 1, 2], 5, &[2, 4, 5]);
        assert_eq!(got, BallCount { edges: 3, shared: 1 });
        // swapping the roles keeps node 2 with center 0
        let got = c.count(&union, 5, &[2, 4, 5], 0, &[0, 1, 2]);
        assert_eq!(got, BallCount { edges: 3, shared: 1 });
    }

    #[test]
    fn basic_estimate_on_dense_input() {
        let n = 12;
        let mut v = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                v[a * n + b] = (a as f64 - b as f64).abs();
            }
        }
        let est = DistanceEstimate::dense(n, v).unwrap();
        let union = Adjacency::new(&EdgeSet::from_pairs(n, [(0, 6), (5, 6), (1, 4), (6, 7)]).unwrap());
        // x=4, d=2: κ = round(4^(4/3)) = 6; balls {0..5} and {4,3,5,2,6,1}
        // overlap in 1..5, which stay with center 0, leaving {6} on the t side
        let out = two_ball_estimate(&union, &est, 0, 4, 2).unwrap();
        assert_eq!(out.kappa, 6);
        assert_eq!(out.count, BallCount { edges: 2, shared: 5 });
        assert_eq!(out.value, 18f64.sqrt());
        let none = Adjacency::new(&EdgeSet::empty(n));
        assert!(matches!(two_ball_estimate(&none, &est, 0, 4, 2), Err(Error::EstimateUnavailable { .. })));
        assert!(two_ball_estimate(&union, &est, 2, 2, 2).is_err());
    }

    proptest! {
        #[test]
        fn inversion_identity(kappa in 1usize..10_000, count in 1usize..100_000, dim in 1usize..5) {
            let x = two_ball_from_counts(kappa, count, dim);
            let back = x.powi(dim as i32) * count as f64;
            prop_assert!((back - (kappa * kappa) as f64).abs() <= 1e-9 * (kappa * kappa) as f64);
        }

        #[test]
        fn count_symmetry(seed in 0u64..500) {
            let mut r = rng::rng(seed);
            let n = 40;
            let pairs: Vec<(u32, u32)> = (0..120)
                .map(|_| (r.random_range(0..n), r.random_range(0..n)))
                .filter(|(a, b)| a != b)
                .collect();
            let union = Adjacency::new(&EdgeSet::from_pairs(n as usize, pairs).unwrap());
            let mut bs: Vec<u32> = (0..10).map(|_| r.random_range(0..n)).collect();
            let mut bt: Vec<u32> = (0..10).map(|_| r.random_range(0..n)).collect();
            bs.sort_unstable(); bs.dedup();
            bt.sort_unstable(); bt.dedup();
            let (s, t) = (bs[0], bt[0]);
            prop_assume!(s != t);
            let mut c = BallCounter::new(n as usize);
            let a = c.count(&union, s, &bs, t, &bt);
            let b = c.count(&union, t, &bt, s, &bs);
            prop_assert_eq!(a, b);
        }
    }
}
