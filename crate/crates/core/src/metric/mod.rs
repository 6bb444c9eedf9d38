//! Toroidal host metrics and the point sets living in them.

mod disjoint;
mod chernoff;

pub use chernoff::{permutation_chernoff_check, ChernoffCell, ChernoffReport};
pub use disjoint::{
    check_global_cd, check_lcd, pairs_within, CategoryEnsemble, CdViolation, GlobalCdParams,
};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::graph::Node;
use crate::rng;

/// A `dim`-dimensional torus of side `side` with wrap-around `ℓp` distance.
///
/// `norm_p = f64::INFINITY` selects the max-norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusSpace {
    pub dim: usize,
    pub side: f64,
    pub norm_p: f64,
}

impl TorusSpace {
    pub fn new(dim: usize, side: f64, norm_p: f64) -> Result<TorusSpace> {
        if dim == 0 {
            return invalid("torus dimension must be at least 1");
        }
        if !(side > 0.0 && side.is_finite()) {
            return invalid(format!("torus side must be positive, got {side}"));
        }
        if !(norm_p >= 1.0) {
            return invalid(format!("norm exponent must be >= 1, got {norm_p}"));
        }
        Ok(TorusSpace { dim, side, norm_p })
    }

    /// Euclidean torus of the given side.
    pub fn euclidean(dim: usize, side: f64) -> Result<TorusSpace> {
        Self::new(dim, side, 2.0)
    }

    /// Distance without shape checks; callers guarantee `a.len() == b.len() == dim`.
    #[inline]
    pub fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        let wrap = |x: f64, y: f64| {
            let d = (x - y).abs();
            d.min(self.side - d)
        };
        if self.norm_p == 2.0 {
            a.iter().zip(b).map(|(&x, &y)| wrap(x, y).powi(2)).sum::<f64>().sqrt()
        } else if self.norm_p == 1.0 {
            a.iter().zip(b).map(|(&x, &y)| wrap(x, y)).sum()
        } else if self.norm_p.is_infinite() {
            a.iter().zip(b).map(|(&x, &y)| wrap(x, y)).fold(0.0, f64::max)
        } else {
            let p = self.norm_p;
            a.iter().zip(b).map(|(&x, &y)| wrap(x, y).powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }

    /// Largest distance between two points of the torus.
    pub fn diameter(&self) -> f64 {
        let half = self.side / 2.0;
        if self.norm_p.is_infinite() {
            half
        } else {
            half * (self.dim as f64).powf(1.0 / self.norm_p)
        }
    }

    /// Volume of the unit ball of this norm.
    pub fn unit_ball_volume(&self) -> f64 {
        let d = self.dim as f64;
        let p = self.norm_p;
        if p.is_infinite() {
            return 2f64.powf(d);
        }
        // (2 Γ(1 + 1/p))^d / Γ(1 + d/p)
        (2.0 * gamma(1.0 + 1.0 / p)).powf(d) / gamma(1.0 + d / p)
    }
}

/// Lanczos approximation, plenty for ball volumes.
fn gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let t = x + 7.5;
        let mut a = G[0];
        for (i, g) in G.iter().enumerate().skip(1) {
            a += g / (x + i as f64);
        }
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

/// Checked distance between two points of `space`.
pub fn torus_distance(space: &TorusSpace, a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != space.dim || b.len() != space.dim {
        return invalid(format!(
            "point dimensions {} and {} do not match torus dimension {}",
            a.len(),
            b.len(),
            space.dim
        ));
    }
    Ok(space.dist(a, b))
}

/// Node positions in one torus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    pub space: TorusSpace,
    coords: Vec<f64>,
    pub density_bound: usize,
}

impl PointSet {
    /// Wraps raw row-major coordinates, reducing each into `[0, side)`.
    pub fn new(space: TorusSpace, coords: Vec<f64>, density_bound: usize) -> Result<PointSet> {
        if coords.len() % space.dim != 0 {
            return invalid("coordinate count is not a multiple of the dimension");
        }
        if density_bound == 0 {
            return invalid("density bound must be positive");
        }
        let coords = coords
            .into_iter()
            .map(|x| {
                let y = x.rem_euclid(space.side);
                if y >= space.side { 0.0 } else { y }
            })
            .collect();
        Ok(PointSet { space, coords, density_bound })
    }

    pub fn n(&self) -> usize {
        self.coords.len() / self.space.dim
    }

    pub fn dim(&self) -> usize {
        self.space.dim
    }

    pub fn point(&self, u: Node) -> &[f64] {
        let d = self.space.dim;
        &self.coords[u as usize * d..(u as usize + 1) * d]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    #[inline]
    pub fn dist(&self, u: Node, v: Node) -> f64 {
        self.space.dist(self.point(u), self.point(v))
    }

    /// Distances from `u` to every node.
    pub fn row(&self, u: Node) -> Vec<f64> {
        let p = self.point(u);
        (0..self.n() as Node).map(|v| self.space.dist(p, self.point(v))).collect()
    }

    /// All nodes within distance `r` of `center`, ascending.
    pub fn ball(&self, center: Node, r: f64) -> Vec<Node> {
        let p = self.point(center);
        (0..self.n() as Node).filter(|&v| self.space.dist(p, self.point(v)) <= r).collect()
    }

    /// Counts of points per unit cell of the grid shifted by `offset`.
    ///
    /// Requires an integer side. Returns `(min, max)` over all cells.
    pub fn cell_counts(&self, offset: &[f64]) -> Result<(usize, usize)> {
        let side = self.space.side;
        if side.fract() != 0.0 {
            return invalid("cell histogram needs an integer torus side");
        }
        let s = side as usize;
        let d = self.space.dim;
        let cells = s.checked_pow(d as u32).filter(|&c| c <= 1 << 28);
        let Some(cells) = cells else {
            return invalid("too many unit cells for a histogram");
        };
        let mut hist = vec![0usize; cells];
        for u in 0..self.n() as Node {
            let mut idx = 0usize;
            for (x, o) in self.point(u).iter().zip(offset) {
                let c = ((x - o).rem_euclid(side).floor() as usize).min(s - 1);
                idx = idx * s + c;
            }
            hist[idx] += 1;
        }
        let min = hist.iter().copied().min().unwrap_or(0);
        let max = hist.iter().copied().max().unwrap_or(0);
        Ok((min, max))
    }

    /// Checks the density invariant. The upper bound is tested on the
    /// aligned unit grid, the half-shifted grid and `extra` randomly shifted
    /// grids; the lower bound on the aligned grid only, since a jittered
    /// lattice may leave a shifted cube empty.
    pub fn check_density(&self, extra: usize, seed: u64) -> Result<()> {
        let d = self.space.dim;
        let mut offsets = vec![vec![0.0; d], vec![0.5; d]];
        let mut r = rng::rng(seed);
        for _ in 0..extra {
            offsets.push((0..d).map(|_| r.random::<f64>()).collect());
        }
        for (i, off) in offsets.iter().enumerate() {
            let (lo, hi) = self.cell_counts(off)?;
            if (i == 0 && lo < 1) || hi > self.density_bound {
                return invalid(format!(
                    "unit cells hold between {lo} and {hi} points at offset {off:?}, \
                     outside [1, {}]",
                    self.density_bound
                ));
            }
        }
        Ok(())
    }

    /// Returns the point set relabeled so that node `i` sits where node
    /// `perm[i]` used to.
    pub fn relabeled(&self, perm: &[Node]) -> PointSet {
        let d = self.space.dim;
        let mut coords = Vec::with_capacity(self.coords.len());
        for &src in perm {
            coords.extend_from_slice(&self.coords[src as usize * d..(src as usize + 1) * d]);
        }
        PointSet { space: self.space, coords, density_bound: self.density_bound }
    }
}

/// Integer side of a lattice holding exactly `n` points in `dim` dimensions.
pub fn lattice_side(n: usize, dim: usize) -> Option<usize> {
    let guess = (n as f64).powf(1.0 / dim as f64).round() as usize;
    (guess.saturating_sub(1)..=guess + 1).find(|&s| s.checked_pow(dim as u32) == Some(n))
}

/// One point per unit lattice cell, each displaced by up to `jitter` per axis.
///
/// The lattice must tile the torus exactly: `side` is an integer and
/// `side^dim == n`.
pub fn generate_points(space: TorusSpace, n: usize, jitter: f64, seed: u64) -> Result<PointSet> {
    if !(0.0..1.0).contains(&jitter) {
        return invalid(format!("jitter must lie in [0, 1), got {jitter}"));
    }
    let s = space.side;
    if s.fract() != 0.0 || (s as usize).checked_pow(space.dim as u32) != Some(n) {
        return invalid(format!(
            "a lattice of {n} points does not tile a {}-torus of side {s}",
            space.dim
        ));
    }
    let side = s as usize;
    let d = space.dim;
    let mut r = rng::rng(seed);
    let mut coords = Vec::with_capacity(n * d);
    let mut cell = vec![0usize; d];
    for _ in 0..n {
        for &c in cell.iter() {
            let off = if jitter > 0.0 { r.random::<f64>() * jitter } else { 0.0 };
            coords.push(c as f64 + off);
        }
        // odometer, last axis fastest
        for a in (0..d).rev() {
            cell[a] += 1;
            if cell[a] < side {
                break;
            }
            cell[a] = 0;
        }
    }
    let density_bound = if jitter > 0.0 { 1 << d } else { 1 };
    PointSet::new(space, coords, density_bound)
}

/// Relabels nodes by a uniformly random bijection; `None` keeps the identity.
///
/// Node `i` of the result takes the coordinates of node `σ(i)`; `σ` is returned.
pub fn permute_category(points: &PointSet, seed: Option<u64>) -> (PointSet, Vec<Node>) {
    let mut perm: Vec<Node> = (0..points.n() as Node).collect();
    if let Some(seed) = seed {
        perm.shuffle(&mut rng::rng(seed));
    }
    (points.relabeled(&perm), perm)
}

pub fn invert_permutation(perm: &[Node]) -> Vec<Node> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p as usize] = i as Node;
    }
    inv
}

pub fn is_permutation(perm: &[Node]) -> bool {
    let mut seen = vec![false; perm.len()];
    perm.iter().all(|&p| {
        let p = p as usize;
        p < seen.len() && !std::mem::replace(&mut seen[p], true)
    })
}

/// Greedy net in id order: a node joins when every current member is
/// farther than `r`. Members are pairwise farther than `r` apart and every
/// node lies within `r` of a member.
pub fn epsilon_net(points: &PointSet, r: f64) -> Vec<Node> {
    let mut net: Vec<Node> = Vec::new();
    for u in 0..points.n() as Node {
        if net.iter().all(|&w| points.dist(u, w) > r) {
            net.push(u);
        }
    }
    net
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(side: usize, dim: usize, p: f64) -> PointSet {
        let space = TorusSpace::new(dim, side as f64, p).unwrap();
        generate_points(space, side.pow(dim as u32), 0.0, 0).unwrap()
    }

    #[test]
    fn distance_examples() {
        let s = TorusSpace::euclidean(2, 8.0).unwrap();
        assert_eq!(torus_distance(&s, &[0.0, 0.0], &[7.0, 0.0]).unwrap(), 1.0);
        let s = TorusSpace::euclidean(2, 100.0).unwrap();
        assert_eq!(torus_distance(&s, &[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(torus_distance(&s, &[2.5, 1.0], &[2.5, 1.0]).unwrap(), 0.0);
        assert!(torus_distance(&s, &[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn other_norms() {
        let s1 = TorusSpace::new(2, 10.0, 1.0).unwrap();
        let si = TorusSpace::new(2, 10.0, f64::INFINITY).unwrap();
        let s3 = TorusSpace::new(2, 10.0, 3.0).unwrap();
        assert_eq!(s1.dist(&[0.0, 0.0], &[3.0, 9.0]), 4.0);
        assert_eq!(si.dist(&[0.0, 0.0], &[3.0, 9.0]), 3.0);
        assert!((s3.dist(&[0.0, 0.0], &[1.0, 1.0]) - 2f64.powf(1.0 / 3.0)).abs() < 1e-12);
        assert!(TorusSpace::new(2, 10.0, 0.5).is_err());
        assert!(TorusSpace::new(0, 10.0, 2.0).is_err());
        assert!(TorusSpace::new(2, -1.0, 2.0).is_err());
    }

    #[test]
    fn unit_ball_volumes() {
        let v = |d, p| TorusSpace::new(d, 4.0, p).unwrap().unit_ball_volume();
        assert!((v(2, 2.0) - std::f64::consts::PI).abs() < 1e-9);
        assert!((v(3, 2.0) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-9);
        assert!((v(2, 1.0) - 2.0).abs() < 1e-9);
        assert_eq!(v(3, f64::INFINITY), 8.0);
    }

    #[test]
    fn ball_examples() {
        let g = grid(8, 2, 2.0);
        assert_eq!(g.ball(0, 0.0), vec![0]);
        let b = g.ball(0, 1.0);
        assert_eq!(b.len(), 5);
        // wrap neighbours of (0,0): (0,1)=1, (0,7)=7, (1,0)=8, (7,0)=56
        assert_eq!(b, vec![0, 1, 7, 8, 56]);
        assert_eq!(g.ball(3, g.space.diameter()).len(), 64);
    }

    #[test]
    fn generation_examples() {
        let g = grid(16, 2, 2.0);
        assert_eq!(g.cell_counts(&[0.0, 0.0]).unwrap(), (1, 1));
        assert!(g.check_density(4, 1).is_ok());
        assert!(g.coords().iter().all(|c| c.fract() == 0.0));

        let s = TorusSpace::euclidean(2, 64.0).unwrap();
        let a = generate_points(s, 4096, 0.4, 9).unwrap();
        assert_eq!(a.density_bound, 4);
        a.check_density(16, 2).unwrap();
        let b = generate_points(s, 4096, 0.4, 9).unwrap();
        assert_eq!(a, b);

        assert!(generate_points(s, 4000, 0.4, 9).is_err());
        assert!(generate_points(s, 4096, 1.0, 9).is_err());
    }

    #[test]
    fn lattice_side_roundtrip() {
        assert_eq!(lattice_side(4096, 2), Some(64));
        assert_eq!(lattice_side(32768, 3), Some(32));
        assert_eq!(lattice_side(4095, 2), None);
    }

    #[test]
    fn permutation_examples() {
        let g = grid(8, 2, 2.0);
        let (same, id) = permute_category(&g, None);
        assert_eq!(same, g);
        assert!(id.iter().enumerate().all(|(i, &p)| p as usize == i));

        let (p, sigma) = permute_category(&g, Some(3));
        assert!(is_permutation(&sigma));
        let mut a: Vec<_> = g.coords().chunks(2).map(|c| (c[0] as i64, c[1] as i64)).collect();
        let mut b: Vec<_> = p.coords().chunks(2).map(|c| (c[0] as i64, c[1] as i64)).collect();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
        for i in 0..64 {
            assert_eq!(p.point(i), g.point(sigma[i as usize]));
        }
        let inv = invert_permutation(&sigma);
        assert!((0..64).all(|i| sigma[inv[i] as usize] as usize == i));
        assert!(p.relabeled(&inv) == g);
    }

    fn assert_net(points: &PointSet, net: &[Node], r: f64) {
        for (i, &a) in net.iter().enumerate() {
            for &b in &net[i + 1..] {
                assert!(points.dist(a, b) >= r);
            }
        }
        for u in 0..points.n() as Node {
            assert!(net.iter().any(|&w| points.dist(u, w) <= r));
        }
    }

    #[test]
    fn net_examples() {
        let g = grid(8, 2, 2.0);
        assert_eq!(epsilon_net(&g, 0.5).len(), 64);
        assert_eq!(epsilon_net(&g, g.space.diameter()).len(), 1);
        let l1 = grid(8, 2, 1.0);
        let net = epsilon_net(&l1, 2.0);
        assert!(net.len() as f64 >= 64.0 / 13.0 && net.len() as f64 <= 64.0 / 5.0);
        assert_net(&l1, &net, 2.0);
    }

    proptest! {
        #[test]
        fn triangle_inequality(
            pts in proptest::collection::vec(0.0f64..10.0, 9),
            p in prop_oneof![Just(1.0), Just(2.0), Just(3.5), Just(f64::INFINITY)],
        ) {
            let s = TorusSpace::new(3, 10.0, p).unwrap();
            let (a, b, c) = (&pts[0..3], &pts[3..6], &pts[6..9]);
            prop_assert!((s.dist(a, b) - s.dist(b, a)).abs() < 1e-12);
            prop_assert!(s.dist(a, c) <= s.dist(a, b) + s.dist(b, c) + 1e-9);
            prop_assert!(s.dist(a, b) <= s.diameter() + 1e-9);
            if a != b {
                prop_assert!(s.dist(a, b) > 0.0);
            }
        }

        #[test]
        fn ball_monotone(seed in 0u64..1000, r in 0.0f64..6.0, extra in 0.0f64..3.0) {
            let s = TorusSpace::euclidean(2, 12.0).unwrap();
            let pts = generate_points(s, 144, 0.7, seed).unwrap();
            let small = pts.ball((seed % 144) as Node, r);
            let big = pts.ball((seed % 144) as Node, r + extra);
            prop_assert!(small.iter().all(|v| big.binary_search(v).is_ok()));
        }

        #[test]
        fn generated_points_are_dense(seed in 0u64..10_000, jitter in 0.0f64..0.999) {
            let s = TorusSpace::euclidean(2, 10.0).unwrap();
            let pts = generate_points(s, 100, jitter, seed).unwrap();
            prop_assert!(pts.coords().iter().all(|&c| (0.0..10.0).contains(&c)));
            prop_assert!(pts.check_density(8, seed).is_ok());
        }

        #[test]
        fn nets_pack_and_cover(seed in 0u64..1000, r in 0.3f64..5.0) {
            let s = TorusSpace::euclidean(2, 10.0).unwrap();
            let pts = generate_points(s, 100, 0.9, seed).unwrap();
            let net = epsilon_net(&pts, r);
            assert_net(&pts, &net, r);
        }
    }

    #[test]
    fn sampled_triangle_inequality() {
        let s = TorusSpace::euclidean(3, 7.0).unwrap();
        let mut r = rng::rng(42);
        for _ in 0..100_000 {
            let p: Vec<f64> = (0..9).map(|_| r.random::<f64>() * 7.0).collect();
            let (a, b, c) = (&p[0..3], &p[3..6], &p[6..9]);
            assert!(s.dist(a, c) <= s.dist(a, b) + s.dist(b, c) + 1e-9);
        }
    }
}
