use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Node;
use crate::metric::PointSet;

/// Normalizer `C` that makes the expected edge count at unit target degree
/// equal `n/2`, i.e. `Σ_{u<v} min(1, C·d(u,v)^−dim) = n/2`.
pub fn calibrate_normalizer(points: &PointSet) -> Result<f64> {
    calibrate_for_target(points, points.n() as f64 / 2.0)
}

/// Smallest `C` with `Σ_{u<v} min(1, C·d(u,v)^−dim) ≥ target`.
///
/// The sum is piecewise linear in `C` with breakpoints at `d^dim`, so the
/// root is found exactly by walking the sorted short distances. Only pairs
/// closer than the largest nearest-neighbour distance can saturate at the
/// root, which keeps memory linear.
pub fn calibrate_for_target(points: &PointSet, target: f64) -> Result<f64> {
    let n = points.n();
    if n < 2 {
        return Err(Error::CalibrationFailure("need at least two points".into()));
    }
    let total_pairs = (n * (n - 1) / 2) as f64;
    if !(target > 0.0) || target > total_pairs {
        return Err(Error::CalibrationFailure(format!(
            "target {target} outside (0, {total_pairs}]"
        )));
    }
    let dim = points.dim() as i32;

    // Pass 1: total weight (coincident pairs kept apart) and nearest-neighbour radius.
    let rows: Vec<(f64, usize, f64)> = (0..n as Node)
        .into_par_iter()
        .map(|u| {
            let (mut w, mut zero, mut nn) = (0.0, 0usize, f64::INFINITY);
            for v in 0..n as Node {
                if v == u {
                    continue;
                }
                let d = points.dist(u, v);
                nn = nn.min(d);
                if v > u {
                    if d == 0.0 {
                        zero += 1;
                    } else {
                        w += d.powi(-dim);
                    }
                }
            }
            (w, zero, nn)
        })
        .collect();
    let total: f64 = rows.iter().map(|r| r.0).sum();
    let zeros: usize = rows.iter().map(|r| r.1).sum();
    let cut = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    if zeros as f64 >= target || total == 0.0 {
        return Err(Error::CalibrationFailure(
            "point set is degenerate: coincident pairs alone reach the target".into(),
        ));
    }

    // Pass 2: the short pairs that may saturate. The nearest-neighbour
    // radius suffices for targets up to n/2; larger targets widen it.
    let mut cut = cut;
    loop {
        let c = solve_segments(points, total, zeros, cut, target)?;
        if c <= cut.powi(dim) || cut >= points.space.diameter() {
            return Ok(c);
        }
        cut *= 2.0;
    }
}

fn solve_segments(points: &PointSet, total: f64, zeros: usize, cut: f64, target: f64) -> Result<f64> {
    let n = points.n();
    let dim = points.dim() as i32;
    let mut short: Vec<f64> = (0..n as Node)
        .into_par_iter()
        .flat_map_iter(|u| {
            ((u + 1)..n as Node)
                .map(move |v| points.dist(u, v))
                .filter(move |&d| d > 0.0 && d <= cut)
        })
        .collect();
    short.sort_unstable_by(|a, b| a.total_cmp(b));

    // On the segment where exactly the first j short pairs saturate,
    // sum(C) = zeros + j + C·(total − W_j).
    let mut saturated_weight = 0.0;
    for j in 0..=short.len() {
        let lower = if j == 0 { 0.0 } else { short[j - 1].powi(dim) };
        let upper = short.get(j).map_or(f64::INFINITY, |d| d.powi(dim));
        let count = (zeros + j) as f64;
        let rest = total - saturated_weight;
        if j > 0 && count + lower * rest >= target {
            return Ok(lower);
        }
        let c = (target - count) / rest;
        if c < upper {
            return Ok(c);
        }
        if let Some(d) = short.get(j) {
            saturated_weight += d.powi(-dim);
        }
    }
    Err(Error::CalibrationFailure("no root found".into()))
}
