use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::{const_dr, edp_prune};
use crate::error::{invalid, Error, Result};
use crate::graph::{Adjacency, EdgeSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveParams {
    pub h_candidates: Vec<usize>,
    pub alpha: f64,
    pub c0: f64,
    pub k: f64,
    pub c_sw: f64,
    pub dim: usize,
    /// Points per unit cube, at most.
    pub density_bound: usize,
    /// Assumed expansion of the local spanner, for the side condition.
    pub expansion: f64,
    /// Search each hop bound by bisection on `p`. Same answer, fewer prunes.
    pub bisect: bool,
    pub cap: usize,
}

/// One evaluated `(p, h)` pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub p: usize,
    pub h: usize,
    pub const_dr: f64,
    pub connected: bool,
}

#[derive(Clone, Debug)]
pub struct AdaptiveResult {
    pub p: usize,
    pub h: usize,
    pub const_dr: f64,
    pub pruned: EdgeSet,
    /// `(2·Ĉ·h)^d · density² · c_sw · k`, which should be at most 1/6.
    pub side_value: f64,
    pub side_ok: bool,
    pub trials: Vec<Trial>,
}

/// Picks the `(p, h)` pair with the smallest threshold whose pruned graph is
/// still connected. `p` ranges over `1..=` the minimum degree.
pub fn adaptive_edp(edges: &EdgeSet, params: &AdaptiveParams) -> Result<AdaptiveResult> {
    if params.h_candidates.is_empty() || params.h_candidates.contains(&0) {
        return invalid("need a nonempty list of positive hop bounds");
    }
    let n = edges.n();
    let min_deg = Adjacency::new(edges).min_degree();
    let cdr = |p: usize, h: usize| const_dr(params.alpha, p, h, n, params.dim, params.k, params.c0);
    let mut order: Vec<(usize, usize)> =
        params.h_candidates.iter().flat_map(|&h| (1..=min_deg).map(move |p| (p, h))).collect();
    order.sort_by(|a, b| cdr(a.0, a.1).total_cmp(&cdr(b.0, b.1)).then(a.1.cmp(&b.1)).then(b.0.cmp(&a.0)));
    order.dedup();
    let mut trials = Vec::new();
    let attempt = |p: usize, h: usize, trials: &mut Vec<Trial>| -> Result<(bool, EdgeSet)> {
        let pruned = edp_prune(edges, p, h, params.cap)?;
        let connected = n <= 1 || Adjacency::new(&pruned).is_connected();
        info!("p={p} h={h}: {} edges kept, connected={connected}", pruned.len());
        trials.push(Trial { p, h, const_dr: cdr(p, h), connected });
        Ok((connected, pruned))
    };
    let mut best: Option<(usize, usize, EdgeSet)> = None;
    if params.bisect {
        // for fixed h a larger p prunes more, so connectivity is monotone in p
        for &h in &params.h_candidates {
            let (mut lo, mut hi) = (0, min_deg);
            let mut kept = None;
            while lo < hi {
                let mid = (lo + hi + 1) / 2;
                let (ok, pruned) = attempt(mid, h, &mut trials)?;
                if ok {
                    lo = mid;
                    kept = Some(pruned);
                } else {
                    hi = mid - 1;
                }
            }
            let Some(pruned) = kept else { continue };
            let rank = |p: usize, h: usize| order.iter().position(|&x| x == (p, h));
            if best.as_ref().is_none_or(|b| rank(lo, h) < rank(b.0, b.1)) {
                best = Some((lo, h, pruned));
            }
        }
    } else {
        for &(p, h) in &order {
            let (ok, pruned) = attempt(p, h, &mut trials)?;
            if ok {
                best = Some((p, h, pruned));
                break;
            }
        }
    }
    let Some((p, h, pruned)) = best else {
        return Err(Error::AdaptiveFailure);
    };
    let d = params.dim as i32;
    let side_value = (2.0 * params.expansion * h as f64).powi(d)
        * (params.density_bound as f64).powi(2)
        * params.c_sw
        * params.k;
    let side_ok = side_value <= 1.0 / 6.0;
    if !side_ok {
        warn!("isolation side condition fails: {side_value} > 1/6");
    }
    Ok(AdaptiveResult { p, h, const_dr: cdr(p, h), pruned, side_value, side_ok, trials })
}
