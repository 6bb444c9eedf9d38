use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng;

/// Fitted ball-pair edge constant with fit diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimConst {
    pub c_dim: f64,
    /// Largest `|log E − log fit|` over the grid.
    pub residual: f64,
    /// Regression slope of `log E` on `log x` (ideal `−d`).
    pub slope_x: f64,
    /// Regression slope of `log E` on `log r` (ideal `2d`).
    pub slope_r: f64,
}

/// Largest tolerated fit residual.
pub const DIMCONST_TOLERANCE: f64 = 0.05;

fn uniform_in_ball(r: &mut impl rand::Rng, dim: usize, out: &mut [f64]) {
    loop {
        let mut s = 0.0;
        for x in out.iter_mut() {
            *x = 2.0 * r.random::<f64>() - 1.0;
            s += *x * *x;
        }
        if s <= 1.0 && dim > 0 {
            return;
        }
    }
}

/// Monte Carlo estimate of the expected number of edges between two
/// radius-`r` balls at center distance `x` in a continuum of `c_pd·r^d`
/// points per ball under `ℓ2`.
pub fn ball_pair_edges(dim: usize, c_pd: f64, r: f64, x: f64, trials: usize, seed: u64) -> f64 {
    let mut g = rng::rng(seed);
    let mut a = vec![0.0; dim];
    let mut b = vec![0.0; dim];
    let mut sum = 0.0;
    for _ in 0..trials {
        uniform_in_ball(&mut g, dim, &mut a);
        uniform_in_ball(&mut g, dim, &mut b);
        let mut d2 = 0.0;
        for i in 0..dim {
            let off = if i == 0 { x } else { 0.0 };
            let diff = (b[i] - a[i]) * r + off;
            d2 += diff * diff;
        }
        sum += d2.powf(-(dim as f64) / 2.0).min(1.0);
    }
    let mass = c_pd * r.powi(dim as i32);
    mass * mass * sum / trials as f64
}

/// Fits `E = (c_dim·r²/x)^d` over a grid of radii and distances with
/// `r ≪ x`.
pub fn calibrate_dimconst(dim: usize, c_pd: f64, trials: usize, seed: u64) -> Result<DimConst> {
    if dim < 3 {
        return invalid("the ball-pair constant is only defined for d >= 3");
    }
    if !(c_pd > 0.0) || trials == 0 {
        return invalid("need a positive density constant and at least one trial");
    }
    let d = dim as f64;
    let mut rows = Vec::new();
    let mut cell = 0u64;
    for r in [2.0f64, 4.0, 8.0] {
        for ratio in [16.0f64, 32.0, 64.0] {
            let x = r * ratio;
            let e = ball_pair_edges(dim, c_pd, r, x, trials, rng::derive(seed, cell));
            cell += 1;
            rows.push((r.ln(), x.ln(), e.ln()));
        }
    }
    // c_dim from the model with the ideal exponents
    let log_c = rows.iter().map(|&(lr, lx, le)| (le - 2.0 * d * lr + d * lx) / d).sum::<f64>()
        / rows.len() as f64;
    let residual = rows
        .iter()
        .map(|&(lr, lx, le)| (le - d * (log_c + 2.0 * lr - lx)).abs())
        .fold(0.0, f64::max);
    let (slope_r, slope_x) = two_var_ols(&rows);
    if residual > DIMCONST_TOLERANCE {
        return Err(Error::CalibrationFailure(format!(
            "ball-pair fit residual {residual:.4} above {DIMCONST_TOLERANCE}"
        )));
    }
    Ok(DimConst { c_dim: log_c.exp(), residual, slope_x, slope_r })
}

/// Least-squares slopes of `z` on `(x, y)` with intercept.
fn two_var_ols(rows: &[(f64, f64, f64)]) -> (f64, f64) {
    let n = rows.len() as f64;
    let mean = |f: &dyn Fn(&(f64, f64, f64)) -> f64| rows.iter().map(f).sum::<f64>() / n;
    let (mx, my, mz) = (mean(&|r| r.0), mean(&|r| r.1), mean(&|r| r.2));
    let (mut sxx, mut syy, mut sxy, mut sxz, mut syz) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y, z) in rows {
        let (x, y, z) = (x - mx, y - my, z - mz);
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
        sxz += x * z;
        syz += y * z;
    }
    let det = sxx * syy - sxy * sxy;
    ((syy * sxz - sxy * syz) / det, (sxx * syz - sxy * sxz) / det)
}
