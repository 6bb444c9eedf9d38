use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{clamp_kappa, BallCounter, NormalizedEstimate};
use crate::error::{invalid, Result};
use crate::estimate::{knn_from_row, DistanceEstimate};
use crate::graph::{Adjacency, Edge, Node};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecursiveMode {
    /// One pair at a time in increasing initial-estimate order.
    Sequential,
    /// Pairs with equal initial estimates are refined together against the
    /// state left by all strictly smaller ones. Identical to `Sequential`
    /// when the initial estimates are distinct.
    Wave,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecursiveParams {
    pub dim: usize,
    /// Nodes per unit normalized ball: a radius-`r` ball holds `c_pd·r^d`.
    pub c_pd: f64,
    /// Ball-pair edge constant.
    pub c_dim: f64,
    /// Pairs at or below this estimate keep their initial value.
    pub floor: f64,
    /// Pairs above this estimate are left alone (infinite processes all).
    pub x_max: f64,
    pub mode: RecursiveMode,
}

impl RecursiveParams {
    /// `x^(1/2 + 1/d)`.
    pub fn shrink(&self, x: f64) -> f64 {
        x.powf(0.5 + 1.0 / self.dim as f64)
    }

    pub fn kappa(&self, x: f64, n: usize) -> usize {
        clamp_kappa(self.c_pd * self.shrink(x).powi(self.dim as i32), n)
    }

    /// `c_dim · shrink(x)² · N^(−1/d)`.
    pub fn value(&self, x: f64, count: usize) -> f64 {
        self.c_dim * self.shrink(x).powi(2) * (count as f64).powf(-1.0 / self.dim as f64)
    }
}

#[derive(Clone, Debug)]
pub struct RecursiveOutput {
    pub estimate: NormalizedEstimate,
    /// Pairs in the order they were refined.
    pub order: Vec<Edge>,
    /// Pairs whose balls had no edge between them and kept their old value.
    pub fallbacks: Vec<Edge>,
    /// Refined pairs whose balls were chosen using a fallback value.
    pub tainted: usize,
    /// Refined pairs whose balls overlapped before disjointifying.
    pub overlapping: usize,
}

/// Per-node candidate list: every node within `x_max` by initial estimate.
struct Row {
    ids: Vec<Node>,
    init: Vec<f64>,
    cur: Vec<f64>,
    fell_back: Vec<bool>,
}

impl Row {
    fn position(&self, v: Node, x: f64) -> usize {
        let i = self.init.partition_point(|&y| y < x);
        i + self.ids[i..].iter().position(|&w| w == v).expect("symmetric candidate lists")
    }
}

struct Task {
    s: Node,
    t: Node,
    x: f64,
    ps: usize,
    pt: usize,
}

/// Refines pairs in increasing initial-estimate order, choosing each pair's
/// balls from the estimate as updated so far.
///
/// Ball sizes are `round(c_pd·shrink(x)^d)` with `shrink(x) = x^(1/2+1/d)`
/// and the refined value is `c_dim·shrink(x)²·N^(−1/d)`.
pub fn recursive_two_ball(
    union: &Adjacency,
    init: &DistanceEstimate,
    params: &RecursiveParams,
    normalizer: f64,
) -> Result<RecursiveOutput> {
    if params.dim < 3 {
        return invalid("the recursive refinement needs d >= 3");
    }
    if !(params.c_pd > 0.0 && params.c_dim > 0.0) {
        return invalid("ball constants must be positive");
    }
    let n = init.n();
    if union.n() != n {
        return invalid("graph and estimate disagree on n");
    }
    info!("collecting candidate lists up to {}", params.x_max);
    let mut rows: Vec<Row> = (0..n as Node)
        .into_par_iter()
        .map(|s| {
            let full = init.row(s);
            let mut c: Vec<(f64, Node)> = full
                .iter()
                .enumerate()
                .filter(|&(v, &x)| v as Node != s && x <= params.x_max)
                .map(|(v, &x)| (x, v as Node))
                .collect();
            c.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let init: Vec<f64> = c.iter().map(|p| p.0).collect();
            Row {
                ids: c.iter().map(|p| p.1).collect(),
                cur: init.clone(),
                fell_back: vec![false; init.len()],
                init,
            }
        })
        .collect();

    let mut tasks: Vec<Task> = Vec::new();
    for s in 0..n as Node {
        let row = &rows[s as usize];
        for (ps, (&t, &x)) in row.ids.iter().zip(&row.init).enumerate() {
            if t > s && x > params.floor {
                tasks.push(Task { s, t, x, ps, pt: 0 });
            }
        }
    }
    tasks.par_iter_mut().for_each(|task| task.pt = rows[task.t as usize].position(task.s, task.x));
    tasks.sort_unstable_by(|a, b| a.x.total_cmp(&b.x).then(a.s.cmp(&b.s)).then(a.t.cmp(&b.t)));
    info!("refining {} pairs", tasks.len());

    let mut out = RecursiveOutput {
        estimate: NormalizedEstimate { estimate: init.clone(), normalizer },
        order: Vec::with_capacity(tasks.len()),
        fallbacks: Vec::new(),
        tainted: 0,
        overlapping: 0,
    };
    let mut start = 0;
    while start < tasks.len() {
        let end = match params.mode {
            RecursiveMode::Sequential => start + 1,
            RecursiveMode::Wave => {
                let x = tasks[start].x;
                start + tasks[start..].partition_point(|t| t.x == x)
            }
        };
        let group = &tasks[start..end];
        let results: Vec<Refined> = if group.len() == 1 {
            let mut counter = BallCounter::new(n);
            vec![refine(union, init, params, &rows, &group[0], &mut counter)]
        } else {
            group
                .par_iter()
                .map_init(|| BallCounter::new(n), |c, task| refine(union, init, params, &rows, task, c))
                .collect()
        };
        for (task, r) in group.iter().zip(results) {
            out.order.push(Edge::new(task.s, task.t));
            out.tainted += r.tainted as usize;
            out.overlapping += r.overlapped as usize;
            match r.value {
                Some(v) => {
                    rows[task.s as usize].cur[task.ps] = v;
                    rows[task.t as usize].cur[task.pt] = v;
                }
                None => {
                    out.fallbacks.push(Edge::new(task.s, task.t));
                    rows[task.s as usize].fell_back[task.ps] = true;
                    rows[task.t as usize].fell_back[task.pt] = true;
                }
            }
        }
        start = end;
    }
    if !out.fallbacks.is_empty() {
        debug!("{} pairs kept their previous value", out.fallbacks.len());
    }
    let updates = tasks
        .iter()
        .map(|t| (Edge::new(t.s, t.t), rows[t.s as usize].cur[t.ps]))
        .filter(|(_, v)| v.is_finite());
    out.estimate.estimate = DistanceEstimate::overlay(init.clone(), updates.collect::<Vec<_>>());
    Ok(out)
}

struct Refined {
    value: Option<f64>,
    tainted: bool,
    overlapped: bool,
}

fn ball(init: &DistanceEstimate, rows: &[Row], s: Node, kappa: usize, x_max: f64) -> (Vec<Node>, bool) {
    let row = &rows[s as usize];
    if kappa <= row.ids.len() + 1 {
        let mut c: Vec<(f64, Node, usize)> = Vec::with_capacity(row.ids.len() + 1);
        c.push((0.0, s, usize::MAX));
        c.extend(row.ids.iter().zip(&row.cur).enumerate().map(|(i, (&v, &x))| (x, v, i)));
        let cmp = |a: &(f64, Node, usize), b: &(f64, Node, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if kappa < c.len() {
            c.select_nth_unstable_by(kappa - 1, cmp);
        }
        let chosen = &c[..kappa];
        let kth = chosen.iter().map(|e| e.0).fold(f64::NEG_INFINITY, f64::max);
        // nodes outside the candidate list sit beyond x_max
        if kth <= x_max {
            let tainted = chosen.iter().any(|e| e.2 != usize::MAX && row.fell_back[e.2]);
            return (chosen.iter().map(|e| e.1).collect(), tainted);
        }
    }
    let mut full = init.row(s);
    for (&v, &x) in row.ids.iter().zip(&row.cur) {
        full[v as usize] = x;
    }
    full[s as usize] = 0.0;
    let tainted = row.fell_back.iter().any(|&f| f);
    (knn_from_row(&full, kappa), tainted)
}

fn refine(
    union: &Adjacency,
    init: &DistanceEstimate,
    params: &RecursiveParams,
    rows: &[Row],
    task: &Task,
    counter: &mut BallCounter,
) -> Refined {
    let kappa = params.kappa(task.x, init.n());
    let (bs, ts) = ball(init, rows, task.s, kappa, params.x_max);
    let (bt, tt) = ball(init, rows, task.t, kappa, params.x_max);
    let count = counter.count(union, task.s, &bs, task.t, &bt);
    Refined {
        value: (count.edges > 0).then(|| params.value(task.x, count.edges)),
        tainted: ts || tt,
        overlapped: count.shared > 0,
    }
}
