use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Adjacency, Node};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelParams {
    /// Hop radius of the smallest scale; scales double from here.
    pub base: u32,
    /// Expected beacons per ball is `beacons_per_ball · ln n`.
    pub beacons_per_ball: f64,
    /// Each scale-`r` beacon explores `reach · r` hops.
    pub reach: f64,
    /// Largest label allowed, in entries.
    pub cap: usize,
}

impl Default for LabelParams {
    fn default() -> Self {
        LabelParams { base: 1, beacons_per_ball: 2.0, reach: 3.0, cap: 1 << 16 }
    }
}

/// One label entry: a beacon that reached this node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEntry {
    pub beacon: Node,
    /// Hop radius of the beacon's scale.
    pub scale: u32,
    pub hops: u32,
}

/// Per-node beacon lists, sorted by beacon id with one entry per beacon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceLabels {
    pub scales: Vec<u32>,
    labels: Vec<Vec<LabelEntry>>,
}

impl DistanceLabels {
    pub fn from_labels(scales: Vec<u32>, mut labels: Vec<Vec<LabelEntry>>) -> DistanceLabels {
        for l in &mut labels {
            l.sort_by_key(|e| (e.beacon, e.hops));
            l.dedup_by_key(|e| e.beacon);
        }
        DistanceLabels { scales, labels }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, u: Node) -> &[LabelEntry] {
        &self.labels[u as usize]
    }

    pub fn max_label_len(&self) -> usize {
        self.labels.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Smallest `hops(b, u) + hops(b, v)` over shared beacons.
    pub fn query(&self, u: Node, v: Node) -> Option<u32> {
        if u == v {
            return Some(0);
        }
        let (a, b) = (self.label(u), self.label(v));
        let (mut i, mut j) = (0, 0);
        let mut best: Option<u32> = None;
        while i < a.len() && j < b.len() {
            match a[i].beacon.cmp(&b[j].beacon) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    let s = a[i].hops + b[j].hops;
                    best = Some(best.map_or(s, |x| x.min(s)));
                    i += 1;
                    j += 1;
                }
            }
        }
        best
    }
}

/// Label estimate scaled to a length; fails without a shared beacon.
pub fn label_query(labels: &DistanceLabels, u: Node, v: Node, scale: f64) -> Result<f64> {
    labels.query(u, v).map(|h| h as f64 * scale).ok_or_else(|| Error::EstimateUnavailable {
        u,
        v,
        reason: "no shared beacon at any scale".into(),
    })
}

/// Hierarchical beacon labels over a spanner.
///
/// For each hop scale `r = base·2^s` up to twice the hop diameter, every
/// node turns beacon with probability `min(1, c·ln n / b_r)`, where `b_r`
/// is the mean size of a radius-`r` hop ball. Beacons run BFS to
/// `⌈reach·r⌉` hops and leave their distance in every node reached.
pub fn build_distance_labels(adj: &Adjacency, params: &LabelParams, seed: u64) -> Result<DistanceLabels> {
    let n = adj.n();
    let mut labels: Vec<Vec<LabelEntry>> = vec![Vec::new(); n];
    if n == 0 {
        return Ok(DistanceLabels::from_labels(Vec::new(), labels));
    }
    let ln = (n as f64).ln().max(1.0);
    let probes: Vec<Node> = {
        let mut r = rng::rng(rng::derive(seed, u64::MAX));
        (0..16.min(n)).map(|_| r.random_range(0..n as Node)).collect()
    };
    let diam = probes.iter().map(|&p| super::hop_diameter_estimate(adj, p)).max().unwrap_or(0);
    let mut scales = Vec::new();
    let mut r = params.base.max(1);
    loop {
        scales.push(r);
        if r >= 2 * diam.max(1) {
            break;
        }
        r *= 2;
    }
    for (s, &r) in scales.iter().enumerate() {
        let mean_ball = probes
            .iter()
            .map(|&p| adj.bfs_ball(p, r).len() as f64)
            .sum::<f64>()
            / probes.len() as f64;
        let p = (params.beacons_per_ball * ln / mean_ball).min(1.0);
        let mut pick = rng::sub_rng(seed, s as u64);
        let beacons: Vec<Node> = (0..n as Node).filter(|_| pick.random::<f64>() < p).collect();
        let reach = (params.reach * r as f64).ceil() as u32;
        let found: Vec<Vec<(Node, u32)>> =
            beacons.par_iter().map(|&b| adj.bfs_ball(b, reach)).collect();
        for (&b, ball) in beacons.iter().zip(found) {
            for (v, hops) in ball {
                labels[v as usize].push(LabelEntry { beacon: b, scale: r, hops });
            }
        }
    }
    let out = DistanceLabels::from_labels(scales, labels);
    if out.max_label_len() > params.cap {
        return Err(Error::ResourceExceeded(format!(
            "label of {} entries exceeds the cap of {}",
            out.max_label_len(),
            params.cap
        )));
    }
    Ok(out)
}
