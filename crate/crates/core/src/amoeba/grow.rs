use std::collections::VecDeque;

use rand::Rng as _;

use crate::error::{invalid, Result};
use crate::graph::{Adjacency, Edge, EdgeSet, Node};
use crate::rng;

/// An edge set under construction, with per-node neighbour lists.
#[derive(Clone, Debug)]
pub struct GrowingGraph {
    adj: Vec<Vec<Node>>,
    edges: std::collections::HashSet<Edge>,
}

impl GrowingGraph {
    pub fn new(n: usize) -> GrowingGraph {
        GrowingGraph { adj: vec![Vec::new(); n], edges: Default::default() }
    }

    pub fn from_edges(edges: &EdgeSet) -> GrowingGraph {
        let mut g = GrowingGraph::new(edges.n());
        edges.iter().for_each(|e| {
            g.insert(e);
        });
        g
    }

    pub fn insert(&mut self, e: Edge) -> bool {
        if !self.edges.insert(e) {
            return false;
        }
        self.adj[e.lo as usize].push(e.hi);
        self.adj[e.hi as usize].push(e.lo);
        true
    }

    pub fn contains(&self, e: Edge) -> bool {
        self.edges.contains(&e)
    }

    pub fn neighbors(&self, u: Node) -> &[Node] {
        &self.adj[u as usize]
    }

    pub fn to_edge_set(&self) -> EdgeSet {
        EdgeSet::from_edges(self.adj.len(), self.edges.iter().copied().collect())
    }
}

/// True when at least `m` union edges join `u` to the amoeba neighbourhood of `v`.
pub fn amoeba_test(union: &Adjacency, amoeba: &GrowingGraph, u: Node, v: Node, m: usize) -> bool {
    if m == 0 {
        return true;
    }
    let mut hits = 0;
    for &w in amoeba.neighbors(v) {
        if w != u && union.has_edge(u, w) {
            hits += 1;
            if hits >= m {
                return true;
            }
        }
    }
    false
}

/// The test in either orientation.
pub fn passes(union: &Adjacency, amoeba: &GrowingGraph, e: Edge, m: usize) -> bool {
    amoeba_test(union, amoeba, e.lo, e.hi, m) || amoeba_test(union, amoeba, e.hi, e.lo, m)
}

/// Queue discipline for growth; the result must not depend on it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GrowOrder {
    Fifo,
    /// Pop a uniformly random queued edge each step.
    Shuffled(u64),
}

/// Grows the seed clique to the fixed point of the amoeba test over `pruned`.
pub fn grow_amoeba(union: &Adjacency, pruned: &EdgeSet, seed: &[Node], m: usize) -> Result<EdgeSet> {
    grow_amoeba_ordered(union, pruned, seed, m, GrowOrder::Fifo)
}

pub fn grow_amoeba_ordered(
    union: &Adjacency,
    pruned: &EdgeSet,
    seed: &[Node],
    m: usize,
    order: GrowOrder,
) -> Result<EdgeSet> {
    let n = pruned.n();
    let adj = Adjacency::new(pruned);
    for (i, &a) in seed.iter().enumerate() {
        for &b in &seed[i + 1..] {
            if adj.slot(a, b).is_none() {
                return invalid(format!("seed pair ({a}, {b}) is not a pruned pair"));
            }
        }
    }
    if m == 0 {
        return Ok(pruned.clone());
    }
    // hits[slot(x, u)] = union edges from u into the amoeba neighbourhood of x
    let slots = 2 * pruned.len();
    let mut hits = vec![0u32; slots];
    let mut state = vec![Slot::Out; slots];
    let mut amoeba = GrowingGraph::new(n);
    let mut queue: VecDeque<(Node, Node)> = VecDeque::new();
    let mut rand = match order {
        GrowOrder::Fifo => None,
        GrowOrder::Shuffled(s) => Some(rng::rng(s)),
    };
    let m = m as u32;
    let mut admit = |x: Node, y: Node, state: &mut [Slot], hits: &mut [u32], queue: &mut VecDeque<(Node, Node)>| {
        let (sxy, syx) = (adj.slot(x, y).expect("pruned"), adj.slot(y, x).expect("pruned"));
        state[sxy] = Slot::In;
        state[syx] = Slot::In;
        amoeba.insert(Edge::new(x, y));
        // x gains amoeba neighbour y: every u adjacent to y in the union
        // gains a hit towards x, and symmetrically
        for (a, b) in [(x, y), (y, x)] {
            let base = adj.offset(a);
            let pn = adj.neighbors(a);
            let un = union.neighbors(b);
            let (mut i, mut j) = (0, 0);
            while i < pn.len() && j < un.len() {
                match pn[i].cmp(&un[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        let s = base + i;
                        hits[s] += 1;
                        if hits[s] == m && state[s] == Slot::Out {
                            let u = pn[i];
                            let t = adj.slot(u, a).expect("symmetric");
                            if state[t] == Slot::Out {
                                state[s] = Slot::Queued;
                                state[t] = Slot::Queued;
                                queue.push_back((a, u));
                            }
                        }
                        i += 1;
                        j += 1;
                    }
                }
            }
        }
    };
    for (i, &a) in seed.iter().enumerate() {
        for &b in &seed[i + 1..] {
            if state[adj.slot(a, b).expect("checked")] != Slot::In {
                admit(a, b, &mut state, &mut hits, &mut queue);
            }
        }
    }
    loop {
        let next = match rand.as_mut() {
            None => queue.pop_front(),
            Some(r) if !queue.is_empty() => {
                let i = r.random_range(0..queue.len());
                queue.swap_remove_back(i)
            }
            Some(_) => None,
        };
        let Some((x, y)) = next else { break };
        if state[adj.slot(x, y).expect("pruned")] == Slot::Queued {
            admit(x, y, &mut state, &mut hits, &mut queue);
        }
    }
    Ok(amoeba.to_edge_set())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Out,
    Queued,
    In,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn set(n: usize, pairs: &[(u32, u32)]) -> EdgeSet {
        EdgeSet::from_pairs(n, pairs.iter().copied()).unwrap()
    }

    #[test]
    fn empty_neighbourhood_fails() {
        let union = Adjacency::new(&set(3, &[(0, 1), (1, 2)]));
        let a = GrowingGraph::new(3);
        assert!(!amoeba_test(&union, &a, 0, 1, 1));
        assert!(amoeba_test(&union, &a, 0, 1, 0));
    }

    #[test]
    fn hand_built_six_nodes() {
        // v=0 has amoeba neighbours 1, 2, 3; u=4 has union edges to 1 and 2.
        let union = Adjacency::new(&set(6, &[(4, 1), (4, 2), (4, 5), (0, 1)]));
        let a = GrowingGraph::from_edges(&set(6, &[(0, 1), (0, 2), (0, 3)]));
        assert!(amoeba_test(&union, &a, 4, 0, 2));
        assert!(!amoeba_test(&union, &a, 4, 0, 3));
        assert!(!amoeba_test(&union, &a, 0, 4, 1));
    }

    #[test]
    fn growth_extremes() {
        let union_set = set(5, &[(0, 1), (1, 2), (2, 3), (0, 2), (3, 4)]);
        let union = Adjacency::new(&union_set);
        let pruned = set(5, &[(0, 1), (0, 2), (1, 2), (2, 3), (1, 3), (3, 4), (0, 4)]);
        let seed = [0, 1, 2];
        let only = grow_amoeba(&union, &pruned, &seed, 99).unwrap();
        assert_eq!(only, set(5, &[(0, 1), (0, 2), (1, 2)]));
        let all = grow_amoeba(&union, &pruned, &seed, 0).unwrap();
        assert_eq!(all, pruned);
        assert!(grow_amoeba(&union, &pruned, &[0, 3], 1).is_err());
    }

    fn random_instance(n: usize, seed: u64) -> (Adjacency, EdgeSet, Vec<Node>) {
        let mut r = rng::rng(seed);
        let mut u = Vec::new();
        let mut p = Vec::new();
        for a in 0..n as u32 {
            for b in a + 1..n as u32 {
                let close = (a as i64 - b as i64).abs() <= 6;
                if r.random::<f64>() < if close { 0.6 } else { 0.01 } {
                    u.push((a, b));
                }
                if close || r.random::<f64>() < 0.003 {
                    p.push((a, b));
                }
            }
        }
        let seed_clique = vec![0, 1, 2, 3];
        (Adjacency::new(&set(n, &u)), set(n, &p), seed_clique)
    }

    #[test]
    fn order_independent_on_500_nodes() {
        let (union, pruned, seed) = random_instance(500, 3);
        let base = grow_amoeba(&union, &pruned, &seed, 2).unwrap();
        assert!(base.len() > 100);
        for s in 0..10 {
            let other = grow_amoeba_ordered(&union, &pruned, &seed, 2, GrowOrder::Shuffled(s)).unwrap();
            assert_eq!(other, base);
        }
    }

    #[test]
    fn result_is_a_fixed_point() {
        let (union, pruned, seed) = random_instance(300, 8);
        let grown = grow_amoeba(&union, &pruned, &seed, 2).unwrap();
        let g = GrowingGraph::from_edges(&grown);
        for e in pruned.iter().filter(|e| !grown.contains(*e)) {
            assert!(!passes(&union, &g, e, 2));
        }
    }

    /// Repeated sweeps over all pairs until nothing changes.
    fn sweep_oracle(union: &Adjacency, pruned: &EdgeSet, seed: &[Node], m: usize) -> EdgeSet {
        let mut g = GrowingGraph::new(pruned.n());
        for (i, &a) in seed.iter().enumerate() {
            for &b in &seed[i + 1..] {
                g.insert(Edge::new(a, b));
            }
        }
        loop {
            let add: Vec<Edge> = pruned.iter().filter(|&e| !g.contains(e) && passes(union, &g, e, m)).collect();
            if add.is_empty() {
                return g.to_edge_set();
            }
            add.into_iter().for_each(|e| {
                g.insert(e);
            });
        }
    }

    #[test]
    fn matches_sweep_oracle() {
        for s in 0..6 {
            let (union, pruned, seed) = random_instance(200, 40 + s);
            for m in 1..=3 {
                assert_eq!(grow_amoeba(&union, &pruned, &seed, m).unwrap(), sweep_oracle(&union, &pruned, &seed, m));
            }
        }
    }

    proptest! {
        #[test]
        fn test_is_monotone(seed in 0u64..300) {
            let (union, pruned, _) = random_instance(60, seed);
            let mut r = rng::rng(seed ^ 77);
            let edges = pruned.as_slice();
            let mut g = GrowingGraph::new(60);
            for _ in 0..40 {
                g.insert(edges[r.random_range(0..edges.len())]);
            }
            let e = edges[r.random_range(0..edges.len())];
            let before = passes(&union, &g, e, 2);
            for _ in 0..40 {
                g.insert(edges[r.random_range(0..edges.len())]);
            }
            prop_assert!(!before || passes(&union, &g, e, 2));
        }
    }
}
