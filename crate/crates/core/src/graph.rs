//! Undirected simple graphs over node ids `0..n`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub type Node = u32;

/// Hop distance of a node BFS never reached.
pub const UNREACHED: u32 = u32::MAX;

/// An unordered node pair stored with `lo < hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub lo: Node,
    pub hi: Node,
}

impl Edge {
    /// Panics on a self-pair.
    pub fn new(a: Node, b: Node) -> Edge {
        assert_ne!(a, b, "self-loop ({a}, {a})");
        if a < b {
            Edge { lo: a, hi: b }
        } else {
            Edge { lo: b, hi: a }
        }
    }

    pub fn try_new(a: Node, b: Node) -> Option<Edge> {
        (a != b).then(|| Edge::new(a, b))
    }

    pub fn other(self, x: Node) -> Node {
        if x == self.lo {
            self.hi
        } else {
            self.lo
        }
    }

    pub fn contains(self, x: Node) -> bool {
        self.lo == x || self.hi == x
    }
}

/// A sorted, duplicate-free set of edges over `n` nodes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSet {
    n: usize,
    edges: Vec<Edge>,
}

impl EdgeSet {
    pub fn empty(n: usize) -> EdgeSet {
        EdgeSet { n, edges: Vec::new() }
    }

    /// Builds a set from arbitrary pairs, normalizing orientation and dropping duplicates.
    pub fn from_pairs<I>(n: usize, pairs: I) -> Result<EdgeSet>
    where
        I: IntoIterator<Item = (Node, Node)>,
    {
        let mut edges = Vec::new();
        for (a, b) in pairs {
            if a == b {
                return invalid(format!("self-loop at node {a}"));
            }
            if a as usize >= n || b as usize >= n {
                return invalid(format!("edge ({a}, {b}) out of range for n={n}"));
            }
            edges.push(Edge::new(a, b));
        }
        Ok(Self::from_edges(n, edges))
    }

    /// Builds a set from already-normalized edges (sorted here).
    pub fn from_edges(n: usize, mut edges: Vec<Edge>) -> EdgeSet {
        edges.sort_unstable();
        edges.dedup();
        debug_assert!(edges.last().map_or(true, |e| (e.hi as usize) < n));
        EdgeSet { n, edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn as_slice(&self) -> &[Edge] {
        &self.edges
    }

    pub fn iter(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().copied()
    }

    pub fn contains(&self, e: Edge) -> bool {
        self.edges.binary_search(&e).is_ok()
    }

    pub fn index_of(&self, e: Edge) -> Option<usize> {
        self.edges.binary_search(&e).ok()
    }

    pub fn union(&self, other: &EdgeSet) -> EdgeSet {
        let mut all = Vec::with_capacity(self.len() + other.len());
        all.extend_from_slice(&self.edges);
        all.extend_from_slice(&other.edges);
        Self::from_edges(self.n.max(other.n), all)
    }

    pub fn difference(&self, other: &EdgeSet) -> EdgeSet {
        let edges = self.edges.iter().copied().filter(|e| !other.contains(*e)).collect();
        EdgeSet { n: self.n, edges }
    }

    pub fn is_subset(&self, other: &EdgeSet) -> bool {
        self.edges.iter().all(|e| other.contains(*e))
    }

    pub fn filter(&self, mut keep: impl FnMut(Edge) -> bool) -> EdgeSet {
        let edges = self.edges.iter().copied().filter(|e| keep(*e)).collect();
        EdgeSet { n: self.n, edges }
    }

    pub fn into_vec(self) -> Vec<Edge> {
        self.edges
    }
}

impl<'a> IntoIterator for &'a EdgeSet {
    type Item = &'a Edge;
    type IntoIter = std::slice::Iter<'a, Edge>;

    fn into_iter(self) -> Self::IntoIter {
        self.edges.iter()
    }
}

/// Compressed adjacency lists with sorted neighbours.
#[derive(Clone, Debug)]
pub struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<Node>,
}

impl Adjacency {
    pub fn new(edges: &EdgeSet) -> Adjacency {
        let n = edges.n();
        let mut deg = vec![0usize; n + 1];
        for e in edges {
            deg[e.lo as usize] += 1;
            deg[e.hi as usize] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + deg[i];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0 as Node; offsets[n]];
        // Edges are sorted by (lo, hi), so each list fills in ascending order
        // except for the `lo` side entries, which we sort below.
        for e in edges {
            targets[fill[e.lo as usize]] = e.hi;
            fill[e.lo as usize] += 1;
            targets[fill[e.hi as usize]] = e.lo;
            fill[e.hi as usize] += 1;
        }
        for i in 0..n {
            targets[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Adjacency { offsets, targets }
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn neighbors(&self, u: Node) -> &[Node] {
        let u = u as usize;
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    /// Position of `v` in the flat neighbour array, if adjacent to `u`.
    pub fn slot(&self, u: Node, v: Node) -> Option<usize> {
        self.neighbors(u).binary_search(&v).ok().map(|i| self.offsets[u as usize] + i)
    }

    pub(crate) fn offset(&self, u: Node) -> usize {
        self.offsets[u as usize]
    }

    pub fn degree(&self, u: Node) -> usize {
        let u = u as usize;
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn has_edge(&self, u: Node, v: Node) -> bool {
        let (a, b) = if self.degree(u) <= self.degree(v) { (u, v) } else { (v, u) };
        self.neighbors(a).binary_search(&b).is_ok()
    }

    pub fn min_degree(&self) -> usize {
        (0..self.n() as Node).map(|u| self.degree(u)).min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n() as Node).map(|u| self.degree(u)).max().unwrap_or(0)
    }

    pub fn edges(&self) -> EdgeSet {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in 0..self.n() as Node {
            for &v in self.neighbors(u) {
                if u < v {
                    out.push(Edge { lo: u, hi: v });
                }
            }
        }
        EdgeSet { n: self.n(), edges: out }
    }

    /// Hop distances from `src`; [`UNREACHED`] marks other components.
    pub fn bfs(&self, src: Node) -> Vec<u32> {
        self.bfs_bounded(src, u32::MAX)
    }

    /// Hop distances from `src`, exploring at most `max_hops` levels.
    pub fn bfs_bounded(&self, src: Node, max_hops: u32) -> Vec<u32> {
        let mut dist = vec![UNREACHED; self.n()];
        dist[src as usize] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u as usize];
            if du >= max_hops {
                continue;
            }
            for &v in self.neighbors(u) {
                if dist[v as usize] == UNREACHED {
                    dist[v as usize] = du + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Nodes within `max_hops` of `src`, with their hop distance, in BFS order.
    pub fn bfs_ball(&self, src: Node, max_hops: u32) -> Vec<(Node, u32)> {
        let mut seen = std::collections::HashMap::new();
        seen.insert(src, 0u32);
        let mut order = vec![(src, 0)];
        let mut head = 0;
        while head < order.len() {
            let (u, du) = order[head];
            head += 1;
            if du >= max_hops {
                continue;
            }
            for &v in self.neighbors(u) {
                if let std::collections::hash_map::Entry::Vacant(slot) = seen.entry(v) {
                    slot.insert(du + 1);
                    order.push((v, du + 1));
                }
            }
        }
        order
    }

    pub fn hop_distance(&self, u: Node, v: Node) -> Option<u32> {
        if u == v {
            return Some(0);
        }
        let d = self.bfs(u)[v as usize];
        (d != UNREACHED).then_some(d)
    }

    /// Connected-component label of every node, labels in first-seen order.
    pub fn components(&self) -> Vec<u32> {
        let n = self.n();
        let mut label = vec![UNREACHED; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if label[s] != UNREACHED {
                continue;
            }
            label[s] = next;
            stack.push(s as Node);
            while let Some(u) = stack.pop() {
                for &v in self.neighbors(u) {
                    if label[v as usize] == UNREACHED {
                        label[v as usize] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn component_count(&self) -> usize {
        self.components().iter().max().map_or(0, |&m| m as usize + 1)
    }

    /// True when all `n` nodes lie in one component.
    pub fn is_connected(&self) -> bool {
        self.n() <= 1 || self.component_count() == 1
    }

    pub fn isolated_count(&self) -> usize {
        (0..self.n() as Node).filter(|&u| self.degree(u) == 0).count()
    }
}

/// Size of the intersection of two sorted slices.
pub fn sorted_intersection_len(a: &[Node], b: &[Node]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}
