use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::LocalStructure;
use crate::error::{invalid, Result};
use crate::graph::{Edge, EdgeSet};
use crate::rng;

/// Hidden provenance of one union edge.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Origin {
    /// Bit `i` set when category `i` sampled the edge.
    pub categories: u64,
    pub local: bool,
}

impl Origin {
    pub fn has(&self, cat: usize) -> bool {
        self.categories >> cat & 1 == 1
    }

    pub fn category_list(&self) -> Vec<usize> {
        (0..64).filter(|&i| self.has(i)).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.categories == 0 && !self.local
    }
}

/// The union of all category edge sets, with ground truth kept alongside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplexGraph {
    pub k: usize,
    edges: EdgeSet,
    origin: Vec<Origin>,
}

impl MultiplexGraph {
    pub fn n(&self) -> usize {
        self.edges.n()
    }

    /// The unlabeled union, which is all a reconstruction gets to see.
    pub fn observed(&self) -> &EdgeSet {
        &self.edges
    }

    pub fn origins(&self) -> impl Iterator<Item = (Edge, Origin)> + '_ {
        self.edges.iter().zip(self.origin.iter().copied())
    }

    pub fn origin(&self, e: Edge) -> Option<Origin> {
        self.edges.index_of(e).map(|i| self.origin[i])
    }

    /// Edges sampled by category `cat`.
    pub fn category_edges(&self, cat: usize) -> EdgeSet {
        let edges = self.origins().filter(|(_, o)| o.has(cat)).map(|(e, _)| e).collect();
        EdgeSet::from_edges(self.n(), edges)
    }

    pub fn local_edges(&self) -> EdgeSet {
        let edges = self.origins().filter(|(_, o)| o.local).map(|(e, _)| e).collect();
        EdgeSet::from_edges(self.n(), edges)
    }

    /// Rebuilds a graph from stored ground truth.
    pub fn from_parts(k: usize, edges: EdgeSet, origin: Vec<Origin>) -> Result<MultiplexGraph> {
        if edges.len() != origin.len() {
            return invalid("origin labels must align with edges");
        }
        if origin.iter().any(|o| o.is_empty() || o.categories >> k != 0) {
            return invalid("every edge needs an origin among the declared categories");
        }
        Ok(MultiplexGraph { k, edges, origin })
    }
}

/// Takes the union of the category edge sets plus any local edges.
pub fn build_multiplex(
    n: usize,
    categories: &[EdgeSet],
    local: Option<&LocalStructure>,
) -> Result<MultiplexGraph> {
    if categories.len() > 64 {
        return invalid("at most 64 categories are supported");
    }
    if categories.iter().any(|c| c.n() != n) || local.is_some_and(|l| l.edges.n() != n) {
        return invalid("all edge sets must share the node count");
    }
    let mut tagged: Vec<(Edge, Origin)> = Vec::new();
    for (i, set) in categories.iter().enumerate() {
        tagged.extend(set.iter().map(|e| (e, Origin { categories: 1 << i, local: false })));
    }
    if let Some(l) = local {
        tagged.extend(l.edges.iter().map(|e| (e, Origin { categories: 0, local: true })));
    }
    tagged.sort_unstable_by_key(|t| t.0);
    let mut edges = Vec::new();
    let mut origin: Vec<Origin> = Vec::new();
    for (e, o) in tagged {
        if edges.last() == Some(&e) {
            let last = origin.last_mut().expect("aligned");
            last.categories |= o.categories;
            last.local |= o.local;
        } else {
            edges.push(e);
            origin.push(o);
        }
    }
    Ok(MultiplexGraph { k: categories.len(), edges: EdgeSet::from_edges(n, edges), origin })
}

/// Splits the union into `stages` random parts. Every non-local edge goes to
/// one uniformly chosen stage; local edges go to all of them.
pub fn partition_edges(graph: &MultiplexGraph, stages: usize, seed: u64) -> Result<Vec<EdgeSet>> {
    if stages == 0 {
        return invalid("need at least one stage");
    }
    let mut parts = vec![Vec::new(); stages];
    let mut r = rng::rng(seed);
    for (e, o) in graph.origins() {
        if o.local {
            parts.iter_mut().for_each(|p| p.push(e));
        } else {
            parts[r.random_range(0..stages)].push(e);
        }
    }
    Ok(parts.into_iter().map(|p| EdgeSet::from_edges(graph.n(), p)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::LocalKind;
    use proptest::prelude::*;

    fn set(n: usize, pairs: &[(u32, u32)]) -> EdgeSet {
        EdgeSet::from_pairs(n, pairs.iter().copied()).unwrap()
    }

    #[test]
    fn disjoint_sets_add_up() {
        let a = set(6, &[(0, 1), (2, 3)]);
        let b = set(6, &[(4, 5)]);
        let g = build_multiplex(6, &[a, b], None).unwrap();
        assert_eq!(g.observed().len(), 3);
    }

    #[test]
    fn shared_edge_has_both_origins() {
        let a = set(4, &[(0, 1)]);
        let b = set(4, &[(1, 0), (2, 3)]);
        let g = build_multiplex(4, &[a, b], None).unwrap();
        let o = g.origin(Edge::new(0, 1)).unwrap();
        assert_eq!(o.category_list(), vec![0, 1]);
        assert!(!o.local);
    }

    #[test]
    fn single_category_is_identity() {
        let a = set(5, &[(0, 4), (1, 2), (2, 3)]);
        let g = build_multiplex(5, std::slice::from_ref(&a), None).unwrap();
        assert_eq!(g.observed(), &a);
        assert_eq!(g.category_edges(0), a);
    }

    #[test]
    fn local_edges_flagged() {
        let a = set(4, &[(0, 2)]);
        let l = LocalStructure { edges: set(4, &[(0, 1), (0, 2)]), kind: LocalKind::Custom, witness: None };
        let g = build_multiplex(4, &[a], Some(&l)).unwrap();
        assert_eq!(g.local_edges().len(), 2);
        assert_eq!(g.category_edges(0).len(), 1);
        assert!(g.origin(Edge::new(0, 2)).unwrap().local);
    }

    #[test]
    fn one_stage_is_everything() {
        let g = build_multiplex(6, &[set(6, &[(0, 1), (3, 4), (2, 5)])], None).unwrap();
        let parts = partition_edges(&g, 1, 3).unwrap();
        assert_eq!(&parts[0], g.observed());
        assert!(partition_edges(&g, 0, 3).is_err());
    }

    #[test]
    fn stage_sizes_concentrate() {
        let n = 200;
        let pairs: Vec<(u32, u32)> = (0..n as u32)
            .flat_map(|u| (u + 1..n as u32).map(move |v| (u, v)))
            .take(10_000)
            .collect();
        let g = build_multiplex(n, &[set(n, &pairs)], None).unwrap();
        let parts = partition_edges(&g, 4, 17).unwrap();
        for p in &parts {
            assert!((p.len() as i64 - 2500).abs() <= 150, "{}", p.len());
        }
    }

    proptest! {
        #[test]
        fn ground_truth_preserved(seed in 0u64..500, k in 1usize..4) {
            use rand::Rng;
            let n = 30;
            let mut r = rng::rng(seed);
            let cats: Vec<EdgeSet> = (0..k)
                .map(|_| {
                    let pairs: Vec<(u32, u32)> = (0..40)
                        .map(|_| (r.random_range(0..n as u32), r.random_range(0..n as u32)))
                        .filter(|(a, b)| a != b)
                        .collect();
                    set(n, &pairs)
                })
                .collect();
            let g = build_multiplex(n, &cats, None).unwrap();
            for (i, c) in cats.iter().enumerate() {
                prop_assert_eq!(&g.category_edges(i), c);
            }
            let parts = partition_edges(&g, 3, seed).unwrap();
            let total: usize = parts.iter().map(|p| p.len()).sum();
            prop_assert_eq!(total, g.observed().len());
            let union = parts.iter().fold(EdgeSet::empty(n), |a, b| a.union(b));
            prop_assert_eq!(&union, g.observed());
        }
    }
}
