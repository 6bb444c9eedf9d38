use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::graph::{Edge, EdgeSet, Node};
use crate::metric::PointSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalKind {
    ToroidalGrid,
    ThresholdGraph,
    Custom,
}

/// Deterministic local edges, optionally with a sparser connectivity witness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalStructure {
    pub edges: EdgeSet,
    pub kind: LocalKind,
    pub witness: Option<EdgeSet>,
}

impl LocalStructure {
    pub fn custom(edges: EdgeSet, witness: Option<EdgeSet>) -> Result<LocalStructure> {
        if let Some(w) = &witness {
            if !w.is_subset(&edges) {
                return invalid("witness must be a subset of the local edges");
            }
        }
        Ok(LocalStructure { edges, kind: LocalKind::Custom, witness })
    }
}

/// Axis-parallel unit edges of an exact lattice, or all pairs within `radius`.
pub fn build_local_structure(
    points: &PointSet,
    kind: LocalKind,
    radius: Option<f64>,
) -> Result<LocalStructure> {
    match kind {
        LocalKind::ToroidalGrid => {
            let edges = grid_edges(points)?;
            Ok(LocalStructure { witness: Some(edges.clone()), edges, kind })
        }
        LocalKind::ThresholdGraph => {
            let Some(r) = radius else {
                return invalid("threshold graph needs a radius");
            };
            let n = points.n() as Node;
            let mut out = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if points.dist(u, v) <= r {
                        out.push(Edge { lo: u, hi: v });
                    }
                }
            }
            Ok(LocalStructure { edges: EdgeSet::from_edges(n as usize, out), kind, witness: None })
        }
        LocalKind::Custom => invalid("custom local structures are built with LocalStructure::custom"),
    }
}

fn grid_edges(points: &PointSet) -> Result<EdgeSet> {
    let side = points.space.side;
    let d = points.dim();
    let n = points.n();
    if side.fract() != 0.0 || (side as usize).checked_pow(d as u32) != Some(n) {
        return invalid("toroidal grid needs one point per cell of an integer lattice");
    }
    let s = side as usize;
    if points.coords().iter().any(|c| c.fract() != 0.0) {
        return invalid("toroidal grid needs points exactly on the integer lattice");
    }
    let cell_of = |u: Node| points.point(u).iter().fold(0usize, |acc, &c| acc * s + c as usize);
    let mut node_at = vec![Node::MAX; n];
    for u in 0..n as Node {
        let c = cell_of(u);
        if node_at[c] != Node::MAX {
            return invalid("two points share a lattice cell");
        }
        node_at[c] = u;
    }
    let mut out = Vec::with_capacity(n * d);
    for u in 0..n as Node {
        let c = cell_of(u);
        let mut stride = 1;
        for _axis in 0..d {
            let coord = (c / stride) % s;
            let next = c - coord * stride + ((coord + 1) % s) * stride;
            if let Some(e) = Edge::try_new(u, node_at[next]) {
                out.push(e);
            }
            stride *= s;
        }
    }
    Ok(EdgeSet::from_edges(n, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Adjacency;
    use crate::metric::{generate_points, permute_category, TorusSpace};

    fn grid(side: usize, p: f64) -> PointSet {
        let s = TorusSpace::new(2, side as f64, p).unwrap();
        generate_points(s, side * side, 0.0, 0).unwrap()
    }

    #[test]
    fn grid_degree_four() {
        let g = grid(8, 2.0);
        let l = build_local_structure(&g, LocalKind::ToroidalGrid, None).unwrap();
        let adj = Adjacency::new(&l.edges);
        assert!((0..64).all(|u| adj.degree(u) == 4));
        assert_eq!(l.witness.as_ref(), Some(&l.edges));
        assert!(l.edges.iter().all(|e| g.dist(e.lo, e.hi) == 1.0));
    }

    #[test]
    fn grid_survives_relabeling() {
        let (p, _) = permute_category(&grid(6, 2.0), Some(4));
        let l = build_local_structure(&p, LocalKind::ToroidalGrid, None).unwrap();
        assert_eq!(l.edges.len(), 72);
        assert!(l.edges.iter().all(|e| p.dist(e.lo, e.hi) == 1.0));
    }

    #[test]
    fn grid_hops_equal_l1_distance() {
        let g = grid(16, 1.0);
        let l = build_local_structure(&g, LocalKind::ToroidalGrid, None).unwrap();
        let adj = Adjacency::new(&l.edges);
        for u in 0..256 {
            let hops = adj.bfs(u);
            for v in 0..256 {
                assert_eq!(hops[v as usize] as f64, g.dist(u, v));
            }
        }
    }

    #[test]
    fn jittered_grid_rejected() {
        let s = TorusSpace::euclidean(2, 8.0).unwrap();
        let j = generate_points(s, 64, 0.3, 1).unwrap();
        assert!(build_local_structure(&j, LocalKind::ToroidalGrid, None).is_err());
    }

    #[test]
    fn threshold_graph() {
        let g = grid(5, 2.0);
        let all = build_local_structure(&g, LocalKind::ThresholdGraph, Some(10.0)).unwrap();
        assert_eq!(all.edges.len(), 25 * 24 / 2);
        let unit = build_local_structure(&g, LocalKind::ThresholdGraph, Some(1.0)).unwrap();
        let grid = build_local_structure(&g, LocalKind::ToroidalGrid, None).unwrap();
        assert_eq!(unit.edges, grid.edges);
        assert!(build_local_structure(&g, LocalKind::ThresholdGraph, None).is_err());
    }

    #[test]
    fn custom_witness_must_be_subset() {
        let a = EdgeSet::from_pairs(3, [(0, 1)]).unwrap();
        let b = EdgeSet::from_pairs(3, [(1, 2)]).unwrap();
        assert!(LocalStructure::custom(a.clone(), Some(b)).is_err());
        assert!(LocalStructure::custom(a.clone(), Some(a)).is_ok());
    }
}
