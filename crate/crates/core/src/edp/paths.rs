use crate::error::{invalid, Error, Result};
use crate::graph::{EdgeSet, Node};

/// Default limit on search states per tested pair.
pub const DEFAULT_STATE_CAP: usize = 1_000_000;

/// Edge-indexed adjacency with liveness flags, for repeated path searches.
#[derive(Clone, Debug)]
pub(crate) struct EdgeGraph {
    pub(crate) ends: Vec<(Node, Node)>,
    adj: Vec<Vec<(Node, u32)>>,
}

impl EdgeGraph {
    pub(crate) fn new(edges: &EdgeSet) -> EdgeGraph {
        let mut adj = vec![Vec::new(); edges.n()];
        let mut ends = Vec::with_capacity(edges.len());
        for (i, e) in edges.iter().enumerate() {
            adj[e.lo as usize].push((e.hi, i as u32));
            adj[e.hi as usize].push((e.lo, i as u32));
            ends.push((e.lo, e.hi));
        }
        EdgeGraph { ends, adj }
    }

    pub(crate) fn n(&self) -> usize {
        self.adj.len()
    }

    pub(crate) fn m(&self) -> usize {
        self.ends.len()
    }
}

/// Scratch buffers for one searching thread.
pub(crate) struct Search {
    dist: Vec<u32>,
    touched: Vec<Node>,
    on_path: Vec<bool>,
    used: Vec<bool>,
    states: usize,
    cap: usize,
}

impl Search {
    pub(crate) fn new(n: usize, m: usize, cap: usize) -> Search {
        Search {
            dist: vec![u32::MAX; n],
            touched: Vec::new(),
            on_path: vec![false; n],
            used: vec![false; m],
            states: 0,
            cap,
        }
    }

    fn tick(&mut self) -> Result<()> {
        self.states += 1;
        if self.states > self.cap {
            return Err(Error::ResourceExceeded(format!(
                "bounded disjoint path search visited more than {} states",
                self.cap
            )));
        }
        Ok(())
    }

    /// Finds `p` edge-disjoint `u`–`v` paths of at most `h` edges using only
    /// live edges. Returns the edge ids of the chosen paths.
    pub(crate) fn find(
        &mut self,
        g: &EdgeGraph,
        alive: &[bool],
        u: Node,
        v: Node,
        p: usize,
        h: usize,
    ) -> Result<Option<Vec<Vec<u32>>>> {
        self.states = 0;
        let live_deg = |x: Node| g.adj[x as usize].iter().filter(|a| alive[a.1 as usize]).count();
        if live_deg(u) < p || live_deg(v) < p {
            return Ok(None);
        }
        self.bfs_from(g, alive, v, h.saturating_sub(1) as u32);
        let mut paths = Vec::new();
        let mut stack = Vec::with_capacity(h);
        self.on_path[u as usize] = true;
        let r = self.enumerate(g, alive, u, v, h, &mut stack, &mut paths);
        self.on_path[u as usize] = false;
        for &x in &self.touched {
            self.dist[x as usize] = u32::MAX;
        }
        self.touched.clear();
        r?;
        if paths.len() < p {
            return Ok(None);
        }
        paths.sort_by_key(|q| q.len());
        let mut chosen = Vec::with_capacity(p);
        let found = self.choose(&paths, 0, p, &mut chosen);
        for &i in &chosen {
            for &e in &paths[i] {
                self.used[e as usize] = false;
            }
        }
        Ok(found?.then(|| chosen.iter().map(|&i| paths[i].clone()).collect()))
    }

    fn bfs_from(&mut self, g: &EdgeGraph, alive: &[bool], src: Node, depth: u32) {
        self.dist[src as usize] = 0;
        self.touched.push(src);
        let mut head = 0;
        while head < self.touched.len() {
            let x = self.touched[head];
            head += 1;
            let dx = self.dist[x as usize];
            if dx == depth {
                continue;
            }
            for &(y, e) in &g.adj[x as usize] {
                if alive[e as usize] && self.dist[y as usize] == u32::MAX {
                    self.dist[y as usize] = dx + 1;
                    self.touched.push(y);
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn enumerate(
        &mut self,
        g: &EdgeGraph,
        alive: &[bool],
        at: Node,
        v: Node,
        left: usize,
        stack: &mut Vec<u32>,
        out: &mut Vec<Vec<u32>>,
    ) -> Result<()> {
        for &(y, e) in &g.adj[at as usize] {
            if !alive[e as usize] {
                continue;
            }
            self.tick()?;
            if y == v {
                let mut q = stack.clone();
                q.push(e);
                out.push(q);
            } else if left > 1 && !self.on_path[y as usize] && (self.dist[y as usize] as usize) < left {
                self.on_path[y as usize] = true;
                stack.push(e);
                let r = self.enumerate(g, alive, y, v, left - 1, stack, out);
                stack.pop();
                self.on_path[y as usize] = false;
                r?;
            }
        }
        Ok(())
    }

    fn choose(&mut self, paths: &[Vec<u32>], start: usize, need: usize, chosen: &mut Vec<usize>) -> Result<bool> {
        if need == 0 {
            return Ok(true);
        }
        for i in start..paths.len() {
            if paths.len() - i < need {
                break;
            }
            self.tick()?;
            if paths[i].iter().any(|&e| self.used[e as usize]) {
                continue;
            }
            paths[i].iter().for_each(|&e| self.used[e as usize] = true);
            chosen.push(i);
            if self.choose(paths, i + 1, need - 1, chosen)? {
                return Ok(true);
            }
            chosen.pop();
            paths[i].iter().for_each(|&e| self.used[e as usize] = false);
        }
        Ok(false)
    }
}

/// Whether `p` edge-disjoint `u`–`v` paths of at most `h` edges exist.
///
/// Exact. Fails with [`Error::ResourceExceeded`] once the search passes
/// `cap` states.
pub fn has_p_disjoint_bounded_paths(
    edges: &EdgeSet,
    u: Node,
    v: Node,
    p: usize,
    h: usize,
    cap: usize,
) -> Result<bool> {
    Ok(disjoint_bounded_paths(edges, u, v, p, h, cap)?.is_some())
}

/// Like [`has_p_disjoint_bounded_paths`] but returns the witnessing paths as
/// node sequences from `u` to `v`.
pub fn disjoint_bounded_paths(
    edges: &EdgeSet,
    u: Node,
    v: Node,
    p: usize,
    h: usize,
    cap: usize,
) -> Result<Option<Vec<Vec<Node>>>> {
    if u == v {
        return invalid("paths need distinct endpoints");
    }
    if u as usize >= edges.n() || v as usize >= edges.n() {
        return invalid("endpoint outside 0..n");
    }
    if p == 0 || h == 0 {
        return invalid("need p >= 1 and h >= 1");
    }
    let g = EdgeGraph::new(edges);
    let alive = vec![true; g.m()];
    let mut s = Search::new(g.n(), g.m(), cap);
    let found = s.find(&g, &alive, u, v, p, h)?;
    Ok(found.map(|paths| {
        paths
            .into_iter()
            .map(|q| {
                let mut at = u;
                let mut nodes = vec![u];
                for e in q {
                    let (a, b) = g.ends[e as usize];
                    at = if a == at { b } else { a };
                    nodes.push(at);
                }
                nodes
            })
            .collect()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;
    use crate::rng;
    use rand::Rng;

    fn grid(side: u32) -> EdgeSet {
        let id = |x: u32, y: u32| (x % side) * side + y % side;
        let mut p = Vec::new();
        for x in 0..side {
            for y in 0..side {
                p.push((id(x, y), id(x + 1, y)));
                p.push((id(x, y), id(x, y + 1)));
            }
        }
        EdgeSet::from_pairs((side * side) as usize, p).unwrap()
    }

    #[test]
    fn small_cases() {
        let e = EdgeSet::from_pairs(3, [(0, 1), (1, 2)]).unwrap();
        assert!(has_p_disjoint_bounded_paths(&e, 0, 1, 1, 1, DEFAULT_STATE_CAP).unwrap());
        assert!(!has_p_disjoint_bounded_paths(&e, 0, 2, 2, 2, DEFAULT_STATE_CAP).unwrap());
        assert!(has_p_disjoint_bounded_paths(&e, 0, 2, 1, 2, DEFAULT_STATE_CAP).unwrap());
        assert!(!has_p_disjoint_bounded_paths(&e, 0, 2, 1, 1, DEFAULT_STATE_CAP).unwrap());
        assert!(has_p_disjoint_bounded_paths(&e, 0, 0, 1, 1, DEFAULT_STATE_CAP).is_err());
    }

    #[test]
    fn grid_edge_has_three_short_paths() {
        let g = grid(8);
        let paths = disjoint_bounded_paths(&g, 0, 1, 3, 3, DEFAULT_STATE_CAP).unwrap().unwrap();
        let mut lens: Vec<usize> = paths.iter().map(|q| q.len() - 1).collect();
        lens.sort_unstable();
        assert_eq!(lens, vec![1, 3, 3]);
        assert!(!has_p_disjoint_bounded_paths(&g, 0, 1, 4, 3, DEFAULT_STATE_CAP).unwrap());
        assert!(!has_p_disjoint_bounded_paths(&g, 0, 1, 5, 9, DEFAULT_STATE_CAP).unwrap());
    }

    #[test]
    fn cap_is_a_hard_error() {
        let mut p = Vec::new();
        for a in 0..12u32 {
            for b in a + 1..12 {
                p.push((a, b));
            }
        }
        let k12 = EdgeSet::from_pairs(12, p).unwrap();
        assert!(matches!(has_p_disjoint_bounded_paths(&k12, 0, 1, 3, 6, 1000), Err(Error::ResourceExceeded(_))));
    }

    /// All simple paths by plain recursion, then every p-subset.
    fn oracle(e: &EdgeSet, u: Node, v: Node, p: usize, h: usize) -> bool {
        fn walk(e: &EdgeSet, at: Node, v: Node, h: usize, seen: &mut Vec<Node>, path: &mut Vec<Edge>, out: &mut Vec<Vec<Edge>>) {
            for f in e.iter().filter(|f| f.contains(at)) {
                let y = f.other(at);
                if seen.contains(&y) {
                    continue;
                }
                path.push(f);
                if y == v {
                    out.push(path.clone());
                } else if path.len() < h {
                    seen.push(y);
                    walk(e, y, v, h, seen, path, out);
                    seen.pop();
                }
                path.pop();
            }
        }
        let mut all = Vec::new();
        walk(e, u, v, h, &mut vec![u], &mut Vec::new(), &mut all);
        fn pick(all: &[Vec<Edge>], from: usize, need: usize, used: &mut Vec<Edge>) -> bool {
            if need == 0 {
                return true;
            }
            (from..all.len()).any(|i| {
                if all[i].iter().any(|f| used.contains(f)) {
                    return false;
                }
                let keep = used.len();
                used.extend(&all[i]);
                let ok = pick(all, i + 1, need - 1, used);
                used.truncate(keep);
                ok
            })
        }
        pick(&all, 0, p, &mut Vec::new())
    }

    #[test]
    fn agrees_with_exhaustive_oracle() {
        let mut r = rng::rng(21);
        for trial in 0..40 {
            let n = r.random_range(5..12u32);
            let m = r.random_range(n as usize..=60.min((n * (n - 1) / 2) as usize));
            let pairs: Vec<(u32, u32)> = (0..m * 2)
                .map(|_| (r.random_range(0..n), r.random_range(0..n)))
                .filter(|(a, b)| a != b)
                .take(m)
                .collect();
            let e = EdgeSet::from_pairs(n as usize, pairs).unwrap();
            assert!(e.len() <= 60);
            for f in e.iter() {
                for p in 1..=4 {
                    for h in 1..=4 {
                        let got = has_p_disjoint_bounded_paths(&e, f.lo, f.hi, p, h, DEFAULT_STATE_CAP).unwrap();
                        assert_eq!(got, oracle(&e, f.lo, f.hi, p, h), "trial {trial} {f:?} p={p} h={h}");
                    }
                }
            }
        }
    }
}
