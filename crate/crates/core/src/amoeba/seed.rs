use crate::error::{Error, Result};
use crate::graph::{sorted_intersection_len, Adjacency, Edge, Node, UNREACHED};

/// Caps the K-subsets examined per center node in the fast search.
const SUBSETS_PER_NODE: usize = 2_000;

/// True when, for every prior category `j`, some pair of `set` is at least
/// `floors[j]` hops apart in `priors[j]` (disconnected counts as infinite).
pub fn meets_diameter_floors(set: &[Node], priors: &[Adjacency], floors: &[u32]) -> bool {
    priors.iter().zip(floors).all(|(adj, &floor)| {
        if floor == 0 {
            return true;
        }
        set.iter().any(|&a| {
            let d = adj.bfs_bounded(a, floor - 1);
            set.iter().any(|&b| d[b as usize] == UNREACHED)
        })
    })
}

fn intersect(a: &[Node], b: &[Node]) -> Vec<Node> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Closed neighbourhood `N(u) ∪ {u}`, sorted.
fn closed(adj: &Adjacency, u: Node) -> Vec<Node> {
    let nb = adj.neighbors(u);
    let pos = nb.partition_point(|&x| x < u);
    let mut out = Vec::with_capacity(nb.len() + 1);
    out.extend_from_slice(&nb[..pos]);
    out.push(u);
    out.extend_from_slice(&nb[pos..]);
    out
}

fn is_clique(adj: &Adjacency, set: &[Node]) -> bool {
    set.iter()
        .enumerate()
        .all(|(i, &a)| set[i + 1..].iter().all(|&b| adj.has_edge(a, b)))
}

/// Evenly spread indices so a capped search does not stall in one region.
fn spread(len: usize, attempts: usize) -> impl Iterator<Item = usize> {
    let step = (len / attempts.max(1)).max(1);
    (0..len).step_by(step).take(attempts)
}

/// Greedy clique search around uncovered pruned pairs.
///
/// For each tried pair `(u, v)` the clique starts at `{u, v}` and repeatedly
/// adds the common candidate with the most pruned neighbours among the
/// remaining candidates.
pub fn find_seed_clique_brute(
    pruned: &Adjacency,
    uncovered: &[Edge],
    amoeba_n: usize,
    priors: &[Adjacency],
    floors: &[u32],
    attempts: usize,
    iteration: usize,
) -> Result<Vec<Node>> {
    for i in spread(uncovered.len(), attempts) {
        let e = uncovered[i];
        let mut clique = vec![e.lo, e.hi];
        let mut cand = intersect(pruned.neighbors(e.lo), pruned.neighbors(e.hi));
        while !cand.is_empty() {
            let best = cand
                .iter()
                .copied()
                .max_by_key(|&c| (sorted_intersection_len(pruned.neighbors(c), &cand), std::cmp::Reverse(c)))
                .expect("nonempty");
            clique.push(best);
            cand = intersect(&cand, pruned.neighbors(best));
        }
        clique.sort_unstable();
        if clique.len() >= amoeba_n && meets_diameter_floors(&clique, priors, floors) {
            return Ok(clique);
        }
    }
    Err(Error::SeedNotFound {
        iteration,
        reason: format!("no greedy clique of {amoeba_n} nodes meeting the diameter floors"),
    })
}

/// Seed search through neighbourhood intersections.
///
/// For a center `u`, tries `K`-subsets `S` of the closed strict
/// neighbourhood of `u` and returns the first intersection
/// `N(S) = ∩_{w∈S} N[w]` that is a clique in the loose graph, holds at
/// least `amoeba_n` nodes and meets the diameter floors. Centers are the
/// endpoints of uncovered pairs.
#[allow(clippy::too_many_arguments)]
pub fn find_seed_clique_fast(
    strict: &Adjacency,
    loose: &Adjacency,
    uncovered: &[Edge],
    k: usize,
    amoeba_n: usize,
    priors: &[Adjacency],
    floors: &[u32],
    attempts: usize,
    iteration: usize,
) -> Result<Vec<Node>> {
    let k = k.max(1);
    for i in spread(uncovered.len(), attempts) {
        let u = uncovered[i].lo;
        let nu = closed(strict, u);
        // nodes sharing the most strict neighbours with u first
        let mut ranked: Vec<(usize, Node, Vec<Node>)> = nu
            .iter()
            .map(|&w| {
                let nw = closed(strict, w);
                (sorted_intersection_len(&nw, &nu), w, nw)
            })
            .collect();
        ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let around: Vec<Node> = ranked.iter().map(|r| r.1).collect();
        let closed_of: Vec<Vec<Node>> = ranked.into_iter().map(|r| r.2).collect();
        let mut idx: Vec<usize> = (0..k.min(around.len())).collect();
        if idx.len() < k {
            continue;
        }
        let mut examined = 0;
        loop {
            examined += 1;
            let mut inter = closed_of[idx[0]].clone();
            for &j in &idx[1..] {
                if inter.len() < amoeba_n {
                    break;
                }
                inter = intersect(&inter, &closed_of[j]);
            }
            if inter.len() >= amoeba_n
                && is_clique(loose, &inter)
                && meets_diameter_floors(&inter, priors, floors)
            {
                return Ok(inter);
            }
            if examined >= SUBSETS_PER_NODE || !next_combination(&mut idx, around.len()) {
                break;
            }
        }
    }
    Err(Error::SeedNotFound {
        iteration,
        reason: format!("no {k}-subset intersection formed a loose clique of {amoeba_n} nodes"),
    })
}

/// Advances `idx` to the next `idx.len()`-combination of `0..n`.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeSet;

    fn adj(n: usize, pairs: &[(u32, u32)]) -> Adjacency {
        Adjacency::new(&EdgeSet::from_pairs(n, pairs.iter().copied()).unwrap())
    }

    fn clique_pairs(nodes: &[u32]) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for (i, &a) in nodes.iter().enumerate() {
            for &b in &nodes[i + 1..] {
                out.push((a, b));
            }
        }
        out
    }

    #[test]
    fn combinations_enumerate() {
        let mut idx = vec![0, 1];
        let mut seen = vec![idx.clone()];
        while next_combination(&mut idx, 4) {
            seen.push(idx.clone());
        }
        assert_eq!(seen.len(), 6);
        assert_eq!(seen.last().unwrap(), &vec![2, 3]);
    }

    #[test]
    fn brute_finds_planted_clique() {
        let mut pairs = clique_pairs(&[0, 1, 2, 3, 4]);
        pairs.extend([(4, 5), (5, 6), (6, 7)]);
        let g = adj(8, &pairs);
        let unc: Vec<Edge> = g.edges().into_vec();
        let c = find_seed_clique_brute(&g, &unc, 5, &[], &[], 100, 0).unwrap();
        assert_eq!(c, vec![0, 1, 2, 3, 4]);
        assert!(matches!(
            find_seed_clique_brute(&g, &unc, 6, &[], &[], 100, 3),
            Err(Error::SeedNotFound { iteration: 3, .. })
        ));
    }

    #[test]
    fn fast_single_category_uses_neighbourhood() {
        let pairs = clique_pairs(&[0, 1, 2, 3]);
        let g = adj(6, &[pairs.as_slice(), &[(4, 5)]].concat());
        let unc = vec![Edge::new(0, 1)];
        let c = find_seed_clique_fast(&g, &g, &unc, 1, 4, &[], &[], 10, 0).unwrap();
        assert_eq!(c, vec![0, 1, 2, 3]);
    }

    #[test]
    fn diameter_floor_rules() {
        let prior = adj(6, &[(0, 1), (1, 2), (2, 3)]);
        // 0 and 3 are three hops apart; 4 is disconnected from everything
        assert!(meets_diameter_floors(&[0, 3], std::slice::from_ref(&prior), &[3]));
        assert!(!meets_diameter_floors(&[0, 3], std::slice::from_ref(&prior), &[4]));
        assert!(meets_diameter_floors(&[0, 4], std::slice::from_ref(&prior), &[100]));
        assert!(!meets_diameter_floors(&[0, 1, 2], std::slice::from_ref(&prior), &[3]));
    }

    #[test]
    fn brute_respects_prior_floor() {
        // two cliques; the first is compact in the prior graph, the second spread out
        let mut pairs = clique_pairs(&[0, 1, 2, 3]);
        pairs.extend(clique_pairs(&[4, 5, 6, 7]));
        let g = adj(8, &pairs);
        let prior = adj(8, &clique_pairs(&[0, 1, 2, 3]));
        let unc: Vec<Edge> = g.edges().into_vec();
        let c = find_seed_clique_brute(&g, &unc, 4, &[prior], &[2], 100, 1).unwrap();
        assert_eq!(c, vec![4, 5, 6, 7]);
    }
}
