//! Text formats for points, edge lists, labels and estimates.
//!
//! Edge-list files start with `#` header lines of `key=value` tokens, one of
//! which is `n=<n>`, followed by `u v` lines with `u < v` in ascending order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::amoeba::{DistanceLabels, LabelEntry};
use crate::error::{Error, Result};
use crate::estimate::DistanceEstimate;
use crate::gen::{MultiplexGraph, Origin};
use crate::graph::{Edge, EdgeSet, Node};
use crate::metric::{PointSet, TorusSpace};

/// Header of a text file: the leading word of each `#` line plus all
/// `key=value` tokens.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Header {
    pub tags: Vec<String>,
    pub values: BTreeMap<String, String>,
}

impl Header {
    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Option<T> {
        self.values.get(key).and_then(|v| v.parse().ok())
    }

    fn absorb(&mut self, line: &str) {
        for tok in line.trim_start_matches('#').split_whitespace() {
            match tok.split_once('=') {
                Some((k, v)) => {
                    self.values.insert(k.to_string(), v.to_string());
                }
                None => self.tags.push(tok.to_string()),
            }
        }
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    tok.and_then(|t| t.trim().parse().ok()).ok_or_else(|| parse_err(line, format!("bad {what}")))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(fs::File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    Ok(BufReader::new(fs::File::open(path)?))
}

pub fn write_edges(mut w: impl Write, edges: &EdgeSet, header: &[String]) -> Result<()> {
    for h in header {
        writeln!(w, "# {h}")?;
    }
    writeln!(w, "# n={}", edges.n())?;
    for e in edges.iter() {
        writeln!(w, "{} {}", e.lo, e.hi)?;
    }
    Ok(())
}

pub fn read_edges(r: impl BufRead) -> Result<(EdgeSet, Header)> {
    let mut header = Header::default();
    let mut edges = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let no = i + 1;
        if line.starts_with('#') {
            header.absorb(&line);
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut t = line.split_whitespace();
        let u: Node = num(t.next(), no, "node")?;
        let v: Node = num(t.next(), no, "node")?;
        if u >= v {
            return Err(parse_err(no, "edge lines need u < v"));
        }
        let e = Edge::new(u, v);
        if edges.last().is_some_and(|&l| l >= e) {
            return Err(parse_err(no, "edges must be strictly ascending"));
        }
        edges.push(e);
    }
    let n: usize = header.get("n").ok_or_else(|| parse_err(1, "missing n= header"))?;
    if edges.iter().any(|e| e.hi as usize >= n) {
        return Err(parse_err(0, "edge endpoint outside 0..n"));
    }
    Ok((EdgeSet::from_edges(n, edges), header))
}

pub fn save_edges(path: &Path, edges: &EdgeSet, header: &[String]) -> Result<()> {
    let mut w = create(path)?;
    write_edges(&mut w, edges, header)?;
    Ok(w.flush()?)
}

pub fn load_edges(path: &Path) -> Result<(EdgeSet, Header)> {
    read_edges(open(path)?)
}

pub fn write_positions(mut w: impl Write, points: &PointSet) -> Result<()> {
    let d = points.dim();
    let cols: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    writeln!(w, "node,{}", cols.join(","))?;
    let mut line = String::new();
    for u in 0..points.n() as Node {
        line.clear();
        write!(line, "{u}").expect("string write");
        for c in points.point(u) {
            write!(line, ",{c}").expect("string write");
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_positions(r: impl BufRead, space: TorusSpace, density_bound: usize) -> Result<PointSet> {
    let mut coords = Vec::new();
    let mut expect = 0usize;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let no = i + 1;
        if i == 0 {
            let cols = line.split(',').count();
            if !line.starts_with("node") || cols != space.dim + 1 {
                return Err(parse_err(no, format!("expected node,x1..x{}", space.dim)));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut t = line.split(',');
        let u: usize = num(t.next(), no, "node")?;
        if u != expect {
            return Err(parse_err(no, "nodes must be listed 0..n in order"));
        }
        for _ in 0..space.dim {
            coords.push(num::<f64>(t.next(), no, "coordinate")?);
        }
        expect += 1;
    }
    PointSet::new(space, coords, density_bound)
}

pub fn save_positions(path: &Path, points: &PointSet) -> Result<()> {
    let mut w = create(path)?;
    write_positions(&mut w, points)?;
    Ok(w.flush()?)
}

pub fn load_positions(path: &Path, space: TorusSpace, density_bound: usize) -> Result<PointSet> {
    read_positions(open(path)?, space, density_bound)
}

pub fn write_permutation(mut w: impl Write, perm: &[Node]) -> Result<()> {
    writeln!(w, "node,image")?;
    for (u, &p) in perm.iter().enumerate() {
        writeln!(w, "{u},{p}")?;
    }
    Ok(())
}

pub fn read_permutation(r: impl BufRead) -> Result<Vec<Node>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate().skip(1) {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut t = line.split(',');
        let u: usize = num(t.next(), i + 1, "node")?;
        if u != out.len() {
            return Err(parse_err(i + 1, "nodes must be listed 0..n in order"));
        }
        out.push(num(t.next(), i + 1, "image")?);
    }
    if !crate::metric::is_permutation(&out) {
        return Err(parse_err(0, "not a permutation"));
    }
    Ok(out)
}

pub fn save_permutation(path: &Path, perm: &[Node]) -> Result<()> {
    let mut w = create(path)?;
    write_permutation(&mut w, perm)?;
    Ok(w.flush()?)
}

/// Sidecar lines `u v cats [local]`, with `cats` a comma list.
pub fn write_ground_truth(mut w: impl Write, g: &MultiplexGraph) -> Result<()> {
    writeln!(w, "# truth k={}", g.k)?;
    writeln!(w, "# n={}", g.n())?;
    for (e, o) in g.origins() {
        let cats: Vec<String> = o.category_list().iter().map(|c| c.to_string()).collect();
        let mut line = format!("{} {}", e.lo, e.hi);
        if !cats.is_empty() {
            line.push(' ');
            line.push_str(&cats.join(","));
        }
        if o.local {
            line.push_str(" local");
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_ground_truth(r: impl BufRead) -> Result<MultiplexGraph> {
    let mut header = Header::default();
    let mut edges = Vec::new();
    let mut origin = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let no = i + 1;
        if line.starts_with('#') {
            header.absorb(&line);
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut t = line.split_whitespace();
        let u: Node = num(t.next(), no, "node")?;
        let v: Node = num(t.next(), no, "node")?;
        let e = Edge::try_new(u, v).ok_or_else(|| parse_err(no, "self-loop"))?;
        let mut o = Origin::default();
        for tok in t {
            if tok == "local" {
                o.local = true;
            } else {
                for c in tok.split(',') {
                    let c: u32 = num(Some(c), no, "category")?;
                    if c >= 64 {
                        return Err(parse_err(no, "category index above 63"));
                    }
                    o.categories |= 1 << c;
                }
            }
        }
        edges.push(e);
        origin.push(o);
    }
    let n: usize = header.get("n").ok_or_else(|| parse_err(1, "missing n= header"))?;
    let k: usize = header.get("k").ok_or_else(|| parse_err(1, "missing k= header"))?;
    if edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(parse_err(0, "edges must be strictly ascending"));
    }
    if edges.iter().any(|e| e.hi as usize >= n) {
        return Err(parse_err(0, "edge endpoint outside 0..n"));
    }
    MultiplexGraph::from_parts(k, EdgeSet::from_edges(n, edges), origin)
}

pub fn save_ground_truth(path: &Path, g: &MultiplexGraph) -> Result<()> {
    let mut w = create(path)?;
    write_ground_truth(&mut w, g)?;
    Ok(w.flush()?)
}

pub fn load_ground_truth(path: &Path) -> Result<MultiplexGraph> {
    read_ground_truth(open(path)?)
}

pub fn write_labels(mut w: impl Write, labels: &DistanceLabels) -> Result<()> {
    let scales: Vec<String> = labels.scales.iter().map(|s| s.to_string()).collect();
    writeln!(w, "# labels n={} scales={}", labels.n(), scales.join(","))?;
    writeln!(w, "node,beacon,scale,hops")?;
    for u in 0..labels.n() as Node {
        for l in labels.label(u) {
            writeln!(w, "{u},{},{},{}", l.beacon, l.scale, l.hops)?;
        }
    }
    Ok(())
}

pub fn read_labels(r: impl BufRead) -> Result<DistanceLabels> {
    let mut header = Header::default();
    let mut rows: Vec<(usize, LabelEntry)> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let no = i + 1;
        if line.starts_with('#') {
            header.absorb(&line);
            continue;
        }
        if line.starts_with("node") || line.trim().is_empty() {
            continue;
        }
        let mut t = line.split(',');
        let u: usize = num(t.next(), no, "node")?;
        let beacon = num(t.next(), no, "beacon")?;
        let scale = num(t.next(), no, "scale")?;
        let hops = num(t.next(), no, "hops")?;
        rows.push((u, LabelEntry { beacon, scale, hops }));
    }
    let n: usize = header.get("n").ok_or_else(|| parse_err(1, "missing n= header"))?;
    let scales = match header.values.get("scales") {
        Some(s) if !s.is_empty() => {
            s.split(',').map(|x| num(Some(x), 1, "scale")).collect::<Result<Vec<u32>>>()?
        }
        _ => Vec::new(),
    };
    let mut labels = vec![Vec::new(); n];
    for (u, l) in rows {
        labels.get_mut(u).ok_or_else(|| parse_err(0, "label node outside 0..n"))?.push(l);
    }
    Ok(DistanceLabels::from_labels(scales, labels))
}

/// Writes `u,v,value` for `u < v`. Pairs without a finite value are skipped.
pub fn write_estimates(
    mut w: impl Write,
    n: usize,
    pairs: impl IntoIterator<Item = (Edge, f64)>,
    normalizer: f64,
    algorithm: &str,
) -> Result<()> {
    writeln!(w, "# estimate algorithm={algorithm} normalizer={normalizer} n={n}")?;
    writeln!(w, "u,v,value")?;
    for (e, x) in pairs {
        if x.is_finite() {
            writeln!(w, "{},{},{x}", e.lo, e.hi)?;
        }
    }
    Ok(())
}

/// All pairs of an estimate in upper-triangle order.
pub fn all_pairs(est: &DistanceEstimate) -> impl Iterator<Item = (Edge, f64)> + '_ {
    let n = est.n() as Node;
    (0..n).flat_map(move |u| {
        let row = est.row(u);
        (u + 1..n).map(move |v| (Edge::new(u, v), row[v as usize]))
    })
}

/// Reads an estimates file as an overlay on an all-missing base.
pub fn read_estimates(r: impl BufRead) -> Result<(DistanceEstimate, Header)> {
    let mut header = Header::default();
    let mut pairs = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let no = i + 1;
        if line.starts_with('#') {
            header.absorb(&line);
            continue;
        }
        if line.starts_with("u,") || line.trim().is_empty() {
            continue;
        }
        let mut t = line.split(',');
        let u: Node = num(t.next(), no, "node")?;
        let v: Node = num(t.next(), no, "node")?;
        let x: f64 = num(t.next(), no, "value")?;
        pairs.push((Edge::try_new(u, v).ok_or_else(|| parse_err(no, "self pair"))?, x));
    }
    let n: usize = header.get("n").ok_or_else(|| parse_err(1, "missing n= header"))?;
    if pairs.iter().any(|p| p.0.hi as usize >= n) {
        return Err(parse_err(0, "pair outside 0..n"));
    }
    let missing = DistanceEstimate::Spanner { adj: crate::graph::Adjacency::new(&EdgeSet::empty(n)), scale: 1.0 };
    Ok((DistanceEstimate::overlay(missing, pairs), header))
}

/// Pairs file: `u v` lines, for evaluating only selected pairs.
pub fn read_pairs(r: impl BufRead) -> Result<Vec<(Node, Node)>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let mut t = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty());
        out.push((num(t.next(), i + 1, "node")?, num(t.next(), i + 1, "node")?));
    }
    Ok(out)
}

pub fn save_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> Result<()>,
{
    let mut w = create(path)?;
    f(&mut w)?;
    Ok(w.flush()?)
}

pub fn load_with<T, F>(path: &Path, f: F) -> Result<T>
where
    F: FnOnce(BufReader<fs::File>) -> Result<T>,
{
    f(open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::build_multiplex;
    use crate::metric::generate_points;
    use proptest::prelude::*;

    #[test]
    fn edge_list_round_trip() {
        let e = EdgeSet::from_pairs(6, [(3, 1), (0, 5), (2, 4)]).unwrap();
        let mut buf = Vec::new();
        write_edges(&mut buf, &e, &["pruned m2=7".into()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "# pruned m2=7\n# n=6\n0 5\n1 3\n2 4\n");
        let (back, h) = read_edges(&buf[..]).unwrap();
        assert_eq!(back, e);
        assert_eq!(h.get::<usize>("m2"), Some(7));
        assert_eq!(h.tags, vec!["pruned".to_string()]);
    }

    #[test]
    fn edge_list_rejects_bad_input() {
        for bad in ["# n=4\n2 1\n", "# n=4\n0 1\n0 1\n", "0 1\n", "# n=2\n0 3\n", "# n=4\n0 x\n"] {
            assert!(read_edges(bad.as_bytes()).is_err(), "{bad}");
        }
    }

    #[test]
    fn positions_and_permutations_round_trip() {
        let s = TorusSpace::euclidean(2, 4.0).unwrap();
        let p = generate_points(s, 16, 0.5, 3).unwrap();
        let mut buf = Vec::new();
        write_positions(&mut buf, &p).unwrap();
        assert!(buf.starts_with(b"node,x1,x2\n"));
        let back = read_positions(&buf[..], s, p.density_bound).unwrap();
        assert_eq!(back.coords(), p.coords());
        let perm: Vec<Node> = vec![2, 0, 3, 1];
        let mut buf = Vec::new();
        write_permutation(&mut buf, &perm).unwrap();
        assert_eq!(read_permutation(&buf[..]).unwrap(), perm);
        assert!(read_permutation("node,image\n0,0\n1,0\n".as_bytes()).is_err());
    }

    #[test]
    fn ground_truth_round_trip() {
        let a = EdgeSet::from_pairs(5, [(0, 1), (1, 2)]).unwrap();
        let b = EdgeSet::from_pairs(5, [(0, 1), (3, 4)]).unwrap();
        let local = crate::gen::LocalStructure::custom(EdgeSet::from_pairs(5, [(1, 2), (2, 3)]).unwrap(), None).unwrap();
        let g = build_multiplex(5, &[a, b], Some(&local)).unwrap();
        let mut buf = Vec::new();
        write_ground_truth(&mut buf, &g).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("0 1 0,1\n"));
        assert!(text.contains("1 2 0 local\n"));
        assert!(text.contains("2 3 local\n"));
        assert_eq!(read_ground_truth(&buf[..]).unwrap(), g);
    }

    #[test]
    fn estimates_round_trip() {
        let d = DistanceEstimate::dense(3, vec![0.0, 1.5, 2.0, 1.5, 0.0, f64::INFINITY, 2.0, f64::INFINITY, 0.0]).unwrap();
        let mut buf = Vec::new();
        write_estimates(&mut buf, 3, all_pairs(&d), 0.75, "two-ball").unwrap();
        let (back, h) = read_estimates(&buf[..]).unwrap();
        assert_eq!(h.values["algorithm"], "two-ball");
        assert_eq!(h.get::<f64>("normalizer"), Some(0.75));
        assert_eq!(back.get(1, 0), 1.5);
        assert_eq!(back.get(0, 2), 2.0);
        assert!(back.get(1, 2).is_infinite());
    }

    proptest! {
        #[test]
        fn random_edge_sets_round_trip(pairs in prop::collection::vec((0u32..50, 0u32..50), 0..200)) {
            let e = EdgeSet::from_pairs(50, pairs.into_iter().filter(|(a, b)| a != b)).unwrap();
            let mut buf = Vec::new();
            write_edges(&mut buf, &e, &[]).unwrap();
            prop_assert_eq!(read_edges(&buf[..]).unwrap().0, e);
        }
    }
}
