//! Simple d-regular graphs, cycles, and distance queries.

use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};

/// Undirected edge with `0 <= u < v`.
pub type Edge = (usize, usize);

#[inline]
pub fn edge_key(a: usize, b: usize) -> Edge {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Read-only neighbourhood access, shared by [`RegularGraph`] and the
/// edge overlays used to inspect a switching before it is applied.
pub trait Adjacency {
    fn vertex_count(&self) -> usize;
    fn neighbors_of(&self, v: usize) -> impl Iterator<Item = usize> + '_;
    fn adjacent(&self, a: usize, b: usize) -> bool;
}

/// A simple d-regular labelled graph on vertices `0..n`.
///
/// Neighbour lists are sorted, so iteration order is deterministic and edge
/// queries are a binary search.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RegularGraph {
    n: usize,
    d: usize,
    adj: Vec<usize>,
}

impl fmt::Debug for RegularGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RegularGraph(n={}, d={}, edges={:?})", self.n, self.d, self.edges().collect::<Vec<_>>())
    }
}

impl RegularGraph {
    /// Build from an undirected edge list, rejecting loops, repeated edges,
    /// out-of-range ids and any vertex whose degree is not `d`.
    pub fn from_edges(n: usize, d: usize, edges: &[Edge]) -> Result<Self> {
        if n * d % 2 != 0 {
            return arg(format!("n*d must be even (n={n}, d={d})"));
        }
        if n > 0 && d >= n {
            return arg(format!("degree {d} impossible on {n} vertices"));
        }
        if edges.len() != n * d / 2 {
            return arg(format!("expected {} edges for a {d}-regular graph on {n} vertices, got {}", n * d / 2, edges.len()));
        }
        let mut lists = vec![Vec::with_capacity(d); n];
        let mut seen = HashSet::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n || b >= n {
                return arg(format!("edge ({a},{b}) out of range for n={n}"));
            }
            if a == b {
                return arg(format!("self-loop at vertex {a}"));
            }
            if !seen.insert(edge_key(a, b)) {
                return arg(format!("repeated edge ({a},{b})"));
            }
            lists[a].push(b);
            lists[b].push(a);
        }
        let mut adj = Vec::with_capacity(n * d);
        for (v, mut l) in lists.into_iter().enumerate() {
            if l.len() != d {
                return arg(format!("vertex {v} has degree {}, expected {d}", l.len()));
            }
            l.sort_unstable();
            adj.extend(l);
        }
        Ok(Self { n, d, adj })
    }

    pub(crate) fn from_sorted_lists(n: usize, d: usize, adj: Vec<usize>) -> Self {
        debug_assert_eq!(adj.len(), n * d);
        Self { n, d, adj }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn num_edges(&self) -> usize {
        self.n * self.d / 2
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v * self.d..(v + 1) * self.d]
    }

    #[inline]
    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a < self.n && self.neighbors(a).binary_search(&b).is_ok()
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.n).flat_map(move |u| self.neighbors(u).iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// Replace `removed` edges by `added` edges. Both lists must be valid for
    /// the current graph; the caller has already checked simplicity.
    pub(crate) fn rewired(&self, removed: &[Edge], added: &[Edge]) -> Self {
        let mut touched: Vec<usize> = removed.iter().chain(added).flat_map(|&(a, b)| [a, b]).collect();
        touched.sort_unstable();
        touched.dedup();
        let mut adj = self.adj.clone();
        for &v in &touched {
            let mut l: Vec<usize> = self.neighbors(v).to_vec();
            for &(a, b) in removed {
                if a == v {
                    l.retain(|&x| x != b);
                } else if b == v {
                    l.retain(|&x| x != a);
                }
            }
            for &(a, b) in added {
                if a == v {
                    l.push(b);
                } else if b == v {
                    l.push(a);
                }
            }
            l.sort_unstable();
            debug_assert_eq!(l.len(), self.d);
            adj[v * self.d..(v + 1) * self.d].copy_from_slice(&l);
        }
        Self { n: self.n, d: self.d, adj }
    }

    /// Number of connected components.
    pub fn components(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for s in 0..self.n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            queue.push_back(s);
            while let Some(v) = queue.pop_front() {
                for &w in self.neighbors(v) {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        count
    }

    /// Serialize in the text format: `n d` header, then one `u v` line per edge.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.d);
        for (u, v) in self.edges() {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty input".into() })?;
        let nums = parse_pair(header, 1)?;
        let (n, d) = nums;
        let mut edges = Vec::with_capacity(n * d / 2);
        for (i, line) in lines {
            let (u, v) = parse_pair(line, i + 1)?;
            if u >= v {
                let msg = if u == v { format!("self-loop at vertex {u}") } else { format!("edge ({u},{v}) must be written with u < v") };
                return Err(Error::Parse { line: i + 1, msg });
            }
            edges.push((u, v));
        }
        Self::from_edges(n, d, &edges).map_err(|e| match e {
            Error::Argument(msg) => Error::Parse { line: 0, msg },
            other => other,
        })
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Edge set as a bitmask over the `n(n-1)/2` vertex pairs (n <= 16).
    pub fn edge_mask(&self) -> u128 {
        assert!(self.n <= 16, "edge_mask supports n <= 16");
        let mut m = 0u128;
        for (u, v) in self.edges() {
            m |= 1u128 << pair_index(self.n, u, v);
        }
        m
    }
}

fn parse_pair(line: &str, lineno: usize) -> Result<(usize, usize)> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(Error::Parse { line: lineno, msg: format!("expected two integers, got {line:?}") });
    }
    let p = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse { line: lineno, msg: format!("{s:?}: {e}") });
    Ok((p(parts[0])?, p(parts[1])?))
}

pub(crate) fn pair_index(n: usize, u: usize, v: usize) -> usize {
    let (u, v) = edge_key(u, v);
    u * n - u * (u + 1) / 2 + (v - u - 1)
}

impl Adjacency for RegularGraph {
    fn vertex_count(&self) -> usize {
        self.n
    }
    fn neighbors_of(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.neighbors(v).iter().copied()
    }
    fn adjacent(&self, a: usize, b: usize) -> bool {
        self.has_edge(a, b)
    }
}

/// A graph seen through a pending edge replacement: `removed` edges are
/// hidden and `added` edges are visible.
pub struct Overlay<'a> {
    pub base: &'a RegularGraph,
    pub removed: &'a [Edge],
    pub added: &'a [Edge],
}

impl Adjacency for Overlay<'_> {
    fn vertex_count(&self) -> usize {
        self.base.n
    }
    fn neighbors_of(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        let base = self.base.neighbors(v).iter().copied().filter(move |&w| !self.removed.contains(&edge_key(v, w)));
        let extra = self.added.iter().filter_map(move |&(a, b)| {
            if a == v {
                Some(b)
            } else if b == v {
                Some(a)
            } else {
                None
            }
        });
        base.chain(extra)
    }
    fn adjacent(&self, a: usize, b: usize) -> bool {
        let k = edge_key(a, b);
        if self.added.contains(&k) {
            return true;
        }
        self.base.has_edge(a, b) && !self.removed.contains(&k)
    }
}

/// Length of a shortest path between the vertex sets `a` and `b`; `Some(0)`
/// when they intersect and `None` when no path exists.
pub fn distance<G: Adjacency>(g: &G, a: &[usize], b: &[usize]) -> Result<Option<usize>> {
    distance_within(g, a, b, usize::MAX)
}

/// As [`distance`], but gives up (returning `None`) beyond `limit`.
pub fn distance_within<G: Adjacency>(g: &G, a: &[usize], b: &[usize], limit: usize) -> Result<Option<usize>> {
    if a.is_empty() || b.is_empty() {
        return arg("distance needs two nonempty vertex sets");
    }
    let n = g.vertex_count();
    if let Some(&bad) = a.iter().chain(b).find(|&&v| v >= n) {
        return arg(format!("vertex {bad} out of range"));
    }
    let mut target = vec![false; n];
    for &v in b {
        target[v] = true;
    }
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for &v in a {
        if target[v] {
            return Ok(Some(0));
        }
        if dist[v] == usize::MAX {
            dist[v] = 0;
            queue.push_back(v);
        }
    }
    while let Some(v) = queue.pop_front() {
        if dist[v] >= limit {
            continue;
        }
        for w in g.neighbors_of(v) {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                if target[w] {
                    return Ok(Some(dist[w]));
                }
                queue.push_back(w);
            }
        }
    }
    Ok(None)
}

/// `n (n-1) ... (n-k+1)`; zero when `k > n`.
pub fn falling_factorial(n: u64, k: u64) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128).ok_or(Error::Overflow("falling_factorial"))?;
    }
    Ok(acc)
}

/// A simple cycle stored in canonical form: the smallest vertex first, then
/// the direction whose second vertex is smaller. Two cycles are equal iff
/// they have the same vertex set and cyclic order, up to rotation and reflection.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cycle {
    vertices: Vec<usize>,
}

impl Cycle {
    pub fn new(seq: &[usize]) -> Result<Self> {
        if seq.len() < 3 {
            return arg(format!("a cycle needs at least 3 vertices, got {}", seq.len()));
        }
        let mut sorted = seq.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return arg(format!("cycle {seq:?} repeats a vertex"));
        }
        let (rot, refl) = canonical_placement(seq);
        Ok(Self { vertices: (0..seq.len()).map(|i| seq[placed_index(seq.len(), rot, refl, i)]).collect() })
    }

    pub(crate) fn from_canonical(vertices: Vec<usize>) -> Self {
        debug_assert_eq!(canonical_placement(&vertices), (0, false));
        Self { vertices }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    /// Consecutive edges `v_i v_{i+1}` (indices mod k), as unordered keys.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        let k = self.vertices.len();
        (0..k).map(move |i| edge_key(self.vertices[i], self.vertices[(i + 1) % k]))
    }
}

impl fmt::Display for Cycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.vertices.iter().map(|v| v.to_string()).collect();
        write!(f, "({})", s.join(","))
    }
}

/// Rotation and reflection taking `seq` to canonical form: canonical
/// position `i` holds `seq[placed_index(k, rot, refl, i)]`.
pub(crate) fn canonical_placement(seq: &[usize]) -> (usize, bool) {
    let k = seq.len();
    let rot = (0..k).min_by_key(|&i| seq[i]).expect("nonempty");
    let next = seq[(rot + 1) % k];
    let prev = seq[(rot + k - 1) % k];
    (rot, prev < next)
}

#[inline]
pub(crate) fn placed_index(k: usize, rot: usize, refl: bool, i: usize) -> usize {
    if refl {
        (rot + k - i % k) % k
    } else {
        (rot + i) % k
    }
}

/// Does `g` contain every edge of `c`?
pub fn contains_cycle<G: Adjacency>(g: &G, c: &Cycle) -> bool {
    c.vertices().iter().all(|&v| v < g.vertex_count()) && c.edges().all(|(a, b)| g.adjacent(a, b))
}

/// Directed edge `tail -> head`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OrientedEdge {
    pub tail: usize,
    pub head: usize,
}

impl OrientedEdge {
    pub fn new(tail: usize, head: usize) -> Result<Self> {
        if tail == head {
            return arg(format!("oriented edge needs distinct endpoints, got {tail}"));
        }
        Ok(Self { tail, head })
    }

    pub fn key(&self) -> Edge {
        edge_key(self.tail, self.head)
    }
}

/// Small named graphs used as fixtures and CLI inputs.
pub mod families {
    use super::*;

    /// The complete graph `K_n`, which is `(n-1)`-regular.
    pub fn complete(n: usize) -> RegularGraph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        RegularGraph::from_edges(n, n.saturating_sub(1), &edges).expect("complete graph")
    }

    /// The n-cycle as a 2-regular graph.
    pub fn ring(n: usize) -> RegularGraph {
        let edges: Vec<Edge> = (0..n).map(|i| edge_key(i, (i + 1) % n)).collect();
        RegularGraph::from_edges(n, 2, &edges).expect("ring")
    }

    /// Petersen graph: outer ring 0..5, inner pentagram 5..10, spokes i -- i+5.
    pub fn petersen() -> RegularGraph {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push(edge_key(i, (i + 1) % 5));
            edges.push(edge_key(5 + i, 5 + (i + 2) % 5));
            edges.push((i, i + 5));
        }
        RegularGraph::from_edges(10, 3, &edges).expect("petersen")
    }

    /// `K_{3,3}` with parts `{0,1,2}` and `{3,4,5}`.
    pub fn k33() -> RegularGraph {
        let mut edges = Vec::new();
        for a in 0..3 {
            for b in 3..6 {
                edges.push((a, b));
            }
        }
        RegularGraph::from_edges(6, 3, &edges).expect("k33")
    }

    /// Circulant d-regular graph: offsets `1..=d/2`, plus the antipodal
    /// matching when d is odd. Needs `n > d` and `n` even for odd d.
    pub fn circulant(n: usize, d: usize) -> Result<RegularGraph> {
        if n <= d || n * d % 2 != 0 {
            return arg(format!("no circulant {d}-regular graph on {n} vertices"));
        }
        let mut edges = Vec::with_capacity(n * d / 2);
        for i in 0..n {
            for s in 1..=d / 2 {
                if s < n - s || (s == n - s && i < n / 2) {
                    edges.push(edge_key(i, (i + s) % n));
                }
            }
            if d % 2 == 1 && i < n / 2 {
                edges.push((i, i + n / 2));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        RegularGraph::from_edges(n, d, &edges)
    }

    /// Disjoint union of two graphs of equal degree; the second copy is relabelled.
    pub fn disjoint_union(a: &RegularGraph, b: &RegularGraph) -> Result<RegularGraph> {
        if a.d() != b.d() {
            return arg("disjoint union needs equal degrees");
        }
        let shift = a.n();
        let edges: Vec<Edge> = a.edges().chain(b.edges().map(|(u, v)| (u + shift, v + shift))).collect();
        RegularGraph::from_edges(a.n() + b.n(), a.d(), &edges)
    }
}

#[cfg(test)]
mod tests {
    use super::families::*;
    use super::*;

    #[test]
    fn distance_examples() {
        let k4 = complete(4);
        assert_eq!(distance(&k4, &[0], &[0]).unwrap(), Some(0));
        assert_eq!(distance(&k4, &[0], &[3]).unwrap(), Some(1));
        assert_eq!(distance(&ring(6), &[0], &[3]).unwrap(), Some(3));
        assert!(distance(&k4, &[], &[1]).is_err());
        let two = disjoint_union(&k4, &k4).unwrap();
        assert_eq!(distance(&two, &[0], &[5]).unwrap(), None);
    }

    #[test]
    fn contains_cycle_examples() {
        let tri = Cycle::new(&[0, 1, 2]).unwrap();
        assert!(contains_cycle(&complete(4), &tri));
        assert!(!contains_cycle(&ring(6), &tri));
        let outer = Cycle::new(&[0, 1, 2, 3, 4]).unwrap();
        assert!(contains_cycle(&petersen(), &outer));
        let star = Cycle::new(&[5, 7, 9, 6, 8]).unwrap();
        assert!(contains_cycle(&petersen(), &star));
    }

    #[test]
    fn falling_factorial_examples() {
        assert_eq!(falling_factorial(5, 3).unwrap(), 60);
        assert_eq!(falling_factorial(9, 0).unwrap(), 1);
        assert_eq!(falling_factorial(4, 4).unwrap(), 24);
        assert_eq!(falling_factorial(3, 4).unwrap(), 0);
        assert!(falling_factorial(10_000, 20).is_err());
    }

    #[test]
    fn canonical_cycle_form() {
        let c = Cycle::new(&[4, 2, 7, 1]).unwrap();
        assert_eq!(c.vertices(), &[1, 4, 2, 7]);
        assert_eq!(Cycle::new(&[7, 2, 4, 1]).unwrap(), c);
        assert!(Cycle::new(&[1, 2]).is_err());
        assert!(Cycle::new(&[1, 2, 1]).is_err());
    }

    #[test]
    fn rejects_bad_edge_lists() {
        assert!(RegularGraph::from_edges(4, 3, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (1, 2)]).is_err());
        assert!(RegularGraph::from_edges(3, 1, &[(0, 1)]).is_err());
        assert!(RegularGraph::from_edges(4, 1, &[(0, 0), (1, 2)]).is_err());
        assert!(RegularGraph::from_edges(4, 1, &[(0, 1), (1, 2)]).is_err());
    }

    #[test]
    fn parse_roundtrip_and_errors() {
        let p = petersen();
        assert_eq!(RegularGraph::parse(&p.to_text()).unwrap(), p);
        assert!(RegularGraph::parse("4 3\n0 1\n0 2\n0 3\n1 2\n1 3\n1 2\n").is_err());
        assert!(RegularGraph::parse("2 1\n1 1\n").is_err());
        assert!(RegularGraph::parse("4 3\n0 1\n").is_err());
        assert!(RegularGraph::parse("").is_err());
    }

    #[test]
    fn circulant_is_regular() {
        for (n, d) in [(10, 3), (12, 4), (2000, 10), (9, 4)] {
            let g = circulant(n, d).unwrap();
            assert_eq!(g.num_edges(), n * d / 2);
        }
    }

    #[test]
    fn overlay_sees_rewiring() {
        let g = ring(6);
        let removed = [(0, 1), (3, 4)];
        let added = [(0, 3), (1, 4)];
        let o = Overlay { base: &g, removed: &removed, added: &added };
        assert!(!o.adjacent(0, 1));
        assert!(o.adjacent(3, 0));
        let mut nb: Vec<usize> = o.neighbors_of(0).collect();
        nb.sort();
        assert_eq!(nb, vec![3, 5]);
        let h = g.rewired(&removed, &added);
        assert!(h.has_edge(1, 4) && !h.has_edge(3, 4));
    }
}
