//! Short-cycle census, overlap events, and subgraph-containment estimates.

use std::collections::{BTreeSet, HashMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::graph::{contains_cycle, edge_key, Adjacency, Cycle, Edge, RegularGraph};
use crate::sampler::{self, SamplerConfig};
use crate::stats::wilson_interval;

/// All simple cycles of length `3..=r`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleCensus {
    pub r: usize,
    /// `counts[k]` is the number of k-cycles; indices 0, 1, 2 are always zero.
    pub counts: Vec<u64>,
    /// Canonical cycles, ordered by length then lexicographically.
    pub cycles: Vec<Cycle>,
}

impl CycleCensus {
    pub fn count(&self, k: usize) -> u64 {
        self.counts.get(k).copied().unwrap_or(0)
    }

    /// `(C_3, ..., C_r)`.
    pub fn count_vector(&self) -> Vec<u64> {
        (3..=self.r).map(|k| self.count(k)).collect()
    }

    pub fn total(&self) -> u64 {
        self.cycles.len() as u64
    }

    /// For each edge lying on a short cycle, the indices of those cycles.
    pub fn edge_index(&self) -> HashMap<Edge, Vec<usize>> {
        let mut idx: HashMap<Edge, Vec<usize>> = HashMap::new();
        for (i, c) in self.cycles.iter().enumerate() {
            for e in c.edges() {
                idx.entry(e).or_default().push(i);
            }
        }
        idx
    }

    pub fn vertex_index(&self, n: usize) -> Vec<Vec<usize>> {
        let mut idx = vec![Vec::new(); n];
        for (i, c) in self.cycles.iter().enumerate() {
            for &v in c.vertices() {
                idx[v].push(i);
            }
        }
        idx
    }
}

/// Enumerate every simple cycle of length at most `r`.
///
/// Each cycle is rooted at its smallest vertex and found by a depth-first
/// search over larger vertices; the two traversal directions are told apart
/// by comparing the second and last vertices.
pub fn census<G: Adjacency>(g: &G, r: usize) -> Result<CycleCensus> {
    if r < 3 {
        return arg(format!("cycle cutoff r must be at least 3, got {r}"));
    }
    let n = g.vertex_count();
    let mut cycles = Vec::new();
    let mut on_path = vec![false; n];
    let mut path = Vec::with_capacity(r);
    for s in 0..n {
        path.clear();
        path.push(s);
        on_path[s] = true;
        extend_from(g, s, r, &mut path, &mut on_path, &mut cycles);
        on_path[s] = false;
    }
    cycles.sort_by(|a: &Cycle, b: &Cycle| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    let mut counts = vec![0u64; r + 1];
    for c in &cycles {
        counts[c.len()] += 1;
    }
    Ok(CycleCensus { r, counts, cycles })
}

fn extend_from<G: Adjacency>(
    g: &G,
    root: usize,
    r: usize,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    out: &mut Vec<Cycle>,
) {
    let last = *path.last().expect("nonempty path");
    let nbrs: Vec<usize> = g.neighbors_of(last).collect();
    for w in nbrs {
        if w == root {
            if path.len() >= 3 && path[1] < last {
                out.push(Cycle::from_canonical(path.clone()));
            }
        } else if w > root && !on_path[w] && path.len() < r {
            on_path[w] = true;
            path.push(w);
            extend_from(g, root, r, path, on_path, out);
            path.pop();
            on_path[w] = false;
        }
    }
}

/// Short cycles (length `<= r`) through the edge `x y` of `g`, inserted into `out`.
pub fn cycles_through_edge<G: Adjacency>(g: &G, edge: Edge, r: usize, out: &mut BTreeSet<Cycle>) {
    let (x, y) = edge;
    let mut path = Vec::with_capacity(r);
    path.extend([x, y]);
    walk_back(g, x, r, &mut path, out);
}

fn walk_back<G: Adjacency>(g: &G, target: usize, r: usize, path: &mut Vec<usize>, out: &mut BTreeSet<Cycle>) {
    let last = *path.last().expect("nonempty");
    let nbrs: Vec<usize> = g.neighbors_of(last).collect();
    for w in nbrs {
        if w == target {
            if path.len() >= 3 {
                out.insert(Cycle::new(path).expect("simple path closes to a cycle"));
            }
        } else if path.len() < r && !path.contains(&w) {
            path.push(w);
            walk_back(g, target, r, path, out);
            path.pop();
        }
    }
}

/// Short cycles of `g` that use at least one edge of `edges`.
pub fn cycles_through_edges<G: Adjacency>(g: &G, edges: &[Edge], r: usize) -> BTreeSet<Cycle> {
    let mut out = BTreeSet::new();
    for &e in edges {
        cycles_through_edge(g, e, r, &mut out);
    }
    out
}

/// Flags for the two ways short cycles can interact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapEvents {
    /// Two distinct short cycles of lengths j, k share a vertex and `j + k <= r`.
    pub e1: bool,
    /// Two vertex-disjoint short cycles at distance `l >= 1` with `j + k + 2l <= r`.
    pub e2: bool,
}

impl OverlapEvents {
    pub fn any(&self) -> bool {
        self.e1 || self.e2
    }
}

pub fn overlap_events(g: &RegularGraph, census: &CycleCensus) -> OverlapEvents {
    let r = census.r;
    let by_vertex = census.vertex_index(g.n());
    let e1 = by_vertex.iter().any(|cs| {
        let mut lens: Vec<usize> = cs.iter().map(|&i| census.cycles[i].len()).collect();
        lens.sort_unstable();
        lens.len() >= 2 && lens[0] + lens[1] <= r
    });

    let mut e2 = false;
    let mut dist = vec![usize::MAX; g.n()];
    let mut touched = Vec::new();
    'outer: for alpha in census.cycles.iter().filter(|c| c.len() + 5 <= r) {
        let j = alpha.len();
        let depth = (r - j - 3) / 2;
        let mut queue = VecDeque::new();
        for &v in alpha.vertices() {
            dist[v] = 0;
            touched.push(v);
            queue.push_back(v);
        }
        while let Some(v) = queue.pop_front() {
            if dist[v] >= depth {
                continue;
            }
            for &w in g.neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    touched.push(w);
                    queue.push_back(w);
                }
            }
        }
        for &x in &touched {
            if dist[x] == 0 {
                continue;
            }
            for &bi in &by_vertex[x] {
                let beta = &census.cycles[bi];
                let l = beta.vertices().iter().map(|&v| dist[v]).min().unwrap_or(usize::MAX);
                if l >= 1 && l != usize::MAX && j + beta.len() + 2 * l <= r {
                    e2 = true;
                }
            }
        }
        for &v in &touched {
            dist[v] = usize::MAX;
        }
        touched.clear();
        if e2 {
            break 'outer;
        }
    }
    OverlapEvents { e1, e2 }
}

/// Does some short cycle other than `c` share an edge with `c`?
pub fn shares_edge_with_other_short_cycle(g: &RegularGraph, c: &Cycle, r: usize) -> Result<bool> {
    if !contains_cycle(g, c) {
        return Err(Error::Precondition(format!("graph does not contain cycle {c}")));
    }
    let edges: Vec<Edge> = c.edges().collect();
    Ok(cycles_through_edges(g, &edges, r).iter().any(|other| other != c))
}

/// Fixed labelled subgraphs whose containment probability is estimated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Structure {
    /// The k-cycle `0, 1, ..., k-1`.
    Cycle { k: usize },
    /// A k-cycle and a j-cycle sharing a path of `f` edges.
    TwoCycles { j: usize, k: usize, f: usize },
    /// A j-cycle and a k-cycle joined by a path of length `l`.
    Joined { j: usize, k: usize, l: usize },
}

impl Structure {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Structure::Cycle { k } if k < 3 => arg("cycle length must be at least 3"),
            Structure::TwoCycles { j, k, f } => {
                if j < 3 || k < 3 {
                    arg("cycle lengths must be at least 3")
                } else if f >= j.min(k) {
                    arg(format!("shared edge count f={f} must be below min(j,k)={}", j.min(k)))
                } else if j == f + 1 && k == f + 1 {
                    arg("the two cycles would coincide")
                } else {
                    Ok(())
                }
            }
            Structure::Joined { j, k, l } if j < 3 || k < 3 || l < 1 => arg("joined cycles need j,k >= 3 and l >= 1"),
            _ => Ok(()),
        }
    }

    pub fn vertex_count(&self) -> usize {
        match *self {
            Structure::Cycle { k } => k,
            Structure::TwoCycles { j, k, f } => k + j - f - 1,
            Structure::Joined { j, k, l } => j + k + l - 1,
        }
    }

    /// Exponent e in the bound `C (d-1)^e / n^e`.
    pub fn exponent(&self) -> usize {
        match *self {
            Structure::Cycle { k } => k,
            Structure::TwoCycles { j, k, f } => j + k - f,
            Structure::Joined { j, k, l } => j + k + l,
        }
    }

    /// Edges of the labelled copy on vertices `0..vertex_count()`.
    pub fn edges(&self) -> Vec<Edge> {
        let ring = |vs: &[usize]| -> Vec<Edge> { (0..vs.len()).map(|i| edge_key(vs[i], vs[(i + 1) % vs.len()])).collect() };
        match *self {
            Structure::Cycle { k } => ring(&(0..k).collect::<Vec<_>>()),
            Structure::TwoCycles { j, k, f } => {
                let mut e = ring(&(0..k).collect::<Vec<_>>());
                // beta follows alpha from 0 to f, then returns through fresh vertices
                let mut beta: Vec<usize> = (0..=f).collect();
                beta.extend(k..k + j - f - 1);
                let be = ring(&beta);
                for x in be {
                    if !e.contains(&x) {
                        e.push(x);
                    }
                }
                e
            }
            Structure::Joined { j, k, l } => {
                let mut e = ring(&(0..j).collect::<Vec<_>>());
                e.extend(ring(&(j..j + k).collect::<Vec<_>>()));
                let mut path = vec![0];
                path.extend(j + k..j + k + l - 1);
                path.push(j);
                e.extend(path.windows(2).map(|w| edge_key(w[0], w[1])));
                e
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubgraphEstimate {
    pub structure: Structure,
    pub n: usize,
    pub d: usize,
    pub samples: usize,
    pub hits: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    /// `C (d-1)^e / n^e`.
    pub bound: f64,
    pub constant: f64,
    /// `estimate / bound`.
    pub ratio: f64,
}

/// Monte Carlo estimate of `P[H ⊂ G]` for a fixed labelled subgraph H over
/// uniform d-regular graphs, reported next to the `C (d-1)^e / n^e` scale.
pub fn estimate_subgraph_probability(
    structure: Structure,
    cfg: &SamplerConfig,
    samples: usize,
    constant: f64,
) -> Result<SubgraphEstimate> {
    structure.validate()?;
    if samples == 0 {
        return arg("at least one sample is required");
    }
    let (n, d) = (cfg.n, cfg.d);
    if structure.vertex_count() > n {
        return arg(format!("structure needs {} vertices but n={n}", structure.vertex_count()));
    }
    let edges = structure.edges();
    let hits: Vec<bool> = (0..samples)
        .into_par_iter()
        .map(|i| sampler::sample_one(cfg, i as u64).map(|g| edges.iter().all(|&(a, b)| g.has_edge(a, b))))
        .collect::<Result<_>>()?;
    let hits = hits.into_iter().filter(|&h| h).count();
    let p = hits as f64 / samples as f64;
    let (lo, hi) = wilson_interval(hits as u64, samples as u64, 1.96);
    let e = structure.exponent() as f64;
    let bound = constant * ((d as f64 - 1.0) / n as f64).powf(e);
    Ok(SubgraphEstimate {
        structure,
        n,
        d,
        samples,
        hits,
        estimate: p,
        stderr: (p * (1.0 - p) / samples as f64).sqrt(),
        wilson_low: lo,
        wilson_high: hi,
        bound,
        constant,
        ratio: p / bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families::*;

    #[test]
    fn census_examples() {
        let c = census(&complete(4), 4).unwrap();
        assert_eq!((c.count(3), c.count(4)), (4, 3));
        let c = census(&k33(), 6).unwrap();
        assert_eq!(c.count_vector(), vec![0, 9, 0, 6]);
        let c = census(&petersen(), 6).unwrap();
        assert_eq!(c.count_vector(), vec![0, 0, 12, 10]);
        assert!(census(&petersen(), 2).is_err());
    }

    #[test]
    fn overlap_examples() {
        let k4 = complete(4);
        assert!(overlap_events(&k4, &census(&k4, 6).unwrap()).e1);
        let p = petersen();
        let ev = overlap_events(&p, &census(&p, 6).unwrap());
        assert!(!ev.e1 && !ev.e2);
    }

    #[test]
    fn shared_edges() {
        let k4 = complete(4);
        let tri = Cycle::new(&[0, 1, 2]).unwrap();
        assert!(shares_edge_with_other_short_cycle(&k4, &tri, 4).unwrap());
        let p = petersen();
        // every Petersen edge lies on four 5-cycles
        let cen = census(&p, 5).unwrap();
        assert!(cen.edge_index().values().all(|cs| cs.len() == 4));
        for c in &cen.cycles {
            assert!(shares_edge_with_other_short_cycle(&p, c, 5).unwrap());
        }
        let ring6 = ring(6);
        let c6 = Cycle::new(&[0, 1, 2, 3, 4, 5]).unwrap();
        assert!(!shares_edge_with_other_short_cycle(&ring6, &c6, 6).unwrap());
        assert!(shares_edge_with_other_short_cycle(&ring6, &tri, 6).is_err());
    }

    #[test]
    fn structure_shapes() {
        let s = Structure::TwoCycles { j: 5, k: 4, f: 2 };
        assert_eq!(s.edges().len(), s.exponent());
        assert_eq!(s.vertex_count(), 6);
        let s = Structure::Joined { j: 4, k: 5, l: 3 };
        assert_eq!(s.edges().len(), s.exponent());
        assert!(Structure::TwoCycles { j: 3, k: 3, f: 3 }.validate().is_err());
    }
}
