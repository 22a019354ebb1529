use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::count::{forward_space, random_backward, random_forward};
use super::{apply_backward, apply_forward, enumerate_backward, enumerate_forward, is_valid, Switching};
use crate::census::census;
use crate::error::{arg, Error, Result};
use crate::graph::{Cycle, RegularGraph};
use crate::scalar::Weight;
use crate::stats::lambda;

/// The switching metagraph on an explicit list of graphs: an edge of weight
/// `1 / ([n]_k d^k)` for every valid k-cycle switching.
#[derive(Clone, Debug)]
pub struct Metagraph<W: Weight> {
    pub n: usize,
    pub d: usize,
    pub r: usize,
    pub graphs: Vec<RegularGraph>,
    /// `forward[i][j]`: total weight of valid forward switchings from graph i to graph j.
    pub forward: Vec<BTreeMap<usize, W>>,
    /// Same for backward switchings; empty maps when not built.
    pub backward: Vec<BTreeMap<usize, W>>,
    pub forward_moves: u64,
    pub backward_moves: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetagraphCheck {
    pub n: usize,
    pub d: usize,
    pub r: usize,
    pub states: usize,
    /// Unordered pairs of distinct graphs joined by at least one valid switching.
    pub edges: usize,
    pub forward_moves: u64,
    pub backward_moves: u64,
    /// Forward weight i -> j equals backward weight j -> i for every pair.
    pub forward_matches_backward: bool,
    pub symmetric: bool,
    pub max_asymmetry: f64,
    /// Largest `|(πP)_j - π_j|` for uniform π and the lazy walk P padded to degree `d_0`.
    pub max_stationarity_defect: f64,
    pub max_degree: f64,
    pub min_degree: f64,
}

fn complement(g: &RegularGraph) -> Option<RegularGraph> {
    let n = g.n();
    let cd = n - 1 - g.d();
    if cd < 2 {
        return None;
    }
    let edges: Vec<_> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).filter(|&(a, b)| !g.has_edge(a, b)).collect();
    RegularGraph::from_edges(n, cd, &edges).ok()
}

impl<W: Weight> Metagraph<W> {
    /// Build over `graphs`, which must be closed under valid switchings (for
    /// example every cubic graph on n vertices). `n <= 16` so graphs can be
    /// keyed by their edge masks.
    pub fn build(graphs: Vec<RegularGraph>, r: usize, with_backward: bool) -> Result<Self> {
        let Some(first) = graphs.first() else {
            return arg("metagraph needs at least one graph");
        };
        let (n, d) = (first.n(), first.d());
        if n > 16 {
            return arg("metagraph construction is limited to n <= 16");
        }
        let index: HashMap<u128, usize> = graphs.iter().enumerate().map(|(i, g)| (g.edge_mask(), i)).collect();
        let weights: Vec<W> = (0..=r)
            .map(|k| if k < 3 { Ok(W::zero()) } else { forward_space(n, d, k).map(|s| W::ratio(1, s)) })
            .collect::<Result<_>>()?;
        let lookup = |h: &RegularGraph| -> Result<usize> {
            index.get(&h.edge_mask()).copied().ok_or_else(|| Error::Precondition("graph list is not closed under switchings".into()))
        };
        type Row<W> = (BTreeMap<usize, W>, BTreeMap<usize, W>, u64, u64);
        let rows: Vec<Row<W>> = graphs
            .par_iter()
            .map(|g| -> Result<Row<W>> {
                let mut fwd: BTreeMap<usize, W> = BTreeMap::new();
                let mut bwd: BTreeMap<usize, W> = BTreeMap::new();
                let (mut nf, mut nb) = (0u64, 0u64);
                let mut err = None;
                for alpha in census(g, r)?.cycles {
                    let w = &weights[alpha.len()];
                    enumerate_forward(g, &alpha, r, |f| match apply_forward(g, f).and_then(|h| lookup(&h)) {
                        Ok(j) => {
                            nf += 1;
                            let e = fwd.entry(j).or_insert_with(W::zero);
                            *e = e.clone() + w.clone();
                        }
                        Err(e) => err = Some(e),
                    })?;
                }
                if with_backward {
                    if let Some(comp) = complement(g) {
                        for alpha in census(&comp, r)?.cycles {
                            let w = &weights[alpha.len()];
                            enumerate_backward(g, &alpha, r, |b| match apply_backward(g, b).and_then(|h| lookup(&h)) {
                                Ok(j) => {
                                    nb += 1;
                                    let e = bwd.entry(j).or_insert_with(W::zero);
                                    *e = e.clone() + w.clone();
                                }
                                Err(e) => err = Some(e),
                            })?;
                        }
                    }
                }
                match err {
                    Some(e) => Err(e),
                    None => Ok((fwd, bwd, nf, nb)),
                }
            })
            .collect::<Result<_>>()?;
        let mut forward = Vec::with_capacity(rows.len());
        let mut backward = Vec::with_capacity(rows.len());
        let (mut forward_moves, mut backward_moves) = (0, 0);
        for (f, b, nf, nb) in rows {
            forward.push(f);
            backward.push(b);
            forward_moves += nf;
            backward_moves += nb;
        }
        Ok(Metagraph { n, d, r, graphs, forward, backward, forward_moves, backward_moves })
    }

    /// Build over every labelled cubic graph on `n <= 8` vertices.
    pub fn from_enumeration(n: usize, d: usize, r: usize) -> Result<Self> {
        Self::build(crate::sampler::enumerate_all_regular(n, d)?, r, true)
    }

    fn get(map: &BTreeMap<usize, W>, j: usize) -> W {
        map.get(&j).cloned().unwrap_or_else(W::zero)
    }

    /// Total weight between graphs i and j. Without backward maps the
    /// backward part is taken as the transpose of the forward part.
    pub fn weight(&self, i: usize, j: usize) -> W {
        let b = if self.backward.iter().all(BTreeMap::is_empty) {
            Self::get(&self.forward[j], i)
        } else {
            Self::get(&self.backward[i], j)
        };
        Self::get(&self.forward[i], j) + b
    }

    /// Distinct neighbours of every graph, self-loops excluded.
    fn neighbour_lists(&self) -> Vec<Vec<usize>> {
        let mut adj: Vec<Vec<usize>> =
            (0..self.graphs.len()).map(|i| self.forward[i].keys().chain(self.backward[i].keys()).copied().collect()).collect();
        for (j, row) in self.forward.iter().enumerate() {
            for &i in row.keys() {
                adj[i].push(j);
            }
        }
        for (i, js) in adj.iter_mut().enumerate() {
            js.retain(|&j| j != i);
            js.sort_unstable();
            js.dedup();
        }
        adj
    }

    fn degrees_from(&self, adj: &[Vec<usize>]) -> Vec<W> {
        adj.iter()
            .enumerate()
            .map(|(i, js)| js.iter().fold(W::zero(), |acc, &j| acc + self.weight(i, j)))
            .collect()
    }

    /// Weighted degree of every graph, self-loops excluded.
    pub fn degrees(&self) -> Vec<W> {
        self.degrees_from(&self.neighbour_lists())
    }

    pub fn check(&self) -> MetagraphCheck {
        let states = self.graphs.len();
        let tol = W::tolerance();
        let have_backward = !self.backward.iter().all(BTreeMap::is_empty);
        let mut forward_matches_backward = true;
        let mut max_asym = W::zero();
        let mut edges = 0;
        let adj = self.neighbour_lists();
        for (i, js) in adj.iter().enumerate() {
            for &j in js {
                if j > i {
                    edges += 1;
                }
                if have_backward {
                    let diff = Self::get(&self.forward[i], j).abs_diff(&Self::get(&self.backward[j], i));
                    if diff > tol {
                        forward_matches_backward = false;
                    }
                }
                let diff = self.weight(i, j).abs_diff(&self.weight(j, i));
                if diff > max_asym {
                    max_asym = diff;
                }
            }
        }
        let degrees = self.degrees_from(&adj);
        let d0 = degrees.iter().cloned().fold(W::zero(), |a, b| if b > a { b } else { a });
        // (πP)_j - π_j = (Σ_i W(i,j) - deg_j) / (N d0)
        let mut max_defect = 0.0f64;
        if d0 > W::zero() {
            let denom = d0.clone() * W::ratio(states as u128, 1);
            for j in 0..states {
                let inflow = adj[j].iter().fold(W::zero(), |acc, &i| acc + self.weight(i, j));
                let defect = (inflow.abs_diff(&degrees[j]) / denom.clone()).to_f64_lossy();
                max_defect = max_defect.max(defect);
            }
        }
        MetagraphCheck {
            n: self.n,
            d: self.d,
            r: self.r,
            states,
            edges,
            forward_moves: self.forward_moves,
            backward_moves: self.backward_moves,
            forward_matches_backward,
            symmetric: max_asym <= tol,
            max_asymmetry: max_asym.to_f64_lossy(),
            max_stationarity_defect: max_defect,
            max_degree: d0.to_f64_lossy(),
            min_degree: degrees.iter().map(Weight::to_f64_lossy).fold(f64::INFINITY, f64::min),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub graph: RegularGraph,
    /// The switching taken, or `None` for a self-loop.
    pub switching: Option<Switching>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    pub steps: u64,
    /// Proposals that named an actual cycle, valid or not.
    pub proposals: u64,
    pub forward_moves: u64,
    pub backward_moves: u64,
}

/// Proposal rates: forward length k is chosen with weight
/// `M_k = n d (d-1)^(k-2) / 2k >= C_k`, backward length k with weight `λ_k`.
struct Rates {
    m: Vec<f64>,
    lam: Vec<f64>,
}

impl Rates {
    fn new(n: usize, d: usize, r: usize) -> Self {
        let m = (0..=r)
            .map(|k| if k < 3 { 0.0 } else { (n * d) as f64 * (d as f64 - 1.0).powi(k as i32 - 2) / (2 * k) as f64 })
            .collect();
        let lam = (0..=r).map(|k| lambda(d, k)).collect();
        Rates { m, lam }
    }

    fn total_m(&self) -> f64 {
        self.m.iter().sum()
    }

    fn total_lam(&self) -> f64 {
        self.lam.iter().sum()
    }
}

/// Pick the bucket containing `x` among weights `w`, returning (index, offset within bucket).
fn bucket(w: &[f64], mut x: f64) -> (usize, f64) {
    for (k, &wk) in w.iter().enumerate() {
        if x < wk {
            return (k, x);
        }
        x -= wk;
    }
    let last = w.iter().rposition(|&v| v > 0.0).unwrap_or(0);
    (last, 0.0)
}

fn backward_proposal<R: Rng + ?Sized>(g: &RegularGraph, k: usize, rng: &mut R) -> Option<Switching> {
    if k > g.n() {
        return None;
    }
    let mut v: Vec<usize> = Vec::with_capacity(k);
    while v.len() < k {
        let x = rng.random_range(0..g.n());
        if !v.contains(&x) {
            v.push(x);
        }
    }
    let alpha = Cycle::new(&v).expect("distinct vertices");
    Some(Switching::Backward(random_backward(g, &alpha, rng)))
}

fn take<R: Rng + ?Sized>(g: &RegularGraph, s: Switching, r: usize) -> Result<StepOutcome> {
    let _ = std::marker::PhantomData::<R>;
    if !is_valid(g, &s, r) {
        return Ok(StepOutcome { graph: g.clone(), switching: None });
    }
    let graph = match &s {
        Switching::Forward(f) => apply_forward(g, f)?,
        Switching::Backward(b) => apply_backward(g, b)?,
    };
    Ok(StepOutcome { graph, switching: Some(s) })
}

/// One step of the metagraph walk by proposal and rejection. Every valid
/// k-cycle switching is taken with probability `1 / ([n]_k d^k (ΣM + Λ))`,
/// matching the edge weights up to a common factor, so `d_0` never has to be known.
pub fn metagraph_step<R: Rng + ?Sized>(g: &RegularGraph, r: usize, rng: &mut R) -> Result<StepOutcome> {
    if r < 3 {
        return arg("cycle cutoff r must be at least 3");
    }
    let rates = Rates::new(g.n(), g.d(), r);
    let (sm, sl) = (rates.total_m(), rates.total_lam());
    let x = rng.random::<f64>() * (sm + sl);
    let proposal = if x < sm {
        let (k, offset) = bucket(&rates.m, x);
        let cen = census(g, r)?;
        let idx = offset.floor() as usize;
        let start: usize = (3..k).map(|j| cen.count(j) as usize).sum();
        if idx >= cen.count(k) as usize {
            None
        } else {
            let alpha = &cen.cycles[start + idx];
            Some(Switching::Forward(random_forward(g, alpha, rng)))
        }
    } else {
        let (k, _) = bucket(&rates.lam, x - sm);
        backward_proposal(g, k, rng)
    };
    match proposal {
        None => Ok(StepOutcome { graph: g.clone(), switching: None }),
        Some(s) => take::<R>(g, s, r),
    }
}

/// `steps` steps of the metagraph walk. Runs of proposals that name no
/// cycle are skipped in one geometric draw; the law of the endpoint equals
/// that of iterating [`metagraph_step`].
pub fn metagraph_run<R: Rng + ?Sized>(
    start: &RegularGraph,
    r: usize,
    steps: u64,
    rng: &mut R,
) -> Result<(RegularGraph, RunStats)> {
    if r < 3 {
        return arg("cycle cutoff r must be at least 3");
    }
    let rates = Rates::new(start.n(), start.d(), r);
    let (sm, sl) = (rates.total_m(), rates.total_lam());
    let mut g = start.clone();
    let mut cen = census(&g, r)?;
    let mut stats = RunStats { steps, ..RunStats::default() };
    let mut left = steps;
    loop {
        let sc = cen.total() as f64;
        let q = ((sc + sl) / (sm + sl)).min(1.0);
        let skip = if q >= 1.0 { 0 } else { Geometric::new(q).expect("probability in (0,1)").sample(rng) };
        if skip >= left {
            break;
        }
        left -= skip + 1;
        stats.proposals += 1;
        let x = rng.random::<f64>() * (sc + sl);
        let proposal = if x < sl {
            let (k, _) = bucket(&rates.lam, x);
            backward_proposal(&g, k, rng)
        } else {
            let idx = ((x - sl).floor() as usize).min(cen.cycles.len() - 1);
            Some(Switching::Forward(random_forward(&g, &cen.cycles[idx], rng)))
        };
        let Some(s) = proposal else { continue };
        let out = take::<R>(&g, s, r)?;
        match out.switching {
            Some(Switching::Forward(_)) => stats.forward_moves += 1,
            Some(Switching::Backward(_)) => stats.backward_moves += 1,
            None => continue,
        }
        g = out.graph;
        cen = census(&g, r)?;
    }
    Ok((g, stats))
}
