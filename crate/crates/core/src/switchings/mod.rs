//! Forward and backward α-switchings.
//!
//! A forward switching on a cycle `α = v_0 ... v_{k-1}` of G deletes the
//! cycle edges `v_i v_{i+1}` and the target edges `w_i u_{i+1}`, and adds the
//! star edges `v_i u_i`, `v_i w_i`. The backward switching with the same
//! sequences undoes it. Moves are stored against the canonical orientation of
//! α; reversing α exchanges the roles of `u` and `w`.

mod count;
mod metagraph;
mod stein;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use count::{
    count_backward, count_forward, enumerate_backward, enumerate_forward, CountMode, SwitchCount, EXACT_BUDGET,
};
pub use metagraph::{metagraph_run, metagraph_step, Metagraph, MetagraphCheck, RunStats, StepOutcome};
pub use stein::{
    certificate_from_rates, immigration_death_fixture, rate_observation, stein_certificate, xi, RateObservation, SteinCertificate,
    SteinTerm,
};

use crate::census::cycles_through_edges;
use crate::error::{arg, Error, Result};
use crate::graph::{
    canonical_placement, contains_cycle, distance, edge_key, placed_index, Cycle, Edge, OrientedEdge, Overlay,
    RegularGraph,
};

fn canonical_triplet(v: &[usize], u: &[usize], w: &[usize]) -> Result<(Cycle, Vec<usize>, Vec<usize>)> {
    let k = v.len();
    if u.len() != k || w.len() != k {
        return arg(format!("switching sequences must all have length {k}"));
    }
    let alpha = Cycle::new(v)?;
    let (rot, refl) = canonical_placement(v);
    let mut cu = Vec::with_capacity(k);
    let mut cw = Vec::with_capacity(k);
    for i in 0..k {
        let j = placed_index(k, rot, refl, i);
        if refl {
            cu.push(w[j]);
            cw.push(u[j]);
        } else {
            cu.push(u[j]);
            cw.push(w[j]);
        }
    }
    Ok((alpha, cu, cw))
}

/// Deletes α together with the target edges `e_i' = w_i -> u_{i+1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ForwardSwitching {
    pub alpha: Cycle,
    /// `targets[i]` is the oriented edge `w_i -> u_{i+1}`.
    pub targets: Vec<OrientedEdge>,
}

impl ForwardSwitching {
    /// From sequences aligned with `v` (any rotation or direction of α).
    pub fn new(v: &[usize], u: &[usize], w: &[usize]) -> Result<Self> {
        let (alpha, u, w) = canonical_triplet(v, u, w)?;
        let k = alpha.len();
        let targets = (0..k).map(|i| OrientedEdge::new(w[i], u[(i + 1) % k])).collect::<Result<_>>()?;
        Ok(ForwardSwitching { alpha, targets })
    }

    pub fn k(&self) -> usize {
        self.alpha.len()
    }

    pub fn v(&self, i: usize) -> usize {
        self.alpha.vertices()[i % self.k()]
    }

    pub fn u(&self, i: usize) -> usize {
        let k = self.k();
        self.targets[(i % k + k - 1) % k].head
    }

    pub fn w(&self, i: usize) -> usize {
        self.targets[i % self.k()].tail
    }

    pub fn removed(&self) -> Vec<Edge> {
        self.alpha.edges().chain(self.targets.iter().map(OrientedEdge::key)).collect()
    }

    pub fn added(&self) -> Vec<Edge> {
        (0..self.k()).flat_map(|i| [edge_key(self.v(i), self.u(i)), edge_key(self.v(i), self.w(i))]).collect()
    }

    /// The backward switching that undoes this move.
    pub fn mirror(&self) -> BackwardSwitching {
        BackwardSwitching {
            alpha: self.alpha.clone(),
            paths: (0..self.k()).map(|i| [self.u(i), self.v(i), self.w(i)]).collect(),
        }
    }
}

/// Creates α from the oriented paths `u_i v_i w_i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BackwardSwitching {
    pub alpha: Cycle,
    /// `paths[i] = [u_i, v_i, w_i]`.
    pub paths: Vec<[usize; 3]>,
}

impl BackwardSwitching {
    pub fn new(v: &[usize], u: &[usize], w: &[usize]) -> Result<Self> {
        let (alpha, u, w) = canonical_triplet(v, u, w)?;
        let paths = alpha.vertices().iter().enumerate().map(|(i, &vi)| [u[i], vi, w[i]]).collect();
        Ok(BackwardSwitching { alpha, paths })
    }

    pub fn k(&self) -> usize {
        self.alpha.len()
    }

    pub fn v(&self, i: usize) -> usize {
        self.paths[i % self.k()][1]
    }

    pub fn u(&self, i: usize) -> usize {
        self.paths[i % self.k()][0]
    }

    pub fn w(&self, i: usize) -> usize {
        self.paths[i % self.k()][2]
    }

    pub fn removed(&self) -> Vec<Edge> {
        (0..self.k()).flat_map(|i| [edge_key(self.u(i), self.v(i)), edge_key(self.v(i), self.w(i))]).collect()
    }

    pub fn added(&self) -> Vec<Edge> {
        let k = self.k();
        self.alpha.edges().chain((0..k).map(|i| edge_key(self.w(i), self.u(i + 1)))).collect()
    }

    pub fn mirror(&self) -> ForwardSwitching {
        let k = self.k();
        ForwardSwitching {
            alpha: self.alpha.clone(),
            targets: (0..k).map(|i| OrientedEdge { tail: self.w(i), head: self.u(i + 1) }).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "direction", rename_all = "lowercase")]
pub enum Switching {
    Forward(ForwardSwitching),
    Backward(BackwardSwitching),
}

impl Switching {
    pub fn alpha(&self) -> &Cycle {
        match self {
            Switching::Forward(s) => &s.alpha,
            Switching::Backward(s) => &s.alpha,
        }
    }

    pub fn removed(&self) -> Vec<Edge> {
        match self {
            Switching::Forward(s) => s.removed(),
            Switching::Backward(s) => s.removed(),
        }
    }

    pub fn added(&self) -> Vec<Edge> {
        match self {
            Switching::Forward(s) => s.added(),
            Switching::Backward(s) => s.added(),
        }
    }

    fn u_w(&self) -> (Vec<usize>, Vec<usize>) {
        match self {
            Switching::Forward(s) => ((0..s.k()).map(|i| s.u(i)).collect(), (0..s.k()).map(|i| s.w(i)).collect()),
            Switching::Backward(s) => ((0..s.k()).map(|i| s.u(i)).collect(), (0..s.k()).map(|i| s.w(i)).collect()),
        }
    }
}

fn pairwise_distinct<T: Ord + Copy>(xs: &[T]) -> bool {
    let mut s = xs.to_vec();
    s.sort_unstable();
    s.windows(2).all(|w| w[0] != w[1])
}

/// Problems that stop a switching from producing a simple d-regular graph.
fn structural_defect(g: &RegularGraph, removed: &[Edge], added: &[Edge]) -> Option<String> {
    if let Some(&(a, b)) = removed.iter().find(|&&(a, b)| !g.has_edge(a, b)) {
        return Some(format!("edge {a}-{b} to delete is absent"));
    }
    if !pairwise_distinct(removed) {
        return Some("edges to delete are not distinct".into());
    }
    if let Some(&(a, _)) = added.iter().find(|&&(a, b)| a == b) {
        return Some(format!("loop at {a}"));
    }
    if let Some(&(a, b)) = added.iter().find(|&&(a, b)| g.has_edge(a, b)) {
        return Some(format!("edge {a}-{b} to add is already present"));
    }
    if !pairwise_distinct(added) {
        return Some("edges to add are not distinct".into());
    }
    None
}

/// Short cycles destroyed and created by a switching.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusChange {
    pub destroyed: BTreeSet<Cycle>,
    pub created: BTreeSet<Cycle>,
}

/// Difference between the short-cycle censuses before and after a structurally sound move.
pub fn census_change(g: &RegularGraph, removed: &[Edge], added: &[Edge], r: usize) -> CensusChange {
    let destroyed = cycles_through_edges(g, removed, r);
    let after = Overlay { base: g, removed, added };
    let created = cycles_through_edges(&after, added, r);
    CensusChange { destroyed, created }
}

/// Structural soundness plus pairwise distinct `u_i` and distinct `w_i`.
fn sound(g: &RegularGraph, s: &Switching) -> bool {
    let (u, w) = s.u_w();
    pairwise_distinct(&u) && pairwise_distinct(&w) && structural_defect(g, &s.removed(), &s.added()).is_none()
}

/// A switching is valid when α is the only short cycle it creates or destroys.
pub fn is_valid(g: &RegularGraph, s: &Switching, r: usize) -> bool {
    if !sound(g, s) || s.alpha().vertices().iter().any(|&v| v >= g.n()) {
        return false;
    }
    let (removed, added) = (s.removed(), s.added());
    let change = census_change(g, &removed, &added, r);
    let only_alpha = |set: &BTreeSet<Cycle>| set.len() == 1 && set.contains(s.alpha());
    match s {
        Switching::Forward(_) => only_alpha(&change.destroyed) && change.created.is_empty(),
        Switching::Backward(_) => change.destroyed.is_empty() && only_alpha(&change.created),
    }
}

fn apply(g: &RegularGraph, removed: &[Edge], added: &[Edge]) -> Result<RegularGraph> {
    if let Some(msg) = structural_defect(g, removed, added) {
        return Err(Error::InvalidMove(msg));
    }
    let out = g.rewired(removed, added);
    debug_assert!(RegularGraph::from_edges(out.n(), out.d(), &out.edges().collect::<Vec<_>>()).is_ok());
    Ok(out)
}

pub fn apply_forward(g: &RegularGraph, s: &ForwardSwitching) -> Result<RegularGraph> {
    if !contains_cycle(g, &s.alpha) {
        return Err(Error::Precondition(format!("graph does not contain cycle {}", s.alpha)));
    }
    if let Some(t) = s.targets.iter().find(|t| !g.has_edge(t.tail, t.head)) {
        return Err(Error::Precondition(format!("target edge {}-{} is absent", t.tail, t.head)));
    }
    apply(g, &s.removed(), &s.added())
}

pub fn apply_backward(g: &RegularGraph, s: &BackwardSwitching) -> Result<RegularGraph> {
    if let Some(p) = s.paths.iter().find(|p| !g.has_edge(p[0], p[1]) || !g.has_edge(p[1], p[2])) {
        return Err(Error::Precondition(format!("path {}-{}-{} is absent", p[0], p[1], p[2])));
    }
    apply(g, &s.removed(), &s.added())
}

fn dist(g: &RegularGraph, a: &[usize], b: &[usize]) -> usize {
    distance(g, a, b).expect("nonempty sets").unwrap_or(usize::MAX)
}

/// The distance-based sufficient conditions for validity. For a forward
/// move: α shares no edge with another short cycle, no target edge is on a
/// short cycle, `dist(e_i, e_i') >= r`, `2 dist(e_i', e_j') >= r` for i != j,
/// and `dist(w_i, u_i) >= r`. For a backward move: no path edge is on a short
/// cycle and paths i, i+j are at distance at least `r - j + 1` for
/// `1 <= j <= r/2` (offsets that wrap back onto path i are skipped).
pub fn meets_sufficient_conditions(g: &RegularGraph, s: &Switching, r: usize) -> bool {
    if !sound(g, s) {
        return false;
    }
    let on_short_cycle = |e: Edge| !cycles_through_edges(g, &[e], r).is_empty();
    match s {
        Switching::Forward(f) => {
            let k = f.k();
            let others = cycles_through_edges(g, &f.alpha.edges().collect::<Vec<_>>(), r);
            if others.iter().any(|c| *c != f.alpha) {
                return false;
            }
            for i in 0..k {
                let t = f.targets[i];
                if on_short_cycle(t.key()) {
                    return false;
                }
                if dist(g, &[f.v(i), f.v(i + 1)], &[t.tail, t.head]) < r {
                    return false;
                }
                if dist(g, &[f.w(i)], &[f.u(i)]) < r {
                    return false;
                }
                for j in i + 1..k {
                    let o = f.targets[j];
                    if 2 * dist(g, &[t.tail, t.head], &[o.tail, o.head]) < r {
                        return false;
                    }
                }
            }
            true
        }
        Switching::Backward(b) => {
            let k = b.k();
            if b.removed().into_iter().any(on_short_cycle) {
                return false;
            }
            for i in 0..k {
                for j in 1..=r / 2 {
                    if j % k == 0 {
                        continue;
                    }
                    if dist(g, &b.paths[i], &b.paths[(i + j) % k]) < r - j + 1 {
                        return false;
                    }
                }
            }
            true
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::census::census;
    use crate::graph::families;

    /// Two disjoint prisms (triangle 0-1-2 with 3-4-5, triangle 6-7-8 with 9-10-11)
    /// joined into one cubic graph by swapping two rungs.
    pub(crate) fn fixture() -> RegularGraph {
        let e = [
            (0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (0, 3), (1, 4), (2, 11),
            (6, 7), (7, 8), (6, 8), (9, 10), (10, 11), (9, 11), (6, 9), (7, 10), (8, 5),
        ];
        RegularGraph::from_edges(12, 3, &e).unwrap()
    }

    #[test]
    fn canonical_reindexing_swaps_u_w() {
        let f = ForwardSwitching::new(&[2, 1, 0], &[10, 11, 12], &[20, 21, 22]).unwrap();
        assert_eq!(f.alpha.vertices(), &[0, 1, 2]);
        assert_eq!((f.u(0), f.w(0)), (22, 12));
        let g = ForwardSwitching::new(&[0, 1, 2], &[22, 21, 20], &[12, 11, 10]).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn forward_then_backward_round_trip() {
        let g = fixture();
        let alpha = Cycle::new(&[0, 1, 2]).unwrap();
        let mut moves = Vec::new();
        enumerate_forward(&g, &alpha, 3, |f| moves.push(f.clone())).unwrap();
        assert!(!moves.is_empty());
        for f in &moves {
            let h = apply_forward(&g, f).unwrap();
            assert!(!contains_cycle(&h, &f.alpha));
            assert!(is_valid(&h, &Switching::Backward(f.mirror()), 3));
            assert_eq!(apply_backward(&h, &f.mirror()).unwrap(), g);
        }
    }

    #[test]
    fn k4_has_no_valid_forward_triangle_move() {
        let k4 = families::complete(4);
        let cen = census(&k4, 3).unwrap();
        for alpha in &cen.cycles {
            let n = count_forward(&k4, alpha, 3, CountMode::Exact).unwrap();
            assert_eq!(n.exact, Some(0));
        }
    }
}
