use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{is_valid, BackwardSwitching, ForwardSwitching, Switching};
use crate::error::{Error, Result};
use crate::graph::{contains_cycle, falling_factorial, Cycle, OrientedEdge, RegularGraph};
use crate::rng::stream_rng;

/// Largest candidate space enumerated in exact mode.
pub const EXACT_BUDGET: u128 = 200_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum CountMode {
    Exact,
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchCount {
    pub estimate: f64,
    pub stderr: f64,
    /// Present in exact mode.
    pub exact: Option<u128>,
    /// Size of the candidate space: `[n]_k d^k` forward, `(d(d-1))^k` backward.
    pub candidates: u128,
    pub samples: u64,
}

pub(crate) fn forward_space(n: usize, d: usize, k: usize) -> Result<u128> {
    let dk = (d as u128).checked_pow(k as u32).ok_or(Error::Overflow("d^k"))?;
    falling_factorial(n as u64, k as u64)?.checked_mul(dk).ok_or(Error::Overflow("[n]_k d^k"))
}

pub(crate) fn backward_space(d: usize, k: usize) -> Result<u128> {
    ((d * (d - 1)) as u128).checked_pow(k as u32).ok_or(Error::Overflow("(d(d-1))^k"))
}

fn budget(space: u128) -> Result<()> {
    if space > EXACT_BUDGET {
        return Err(Error::Budget(format!(
            "exact enumeration would inspect {space} candidates (limit {EXACT_BUDGET}); use monte-carlo mode"
        )));
    }
    Ok(())
}

fn check_in_range(g: &RegularGraph, alpha: &Cycle) -> Result<()> {
    if let Some(&v) = alpha.vertices().iter().find(|&&v| v >= g.n()) {
        return Err(Error::Precondition(format!("cycle vertex {v} out of range for n={}", g.n())));
    }
    Ok(())
}

/// Valid forward moves on `alpha` whose first target starts at `w0`.
fn forward_with_first(g: &RegularGraph, alpha: &Cycle, r: usize, w0: usize) -> Vec<ForwardSwitching> {
    let k = alpha.len();
    let v = alpha.vertices();
    let mut out = Vec::new();
    let mut w = Vec::with_capacity(k);
    // u[i] for i = 1..k then u[0] last
    let mut u_next = Vec::with_capacity(k);
    fn rec(
        g: &RegularGraph,
        alpha: &Cycle,
        r: usize,
        v: &[usize],
        w: &mut Vec<usize>,
        u_next: &mut Vec<usize>,
        out: &mut Vec<ForwardSwitching>,
        w0: Option<usize>,
    ) {
        let k = v.len();
        let i = w.len();
        if i == k {
            let targets = (0..k).map(|j| OrientedEdge { tail: w[j], head: u_next[j] }).collect();
            let f = ForwardSwitching { alpha: alpha.clone(), targets };
            if is_valid(g, &Switching::Forward(f.clone()), r) {
                out.push(f);
            }
            return;
        }
        let choices: Vec<usize> = match w0 {
            Some(x) if i == 0 => vec![x],
            _ => (0..g.n()).collect(),
        };
        for wi in choices {
            if wi == v[i] || g.has_edge(v[i], wi) || w.contains(&wi) {
                continue;
            }
            let vn = v[(i + 1) % k];
            for &un in g.neighbors(wi) {
                if un == vn || g.has_edge(vn, un) || u_next.contains(&un) {
                    continue;
                }
                w.push(wi);
                u_next.push(un);
                rec(g, alpha, r, v, w, u_next, out, w0);
                w.pop();
                u_next.pop();
            }
        }
    }
    rec(g, alpha, r, v, &mut w, &mut u_next, &mut out, Some(w0));
    out
}

/// Visit every valid forward α-switching, one per rotation class, in a fixed order.
pub fn enumerate_forward<F: FnMut(&ForwardSwitching)>(
    g: &RegularGraph,
    alpha: &Cycle,
    r: usize,
    mut visit: F,
) -> Result<u128> {
    check_in_range(g, alpha)?;
    if !contains_cycle(g, alpha) {
        return Err(Error::Precondition(format!("graph does not contain cycle {alpha}")));
    }
    budget(forward_space(g.n(), g.d(), alpha.len())?)?;
    let mut total = 0;
    for w0 in 0..g.n() {
        for f in forward_with_first(g, alpha, r, w0) {
            total += 1;
            visit(&f);
        }
    }
    Ok(total)
}

/// Valid backward moves on `alpha` whose first path is `u0 v_0 w0`.
fn backward_with_first(g: &RegularGraph, alpha: &Cycle, r: usize, first: (usize, usize)) -> Vec<BackwardSwitching> {
    let v = alpha.vertices();
    let k = v.len();
    let mut out = Vec::new();
    let mut paths: Vec<[usize; 3]> = Vec::with_capacity(k);
    fn rec(
        g: &RegularGraph,
        alpha: &Cycle,
        r: usize,
        paths: &mut Vec<[usize; 3]>,
        out: &mut Vec<BackwardSwitching>,
        first: (usize, usize),
    ) {
        let v = alpha.vertices();
        let k = v.len();
        let i = paths.len();
        if i == k {
            let (u0, _) = first;
            let wl = paths[k - 1][2];
            if wl == u0 || g.has_edge(wl, u0) {
                return;
            }
            let b = BackwardSwitching { alpha: alpha.clone(), paths: paths.clone() };
            if is_valid(g, &Switching::Backward(b.clone()), r) {
                out.push(b);
            }
            return;
        }
        let nb = g.neighbors(v[i]);
        for &ui in nb {
            for &wi in nb {
                if ui == wi || (i == 0 && (ui, wi) != first) {
                    continue;
                }
                if i > 0 {
                    let wp = paths[i - 1][2];
                    if wp == ui || g.has_edge(wp, ui) {
                        continue;
                    }
                }
                if paths.iter().any(|p| p[0] == ui || p[2] == wi) {
                    continue;
                }
                paths.push([ui, v[i], wi]);
                rec(g, alpha, r, paths, out, first);
                paths.pop();
            }
        }
    }
    if alpha.edges().any(|(a, b)| g.has_edge(a, b)) || k == 0 {
        return out;
    }
    rec(g, alpha, r, &mut paths, &mut out, first);
    out
}

fn first_pairs(g: &RegularGraph, v0: usize) -> Vec<(usize, usize)> {
    let nb = g.neighbors(v0);
    nb.iter().flat_map(|&a| nb.iter().filter(move |&&b| b != a).map(move |&b| (a, b))).collect()
}

/// Visit every valid backward α-switching, one per rotation class, in a fixed order.
pub fn enumerate_backward<F: FnMut(&BackwardSwitching)>(
    g: &RegularGraph,
    alpha: &Cycle,
    r: usize,
    mut visit: F,
) -> Result<u128> {
    check_in_range(g, alpha)?;
    budget(backward_space(g.d(), alpha.len())?)?;
    let mut total = 0;
    for first in first_pairs(g, alpha.vertices()[0]) {
        for b in backward_with_first(g, alpha, r, first) {
            total += 1;
            visit(&b);
        }
    }
    Ok(total)
}

/// Uniform draw from the forward candidate space: distinct `w_i`, then `u_{i+1}` among the neighbours of `w_i`.
pub(crate) fn random_forward<R: Rng + ?Sized>(g: &RegularGraph, alpha: &Cycle, rng: &mut R) -> ForwardSwitching {
    let k = alpha.len();
    let mut w: Vec<usize> = Vec::with_capacity(k);
    while w.len() < k {
        let x = rng.random_range(0..g.n());
        if !w.contains(&x) {
            w.push(x);
        }
    }
    let targets = w
        .iter()
        .map(|&wi| {
            let nb = g.neighbors(wi);
            OrientedEdge { tail: wi, head: nb[rng.random_range(0..nb.len())] }
        })
        .collect();
    ForwardSwitching { alpha: alpha.clone(), targets }
}

/// Uniform draw of ordered distinct neighbour pairs `(u_i, w_i)` at each `v_i`.
pub(crate) fn random_backward<R: Rng + ?Sized>(g: &RegularGraph, alpha: &Cycle, rng: &mut R) -> BackwardSwitching {
    let d = g.d();
    let paths = alpha
        .vertices()
        .iter()
        .map(|&v| {
            let nb = g.neighbors(v);
            let a = rng.random_range(0..d);
            let mut b = rng.random_range(0..d - 1);
            if b >= a {
                b += 1;
            }
            [nb[a], v, nb[b]]
        })
        .collect();
    BackwardSwitching { alpha: alpha.clone(), paths }
}

fn monte_carlo<F>(space: u128, samples: u64, seed: u64, valid: F) -> SwitchCount
where
    F: Fn(&mut crate::rng::StreamRng) -> bool + Sync,
{
    // fixed-size chunks keep the result independent of the worker count
    const CHUNK: u64 = 4096;
    let chunks = samples.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c);
            let len = CHUNK.min(samples - c * CHUNK);
            (0..len).filter(|_| valid(&mut rng)).count() as u64
        })
        .sum();
    let p = hits as f64 / samples as f64;
    let s = space as f64;
    SwitchCount {
        estimate: s * p,
        stderr: s * (p * (1.0 - p) / samples as f64).sqrt(),
        exact: None,
        candidates: space,
        samples,
    }
}

fn exact(space: u128, count: u128) -> SwitchCount {
    SwitchCount { estimate: count as f64, stderr: 0.0, exact: Some(count), candidates: space, samples: 0 }
}

/// `F_α`: valid forward switchings on a cycle of `g`.
pub fn count_forward(g: &RegularGraph, alpha: &Cycle, r: usize, mode: CountMode) -> Result<SwitchCount> {
    check_in_range(g, alpha)?;
    if !contains_cycle(g, alpha) {
        return Err(Error::Precondition(format!("graph does not contain cycle {alpha}")));
    }
    let space = forward_space(g.n(), g.d(), alpha.len())?;
    match mode {
        CountMode::Exact => {
            budget(space)?;
            let count: usize = (0..g.n()).into_par_iter().map(|w0| forward_with_first(g, alpha, r, w0).len()).sum();
            Ok(exact(space, count as u128))
        }
        CountMode::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return crate::error::arg("monte-carlo mode needs at least one sample");
            }
            Ok(monte_carlo(space, samples, seed, |rng| {
                is_valid(g, &Switching::Forward(random_forward(g, alpha, rng)), r)
            }))
        }
    }
}

/// `B_α`: valid backward switchings creating a cycle of `K_n`.
pub fn count_backward(g: &RegularGraph, alpha: &Cycle, r: usize, mode: CountMode) -> Result<SwitchCount> {
    check_in_range(g, alpha)?;
    let space = backward_space(g.d(), alpha.len())?;
    match mode {
        CountMode::Exact => {
            budget(space)?;
            let count: usize = first_pairs(g, alpha.vertices()[0])
                .into_par_iter()
                .map(|first| backward_with_first(g, alpha, r, first).len())
                .sum();
            Ok(exact(space, count as u128))
        }
        CountMode::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return crate::error::arg("monte-carlo mode needs at least one sample");
            }
            Ok(monte_carlo(space, samples, seed, |rng| {
                is_valid(g, &Switching::Backward(random_backward(g, alpha, rng)), r)
            }))
        }
    }
}
