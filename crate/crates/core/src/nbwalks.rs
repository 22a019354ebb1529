//! Cyclically non-backtracking walk counts.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::census::CycleCensus;
use crate::error::{arg, Error, Result};
use crate::graph::RegularGraph;

/// Counts indexed by length: entry k refers to walks or cycles of length k; entry 0 is unused.
pub type CountVector = Vec<u128>;

/// Directed edges `v -> adj[v][i]` numbered `v * d + i`.
struct DirectedEdges<'a> {
    g: &'a RegularGraph,
}

impl DirectedEdges<'_> {
    fn head(&self, e: usize) -> usize {
        let d = self.g.d();
        self.g.neighbors(e / d)[e % d]
    }

    /// Successors of `e = u -> v`: every `v -> w` with `w != u`.
    fn successors(&self, e: usize) -> impl Iterator<Item = usize> + '_ {
        let d = self.g.d();
        let u = e / d;
        let v = self.head(e);
        self.g.neighbors(v).iter().enumerate().filter(move |&(_, &w)| w != u).map(move |(j, _)| v * d + j)
    }
}

/// `CNBW_k` for `k = 1..=kmax` as `tr B^k` for the non-backtracking operator B
/// on directed edges. A closed non-backtracking edge sequence is exactly a
/// cyclically non-backtracking walk, so lollipop walks are excluded.
pub fn cnbw_counts(g: &RegularGraph, kmax: usize) -> Result<CountVector> {
    if kmax == 0 {
        return arg("kmax must be at least 1");
    }
    let ops = DirectedEdges { g };
    let starts = g.n() * g.d();
    let per_start: Vec<CountVector> = (0..starts)
        .into_par_iter()
        .map(|e0| {
            let mut out = vec![0u128; kmax + 1];
            let mut cur: HashMap<usize, u128> = HashMap::from([(e0, 1)]);
            for out_k in out.iter_mut().skip(1) {
                let mut next: HashMap<usize, u128> = HashMap::with_capacity(cur.len() * 2);
                for (&e, &c) in &cur {
                    for f in ops.successors(e) {
                        *next.entry(f).or_insert(0) += c;
                    }
                }
                *out_k = next.get(&e0).copied().unwrap_or(0);
                cur = next;
            }
            out
        })
        .collect();
    let mut total = vec![0u128; kmax + 1];
    for v in per_start {
        for (t, x) in total.iter_mut().zip(v) {
            *t = t.checked_add(x).ok_or(Error::Overflow("CNBW accumulation"))?;
        }
    }
    Ok(total)
}

/// `CNBW_k` for `k <= kmax <= 5` as `2k C_k`. A closed non-backtracking walk
/// that revisits a vertex splits into two closed pieces of length at least 3,
/// so below length 6 every such walk traverses a simple cycle.
pub fn cnbw_short(g: &RegularGraph, kmax: usize) -> Result<CountVector> {
    if kmax == 0 || kmax > 5 {
        return arg(format!("the cycle route covers 1 <= kmax <= 5, got {kmax}"));
    }
    let mut out = vec![0u128; kmax + 1];
    if kmax >= 3 {
        let cen = crate::census::census(g, kmax)?;
        for (k, slot) in out.iter_mut().enumerate().skip(3) {
            *slot = 2 * k as u128 * cen.count(k) as u128;
        }
    }
    Ok(out)
}

/// [`cnbw_short`] when it applies, otherwise [`cnbw_counts`].
pub fn cnbw_fast(g: &RegularGraph, kmax: usize) -> Result<CountVector> {
    if (1..=5).contains(&kmax) {
        cnbw_short(g, kmax)
    } else {
        cnbw_counts(g, kmax)
    }
}

/// `Σ_{j | k} 2j C_j` with `C_1 = C_2 = 0`.
pub fn cnbw_divisor_sum(census: &CycleCensus, kmax: usize) -> Result<CountVector> {
    if kmax > census.r {
        return arg(format!("kmax={kmax} exceeds the census cutoff r={}", census.r));
    }
    let mut out = vec![0u128; kmax + 1];
    for (k, slot) in out.iter_mut().enumerate().skip(1) {
        *slot = (3..=k).filter(|j| k % j == 0).map(|j| 2 * j as u128 * census.count(j) as u128).sum();
    }
    Ok(out)
}

/// `μ_k(d) = Σ_{j | k, j >= 3} (d-1)^j`, the limiting mean of `CNBW_k`.
pub fn mu_k(d: u64, k: u64) -> u128 {
    let b = d.saturating_sub(1) as u128;
    (3..=k).filter(|j| k % j == 0).map(|j| b.pow(j as u32)).sum()
}

/// Number of cyclically reduced words of length k in a free group on d generators.
pub fn a_dk(d: u64, k: u32) -> Result<u128> {
    if d == 0 || k == 0 {
        return arg("a(d,k) needs d >= 1 and k >= 1");
    }
    let p = (2 * d as u128 - 1).checked_pow(k).ok_or(Error::Overflow("a(d,k)"))?;
    Ok(if k % 2 == 0 { p - 1 + 2 * d as u128 } else { p + 1 })
}

/// Brute-force `CNBW_k`: every closed vertex sequence with no immediate
/// reversal, wrap-around included. Exponential; for cross-checks on tiny graphs.
pub fn cnbw_brute(g: &RegularGraph, k: usize) -> u128 {
    fn rec(g: &RegularGraph, k: usize, walk: &mut Vec<usize>, total: &mut u128) {
        let t = walk.len();
        if t == k {
            let (first, last) = (walk[0], walk[k - 1]);
            if g.has_edge(last, first) && (k < 2 || walk[k - 2] != first) && (k < 2 || walk[1] != last) {
                *total += 1;
            }
            return;
        }
        let cur = walk[t - 1];
        for &w in g.neighbors(cur) {
            if t >= 2 && walk[t - 2] == w {
                continue;
            }
            walk.push(w);
            rec(g, k, walk, total);
            walk.pop();
        }
    }
    let mut total = 0;
    if k < 1 {
        return 0;
    }
    for s in 0..g.n() {
        let mut walk = vec![s];
        rec(g, k, &mut walk, &mut total);
    }
    total
}
