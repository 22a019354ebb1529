//! Uniform and approximately uniform random regular graphs, plus exhaustive
//! enumeration of tiny cubic graphs.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::graph::{families, RegularGraph};
use crate::rng::{stream_rng, StreamRng};

/// Consecutive pairing failures tolerated before giving up.
pub const STALL_LIMIT: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    PairingRejection,
    SwitchingChain,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pairing-rejection" | "pairing" => Ok(Method::PairingRejection),
            "switching-chain" | "chain" => Ok(Method::SwitchingChain),
            other => arg(format!("unknown sampling method '{other}'")),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::PairingRejection => "pairing-rejection",
            Method::SwitchingChain => "switching-chain",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub method: Method,
    /// Edge-swap steps per sample; only read by the switching chain.
    pub burn_in: u64,
}

impl SamplerConfig {
    /// Pairing rejection for `d <= 5`, otherwise the switching chain with
    /// [`default_burn_in`] steps.
    pub fn new(n: usize, d: usize, seed: u64) -> Self {
        let method = if d <= 5 { Method::PairingRejection } else { Method::SwitchingChain };
        SamplerConfig { n, d, seed, method, burn_in: default_burn_in(n, d) }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_burn_in(mut self, burn_in: u64) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (n, d) = (self.n, self.d);
        if n == 0 || d == 0 {
            return arg(format!("need n >= 1 and d >= 1, got n={n}, d={d}"));
        }
        if d >= n {
            return arg(format!("degree d={d} must be below n={n}"));
        }
        if n * d % 2 == 1 {
            return arg(format!("n*d = {} is odd; no {d}-regular graph on {n} vertices", n * d));
        }
        Ok(())
    }
}

/// Edge-swap steps used by the switching chain: `m * ceil(ln m)` for `m = nd/2`
/// edges, at least 1000. Each edge is then proposed for a swap about
/// `2 ln m` times, enough for the coupon-collector bound on touching every edge.
pub fn default_burn_in(n: usize, d: usize) -> u64 {
    let m = (n * d / 2).max(2) as f64;
    ((m * m.ln().ceil()) as u64).max(1000)
}

/// Counters from pairing rejection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptanceStats {
    pub attempts: u64,
    pub accepted: u64,
}

impl AcceptanceStats {
    pub fn rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.accepted as f64 / self.attempts as f64
        }
    }

    fn merge(self, other: Self) -> Self {
        AcceptanceStats { attempts: self.attempts + other.attempts, accepted: self.accepted + other.accepted }
    }
}

/// Draw a uniform random perfect matching of the `nd` half-edges and reject
/// on a loop or repeated edge. Matching is built one pair at a time and
/// abandoned at the first defect; a fresh matching is drawn afterwards, so
/// accepted outputs are exactly uniform over simple graphs.
pub fn pairing_rejection<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<(RegularGraph, AcceptanceStats)> {
    let total = n * d;
    let mut points: Vec<usize> = Vec::with_capacity(total);
    let mut adj = vec![0usize; total];
    let mut deg = vec![0usize; n];
    let mut stats = AcceptanceStats::default();
    let mut failures = 0u64;
    loop {
        stats.attempts += 1;
        points.clear();
        points.extend((0..total).map(|p| p / d));
        deg.iter_mut().for_each(|x| *x = 0);
        let mut ok = true;
        let mut i = 0;
        while i < total {
            let j = rng.random_range(i + 1..total);
            points.swap(i + 1, j);
            let (u, v) = (points[i], points[i + 1]);
            if u == v || adj[u * d..u * d + deg[u]].contains(&v) {
                ok = false;
                break;
            }
            adj[u * d + deg[u]] = v;
            deg[u] += 1;
            adj[v * d + deg[v]] = u;
            deg[v] += 1;
            i += 2;
        }
        if ok {
            stats.accepted += 1;
            for v in 0..n {
                adj[v * d..(v + 1) * d].sort_unstable();
            }
            return Ok((RegularGraph::from_sorted_lists(n, d, adj), stats));
        }
        failures += 1;
        if failures >= STALL_LIMIT {
            return Err(Error::RejectionStall { attempts: failures, d });
        }
    }
}

/// Mutable graph for the edge-swap chain.
struct SwapState {
    n: usize,
    d: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<usize>,
}

impl SwapState {
    fn new(g: &RegularGraph) -> Self {
        let adj = (0..g.n()).flat_map(|v| g.neighbors(v).iter().copied()).collect();
        SwapState { n: g.n(), d: g.d(), edges: g.edges().collect(), adj }
    }

    fn has(&self, a: usize, b: usize) -> bool {
        self.adj[a * self.d..(a + 1) * self.d].contains(&b)
    }

    fn replace(&mut self, v: usize, old: usize, new: usize) {
        let slot = self.adj[v * self.d..(v + 1) * self.d].iter().position(|&x| x == old).expect("edge present");
        self.adj[v * self.d + slot] = new;
    }

    /// One proposal: two distinct edges and a re-pairing chosen uniformly.
    fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let m = self.edges.len();
        if m < 2 {
            return false;
        }
        let i = rng.random_range(0..m);
        let mut j = rng.random_range(0..m - 1);
        if j >= i {
            j += 1;
        }
        let (a, b) = self.edges[i];
        let (mut c, mut e) = self.edges[j];
        if rng.random::<bool>() {
            std::mem::swap(&mut c, &mut e);
        }
        // (a b), (c e) -> (a c), (b e)
        if a == c || b == e || self.has(a, c) || self.has(b, e) {
            return false;
        }
        self.replace(a, b, c);
        self.replace(b, a, e);
        self.replace(c, e, a);
        self.replace(e, c, b);
        self.edges[i] = (a, c);
        self.edges[j] = (b, e);
        true
    }

    fn into_graph(mut self) -> RegularGraph {
        for v in 0..self.n {
            self.adj[v * self.d..(v + 1) * self.d].sort_unstable();
        }
        RegularGraph::from_sorted_lists(self.n, self.d, self.adj)
    }
}

/// Run `steps` proposals of the double-edge-swap chain. The proposal is
/// symmetric, so the uniform law is stationary; rejected proposals stay put.
pub fn edge_swap_chain<R: Rng + ?Sized>(start: &RegularGraph, steps: u64, rng: &mut R) -> RegularGraph {
    if steps == 0 {
        return start.clone();
    }
    let mut st = SwapState::new(start);
    for _ in 0..steps {
        st.step(rng);
    }
    st.into_graph()
}

/// `steps` transitions of the edge-swap chain from `start`, driven by stream 0 of `cfg.seed`.
pub fn sample_switching_chain(cfg: &SamplerConfig, start: &RegularGraph, steps: u64) -> Result<RegularGraph> {
    if start.n() != cfg.n || start.d() != cfg.d {
        return arg(format!(
            "start graph is {}-regular on {} vertices, config asks for n={}, d={}",
            start.d(),
            start.n(),
            cfg.n,
            cfg.d
        ));
    }
    let mut rng = stream_rng(cfg.seed, 0);
    Ok(edge_swap_chain(start, steps, &mut rng))
}

fn chain_start<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<RegularGraph> {
    let base = families::circulant(n, d)?;
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let edges: Vec<_> = base.edges().map(|(u, v)| (perm[u], perm[v])).collect();
    RegularGraph::from_edges(n, d, &edges)
}

fn draw(cfg: &SamplerConfig, rng: &mut StreamRng) -> Result<(RegularGraph, AcceptanceStats)> {
    match cfg.method {
        Method::PairingRejection => pairing_rejection(cfg.n, cfg.d, rng),
        Method::SwitchingChain => {
            let start = chain_start(cfg.n, cfg.d, rng)?;
            Ok((edge_swap_chain(&start, cfg.burn_in, rng), AcceptanceStats::default()))
        }
    }
}

/// The sample with the given index; depends only on `(cfg, index)`.
pub fn sample_one(cfg: &SamplerConfig, index: u64) -> Result<RegularGraph> {
    cfg.validate()?;
    draw(cfg, &mut stream_rng(cfg.seed, index)).map(|(g, _)| g)
}

/// Samples `first..first+count`, generated in parallel and returned in index order.
pub fn sample_range(cfg: &SamplerConfig, first: u64, count: usize) -> Result<(Vec<RegularGraph>, AcceptanceStats)> {
    cfg.validate()?;
    let out: Vec<(RegularGraph, AcceptanceStats)> = (0..count as u64)
        .into_par_iter()
        .map(|i| draw(cfg, &mut stream_rng(cfg.seed, first + i)))
        .collect::<Result<_>>()?;
    let stats = out.iter().fold(AcceptanceStats::default(), |s, (_, t)| s.merge(*t));
    Ok((out.into_iter().map(|(g, _)| g).collect(), stats))
}

/// `count` exactly uniform graphs by pairing rejection.
pub fn sample_uniform(cfg: &SamplerConfig, count: usize) -> Result<Vec<RegularGraph>> {
    if cfg.method != Method::PairingRejection {
        return arg("sample_uniform requires the pairing-rejection method");
    }
    sample_range(cfg, 0, count).map(|(gs, _)| gs)
}

/// Map `f` over samples `0..count` in parallel, results in index order.
/// Graphs are dropped after use, so large batches stay in constant memory per worker.
pub fn map_samples<T, F>(cfg: &SamplerConfig, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, RegularGraph) -> Result<T> + Sync + Send,
{
    cfg.validate()?;
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let (g, _) = draw(cfg, &mut stream_rng(cfg.seed, i))?;
            f(i, g)
        })
        .collect()
}

fn check_enumeration(n: usize, d: usize) -> Result<()> {
    if d != 3 || n > 10 {
        return Err(Error::Budget(format!(
            "exhaustive enumeration is limited to d = 3 and n <= 10 (got n={n}, d={d})"
        )));
    }
    Ok(())
}

/// Visit every labelled simple cubic graph on `n <= 10` vertices in a
/// deterministic order. Returns the number visited.
///
/// The lowest vertex still short of degree d picks its missing neighbours as
/// a combination of higher vertices, so every graph arises exactly once.
pub fn for_each_regular<F: FnMut(&RegularGraph)>(n: usize, d: usize, mut visit: F) -> Result<u64> {
    check_enumeration(n, d)?;
    if n * d % 2 == 1 || d >= n {
        return Ok(0);
    }
    let mut adj = vec![Vec::with_capacity(d); n];
    let mut count = 0u64;
    grow(n, d, &mut adj, &mut |adj| {
        let flat: Vec<usize> = adj
            .iter()
            .flat_map(|l| {
                let mut l = l.clone();
                l.sort_unstable();
                l
            })
            .collect();
        count += 1;
        visit(&RegularGraph::from_sorted_lists(n, d, flat));
    });
    Ok(count)
}

fn grow(n: usize, d: usize, adj: &mut Vec<Vec<usize>>, emit: &mut dyn FnMut(&[Vec<usize>])) {
    let Some(v) = (0..n).find(|&v| adj[v].len() < d) else {
        emit(adj);
        return;
    };
    let need = d - adj[v].len();
    let cands: Vec<usize> = (v + 1..n).filter(|&w| adj[w].len() < d && !adj[v].contains(&w)).collect();
    if cands.len() < need {
        return;
    }
    let mut pick = Vec::with_capacity(need);
    choose(&cands, need, 0, &mut pick, &mut |chosen| {
        for &w in chosen {
            adj[v].push(w);
            adj[w].push(v);
        }
        grow(n, d, adj, emit);
        for &w in chosen {
            adj[v].pop();
            adj[w].pop();
        }
    });
}

fn choose(items: &[usize], k: usize, from: usize, pick: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if pick.len() == k {
        f(pick);
        return;
    }
    for i in from..items.len() {
        if items.len() - i < k - pick.len() {
            break;
        }
        pick.push(items[i]);
        choose(items, k, i + 1, pick, f);
        pick.pop();
    }
}

/// All labelled simple cubic graphs on `n` vertices. The list form is capped
/// at `n <= 8`; [`for_each_regular`] streams the 11 180 820 graphs at n = 10.
pub fn enumerate_all_regular(n: usize, d: usize) -> Result<Vec<RegularGraph>> {
    check_enumeration(n, d)?;
    if n > 8 {
        return Err(Error::Budget(format!(
            "materialising every cubic graph on {n} vertices is too large; stream them with for_each_regular"
        )));
    }
    let mut out = Vec::new();
    for_each_regular(n, d, |g| out.push(g.clone()))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn enumeration_sizes() {
        assert_eq!(enumerate_all_regular(4, 3).unwrap().len(), 1);
        assert_eq!(enumerate_all_regular(5, 3).unwrap().len(), 0);
        let six = enumerate_all_regular(6, 3).unwrap();
        assert_eq!(six.len(), 70);
        let keys: HashSet<u128> = six.iter().map(|g| g.edge_mask()).collect();
        assert_eq!(keys.len(), 70);
        assert!(enumerate_all_regular(12, 3).is_err());
        assert!(enumerate_all_regular(6, 4).is_err());
    }

    #[test]
    fn pairing_gives_k4() {
        let cfg = SamplerConfig::new(4, 3, 7);
        let g = sample_uniform(&cfg, 1).unwrap().pop().unwrap();
        assert_eq!(g, families::complete(4));
    }

    #[test]
    fn swap_chain_keeps_regularity() {
        let mut rng = stream_rng(3, 0);
        let g = families::circulant(30, 4).unwrap();
        let h = edge_swap_chain(&g, 5000, &mut rng);
        let again = RegularGraph::from_edges(30, 4, &h.edges().collect::<Vec<_>>()).unwrap();
        assert_eq!(again, h);
        assert_ne!(h, g);
    }

    #[test]
    fn swap_chain_stuck_on_k4() {
        let k4 = families::complete(4);
        let cfg = SamplerConfig::new(4, 3, 1);
        assert_eq!(sample_switching_chain(&cfg, &k4, 1).unwrap(), k4);
        assert_eq!(sample_switching_chain(&cfg, &k4, 0).unwrap(), k4);
    }

    #[test]
    fn bad_configs() {
        assert!(SamplerConfig::new(5, 3, 0).validate().is_err());
        assert!(SamplerConfig::new(3, 3, 0).validate().is_err());
        assert!(sample_uniform(&SamplerConfig::new(20, 8, 0), 1).is_err());
    }
}
