use rand::Rng;
use serde::{Deserialize, Serialize};

use super::count::{random_backward, random_forward};
use super::{is_valid, Switching};
use crate::census::census;
use crate::error::{arg, Result};
use crate::graph::{Cycle, RegularGraph};
use crate::rng::{derive_seed, stream_rng};
use crate::sampler::{map_samples, SamplerConfig};
use crate::stats::{lambda, mean_stderr, poisson_draw, ReferenceBounds};

/// Per-graph inputs to the Stein bound for one exchangeable pair. Index k of
/// every vector is cycle length k; entries below 3 are ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateObservation {
    /// The counts `W_k`.
    pub w: Vec<f64>,
    /// `c_k P[W'_k = W_k + 1 | W]`.
    pub plus: Vec<f64>,
    /// `c_k P[W'_k = W_k - 1 | W]`.
    pub minus: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteinTerm {
    pub k: usize,
    pub lambda: f64,
    /// `min(1, 1.4 / sqrt(λ_k))`.
    pub xi: f64,
    /// Estimate of `E|λ_k - c_k P[+]|`.
    pub backward_term: f64,
    pub backward_stderr: f64,
    /// Estimate of `E|W_k - c_k P[-]|`.
    pub forward_term: f64,
    pub forward_stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteinCertificate {
    pub n: usize,
    pub d: usize,
    pub r: usize,
    pub samples: usize,
    pub terms: Vec<SteinTerm>,
    /// `Σ_k ξ_k (backward_term + forward_term)`.
    pub bound: f64,
    /// Standard error of `bound` over the sampled graphs.
    pub stderr: f64,
    pub reference: Option<ReferenceBounds>,
}

pub fn xi(lambda: f64) -> f64 {
    (1.4 / lambda.sqrt()).min(1.0)
}

/// Assemble `Σ_k ξ_k (E|λ_k - c_k P[+]| + E|W_k - c_k P[-]|)` from per-pair observations.
/// `lambdas[k]` is the target mean for length k.
pub fn certificate_from_rates(lambdas: &[f64], observations: &[RateObservation]) -> Result<SteinCertificate> {
    if observations.is_empty() {
        return arg("at least one observation is required");
    }
    let r = lambdas.len().saturating_sub(1);
    if r < 3 {
        return arg("need means for lengths 3..=r with r >= 3");
    }
    if let Some(o) = observations.iter().find(|o| o.w.len() <= r || o.plus.len() <= r || o.minus.len() <= r) {
        return arg(format!("observation vectors must have length {} (got {})", r + 1, o.w.len()));
    }
    let mut terms = Vec::new();
    let mut per_obs = vec![0.0; observations.len()];
    for k in 3..=r {
        let l = lambdas[k];
        let x = xi(l);
        let back: Vec<f64> = observations.iter().map(|o| (l - o.plus[k]).abs()).collect();
        let fwd: Vec<f64> = observations.iter().map(|o| (o.w[k] - o.minus[k]).abs()).collect();
        for (t, (b, f)) in per_obs.iter_mut().zip(back.iter().zip(&fwd)) {
            *t += x * (b + f);
        }
        let (bm, bs) = mean_stderr(&back);
        let (fm, fs) = mean_stderr(&fwd);
        terms.push(SteinTerm {
            k,
            lambda: l,
            xi: x,
            backward_term: bm,
            backward_stderr: bs,
            forward_term: fm,
            forward_stderr: fs,
        });
    }
    let bound = terms.iter().map(|t| t.xi * (t.backward_term + t.forward_term)).sum();
    let (_, stderr) = mean_stderr(&per_obs);
    Ok(SteinCertificate { n: 0, d: 0, r, samples: observations.len(), terms, bound, stderr, reference: None })
}

/// Observations from the stationary immigration–death chain: independent
/// `W_k ~ Poisson(λ_k)`, births at rate `λ_k`, each unit dying at rate 1.
/// The Stein identity holds exactly, so the certificate is zero.
pub fn immigration_death_fixture(lambdas: &[f64], samples: usize, seed: u64) -> Vec<RateObservation> {
    (0..samples as u64)
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let w: Vec<f64> =
                lambdas.iter().enumerate().map(|(k, &l)| if k < 3 { 0.0 } else { poisson_draw(l, &mut rng) as f64 }).collect();
            RateObservation { plus: lambdas.to_vec(), minus: w.clone(), w }
        })
        .collect()
}

fn uniform_kn_cycle<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Cycle {
    let mut v: Vec<usize> = Vec::with_capacity(k);
    while v.len() < k {
        let x = rng.random_range(0..n);
        if !v.contains(&x) {
            v.push(x);
        }
    }
    Cycle::new(&v).expect("distinct vertices")
}

/// Rate observation for one graph. `c_k P[+] = λ_k p` where p is the valid
/// fraction of backward candidates over a uniform k-cycle of `K_n`, and
/// `c_k P[-] = C_k q` where q is the valid fraction of forward candidates
/// over a uniform k-cycle of G. Both fractions are estimated from
/// `proposals` uniform candidates, which keeps `λ_k - c_k P[+]` and
/// `C_k - c_k P[-]` unbiased since both are nonnegative.
pub fn rate_observation<R: Rng + ?Sized>(g: &RegularGraph, r: usize, proposals: usize, rng: &mut R) -> Result<RateObservation> {
    let cen = census(g, r)?;
    let mut w = vec![0.0; r + 1];
    let mut plus = vec![0.0; r + 1];
    let mut minus = vec![0.0; r + 1];
    let mut start = 0;
    for k in 3..=r {
        let ck = cen.count(k) as usize;
        w[k] = ck as f64;
        if k <= g.n() {
            let hits = (0..proposals)
                .filter(|_| {
                    let alpha = uniform_kn_cycle(g.n(), k, rng);
                    is_valid(g, &Switching::Backward(random_backward(g, &alpha, rng)), r)
                })
                .count();
            plus[k] = lambda(g.d(), k) * hits as f64 / proposals as f64;
        }
        if ck > 0 {
            let cycles = &cen.cycles[start..start + ck];
            let hits = (0..proposals)
                .filter(|_| {
                    let alpha = &cycles[rng.random_range(0..ck)];
                    is_valid(g, &Switching::Forward(random_forward(g, alpha, rng)), r)
                })
                .count();
            minus[k] = ck as f64 * hits as f64 / proposals as f64;
        }
        start += ck;
    }
    Ok(RateObservation { w, plus, minus })
}

/// Empirical Stein certificate for `d_TV((C_3..C_r), (Z_3..Z_r))` over
/// `samples` graphs drawn from `cfg`, with `proposals` candidate switchings
/// per length and direction on each graph.
pub fn stein_certificate(cfg: &SamplerConfig, r: usize, samples: usize, proposals: usize) -> Result<SteinCertificate> {
    if samples == 0 || proposals == 0 {
        return arg("samples and proposals must both be positive");
    }
    if r < 3 {
        return arg("cycle cutoff r must be at least 3");
    }
    let seed = derive_seed(cfg.seed, "stein");
    let observations = map_samples(cfg, samples, |i, g| rate_observation(&g, r, proposals, &mut stream_rng(seed, i)))?;
    let lambdas: Vec<f64> = (0..=r).map(|k| lambda(cfg.d, k)).collect();
    let mut cert = certificate_from_rates(&lambdas, &observations)?;
    cert.n = cfg.n;
    cert.d = cfg.d;
    cert.reference = Some(ReferenceBounds::new(cfg.n, cfg.d, r, 1.0));
    Ok(cert)
}
