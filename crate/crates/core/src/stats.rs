//! Distributions, distances, goodness-of-fit tests, and the bound evaluators.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, DiscreteCDF, Poisson};

use crate::error::{arg, Result};
use crate::nbwalks::mu_k;
use crate::rng::stream_rng;

/// Values that carry a dimension, so mismatched vector lengths are caught.
pub trait Dimensioned {
    fn dim(&self) -> usize {
        1
    }
}

impl Dimensioned for i64 {}
impl Dimensioned for u64 {}
impl<T> Dimensioned for Vec<T> {
    fn dim(&self) -> usize {
        self.len()
    }
}

/// Finite law on ordered values, weights summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution<V: Ord> {
    pub support: BTreeMap<V, f64>,
}

impl<V: Ord + Clone + Dimensioned> EmpiricalDistribution<V> {
    pub fn from_samples(samples: &[V]) -> Result<Self> {
        if samples.is_empty() {
            return arg("empty sample set");
        }
        let w = 1.0 / samples.len() as f64;
        let mut support = BTreeMap::new();
        for s in samples {
            *support.entry(s.clone()).or_insert(0.0) += w;
        }
        Ok(EmpiricalDistribution { support })
    }

    /// From explicit weights; they are renormalised only if the total is within 1e-9 of one.
    pub fn from_weights(items: impl IntoIterator<Item = (V, f64)>) -> Result<Self> {
        let mut support = BTreeMap::new();
        for (v, w) in items {
            if !(w >= 0.0) || !w.is_finite() {
                return arg(format!("weight {w} is not a nonnegative finite number"));
            }
            *support.entry(v).or_insert(0.0) += w;
        }
        let total: f64 = support.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return arg(format!("weights sum to {total}, not 1"));
        }
        support.values_mut().for_each(|w| *w /= total);
        Ok(EmpiricalDistribution { support })
    }

    pub fn point_mass(v: V) -> Self {
        EmpiricalDistribution { support: BTreeMap::from([(v, 1.0)]) }
    }

    pub fn prob(&self, v: &V) -> f64 {
        self.support.get(v).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.support.values().sum()
    }

    fn dims(&self) -> Option<usize> {
        let mut it = self.support.keys().map(Dimensioned::dim);
        let first = it.next()?;
        it.all(|d| d == first).then_some(first)
    }
}

/// Half the L1 distance over the union support.
pub fn tv_exact<V: Ord + Clone + Dimensioned>(p: &EmpiricalDistribution<V>, q: &EmpiricalDistribution<V>) -> Result<f64> {
    match (p.dims(), q.dims()) {
        (Some(a), Some(b)) if a != b => return arg(format!("value dimensions differ: {a} vs {b}")),
        (None, _) | (_, None) if !p.support.is_empty() && !q.support.is_empty() => {
            return arg("values of mixed dimension within one law")
        }
        _ => {}
    }
    Ok(tv_unchecked(p, q))
}

fn tv_unchecked<V: Ord>(p: &EmpiricalDistribution<V>, q: &EmpiricalDistribution<V>) -> f64 {
    let mut s = 0.0;
    for (v, a) in &p.support {
        s += (a - q.support.get(v).copied().unwrap_or(0.0)).abs();
    }
    for (v, b) in &q.support {
        if !p.support.contains_key(v) {
            s += b;
        }
    }
    (0.5 * s).min(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TvEstimate {
    /// Plug-in estimate; biased upward for small samples.
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replicates: usize,
}

fn resample<V: Clone, R: Rng>(xs: &[V], rng: &mut R) -> Vec<V> {
    (0..xs.len()).map(|_| xs[rng.random_range(0..xs.len())].clone()).collect()
}

/// Linear-interpolated quantile of an ascending sample.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Basic (reverse percentile) 95% interval, which shifts the plug-in's upward
/// bias back instead of reproducing it as the percentile interval would.
/// Widened if needed so that it contains the estimate.
fn basic_interval(estimate: f64, mut boots: Vec<f64>, replicates: usize) -> TvEstimate {
    if boots.is_empty() {
        return TvEstimate { estimate, ci_low: estimate, ci_high: estimate, replicates };
    }
    boots.sort_by(f64::total_cmp);
    let lo = (2.0 * estimate - percentile(&boots, 0.975)).clamp(0.0, 1.0);
    let hi = (2.0 * estimate - percentile(&boots, 0.025)).clamp(0.0, 1.0);
    TvEstimate { estimate, ci_low: lo.min(estimate), ci_high: hi.max(estimate), replicates }
}

/// Plug-in TV between two sample lists with a 95% basic bootstrap interval.
pub fn tv_empirical<V>(a: &[V], b: &[V], replicates: usize, seed: u64) -> Result<TvEstimate>
where
    V: Ord + Clone + Dimensioned + Send + Sync,
{
    let estimate = tv_exact(&EmpiricalDistribution::from_samples(a)?, &EmpiricalDistribution::from_samples(b)?)?;
    let boots: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let ra = resample(a, &mut rng);
            let rb = resample(b, &mut rng);
            tv_unchecked(&EmpiricalDistribution::from_samples(&ra).unwrap(), &EmpiricalDistribution::from_samples(&rb).unwrap())
        })
        .collect();
    Ok(basic_interval(estimate, boots, replicates))
}

/// Plug-in TV between samples and a known law, bootstrapping the samples only.
pub fn tv_against<V>(samples: &[V], law: &EmpiricalDistribution<V>, replicates: usize, seed: u64) -> Result<TvEstimate>
where
    V: Ord + Clone + Dimensioned + Send + Sync,
{
    let estimate = tv_exact(&EmpiricalDistribution::from_samples(samples)?, law)?;
    let boots: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            tv_unchecked(&EmpiricalDistribution::from_samples(&resample(samples, &mut rng)).unwrap(), law)
        })
        .collect();
    Ok(basic_interval(estimate, boots, replicates))
}

/// Map two real samples onto common Freedman–Diaconis bins.
pub fn bin_reals(a: &[f64], b: &[f64]) -> Result<(Vec<i64>, Vec<i64>)> {
    if a.is_empty() || b.is_empty() {
        return arg("empty sample set");
    }
    let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let iqr = percentile(&pooled, 0.75) - percentile(&pooled, 0.25);
    let mut width = 2.0 * iqr / (pooled.len() as f64).cbrt();
    if !(width > 0.0) {
        width = 1.0;
    }
    let lo = pooled[0];
    let f = |x: &f64| ((x - lo) / width).floor() as i64;
    Ok((a.iter().map(f).collect(), b.iter().map(f).collect()))
}

/// Limiting Poisson means `λ_k = (d-1)^k / 2k` for `3 <= k <= r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonSpec {
    pub d: usize,
    pub r: usize,
    /// `lambdas[i]` is the mean for length `i + 3`.
    pub lambdas: Vec<f64>,
}

impl PoissonSpec {
    pub fn new(d: usize, r: usize) -> Result<Self> {
        if r < 3 {
            return arg("cycle cutoff r must be at least 3");
        }
        let lambdas = (3..=r).map(|k| lambda(d, k)).collect();
        Ok(PoissonSpec { d, r, lambdas })
    }

    pub fn from_means(lambdas: Vec<f64>) -> Self {
        PoissonSpec { d: 0, r: lambdas.len() + 2, lambdas }
    }

    pub fn lambda(&self, k: usize) -> f64 {
        if k < 3 {
            0.0
        } else {
            self.lambdas.get(k - 3).copied().unwrap_or(0.0)
        }
    }

    /// Product law of `(Z_3, ..., Z_r)`, each marginal truncated once its
    /// upper tail drops below `eps`; the truncated mass is dropped and the rest renormalised.
    pub fn product_law(&self, eps: f64) -> EmpiricalDistribution<Vec<i64>> {
        let marginals: Vec<Vec<f64>> = self.lambdas.iter().map(|&l| poisson_table(l, eps)).collect();
        let mut support = BTreeMap::new();
        let mut idx = vec![0usize; marginals.len()];
        'outer: loop {
            let p: f64 = idx.iter().zip(&marginals).map(|(&i, m)| m[i]).product();
            support.insert(idx.iter().map(|&i| i as i64).collect::<Vec<_>>(), p);
            for pos in (0..idx.len()).rev() {
                idx[pos] += 1;
                if idx[pos] < marginals[pos].len() {
                    continue 'outer;
                }
                idx[pos] = 0;
            }
            break;
        }
        let total: f64 = support.values().sum();
        support.values_mut().for_each(|w| *w /= total);
        EmpiricalDistribution { support }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<i64> {
        self.lambdas.iter().map(|&l| poisson_draw(l, rng) as i64).collect()
    }
}

pub fn lambda(d: usize, k: usize) -> f64 {
    if k < 3 {
        0.0
    } else {
        (d as f64 - 1.0).powi(k as i32) / (2.0 * k as f64)
    }
}

fn poisson_table(l: f64, eps: f64) -> Vec<f64> {
    if l <= 0.0 {
        return vec![1.0];
    }
    let mut out = Vec::new();
    let mut p = (-l).exp();
    let mut cdf = 0.0;
    let mut x = 0u64;
    loop {
        out.push(p);
        cdf += p;
        x += 1;
        if 1.0 - cdf < eps && x as f64 > l {
            break;
        }
        p *= l / x as f64;
    }
    out
}

pub fn poisson_pmf(l: f64, x: u64) -> f64 {
    if l <= 0.0 {
        return if x == 0 { 1.0 } else { 0.0 };
    }
    Poisson::new(l).map(|p| p.pmf(x)).unwrap_or(0.0)
}

fn poisson_sf(l: f64, x: u64) -> f64 {
    // P[X >= x]
    if x == 0 {
        return 1.0;
    }
    if l <= 0.0 {
        return 0.0;
    }
    Poisson::new(l).map(|p| p.sf(x - 1)).unwrap_or(0.0)
}

pub fn poisson_draw<R: Rng + ?Sized>(l: f64, rng: &mut R) -> u64 {
    if l <= 0.0 {
        return 0;
    }
    let d = rand_distr::Poisson::new(l).expect("positive mean");
    rng.sample::<f64, _>(d) as u64
}

/// A bound value with its vacuity flag (`value > 1` says nothing about a TV distance).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub value: f64,
    pub vacuous: bool,
}

impl BoundValue {
    fn of(value: f64) -> Self {
        BoundValue { value, vacuous: value > 1.0 }
    }
}

fn dm1(d: usize) -> f64 {
    d as f64 - 1.0
}

/// `C √r (d-1)^(3r/2 - 1) / n`: joint cycle counts vs independent Poissons.
pub fn bound_bestpoiapprox(n: usize, d: usize, r: usize, c: f64) -> BoundValue {
    BoundValue::of(c * (r as f64).sqrt() * dm1(d).powf(1.5 * r as f64 - 1.0) / n as f64)
}

/// `C (d-1)^(2r-1) / n`: the cruder bound from summing per-cycle errors.
pub fn bound_sum_over_cycles(n: usize, d: usize, r: usize, c: f64) -> BoundValue {
    BoundValue::of(c * dm1(d).powf(2.0 * r as f64 - 1.0) / n as f64)
}

/// `C k (d-1)^(k+r-1) / n^(k+1)`: contribution of one k-cycle.
pub fn bound_cycle_summand(n: usize, d: usize, r: usize, k: usize, c: f64) -> BoundValue {
    BoundValue::of(c * k as f64 * dm1(d).powf((k + r) as f64 - 1.0) / (n as f64).powf(k as f64 + 1.0))
}

/// `C √r (d-1)^(3r/2) / n`: CNBW counts vs their Poisson limit.
pub fn bound_cnbw(n: usize, d: usize, r: usize, c: f64) -> BoundValue {
    BoundValue::of(c * (r as f64).sqrt() * dm1(d).powf(1.5 * r as f64) / n as f64)
}

/// The reference bounds attached to every experiment report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceBounds {
    #[serde(rename = "thm8")]
    pub joint: BoundValue,
    #[serde(rename = "cor6")]
    pub summed: BoundValue,
    #[serde(rename = "thm9")]
    pub cnbw: BoundValue,
    pub constant: f64,
}

impl ReferenceBounds {
    pub fn new(n: usize, d: usize, r: usize, c: f64) -> Self {
        ReferenceBounds {
            joint: bound_bestpoiapprox(n, d, r, c),
            summed: bound_sum_over_cycles(n, d, r, c),
            cnbw: bound_cnbw(n, d, r, c),
            constant: c,
        }
    }
}

/// `N_k = (d-1)^(-k/2) (CNBW_k - μ_k(d))` for `1 <= k <= r_n`, zero elsewhere.
/// Entry k of both vectors refers to length k.
pub fn standardized_cnbw(cnbw: &[u128], d: usize, r_n: usize) -> Vec<f64> {
    let mut out = vec![0.0; cnbw.len()];
    for k in 1..cnbw.len().min(r_n + 1) {
        let mu = mu_k(d as u64, k as u64) as f64;
        out[k] = (cnbw[k] as f64 - mu) / dm1(d).powf(k as f64 / 2.0);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub k: usize,
    pub lambda: f64,
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Samples were constant, so the test says little beyond a mismatch in location.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub j: usize,
    pub k: usize,
    pub rho: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub samples: usize,
    pub per_k: Vec<ChiSquareResult>,
    pub correlations: Vec<Correlation>,
    /// Smallest p-value times the number of tests, capped at one.
    pub bonferroni_min_p: f64,
    pub max_abs_correlation: f64,
}

/// Upper tail of the chi-square law.
pub fn chi_square_sf(statistic: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    ChiSquared::new(dof as f64).map(|c| c.sf(statistic)).unwrap_or(f64::NAN)
}

/// Chi-square statistic and p-value of counts `0, 1, 2, ...` against Poisson(λ).
/// Cells are merged left to right until each expects at least 5; the last cell is the upper tail.
pub fn poisson_chi_square(counts: &[u64], l: f64) -> (f64, usize) {
    let n = counts.len() as f64;
    let max = counts.iter().copied().max().unwrap_or(0);
    let mut hist = vec![0u64; max as usize + 1];
    for &c in counts {
        hist[c as usize] += 1;
    }
    // (expected, observed) per pooled cell
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut e, mut o) = (0.0, 0.0);
    let mut x = 0u64;
    loop {
        let tail = n * poisson_sf(l, x);
        if tail < 5.0 || tail - n * poisson_pmf(l, x) < 5.0 {
            // everything from x upward forms one tail cell
            let obs: u64 = hist.iter().skip(x as usize).sum();
            e += tail;
            o += obs as f64;
            cells.push((e, o));
            break;
        }
        e += n * poisson_pmf(l, x);
        o += hist.get(x as usize).copied().unwrap_or(0) as f64;
        if e >= 5.0 {
            cells.push((e, o));
            e = 0.0;
            o = 0.0;
        }
        x += 1;
    }
    if cells.len() >= 2 && cells.last().unwrap().0 < 5.0 {
        let (e2, o2) = cells.pop().unwrap();
        let last = cells.last_mut().unwrap();
        last.0 += e2;
        last.1 += o2;
    }
    if cells.len() < 2 {
        return (0.0, 0);
    }
    let stat = cells.iter().map(|&(e, o)| if e > 0.0 { (o - e) * (o - e) / e } else { 0.0 }).sum();
    (stat, cells.len() - 1)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (a, b) = (x[i] - mx, y[i] - my);
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

/// Per-length Poisson goodness of fit for count vectors `(C_3, ..., C_r)`,
/// plus pairwise correlations as an independence diagnostic.
pub fn gof_tests(samples: &[Vec<u64>], spec: &PoissonSpec) -> Result<GofReport> {
    if samples.len() < 100 {
        return arg(format!("goodness of fit needs at least 100 samples, got {}", samples.len()));
    }
    let dims = spec.lambdas.len();
    if samples.iter().any(|s| s.len() != dims) {
        return arg(format!("count vectors must have {dims} entries"));
    }
    let column = |i: usize| -> Vec<u64> { samples.iter().map(|s| s[i]).collect() };
    let mut per_k = Vec::new();
    for i in 0..dims {
        let col = column(i);
        let l = spec.lambdas[i];
        let degenerate = col.iter().all(|&c| c == col[0]);
        let (statistic, dof) = if l <= 0.0 {
            let mismatch = col.iter().filter(|&&c| c != 0).count();
            (if mismatch == 0 { 0.0 } else { f64::INFINITY }, usize::from(mismatch > 0))
        } else {
            poisson_chi_square(&col, l)
        };
        let p_value = if statistic.is_infinite() { 0.0 } else { chi_square_sf(statistic, dof) };
        per_k.push(ChiSquareResult { k: i + 3, lambda: l, statistic, dof, p_value, degenerate });
    }
    let mut correlations = Vec::new();
    for a in 0..dims {
        for b in a + 1..dims {
            let x: Vec<f64> = column(a).iter().map(|&v| v as f64).collect();
            let y: Vec<f64> = column(b).iter().map(|&v| v as f64).collect();
            correlations.push(Correlation { j: a + 3, k: b + 3, rho: pearson(&x, &y) });
        }
    }
    let min_p = per_k.iter().map(|t| t.p_value).fold(1.0, f64::min);
    let max_abs_correlation = correlations.iter().filter_map(|c| c.rho).map(f64::abs).fold(0.0, f64::max);
    Ok(GofReport {
        samples: samples.len(),
        bonferroni_min_p: (min_p * dims as f64).min(1.0),
        per_k,
        correlations,
        max_abs_correlation,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Asymptotic Kolmogorov tail `P[K > λ]`.
pub fn kolmogorov_sf(l: f64) -> f64 {
    if l < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * l * l).exp();
        s += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsResult> {
    if samples.is_empty() {
        return arg("empty sample set");
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut dmax: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        dmax = dmax.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let sn = n.sqrt();
    Ok(KsResult { statistic: dmax, p_value: kolmogorov_sf((sn + 0.12 + 0.11 / sn) * dmax) })
}

/// Wilson score interval for `hits` successes out of `n` at normal quantile `z`.
pub fn wilson_interval(hits: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Mean and its standard error.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, f64::NAN);
    }
    (m, (sample_variance(xs) / n).sqrt())
}

pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
}
