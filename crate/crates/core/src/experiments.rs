//! Seeded experiments behind the CLI and the acceptance suite.
//!
//! Every result is a plain serializable struct. Randomness comes only from
//! `(seed, index)` streams and all reductions run in index order, so the
//! JSON form of a result does not depend on the worker count.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::census::{census, overlap_events};
use crate::error::{arg, Result};
use crate::nbwalks::{cnbw_counts, cnbw_divisor_sum, cnbw_fast};
use crate::rng::{derive_seed, stream_rng};
use crate::sampler::{map_samples, Method, SamplerConfig};
use crate::spectral::{
    limit_variance_growing_d, sample_limit_fixed_d, sample_limit_growing_d, scaled_spectrum, walk_functional, Basis,
    ChebExpansion, LimitSamples,
};
use crate::stats::{
    gof_tests, ks_test, mean_stderr, percentile, sample_variance, standardized_cnbw, tv_against, tv_empirical,
    GofReport, KsResult, PoissonSpec, ReferenceBounds, TvEstimate,
};
use crate::switchings::{certificate_from_rates, rate_observation, Metagraph, MetagraphCheck, SteinCertificate};

/// The uniform JSON envelope: `{params, estimates, stderr, bounds, pvalues}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub params: Value,
    pub estimates: Value,
    pub stderr: Value,
    pub bounds: Option<ReferenceBounds>,
    pub pvalues: Value,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn sampler_params(cfg: &SamplerConfig) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("n".into(), json!(cfg.n));
    m.insert("d".into(), json!(cfg.d));
    m.insert("seed".into(), json!(cfg.seed));
    m.insert("method".into(), json!(cfg.method.to_string()));
    if cfg.method == Method::SwitchingChain {
        m.insert("burn_in".into(), json!(cfg.burn_in));
    }
    m
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub k: usize,
    pub lambda: f64,
    pub mean: f64,
    pub stderr: f64,
    /// `(mean - λ_k) / stderr`; zero when the samples are constant at λ_k.
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonCheck {
    pub n: usize,
    pub d: usize,
    pub r: usize,
    pub samples: usize,
    pub seed: u64,
    pub method: Method,
    pub moments: Vec<MomentCheck>,
    /// Absent below 100 samples.
    pub gof: Option<GofReport>,
    /// Lengths whose counts never varied.
    pub degenerate: Vec<usize>,
    /// Plug-in TV between the joint counts and the product Poisson law.
    pub tv: TvEstimate,
    pub bounds: ReferenceBounds,
    /// `tv.estimate / bounds.joint.value`.
    pub bound_ratio: f64,
}

fn z_score(mean: f64, target: f64, stderr: f64) -> f64 {
    if stderr > 0.0 {
        (mean - target) / stderr
    } else if mean == target {
        0.0
    } else {
        f64::INFINITY.copysign(mean - target)
    }
}

/// Short-cycle counts of `samples` graphs against independent Poissons.
pub fn verify_poisson(cfg: &SamplerConfig, r: usize, samples: usize, bootstrap: usize, constant: f64) -> Result<PoissonCheck> {
    if samples == 0 {
        return arg("at least one sample is required");
    }
    let spec = PoissonSpec::new(cfg.d, r)?;
    let counts: Vec<Vec<u64>> = map_samples(cfg, samples, |_, g| Ok(census(&g, r)?.count_vector()))?;
    let moments = (3..=r)
        .map(|k| {
            let col: Vec<f64> = counts.iter().map(|c| c[k - 3] as f64).collect();
            let (mean, se) = mean_stderr(&col);
            let se = if se.is_nan() { 0.0 } else { se };
            MomentCheck { k, lambda: spec.lambda(k), mean, stderr: se, z: z_score(mean, spec.lambda(k), se) }
        })
        .collect();
    let degenerate = (3..=r).filter(|&k| counts.iter().all(|c| c[k - 3] == counts[0][k - 3])).collect();
    let gof = if samples >= 100 { Some(gof_tests(&counts, &spec)?) } else { None };
    let signed: Vec<Vec<i64>> = counts.iter().map(|c| c.iter().map(|&x| x as i64).collect()).collect();
    let tv = tv_against(&signed, &spec.product_law(1e-12), bootstrap, derive_seed(cfg.seed, "bootstrap"))?;
    let bounds = ReferenceBounds::new(cfg.n, cfg.d, r, constant);
    Ok(PoissonCheck {
        n: cfg.n,
        d: cfg.d,
        r,
        samples,
        seed: cfg.seed,
        method: cfg.method,
        moments,
        gof,
        degenerate,
        bound_ratio: tv.estimate / bounds.joint.value,
        tv,
        bounds,
    })
}

impl PoissonCheck {
    pub fn report(&self, cfg: &SamplerConfig) -> Report {
        let mut params = sampler_params(cfg);
        params.insert("r".into(), json!(self.r));
        params.insert("samples".into(), json!(self.samples));
        params.insert("constant".into(), json!(self.bounds.constant));
        let mut estimates = Map::new();
        let mut stderr = Map::new();
        for m in &self.moments {
            estimates.insert(format!("mean_C{}", m.k), json!(m.mean));
            estimates.insert(format!("lambda_{}", m.k), json!(m.lambda));
            stderr.insert(format!("mean_C{}", m.k), json!(m.stderr));
        }
        estimates.insert("tv".into(), json!(self.tv));
        estimates.insert("bound_ratio".into(), json!(self.bound_ratio));
        estimates.insert("degenerate".into(), json!(self.degenerate));
        let mut pvalues = Map::new();
        if let Some(g) = &self.gof {
            for t in &g.per_k {
                pvalues.insert(format!("chi2_C{}", t.k), json!(t.p_value));
            }
            pvalues.insert("bonferroni_min".into(), json!(g.bonferroni_min_p));
            estimates.insert("correlations".into(), json!(g.correlations));
            estimates.insert("max_abs_correlation".into(), json!(g.max_abs_correlation));
        }
        Report {
            experiment: "verify-poisson".into(),
            params: Value::Object(params),
            estimates: Value::Object(estimates),
            stderr: Value::Object(stderr),
            bounds: Some(self.bounds),
            pvalues: Value::Object(pvalues),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CltStat {
    pub k: usize,
    /// `2k`, the variance of the normal limit.
    pub limit_variance: f64,
    /// `Σ_{j|k, j>=3} 2j (d-1)^{j-k}`, the variance of the fixed-d Poisson limit.
    pub poisson_variance: f64,
    pub mean: f64,
    pub stderr: f64,
    pub variance: f64,
    /// `variance / limit_variance`.
    pub variance_ratio: f64,
    /// KS against `Normal(0, 2k)` on the raw lattice values.
    pub ks_raw: KsResult,
    /// KS after spreading each value uniformly over its lattice cell.
    pub ks_jittered: KsResult,
    /// Lattice spacing of `N_k` used for the jitter.
    pub lattice: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CltCheck {
    pub n: usize,
    pub d: usize,
    pub kmax: usize,
    pub samples: usize,
    pub seed: u64,
    pub method: Method,
    pub burn_in: u64,
    pub per_k: Vec<CltStat>,
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn normal_cdf(x: f64, var: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / (2.0 * var).sqrt())
}

/// Standardized walk counts `N_k` against their normal limits.
pub fn verify_clt(cfg: &SamplerConfig, kmax: usize, samples: usize) -> Result<CltCheck> {
    if kmax < 3 {
        return arg("kmax must be at least 3");
    }
    if samples < 2 {
        return arg("at least two samples are required");
    }
    let walks: Vec<Vec<u128>> = map_samples(cfg, samples, |_, g| cnbw_fast(&g, kmax))?;
    let d = cfg.d;
    let b = (d as f64 - 1.0).sqrt();
    let jitter_seed = derive_seed(cfg.seed, "jitter");
    let mut per_k = Vec::new();
    for k in 3..=kmax {
        let std: Vec<f64> = walks.iter().map(|w| standardized_cnbw(w, d, kmax)[k]).collect();
        let step = walks.iter().fold(0u128, |g, w| gcd(g, w[k].abs_diff(walks[0][k])));
        let lattice = step.max(1) as f64 / b.powi(k as i32);
        let jittered: Vec<f64> = std
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                use rand::Rng;
                let u: f64 = stream_rng(jitter_seed, i as u64 * 64 + k as u64).random();
                x + (u - 0.5) * lattice
            })
            .collect();
        let limit_variance = 2.0 * k as f64;
        let poisson_variance =
            (3..=k).filter(|j| k % j == 0).map(|j| 2.0 * j as f64 * (d as f64 - 1.0).powi(j as i32 - k as i32)).sum();
        let (mean, se) = mean_stderr(&std);
        let variance = sample_variance(&std);
        per_k.push(CltStat {
            k,
            limit_variance,
            poisson_variance,
            mean,
            stderr: se,
            variance,
            variance_ratio: variance / limit_variance,
            ks_raw: ks_test(&std, |x| normal_cdf(x, limit_variance))?,
            ks_jittered: ks_test(&jittered, |x| normal_cdf(x, limit_variance))?,
            lattice,
        });
    }
    Ok(CltCheck { n: cfg.n, d, kmax, samples, seed: cfg.seed, method: cfg.method, burn_in: cfg.burn_in, per_k })
}

impl CltCheck {
    pub fn report(&self, cfg: &SamplerConfig) -> Report {
        let mut params = sampler_params(cfg);
        params.insert("kmax".into(), json!(self.kmax));
        params.insert("samples".into(), json!(self.samples));
        params.insert("burn_in".into(), json!(self.burn_in));
        let mut estimates = Map::new();
        let mut stderr = Map::new();
        let mut pvalues = Map::new();
        for s in &self.per_k {
            estimates.insert(format!("N{}", s.k), json!(s));
            stderr.insert(format!("mean_N{}", s.k), json!(s.stderr));
            pvalues.insert(format!("ks_N{}", s.k), json!(s.ks_jittered.p_value));
            pvalues.insert(format!("ks_raw_N{}", s.k), json!(s.ks_raw.p_value));
        }
        Report {
            experiment: "verify-clt".into(),
            params: Value::Object(params),
            estimates: Value::Object(estimates),
            stderr: Value::Object(stderr),
            bounds: Some(ReferenceBounds::new(cfg.n, cfg.d, self.kmax, 1.0)),
            pvalues: Value::Object(pvalues),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RouteCheck {
    pub n: usize,
    pub d: usize,
    pub r: usize,
    pub samples: usize,
    /// Graphs where the trace and divisor-sum routes disagree for some `k <= r`.
    pub mismatches: usize,
    pub mismatch_frequency: f64,
    /// Graphs with an overlap event (two short cycles sharing an edge or at short distance).
    pub overlap_graphs: usize,
    /// Disagreements on graphs without overlap events; zero when the identity holds.
    pub mismatches_without_overlap: usize,
}

/// Compare `CNBW_k` with `Σ_{j|k} 2j C_j` for `k <= r` over sampled graphs.
pub fn cnbw_route_check(cfg: &SamplerConfig, r: usize, samples: usize) -> Result<RouteCheck> {
    if samples == 0 {
        return arg("at least one sample is required");
    }
    let rows: Vec<(bool, bool)> = map_samples(cfg, samples, |_, g| {
        let cen = census(&g, r)?;
        let overlap = overlap_events(&g, &cen).any();
        let mismatch = cnbw_counts(&g, r)? != cnbw_divisor_sum(&cen, r)?;
        Ok((overlap, mismatch))
    })?;
    let mismatches = rows.iter().filter(|r| r.1).count();
    Ok(RouteCheck {
        n: cfg.n,
        d: cfg.d,
        r,
        samples,
        mismatches,
        mismatch_frequency: mismatches as f64 / samples as f64,
        overlap_graphs: rows.iter().filter(|r| r.0).count(),
        mismatches_without_overlap: rows.iter().filter(|r| r.1 && !r.0).count(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitSummary {
    pub mode: String,
    pub d: usize,
    pub count: usize,
    pub seed: u64,
    pub kmax: usize,
    pub mean: f64,
    pub stderr: f64,
    /// Mean of the limit variable (truncated at `kmax` for fixed d).
    pub theory_mean: f64,
    pub variance: f64,
    /// `σ_f` for growing d; the truncated Poisson variance for fixed d.
    pub theory_variance: f64,
    pub tail_bound: f64,
    /// 1%, 25%, 50%, 75%, 99% quantiles.
    pub quantiles: [f64; 5],
}

fn summarize(mode: &str, d: usize, seed: u64, s: &LimitSamples, theory_variance: f64) -> LimitSummary {
    let (mean, stderr) = mean_stderr(&s.draws);
    let mut sorted = s.draws.clone();
    sorted.sort_by(f64::total_cmp);
    let quantiles = [0.01, 0.25, 0.5, 0.75, 0.99].map(|q| percentile(&sorted, q));
    LimitSummary {
        mode: mode.into(),
        d,
        count: s.draws.len(),
        seed,
        kmax: s.kmax,
        mean,
        stderr,
        theory_mean: s.mean,
        variance: if s.draws.len() > 1 { sample_variance(&s.draws) } else { 0.0 },
        theory_variance,
        tail_bound: s.tail_bound,
        quantiles,
    }
}

/// Variance of `Σ_k w_k CNBW_k` with `CNBW_k = Σ_{j|k} 2j C_j`, `C_j ~ Poisson(λ_j)` independent.
fn fixed_d_variance(exp: &ChebExpansion<f64>, d: usize, kmax: usize) -> f64 {
    let b = (d as f64 - 1.0).sqrt();
    let top = kmax.min(exp.order());
    (3..=top)
        .map(|j| {
            let coef: f64 = (j..=top).step_by(j).map(|k| exp.coefficients[k] / b.powi(k as i32) * 2.0 * j as f64).sum();
            coef * coef * crate::stats::lambda(d, j)
        })
        .sum()
}

/// Draws from the fixed-d or growing-d limit law of a linear eigenvalue functional.
pub fn limit(exp: &ChebExpansion<f64>, growing: bool, kmax: usize, count: usize, seed: u64) -> Result<(LimitSummary, LimitSamples)> {
    if count == 0 {
        return arg("count must be positive");
    }
    if growing {
        let phi = exp.to_basis(Basis::Phi);
        let s = sample_limit_growing_d(&phi, count, seed)?;
        let var = limit_variance_growing_d(&phi)?;
        Ok((summarize("growing-d", exp.d, seed, &s, var), s))
    } else {
        let gamma = exp.to_basis(Basis::Gamma);
        let s = sample_limit_fixed_d(&gamma, exp.d, kmax, count, seed)?;
        let var = fixed_d_variance(&gamma, exp.d, kmax);
        Ok((summarize("fixed-d", exp.d, seed, &s, var), s))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedDComparison {
    pub n: usize,
    pub d: usize,
    pub order: usize,
    pub samples: usize,
    pub limit_draws: usize,
    pub finite_mean: f64,
    pub finite_stderr: f64,
    pub limit_mean: f64,
    /// Plug-in TV on the common lattice of values (rounded to 1e-6).
    pub tv: TvEstimate,
    /// Largest gap between the walk and eigenvalue routes over the graphs cross-checked.
    pub route_gap: f64,
    pub route_checked: usize,
}

fn lattice_key(x: f64) -> i64 {
    (x * 1e6).round() as i64
}

/// `Y_f^{(n)}` over sampled graphs against draws of its fixed-d limit. The
/// functional is evaluated by the walk identity, which is exact for the
/// polynomial `f_m`; the first `eigen_checks` graphs are also diagonalised
/// to confirm the two routes agree.
pub fn fixed_d_comparison(
    cfg: &SamplerConfig,
    exp: &ChebExpansion<f64>,
    samples: usize,
    limit_draws: usize,
    eigen_checks: usize,
    bootstrap: usize,
) -> Result<FixedDComparison> {
    let gamma = exp.to_basis(Basis::Gamma);
    if gamma.d != cfg.d {
        return arg(format!("expansion built for d={} but sampling d={}", gamma.d, cfg.d));
    }
    let m = gamma.order();
    let a0 = gamma.coefficients.first().copied().unwrap_or(0.0);
    let rows: Vec<(f64, f64)> = map_samples(cfg, samples, |i, g| {
        let walks = cnbw_fast(&g, m.max(1))?;
        let y = walk_functional(&walks, &gamma)?;
        let gap = if (i as usize) < eigen_checks {
            let spec = scaled_spectrum::<f64>(&g)?;
            let direct: f64 = spec.values.iter().map(|&x| gamma.eval(x) - a0).sum();
            (direct - y).abs()
        } else {
            0.0
        };
        Ok((y, gap))
    })?;
    let ys: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let lim = sample_limit_fixed_d(&gamma, cfg.d, m, limit_draws, derive_seed(cfg.seed, "limit"))?;
    let a: Vec<i64> = ys.iter().map(|&x| lattice_key(x)).collect();
    let b: Vec<i64> = lim.draws.iter().map(|&x| lattice_key(x)).collect();
    let tv = tv_empirical(&a, &b, bootstrap, derive_seed(cfg.seed, "bootstrap"))?;
    let (finite_mean, finite_stderr) = mean_stderr(&ys);
    Ok(FixedDComparison {
        n: cfg.n,
        d: cfg.d,
        order: m,
        samples,
        limit_draws,
        finite_mean,
        finite_stderr,
        limit_mean: lim.mean,
        tv,
        route_gap: rows.iter().map(|r| r.1).fold(0.0, f64::max),
        route_checked: eigen_checks.min(samples),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteinCheck {
    pub certificate: SteinCertificate,
    /// Plug-in TV of the same graphs' counts against the product Poisson law.
    pub tv: TvEstimate,
    /// The certificate is at least the lower end of the TV interval.
    pub covers: bool,
}

/// Stein certificate and direct TV measured on one set of sampled graphs.
pub fn stein_check(cfg: &SamplerConfig, r: usize, samples: usize, proposals: usize, bootstrap: usize) -> Result<SteinCheck> {
    if samples == 0 || proposals == 0 {
        return arg("samples and proposals must both be positive");
    }
    let spec = PoissonSpec::new(cfg.d, r)?;
    let seed = derive_seed(cfg.seed, "stein");
    let obs = map_samples(cfg, samples, |i, g| rate_observation(&g, r, proposals, &mut stream_rng(seed, i)))?;
    let lambdas: Vec<f64> = (0..=r).map(|k| spec.lambda(k)).collect();
    let mut certificate = certificate_from_rates(&lambdas, &obs)?;
    certificate.n = cfg.n;
    certificate.d = cfg.d;
    certificate.reference = Some(ReferenceBounds::new(cfg.n, cfg.d, r, 1.0));
    let counts: Vec<Vec<i64>> = obs.iter().map(|o| o.w[3..=r].iter().map(|&x| x as i64).collect()).collect();
    let tv = tv_against(&counts, &spec.product_law(1e-12), bootstrap, derive_seed(cfg.seed, "bootstrap"))?;
    let covers = certificate.bound >= tv.ci_low;
    Ok(SteinCheck { certificate, tv, covers })
}

impl SteinCheck {
    pub fn report(&self, cfg: &SamplerConfig, proposals: usize) -> Report {
        let mut params = sampler_params(cfg);
        params.insert("r".into(), json!(self.certificate.r));
        params.insert("samples".into(), json!(self.certificate.samples));
        params.insert("proposals".into(), json!(proposals));
        let mut stderr = Map::new();
        stderr.insert("bound".into(), json!(self.certificate.stderr));
        Report {
            experiment: "stein".into(),
            params: Value::Object(params),
            estimates: json!({
                "bound": self.certificate.bound,
                "terms": self.certificate.terms,
                "tv": self.tv,
                "covers": self.covers,
            }),
            stderr: Value::Object(stderr),
            bounds: self.certificate.reference,
            pvalues: json!({}),
        }
    }
}

/// Exhaustive metagraph over all cubic graphs on n vertices, with exact rational weights.
pub fn metagraph_check(n: usize, d: usize, r: usize) -> Result<MetagraphCheck> {
    Ok(Metagraph::<num_rational::BigRational>::from_enumeration(n, d, r)?.check())
}
