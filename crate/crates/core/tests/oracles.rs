//! Library results against independent brute-force computations.

use std::collections::BTreeMap;

use regspec_core::census::{census, cycles_through_edges, estimate_subgraph_probability, Structure};
use regspec_core::graph::families::{complete, k33, petersen};
use regspec_core::nbwalks::{cnbw_counts, cnbw_divisor_sum, mu_k};
use regspec_core::sampler::{sample_one, sample_range, SamplerConfig};
use regspec_core::spectral::{scaled_spectrum, sample_limit_fixed_d, Basis, NamedFunction};
use regspec_core::stats::{bound_bestpoiapprox, bound_sum_over_cycles, lambda, ReferenceBounds};
use regspec_core::switchings::{count_backward, count_forward, CountMode};
use regspec_core::{Cycle, RegularGraph};

/// Number of k-cycles: every k-subset, every cyclic order of it with the
/// smallest vertex first, each undirected cycle seen twice.
fn subset_cycle_count(g: &RegularGraph, k: usize) -> u64 {
    fn perms(rest: &mut Vec<usize>, path: &mut Vec<usize>, g: &RegularGraph, count: &mut u64) {
        if rest.is_empty() {
            if g.has_edge(*path.last().unwrap(), path[0]) {
                *count += 1;
            }
            return;
        }
        for i in 0..rest.len() {
            let x = rest.remove(i);
            if g.has_edge(*path.last().unwrap(), x) {
                path.push(x);
                perms(rest, path, g, count);
                path.pop();
            }
            rest.insert(i, x);
        }
    }
    fn subsets(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, g: &RegularGraph, total: &mut u64) {
        if cur.len() == k {
            let mut count = 0;
            perms(&mut cur[1..].to_vec(), &mut vec![cur[0]], g, &mut count);
            *total += count;
            return;
        }
        for v in start..n {
            cur.push(v);
            subsets(n, k, v + 1, cur, g, total);
            cur.pop();
        }
    }
    let mut total = 0;
    subsets(g.n(), k, 0, &mut Vec::new(), g, &mut total);
    total / 2
}

/// `tr(B^k)` for the dense non-backtracking edge matrix B.
fn hashimoto_traces(g: &RegularGraph, kmax: usize) -> Vec<u128> {
    let arcs: Vec<(usize, usize)> = g.edges().flat_map(|(a, b)| [(a, b), (b, a)]).collect();
    let m = arcs.len();
    let b: Vec<Vec<u128>> = arcs
        .iter()
        .map(|&(u, v)| arcs.iter().map(|&(x, w)| u128::from(x == v && w != u)).collect())
        .collect();
    let mut p = b.clone();
    let mut out = vec![0, (0..m).map(|i| p[i][i]).sum()];
    for _ in 2..=kmax {
        p = (0..m).map(|i| (0..m).map(|j| (0..m).map(|l| p[i][l] * b[l][j]).sum()).collect()).collect();
        out.push((0..m).map(|i| p[i][i]).sum());
    }
    out
}

fn corpus() -> Vec<RegularGraph> {
    let mut gs = vec![complete(4), k33(), petersen()];
    for (n, seed) in [(8, 1), (10, 2), (12, 3), (12, 4)] {
        gs.push(sample_one(&SamplerConfig::new(n, 3, seed), 0).unwrap());
    }
    gs.push(sample_one(&SamplerConfig::new(9, 4, 5), 0).unwrap());
    gs
}

#[test]
fn census_matches_subset_enumeration() {
    for g in corpus() {
        let c = census(&g, 7).unwrap();
        for k in 3..=7 {
            assert_eq!(c.count(k), subset_cycle_count(&g, k), "n={} k={k}", g.n());
        }
    }
}

#[test]
fn census_named_graphs() {
    let c = census(&k33(), 6).unwrap();
    assert_eq!(c.count_vector(), vec![0, 9, 0, 6]);
    let c = census(&petersen(), 6).unwrap();
    assert_eq!(c.count_vector(), vec![0, 0, 12, 10]);
}

#[test]
fn edge_incidences_sum_to_k_times_count() {
    for g in corpus() {
        let c = census(&g, 6).unwrap();
        let weighted: u64 = (3..=6).map(|k| k as u64 * c.count(k)).sum();
        let per_edge: usize = g.edges().map(|e| cycles_through_edges(&g, &[e], 6).len()).sum();
        assert_eq!(weighted, per_edge as u64);
        let index = c.edge_index();
        assert_eq!(index.values().map(Vec::len).sum::<usize>() as u64, weighted);
    }
}

#[test]
fn walk_counts_match_dense_operator() {
    for g in corpus() {
        let want = hashimoto_traces(&g, 7);
        let got = cnbw_counts(&g, 7).unwrap();
        assert_eq!(&got[..], &want[..], "n={}", g.n());
        assert_eq!((got[1], got[2]), (0, 0));
    }
}

#[test]
fn divisor_sum_agrees_when_cycles_are_isolated() {
    let p = petersen();
    let walks = cnbw_counts(&p, 5).unwrap();
    let ds = cnbw_divisor_sum(&census(&p, 5).unwrap(), 5).unwrap();
    assert_eq!(walks[5], 120);
    assert_eq!(walks, ds);
    // overlapping short cycles break agreement at length 6 on K4
    let k4 = complete(4);
    let walks = cnbw_counts(&k4, 6).unwrap();
    let ds = cnbw_divisor_sum(&census(&k4, 6).unwrap(), 6).unwrap();
    assert_eq!(walks[3], ds[3]);
    assert_ne!(walks[6], ds[6]);
}

#[test]
fn trace_identities_on_samples() {
    let cfg = SamplerConfig::new(200, 4, 17);
    for i in 0..5 {
        let g = sample_one(&cfg, i).unwrap();
        let s = scaled_spectrum::<f64>(&g).unwrap();
        let (s1, s2) = s.trace_sums();
        let n = g.n() as f64;
        assert!(s1.abs() < 1e-8 * n);
        assert!((s2 - n * 4.0 / 3.0).abs() < 1e-8 * n);
        assert!((s.values[0] - 4.0 / 3f64.sqrt()).abs() < 1e-10);
    }
}

#[test]
fn spectrum_against_characteristic_polynomial_of_k33() {
    // K_{3,3}: adjacency eigenvalues 3, -3 and 0 (x4)
    let s = scaled_spectrum::<f64>(&k33()).unwrap();
    let r2 = 2f64.sqrt();
    let want = [3.0 / r2, 0.0, 0.0, 0.0, 0.0, -3.0 / r2];
    for (x, w) in s.values.iter().zip(want) {
        assert!((x - w).abs() < 1e-12);
    }
}

#[test]
fn exp_coefficients_decay_and_bound_truncation() {
    let exp = NamedFunction::Exp.expand(Basis::Phi, 3, 20).unwrap();
    let rate = exp.decay_rate().unwrap();
    assert!(rate > 0.0 && rate < 0.5, "rate {rate}");
    for m in [4, 8, 12] {
        let worst = (0..=420)
            .map(|i| -2.1 + 4.2 * i as f64 / 420.0)
            .map(|x| {
                let trunc: f64 = (0..=m).map(|k| exp.coefficients[k] * exp.basis_value(k, x)).sum();
                ((x.exp() - trunc).abs(), exp.tail_sum(m, x))
            })
            .fold((0.0, 0.0), |a: (f64, f64), b| if b.0 > a.0 { b } else { a });
        assert!(worst.0 <= worst.1 * (1.0 + 1e-9) + 1e-13, "m={m} err {} tail {}", worst.0, worst.1);
    }
}

#[test]
fn limit_mean_matches_linearity_of_expectation() {
    let f = NamedFunction::Poly(vec![0.0, 0.3, -0.2, 0.5, 0.1]);
    let exp = f.expand(Basis::Gamma, 3, 4).unwrap();
    let s = sample_limit_fixed_d(&exp, 3, 4, 100_000, 8).unwrap();
    let b = 2f64.sqrt();
    let theory: f64 = (1..=4).map(|k| exp.coefficients[k] * mu_k(3, k as u64) as f64 / b.powi(k as i32)).sum();
    let n = s.draws.len() as f64;
    let mean = s.draws.iter().sum::<f64>() / n;
    let var = s.draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((mean - theory).abs() < 4.0 * (var / n).sqrt(), "{mean} vs {theory}");
    assert!((s.mean - theory).abs() < 1e-12);
}

#[test]
fn gamma3_limit_is_scaled_poisson() {
    let exp = NamedFunction::Gamma(3).expand(Basis::Gamma, 3, 3).unwrap();
    let s = sample_limit_fixed_d(&exp, 3, 3, 20_000, 2).unwrap();
    let unit = 6.0 / 8f64.sqrt();
    assert!(s.draws.iter().all(|x| (x / unit - (x / unit).round()).abs() < 1e-9));
    // 6 * (4/3) / 2^(3/2)
    assert!((s.mean - 2.0 * 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn fixed_triangle_probability_matches_census_average() {
    let cfg = SamplerConfig::new(20, 3, 99);
    let samples = 100_000;
    let est = estimate_subgraph_probability(Structure::Cycle { k: 3 }, &cfg, samples, 1.0).unwrap();
    // same graphs: every labelled triangle is equally likely, so P = E[C_3] / C(20,3)
    let (graphs, _) = sample_range(&cfg, 0, samples).unwrap();
    let c3: Vec<f64> = graphs.iter().map(|g| census(g, 3).unwrap().count(3) as f64 / 1140.0).collect();
    let m = c3.iter().sum::<f64>() / samples as f64;
    let se = (c3.iter().map(|x| (x - m).powi(2)).sum::<f64>() / samples as f64 / samples as f64).sqrt();
    assert!((est.estimate - m).abs() < 4.0 * (est.stderr.powi(2) + se * se).sqrt(), "{} vs {m}", est.estimate);
    assert!((est.bound - 0.001).abs() < 1e-15);
    assert!(est.wilson_low <= est.estimate && est.estimate <= est.wilson_high);
}

#[test]
fn triangle_on_k4_always_present() {
    let est = estimate_subgraph_probability(Structure::Cycle { k: 3 }, &SamplerConfig::new(4, 3, 1), 50, 1.0).unwrap();
    assert_eq!(est.estimate, 1.0);
}

#[test]
fn switch_counts_respect_candidate_spaces() {
    for g in corpus().into_iter().filter(|g| g.d() == 3 && g.n() >= 8) {
        let c = census(&g, 4).unwrap();
        for alpha in c.cycles.iter().take(3) {
            let f = count_forward(&g, alpha, 4, CountMode::Exact).unwrap();
            let k = alpha.len() as u32;
            let space: u128 = (0..k as u128).map(|i| g.n() as u128 - i).product::<u128>() * 3u128.pow(k);
            assert_eq!(f.candidates, space);
            assert!(f.exact.unwrap() <= space);
        }
        let alpha = Cycle::new(&[0, 1, 2]).unwrap();
        let b = count_backward(&g, &alpha, 4, CountMode::Exact).unwrap();
        assert_eq!(b.candidates, 216);
        assert!(b.exact.unwrap() <= 216);
    }
}

#[test]
fn backward_counts_are_exchangeable_over_cycles() {
    // the law of B_alpha does not depend on which k-cycle of K_n alpha is
    let cfg = SamplerConfig::new(100, 3, 31);
    let a = Cycle::new(&[0, 1, 2]).unwrap();
    let b = Cycle::new(&[50, 71, 93]).unwrap();
    let (mut xa, mut xb) = (Vec::new(), Vec::new());
    for i in 0..300 {
        let g = sample_one(&cfg, i).unwrap();
        xa.push(count_backward(&g, &a, 5, CountMode::Exact).unwrap().estimate / 216.0);
        xb.push(count_backward(&g, &b, 5, CountMode::Exact).unwrap().estimate / 216.0);
    }
    let ms = |x: &[f64]| {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        (m, x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0) / x.len() as f64)
    };
    let ((ma, va), (mb, vb)) = (ms(&xa), ms(&xb));
    assert!((ma - mb).abs() <= 4.0 * (va + vb).sqrt().max(1e-12), "{ma} vs {mb}");
    assert!(ma <= 1.0 && mb <= 1.0);
    // implied constant in 1 - c k (d-1)^(r-1) / n
    let c = (1.0 - ma) * 100.0 / (3.0 * 16.0);
    assert!(c.is_finite() && c >= 0.0);
}

#[test]
fn monte_carlo_count_brackets_exact() {
    let g = sample_one(&SamplerConfig::new(12, 3, 6), 0).unwrap();
    let alpha = census(&g, 6).unwrap().cycles[0].clone();
    let exact = count_forward(&g, &alpha, 6, CountMode::Exact).unwrap();
    let mc = count_forward(&g, &alpha, 6, CountMode::MonteCarlo { samples: 200_000, seed: 3 }).unwrap();
    assert!((mc.estimate - exact.estimate).abs() <= 4.0 * mc.stderr + 1e-9, "{} vs {}", mc.estimate, exact.estimate);
}

#[test]
fn reference_bound_values() {
    let b = ReferenceBounds::new(1000, 3, 5, 1.0);
    assert!((b.joint.value - 5f64.sqrt() * 2f64.powf(6.5) / 1000.0).abs() < 1e-15);
    assert!((b.joint.value - 0.2024).abs() < 1e-4);
    assert!(!b.joint.vacuous);
    assert!((bound_bestpoiapprox(200, 3, 4, 1.0).value - 0.32).abs() < 1e-12);
    for r in 3..10 {
        let ratio = bound_bestpoiapprox(500, 3, r, 1.0).value / bound_sum_over_cycles(500, 3, r, 1.0).value;
        assert!((ratio - (r as f64).sqrt() * 2f64.powf(-(r as f64) / 2.0)).abs() < 1e-12);
    }
}

#[test]
fn poisson_means_at_moderate_n() {
    let cfg = SamplerConfig::new(1000, 3, 5);
    let counts: Vec<Vec<u64>> = (0..400).map(|i| census(&sample_one(&cfg, i).unwrap(), 5).unwrap().count_vector()).collect();
    for k in 3..=5 {
        let xs: Vec<f64> = counts.iter().map(|c| c[k - 3] as f64).collect();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let se = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0) / xs.len() as f64).sqrt();
        assert!((m - lambda(3, k)).abs() < 4.0 * se, "k={k}: {m} vs {}", lambda(3, k));
    }
}

#[test]
fn uniform_over_the_seventy_cubic_graphs_on_six_vertices() {
    let cfg = SamplerConfig::new(6, 3, 12);
    let n = 100_000;
    let (graphs, _) = sample_range(&cfg, 0, n).unwrap();
    let mut freq: BTreeMap<u128, u64> = BTreeMap::new();
    for g in &graphs {
        *freq.entry(g.edge_mask()).or_default() += 1;
    }
    assert_eq!(freq.len(), 70);
    let p = 1.0 / 70.0;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    for (_, &c) in &freq {
        assert!((c as f64 / n as f64 - p).abs() < 4.0 * se);
    }
}
