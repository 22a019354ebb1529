//! Sampler uniformity and calibration of the statistical tests.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use regspec_core::census::census;
use regspec_core::rng::stream_rng;
use regspec_core::sampler::{enumerate_all_regular, sample_range, sample_switching_chain, Method, SamplerConfig};
use regspec_core::stats::{gof_tests, ks_test, tv_empirical, tv_exact, EmpiricalDistribution, PoissonSpec};
use regspec_core::switchings::{apply_forward, is_valid, ForwardSwitching, Switching};
use regspec_core::RegularGraph;

#[test]
fn pairing_acceptance_near_e_minus_two() {
    let cfg = SamplerConfig::new(1000, 3, 8);
    let (_, stats) = sample_range(&cfg, 0, 400).unwrap();
    assert!((stats.rate() - 0.135).abs() < 0.02, "rate {}", stats.rate());
}

#[test]
fn swap_chain_reaches_uniform_on_six_vertices() {
    let all = enumerate_all_regular(6, 3).unwrap();
    let uniform = EmpiricalDistribution::from_weights(all.iter().map(|g| (g.edge_mask() as i64, 1.0 / 70.0))).unwrap();
    let start = all[0].clone();
    let ends: Vec<i64> = (0..10_000u64)
        .map(|seed| {
            let cfg = SamplerConfig::new(6, 3, seed).with_method(Method::SwitchingChain);
            sample_switching_chain(&cfg, &start, 1000).unwrap().edge_mask() as i64
        })
        .collect();
    let tv = tv_exact(&EmpiricalDistribution::from_samples(&ends).unwrap(), &uniform).unwrap();
    assert!(tv < 0.05, "tv {tv}");
    let cfg = SamplerConfig::new(6, 3, 1).with_method(Method::SwitchingChain);
    assert_eq!(sample_switching_chain(&cfg, &start, 0).unwrap(), start);
}

#[test]
fn empirical_tv_null_is_small() {
    let spec = PoissonSpec::new(3, 5).unwrap();
    let draw = |seed: u64| -> Vec<Vec<i64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..100_000).map(|_| spec.sample(&mut rng)).collect()
    };
    let est = tv_empirical(&draw(1), &draw(2), 20, 3).unwrap();
    assert!(est.estimate < 0.03, "{}", est.estimate);
}

#[test]
fn empirical_tv_converges_to_exact() {
    let spec = PoissonSpec::new(3, 4).unwrap();
    let law = spec.product_law(1e-12);
    let median_error = |n: usize| {
        let mut errs: Vec<f64> = (0..9u64)
            .map(|rep| {
                let mut rng = stream_rng(n as u64, rep);
                let xs: Vec<Vec<i64>> = (0..n).map(|_| spec.sample(&mut rng)).collect();
                tv_exact(&EmpiricalDistribution::from_samples(&xs).unwrap(), &law).unwrap()
            })
            .collect();
        errs.sort_by(f64::total_cmp);
        errs[4]
    };
    let e = [median_error(1_000), median_error(10_000), median_error(100_000)];
    assert!(e[0] > e[1] && e[1] > e[2], "{e:?}");
}

#[test]
fn chi_square_p_values_are_calibrated_under_the_null() {
    let spec = PoissonSpec::new(3, 5).unwrap();
    let mut ps = Vec::new();
    for rep in 0..300u64 {
        let mut rng = stream_rng(77, rep);
        let xs: Vec<Vec<u64>> =
            (0..400).map(|_| spec.sample(&mut rng).into_iter().map(|x| x as u64).collect()).collect();
        ps.extend(gof_tests(&xs, &spec).unwrap().per_k.iter().map(|t| t.p_value));
    }
    let ks = ks_test(&ps, |p| p.clamp(0.0, 1.0)).unwrap();
    assert!(ks.p_value >= 0.01, "KS of p-values: {ks:?}");
}

#[test]
fn degenerate_null_gives_p_one() {
    let spec = PoissonSpec::from_means(vec![0.0]);
    let xs = vec![vec![0u64]; 100];
    let report = gof_tests(&xs, &spec).unwrap();
    assert_eq!(report.per_k[0].p_value, 1.0);
}

/// Forward moves on a triangle that apply cleanly but close a new triangle
/// elsewhere are not valid.
#[test]
fn side_effect_triangle_invalidates_a_move() {
    let g = RegularGraph::from_edges(
        10,
        3,
        &[
            (0, 1), (1, 2), (0, 2), (0, 3), (1, 4), (2, 5),
            (3, 6), (3, 7), (4, 8), (4, 9), (5, 6), (5, 8),
            (6, 9), (7, 8), (7, 9),
        ],
    )
    .unwrap();
    let before = census(&g, 3).unwrap();
    let mut found = 0;
    // try every target choice: w_i any vertex, u_{i+1} a neighbour of w_i
    let n = g.n();
    for w0 in 0..n {
        for w1 in 0..n {
            for w2 in 0..n {
                for a in 0..3 {
                    for b in 0..3 {
                        for c in 0..3 {
                            let w = [w0, w1, w2];
                            let un = [g.neighbors(w0)[a], g.neighbors(w1)[b], g.neighbors(w2)[c]];
                            let u = [un[2], un[0], un[1]];
                            let Ok(f) = ForwardSwitching::new(&[0, 1, 2], &u, &w) else { continue };
                            let Ok(h) = apply_forward(&g, &f) else { continue };
                            let after = census(&h, 3).unwrap();
                            let created = after.cycles.iter().any(|c| !before.cycles.contains(c));
                            if created {
                                found += 1;
                                assert!(!is_valid(&g, &Switching::Forward(f), 3));
                            }
                        }
                    }
                }
            }
        }
    }
    assert!(found > 0, "fixture should admit a side-effect triangle");
}
