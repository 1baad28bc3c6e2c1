//! Cross-module checks on small end-to-end runs.

use stablegw::analysis::{beta_formula1, beta_value, level_size_check};
use stablegw::ctgw::{level_counts, level_laplace_closed, DEFAULT_EVENT_CAP};
use stablegw::discrete::{sample_conditioned, DEFAULT_NODE_CAP};
use stablegw::offspring::{survival_probs, OffspringDist};
use stablegw::rde::{solve_gamma, ConductancePool, SolveOptions};
use stablegw::stats::mean_se;
use stablegw::streams::{substream, Tag};

#[test]
fn pool_round_trips_through_both_file_formats() {
    let pool = solve_gamma(1.7, &SolveOptions { pool_size: 3000, seed: 4, ..Default::default() }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for name in ["p.bin", "p.csv"] {
        let path = dir.path().join(name);
        if name.ends_with("csv") {
            pool.save_csv(&path).unwrap();
        } else {
            pool.save_bin(&path).unwrap();
        }
        let back = ConductancePool::load(&path).unwrap();
        assert_eq!(back.sorted(), pool.sorted());
        assert_eq!((back.alpha, back.seed, back.iterations, back.stop_rule), (pool.alpha, pool.seed, pool.iterations, pool.stop_rule));
    }
}

#[test]
fn truncated_pool_file_is_rejected() {
    let pool = ConductancePool::ones(2.0, 1000).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.bin");
    pool.save_bin(&path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
    assert!(ConductancePool::load(&path).is_err());
    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(ConductancePool::load(&path).is_err());
}

#[cfg(feature = "parallel")]
#[test]
fn thread_count_does_not_change_results() {
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
            let pool = solve_gamma(1.5, &SolveOptions { pool_size: 20_000, seed: 9, ..Default::default() }).unwrap();
            let b = beta_formula1(&pool, 50_000, 3).unwrap();
            let v = beta_value(&pool, 4);
            (pool.sorted().to_vec(), b.point, b.ci_low, v.point, v.ci_high)
        })
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}

#[test]
fn third_moment_grows_with_pool_size_at_small_alpha() {
    // the law has no third moment for α < 2, so the empirical one keeps
    // growing as the pool picks up more of the tail
    let m3 = |p| solve_gamma(1.2, &SolveOptions { pool_size: p, seed: 2, ..Default::default() }).unwrap().moment(3);
    let small = m3(10_000);
    let large = m3(1_000_000);
    assert!(large > 3.0 * small, "{small} vs {large}");
}

#[test]
fn rejection_acceptance_rate_matches_survival_probability() {
    let rho = OffspringDist::rho_canonical(2.0).unwrap();
    let q4 = survival_probs(2.0, 4).unwrap().q(4);
    // 1/2, 3/8, 39/128, then 39/128 − (39/128)²/2
    assert_eq!(q4, 0.258270263671875);
    let mut rng = substream(8, Tag::Discrete, 0, 0);
    let (mut attempts, mut accepted) = (0u64, 0u64);
    while attempts < 10_000 {
        let c = sample_conditioned(&rho, 4, DEFAULT_NODE_CAP, 1_000_000, &mut rng).unwrap();
        attempts += c.attempts;
        accepted += 1;
        assert!(c.tree.nodes.iter().any(|v| v.generation == 4));
    }
    let rate = accepted as f64 / attempts as f64;
    let sigma = (q4 * (1.0 - q4) / attempts as f64).sqrt();
    assert!((rate - q4).abs() < 3.0 * sigma, "{rate} vs {q4}");
    // n = 1: accepted exactly when the root has a child
    let mut attempts = 0;
    let mut accepted = 0;
    while attempts < 20_000 {
        attempts += sample_conditioned(&rho, 1, DEFAULT_NODE_CAP, 1_000_000, &mut rng).unwrap().attempts;
        accepted += 1;
    }
    let p = 1.0 - rho.pmf(0);
    let rate = accepted as f64 / attempts as f64;
    assert!((rate - p).abs() < 3.0 * (p * (1.0 - p) / attempts as f64).sqrt());
}

#[test]
fn survival_probability_scales_conditioned_level_sizes() {
    let c = level_size_check(1.5, 5, 4000, 17).unwrap();
    assert!(c.z.abs() < 3.0, "{c:?}");
}

#[test]
fn count_process_matches_level_laplace_transform() {
    for (alpha, r) in [(1.5, 1.0), (1.8, 2.0), (2.0, 1.5)] {
        let (counts, dropped) = level_counts(alpha, r, 20_000, DEFAULT_EVENT_CAP, 6).unwrap();
        assert_eq!(dropped, 0);
        for u in [0.1, 0.5, 2.0] {
            let v: Vec<f64> = counts.iter().map(|&z| (-u * z as f64).exp()).collect();
            let (m, se) = mean_se(&v);
            let exact = level_laplace_closed(alpha, r, u);
            assert!((m - exact).abs() < 4.0 * se, "alpha {alpha} r {r} u {u}: {m} vs {exact}");
        }
    }
}
