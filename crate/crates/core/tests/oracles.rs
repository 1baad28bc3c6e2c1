//! Library results against independently computed references.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_pcg::Pcg64Mcg;
use stablegw::discrete::{reduce, DiscreteTree, ReducedTree};
use stablegw::offspring::{rho_gf_closed, shared_theta, survival_probs, theta_pmf, OffspringDist};
use statrs::function::gamma::ln_gamma;

/// `(−1)^k C(α, k)` for `k ≥ 2` and `1 < α < 2`, from Γ functions:
/// `α(α − 1)Γ(k − α) / (Γ(2 − α) k!)`.
fn signed_binomial(alpha: f64, k: u64) -> f64 {
    let k = k as f64;
    alpha * (alpha - 1.0) * (ln_gamma(k - alpha) - ln_gamma(2.0 - alpha) - ln_gamma(k + 1.0)).exp()
}

#[test]
fn theta_pmf_matches_gamma_function_form() {
    for alpha in [1.1, 1.2, 1.5, 1.8, 1.95] {
        let dist = shared_theta(alpha).unwrap();
        for k in 2..400u64 {
            let oracle = signed_binomial(alpha, k) / (alpha - 1.0);
            for got in [theta_pmf(alpha, k), dist.pmf(k)] {
                assert!((got / oracle - 1.0).abs() < 1e-11, "alpha {alpha} k {k}: {got} vs {oracle}");
            }
        }
    }
}

#[test]
fn rho_pmf_matches_binomial_series() {
    for alpha in [1.2, 1.5, 1.8] {
        let rho = OffspringDist::rho_canonical(alpha).unwrap();
        assert!((rho.pmf(0) - 1.0 / alpha).abs() < 1e-15);
        assert_eq!(rho.pmf(1), 0.0);
        for k in 2..300u64 {
            let oracle = signed_binomial(alpha, k) / alpha;
            assert!((rho.pmf(k) / oracle - 1.0).abs() < 1e-11, "alpha {alpha} k {k}");
        }
    }
}

#[test]
fn survival_probabilities_match_iterated_generating_function() {
    for alpha in [1.3, 1.5, 2.0] {
        let table = survival_probs(alpha, 200).unwrap();
        let mut q = 1.0;
        for n in 0..=200 {
            // 1 − f(1 − q) cancels, so the oracle is only good to about
            // one ulp of 1 per step
            assert!((table.q(n) - q).abs() < 4e-16 * (n + 1) as f64, "alpha {alpha} n {n}: {} vs {q}", table.q(n));
            q = 1.0 - rho_gf_closed(alpha, 1.0 - q);
        }
    }
}

/// Dense Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            if f != 0.0 {
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

fn neighbours(t: &ReducedTree, v: usize) -> Vec<usize> {
    let node = &t.nodes[v];
    let mut out: Vec<usize> = t.children(v).collect();
    if v != 0 {
        out.push(node.parent as usize);
    }
    out
}

/// `P(walk from the root reaches level n before the extra edge)`, from the
/// linear system of the harmonic function.
fn escape_oracle(t: &ReducedTree) -> f64 {
    let m = t.len();
    let mut a = vec![vec![0.0; m]; m];
    let mut b = vec![0.0; m];
    for v in 0..m {
        a[v][v] = 1.0;
        if t.nodes[v].generation == t.n {
            b[v] = 1.0;
            continue;
        }
        let nb = neighbours(t, v);
        // the root also sees the absorbing vertex, where the function is 0
        let deg = nb.len() as f64 + if v == 0 { 1.0 } else { 0.0 };
        for w in nb {
            a[v][w] -= 1.0 / deg;
        }
    }
    solve(a, b)[0]
}

/// Hitting distribution of level `n` from the root, reflecting at the root.
fn harmonic_oracle(t: &ReducedTree, leaf: usize) -> f64 {
    let m = t.len();
    let mut a = vec![vec![0.0; m]; m];
    let mut b = vec![0.0; m];
    for v in 0..m {
        a[v][v] = 1.0;
        if t.nodes[v].generation == t.n {
            b[v] = if v == leaf { 1.0 } else { 0.0 };
            continue;
        }
        let nb = neighbours(t, v);
        let deg = nb.len() as f64;
        for w in nb {
            a[v][w] -= 1.0 / deg;
        }
    }
    solve(a, b)[0]
}

fn random_tree(counts: &[u32]) -> Option<ReducedTree> {
    // keep only a valid breadth-first prefix
    let mut avail = 1usize;
    let mut used = Vec::new();
    for &k in counts {
        if used.len() >= avail {
            break;
        }
        used.push(k);
        avail += k as usize;
    }
    let t = DiscreteTree::from_child_counts(&used).ok()?;
    if t.height == 0 {
        return None;
    }
    reduce(&t, t.height).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conductance_and_harmonic_measure_match_linear_solves(counts in prop::collection::vec(0u32..4, 1..40)) {
        if let Some(t) = random_tree(&counts) {
            prop_assume!(t.len() <= 120);
            let c = t.conductance_n();
            prop_assert!((c - escape_oracle(&t)).abs() < 1e-12);
            for v in t.leaves() {
                let mu = t.nodes[v].log_mu.exp();
                prop_assert!((mu - harmonic_oracle(&t, v)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn srw_frequencies_match_oracle_on_a_fixed_tree() {
    let t = reduce(&DiscreteTree::from_child_counts(&[3, 2, 0, 1, 1, 0, 2]).unwrap(), 3).unwrap();
    let leaves: Vec<usize> = t.leaves().collect();
    let mut rng = Pcg64Mcg::seed_from_u64(5);
    let walks = 200_000;
    let mut hits = vec![0u32; t.len()];
    for _ in 0..walks {
        hits[t.srw_hit(&mut rng).unwrap()] += 1;
    }
    for v in leaves {
        let mu = harmonic_oracle(&t, v);
        let f = hits[v] as f64 / walks as f64;
        assert!((f - mu).abs() < 4.0 * (mu * (1.0 - mu) / walks as f64).sqrt(), "leaf {v}: {f} vs {mu}");
    }
}
