//! Closed-form identities satisfied by the conductance law, each evaluated
//! on a pool with a Monte Carlo error bar.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{pair, pair_kernel, unit_columns, EstimatorReport};
use crate::error::Result;
use crate::offspring::shared_theta;
use crate::quad;
use crate::rde::{laplace, ConductancePool};
use crate::stats::{mean_se, std_dev, Z95};
use crate::streams::{substream, Tag};

/// Relative size allowed for the truncated tail of the `C₁` integral.
pub const C1_TAIL_TOL: f64 = 1e-6;
const PROJECTION_POINTS: usize = 2000;

/// Pair average `E[C C′/(C + C′ − 1)]` over pool slots with resampled
/// partners, with its standard error.
pub fn c1_pairs(pool: &ConductancePool, seed: u64) -> (f64, f64) {
    let [h] = unit_columns(pool.len(), seed, Tag::Pairing, |i, rng| {
        let (s, t) = pair(pool, i, rng);
        [pair_kernel(s, t)]
    });
    mean_se(&h)
}

/// `Φ_∞(c) = E[c C/(c + C − 1)] / C₁` with `C₁` the pair average.
pub fn phi_inf(pool: &ConductancePool, c: f64) -> f64 {
    let (c1, _) = c1_pairs(pool, pool.seed);
    phi_inf_with(pool, c, c1)
}

pub fn phi_inf_with(pool: &ConductancePool, c: f64, c1: f64) -> f64 {
    pool.sorted().iter().map(|&s| pair_kernel(c, s)).sum::<f64>() / pool.len() as f64 / c1
}

/// The two evaluations of `C₁`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct C1Identity {
    /// `2∫₀^S φ′(s)² e^{s/2} ds` by adaptive quadrature.
    pub lhs: f64,
    /// Error of `lhs` as an estimate of the law's value, from the spread of
    /// the one-point projection of the pair kernel.
    pub lhs_se: f64,
    /// Pair average.
    pub rhs: f64,
    pub rhs_se: f64,
    pub z: f64,
    pub rel_diff: f64,
    pub truncation: f64,
    pub tail_bound: f64,
    pub quadrature_error: f64,
    pub warnings: Vec<String>,
}

impl C1Identity {
    /// Agreement within the combined 95% band and within `rel` relative.
    pub fn agrees(&self, rel: f64) -> bool {
        self.z.abs() <= Z95 && self.rel_diff <= rel
    }
}

pub fn c1_identity(pool: &ConductancePool, seed: u64) -> C1Identity {
    let xs = pool.sorted();
    let m1 = pool.mean();
    let p = xs.len() as f64;
    // the integrand is below (E C)² e^{−s/2}/2, so the tail past S is below
    // (E C)² e^{−S/2}; the integral itself is at least 1
    let truncation = 2.0 * (10.0 * m1 * m1 / C1_TAIL_TOL).ln();
    let tail_bound = m1 * m1 * (-truncation / 2.0).exp();
    let integrand = |s: f64| {
        let d = xs.iter().map(|&c| 0.5 * c * (-s * (0.5 * c - 0.25)).exp()).sum::<f64>() / p;
        2.0 * d * d
    };
    let q = quad::integrate(integrand, 0.0, truncation, 1e-12, 1e-10, 400);
    let mut warnings = Vec::new();
    if tail_bound > C1_TAIL_TOL * q.value {
        warnings.push(format!("quadrature tail bound {tail_bound:.3e} exceeds {C1_TAIL_TOL:e} of the value"));
    }
    if q.error > 1e-8 * q.value {
        warnings.push(format!("quadrature error estimate {:.3e} above target", q.error));
    }

    let (rhs, rhs_se) = c1_pairs(pool, seed);

    let mut rng = substream(seed, Tag::Quadrature, 0, 0);
    let proj: Vec<f64> = (0..PROJECTION_POINTS.min(xs.len()))
        .map(|_| {
            let c = xs[rng.gen_range(0..xs.len())];
            xs.iter().map(|&t| pair_kernel(c, t)).sum::<f64>() / p
        })
        .collect();
    let lhs_se = 2.0 * std_dev(&proj) / p.sqrt();

    let lhs = q.value;
    let z = (lhs - rhs) / lhs_se.hypot(rhs_se);
    C1Identity {
        lhs,
        lhs_se,
        rhs,
        rhs_se,
        z,
        rel_diff: ((lhs - rhs) / rhs).abs(),
        truncation,
        tail_bound,
        quadrature_error: q.error,
        warnings,
    }
}

/// Residual of the Laplace-transform differential equation at one `ℓ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeResidual {
    pub ell: f64,
    pub residual: f64,
    pub std_error: f64,
    pub z: f64,
}

/// `2ℓφ″ + ℓφ′ + ((1 − φ)^α + φ − 1)/(α − 1)` from the pool's exact
/// empirical Laplace transform. The standard error comes from the per-sample
/// influence `2ℓ g₂ + ℓ g₁ + Ψ′(φ) g₀` of the residual.
pub fn ode_residual(pool: &ConductancePool, ell_grid: &[f64]) -> Vec<OdeResidual> {
    let alpha = pool.alpha;
    let psi = |f: f64| ((1.0 - f).powf(alpha) + f - 1.0) / (alpha - 1.0);
    let dpsi = |f: f64| (1.0 - alpha * (1.0 - f).powf(alpha - 1.0)) / (alpha - 1.0);
    ell_grid
        .iter()
        .map(|&ell| {
            let l = laplace(pool, ell);
            let residual = 2.0 * ell * l.ddphi + ell * l.dphi + psi(l.phi);
            let d = dpsi(l.phi);
            let infl: Vec<f64> = pool
                .sorted()
                .iter()
                .map(|&c| {
                    let h = 0.5 * c;
                    let e = (-ell * h).exp();
                    2.0 * ell * h * h * e - ell * h * e + d * e
                })
                .collect();
            let (_, se) = mean_se(&infl);
            OdeResidual { ell, residual, std_error: se, z: if se > 0.0 { residual / se } else { f64::INFINITY * residual.signum() } }
        })
        .collect()
}

/// `C₀ = 2 Σ_{k≥2} (2 + k/(k − 1)) ln k / (k(k − 1))`.
///
/// Summed exactly up to `K`, with the rest from Euler-Maclaurin using
/// `(3x − 2)/(x(x − 1)²) = Σ_{j≥2} (j + 1) x^{−j}`.
pub fn c0_constant() -> f64 {
    const K: u64 = 10_000;
    let term = |k: f64| 2.0 * (3.0 * k - 2.0) * k.ln() / (k * (k - 1.0) * (k - 1.0));
    let head: f64 = (2..=K).rev().map(|k| term(k as f64)).sum();
    let x = K as f64;
    let lx = x.ln();
    let (mut integral, mut deriv) = (0.0, 0.0);
    for j in 2..12 {
        let c = 2.0 * (j + 1) as f64;
        let jf = j as f64;
        integral += c * x.powf(1.0 - jf) * (lx / (jf - 1.0) + 1.0 / ((jf - 1.0) * (jf - 1.0)));
        deriv += c * x.powf(-jf - 1.0) * (1.0 - jf * lx);
    }
    // Σ_{k>K} f(k) = ∫_K^∞ f − f(K)/2 − f′(K)/12 + O(f‴)
    head + integral - term(x) / 2.0 - deriv / 12.0
}

/// Check of `β̂ < ½(2C₀² − 1)` for every supplied estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionBound {
    pub c0: f64,
    pub bound: f64,
    pub checks: Vec<(String, f64, f64, bool)>,
    pub all_below: bool,
}

pub fn dimension_bound(betas: &[EstimatorReport]) -> DimensionBound {
    let c0 = c0_constant();
    let bound = 0.5 * (2.0 * c0 * c0 - 1.0);
    let checks: Vec<_> = betas.iter().map(|r| (r.name.clone(), r.alpha, r.point, r.point < bound)).collect();
    let all_below = checks.iter().all(|c| c.3);
    DimensionBound { c0, bound, checks, all_below }
}

/// `E[C²]` against `(α/(α − 1)) E[C]` on a pool.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentIdentity {
    pub alpha: f64,
    pub m1: f64,
    pub m2: f64,
    /// `E[C²]/E[C]`, which should equal the mean offspring number.
    pub ratio: f64,
    pub target: f64,
    pub ratio_se: f64,
    pub rel_err: f64,
}

pub fn moment_identity(pool: &ConductancePool) -> MomentIdentity {
    let alpha = pool.alpha;
    let m1 = pool.mean();
    let m2 = pool.moment(2);
    let ratio = m2 / m1;
    let target = alpha / (alpha - 1.0);
    // delta method on (C², C); infinite third moment makes this optimistic
    let infl: Vec<f64> = pool.sorted().iter().map(|&c| (c * c - ratio * c) / m1).collect();
    let (_, ratio_se) = mean_se(&infl);
    MomentIdentity { alpha, m1, m2, ratio, target, ratio_se, rel_err: (ratio / target - 1.0).abs() }
}

/// Mean of a composite sum `C_1 + … + C_N` against `E[C²]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanTransfer {
    pub composite_mean: f64,
    pub composite_se: f64,
    pub second_moment: f64,
    pub second_moment_se: f64,
    pub z: f64,
}

pub fn mean_transfer(pool: &ConductancePool, n_samples: usize, seed: u64) -> Result<MeanTransfer> {
    let theta = shared_theta(pool.alpha)?;
    let [s] = unit_columns(n_samples, seed, Tag::Composite, |_, rng| {
        let n = theta.sample(rng);
        [pool.draw_sum(n, rng)]
    });
    let (composite_mean, composite_se) = mean_se(&s);
    let second_moment = pool.moment(2);
    let second_moment_se = pool.moment_se(2);
    Ok(MeanTransfer {
        composite_mean,
        composite_se,
        second_moment,
        second_moment_se,
        z: (composite_mean - second_moment) / composite_se.hypot(second_moment_se),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rde::{solve_gamma, SolveOptions};

    #[test]
    fn c0_series_head_and_total() {
        // first term is 4 ln 2
        let first = 2.0 * (2.0 + 2.0) * 2f64.ln() / 2.0;
        assert!((first - 4.0 * 2f64.ln()).abs() < 1e-15);
        // compare against a brute-force sum with an integral tail estimate
        let c0 = c0_constant();
        let n = 2_000_000u64;
        let brute: f64 = (2..=n).rev().map(|k| {
            let k = k as f64;
            2.0 * (2.0 + k / (k - 1.0)) * k.ln() / (k * (k - 1.0))
        }).sum();
        let x = n as f64;
        let tail = 6.0 * (x.ln() + 1.0) / x;
        assert!((c0 - brute - tail).abs() < 1e-9, "{c0} {brute} {tail}");
        assert!(c0 > first && c0.is_finite());
    }

    #[test]
    fn degenerate_pool_identities() {
        let ones = ConductancePool::ones(2.0, 1000).unwrap();
        let c1 = c1_identity(&ones, 1);
        assert!((c1.lhs - 1.0).abs() < 1e-6, "{c1:?}");
        assert!(c1.warnings.is_empty());
        assert_eq!(c1.rhs, 1.0);
        assert!((phi_inf(&ones, 1.0) - 1.0).abs() < 1e-15);
        let r = ode_residual(&ones, &[0.0, 1.0]);
        assert_eq!(r[0].residual, 0.0);
        let expected = (-1f64).exp() - (-0.5f64).exp();
        assert!((r[1].residual - expected).abs() < 1e-14);
        assert!(r[1].std_error < 1e-15);
        assert!(r[1].z.abs() > 1e10);
    }

    #[test]
    fn phi_inf_at_one_is_reciprocal_of_c1() {
        let p = solve_gamma(1.5, &SolveOptions { pool_size: 5000, seed: 2, ..Default::default() }).unwrap();
        let (c1, _) = c1_pairs(&p, p.seed);
        assert!((phi_inf(&p, 1.0) - 1.0 / c1).abs() < 1e-12);
    }

    #[test]
    fn converged_pool_at_two_satisfies_identities() {
        let p = solve_gamma(2.0, &SolveOptions { pool_size: 50_000, seed: 4, ..Default::default() }).unwrap();
        let c1 = c1_identity(&p, 3);
        assert!(c1.z.abs() < 4.0 && c1.rel_diff < 0.02, "{c1:?}");
        assert!(c1.warnings.is_empty());
        for r in ode_residual(&p, &[0.25, 1.0, 4.0]) {
            assert!(r.z.abs() < 4.0, "{r:?}");
        }
        let m = moment_identity(&p);
        assert!(m.rel_err < 0.03, "{m:?}");
        let t = mean_transfer(&p, 100_000, 5).unwrap();
        assert!(t.z.abs() < 4.0, "{t:?}");
    }
}
