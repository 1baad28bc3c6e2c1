//! The three estimators of the dimension constant β_α and the weight
//! function κ_α used by the third one.

use rand::distributions::Open01;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{pair, pair_kernel, pool_params, unit_columns, EstimatorReport};
use crate::error::Result;
use crate::offspring::shared_theta;
use crate::rde::{g_of_sum, ConductancePool};
use crate::stats::{self, mean_se, Interval, DEFAULT_BOOTSTRAP};
use crate::streams::{child_seed, Tag};

/// `β = ½((E C)² / E[C C′/(C + C′ − 1)] − 1)` with the numerator from the
/// pool mean and the denominator from pool slots paired with resampled
/// partners.
pub fn beta_value(pool: &ConductancePool, seed: u64) -> EstimatorReport {
    let n = pool.len();
    let [a, b] = unit_columns(n, seed, Tag::Pairing, |i, rng| {
        let (s, t) = pair(pool, i, rng);
        [s, pair_kernel(s, t)]
    });
    let f = |m: &[f64]| 0.5 * (m[0] * m[0] / m[1] - 1.0);
    let point = f(&[stats::mean(&a), stats::mean(&b)]);
    let ci = stats::bootstrap_means(&[&a, &b], f, DEFAULT_BOOTSTRAP, child_seed(seed, Tag::Bootstrap, 1));
    pool_params(EstimatorReport::new("beta_value", pool.alpha, point, ci, n, seed), pool)
        .with_param("bootstrap", DEFAULT_BOOTSTRAP)
}

/// Ratio estimator built from composites `C_0, N, C_1..C_N`:
/// numerator `N C_0 C_1/(C_0 + S − 1) · ln(S/C_1)` with `S = C_1 + … + C_N`,
/// denominator `C_0 C_1/(C_0 + C_1 − 1)`.
pub fn beta_formula1(pool: &ConductancePool, n_samples: usize, seed: u64) -> Result<EstimatorReport> {
    let theta = shared_theta(pool.alpha)?;
    let [num, den] = unit_columns(n_samples, seed, Tag::Composite, |_, rng| {
        let c0 = pool.draw(rng);
        let n = theta.sample(rng);
        let c1 = pool.draw(rng);
        let s = c1 + pool.draw_sum(n - 1, rng);
        [n as f64 * c0 * c1 / (c0 + s - 1.0) * (s / c1).ln(), pair_kernel(c0, c1)]
    });
    let (point, ci) = stats::ratio_of_means(&num, &den, DEFAULT_BOOTSTRAP, child_seed(seed, Tag::Bootstrap, 2));
    Ok(pool_params(EstimatorReport::new("beta_formula1", pool.alpha, point, ci, n_samples, seed), pool)
        .with_param("bootstrap", DEFAULT_BOOTSTRAP))
}

/// Weight used inside the third β estimator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaWeight {
    Table,
    /// κ ≡ 1; only meaningful as a sensitivity control.
    One,
}

/// κ_α tabulated from a fixed batch of composites.
///
/// With `a_k = N_k C_{1,k}` and `b_k = S_k − 1` for composites
/// `(N_k, C_{1,k}..C_{N_k,k})`, `κ(r) = mean_k a_k r/(r + b_k)`. Values on a
/// log-spaced grid over `[1, R_MAX]` are interpolated with Catmull-Rom
/// splines in `ln r`; larger `r` is evaluated directly.
#[derive(Clone, Debug)]
pub struct KappaTable {
    a: Vec<f64>,
    b: Vec<f64>,
    log_step: f64,
    values: Vec<f64>,
    /// Largest standard error of κ over the grid, from the composite spread.
    pub max_se: f64,
    pub seed: u64,
}

const R_MAX: f64 = 1e6;
const GRID: usize = 1024;

impl KappaTable {
    pub fn build(pool: &ConductancePool, composites: usize, seed: u64) -> Result<Self> {
        let theta = shared_theta(pool.alpha)?;
        let [a, b] = unit_columns(composites, seed, Tag::Kappa, |_, rng| {
            let n = theta.sample(rng);
            let c1 = pool.draw(rng);
            let s = c1 + pool.draw_sum(n - 1, rng);
            [n as f64 * c1, s - 1.0]
        });
        let log_step = R_MAX.ln() / (GRID - 1) as f64;
        let mut max_se = 0.0f64;
        let values = crate::par::map_indexed(GRID, |g| {
            let r = (g as f64 * log_step).exp();
            let (m, se) = mean_se(&a.iter().zip(&b).map(|(a, b)| a * r / (r + b)).collect::<Vec<_>>());
            (m, se)
        })
        .into_iter()
        .map(|(m, se)| {
            max_se = max_se.max(se);
            m
        })
        .collect();
        Ok(KappaTable { a, b, log_step, values, max_se, seed })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// κ(r) computed directly from the composites.
    pub fn exact(&self, r: f64) -> f64 {
        self.a.iter().zip(&self.b).map(|(a, b)| a * r / (r + b)).sum::<f64>() / self.a.len() as f64
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r >= R_MAX {
            return self.exact(r);
        }
        let x = r.max(1.0).ln() / self.log_step;
        let i = (x.floor() as usize).min(GRID - 2);
        let t = x - i as f64;
        let v = |j: isize| self.values[j.clamp(0, GRID as isize - 1) as usize];
        let i = i as isize;
        let (p0, p1, p2, p3) = (v(i - 1), v(i), v(i + 1), v(i + 2));
        // end panels fall back to linear interpolation
        if i == 0 || i as usize == GRID - 2 {
            return p1 + t * (p2 - p1);
        }
        let t2 = t * t;
        let t3 = t2 * t;
        0.5 * (2.0 * p1 + (p2 - p0) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 + (3.0 * p1 - p0 - 3.0 * p2 + p3) * t3)
    }
}

/// The third estimator: a κ-weighted ratio over composites `(U, N, C_1..C_N)`
/// with `S = C_1 + … + C_N` and `G = (U + (1 − U)/S)⁻¹`. Numerator
/// `N C_1/S · ln(C_1/S) · κ(G)`, denominator `ln(1 − U) · κ(G)`.
pub fn beta_formula2(
    pool: &ConductancePool,
    table: &KappaTable,
    weight: KappaWeight,
    n_samples: usize,
    seed: u64,
) -> Result<EstimatorReport> {
    let theta = shared_theta(pool.alpha)?;
    let [num, den] = unit_columns(n_samples, seed, Tag::Composite, |_, rng| {
        let u: f64 = rng.sample(Open01);
        let n = theta.sample(rng);
        let c1 = pool.draw(rng);
        let s = c1 + pool.draw_sum(n - 1, rng);
        let k = match weight {
            KappaWeight::Table => table.eval(g_of_sum(u, s)),
            KappaWeight::One => 1.0,
        };
        [n as f64 * c1 / s * (c1 / s).ln() * k, (-u).ln_1p() * k]
    });
    let (point, ci) = stats::ratio_of_means(&num, &den, DEFAULT_BOOTSTRAP, child_seed(seed, Tag::Bootstrap, 3));
    let mut r = pool_params(EstimatorReport::new("beta_formula2", pool.alpha, point, ci, n_samples, seed), pool)
        .with_param("bootstrap", DEFAULT_BOOTSTRAP)
        .with_param("kappa_weight", serde_json::to_value(weight).unwrap())
        .with_param("kappa_table_size", table.len())
        .with_param("kappa_table_seed", table.seed)
        .with_param("numerator_mean", stats::mean(&num))
        .with_param("denominator_mean", stats::mean(&den));
    if weight == KappaWeight::One {
        r.name = "beta_formula2_unweighted".into();
    }
    Ok(r)
}

/// Direct Monte Carlo of `κ(r) = E[r N C_1/(r + C_1 + … + C_N − 1)]` with
/// `N ~ θ_α`. The plain mean gets a normal interval.
pub fn kappa(pool: &ConductancePool, r: f64, n_samples: usize, seed: u64) -> Result<EstimatorReport> {
    if !(r >= 1.0) {
        return Err(crate::Error::Param(format!("kappa needs r ≥ 1, got {r}")));
    }
    let theta = shared_theta(pool.alpha)?;
    let [v] = unit_columns(n_samples, seed, Tag::Kappa, |_, rng| {
        let n = theta.sample(rng);
        let c1 = pool.draw(rng);
        let s = c1 + pool.draw_sum(n - 1, rng);
        [r * n as f64 * c1 / (r + s - 1.0)]
    });
    let (m, se) = mean_se(&v);
    Ok(pool_params(EstimatorReport::new("kappa", pool.alpha, m, Interval::normal(m, se), n_samples, seed), pool)
        .with_param("r", r))
}

/// Standard error that the table's own composites add to an outer average
/// `mean_i w_i κ(G_i)`.
///
/// The average equals `mean_k F_k` with
/// `F_k = mean_i w_i a_k G_i/(G_i + b_k)`, so the table contributes
/// `sd_k(F_k)/√M`. `F_k` is estimated from a subsample of outer units.
fn table_contribution_se(table: &KappaTable, g: &[f64], w: &[f64]) -> f64 {
    const OUTER: usize = 20_000;
    const INNER: usize = 2_000;
    let m = table.len();
    let outer = g.len().min(OUTER);
    let stride = (m / INNER).max(1);
    let f: Vec<f64> = crate::par::map_indexed(m.div_ceil(stride), |j| {
        let k = j * stride;
        let (a, b) = (table.a[k], table.b[k]);
        (0..outer).map(|i| w[i] * a * g[i] / (g[i] + b)).sum::<f64>() / outer as f64
    });
    stats::std_dev(&f) / (m as f64).sqrt()
}

/// Both sides of the invariance identity for κ at one `r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaCheck {
    pub r: f64,
    pub direct: f64,
    pub direct_se: f64,
    pub nested: f64,
    /// Outer Monte Carlo error of the nested side combined with the error
    /// inherited from the κ table.
    pub nested_se: f64,
    pub z: f64,
    pub agree_95: bool,
}

/// Compare κ(r) with the nested expression
/// `E[N · r/(r + S′) · κ((U + (1 − U)/(r + S′))⁻¹)]`, `S′ = C_2 + … + C_N`,
/// where the inner κ comes from an independently built table.
pub fn kappa_consistency(pool: &ConductancePool, r: f64, n_samples: usize, table: &KappaTable, seed: u64) -> Result<KappaCheck> {
    let direct = kappa(pool, r, n_samples, child_seed(seed, Tag::Kappa, 1))?;
    let theta = shared_theta(pool.alpha)?;
    let [v, w, g] = unit_columns(n_samples, child_seed(seed, Tag::Kappa, 2), Tag::Composite, |_, rng| {
        let u: f64 = rng.sample(Open01);
        let n = theta.sample(rng);
        let rest = r + pool.draw_sum(n - 1, rng);
        let w = n as f64 * r / rest;
        let g = g_of_sum(u, rest);
        [w * table.eval(g), w, g]
    });
    let (nested, outer_se) = mean_se(&v);
    let nested_se = outer_se.hypot(table_contribution_se(table, &g, &w));
    let z = (direct.point - nested) / direct.std_error.hypot(nested_se);
    Ok(KappaCheck {
        r,
        direct: direct.point,
        direct_se: direct.std_error,
        nested,
        nested_se,
        z,
        agree_95: z.abs() <= stats::Z95,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rde::{solve_gamma, SolveOptions};

    fn pool(alpha: f64, p: usize) -> ConductancePool {
        solve_gamma(alpha, &SolveOptions { pool_size: p, seed: 11, ..Default::default() }).unwrap()
    }

    #[test]
    fn degenerate_pool_values() {
        let ones = ConductancePool::ones(2.0, 2000).unwrap();
        let b = beta_value(&ones, 1);
        assert_eq!(b.point, 0.0);
        // every factor is positive, the all-ones numerator is E[N ln N]
        let f1 = beta_formula1(&ones, 5000, 1).unwrap();
        assert!((f1.point - 2f64.ln()).abs() < 1e-12);
        let k = kappa(&ones, 1.0, 1000, 1).unwrap();
        assert!((k.point - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_bounded_by_mean_offspring_times_mean() {
        let p = pool(1.5, 20_000);
        let bound = 3.0 * p.mean();
        for r in [1.0, 10.0, 1e3, 1e7] {
            let k = kappa(&p, r, 20_000, 5).unwrap();
            assert!(k.point <= bound, "{r}: {} > {bound}", k.point);
        }
    }

    #[test]
    fn table_interpolation_matches_direct_evaluation() {
        let p = pool(1.5, 10_000);
        let t = KappaTable::build(&p, 20_000, 3).unwrap();
        for r in [1.0, 1.37, 2.0, 5.0, 17.3, 400.0, 9.9e5, 3e6] {
            let (e, i) = (t.exact(r), t.eval(r));
            assert!((e - i).abs() < 1e-6 * e, "r={r}: {e} vs {i}");
        }
    }

    #[test]
    fn three_estimators_agree_at_two() {
        let p = pool(2.0, 50_000);
        let t = KappaTable::build(&p, 50_000, 4).unwrap();
        let v = beta_value(&p, 1);
        let f1 = beta_formula1(&p, 100_000, 2).unwrap();
        let f2 = beta_formula2(&p, &t, KappaWeight::Table, 100_000, 3).unwrap();
        for r in [&v, &f1, &f2] {
            assert!(r.point > 0.0 && r.point < 1.0, "{}: {}", r.name, r.point);
        }
        assert!(v.overlaps(&f1) && v.overlaps(&f2) && f1.overlaps(&f2), "{v:?}\n{f1:?}\n{f2:?}");
        assert!(f2.parameters["numerator_mean"].as_f64().unwrap() < 0.0);
        assert!(f2.parameters["denominator_mean"].as_f64().unwrap() < 0.0);
    }

    #[test]
    fn kappa_identity_holds_at_two() {
        let p = pool(2.0, 30_000);
        let t = KappaTable::build(&p, 50_000, 8).unwrap();
        for r in [1.0, 2.0, 5.0] {
            let c = kappa_consistency(&p, r, 50_000, &t, 9).unwrap();
            assert!(c.z.abs() < 4.0, "{c:?}");
        }
    }
}
