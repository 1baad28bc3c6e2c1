//! Speed functional and the scans across α that run on common random
//! numbers.
//!
//! Pools solved with one seed share their per-slot streams, and pairings
//! read sorted pools at shared quantile positions, so quantities at
//! neighbouring α are positively correlated and their differences are
//! resolved far better than the quantities themselves.

use serde::{Deserialize, Serialize};

use super::identities::c0_constant;
use super::{pair, pair_kernel, pool_params, unit_columns, EstimatorReport, ScanReport, ScanRow};
use crate::error::Result;
use crate::rde::{solve_gamma, ConductancePool, SolveOptions};
use crate::stats::{self, mean_se, Interval, DEFAULT_BOOTSTRAP};
use crate::streams::{child_seed, Tag};

/// Per-unit numerator `C₀C₁/(C₀ + C₁ − 1)` and denominator
/// `1 + 1/(C₀ + C₁ − 1)` of the speed ratio.
fn speed_columns(pool: &ConductancePool, seed: u64) -> [Vec<f64>; 2] {
    unit_columns(pool.len(), seed, Tag::Pairing, |i, rng| {
        let (s, t) = pair(pool, i, rng);
        [pair_kernel(s, t), 1.0 + 1.0 / (s + t - 1.0)]
    })
}

/// `V = E[C₀C₁/(C₀ + C₁ − 1)] / E[2C₀/(C₀ + C₁ − 1)]`, the denominator in
/// its symmetrized form `1 + E[1/(C₀ + C₁ − 1)]`.
pub fn speed(pool: &ConductancePool, seed: u64) -> EstimatorReport {
    let [num, den] = speed_columns(pool, seed);
    let (point, ci) = stats::ratio_of_means(&num, &den, DEFAULT_BOOTSTRAP, child_seed(seed, Tag::Bootstrap, 4));
    pool_params(EstimatorReport::new("speed", pool.alpha, point, ci, pool.len(), seed), pool)
        .with_param("bootstrap", DEFAULT_BOOTSTRAP)
        .with_param("numerator", stats::mean(&num))
        .with_param("denominator", stats::mean(&den))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedScan {
    pub speeds: Vec<EstimatorReport>,
    /// Denominator `1 + E[1/(C₀ + C₁ − 1)]` per α with its interval.
    pub denominators: Vec<(f64, Interval)>,
    /// Paired differences of the denominator between consecutive α, with
    /// normal intervals.
    pub steps: Vec<(f64, Interval)>,
    pub all_below_half: bool,
    /// Every consecutive step has its interval above zero.
    pub denominator_increasing: bool,
    pub scan: ScanReport,
}

/// Speed and denominator at each pool; pools must be sorted by α and
/// have equal sizes.
pub fn speed_monotonicity_pools(pools: &[ConductancePool], seed: u64) -> SpeedScan {
    let cols: Vec<[Vec<f64>; 2]> = pools.iter().map(|p| speed_columns(p, seed)).collect();
    let speeds: Vec<EstimatorReport> = pools
        .iter()
        .zip(&cols)
        .map(|(p, [num, den])| {
            let (point, ci) = stats::ratio_of_means(num, den, DEFAULT_BOOTSTRAP, child_seed(seed, Tag::Bootstrap, 4));
            pool_params(EstimatorReport::new("speed", p.alpha, point, ci, p.len(), seed), p)
        })
        .collect();
    let denominators: Vec<(f64, Interval)> = pools
        .iter()
        .zip(&cols)
        .map(|(p, [_, den])| {
            let (m, se) = mean_se(den);
            (p.alpha, Interval::normal(m, se))
        })
        .collect();
    let steps: Vec<(f64, Interval)> = cols
        .windows(2)
        .zip(pools.windows(2))
        .map(|(c, p)| {
            let d: Vec<f64> = c[1][1].iter().zip(&c[0][1]).map(|(b, a)| b - a).collect();
            let (m, se) = mean_se(&d);
            (p[1].alpha, Interval::normal(m, se))
        })
        .collect();
    let all_below_half = speeds.iter().all(|s| s.point < 0.5);
    let denominator_increasing = steps.iter().all(|(_, i)| i.low > 0.0);
    let mut scan = ScanReport::new("speed_monotonicity", "alpha").with_param("seed", seed);
    for (s, (_, d)) in speeds.iter().zip(&denominators) {
        let mut row = ScanRow { x: s.alpha, estimate: s.point, stderr: s.std_error, replicas: s.n_samples, seed, extra: Default::default() };
        row.extra.insert("denominator".into(), 0.5 * (d.low + d.high));
        row.extra.insert("denominator_se".into(), d.std_error);
        scan.rows.push(row);
    }
    if !all_below_half {
        scan.warnings.push("some speed estimates are not below 1/2".into());
    }
    if !denominator_increasing {
        scan.warnings.push("denominator not resolved as increasing at every step".into());
    }
    SpeedScan { speeds, denominators, steps, all_below_half, denominator_increasing, scan }
}

/// Solve one pool per α with the same options, so all pools share their
/// streams.
pub fn solve_grid(alpha_grid: &[f64], opts: &SolveOptions) -> Result<Vec<ConductancePool>> {
    alpha_grid.iter().map(|&a| solve_gamma(a, opts)).collect()
}

pub fn speed_monotonicity(alpha_grid: &[f64], opts: &SolveOptions) -> Result<SpeedScan> {
    let pools = solve_grid(alpha_grid, opts)?;
    Ok(speed_monotonicity_pools(&pools, child_seed(opts.seed, Tag::Scan, 1)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanScan {
    pub means: Vec<(f64, Interval)>,
    pub c0: f64,
    /// Consecutive intervals are disjoint and ordered downwards.
    pub strictly_decreasing: bool,
    pub all_below_c0: bool,
    pub all_at_least_one: bool,
    pub scan: ScanReport,
}

pub fn conductance_mean_scan_pools(pools: &[ConductancePool]) -> MeanScan {
    let means: Vec<(f64, Interval)> = pools.iter().map(|p| (p.alpha, Interval::normal(p.mean(), p.moment_se(1)))).collect();
    let c0 = c0_constant();
    let strictly_decreasing = means.windows(2).all(|w| w[0].1.low > w[1].1.high);
    let all_below_c0 = means.iter().all(|(_, i)| 0.5 * (i.low + i.high) <= c0);
    let all_at_least_one = means.iter().all(|(_, i)| 0.5 * (i.low + i.high) >= 1.0);
    let mut scan = ScanReport::new("conductance_mean_scan", "alpha").with_param("c0", c0);
    for (p, (_, i)) in pools.iter().zip(&means) {
        scan.rows.push(ScanRow { x: p.alpha, estimate: p.mean(), stderr: i.std_error, replicas: p.len(), seed: p.seed, extra: Default::default() });
    }
    if !strictly_decreasing {
        scan.warnings.push("means not separated as decreasing at every step".into());
    }
    MeanScan { means, c0, strictly_decreasing, all_below_c0, all_at_least_one, scan }
}

pub fn conductance_mean_scan(alpha_grid: &[f64], opts: &SolveOptions) -> Result<MeanScan> {
    Ok(conductance_mean_scan_pools(&solve_grid(alpha_grid, opts)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_pool_speed_is_half() {
        let ones = ConductancePool::ones(2.0, 1000).unwrap();
        let s = speed(&ones, 1);
        assert_eq!(s.point, 0.5);
    }

    #[test]
    fn small_crn_scan_orders_means_and_denominators() {
        let opts = SolveOptions { pool_size: 20_000, seed: 5, ..Default::default() };
        let pools = solve_grid(&[1.3, 2.0], &opts).unwrap();
        let m = conductance_mean_scan_pools(&pools);
        assert!(m.strictly_decreasing && m.all_below_c0 && m.all_at_least_one, "{m:?}");
        let s = speed_monotonicity_pools(&pools, 9);
        assert!(s.denominator_increasing, "{:?}", s.steps);
        assert_eq!(s.scan.rows.len(), 2);
    }
}
