//! Derived quantities computed from conductance pools and simulated trees.

pub mod beta;
pub mod identities;
pub mod report;
pub mod scans;
pub mod speed;

pub use beta::{beta_formula1, beta_formula2, beta_value, kappa, kappa_consistency, KappaCheck, KappaTable, KappaWeight};
pub use identities::{
    c0_constant, c1_identity, dimension_bound, mean_transfer, moment_identity, ode_residual, phi_inf, C1Identity, DimensionBound,
    MeanTransfer, MomentIdentity, OdeResidual,
};
pub use report::{EstimatorReport, ScanReport, ScanRow, SCHEMA_VERSION};
pub use scans::{
    conductance_moment_scan, discrete_dimension_scan, generation_moment_scan, level_size_check, moment_spread, DimensionScan, LevelSizeCheck,
};
pub use speed::{
    conductance_mean_scan, conductance_mean_scan_pools, solve_grid, speed, speed_monotonicity, speed_monotonicity_pools, MeanScan, SpeedScan,
};

use crate::par;
use crate::rde::ConductancePool;
use crate::streams::{substream, Rng as StreamRng, Tag};

const CHUNK: usize = 2048;

/// Evaluate `f` on `n` units, unit `i` drawing from its own substream
/// `(seed, tag, i)`, and return the `K` outputs as columns.
pub(crate) fn unit_columns<const K: usize, F>(n: usize, seed: u64, tag: Tag, f: F) -> [Vec<f64>; K]
where
    F: Fn(usize, &mut StreamRng) -> [f64; K] + Sync + Send,
{
    let rows: Vec<Vec<[f64; K]>> = par::map_chunks(n, CHUNK, |range| {
        range
            .map(|i| {
                let mut rng = substream(seed, tag, i as u64, 0);
                f(i, &mut rng)
            })
            .collect()
    });
    let mut cols: [Vec<f64>; K] = std::array::from_fn(|_| Vec::with_capacity(n));
    for row in rows.iter().flatten() {
        for (c, v) in cols.iter_mut().zip(row) {
            c.push(*v);
        }
    }
    cols
}

/// `st/(s + t − 1)`, the pair kernel shared by several identities.
#[inline]
pub fn pair_kernel(s: f64, t: f64) -> f64 {
    s * t / (s + t - 1.0)
}

/// Pool slot `i` paired with an independent resampled partner.
#[inline]
pub(crate) fn pair(pool: &ConductancePool, i: usize, rng: &mut StreamRng) -> (f64, f64) {
    let sorted = pool.sorted();
    (sorted[i % sorted.len()], pool.draw(rng))
}

pub(crate) fn pool_params(r: EstimatorReport, pool: &ConductancePool) -> EstimatorReport {
    r.with_param("pool_size", pool.len())
        .with_param("pool_iterations", pool.iterations)
        .with_param("pool_seed", pool.seed)
}
