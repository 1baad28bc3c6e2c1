//! Scans over the level `n` of conditioned discrete trees.

use serde::{Deserialize, Serialize};

use super::{ScanReport, ScanRow};
use crate::discrete::{reduce, sample_conditioned, ReducedTree, DEFAULT_NODE_CAP, DEFAULT_RETRY_BUDGET};
use crate::error::{Error, Result};
use crate::offspring::{survival_probs, OffspringDist};
use crate::par;
use crate::stats::mean_se;
use crate::streams::{substream, Tag};

/// Reduced trees for `replicas` conditioned samples at level `n`, with the
/// attempt and discard totals. Replica `i` owns substream `(seed, n, i)`.
pub fn conditioned_replicas(rho: &OffspringDist, n: u32, replicas: usize, seed: u64) -> Result<(Vec<ReducedTree>, u64, u64)> {
    let out = par::map_indexed(replicas, |i| {
        let mut rng = substream(seed, Tag::Discrete, n as u64, i as u64);
        sample_conditioned(rho, n, DEFAULT_NODE_CAP, DEFAULT_RETRY_BUDGET, &mut rng)
            .and_then(|c| Ok((reduce(&c.tree, n)?, c.attempts, c.discards)))
    });
    let mut trees = Vec::with_capacity(replicas);
    let (mut attempts, mut discards) = (0, 0);
    for r in out {
        let (t, a, d) = r?;
        trees.push(t);
        attempts += a;
        discards += d;
    }
    Ok((trees, attempts, discards))
}

fn caveat(scan: &mut ScanReport, n: u32, discards: u64) {
    if discards > 0 {
        scan.warnings.push(format!("n = {n}: {discards} attempts dropped at the node cap; estimates are biased towards smaller trees"));
    }
}

/// Mean entropy of harmonic measure on level `n`, per `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionScan {
    pub alpha: f64,
    /// `(n, E[entropy]/ln n, its standard error)`.
    pub ratios: Vec<(u32, f64, f64)>,
    pub scan: ScanReport,
}

impl DimensionScan {
    /// Every step moves toward `target` and the last ratio is within `gap`.
    pub fn approaches(&self, target: f64, gap: f64) -> (bool, f64) {
        let dist: Vec<f64> = self.ratios.iter().map(|r| (r.1 - target).abs()).collect();
        let monotone = dist.windows(2).all(|w| w[1] < w[0]);
        let last = *dist.last().unwrap_or(&f64::INFINITY);
        (monotone && last < gap, last)
    }
}

/// For each `n`, the average over conditioned trees of the exact entropy
/// `Σ μ(leaf)(−ln μ(leaf))`, reported with its ratio to `ln n`.
pub fn discrete_dimension_scan(alpha: f64, n_list: &[u32], replicas: usize, seed: u64) -> Result<DimensionScan> {
    let rho = OffspringDist::rho_canonical(alpha)?;
    let mut scan = ScanReport::new("discrete_dimension_scan", "n").with_param("alpha", alpha).with_param("offspring", "rho_canonical");
    let mut ratios = Vec::new();
    for &n in n_list {
        let (trees, attempts, discards) = conditioned_replicas(&rho, n, replicas, seed)?;
        let h: Vec<f64> = trees.iter().map(ReducedTree::entropy).collect();
        let (m, se) = mean_se(&h);
        let ln = (n as f64).ln();
        let mut row = ScanRow { x: n as f64, estimate: m, stderr: se, replicas, seed, extra: Default::default() };
        row.extra.insert("ratio".into(), m / ln);
        row.extra.insert("ratio_se".into(), se / ln);
        row.extra.insert("attempts".into(), attempts as f64);
        scan.rows.push(row);
        caveat(&mut scan, n, discards);
        ratios.push((n, m / ln, se / ln));
    }
    Ok(DimensionScan { alpha, ratios, scan })
}

/// `(n + 1)^r E[C_n^r]` per `n` for each exponent in `rs`. Row estimates
/// hold the first exponent; every exponent appears in `extra` as `m_<r>`.
pub fn conductance_moment_scan(alpha: f64, n_list: &[u32], rs: &[f64], replicas: usize, seed: u64) -> Result<ScanReport> {
    let rho = OffspringDist::rho_canonical(alpha)?;
    let mut scan = ScanReport::new("conductance_moment_scan", "n").with_param("alpha", alpha).with_param("exponents", rs.to_vec());
    for &n in n_list {
        let (trees, _, discards) = conditioned_replicas(&rho, n, replicas, seed)?;
        let c: Vec<f64> = trees.iter().map(ReducedTree::conductance_n).collect();
        let mut row = ScanRow { x: n as f64, estimate: f64::NAN, stderr: f64::NAN, replicas, seed, extra: Default::default() };
        for (j, &r) in rs.iter().enumerate() {
            let scale = (n as f64 + 1.0).powf(r);
            let v: Vec<f64> = c.iter().map(|x| scale * x.powf(r)).collect();
            let (m, se) = mean_se(&v);
            if j == 0 {
                row.estimate = m;
                row.stderr = se;
            }
            row.extra.insert(format!("m_{r}"), m);
            row.extra.insert(format!("se_{r}"), se);
        }
        scan.rows.push(row);
        caveat(&mut scan, n, discards);
    }
    Ok(scan)
}

/// Ratio of largest to smallest scaled moment across the scan, per exponent.
pub fn moment_spread(scan: &ScanReport, r: f64) -> f64 {
    let key = format!("m_{r}");
    let v: Vec<f64> = scan.rows.iter().filter_map(|row| row.extra.get(&key).copied()).collect();
    v.iter().cloned().fold(f64::MIN, f64::max) / v.iter().cloned().fold(f64::MAX, f64::min)
}

/// Level-size statistics of conditioned reduced trees at one `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSizeCheck {
    pub alpha: f64,
    pub n: u32,
    pub q_n: f64,
    /// `q_n E[#T*_n]`, which should be 1.
    pub scaled_mean: f64,
    pub scaled_se: f64,
    pub z: f64,
    /// `(p, E[ln #T*_{n−p}], E[ln #T*_{n−p}]/ln(n/p))`.
    pub log_sizes: Vec<(u32, f64, f64)>,
    pub replicas: usize,
    pub discards: u64,
}

pub fn level_size_check(alpha: f64, n: u32, replicas: usize, seed: u64) -> Result<LevelSizeCheck> {
    let rho = OffspringDist::rho_canonical(alpha)?;
    let q_n = survival_probs(alpha, n as usize)?.q(n as usize);
    let (trees, _, discards) = conditioned_replicas(&rho, n, replicas, seed)?;
    let sizes: Vec<f64> = trees.iter().map(|t| q_n * t.level_size(n).unwrap() as f64).collect();
    let (scaled_mean, scaled_se) = mean_se(&sizes);
    let mut log_sizes = Vec::new();
    for p in [n / 8, n / 4, n / 2] {
        if p == 0 {
            continue;
        }
        let l: Vec<f64> = trees.iter().map(|t| (t.level_size(n - p).unwrap() as f64).ln()).collect();
        let m = crate::stats::mean(&l);
        log_sizes.push((p, m, m / (n as f64 / p as f64).ln()));
    }
    Ok(LevelSizeCheck {
        alpha,
        n,
        q_n,
        scaled_mean,
        scaled_se,
        z: (scaled_mean - 1.0) / scaled_se,
        log_sizes,
        replicas,
        discards,
    })
}

/// `q_m^{γ−1} E[(#T_m)^γ]` for the unconditioned generation size, computed
/// as `q_m^γ E[(#T_m)^γ | #T_m > 0]`, per `(m, γ)`.
pub fn generation_moment_scan(alpha: f64, ms: &[u32], gammas: &[f64], replicas: usize, seed: u64) -> Result<Vec<(u32, f64, f64, f64)>> {
    if gammas.iter().any(|&g| g <= 0.0) {
        return Err(Error::Param("moment exponents must be positive".into()));
    }
    let rho = OffspringDist::rho_canonical(alpha)?;
    let top = *ms.iter().max().unwrap_or(&0) as usize;
    let q = survival_probs(alpha, top)?;
    let mut out = Vec::new();
    for &m in ms {
        let (trees, _, _) = conditioned_replicas(&rho, m, replicas, seed)?;
        let qm = q.q(m as usize);
        for &g in gammas {
            let v: Vec<f64> = trees.iter().map(|t| qm.powf(g) * (t.level_size(m).unwrap() as f64).powf(g)).collect();
            let (mean, se) = mean_se(&v);
            out.push((m, g, mean, se));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_sizes_scale_with_survival_probability() {
        let c = level_size_check(2.0, 16, 2000, 3).unwrap();
        assert!(c.z.abs() < 4.0, "{c:?}");
        assert_eq!(c.log_sizes.len(), 3);
        assert_eq!(c.discards, 0);
    }

    #[test]
    fn entropy_ratio_stays_below_bound() {
        let s = discrete_dimension_scan(2.0, &[8, 16], 300, 1).unwrap();
        for (_, r, _) in &s.ratios {
            assert!(*r > 0.0 && *r < 1.1);
        }
        assert!(s.scan.to_csv().starts_with("n,estimate,stderr,replicas,seed"));
    }

    #[test]
    fn scaled_conductance_moments_are_moderate() {
        let s = conductance_moment_scan(2.0, &[8, 16, 32], &[1.0, 1.5], 500, 2).unwrap();
        assert!(moment_spread(&s, 1.0) < 2.0);
        assert!(moment_spread(&s, 1.5) < 2.0);
    }

    #[test]
    fn unconditioned_mean_is_one() {
        let v = generation_moment_scan(2.0, &[8], &[1.0], 3000, 4).unwrap();
        let (_, _, m, se) = v[0];
        assert!((m - 1.0).abs() < 4.0 * se);
    }
}
