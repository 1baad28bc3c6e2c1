//! Population dynamics for the conductance law γ_α.
//!
//! A pool is an empirical measure on [1, ∞), always stored sorted. One
//! step of the map pushes every slot through
//! `G(U, N, C_1..C_N) = (U + (1 − U)/(C_1 + … + C_N))⁻¹` with fresh
//! `U`, `N ~ θ_α` and resampled `C_i`.
//!
//! Resampling reads the sorted pool at quantile positions, so a shared
//! stream gives the monotone (quantile) coupling between two pools, and a
//! larger α consumes a prefix of the draws used by a smaller α.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::distributions::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_alpha, Error, Result};
use crate::offspring::{shared_theta, OffspringDist};
use crate::par;
use crate::streams::{substream, Rng as StreamRng, Tag};

pub const DEFAULT_POOL_SIZE: usize = 200_000;
pub const DEFAULT_MAX_ITER: usize = 300;
pub const DEFAULT_TOL: f64 = 1e-3;
pub const POOL_SCHEMA_VERSION: u32 = 1;

const CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// No iteration has run yet.
    Initial,
    /// Successive pools came within the tolerance.
    Converged,
    /// The iteration budget ran out first.
    MaxIter,
}

/// How the randomness of successive iterations relates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Noise {
    /// Every iteration reuses the same per-slot streams. The iteration is
    /// then a contraction of a fixed random map, and successive distances
    /// shrink geometrically instead of stalling at the sampling noise.
    Frozen,
    /// Every iteration draws new per-slot streams.
    Fresh,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConductancePool {
    pub alpha: f64,
    samples: Vec<f64>,
    pub iterations: usize,
    pub seed: u64,
    pub stop_rule: StopRule,
    /// Distance between the last two iterates, when there were two.
    pub last_d1: Option<f64>,
}

impl ConductancePool {
    /// Build a pool from raw samples, which are sorted on the way in.
    pub fn from_samples(alpha: f64, mut samples: Vec<f64>, seed: u64, iterations: usize) -> Result<Self> {
        check_alpha(alpha)?;
        if samples.is_empty() {
            return Err(Error::Param("a pool needs at least one sample".into()));
        }
        if let Some(bad) = samples.iter().find(|x| !(x.is_finite() && **x >= 1.0)) {
            return Err(Error::Param(format!("conductance samples must be finite and ≥ 1, found {bad}")));
        }
        samples.sort_unstable_by(f64::total_cmp);
        Ok(ConductancePool { alpha, samples, iterations, seed, stop_rule: StopRule::Initial, last_d1: None })
    }

    pub fn constant(alpha: f64, size: usize, value: f64) -> Result<Self> {
        Self::from_samples(alpha, vec![value; size], 0, 0)
    }

    pub fn ones(alpha: f64, size: usize) -> Result<Self> {
        Self::constant(alpha, size, 1.0)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Samples in ascending order.
    pub fn sorted(&self) -> &[f64] {
        &self.samples
    }

    pub fn min(&self) -> f64 {
        self.samples[0]
    }

    pub fn max(&self) -> f64 {
        *self.samples.last().unwrap()
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    pub fn moment(&self, k: i32) -> f64 {
        self.samples.iter().map(|x| x.powi(k)).sum::<f64>() / self.len() as f64
    }

    /// Standard error of the sample mean of `x^k`.
    pub fn moment_se(&self, k: i32) -> f64 {
        let m = self.moment(k);
        let v = self.samples.iter().map(|x| (x.powi(k) - m).powi(2)).sum::<f64>() / (self.len() as f64 - 1.0);
        (v / self.len() as f64).sqrt()
    }

    /// Draw one resampled conductance.
    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let p = self.samples.len();
        let v: f64 = rng.gen();
        self.samples[((v * p as f64) as usize).min(p - 1)]
    }

    /// Sum of `n` resampled conductances.
    #[inline]
    pub fn draw_sum<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> f64 {
        let mut s = 0.0;
        for _ in 0..n {
            s += self.draw(rng);
        }
        s
    }

    /// Write the little-endian sample array to `path` and the metadata to
    /// the sidecar `path.json`.
    pub fn save_bin(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(8 * self.len());
        for x in &self.samples {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
        fs::write(path, bytes)?;
        self.write_sidecar(path)
    }

    /// One sample per row under a `conductance` header, plus the sidecar.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(fs::File::create(path)?);
        writeln!(out, "conductance")?;
        for x in &self.samples {
            writeln!(out, "{x:?}")?;
        }
        out.flush()?;
        self.write_sidecar(path)
    }

    fn write_sidecar(&self, path: &Path) -> Result<()> {
        let meta = PoolMeta {
            schema_version: POOL_SCHEMA_VERSION,
            alpha: self.alpha,
            seed: self.seed,
            iterations: self.iterations,
            pool_size: self.len(),
            stop_rule: self.stop_rule,
            last_d1: self.last_d1,
        };
        fs::write(sidecar_path(path), serde_json::to_string_pretty(&meta)? + "\n")?;
        Ok(())
    }

    /// Load a pool written by [`save_bin`](Self::save_bin) or
    /// [`save_csv`](Self::save_csv); the format is picked by extension.
    pub fn load(path: &Path) -> Result<Self> {
        let meta: PoolMeta = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
        let samples = if path.extension().is_some_and(|e| e == "csv") {
            let text = fs::read_to_string(path)?;
            let mut lines = text.lines();
            lines.next();
            lines
                .filter(|l| !l.trim().is_empty())
                .map(|l| l.trim().parse::<f64>().map_err(|e| Error::PoolFormat(format!("{l}: {e}"))))
                .collect::<Result<Vec<_>>>()?
        } else {
            let bytes = fs::read(path)?;
            if bytes.len() % 8 != 0 {
                return Err(Error::PoolFormat(format!("{} bytes is not a whole number of f64", bytes.len())));
            }
            bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect()
        };
        if samples.len() != meta.pool_size {
            return Err(Error::PoolFormat(format!(
                "sidecar says {} samples, file holds {}",
                meta.pool_size,
                samples.len()
            )));
        }
        let mut pool = Self::from_samples(meta.alpha, samples, meta.seed, meta.iterations)?;
        pool.stop_rule = meta.stop_rule;
        pool.last_d1 = meta.last_d1;
        Ok(pool)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PoolMeta {
    pub schema_version: u32,
    pub alpha: f64,
    pub seed: u64,
    pub iterations: usize,
    pub pool_size: usize,
    pub stop_rule: StopRule,
    pub last_d1: Option<f64>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// `G(u, s) = (u + (1 − u)/s)⁻¹` for a composite sum `s`.
#[inline]
pub fn g_of_sum(u: f64, s: f64) -> f64 {
    1.0 / (u + (1.0 - u) / s)
}

/// `G` applied to the first `n` entries of `xs`.
pub fn g_map(u: f64, n: usize, xs: &[f64]) -> Result<f64> {
    if n < 2 || xs.len() < n {
        return Err(Error::Param(format!("g_map needs n ≥ 2 and at least n values (n = {n}, len = {})", xs.len())));
    }
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::Param(format!("u must lie in [0,1], got {u}")));
    }
    Ok(g_of_sum(u, xs[..n].iter().sum()))
}

/// Address of the randomness used by one application of the map.
#[derive(Clone, Copy, Debug)]
pub struct StepStreams {
    pub seed: u64,
    pub round: u64,
}

impl StepStreams {
    #[inline]
    pub fn slot(&self, j: usize) -> StreamRng {
        substream(self.seed, Tag::PhiStep, self.round, j as u64)
    }
}

/// One new conductance from slot `j`: draws `U`, then `N`, then the
/// resampling positions, in that order.
#[inline]
fn fresh_value(pool: &ConductancePool, theta: &OffspringDist, rng: &mut StreamRng) -> f64 {
    let u: f64 = rng.sample(Open01);
    let n = theta.sample(rng);
    g_of_sum(u, pool.draw_sum(n, rng))
}

/// `n_out` independent draws from the image of `pool` under the map,
/// unsorted, in slot order.
pub fn phi_values(pool: &ConductancePool, theta: &OffspringDist, streams: StepStreams, n_out: usize) -> Vec<f64> {
    par::map_chunks(n_out, CHUNK, |range| {
        range
            .map(|j| {
                let mut rng = streams.slot(j);
                fresh_value(pool, theta, &mut rng)
            })
            .collect::<Vec<f64>>()
    })
    .concat()
}

/// One step of the map at the pool's own α, keeping the pool size.
pub fn phi_step(pool: &ConductancePool, streams: StepStreams) -> Result<ConductancePool> {
    let theta = shared_theta(pool.alpha)?;
    let values = phi_values(pool, &theta, streams, pool.len());
    let mut next = ConductancePool::from_samples(pool.alpha, values, pool.seed, pool.iterations + 1)?;
    next.stop_rule = pool.stop_rule;
    Ok(next)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveOptions {
    pub pool_size: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
    pub noise: Noise,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            pool_size: DEFAULT_POOL_SIZE,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            seed: 0,
            noise: Noise::Frozen,
        }
    }
}

/// Iterate the map from the all-ones pool until successive pools are
/// within `tol` in d₁ or the budget runs out. The pool records which rule
/// stopped it.
pub fn solve_gamma(alpha: f64, opts: &SolveOptions) -> Result<ConductancePool> {
    check_alpha(alpha)?;
    if opts.pool_size < 1000 {
        return Err(Error::Param(format!("pool size must be at least 1000, got {}", opts.pool_size)));
    }
    let mut pool = ConductancePool::ones(alpha, opts.pool_size)?;
    pool.seed = opts.seed;
    iterate(pool, opts)
}

/// Continue iterating an existing pool under the same rules.
pub fn iterate(mut pool: ConductancePool, opts: &SolveOptions) -> Result<ConductancePool> {
    let start = pool.iterations;
    pool.stop_rule = StopRule::MaxIter;
    for it in start..start + opts.max_iter {
        let round = match opts.noise {
            Noise::Frozen => 0,
            Noise::Fresh => it as u64,
        };
        let next = phi_step(&pool, StepStreams { seed: opts.seed, round })?;
        let d = wasserstein1(&pool, &next)?;
        pool = next;
        pool.last_d1 = Some(d);
        if d < opts.tol {
            pool.stop_rule = StopRule::Converged;
            break;
        }
    }
    Ok(pool)
}

/// d₁ between equal-size pools: the mean gap between sorted samples.
pub fn wasserstein1(a: &ConductancePool, b: &ConductancePool) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch(a.len(), b.len()));
    }
    let s: f64 = a.sorted().iter().zip(b.sorted()).map(|(x, y)| (x - y).abs()).sum();
    Ok(s / a.len() as f64)
}

/// `c_α = 1 + Σ_k θ_α(k)(k − 1 − k ln k)/(k − 1)²`, the Lipschitz constant
/// of the map in d₁.
pub fn contraction_constant(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let theta = shared_theta(alpha)?;
    let mut acc = 0.0;
    let mut p = alpha / 2.0;
    let mut k = 2u64;
    loop {
        let kf = k as f64;
        let f = (kf - 1.0 - kf * kf.ln()) / ((kf - 1.0) * (kf - 1.0));
        acc += p * f;
        p *= (kf - alpha) / (kf + 1.0);
        k += 1;
        if p == 0.0 {
            break;
        }
        // |f| decreases past k = 3, so S(k)|f(k)| bounds the rest
        let kf = k as f64;
        let bound = theta.survival(k) * kf * kf.ln() / ((kf - 1.0) * (kf - 1.0));
        if k > 3 && bound < 1e-13 {
            break;
        }
    }
    Ok(1.0 + acc)
}

/// The empirical Laplace transform φ(ℓ) = E e^{−ℓC/2} and its first two
/// derivatives, all from the same pool.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplaceEval {
    pub ell: f64,
    pub phi: f64,
    pub dphi: f64,
    pub ddphi: f64,
}

pub fn laplace(pool: &ConductancePool, ell: f64) -> LaplaceEval {
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for &c in pool.sorted() {
        let h = 0.5 * c;
        let e = (-ell * h).exp();
        s0 += e;
        s1 += h * e;
        s2 += h * h * e;
    }
    let n = pool.len() as f64;
    LaplaceEval { ell, phi: s0 / n, dphi: -s1 / n, ddphi: s2 / n }
}

/// Fraction of samples ≥ t.
pub fn cdf_tail(pool: &ConductancePool, t: f64) -> f64 {
    let below = pool.sorted().partition_point(|&x| x < t);
    (pool.len() - below) as f64 / pool.len() as f64
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ShapeFit {
    pub d: f64,
    pub sup_err: f64,
    /// Largest binomial standard error of the empirical tail on the grid.
    pub binomial_se: f64,
}

/// Least-squares fit of P(C ≥ t) ≈ D/t + 1 − D on 50 points of [1, 2].
pub fn fit_shape_on_12(pool: &ConductancePool) -> ShapeFit {
    let grid: Vec<f64> = (0..50).map(|i| 1.0 + i as f64 / 49.0).collect();
    let tails: Vec<f64> = grid.iter().map(|&t| cdf_tail(pool, t)).collect();
    let (mut num, mut den) = (0.0, 0.0);
    for (&t, &f) in grid.iter().zip(&tails) {
        let x = 1.0 / t - 1.0;
        num += (f - 1.0) * x;
        den += x * x;
    }
    let d = num / den;
    let mut sup_err = 0.0f64;
    let mut binomial_se = 0.0f64;
    let n = pool.len() as f64;
    for (&t, &f) in grid.iter().zip(&tails) {
        sup_err = sup_err.max((f - (d / t + 1.0 - d)).abs());
        binomial_se = binomial_se.max((f * (1.0 - f) / n).sqrt());
    }
    ShapeFit { d, sup_err, binomial_se }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn opts(p: usize, seed: u64) -> SolveOptions {
        SolveOptions { pool_size: p, seed, ..Default::default() }
    }

    #[test]
    fn g_map_examples() {
        assert!((g_map(0.5, 2, &[1.0, 1.0]).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!((g_map(0.0, 3, &[1.0, 2.0, 3.0]).unwrap() - 6.0).abs() < 1e-12);
        assert!((g_map(1.0 - 1e-12, 3, &[1.0, 2.0, 3.0]).unwrap() - 1.0).abs() < 1e-10);
        assert!(g_map(0.5, 1, &[1.0]).is_err());
        assert!(g_map(0.5, 3, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn wasserstein_examples() {
        let a = ConductancePool::ones(2.0, 100).unwrap();
        let b = ConductancePool::constant(2.0, 100, 2.0).unwrap();
        assert_eq!(wasserstein1(&a, &a).unwrap(), 0.0);
        assert_eq!(wasserstein1(&a, &b).unwrap(), 1.0);
        let c = ConductancePool::ones(2.0, 99).unwrap();
        assert!(wasserstein1(&a, &c).is_err());
    }

    #[test]
    fn contraction_constant_values() {
        let c2 = contraction_constant(2.0).unwrap();
        assert!((c2 - (2.0 - 2.0 * 2f64.ln())).abs() < 1e-14);
        for &a in &[1.05, 1.2, 1.5, 1.8, 1.99] {
            let c = contraction_constant(a).unwrap();
            assert!(c > 0.0 && c < 1.0, "{a}: {c}");
        }
    }

    #[test]
    fn contraction_constant_matches_brute_force() {
        // independent oracle: pmf by the recursion, summed far out, plus an
        // integral bound for what is left
        let alpha = 1.5;
        let mut p = alpha / 2.0;
        let mut acc = 0.0;
        for k in 2..5_000_000u64 {
            let kf = k as f64;
            acc += p * (kf - 1.0 - kf * kf.ln()) / ((kf - 1.0) * (kf - 1.0));
            p *= (kf - alpha) / (kf + 1.0);
        }
        let c = contraction_constant(alpha).unwrap();
        assert!((c - (1.0 + acc)).abs() < 1e-9, "{c} vs {}", 1.0 + acc);
    }

    #[test]
    fn one_step_from_ones_matches_quadrature() {
        // E (U + (1−U)/2)⁻¹ = 2 ln 2
        let pool = ConductancePool::ones(2.0, 200_000).unwrap();
        let next = phi_step(&pool, StepStreams { seed: 5, round: 0 }).unwrap();
        let target = 2.0 * 2f64.ln();
        let se = next.moment_se(1);
        assert!((next.mean() - target).abs() < 4.0 * se, "{} vs {target}", next.mean());
        assert!(next.min() >= 1.0 && next.max() <= 2.0);
        assert_eq!(next.iterations, 1);
    }

    #[test]
    fn step_from_huge_pool_gives_inverse_uniform() {
        let pool = ConductancePool::constant(1.5, 50_000, 1e12).unwrap();
        let next = phi_step(&pool, StepStreams { seed: 9, round: 0 }).unwrap();
        // P(1/U ≥ t) = 1/t
        for &t in &[1.5, 2.0, 4.0, 10.0] {
            let f = cdf_tail(&next, t);
            let se = (1.0 / t * (1.0 - 1.0 / t) / 50_000.0).sqrt();
            assert!((f - 1.0 / t).abs() < 4.0 * se, "t={t}: {f}");
        }
    }

    #[test]
    fn bracketing_under_shared_streams() {
        let mut lo = ConductancePool::ones(1.5, 5000).unwrap();
        let mut hi = ConductancePool::constant(1.5, 5000, 50.0).unwrap();
        for round in 0..15 {
            let s = StepStreams { seed: 3, round };
            lo = phi_step(&lo, s).unwrap();
            hi = phi_step(&hi, s).unwrap();
            for (a, b) in lo.sorted().iter().zip(hi.sorted()) {
                assert!(a <= b);
            }
        }
    }

    #[test]
    fn contraction_on_paired_runs() {
        let alpha = 2.0;
        let c = contraction_constant(alpha).unwrap();
        let a = ConductancePool::ones(alpha, 20_000).unwrap();
        let b = ConductancePool::constant(alpha, 20_000, 3.0).unwrap();
        let before = wasserstein1(&a, &b).unwrap();
        let s = StepStreams { seed: 21, round: 0 };
        let after = wasserstein1(&phi_step(&a, s).unwrap(), &phi_step(&b, s).unwrap()).unwrap();
        assert!(after <= c * before + 0.02, "{after} vs {}", c * before);
    }

    #[test]
    fn solver_converges_and_is_reproducible() {
        let a = solve_gamma(2.0, &opts(20_000, 4)).unwrap();
        assert_eq!(a.stop_rule, StopRule::Converged);
        assert!(a.min() >= 1.0);
        let b = solve_gamma(2.0, &opts(20_000, 4)).unwrap();
        assert_eq!(a.sorted(), b.sorted());
        let ratio = a.moment(2) / a.mean();
        assert!((ratio - 2.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let o = SolveOptions { pool_size: 2000, max_iter: 2, tol: 1e-12, seed: 1, noise: Noise::Fresh };
        let p = solve_gamma(1.5, &o).unwrap();
        assert_eq!(p.stop_rule, StopRule::MaxIter);
        assert_eq!(p.iterations, 2);
    }

    #[test]
    fn laplace_basics() {
        let pool = solve_gamma(1.5, &opts(5000, 2)).unwrap();
        let l0 = laplace(&pool, 0.0);
        assert_eq!(l0.phi, 1.0);
        assert!((l0.dphi + pool.mean() / 2.0).abs() < 1e-12);
        let mut prev = l0;
        for i in 1..40 {
            let ell = i as f64 * 0.25;
            let l = laplace(&pool, ell);
            assert!(l.phi <= (-ell / 2.0).exp() + 1e-15);
            assert!(l.phi < prev.phi && l.dphi < 0.0 && l.ddphi > 0.0);
            // convexity: slope increases
            assert!(l.dphi > prev.dphi);
            prev = l;
        }
    }

    #[test]
    fn shape_fit_on_ones_step() {
        // one step from all ones at α=2 has tail exactly 2/t − 1 on [1,2]
        let pool = ConductancePool::ones(2.0, 100_000).unwrap();
        let next = phi_step(&pool, StepStreams { seed: 8, round: 0 }).unwrap();
        let fit = fit_shape_on_12(&next);
        assert!((fit.d - 2.0).abs() < 0.01, "{}", fit.d);
        assert!(fit.sup_err < 4.0 * fit.binomial_se);
        assert_eq!(cdf_tail(&next, 1.0), 1.0);
    }

    #[test]
    fn pool_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let pool = solve_gamma(1.8, &opts(3000, 6)).unwrap();
        let bin = dir.path().join("p.bin");
        pool.save_bin(&bin).unwrap();
        let back = ConductancePool::load(&bin).unwrap();
        assert_eq!(back.sorted(), pool.sorted());
        assert_eq!(back.alpha, 1.8);
        assert_eq!(back.iterations, pool.iterations);
        let csv = dir.path().join("p.csv");
        pool.save_csv(&csv).unwrap();
        let back = ConductancePool::load(&csv).unwrap();
        assert_eq!(back.sorted(), pool.sorted());
    }

    #[test]
    fn rejects_bad_samples() {
        assert!(ConductancePool::from_samples(1.5, vec![0.5], 0, 0).is_err());
        assert!(ConductancePool::from_samples(1.5, vec![f64::NAN], 0, 0).is_err());
        assert!(ConductancePool::from_samples(2.5, vec![1.0], 0, 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn g_map_range(u in 0.0f64..1.0, xs in proptest::collection::vec(1.0f64..100.0, 2..10)) {
            let g = g_map(u, xs.len(), &xs).unwrap();
            let s: f64 = xs.iter().sum();
            prop_assert!(g >= 1.0 - 1e-12 && g <= s * (1.0 + 1e-12));
        }

        #[test]
        fn d1_is_a_metric(xs in proptest::collection::vec(1.0f64..10.0, 8), ys in proptest::collection::vec(1.0f64..10.0, 8), zs in proptest::collection::vec(1.0f64..10.0, 8)) {
            let a = ConductancePool::from_samples(2.0, xs, 0, 0).unwrap();
            let b = ConductancePool::from_samples(2.0, ys, 0, 0).unwrap();
            let c = ConductancePool::from_samples(2.0, zs, 0, 0).unwrap();
            let ab = wasserstein1(&a, &b).unwrap();
            prop_assert!((ab - wasserstein1(&b, &a).unwrap()).abs() < 1e-12);
            prop_assert!(ab <= wasserstein1(&a, &c).unwrap() + wasserstein1(&c, &b).unwrap() + 1e-12);
        }
    }
}
