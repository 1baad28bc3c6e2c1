//! The acceptance battery: every numbered criterion as a list of checks,
//! at full or reduced scale.
//!
//! Checks are either hard (exact statements that must hold for any seed)
//! or statistical. Reports are deterministic given the configuration;
//! wall-clock timings are kept apart in [`Battery::timings`].

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::analysis::{
    beta_formula1, beta_formula2, beta_value, c0_constant, c1_identity, conductance_mean_scan_pools, conductance_moment_scan,
    dimension_bound, discrete_dimension_scan, kappa_consistency, level_size_check, moment_identity, moment_spread, ode_residual,
    speed_monotonicity_pools, EstimatorReport, KappaTable, KappaWeight, SCHEMA_VERSION,
};
use crate::ctgw::{level_mean_check, martingale_check, DEFAULT_EVENT_CAP, DEFAULT_NODE_CAP as CTGW_NODE_CAP};
use crate::discrete::{reduce, DiscreteTree};
use crate::error::Result;
use crate::offspring::{coupled_sample, shared_theta, theta_gf_closed, theta_pmf, OffspringDist};
use crate::par;
use crate::rde::{fit_shape_on_12, solve_gamma, ConductancePool, SolveOptions, StopRule};
use crate::streams::{child_seed, substream, Tag};

pub const DEFAULT_GRID: [f64; 4] = [1.2, 1.5, 1.8, 2.0];
pub const CRITERIA: u8 = 13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Full,
    Quick,
}

/// Sample sizes for one scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub pool_size: usize,
    pub theta_samples: usize,
    pub beta_samples: usize,
    pub kappa_table: usize,
    pub kappa_samples: usize,
    pub discrete_trees: usize,
    pub walks: usize,
    pub level_replicas: usize,
    pub ctgw_replicas: usize,
    /// Martingale replicas at α = 1.5 and α = 1.8.
    pub martingale_replicas: [usize; 2],
    pub moment_replicas: usize,
    pub moment_levels: Vec<u32>,
    pub dimension_replicas: usize,
    pub dimension_levels: Vec<u32>,
}

impl ScaleParams {
    pub fn for_scale(scale: Scale) -> Self {
        match scale {
            Scale::Full => ScaleParams {
                pool_size: 200_000,
                theta_samples: 1_000_000,
                beta_samples: 1_000_000,
                kappa_table: 400_000,
                kappa_samples: 1_000_000,
                discrete_trees: 500,
                walks: 100_000,
                level_replicas: 20_000,
                ctgw_replicas: 20_000,
                martingale_replicas: [1000, 5000],
                moment_replicas: 2000,
                moment_levels: vec![16, 32, 64, 128],
                dimension_replicas: 20_000,
                dimension_levels: vec![64, 128, 256],
            },
            Scale::Quick => ScaleParams {
                pool_size: 20_000,
                theta_samples: 100_000,
                beta_samples: 100_000,
                kappa_table: 40_000,
                kappa_samples: 100_000,
                discrete_trees: 60,
                walks: 10_000,
                level_replicas: 2000,
                ctgw_replicas: 2000,
                martingale_replicas: [100, 500],
                moment_replicas: 300,
                moment_levels: vec![16, 32, 64],
                dimension_replicas: 300,
                dimension_levels: vec![32, 64, 128],
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatteryConfig {
    pub scale: Scale,
    pub seed: u64,
    /// α values for the per-α criteria (1–4, 6).
    pub alphas: Vec<f64>,
    /// Sorted α grid for the cross-α criteria (12, 13).
    pub grid: Vec<f64>,
    pub params: ScaleParams,
}

impl BatteryConfig {
    pub fn new(scale: Scale, seed: u64) -> Self {
        BatteryConfig { scale, seed, alphas: DEFAULT_GRID.to_vec(), grid: DEFAULT_GRID.to_vec(), params: ScaleParams::for_scale(scale) }
    }

    /// Restrict the per-α criteria to one α; it also joins the cross-α grid.
    pub fn focus(mut self, alpha: f64) -> Self {
        self.alphas = vec![alpha];
        if !self.grid.contains(&alpha) {
            self.grid.push(alpha);
            self.grid.sort_by(f64::total_cmp);
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub hard: bool,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: String,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl CriterionResult {
    fn new(id: u8, title: &str, checks: Vec<Check>) -> Self {
        CriterionResult { id, title: title.into(), pass: checks.iter().all(|c| c.pass), checks }
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// One summary line, `PASS`/`FAIL` first.
    pub fn line(&self) -> String {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        let n_ok = self.checks.iter().filter(|c| c.pass).count();
        let mut s = format!("{tag} criterion {:>2} {}: {n_ok}/{} checks", self.id, self.title, self.checks.len());
        let failed: Vec<&str> = self.failed().map(|c| c.label.as_str()).collect();
        if !failed.is_empty() {
            s.push_str(&format!(" (failed: {})", failed.join("; ")));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatteryReport {
    pub schema_version: u32,
    pub config: BatteryConfig,
    pub criteria: Vec<CriterionResult>,
    pub pass: bool,
    pub hard_pass: bool,
}

fn check(label: impl Into<String>, hard: bool, pass: bool, detail: impl Into<String>) -> Check {
    Check { label: label.into(), hard, pass, detail: detail.into() }
}

/// Runs criteria one at a time, sharing pools and κ tables between them.
pub struct Battery {
    pub config: BatteryConfig,
    pools: BTreeMap<u64, ConductancePool>,
    tables: BTreeMap<u64, KappaTable>,
    betas: BTreeMap<u64, Vec<EstimatorReport>>,
    /// Wall-clock seconds per labelled step. Not part of the report.
    pub timings: Vec<(String, f64)>,
}

impl Battery {
    pub fn new(config: BatteryConfig) -> Self {
        Battery { config, pools: BTreeMap::new(), tables: BTreeMap::new(), betas: BTreeMap::new(), timings: Vec::new() }
    }

    fn seed(&self, id: u8, k: u64) -> u64 {
        child_seed(self.config.seed, Tag::Scan, 1000 * id as u64 + k)
    }

    /// Every criterion in order; `on_done` sees each result as it lands.
    pub fn run<F: FnMut(&CriterionResult, Duration)>(&mut self, mut on_done: F) -> Result<BatteryReport> {
        let mut criteria = Vec::new();
        for id in 1..=CRITERIA {
            let t = Instant::now();
            let c = self.criterion(id)?;
            let dt = t.elapsed();
            self.timings.push((format!("criterion {id}"), dt.as_secs_f64()));
            on_done(&c, dt);
            criteria.push(c);
        }
        let pass = criteria.iter().all(|c| c.pass);
        let hard_pass = criteria.iter().flat_map(|c| &c.checks).all(|c| c.pass || !c.hard);
        Ok(BatteryReport { schema_version: SCHEMA_VERSION, config: self.config.clone(), criteria, pass, hard_pass })
    }

    pub fn criterion(&mut self, id: u8) -> Result<CriterionResult> {
        match id {
            1 => self.offspring_exactness(),
            2 => self.fixed_point(),
            3 => self.dimension_constant(),
            4 => self.ode_residuals(),
            5 => self.c1_identity(),
            6 => self.cdf_shape(),
            7 => self.kappa_consistency(),
            8 => self.ctgw(),
            9 => self.discrete_exactness(),
            10 => self.conductance_moments(),
            11 => self.dimension_scan(),
            12 => self.coupling(),
            13 => self.speed(),
            _ => Err(crate::Error::Param(format!("no criterion {id}"))),
        }
    }

    /// Pool at `alpha`, solved once with the battery seed so that all pools
    /// share their streams.
    pub fn pool(&mut self, alpha: f64) -> Result<&ConductancePool> {
        let key = alpha.to_bits();
        if !self.pools.contains_key(&key) {
            let opts = SolveOptions { pool_size: self.config.params.pool_size, seed: self.config.seed, ..Default::default() };
            let t = Instant::now();
            let pool = solve_gamma(alpha, &opts)?;
            self.timings.push((format!("solve alpha={alpha}"), t.elapsed().as_secs_f64()));
            self.pools.insert(key, pool);
        }
        Ok(&self.pools[&key])
    }

    fn table(&mut self, alpha: f64) -> Result<&KappaTable> {
        let key = alpha.to_bits();
        if !self.tables.contains_key(&key) {
            let seed = self.seed(3, 10);
            let size = self.config.params.kappa_table;
            let table = KappaTable::build(self.pool(alpha)?, size, seed)?;
            self.tables.insert(key, table);
        }
        Ok(&self.tables[&key])
    }

    fn offspring_exactness(&mut self) -> Result<CriterionResult> {
        let samples = self.config.params.theta_samples;
        let mut checks = Vec::new();
        for &alpha in &self.config.alphas.clone() {
            let theta = shared_theta(alpha)?;
            let seed = self.seed(1, alpha.to_bits() % 1000);
            let counts = par::map_chunks(samples, 1 << 16, |range| {
                let mut c = [0u64; 21];
                let mut rng = substream(seed, Tag::Offspring, range.start as u64, 0);
                for _ in range {
                    let k = theta.sample(&mut rng);
                    if k <= 20 {
                        c[k as usize] += 1;
                    }
                }
                c
            });
            let mut worst = (0u64, 0.0f64);
            for k in 0..=20u64 {
                let n: u64 = counts.iter().map(|c| c[k as usize]).sum();
                let p = theta_pmf(alpha, k);
                let sigma = (p * (1.0 - p) / samples as f64).sqrt();
                let diff = (n as f64 / samples as f64 - p).abs();
                // degenerate cells (p = 0 or 1 up to rounding) must match exactly
                let z = if diff <= 1e-12 { 0.0 } else if sigma > 0.0 { diff / sigma } else { f64::INFINITY };
                if z > worst.1 {
                    worst = (k, z);
                }
            }
            checks.push(check(
                format!("pmf k<=20 within 4 sigma, alpha={alpha}"),
                false,
                worst.1 <= 4.0,
                format!("largest |z| = {:.3} at k = {}", worst.1, worst.0),
            ));
            let mut worst_gf = 0.0f64;
            for i in 0..=100 {
                let r = i as f64 / 100.0;
                let exact = theta_gf_closed(alpha, r);
                let rel = (theta.gf(r) - exact).abs() / exact.abs().max(f64::MIN_POSITIVE);
                worst_gf = worst_gf.max(rel);
            }
            checks.push(check(
                format!("generating function to 1e-10, alpha={alpha}"),
                true,
                worst_gf < 1e-10,
                format!("largest relative error {worst_gf:.3e} on r in [0, 1]"),
            ));
        }
        Ok(CriterionResult::new(1, "offspring exactness", checks))
    }

    fn fixed_point(&mut self) -> Result<CriterionResult> {
        let mut checks = Vec::new();
        for &alpha in &self.config.alphas.clone() {
            let pool = self.pool(alpha)?;
            let d1 = pool.last_d1.unwrap_or(f64::INFINITY);
            checks.push(check(
                format!("converged within 300 iterations, alpha={alpha}"),
                true,
                pool.stop_rule == StopRule::Converged && d1 < 1e-3 && pool.iterations <= 300,
                format!("{} iterations, last d1 = {d1:.3e}", pool.iterations),
            ));
            checks.push(check(format!("support min >= 1, alpha={alpha}"), true, pool.min() >= 1.0, format!("min = {:.6}", pool.min())));
            let m = moment_identity(pool);
            checks.push(check(
                format!("moment identity within 2%, alpha={alpha}"),
                false,
                m.rel_err < 0.02,
                format!("E[C^2]/E[C] = {:.4} (se {:.4}) vs {:.4}, relative error {:.4}", m.ratio, m.ratio_se, m.target, m.rel_err),
            ));
        }
        Ok(CriterionResult::new(2, "fixed point", checks))
    }

    fn betas(&mut self, alpha: f64) -> Result<Vec<EstimatorReport>> {
        let key = alpha.to_bits();
        if let Some(b) = self.betas.get(&key) {
            return Ok(b.clone());
        }
        let n = self.config.params.beta_samples;
        let (s1, s2, s3) = (self.seed(3, 1), self.seed(3, 2), self.seed(3, 3));
        self.table(alpha)?;
        let pool = &self.pools[&key];
        let table = &self.tables[&key];
        let out = vec![
            beta_value(pool, s1),
            beta_formula1(pool, n, s2)?,
            beta_formula2(pool, table, KappaWeight::Table, n, s3)?,
        ];
        self.betas.insert(key, out.clone());
        Ok(out)
    }

    fn dimension_constant(&mut self) -> Result<CriterionResult> {
        let mut checks = Vec::new();
        let mut all = Vec::new();
        for &alpha in &self.config.alphas.clone() {
            let b = self.betas(alpha)?;
            let overlap = b[0].overlaps(&b[1]) && b[0].overlaps(&b[2]) && b[1].overlaps(&b[2]);
            let desc: Vec<String> = b.iter().map(|r| format!("{} {:.4} [{:.4}, {:.4}]", r.name, r.point, r.ci_low, r.ci_high)).collect();
            checks.push(check(format!("three estimators overlap, alpha={alpha}"), false, overlap, desc.join(", ")));
            let upper = 1.0 / (alpha - 1.0);
            let inside = b.iter().all(|r| r.point > 0.0 && r.point < upper);
            checks.push(check(format!("0 < beta < 1/(alpha-1), alpha={alpha}"), true, inside, format!("upper bound {upper:.4}")));
            all.extend(b);
        }
        let bound = dimension_bound(&all);
        let worst = all.iter().map(|r| r.point).fold(f64::MIN, f64::max);
        checks.push(check(
            "beta below (2 C0^2 - 1)/2",
            true,
            bound.all_below,
            format!("largest estimate {worst:.4}, bound {:.4} with C0 = {:.12}", bound.bound, bound.c0),
        ));
        Ok(CriterionResult::new(3, "dimension constant", checks))
    }

    fn ode_residuals(&mut self) -> Result<CriterionResult> {
        let mut checks = Vec::new();
        for &alpha in &self.config.alphas.clone() {
            let pool = self.pool(alpha)?;
            for r in ode_residual(pool, &[0.25, 1.0, 4.0]) {
                checks.push(check(
                    format!("residual within 3 se, alpha={alpha}, ell={}", r.ell),
                    false,
                    r.residual.abs() < 3.0 * r.std_error,
                    format!("residual {:.3e}, se {:.3e}, z {:.3}", r.residual, r.std_error, r.z),
                ));
            }
            let ones = ConductancePool::ones(alpha, self.config.params.pool_size)?;
            let r = ode_residual(&ones, &[1.0])[0];
            checks.push(check(
                format!("all-ones control rejected by > 10 se, alpha={alpha}"),
                true,
                r.z.abs() > 10.0,
                format!("residual {:.3e}, z {:.3e}", r.residual, r.z),
            ));
        }
        Ok(CriterionResult::new(4, "ODE residuals", checks))
    }

    fn c1_identity(&mut self) -> Result<CriterionResult> {
        let mut checks = Vec::new();
        for alpha in [1.5f64, 2.0] {
            let seed = self.seed(5, alpha.to_bits() % 1000);
            let c = c1_identity(self.pool(alpha)?, seed);
            checks.push(check(
                format!("quadrature and pair average agree, alpha={alpha}"),
                false,
                c.agrees(0.02) && c.warnings.is_empty(),
                format!("lhs {:.5} (se {:.2e}), rhs {:.5} (se {:.2e}), z {:.3}, relative {:.2e}", c.lhs, c.lhs_se, c.rhs, c.rhs_se, c.z, c.rel_diff),
            ));
        }
        Ok(CriterionResult::new(5, "C1 identity", checks))
    }

    fn cdf_shape(&mut self) -> Result<CriterionResult> {
        let mut checks = Vec::new();
        for &alpha in &self.config.alphas.clone() {
            let f = fit_shape_on_12(self.pool(alpha)?);
            checks.push(check(format!("fitted D in [1, 2], alpha={alpha}"), false, (1.0..=2.0).contains(&f.d), format!("D = {:.4}", f.d)));
            checks.push(check(
                format!("sup residual below 3 binomial se, alpha={alpha}"),
                false,
                f.sup_err < 3.0 * f.binomial_se,
                format!("sup {:.3e}, 3 se {:.3e}", f.sup_err, 3.0 * f.binomial_se),
            ));
        }
        Ok(CriterionResult::new(6, "CDF shape", checks))
    }

    fn kappa_consistency(&mut self) -> Result<CriterionResult> {
        let mut checks = Vec::new();
        let n = self.config.params.kappa_samples;
        for alpha in [1.5f64, 2.0] {
            self.table(alpha)?;
            let key = alpha.to_bits();
            for (j, r) in [1.0, 2.0, 5.0].into_iter().enumerate() {
                let seed = self.seed(7, 10 * (key % 97) + j as u64);
                let k = kappa_consistency(&self.pools[&key], r, n, &self.tables[&key], seed)?;
                checks.push(check(
                    format!("direct and nested sides agree, alpha={alpha}, r={r}"),
                    false,
                    k.agree_95,
                    format!("direct {:.5} (se {:.2e}), nested {:.5} (se {:.2e}), z {:.3}", k.direct, k.direct_se, k.nested, k.nested_se, k.z),
                ));
            }
        }
        Ok(CriterionResult::new(7, "kappa consistency", checks))
    }

    fn ctgw(&mut self) -> Result<CriterionResult> {
        let p = self.config.params.clone();
        let mut checks = Vec::new();
        for alpha in [1.5f64, 1.8, 2.0] {
            for r in [1.0, 2.0, 4.0] {
                let seed = self.seed(8, (alpha * 10.0) as u64 * 10 + r as u64);
                let m = level_mean_check(alpha, r, p.ctgw_replicas, CTGW_NODE_CAP, seed)?;
                checks.push(check(
                    format!("normalized level mean is 1, alpha={alpha}, r={r}"),
                    false,
                    m.z.abs() <= 3.0,
                    format!("{:.4} (se {:.4}), z {:.3}, {} of {} trees dropped at the node cap", m.normalized_mean, m.std_error, m.z, m.discards, m.replicas),
                ));
            }
        }
        for (alpha, reps) in [(1.5, p.martingale_replicas[0]), (1.8, p.martingale_replicas[1])] {
            let seed = self.seed(8, 500 + (alpha * 10.0) as u64);
            let m = martingale_check(alpha, 8.0, &[0.5, 1.0, 2.0], reps, DEFAULT_EVENT_CAP, seed)?;
            for c in &m.laplace {
                checks.push(check(
                    format!("martingale Laplace transform, alpha={alpha}, u={}", c.u),
                    false,
                    c.z_score.abs() <= 3.0,
                    format!("{:.4} (se {:.4}) vs {:.4}, z {:.3}, {} dropped", c.empirical, c.std_error, c.closed_form, c.z_score, m.discards),
                ));
            }
        }
        Ok(CriterionResult::new(8, "CTGW", checks))
    }

    fn discrete_exactness(&mut self) -> Result<CriterionResult> {
        let p = self.config.params.clone();
        let alpha = 1.5;
        let rho = OffspringDist::rho_canonical(alpha)?;
        let seed = self.seed(9, 1);
        let walks = p.walks;
        // per tree: (leaves checked, largest |z|)
        let per_tree = par::map_indexed(p.discrete_trees, |i| -> Result<(usize, f64)> {
            let n = 1 + (i % 6) as u32;
            let mut rng = substream(seed, Tag::Discrete, n as u64, i as u64);
            let c = crate::discrete::sample_conditioned(&rho, n, crate::discrete::DEFAULT_NODE_CAP, crate::discrete::DEFAULT_RETRY_BUDGET, &mut rng)?;
            let t = reduce(&c.tree, n)?;
            let mut hits: BTreeMap<usize, u64> = BTreeMap::new();
            let mut wrng = substream(seed, Tag::Walk, i as u64, 0);
            for _ in 0..walks {
                *hits.entry(t.srw_hit(&mut wrng)?).or_default() += 1;
            }
            let mut worst = 0.0f64;
            let mut leaves = 0;
            for v in t.leaves() {
                leaves += 1;
                let mu = t.nodes[v].log_mu.exp();
                let f = *hits.get(&v).unwrap_or(&0) as f64 / walks as f64;
                let sigma = (mu * (1.0 - mu) / walks as f64).sqrt();
                let z = if sigma > 0.0 { (f - mu).abs() / sigma } else if (f - mu).abs() < 1e-12 { 0.0 } else { f64::INFINITY };
                worst = worst.max(z);
            }
            Ok((leaves, worst))
        });
        let mut leaves = 0;
        let mut worst = 0.0f64;
        let mut over = 0;
        for r in per_tree {
            let (l, w) = r?;
            leaves += l;
            worst = worst.max(w);
            if w > 4.0 {
                over += 1;
            }
        }
        let mut checks = vec![check(
            "harmonic measure matches walk frequencies within 4 sigma",
            false,
            worst <= 4.0,
            format!("{} trees, {leaves} leaves, {walks} walks each; largest |z| {worst:.3}; {over} trees above 4", p.discrete_trees),
        )];
        for (k, a) in [1.5, 2.0].into_iter().enumerate() {
            let l = level_size_check(a, 6, p.level_replicas, self.seed(9, 10 + k as u64))?;
            checks.push(check(
                format!("q_n E[#T*_n] = 1, alpha={a}, n=6"),
                false,
                l.z.abs() <= 3.0,
                format!("{:.4} (se {:.4}), z {:.3}, q_6 = {:.6}", l.scaled_mean, l.scaled_se, l.z, l.q_n),
            ));
        }
        let mut worst_closed = 0.0f64;
        for n in 1..=20u32 {
            let path = reduce(&DiscreteTree::unary_path(n), n)?.conductance_n();
            worst_closed = worst_closed.max((path - 1.0 / (n as f64 + 1.0)).abs());
            if n <= 16 {
                let bin = reduce(&DiscreteTree::full_binary(n), n)?.conductance_n();
                worst_closed = worst_closed.max((bin - 1.0 / (2.0 - 2f64.powi(-(n as i32)))).abs());
            }
        }
        checks.push(check(
            "unary path and full binary conductances match closed forms",
            true,
            worst_closed <= 4.0 * f64::EPSILON,
            format!("largest absolute error {worst_closed:.3e}"),
        ));
        Ok(CriterionResult::new(9, "discrete exactness", checks))
    }

    fn conductance_moments(&mut self) -> Result<CriterionResult> {
        let p = self.config.params.clone();
        let mut checks = Vec::new();
        for alpha in [1.5f64, 2.0] {
            let rs = [1.0, (alpha + 1.0) / 2.0];
            let scan = conductance_moment_scan(alpha, &p.moment_levels, &rs, p.moment_replicas, self.seed(10, (alpha * 10.0) as u64))?;
            for r in rs {
                let spread = moment_spread(&scan, r);
                let key = format!("m_{r}");
                let vals: Vec<String> = scan.rows.iter().map(|row| format!("{:.4}", row.extra[&key])).collect();
                let mut detail = format!("n = {:?}: {}; max/min {spread:.4}", p.moment_levels, vals.join(", "));
                for w in &scan.warnings {
                    detail.push_str("; ");
                    detail.push_str(w);
                }
                checks.push(check(format!("scaled moment varies by < 2x, alpha={alpha}, r={r}"), false, spread < 2.0, detail));
            }
        }
        Ok(CriterionResult::new(10, "conductance moments", checks))
    }

    fn dimension_scan(&mut self) -> Result<CriterionResult> {
        let p = self.config.params.clone();
        let target = self.betas(2.0)?[0].point;
        let scan = discrete_dimension_scan(2.0, &p.dimension_levels, p.dimension_replicas, self.seed(11, 1))?;
        let (ok, gap) = scan.approaches(target, 0.15);
        let ratios: Vec<String> = scan.ratios.iter().map(|(n, r, se)| format!("n={n}: {r:.4} (se {se:.4})")).collect();
        let checks = vec![check(
            "entropy ratio moves toward beta_2 and ends within 0.15",
            false,
            ok,
            format!("{}; target {target:.4}, last gap {gap:.4}", ratios.join(", ")),
        )];
        Ok(CriterionResult::new(11, "dimension scan", checks))
    }

    fn grid_pools(&mut self) -> Result<Vec<ConductancePool>> {
        self.config.grid.clone().into_iter().map(|a| self.pool(a).cloned()).collect()
    }

    fn coupling(&mut self) -> Result<CriterionResult> {
        let alphas: Vec<f64> = (0..=18).map(|i| 1.1 + 0.05 * i as f64).collect();
        let mut violations = 0;
        for i in 0..10_000 {
            let u = (i as f64 + 0.5) / 10_000.0;
            let ks = alphas.iter().map(|&a| coupled_sample(u, a)).collect::<Result<Vec<u64>>>()?;
            violations += ks.windows(2).filter(|w| w[1] > w[0]).count();
        }
        let mut checks = vec![check(
            "coupled samples non-increasing in alpha on a 10^4-point grid",
            true,
            violations == 0,
            format!("{violations} violations over {} alpha steps", alphas.len() - 1),
        )];
        let pools = self.grid_pools()?;
        let m = conductance_mean_scan_pools(&pools);
        let desc: Vec<String> = m.means.iter().map(|(a, i)| format!("{a}: {:.4} [{:.4}, {:.4}]", 0.5 * (i.low + i.high), i.low, i.high)).collect();
        checks.push(check("means strictly decreasing beyond CI overlap", false, m.strictly_decreasing, desc.join(", ")));
        checks.push(check("all means at most C0", true, m.all_below_c0, format!("C0 = {:.12}", c0_constant())));
        Ok(CriterionResult::new(12, "coupling and monotonicity", checks))
    }

    fn speed(&mut self) -> Result<CriterionResult> {
        let pools = self.grid_pools()?;
        let s = speed_monotonicity_pools(&pools, self.seed(13, 1));
        let speeds: Vec<String> = s.speeds.iter().map(|r| format!("{}: {:.4} [{:.4}, {:.4}]", r.alpha, r.point, r.ci_low, r.ci_high)).collect();
        let steps: Vec<String> = s.steps.iter().map(|(a, i)| format!("to {a}: [{:.3e}, {:.3e}]", i.low, i.high)).collect();
        let checks = vec![
            check("speed below 1/2 at every alpha", false, s.all_below_half, speeds.join(", ")),
            check("denominator increasing beyond CI overlap", false, s.denominator_increasing, steps.join(", ")),
        ];
        Ok(CriterionResult::new(13, "speed", checks))
    }
}

/// Run the whole battery.
pub fn run(config: BatteryConfig) -> Result<BatteryReport> {
    Battery::new(config).run(|_, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hard_criteria_pass_at_tiny_scale() {
        let mut cfg = BatteryConfig::new(Scale::Quick, 3).focus(2.0);
        cfg.grid = vec![1.5, 2.0];
        cfg.params.theta_samples = 20_000;
        let mut b = Battery::new(cfg);
        for id in [1, 2, 4, 12] {
            let c = b.criterion(id).unwrap();
            assert!(c.checks.iter().all(|c| c.pass || !c.hard), "{c:?}");
            assert!(c.line().starts_with(if c.pass { "PASS" } else { "FAIL" }));
        }
    }

    #[test]
    fn unknown_criterion_is_an_error() {
        assert!(Battery::new(BatteryConfig::new(Scale::Quick, 1)).criterion(14).is_err());
    }
}
