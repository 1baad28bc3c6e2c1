//! Offspring laws: the stable family θ_α, its α → 1 limit, the size-biased
//! version and the canonical critical law ρ_α, plus the exact survival
//! recursion for ρ_α.
//!
//! Each built-in law has a survival function `S(k) = P(N ≥ k)` obeying
//! `S(k+1) = S(k)·(k − a)/k` from some `k0` on. The table of `S` is filled
//! lazily by that recursion up to a horizon; past the horizon the same
//! product is continued in closed form, so sampling is exact and no tail
//! mass is ever dropped.

use std::sync::{Arc, Mutex, OnceLock};

use rand::distributions::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_alpha, Error, Result};

/// Largest table index. Past it the survival function is continued
/// analytically.
const HORIZON: usize = 1 << 16;
/// Tables stop early once the remaining mass is this small.
const TAIL_EPS: f64 = 1e-15;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OffspringKind {
    Theta { alpha: f64 },
    Theta1,
    SizeBiasedTheta { alpha: f64 },
    RhoCanonical { alpha: f64 },
    Custom { pmf: Vec<f64> },
}

#[derive(Debug)]
struct Table {
    /// surv[k] = P(N ≥ k) for k = 0..surv.len()
    surv: Vec<f64>,
    /// true when the law is finitely supported inside the table
    closed: bool,
}

#[derive(Debug)]
pub struct OffspringDist {
    kind: OffspringKind,
    table: OnceLock<Table>,
}

impl Clone for OffspringDist {
    fn clone(&self) -> Self {
        OffspringDist { kind: self.kind.clone(), table: OnceLock::new() }
    }
}

/// Parameters of the tail recursion `S(k+1) = S(k)(k − a)/k` for `k ≥ k0`.
#[derive(Clone, Copy, Debug)]
struct Ratio {
    k0: usize,
    a: f64,
}

impl OffspringDist {
    pub fn theta(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self::from_kind(OffspringKind::Theta { alpha }))
    }

    pub fn theta1() -> Self {
        Self::from_kind(OffspringKind::Theta1)
    }

    pub fn size_biased_theta(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self::from_kind(OffspringKind::SizeBiasedTheta { alpha }))
    }

    pub fn rho_canonical(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self::from_kind(OffspringKind::RhoCanonical { alpha }))
    }

    /// A finitely supported critical law given by its pmf. The table must
    /// be a probability vector with mean 1.
    pub fn custom(pmf: Vec<f64>) -> Result<Self> {
        if pmf.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Param("pmf entries must be finite and non-negative".into()));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Param(format!("pmf sums to {total}, not 1")));
        }
        let mean: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        if (mean - 1.0).abs() > 1e-9 {
            return Err(Error::Param(format!("pmf has mean {mean}; a critical law needs mean 1")));
        }
        Ok(Self::from_kind(OffspringKind::Custom { pmf }))
    }

    pub fn from_kind(kind: OffspringKind) -> Self {
        OffspringDist { kind, table: OnceLock::new() }
    }

    pub fn kind(&self) -> &OffspringKind {
        &self.kind
    }

    pub fn alpha(&self) -> Option<f64> {
        match self.kind {
            OffspringKind::Theta { alpha }
            | OffspringKind::SizeBiasedTheta { alpha }
            | OffspringKind::RhoCanonical { alpha } => Some(alpha),
            OffspringKind::Theta1 => Some(1.0),
            OffspringKind::Custom { .. } => None,
        }
    }

    fn ratio(&self) -> Option<Ratio> {
        match self.kind {
            OffspringKind::Theta { alpha } | OffspringKind::RhoCanonical { alpha } => {
                Some(Ratio { k0: 2, a: alpha })
            }
            OffspringKind::Theta1 => Some(Ratio { k0: 2, a: 1.0 }),
            OffspringKind::SizeBiasedTheta { alpha } => Some(Ratio { k0: 1, a: alpha - 1.0 }),
            OffspringKind::Custom { .. } => None,
        }
    }

    fn head(&self) -> Vec<f64> {
        match &self.kind {
            OffspringKind::Theta { .. } | OffspringKind::Theta1 => vec![1.0, 1.0, 1.0],
            OffspringKind::SizeBiasedTheta { .. } => vec![1.0, 1.0],
            OffspringKind::RhoCanonical { alpha } => {
                let s = (alpha - 1.0) / alpha;
                vec![1.0, s, s]
            }
            OffspringKind::Custom { pmf } => {
                let mut surv = vec![0.0; pmf.len() + 1];
                for k in (0..pmf.len()).rev() {
                    surv[k] = surv[k + 1] + pmf[k];
                }
                surv[0] = 1.0;
                surv
            }
        }
    }

    fn table(&self) -> &Table {
        self.table.get_or_init(|| {
            let mut surv = self.head();
            let Some(Ratio { k0, a }) = self.ratio() else {
                return Table { surv, closed: true };
            };
            debug_assert_eq!(surv.len(), k0 + 1);
            let mut s = surv[k0];
            let mut k = k0;
            while k < HORIZON {
                s *= (k as f64 - a) / k as f64;
                surv.push(s);
                k += 1;
                if s == 0.0 {
                    return Table { surv, closed: true };
                }
                if s < TAIL_EPS {
                    break;
                }
            }
            Table { surv, closed: false }
        })
    }

    /// P(N ≥ k).
    pub fn survival(&self, k: u64) -> f64 {
        let t = self.table();
        if (k as usize) < t.surv.len() {
            return t.surv[k as usize];
        }
        if t.closed {
            return 0.0;
        }
        self.log_survival_beyond(k).exp()
    }

    /// ln P(N ≥ k) for k past the table.
    fn log_survival_beyond(&self, k: u64) -> f64 {
        let t = self.table();
        let ratio = self.ratio().expect("open tables come from ratio laws");
        let h = t.surv.len() - 1;
        let sh = t.surv[h];
        sh.ln() + log_gamma_ratio(k as f64, ratio.a) - log_gamma_ratio(h as f64, ratio.a)
    }

    pub fn pmf(&self, k: u64) -> f64 {
        let t = self.table();
        match self.ratio() {
            Some(Ratio { k0, a }) if k as usize >= k0 => self.survival(k) * a / k as f64,
            _ => {
                let k = k as usize;
                if k + 1 < t.surv.len() {
                    t.surv[k] - t.surv[k + 1]
                } else if k < t.surv.len() {
                    t.surv[k]
                } else {
                    0.0
                }
            }
        }
    }

    /// P(N ≤ k).
    pub fn cdf(&self, k: u64) -> f64 {
        1.0 - self.survival(k + 1)
    }

    /// Mean, or `None` when it is infinite.
    pub fn mean(&self) -> Option<f64> {
        match &self.kind {
            OffspringKind::Theta { alpha } => Some(alpha / (alpha - 1.0)),
            OffspringKind::Theta1 => None,
            OffspringKind::SizeBiasedTheta { alpha } => (*alpha == 2.0).then_some(1.0),
            OffspringKind::RhoCanonical { .. } => Some(1.0),
            OffspringKind::Custom { pmf } => {
                Some(pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum())
            }
        }
    }

    /// Inverse CDF: the least k with P(N ≤ k) ≥ u, for u in (0,1).
    pub fn quantile(&self, u: f64) -> u64 {
        self.upper_quantile(1.0 - u)
    }

    /// The least k with P(N > k) ≤ v. Same as `quantile(1 − v)` but keeps
    /// full precision for tiny tail masses.
    pub fn upper_quantile(&self, v: f64) -> u64 {
        let surv = &self.table().surv;
        // most mass sits on the first few values
        let quick = surv.len().min(8);
        for j in 1..quick {
            if surv[j] <= v {
                return (j - 1) as u64;
            }
        }
        let c = surv[1..].partition_point(|&s| s > v);
        if c < surv.len() - 1 {
            return c as u64;
        }
        if self.table().closed {
            // only reachable through rounding in a custom table
            return (surv.len() - 1) as u64;
        }
        self.quantile_beyond(v)
    }

    fn quantile_beyond(&self, v: f64) -> u64 {
        let lv = v.ln();
        let h = (self.table().surv.len() - 1) as u64;
        let ok = |k: u64| self.log_survival_beyond(k + 1) <= lv;
        let mut lo = h - 1;
        let mut hi = h.max(2);
        while !ok(hi) {
            lo = hi;
            hi = hi.saturating_mul(2);
            if hi == u64::MAX {
                return hi;
            }
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.quantile(rng.sample(Open01))
    }

    /// Generating function Σ pmf(k) r^k by direct summation.
    pub fn gf(&self, r: f64) -> f64 {
        assert!((0.0..=1.0).contains(&r), "gf needs r in [0,1]");
        let t = self.table();
        let mut acc = 0.0;
        let mut rk = 1.0;
        let n = t.surv.len();
        for k in 0..n {
            let p = self.pmf(k as u64);
            acc += p * rk;
            rk *= r;
            if rk == 0.0 {
                return acc;
            }
        }
        if t.closed {
            return acc;
        }
        let Ratio { a, .. } = self.ratio().unwrap();
        // here rk = r^n and s = S(n); the remainder is at most r^n S(n)
        let mut k = n as u64;
        let mut s = self.survival(k);
        if r == 1.0 {
            return acc + s;
        }
        const MAX_TERMS: u64 = 200_000_000;
        while rk * s > 1e-17 * acc {
            if k > MAX_TERMS {
                return acc + 0.5 * rk * s;
            }
            acc += s * a / k as f64 * rk;
            s *= (k as f64 - a) / k as f64;
            rk *= r;
            k += 1;
        }
        acc
    }
}

/// ln Γ(x − a) − ln Γ(x) for large x, by the Bernoulli-polynomial
/// expansion. Accurate to rounding for x above a few thousand.
fn log_gamma_ratio(x: f64, a: f64) -> f64 {
    let b = -a;
    let b2 = |y: f64| y * y - y + 1.0 / 6.0;
    let b3 = |y: f64| y * y * y - 1.5 * y * y + 0.5 * y;
    let b4 = |y: f64| y.powi(4) - 2.0 * y.powi(3) + y * y - 1.0 / 30.0;
    let b5 = |y: f64| y.powi(5) - 2.5 * y.powi(4) + 5.0 / 3.0 * y.powi(3) - y / 6.0;
    let z = x;
    b * z.ln() + (b2(b) - b2(0.0)) / (2.0 * z) - (b3(b) - b3(0.0)) / (6.0 * z * z)
        + (b4(b) - b4(0.0)) / (12.0 * z.powi(3))
        - (b5(b) - b5(0.0)) / (20.0 * z.powi(4))
}

/// θ_α(k) by the ratio recursion from θ_α(2) = α/2.
pub fn theta_pmf(alpha: f64, k: u64) -> f64 {
    if k < 2 {
        return 0.0;
    }
    let mut p = alpha / 2.0;
    for j in 2..k {
        p *= (j as f64 - alpha) / (j as f64 + 1.0);
        if p == 0.0 {
            break;
        }
    }
    p
}

pub fn theta1_pmf(k: u64) -> f64 {
    if k < 2 {
        0.0
    } else {
        1.0 / (k as f64 * (k as f64 - 1.0))
    }
}

/// Closed form of the θ_α generating function.
pub fn theta_gf_closed(alpha: f64, r: f64) -> f64 {
    if alpha == 2.0 {
        return r * r;
    }
    // (1−r)^α − 1 + αr, arranged to limit cancellation at small r
    let e = (alpha * (-r).ln_1p()).exp_m1();
    (e + alpha * r) / (alpha - 1.0)
}

pub fn theta1_gf_closed(r: f64) -> f64 {
    if r == 1.0 {
        return 1.0;
    }
    r + (1.0 - r) * (-r).ln_1p()
}

pub fn rho_gf_closed(alpha: f64, r: f64) -> f64 {
    r + (1.0 - r).powf(alpha) / alpha
}

static THETA_CACHE: OnceLock<Mutex<Vec<(u64, Arc<OffspringDist>)>>> = OnceLock::new();

/// Shared θ_α instance, so repeated free-function calls reuse one table.
pub fn shared_theta(alpha: f64) -> Result<Arc<OffspringDist>> {
    check_alpha(alpha)?;
    let cache = THETA_CACHE.get_or_init(|| Mutex::new(Vec::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    if let Some((_, d)) = guard.iter().find(|(bits, _)| *bits == alpha.to_bits()) {
        return Ok(d.clone());
    }
    let d = Arc::new(OffspringDist::theta(alpha)?);
    if guard.len() >= 32 {
        guard.remove(0);
    }
    guard.push((alpha.to_bits(), d.clone()));
    Ok(d)
}

/// Inverse CDF of θ_α at u. For fixed u this is non-increasing in α,
/// which is the coupling that nests the trees across α.
pub fn coupled_sample(u: f64, alpha: f64) -> Result<u64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Param(format!("u must lie in (0,1), got {u}")));
    }
    Ok(shared_theta(alpha)?.quantile(u))
}

/// Survival probabilities q_0..q_n of the critical tree up to generation n.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SurvivalTable {
    pub alpha: Option<f64>,
    pub q: Vec<f64>,
}

impl SurvivalTable {
    pub fn q(&self, n: usize) -> f64 {
        self.q[n]
    }

    /// Ratio of q_n to its power-law asymptote; `None` without α.
    pub fn asymptotic_ratio(&self, n: usize) -> Option<f64> {
        let alpha = self.alpha?;
        let target = (alpha / ((alpha - 1.0) * n as f64)).powf(1.0 / (alpha - 1.0));
        Some(self.q[n] / target)
    }

    /// Survival table for any critical law via q_j = 1 − f(1 − q_{j−1}).
    /// The asymptotic check is only defined for the canonical law.
    pub fn for_dist(dist: &OffspringDist, n: usize) -> Result<Self> {
        match dist.kind() {
            OffspringKind::RhoCanonical { alpha } => survival_probs(*alpha, n),
            OffspringKind::Custom { pmf } => {
                let mut q = Vec::with_capacity(n + 1);
                q.push(1.0);
                for _ in 0..n {
                    let prev: f64 = *q.last().unwrap();
                    let l = (-prev).ln_1p();
                    // Σ p_k (1 − (1−q)^k), each term computed without cancellation
                    let next: f64 = pmf
                        .iter()
                        .enumerate()
                        .skip(1)
                        .map(|(k, p)| -p * (k as f64 * l).exp_m1())
                        .sum();
                    q.push(next);
                }
                Ok(SurvivalTable { alpha: None, q })
            }
            other => Err(Error::Param(format!("survival table needs a critical law, got {other:?}"))),
        }
    }
}

/// q_j = q_{j−1} − q_{j−1}^α/α, the exact recursion for ρ_α.
pub fn survival_probs(alpha: f64, n: usize) -> Result<SurvivalTable> {
    check_alpha(alpha)?;
    let mut q = Vec::with_capacity(n + 1);
    q.push(1.0f64);
    for _ in 0..n {
        let p = *q.last().unwrap();
        q.push(p - p.powf(alpha) / alpha);
    }
    Ok(SurvivalTable { alpha: Some(alpha), q })
}
