//! Continuous-time Galton-Watson trees with Exp(1) lifetimes and θ_α
//! offspring, truncated at a height `r`.
//!
//! Two samplers share one law. [`sample_ctgw`] builds the whole tree in an
//! arena; [`count_process`] only tracks the number of live segments, which
//! is all the level statistics need and is what makes `r = 8` affordable
//! at small α.

use std::fmt::Write as _;

use rand::distributions::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_alpha, Error, Result};
use crate::offspring::{shared_theta, OffspringDist};
use crate::par;
use crate::stats::mean_se;
use crate::streams::{substream, Tag};

pub const DEFAULT_NODE_CAP: usize = 10_000_000;
pub const DEFAULT_EVENT_CAP: u64 = 2_000_000_000;

const NO_PARENT: u32 = u32::MAX;

/// Which height coordinate the arena currently stores.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeightScale {
    /// Heights `z` of the branching tree.
    Ctgw,
    /// Heights `1 − e^{−z}` of the reduced stable tree.
    Delta,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CtgwNode {
    pub parent: u32,
    pub birth: f64,
    pub death: f64,
    /// Children occupy `first_child..first_child + n_children`.
    pub first_child: u32,
    pub n_children: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CtgwTree {
    pub alpha: f64,
    /// Truncation height, in the current scale.
    pub r: f64,
    pub nodes: Vec<CtgwNode>,
    pub overflow: bool,
    pub scale: HeightScale,
}

#[inline]
fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    -u.ln()
}

/// Breadth-first generation: every segment dying below `r` gets θ_α
/// children. Growth stops with `overflow` set once the arena holds more
/// than `cap` nodes.
pub fn sample_ctgw<R: Rng + ?Sized>(alpha: f64, r: f64, cap: usize, rng: &mut R) -> Result<CtgwTree> {
    check_alpha(alpha)?;
    if !(r > 0.0) || cap < 1 {
        return Err(Error::Param(format!("need r > 0 and cap ≥ 1 (r = {r}, cap = {cap})")));
    }
    let theta = shared_theta(alpha)?;
    Ok(grow(alpha, r, cap, &theta, rng))
}

fn grow<R: Rng + ?Sized>(alpha: f64, r: f64, cap: usize, theta: &OffspringDist, rng: &mut R) -> CtgwTree {
    let mut nodes = vec![CtgwNode { parent: NO_PARENT, birth: 0.0, death: exp1(rng), first_child: 0, n_children: 0 }];
    let mut overflow = false;
    let mut i = 0;
    while i < nodes.len() {
        let death = nodes[i].death;
        if death < r {
            let k = theta.sample(rng) as usize;
            if nodes.len() + k > cap {
                overflow = true;
                break;
            }
            nodes[i].first_child = nodes.len() as u32;
            nodes[i].n_children = k as u32;
            for _ in 0..k {
                nodes.push(CtgwNode { parent: i as u32, birth: death, death: death + exp1(rng), first_child: 0, n_children: 0 });
            }
        }
        i += 1;
    }
    CtgwTree { alpha, r, nodes, overflow, scale: HeightScale::Ctgw }
}

impl CtgwTree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn children(&self, v: usize) -> std::ops::Range<usize> {
        let n = &self.nodes[v];
        n.first_child as usize..(n.first_child + n.n_children) as usize
    }

    /// Number of segments with `birth < s ≤ death`; the root segment also
    /// covers `s = 0`.
    pub fn level_count(&self, s: f64) -> Result<u64> {
        if s > self.r || s < 0.0 {
            return Err(Error::Param(format!("level {s} outside [0, {}]", self.r)));
        }
        if self.overflow {
            return Err(Error::Overflow(self.nodes.len()));
        }
        if s == 0.0 {
            return Ok(1);
        }
        Ok(self.nodes.iter().filter(|n| n.birth < s && s <= n.death).count() as u64)
    }

    /// `e^{−r/(α−1)} #Γ_r`.
    pub fn martingale_stat(&self) -> Result<f64> {
        let count = self.level_count(self.r)?;
        Ok(martingale_scale(self.alpha, self.r) * count as f64)
    }

    /// The same tree with every height `z` replaced by `1 − e^{−z}`.
    pub fn map_to_delta(&self) -> CtgwTree {
        if self.scale == HeightScale::Delta {
            return self.clone();
        }
        let f = |z: f64| -(-z).exp_m1();
        CtgwTree {
            alpha: self.alpha,
            r: f(self.r),
            nodes: self.nodes.iter().map(|n| CtgwNode { birth: f(n.birth), death: f(n.death), ..*n }).collect(),
            overflow: self.overflow,
            scale: HeightScale::Delta,
        }
    }

    /// One node per line: `id,parent,birth,death` (parent empty at the root).
    pub fn dump(&self) -> String {
        let mut out = String::from("id,parent,birth,death\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let parent = if n.parent == NO_PARENT { String::new() } else { n.parent.to_string() };
            let _ = writeln!(out, "{i},{parent},{},{}", n.birth, n.death);
        }
        out
    }
}

#[inline]
pub fn martingale_scale(alpha: f64, r: f64) -> f64 {
    (-r / (alpha - 1.0)).exp()
}

/// Number of live segments at height `r`, simulated as the jump process
/// that moves from `z` to `z + N − 1` at rate `z`. Fails with
/// [`Error::Overflow`] after `event_cap` branchings.
pub fn count_process<R: Rng + ?Sized>(theta: &OffspringDist, r: f64, event_cap: u64, rng: &mut R) -> Result<u64> {
    let mut t = 0.0;
    let mut z: u64 = 1;
    let mut events = 0u64;
    loop {
        t += exp1(rng) / z as f64;
        if t >= r {
            return Ok(z);
        }
        z += theta.sample(rng) - 1;
        events += 1;
        if events > event_cap {
            return Err(Error::Overflow(events as usize));
        }
    }
}

/// `E[e^{−u #Γ_r}] = 1 − [1 − e^{−r}(1 − (1 − e^{−u})^{1−α})]^{1/(1−α)}`.
pub fn level_laplace_closed(alpha: f64, r: f64, u: f64) -> f64 {
    let a = -(-u).exp_m1();
    let inner = 1.0 - (-r).exp() * (1.0 - a.powf(1.0 - alpha));
    1.0 - inner.powf(1.0 / (1.0 - alpha))
}

/// `E[e^{−u𝒲}] = 1 − u/(1 + u^{α−1})^{1/(α−1)}`.
pub fn martingale_laplace_closed(alpha: f64, u: f64) -> f64 {
    1.0 - u / (1.0 + u.powf(alpha - 1.0)).powf(1.0 / (alpha - 1.0))
}

/// Empirical mean with standard error against a closed form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormCheck {
    pub u: f64,
    pub empirical: f64,
    pub std_error: f64,
    pub closed_form: f64,
    pub z_score: f64,
}

impl ClosedFormCheck {
    fn new(u: f64, values: &[f64], closed_form: f64) -> Self {
        let (empirical, std_error) = mean_se(values);
        let z_score = if std_error > 0.0 {
            (empirical - closed_form) / std_error
        } else if empirical == closed_form {
            0.0
        } else {
            f64::INFINITY
        };
        ClosedFormCheck { u, empirical, std_error, closed_form, z_score }
    }
}

/// Level sizes `#Γ_r` over replicas, via the count process. Replicas that
/// hit the event cap are dropped and counted.
pub fn level_counts(alpha: f64, r: f64, replicas: usize, event_cap: u64, seed: u64) -> Result<(Vec<u64>, usize)> {
    check_alpha(alpha)?;
    let theta = shared_theta(alpha)?;
    let out = par::map_indexed(replicas, |i| {
        let mut rng = substream(seed, Tag::Ctgw, i as u64, 1);
        count_process(&theta, r, event_cap, &mut rng).ok()
    });
    let discards = out.iter().filter(|x| x.is_none()).count();
    Ok((out.into_iter().flatten().collect(), discards))
}

/// Empirical `E[e^{−u #Γ_r}]` against the closed form.
pub fn level_laplace_check(alpha: f64, r: f64, u: f64, replicas: usize, seed: u64) -> Result<ClosedFormCheck> {
    let (counts, _) = level_counts(alpha, r, replicas, DEFAULT_EVENT_CAP, seed)?;
    let v: Vec<f64> = counts.iter().map(|&z| (-u * z as f64).exp()).collect();
    Ok(ClosedFormCheck::new(u, &v, level_laplace_closed(alpha, r, u)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MartingaleCheck {
    pub alpha: f64,
    pub r: f64,
    pub replicas: usize,
    pub discards: usize,
    pub mean: f64,
    pub mean_se: f64,
    pub laplace: Vec<ClosedFormCheck>,
}

/// Statistics of `W_r = e^{−r/(α−1)} #Γ_r`: its mean and its Laplace
/// transform at each `u` against the limit law.
pub fn martingale_check(alpha: f64, r: f64, us: &[f64], replicas: usize, event_cap: u64, seed: u64) -> Result<MartingaleCheck> {
    let (counts, discards) = level_counts(alpha, r, replicas, event_cap, seed)?;
    let scale = martingale_scale(alpha, r);
    let w: Vec<f64> = counts.iter().map(|&z| scale * z as f64).collect();
    let (mean, mean_se) = mean_se(&w);
    let laplace = us
        .iter()
        .map(|&u| {
            let v: Vec<f64> = w.iter().map(|x| (-u * x).exp()).collect();
            ClosedFormCheck::new(u, &v, martingale_laplace_closed(alpha, u))
        })
        .collect();
    Ok(MartingaleCheck { alpha, r, replicas, discards, mean, mean_se, laplace })
}

/// `e^{−r/(α−1)} E[#Γ_r]` from arena trees, with overflowing trees dropped
/// and counted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelMean {
    pub alpha: f64,
    pub r: f64,
    pub normalized_mean: f64,
    pub std_error: f64,
    pub z: f64,
    pub replicas: usize,
    pub discards: usize,
}

pub fn level_mean_check(alpha: f64, r: f64, replicas: usize, cap: usize, seed: u64) -> Result<LevelMean> {
    check_alpha(alpha)?;
    let theta = shared_theta(alpha)?;
    let scale = martingale_scale(alpha, r);
    let out = par::map_indexed(replicas, |i| {
        let mut rng = substream(seed, Tag::Ctgw, i as u64, 0);
        let t = grow(alpha, r, cap, &theta, &mut rng);
        t.level_count(r).ok().map(|c| c as f64 * scale)
    });
    let discards = out.iter().filter(|x| x.is_none()).count();
    let w: Vec<f64> = out.into_iter().flatten().collect();
    let (m, se) = mean_se(&w);
    Ok(LevelMean { alpha, r, normalized_mean: m, std_error: se, z: (m - 1.0) / se, replicas, discards })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offspring::theta_pmf;
    use crate::streams::Rng as StreamRng;
    use proptest::prelude::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF, Exp};

    fn rng(i: u64) -> StreamRng {
        substream(77, Tag::Ctgw, i, 9)
    }

    #[test]
    fn binary_at_two_and_structure_invariants() {
        let t = sample_ctgw(2.0, 3.0, DEFAULT_NODE_CAP, &mut rng(0)).unwrap();
        assert!(!t.overflow);
        assert_eq!(t.nodes[0].birth, 0.0);
        for (i, n) in t.nodes.iter().enumerate() {
            assert!(n.death > n.birth);
            if n.death < t.r {
                assert_eq!(n.n_children, 2);
            } else {
                assert_eq!(n.n_children, 0);
            }
            for c in t.children(i) {
                assert_eq!(t.nodes[c].parent as usize, i);
                assert_eq!(t.nodes[c].birth, n.death);
            }
        }
    }

    #[test]
    fn tiny_height_gives_single_segment() {
        let t = sample_ctgw(1.5, 1e-9, 10, &mut rng(1)).unwrap();
        assert_eq!(t.level_count(0.0).unwrap(), 1);
        assert_eq!(t.level_count(1e-9).unwrap(), 1);
        assert!(t.level_count(1.0).is_err());
    }

    #[test]
    fn overflow_is_flagged() {
        let t = sample_ctgw(1.2, 6.0, 50, &mut rng(2)).unwrap();
        if t.overflow {
            assert!(t.level_count(6.0).is_err());
        }
        let mut seen = false;
        for i in 0..50 {
            seen |= sample_ctgw(1.2, 6.0, 50, &mut rng(100 + i)).unwrap().overflow;
        }
        assert!(seen);
    }

    #[test]
    fn first_branching_is_exponential() {
        let s = 0.4;
        let n = 20_000;
        let ones = (0..n).filter(|&i| sample_ctgw(2.0, s, 1000, &mut rng(1000 + i)).unwrap().level_count(s).unwrap() == 1).count();
        let p = (-s).exp();
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((ones as f64 / n as f64 - p).abs() < 4.0 * se);
    }

    #[test]
    fn level_count_grows_in_mean() {
        let (a, b): (Vec<u64>, Vec<u64>) = (0..4000)
            .map(|i| {
                let t = sample_ctgw(1.5, 1.0, 100_000, &mut rng(5000 + i)).unwrap();
                (t.level_count(0.5).unwrap(), t.level_count(1.0).unwrap())
            })
            .unzip();
        assert!(b.iter().sum::<u64>() > a.iter().sum::<u64>());
    }

    #[test]
    fn offspring_counts_fit_theta() {
        let alpha = 1.5;
        let mut counts = [0u64; 12];
        let mut total = 0;
        let mut i = 0;
        while total < 10_000 {
            let t = sample_ctgw(alpha, 2.0, 1_000_000, &mut rng(20_000 + i)).unwrap();
            i += 1;
            for n in t.nodes.iter().filter(|n| n.death < t.r) {
                counts[(n.n_children as usize).min(11)] += 1;
                total += 1;
            }
        }
        let mut chi = 0.0;
        for k in 2..12u64 {
            let p = if k < 11 { theta_pmf(alpha, k) } else { 1.0 - (2..11).map(|j| theta_pmf(alpha, j)).sum::<f64>() };
            let e = p * total as f64;
            chi += (counts[k as usize] as f64 - e).powi(2) / e;
        }
        let pval = 1.0 - ChiSquared::new(9.0).unwrap().cdf(chi);
        assert!(pval > 0.001, "chi2 {chi} p {pval}");
    }

    #[test]
    fn lifetimes_are_exponential() {
        let mut life = Vec::new();
        let mut i = 0;
        while life.len() < 10_000 {
            let t = sample_ctgw(1.8, 2.0, 1_000_000, &mut rng(40_000 + i)).unwrap();
            i += 1;
            life.extend(t.nodes.iter().map(|n| n.death - n.birth));
        }
        life.sort_unstable_by(f64::total_cmp);
        let e = Exp::new(1.0).unwrap();
        let n = life.len() as f64;
        let d = life
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = e.cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        // p = 0.001 critical value of the two-sided KS statistic
        assert!(d * n.sqrt() < 1.95, "KS {d}");
    }

    #[test]
    fn count_process_matches_arena_in_law() {
        let theta = shared_theta(1.5).unwrap();
        let n = 20_000u64;
        let arena: Vec<f64> = (0..n).map(|i| sample_ctgw(1.5, 1.0, 1_000_000, &mut rng(60_000 + i)).unwrap().level_count(1.0).unwrap() as f64).collect();
        let count: Vec<f64> = (0..n).map(|i| count_process(&theta, 1.0, u64::MAX, &mut rng(90_000 + i)).unwrap() as f64).collect();
        for u in [0.3, 1.0] {
            let (a, sa) = mean_se(&arena.iter().map(|z| (-u * z).exp()).collect::<Vec<_>>());
            let (b, sb) = mean_se(&count.iter().map(|z| (-u * z).exp()).collect::<Vec<_>>());
            assert!((a - b).abs() < 4.0 * sa.hypot(sb), "u={u}: {a} vs {b}");
        }
    }

    #[test]
    fn level_closed_form_reduces_to_geometric_at_two() {
        for (r, u) in [(0.5f64, 0.3f64), (1.0, 1.0), (2.0, 4.0)] {
            let s: f64 = (-u).exp();
            let q = (-r).exp();
            let geometric = s * q / (1.0 - s * (1.0 - q));
            assert!((level_laplace_closed(2.0, r, u) - geometric).abs() < 1e-14);
        }
        assert!((level_laplace_closed(1.5, 1.0, 0.0) - 1.0).abs() < 1e-15);
        assert!((martingale_laplace_closed(2.0, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn level_laplace_matches_closed_form() {
        let c = level_laplace_check(1.5, 1.0, 1.0, 100_000, 3).unwrap();
        assert!(c.z_score.abs() < 4.0, "{c:?}");
        let c = level_laplace_check(1.5, 1.0, 20.0, 100_000, 4).unwrap();
        assert!(c.z_score.abs() < 4.0, "{c:?}");
        let c = level_laplace_check(1.5, 1.0, 0.0, 100, 4).unwrap();
        assert_eq!((c.empirical, c.closed_form), (1.0, 1.0));
    }

    #[test]
    fn normalized_level_mean_is_one() {
        let m = level_mean_check(2.0, 1.0, 10_000, DEFAULT_NODE_CAP, 5).unwrap();
        assert!(m.z.abs() < 4.0, "{m:?}");
    }

    #[test]
    fn delta_heights_and_dump() {
        let t = sample_ctgw(1.5, 2.0, 100_000, &mut rng(7)).unwrap();
        let d = t.map_to_delta();
        assert_eq!(d.nodes[0].birth, 0.0);
        for (i, n) in d.nodes.iter().enumerate() {
            assert!(n.death < 1.0 && n.birth < n.death);
            for c in d.children(i) {
                assert!(d.nodes[c].death > n.death);
            }
        }
        assert!((d.r - (1.0 - (-2f64).exp())).abs() < 1e-15);
        let mut one = t.clone();
        one.nodes[0].death = 2f64.ln();
        assert!((one.map_to_delta().nodes[0].death - 0.5).abs() < 1e-15);
        let dump = t.dump();
        assert!(dump.starts_with("id,parent,birth,death\n0,,0,"));
        assert_eq!(dump.lines().count(), t.len() + 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn level_counts_positive(seed in 0u64..1000, s in 0.0f64..2.0) {
            let t = sample_ctgw(1.6, 2.0, 1_000_000, &mut rng(seed)).unwrap();
            prop_assert!(t.level_count(s).unwrap() >= 1);
        }
    }
}
