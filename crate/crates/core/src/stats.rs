//! Sample summaries and the percentile bootstrap used by every
//! ratio-of-means estimator.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::par;
use crate::streams::{substream, Tag};

pub const DEFAULT_BOOTSTRAP: usize = 200;

/// Normal quantile for a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = mean(xs);
    if xs.len() < 2 {
        return (m, f64::NAN);
    }
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

pub fn std_dev(xs: &[f64]) -> f64 {
    let (_, se) = mean_se(xs);
    se * (xs.len() as f64).sqrt()
}

/// Percentile interval of a bootstrap distribution plus its spread.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
    pub std_error: f64,
}

impl Interval {
    /// Symmetric normal interval around `point`.
    pub fn normal(point: f64, se: f64) -> Self {
        Interval { low: point - Z95 * se, high: point + Z95 * se, std_error: se }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.low <= x && x <= self.high
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.low <= other.high && other.low <= self.high
    }
}

/// Empirical quantile by linear interpolation on a sorted slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let i = h.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (h - i as f64) * (sorted[j] - sorted[i])
}

/// Percentile bootstrap for a statistic of column means.
///
/// Each column holds one value per unit; units are resampled jointly, so
/// correlation between columns is kept. `stat` receives the column means.
/// The interval is widened if needed so that it contains `stat` of the
/// full-sample means.
pub fn bootstrap_means<F>(columns: &[&[f64]], stat: F, reps: usize, seed: u64) -> Interval
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    let n = columns[0].len();
    assert!(columns.iter().all(|c| c.len() == n), "bootstrap columns must have equal length");
    let full: Vec<f64> = columns.iter().map(|c| mean(c)).collect();
    let point = stat(&full);
    let mut draws: Vec<f64> = par::map_indexed(reps, |b| {
        let mut rng = substream(seed, Tag::Bootstrap, b as u64, 0);
        let mut sums = vec![0.0; columns.len()];
        for _ in 0..n {
            let i = rng.gen_range(0..n);
            for (s, c) in sums.iter_mut().zip(columns) {
                *s += c[i];
            }
        }
        for s in &mut sums {
            *s /= n as f64;
        }
        stat(&sums)
    });
    draws.retain(|x| x.is_finite());
    if draws.len() < 2 {
        return Interval { low: point, high: point, std_error: f64::NAN };
    }
    draws.sort_unstable_by(f64::total_cmp);
    let low = quantile_sorted(&draws, 0.025).min(point);
    let high = quantile_sorted(&draws, 0.975).max(point);
    Interval { low, high, std_error: std_dev(&draws) }
}

/// Ratio of two column means with a bootstrap interval.
pub fn ratio_of_means(num: &[f64], den: &[f64], reps: usize, seed: u64) -> (f64, Interval) {
    let point = mean(num) / mean(den);
    let ci = bootstrap_means(&[num, den], |m| m[0] / m[1], reps, seed);
    (point, ci)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::distributions::Open01;

    #[test]
    fn mean_and_se_of_small_sample() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn quantile_interpolates() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&xs, 0.5), 2.0);
        assert_eq!(quantile_sorted(&xs, 0.125), 0.5);
        assert_eq!(quantile_sorted(&xs, 1.0), 4.0);
    }

    #[test]
    fn bootstrap_of_mean_matches_normal_width() {
        let mut rng = substream(3, Tag::Scan, 0, 0);
        let xs: Vec<f64> = (0..20_000).map(|_| rng.sample::<f64, _>(Open01)).collect();
        let (m, se) = mean_se(&xs);
        let ci = bootstrap_means(&[&xs], |m| m[0], 200, 9);
        assert!(ci.contains(m));
        assert!((ci.std_error / se - 1.0).abs() < 0.25, "{} vs {}", ci.std_error, se);
        assert!(((ci.high - ci.low) / (2.0 * Z95 * se) - 1.0).abs() < 0.3);
    }

    #[test]
    fn bootstrap_is_reproducible_and_constant_columns_collapse() {
        let xs: Vec<f64> = (0..500).map(|i| (i % 7) as f64).collect();
        let a = bootstrap_means(&[&xs], |m| m[0], 50, 1);
        let b = bootstrap_means(&[&xs], |m| m[0], 50, 1);
        assert_eq!(a, b);
        let ones = vec![1.0; 100];
        let (p, ci) = ratio_of_means(&ones, &ones, 50, 2);
        assert_eq!((p, ci.low, ci.high), (1.0, 1.0, 1.0));
    }
}
