use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::stream;
use crate::{Error, Result};

/// Interquartile mean: the mean of the central half of the sorted sample.
///
/// Sample `i` of the sorted data covers `[i, i + 1)` on a continuous rank
/// axis and is weighted by its overlap with `[n/4, 3n/4]`, so sizes not
/// divisible by four get fractional endpoint weights.
pub fn iqm(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::contract("iqm of an empty sample"));
    }
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    Ok(iqm_sorted(&x))
}

fn iqm_sorted(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (lo, hi) = (0.25 * n, 0.75 * n);
    let first = lo.floor() as usize;
    let last = (hi.ceil() as usize).min(x.len());
    let mut acc = 0.0;
    for (i, v) in x.iter().enumerate().take(last).skip(first) {
        let w = (hi.min(i as f64 + 1.0) - lo.max(i as f64)).max(0.0);
        acc += w * v;
    }
    acc / (0.5 * n)
}

/// Percentile confidence interval for the IQM under a two-level bootstrap:
/// runs are resampled with replacement, then episodes within each drawn run.
///
/// Resample `b` draws from its own stream derived from `seed`, so the result
/// does not depend on the worker count.
pub fn stratified_bootstrap_ci(
    runs: &[Vec<f64>],
    level: f64,
    resamples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    bootstrap(runs, level, resamples, seed, |x| {
        x.sort_by(f64::total_cmp);
        iqm_sorted(x)
    })
}

/// The same two-level bootstrap for the plain mean.
pub fn stratified_bootstrap_mean_ci(
    runs: &[Vec<f64>],
    level: f64,
    resamples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    bootstrap(runs, level, resamples, seed, |x| {
        x.iter().sum::<f64>() / x.len() as f64
    })
}

fn bootstrap(
    runs: &[Vec<f64>],
    level: f64,
    resamples: usize,
    seed: u64,
    statistic: impl Fn(&mut Vec<f64>) -> f64 + Sync,
) -> Result<(f64, f64)> {
    if runs.is_empty() || runs.iter().any(Vec::is_empty) {
        return Err(Error::contract(
            "bootstrap needs at least one run and one episode per run",
        ));
    }
    if !(level > 0.0 && level < 1.0) || resamples == 0 {
        return Err(Error::contract(
            "bootstrap level must lie in (0, 1) with at least one resample",
        ));
    }
    let mut stats: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, b as u64);
            let mut pooled = Vec::new();
            for _ in 0..runs.len() {
                let run = &runs[rng.random_range(0..runs.len())];
                for _ in 0..run.len() {
                    pooled.push(run[rng.random_range(0..run.len())]);
                }
            }
            statistic(&mut pooled)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - level);
    Ok((
        quantile_sorted(&stats, tail),
        quantile_sorted(&stats, 1.0 - tail),
    ))
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(x: &[f64], q: f64) -> f64 {
    let pos = q * (x.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < x.len() {
        x[i] + frac * (x[i + 1] - x[i])
    } else {
        x[i]
    }
}

/// Area under a learning curve, taken as the mean of its returns.
pub fn auc(curve: &[(u64, f64)]) -> Result<f64> {
    if curve.is_empty() {
        return Err(Error::contract("auc of an empty curve"));
    }
    if curve.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::contract("curve steps must be strictly increasing"));
    }
    Ok(curve.iter().map(|p| p.1).sum::<f64>() / curve.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub iqm: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n_runs: usize,
    pub n_episodes: usize,
}

pub const DEFAULT_RESAMPLES: usize = 2000;

impl MetricSummary {
    /// IQM of all pooled episodes with a 95% stratified bootstrap interval.
    /// The interval is widened to contain the point estimate if needed.
    pub fn from_runs(runs: &[Vec<f64>], resamples: usize, seed: u64) -> Result<Self> {
        let pooled: Vec<f64> = runs.iter().flatten().copied().collect();
        let iqm = iqm(&pooled)?;
        let (lo, hi) = stratified_bootstrap_ci(runs, 0.95, resamples, seed)?;
        Ok(Self {
            iqm,
            ci_lo: lo.min(iqm),
            ci_hi: hi.max(iqm),
            n_runs: runs.len(),
            n_episodes: pooled.len(),
        })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.ci_lo <= x && x <= self.ci_hi
    }
}

#[cfg(test)]
mod tests {
    use rand::seq::SliceRandom;
    use rand_distr::{Distribution, StandardNormal};

    use super::*;
    use crate::rng::from_seed;

    #[test]
    fn iqm_fixtures() {
        assert_eq!(iqm(&[5.0; 4]).unwrap(), 5.0);
        let one_to_eight: Vec<f64> = (1..=8).map(f64::from).collect();
        assert_eq!(iqm(&one_to_eight).unwrap(), 4.5);
        assert_eq!(
            iqm(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 100.0]).unwrap(),
            0.0
        );
        assert_eq!(iqm(&[7.0]).unwrap(), 7.0);
        assert!(iqm(&[]).is_err());
    }

    #[test]
    fn iqm_fractional_weights() {
        // n = 5: ranks [1.25, 3.75] -> 0.75*x1 + x2 + 0.75*x3 over 2.5
        let x = [1.0, 2.0, 3.0, 4.0, 50.0];
        assert!((iqm(&x).unwrap() - (0.75 * 2.0 + 3.0 + 0.75 * 4.0) / 2.5).abs() < 1e-12);
    }

    #[test]
    fn iqm_is_affine_equivariant_and_order_free() {
        let mut rng = from_seed(0);
        for n in 1..40 {
            let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            let base = iqm(&x).unwrap();
            let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 3.0).collect();
            assert!((iqm(&y).unwrap() - (2.5 * base - 3.0)).abs() < 1e-9);
            x.shuffle(&mut rng);
            assert!((iqm(&x).unwrap() - base).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_bootstrap_intervals() {
        assert_eq!(
            stratified_bootstrap_ci(&[vec![3.0; 5], vec![3.0; 2]], 0.95, 200, 1).unwrap(),
            (3.0, 3.0)
        );
        assert_eq!(
            stratified_bootstrap_ci(&[vec![-1.5]], 0.95, 200, 1).unwrap(),
            (-1.5, -1.5)
        );
    }

    #[test]
    fn bootstrap_covers_true_mean() {
        let mut rng = from_seed(11);
        let mut covered = 0;
        for rep in 0..100 {
            let runs: Vec<Vec<f64>> = (0..16)
                .map(|_| (0..10).map(|_| StandardNormal.sample(&mut rng)).collect())
                .collect();
            let (lo, hi) = stratified_bootstrap_ci(&runs, 0.95, 1000, rep).unwrap();
            if lo <= 0.0 && 0.0 <= hi {
                covered += 1;
            }
        }
        assert!(covered >= 90, "covered {covered}/100");
    }

    #[test]
    fn mean_interval_covers_true_mean() {
        let mut rng = from_seed(13);
        let mut covered = 0;
        for rep in 0..100 {
            let runs: Vec<Vec<f64>> = (0..8)
                .map(|_| {
                    (0..6)
                        .map(|_| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            3.0 + 2.0 * z
                        })
                        .collect::<Vec<f64>>()
                })
                .collect();
            let (lo, hi) = stratified_bootstrap_mean_ci(&runs, 0.95, 1000, rep).unwrap();
            if lo <= 3.0 && 3.0 <= hi {
                covered += 1;
            }
        }
        assert!(covered >= 88, "covered {covered}/100");
        assert_eq!(
            stratified_bootstrap_mean_ci(&[vec![2.0, 2.0]], 0.9, 50, 0).unwrap(),
            (2.0, 2.0)
        );
    }

    #[test]
    fn bootstrap_is_seeded() {
        let runs = vec![vec![1.0, 2.0, 5.0], vec![0.5, 9.0]];
        assert_eq!(
            stratified_bootstrap_ci(&runs, 0.95, 300, 4).unwrap(),
            stratified_bootstrap_ci(&runs, 0.95, 300, 4).unwrap()
        );
    }

    #[test]
    fn interval_narrows_with_more_runs() {
        let mut rng = from_seed(12);
        let mut width = |runs: usize| {
            let mut total = 0.0;
            for rep in 0..10 {
                let data: Vec<Vec<f64>> = (0..runs)
                    .map(|_| (0..5).map(|_| StandardNormal.sample(&mut rng)).collect())
                    .collect();
                let (lo, hi) = stratified_bootstrap_ci(&data, 0.95, 500, rep).unwrap();
                total += hi - lo;
            }
            total
        };
        let (w4, w16, w64) = (width(4), width(16), width(64));
        assert!(w4 > w16 && w16 > w64);
    }

    #[test]
    fn auc_is_mean_return() {
        assert_eq!(auc(&[(0, 2.0), (5, 2.0), (9, 2.0)]).unwrap(), 2.0);
        assert_eq!(auc(&[(0, 0.0), (1, 2.0)]).unwrap(), 1.0);
        let mut rng = from_seed(3);
        let curve: Vec<(u64, f64)> = (0..50)
            .map(|i| (i * 10, rng.random_range(-5.0..5.0)))
            .collect();
        let oracle = curve.iter().map(|p| p.1).sum::<f64>() / 50.0;
        assert!((auc(&curve).unwrap() - oracle).abs() < 1e-12);
        assert!(auc(&[(1, 0.0), (1, 1.0)]).is_err());
    }

    #[test]
    fn summary_brackets_point_estimate() {
        let runs = vec![vec![1.0, 2.0, 3.0], vec![10.0, 11.0], vec![4.0]];
        let s = MetricSummary::from_runs(&runs, 500, 0).unwrap();
        assert!(s.ci_lo <= s.iqm && s.iqm <= s.ci_hi);
        assert_eq!((s.n_runs, s.n_episodes), (3, 6));
    }
}
