use serde::{Deserialize, Serialize};

/// Running mean and variance over batches (parallel Welford merge).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunningMeanStd {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub count: f64,
}

impl RunningMeanStd {
    pub fn new(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            var: vec![1.0; dim],
            count: 1e-4,
        }
    }

    /// Merge a row-major batch of `rows.len() / dim` samples.
    pub fn update(&mut self, rows: &[f64]) {
        let dim = self.mean.len();
        let n = (rows.len() / dim) as f64;
        if n == 0.0 {
            return;
        }
        let mut mean = vec![0.0; dim];
        for r in rows.chunks_exact(dim) {
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x / n;
            }
        }
        let mut var = vec![0.0; dim];
        for r in rows.chunks_exact(dim) {
            for ((v, x), m) in var.iter_mut().zip(r).zip(&mean) {
                *v += (x - m) * (x - m) / n;
            }
        }
        let total = self.count + n;
        for k in 0..dim {
            let delta = mean[k] - self.mean[k];
            let m2 = self.var[k] * self.count + var[k] * n + delta * delta * self.count * n / total;
            self.mean[k] += delta * n / total;
            self.var[k] = m2 / total;
        }
        self.count = total;
    }
}

/// Scales rewards by the running standard deviation of the discounted return.
#[derive(Clone, Debug)]
pub struct RewardScaler {
    gamma: f64,
    returns: Vec<f64>,
    stats: RunningMeanStd,
}

impl RewardScaler {
    pub fn new(num_envs: usize, gamma: f64) -> Self {
        Self {
            gamma,
            returns: vec![0.0; num_envs],
            stats: RunningMeanStd::new(1),
        }
    }

    /// Scale one batched step of rewards in place.
    pub fn scale(&mut self, rewards: &mut [f64], dones: &[bool]) {
        for (g, r) in self.returns.iter_mut().zip(rewards.iter()) {
            *g = *g * self.gamma + r;
        }
        self.stats.update(&self.returns);
        let sd = (self.stats.var[0] + 1e-8).sqrt();
        for r in rewards.iter_mut() {
            *r /= sd;
        }
        for (g, d) in self.returns.iter_mut().zip(dones) {
            if *d {
                *g = 0.0;
            }
        }
    }
}
