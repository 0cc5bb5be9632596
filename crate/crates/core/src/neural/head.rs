use rand_distr::{Distribution, StandardNormal};

use crate::rng::Rng;

pub const LOGSTD_MIN: f64 = -5.0;
pub const LOGSTD_MAX: f64 = 2.0;

const LOG_2PI: f64 = 1.837_877_066_409_345_3;

/// Diagonal Gaussian action distribution on top of a network output.
#[derive(Clone, Debug, PartialEq)]
pub enum GaussianHead {
    /// Network outputs the mean; the log-std is a free parameter vector.
    /// Actions are unbounded samples (the environment clips them).
    StateIndependent { logstd: Vec<f64> },
    /// Network outputs `[mean, logstd]`; samples are squashed by `tanh`.
    TanhSquashed { act_dim: usize },
}

/// One draw from a head.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadSample {
    pub action: Vec<f64>,
    /// Gaussian sample before squashing; equals `action` for the unsquashed head.
    pub pre_tanh: Vec<f64>,
    /// Standard-normal noise that produced the sample.
    pub noise: Vec<f64>,
    pub log_prob: f64,
}

pub fn clamp_logstd(x: f64) -> f64 {
    x.clamp(LOGSTD_MIN, LOGSTD_MAX)
}

/// `log(1 - tanh(u)^2)`, computed without cancellation for large `|u|`.
pub fn log_one_minus_tanh_sq(u: f64) -> f64 {
    2.0 * (std::f64::consts::LN_2 - u - softplus(-2.0 * u))
}

pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// Log density of `x` under `N(mean, exp(logstd)^2)`, summed over dimensions.
pub fn gaussian_log_prob(mean: &[f64], logstd: &[f64], x: &[f64]) -> f64 {
    mean.iter()
        .zip(logstd)
        .zip(x)
        .map(|((m, ls), x)| {
            let z = (x - m) / ls.exp();
            -0.5 * z * z - ls - 0.5 * LOG_2PI
        })
        .sum()
}

/// Entropy of a diagonal Gaussian.
pub fn gaussian_entropy(logstd: &[f64]) -> f64 {
    logstd.iter().map(|ls| ls + 0.5 * (1.0 + LOG_2PI)).sum()
}

impl GaussianHead {
    pub fn act_dim(&self) -> usize {
        match self {
            GaussianHead::StateIndependent { logstd } => logstd.len(),
            GaussianHead::TanhSquashed { act_dim } => *act_dim,
        }
    }

    /// Number of network outputs the head consumes.
    pub fn net_outputs(&self) -> usize {
        match self {
            GaussianHead::StateIndependent { logstd } => logstd.len(),
            GaussianHead::TanhSquashed { act_dim } => 2 * act_dim,
        }
    }

    /// Mean and clamped log-std for one network output row.
    pub fn split(&self, net_output: &[f64]) -> (Vec<f64>, Vec<f64>) {
        assert_eq!(net_output.len(), self.net_outputs(), "network output width");
        match self {
            GaussianHead::StateIndependent { logstd } => (
                net_output.to_vec(),
                logstd.iter().copied().map(clamp_logstd).collect(),
            ),
            GaussianHead::TanhSquashed { act_dim } => {
                let (m, ls) = net_output.split_at(*act_dim);
                (m.to_vec(), ls.iter().copied().map(clamp_logstd).collect())
            }
        }
    }

    pub fn sample(&self, net_output: &[f64], rng: &mut Rng) -> HeadSample {
        let noise: Vec<f64> = (0..self.act_dim())
            .map(|_| StandardNormal.sample(rng))
            .collect();
        self.sample_with_noise(net_output, noise)
    }

    pub fn sample_with_noise(&self, net_output: &[f64], noise: Vec<f64>) -> HeadSample {
        let (mean, logstd) = self.split(net_output);
        let pre_tanh: Vec<f64> = mean
            .iter()
            .zip(&logstd)
            .zip(&noise)
            .map(|((m, ls), e)| m + ls.exp() * e)
            .collect();
        let gauss = gaussian_log_prob(&mean, &logstd, &pre_tanh);
        match self {
            GaussianHead::StateIndependent { .. } => HeadSample {
                action: pre_tanh.clone(),
                pre_tanh,
                noise,
                log_prob: gauss,
            },
            GaussianHead::TanhSquashed { .. } => HeadSample {
                action: pre_tanh.iter().map(|u| u.tanh()).collect(),
                log_prob: gauss
                    - pre_tanh
                        .iter()
                        .map(|&u| log_one_minus_tanh_sq(u))
                        .sum::<f64>(),
                pre_tanh,
                noise,
            },
        }
    }

    /// Log density of `action`. Squashed actions must lie strictly inside (-1, 1).
    pub fn log_prob(&self, net_output: &[f64], action: &[f64]) -> f64 {
        let (mean, logstd) = self.split(net_output);
        match self {
            GaussianHead::StateIndependent { .. } => gaussian_log_prob(&mean, &logstd, action),
            GaussianHead::TanhSquashed { .. } => {
                let u: Vec<f64> = action.iter().map(|a| a.atanh()).collect();
                gaussian_log_prob(&mean, &logstd, &u)
                    - u.iter().map(|&u| log_one_minus_tanh_sq(u)).sum::<f64>()
            }
        }
    }

    /// Noise-free action used for evaluation.
    pub fn mean_action(&self, net_output: &[f64]) -> Vec<f64> {
        let (mean, _) = self.split(net_output);
        match self {
            GaussianHead::StateIndependent { .. } => mean,
            GaussianHead::TanhSquashed { .. } => mean.iter().map(|m| m.tanh()).collect(),
        }
    }
}

/// Draw an action and its log-probability.
pub fn policy_sample(head: &GaussianHead, net_output: &[f64], rng: &mut Rng) -> (Vec<f64>, f64) {
    let s = head.sample(net_output, rng);
    (s.action, s.log_prob)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::from_seed;

    fn normal_pdf(x: f64, m: f64, s: f64) -> f64 {
        (-(x - m) * (x - m) / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
    }

    #[test]
    fn tiny_std_limit_is_deterministic() {
        let mut rng = from_seed(0);
        let ppo = GaussianHead::StateIndependent {
            logstd: vec![-5.0; 2],
        };
        let (a, _) = policy_sample(&ppo, &[0.3, -0.7], &mut rng);
        assert!((a[0] - 0.3).abs() < 0.05 && (a[1] + 0.7).abs() < 0.05);
        let sac = GaussianHead::TanhSquashed { act_dim: 2 };
        let (a, _) = policy_sample(&sac, &[0.3, -0.7, -40.0, -40.0], &mut rng);
        assert!((a[0] - 0.3f64.tanh()).abs() < 0.05 && (a[1] - (-0.7f64).tanh()).abs() < 0.05);
    }

    #[test]
    fn logstd_is_clamped() {
        let sac = GaussianHead::TanhSquashed { act_dim: 1 };
        assert_eq!(sac.split(&[0.0, 10.0]).1, vec![LOGSTD_MAX]);
        assert_eq!(sac.split(&[0.0, -10.0]).1, vec![LOGSTD_MIN]);
    }

    #[test]
    fn densities_integrate_to_one() {
        let ppo = GaussianHead::StateIndependent {
            logstd: vec![0.4f64.ln()],
        };
        let sac = GaussianHead::TanhSquashed { act_dim: 1 };
        let n = 200_000;
        // gaussian over a wide interval
        let (lo, hi) = (-5.0, 5.0);
        let h = (hi - lo) / n as f64;
        let mass: f64 = (0..n)
            .map(|i| ppo.log_prob(&[0.2], &[lo + (i as f64 + 0.5) * h]).exp() * h)
            .sum();
        assert!((mass - 1.0).abs() < 0.01);
        // squashed density lives on (-1, 1)
        let h = 2.0 / n as f64;
        let mass: f64 = (0..n)
            .map(|i| {
                sac.log_prob(&[0.5, 0.6f64.ln()], &[-1.0 + (i as f64 + 0.5) * h])
                    .exp()
                    * h
            })
            .sum();
        assert!((mass - 1.0).abs() < 0.01);
    }

    #[test]
    fn sampled_log_prob_matches_density_formula() {
        let mut rng = from_seed(1);
        let sac = GaussianHead::TanhSquashed { act_dim: 3 };
        let ppo = GaussianHead::StateIndependent {
            logstd: vec![-0.5, 0.0, 0.3],
        };
        for _ in 0..100 {
            let out = [0.1, -0.4, 0.9, -0.3, 0.2, -1.0];
            let s = sac.sample(&out, &mut rng);
            let mut direct = 0.0;
            for k in 0..3 {
                let sd = out[3 + k].exp();
                let u = s.pre_tanh[k];
                direct += normal_pdf(u, out[k], sd).ln() - (1.0 - u.tanh().powi(2)).ln();
            }
            assert!((s.log_prob - direct).abs() < 1e-9);

            let s = ppo.sample(&out[..3], &mut rng);
            let direct: f64 = (0..3)
                .map(|k| normal_pdf(s.action[k], out[k], [-0.5f64, 0.0, 0.3][k].exp()).ln())
                .sum();
            assert!((s.log_prob - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn squash_correction_is_stable() {
        for u in [-3.0, -0.5, 0.0, 0.1, 1.7, 4.0] {
            let direct = (1.0 - f64::tanh(u).powi(2)).ln();
            assert!((log_one_minus_tanh_sq(u) - direct).abs() < 1e-9);
        }
        assert!(log_one_minus_tanh_sq(30.0).is_finite());
        assert!(log_one_minus_tanh_sq(-30.0).is_finite());
    }
}
