use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::gae::normalize_advantages;
use super::PpoConfig;
use crate::neural::{
    gaussian_entropy, AdamState, GaussianHead, MlpParams, Params, Policy, LOGSTD_MAX, LOGSTD_MIN,
};
use crate::rng::Rng;
use crate::{Error, Result};

const LOG_2PI: f64 = 1.837_877_066_409_345_3;

/// Actor, critic and their optimizers for one PPO agent.
#[derive(Clone, Debug, PartialEq)]
pub struct PpoAgent {
    pub actor: Policy,
    pub critic: MlpParams,
    actor_opt: AdamState,
    critic_opt: AdamState,
}

impl PpoAgent {
    pub fn new(
        obs_dim: usize,
        critic_dim: usize,
        act_dim: usize,
        cfg: &PpoConfig,
        rng: &mut Rng,
    ) -> Self {
        let actor = Policy::gaussian(obs_dim, act_dim, &cfg.hidden, cfg.init_logstd, rng);
        let mut sizes = vec![critic_dim];
        sizes.extend_from_slice(&cfg.hidden);
        sizes.push(1);
        let critic = MlpParams::init(&sizes, 1.0, rng);
        let actor_opt = AdamState::new(&actor, cfg.lr, cfg.adam_eps);
        let critic_opt = AdamState::new(&critic, cfg.lr, cfg.adam_eps);
        Self {
            actor,
            critic,
            actor_opt,
            critic_opt,
        }
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.actor_opt.lr = lr;
        self.critic_opt.lr = lr;
    }
}

/// Training data for one agent, one row per environment step.
#[derive(Clone, Debug)]
pub struct PpoData {
    pub obs: Array2<f64>,
    pub critic_obs: Array2<f64>,
    pub actions: Array2<f64>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub targets: Vec<f64>,
}

impl PpoData {
    pub fn len(&self) -> usize {
        self.old_log_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.old_log_probs.is_empty()
    }

    fn select(&self, idx: &[usize]) -> PpoData {
        PpoData {
            obs: self.obs.select(Axis(0), idx),
            critic_obs: self.critic_obs.select(Axis(0), idx),
            actions: self.actions.select(Axis(0), idx),
            old_log_probs: idx.iter().map(|&i| self.old_log_probs[i]).collect(),
            advantages: idx.iter().map(|&i| self.advantages[i]).collect(),
            targets: idx.iter().map(|&i| self.targets[i]).collect(),
        }
    }
}

/// Loss terms of one minibatch; `total = policy + value - entropy_coef * entropy`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PpoLoss {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

fn logstd_of(actor: &Policy) -> Result<&[f64]> {
    match &actor.head {
        GaussianHead::StateIndependent { logstd } => Ok(logstd),
        GaussianHead::TanhSquashed { .. } => Err(Error::contract(
            "PPO needs a state-independent Gaussian head",
        )),
    }
}

/// Loss and exact gradients for `actor` and `critic` on `mb`. Advantages are
/// used as given.
pub fn ppo_loss_grad(
    actor: &Policy,
    critic: &MlpParams,
    mb: &PpoData,
    cfg: &PpoConfig,
) -> Result<(PpoLoss, Policy, MlpParams)> {
    let raw_logstd = logstd_of(actor)?;
    let b = mb.len();
    if b == 0 {
        return Err(Error::contract("empty minibatch"));
    }
    let bf = b as f64;
    let logstd: Vec<f64> = raw_logstd
        .iter()
        .map(|l| l.clamp(LOGSTD_MIN, LOGSTD_MAX))
        .collect();
    let inv_var: Vec<f64> = logstd.iter().map(|l| (-2.0 * l).exp()).collect();
    let act_dim = logstd.len();

    let (mean, actor_cache) = actor.net.forward(mb.obs.view())?;
    let mut d_mean = Array2::<f64>::zeros((b, act_dim));
    let mut d_logstd = vec![0.0; act_dim];
    let (mut policy_loss, mut kl, mut clipped) = (0.0, 0.0, 0.0);
    let (lo, hi) = (1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
    for i in 0..b {
        let mut logp = 0.0;
        for k in 0..act_dim {
            let diff = mb.actions[[i, k]] - mean[[i, k]];
            logp += -0.5 * diff * diff * inv_var[k] - logstd[k] - 0.5 * LOG_2PI;
        }
        let log_ratio = logp - mb.old_log_probs[i];
        let ratio = log_ratio.exp();
        let a = mb.advantages[i];
        let unclipped = ratio * a;
        let clipped_obj = ratio.clamp(lo, hi) * a;
        policy_loss -= unclipped.min(clipped_obj) / bf;
        kl += ((ratio - 1.0) - log_ratio) / bf;
        if !(lo..=hi).contains(&ratio) {
            clipped += 1.0 / bf;
        }
        // d(loss)/d(logp): only the unclipped branch carries gradient
        let g = if unclipped <= clipped_obj {
            -unclipped / bf
        } else {
            0.0
        };
        if g != 0.0 {
            for k in 0..act_dim {
                let diff = mb.actions[[i, k]] - mean[[i, k]];
                d_mean[[i, k]] = g * diff * inv_var[k];
                d_logstd[k] += g * (diff * diff * inv_var[k] - 1.0);
            }
        }
    }
    let entropy = gaussian_entropy(&logstd);
    for (k, d) in d_logstd.iter_mut().enumerate() {
        *d -= cfg.entropy_coef;
        if raw_logstd[k] < LOGSTD_MIN || raw_logstd[k] > LOGSTD_MAX {
            *d = 0.0;
        }
    }
    let (net_grad, _) = actor.net.backward(&actor_cache, d_mean.view())?;

    let (values, critic_cache) = critic.forward(mb.critic_obs.view())?;
    let mut d_values = Array2::<f64>::zeros((b, 1));
    let mut value_loss = 0.0;
    for i in 0..b {
        let err = values[[i, 0]] - mb.targets[i];
        value_loss += cfg.value_coef * err * err / bf;
        d_values[[i, 0]] = 2.0 * cfg.value_coef * err / bf;
    }
    let (critic_grad, _) = critic.backward(&critic_cache, d_values.view())?;

    let loss = PpoLoss {
        total: policy_loss + value_loss - cfg.entropy_coef * entropy,
        policy: policy_loss,
        value: value_loss,
        entropy,
        approx_kl: kl,
        clip_fraction: clipped,
    };
    let actor_grad = Policy {
        net: net_grad,
        head: GaussianHead::StateIndependent { logstd: d_logstd },
    };
    Ok((loss, actor_grad, critic_grad))
}

/// Epochs of shuffled minibatch updates with per-minibatch advantage
/// normalization. Returns the mean loss terms over all minibatches.
pub fn ppo_update(
    agent: &mut PpoAgent,
    data: &PpoData,
    cfg: &PpoConfig,
    rng: &mut Rng,
) -> Result<PpoLoss> {
    let n = data.len();
    let mb_size = n / cfg.minibatches;
    if mb_size == 0 {
        return Err(Error::contract("fewer samples than minibatches"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut acc = PpoLoss::default();
    let mut count = 0.0;
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for chunk in order.chunks_exact(mb_size) {
            let mut mb = data.select(chunk);
            normalize_advantages(&mut mb.advantages);
            let (loss, ag, cg) = ppo_loss_grad(&agent.actor, &agent.critic, &mb, cfg)?;
            if !loss.total.is_finite() {
                return Err(Error::Diverged {
                    step: 0,
                    reason: format!("non-finite PPO loss {loss:?}"),
                });
            }
            agent
                .actor_opt
                .update(&mut agent.actor, &ag, Some(cfg.max_grad_norm));
            agent
                .critic_opt
                .update(&mut agent.critic, &cg, Some(cfg.max_grad_norm));
            acc.total += loss.total;
            acc.policy += loss.policy;
            acc.value += loss.value;
            acc.entropy += loss.entropy;
            acc.approx_kl += loss.approx_kl;
            acc.clip_fraction += loss.clip_fraction;
            count += 1.0;
        }
    }
    if agent
        .actor
        .slices()
        .iter()
        .chain(agent.critic.slices().iter())
        .any(|s| s.iter().any(|x| !x.is_finite()))
    {
        return Err(Error::Diverged {
            step: 0,
            reason: "non-finite PPO parameters".into(),
        });
    }
    Ok(PpoLoss {
        total: acc.total / count,
        policy: acc.policy / count,
        value: acc.value / count,
        entropy: acc.entropy / count,
        approx_kl: acc.approx_kl / count,
        clip_fraction: acc.clip_fraction / count,
    })
}

/// Values of the critic for every row of `obs`.
pub(crate) fn critic_values(critic: &MlpParams, obs: ArrayView2<f64>) -> Result<Vec<f64>> {
    Ok(critic.predict(obs)?.into_raw_vec_and_offset().0)
}
