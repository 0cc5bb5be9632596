use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// PPO hyperparameters. `Default` is the IPPO setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    pub rollout_steps: usize,
    pub num_envs: usize,
    pub epochs: usize,
    pub minibatches: usize,
    pub lr: f64,
    pub anneal_lr: bool,
    pub entropy_coef: f64,
    pub clip_eps: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub value_coef: f64,
    pub max_grad_norm: f64,
    pub adam_eps: f64,
    /// Divide rewards by the running standard deviation of the discounted return.
    pub normalize_rewards: bool,
    pub hidden: Vec<usize>,
    /// Initial log standard deviation of the action distribution.
    pub init_logstd: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self::ippo()
    }
}

impl PpoConfig {
    pub fn ippo() -> Self {
        Self {
            rollout_steps: 64,
            num_envs: 1024,
            epochs: 4,
            minibatches: 4,
            lr: 1e-3,
            anneal_lr: false,
            entropy_coef: 1e-4,
            clip_eps: 0.31,
            gamma: 0.99,
            gae_lambda: 0.95,
            value_coef: 1.0,
            max_grad_norm: 0.5,
            adam_eps: 1e-8,
            normalize_rewards: true,
            hidden: vec![64, 64],
            init_logstd: 0.0,
        }
    }

    pub fn mappo() -> Self {
        Self {
            rollout_steps: 128,
            lr: 4.4e-3,
            entropy_coef: 2.7e-4,
            clip_eps: 0.11,
            ..Self::ippo()
        }
    }

    /// Environment steps gathered per update.
    pub fn batch_steps(&self) -> u64 {
        (self.rollout_steps * self.num_envs) as u64
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("ppo.rollout_steps", self.rollout_steps),
            ("ppo.num_envs", self.num_envs),
            ("ppo.epochs", self.epochs),
            ("ppo.minibatches", self.minibatches),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(Error::config(key, "must be positive"));
            }
        }
        if self.minibatches > self.rollout_steps * self.num_envs {
            return Err(Error::config("ppo.minibatches", "exceeds the rollout size"));
        }
        if !(self.lr > 0.0) {
            return Err(Error::config("ppo.lr", "must be positive"));
        }
        if !(self.clip_eps > 0.0) {
            return Err(Error::config("ppo.clip_eps", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("ppo.gamma", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(Error::config("ppo.gae_lambda", "must lie in [0, 1]"));
        }
        if !(self.max_grad_norm > 0.0) {
            return Err(Error::config("ppo.max_grad_norm", "must be positive"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::config("ppo.hidden", "layer widths must be positive"));
        }
        Ok(())
    }
}

/// Soft actor-critic hyperparameters. `Default` is the ISAC setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SacConfig {
    /// Environment steps of uniform random actions before learning starts.
    pub exploration_steps: u64,
    /// Critic updates per actor update.
    pub policy_delay: usize,
    pub buffer_size: usize,
    pub batch_size: usize,
    pub policy_lr: f64,
    pub q_lr: f64,
    pub alpha_lr: f64,
    pub max_grad_norm: f64,
    pub tau: f64,
    pub gamma: f64,
    pub updates_per_iteration: usize,
    /// Batched environment steps per iteration.
    pub rollout_length: usize,
    pub autotune: bool,
    /// Target entropy is `-target_entropy_scale * action_dim`.
    pub target_entropy_scale: f64,
    pub initial_alpha: f64,
    pub num_envs: usize,
    pub hidden: Vec<usize>,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self::isac()
    }
}

impl SacConfig {
    pub fn isac() -> Self {
        Self {
            exploration_steps: 5000,
            policy_delay: 4,
            buffer_size: 1_000_000,
            batch_size: 128,
            policy_lr: 3e-4,
            q_lr: 1e-3,
            alpha_lr: 3e-4,
            max_grad_norm: 10.0,
            tau: 0.005,
            gamma: 0.99,
            updates_per_iteration: 32,
            rollout_length: 8,
            autotune: true,
            target_entropy_scale: 5.0,
            initial_alpha: 0.1,
            num_envs: 64,
            hidden: vec![64, 64],
        }
    }

    pub fn masac() -> Self {
        Self {
            q_lr: 1e-4,
            ..Self::isac()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sac.policy_delay", self.policy_delay),
            ("sac.buffer_size", self.buffer_size),
            ("sac.batch_size", self.batch_size),
            ("sac.updates_per_iteration", self.updates_per_iteration),
            ("sac.rollout_length", self.rollout_length),
            ("sac.num_envs", self.num_envs),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(Error::config(key, "must be positive"));
            }
        }
        for (key, v) in [
            ("sac.policy_lr", self.policy_lr),
            ("sac.q_lr", self.q_lr),
            ("sac.alpha_lr", self.alpha_lr),
        ] {
            if !(v > 0.0) {
                return Err(Error::config(key, "must be positive"));
            }
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::config("sac.tau", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("sac.gamma", "must lie in [0, 1]"));
        }
        if !(self.initial_alpha > 0.0) {
            return Err(Error::config("sac.initial_alpha", "must be positive"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::config("sac.hidden", "layer widths must be positive"));
        }
        Ok(())
    }
}
