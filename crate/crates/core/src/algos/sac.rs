use ndarray::{s, Array2, ArrayView2, Axis};
use rand_distr::{Distribution, StandardNormal};

use super::{CriticMode, ReplaySample, SacConfig};
use crate::envs::{AgentRole, ROBOT_ACTION_DIM};
use crate::neural::{
    log_one_minus_tanh_sq, AdamState, GaussianHead, MlpParams, Policy, LOGSTD_MAX, LOGSTD_MIN,
};
use crate::rng::Rng;
use crate::vecenv::JOINT_ACTION_DIM;
use crate::{Error, Result};

const LOG_2PI: f64 = 1.837_877_066_409_345_3;

/// Column layout of a Q-network input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QLayout {
    pub obs_dim: usize,
    pub role: AgentRole,
    pub mode: CriticMode,
}

impl QLayout {
    /// Independent: `[obs, own action]`. Centralized: `[obs, obs, robot action, human action]`.
    pub fn input_dim(&self) -> usize {
        match self.mode {
            CriticMode::Independent => self.obs_dim + self.role.action_dim(),
            CriticMode::Centralized => 2 * self.obs_dim + JOINT_ACTION_DIM,
        }
    }

    /// First column of the agent's own action.
    pub fn own_action_offset(&self) -> usize {
        match self.mode {
            CriticMode::Independent => self.obs_dim,
            CriticMode::Centralized => {
                2 * self.obs_dim
                    + match self.role {
                        AgentRole::Robot => 0,
                        AgentRole::Human => ROBOT_ACTION_DIM,
                    }
            }
        }
    }

    /// Build the Q input from observations and `n × 10` joint actions.
    pub fn assemble(&self, obs: ArrayView2<f64>, joint_actions: ArrayView2<f64>) -> Array2<f64> {
        let n = obs.nrows();
        let mut x = Array2::zeros((n, self.input_dim()));
        let d = self.obs_dim;
        x.slice_mut(s![.., ..d]).assign(&obs);
        match self.mode {
            CriticMode::Independent => {
                let start = match self.role {
                    AgentRole::Robot => 0,
                    AgentRole::Human => ROBOT_ACTION_DIM,
                };
                let k = self.role.action_dim();
                x.slice_mut(s![.., d..])
                    .assign(&joint_actions.slice(s![.., start..start + k]));
            }
            CriticMode::Centralized => {
                x.slice_mut(s![.., d..2 * d]).assign(&obs);
                x.slice_mut(s![.., 2 * d..]).assign(&joint_actions);
            }
        }
        x
    }
}

/// Networks, targets, temperature and optimizers of one SAC agent.
#[derive(Clone, Debug, PartialEq)]
pub struct SacAgent {
    pub layout: QLayout,
    pub actor: Policy,
    pub q1: MlpParams,
    pub q2: MlpParams,
    pub q1_target: MlpParams,
    pub q2_target: MlpParams,
    /// Log of the entropy temperature α.
    pub log_alpha: Vec<f64>,
    pub target_entropy: f64,
    actor_opt: AdamState,
    q1_opt: AdamState,
    q2_opt: AdamState,
    alpha_opt: AdamState,
    q_updates: u64,
}

/// Diagnostics of one gradient step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SacLoss {
    pub q: f64,
    pub actor: Option<f64>,
    pub alpha: f64,
}

impl SacAgent {
    pub fn new(layout: QLayout, cfg: &SacConfig, rng: &mut Rng) -> Self {
        let act_dim = layout.role.action_dim();
        let actor = Policy::squashed(layout.obs_dim, act_dim, &cfg.hidden, rng);
        let mut sizes = vec![layout.input_dim()];
        sizes.extend_from_slice(&cfg.hidden);
        sizes.push(1);
        let q1 = MlpParams::init(&sizes, 1.0, rng);
        let q2 = MlpParams::init(&sizes, 1.0, rng);
        let log_alpha = vec![cfg.initial_alpha.ln()];
        Self {
            layout,
            actor_opt: AdamState::new(&actor, cfg.policy_lr, 1e-8),
            q1_opt: AdamState::new(&q1, cfg.q_lr, 1e-8),
            q2_opt: AdamState::new(&q2, cfg.q_lr, 1e-8),
            alpha_opt: AdamState::new(&log_alpha, cfg.alpha_lr, 1e-8),
            q1_target: q1.clone(),
            q2_target: q2.clone(),
            q1,
            q2,
            actor,
            log_alpha,
            target_entropy: -cfg.target_entropy_scale * act_dim as f64,
            q_updates: 0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha[0].exp()
    }
}

/// Reparameterized squashed samples for every row of `net_out`.
#[derive(Clone, Debug)]
pub struct SquashedBatch {
    pub actions: Array2<f64>,
    pub log_probs: Vec<f64>,
    noise: Array2<f64>,
    logstd: Array2<f64>,
    pre_tanh: Array2<f64>,
}

pub fn squashed_batch(net_out: ArrayView2<f64>, noise: Array2<f64>) -> SquashedBatch {
    let (n, k) = noise.dim();
    let mut actions = Array2::zeros((n, k));
    let mut logstd = Array2::zeros((n, k));
    let mut pre_tanh = Array2::zeros((n, k));
    let mut log_probs = vec![0.0; n];
    for i in 0..n {
        for j in 0..k {
            let ls = net_out[[i, k + j]].clamp(LOGSTD_MIN, LOGSTD_MAX);
            let e = noise[[i, j]];
            let u = net_out[[i, j]] + ls.exp() * e;
            logstd[[i, j]] = ls;
            pre_tanh[[i, j]] = u;
            actions[[i, j]] = u.tanh();
            log_probs[i] += -0.5 * e * e - ls - 0.5 * LOG_2PI - log_one_minus_tanh_sq(u);
        }
    }
    SquashedBatch {
        actions,
        log_probs,
        noise,
        logstd,
        pre_tanh,
    }
}

pub fn standard_noise(rows: usize, cols: usize, rng: &mut Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(rng))
}

fn min_q(q1: &MlpParams, q2: &MlpParams, x: ArrayView2<f64>) -> Result<Vec<f64>> {
    let a = q1.predict(x)?;
    let b = q2.predict(x)?;
    Ok(a.iter().zip(b.iter()).map(|(a, b)| a.min(*b)).collect())
}

/// Soft Bellman targets `r + γ(1 - done)(min Q'(s', a') - α log π(a'|s'))`.
///
/// `next_joint` holds the next joint action with this agent's columns
/// freshly sampled, and `next_log_probs` their log-probabilities.
pub fn sac_q_target(
    agent: &SacAgent,
    batch: &ReplaySample,
    next_obs: ArrayView2<f64>,
    next_joint: ArrayView2<f64>,
    next_log_probs: &[f64],
    gamma: f64,
) -> Result<Vec<f64>> {
    let x = agent.layout.assemble(next_obs, next_joint);
    let q = min_q(&agent.q1_target, &agent.q2_target, x.view())?;
    let alpha = agent.alpha();
    Ok((0..batch.rewards.len())
        .map(|i| {
            let live = if batch.dones[i] { 0.0 } else { 1.0 };
            batch.rewards[i] + gamma * live * (q[i] - alpha * next_log_probs[i])
        })
        .collect())
}

/// Mean squared error to `y` and its gradient.
pub fn q_loss_grad(q: &MlpParams, x: ArrayView2<f64>, y: &[f64]) -> Result<(f64, MlpParams)> {
    let (out, cache) = q.forward(x)?;
    let n = y.len() as f64;
    let mut d = Array2::zeros((y.len(), 1));
    let mut loss = 0.0;
    for i in 0..y.len() {
        let err = out[[i, 0]] - y[i];
        loss += err * err / n;
        d[[i, 0]] = 2.0 * err / n;
    }
    let (g, _) = q.backward(&cache, d.view())?;
    Ok((loss, g))
}

/// Actor objective `mean(α log π(a|s) - min(Q1, Q2)(s, a))` with `a`
/// reparameterized from `noise`, and its gradient with respect to the actor.
/// `joint` provides the other agent's action columns in centralized mode.
pub fn actor_loss_grad(
    agent: &SacAgent,
    obs: ArrayView2<f64>,
    joint: ArrayView2<f64>,
    noise: Array2<f64>,
) -> Result<(f64, Policy, Vec<f64>)> {
    let GaussianHead::TanhSquashed { act_dim } = agent.actor.head else {
        return Err(Error::contract("SAC needs a tanh-squashed head"));
    };
    let n = obs.nrows();
    let nf = n as f64;
    let (net_out, cache) = agent.actor.net.forward(obs)?;
    let sample = squashed_batch(net_out.view(), noise);
    let mut joint = joint.to_owned();
    let own = match agent.layout.role {
        AgentRole::Robot => 0,
        AgentRole::Human => ROBOT_ACTION_DIM,
    };
    joint
        .slice_mut(s![.., own..own + act_dim])
        .assign(&sample.actions);
    let x = agent.layout.assemble(obs, joint.view());
    let (o1, c1) = agent.q1.forward(x.view())?;
    let (o2, c2) = agent.q2.forward(x.view())?;
    let alpha = agent.alpha();

    let mut loss = 0.0;
    let mut pick1 = Array2::zeros((n, 1));
    let mut pick2 = Array2::zeros((n, 1));
    for i in 0..n {
        let (a, b) = (o1[[i, 0]], o2[[i, 0]]);
        loss += (alpha * sample.log_probs[i] - a.min(b)) / nf;
        if a <= b {
            pick1[[i, 0]] = -1.0 / nf;
        } else {
            pick2[[i, 0]] = -1.0 / nf;
        }
    }
    let (_, gx1) = agent.q1.backward(&c1, pick1.view())?;
    let (_, gx2) = agent.q2.backward(&c2, pick2.view())?;
    let off = agent.layout.own_action_offset();

    let mut d_out = Array2::zeros((n, 2 * act_dim));
    for i in 0..n {
        for j in 0..act_dim {
            let u = sample.pre_tanh[[i, j]];
            let t = u.tanh();
            let sigma = sample.logstd[[i, j]].exp();
            let e = sample.noise[[i, j]];
            let dq_da = gx1[[i, off + j]] + gx2[[i, off + j]];
            let da_du = 1.0 - t * t;
            // d log π / dμ = 2 tanh(u); d log π / d logσ = -1 + 2 tanh(u) σ ε
            d_out[[i, j]] = alpha * 2.0 * t / nf + dq_da * da_du;
            let raw = net_out[[i, act_dim + j]];
            if (LOGSTD_MIN..=LOGSTD_MAX).contains(&raw) {
                d_out[[i, act_dim + j]] =
                    alpha * (-1.0 + 2.0 * t * sigma * e) / nf + dq_da * da_du * sigma * e;
            }
        }
    }
    let (g, _) = agent.actor.net.backward(&cache, d_out.view())?;
    let grad = Policy {
        net: g,
        head: agent.actor.head.clone(),
    };
    Ok((loss, grad, sample.log_probs))
}

/// One gradient step for every learning agent on a shared replay sample.
///
/// A frozen role acts at the next state with the mean action of the pool
/// member named by each transition's tag.
pub fn sac_update(
    agents: &mut [&mut SacAgent],
    frozen: &[(AgentRole, Vec<&Policy>)],
    batch: &ReplaySample,
    cfg: &SacConfig,
    rng: &mut Rng,
) -> Result<Vec<SacLoss>> {
    let n = batch.rewards.len();
    let obs_dim = batch.obs.len() / n;
    let obs = ArrayView2::from_shape((n, obs_dim), &batch.obs)
        .map_err(|e| Error::contract(e.to_string()))?;
    let next_obs = ArrayView2::from_shape((n, obs_dim), &batch.next_obs)
        .map_err(|e| Error::contract(e.to_string()))?;
    let joint = ArrayView2::from_shape((n, JOINT_ACTION_DIM), &batch.actions)
        .map_err(|e| Error::contract(e.to_string()))?;

    // next joint action: learners sample, frozen partners act on their mean
    let mut next_joint = Array2::zeros((n, JOINT_ACTION_DIM));
    let mut next_logp: Vec<Vec<f64>> = Vec::with_capacity(agents.len());
    for agent in agents.iter() {
        let k = agent.layout.role.action_dim();
        let out = agent.actor.net.predict(next_obs)?;
        let sample = squashed_batch(out.view(), standard_noise(n, k, rng));
        let own = role_offset(agent.layout.role);
        next_joint
            .slice_mut(s![.., own..own + k])
            .assign(&sample.actions);
        next_logp.push(sample.log_probs);
    }
    for (role, pool) in frozen {
        let own = role_offset(*role);
        let k = role.action_dim();
        for (p, policy) in pool.iter().enumerate() {
            let rows: Vec<usize> = (0..n).filter(|&i| batch.tags[i] == p).collect();
            if rows.is_empty() {
                continue;
            }
            let mean = policy.mean_actions(next_obs.select(Axis(0), &rows).view())?;
            for (j, &i) in rows.iter().enumerate() {
                for c in 0..k {
                    next_joint[[i, own + c]] = mean[j * k + c];
                }
            }
        }
        if batch.tags.iter().any(|&t| t >= pool.len()) {
            return Err(Error::contract("replay tag names no frozen partner"));
        }
    }

    let mut out = Vec::with_capacity(agents.len());
    for (agent, logp) in agents.iter_mut().zip(&next_logp) {
        let y = sac_q_target(agent, batch, next_obs, next_joint.view(), logp, cfg.gamma)?;
        let x = agent.layout.assemble(obs, joint);
        let (l1, g1) = q_loss_grad(&agent.q1, x.view(), &y)?;
        let (l2, g2) = q_loss_grad(&agent.q2, x.view(), &y)?;
        if !(l1 + l2).is_finite() {
            return Err(Error::Diverged {
                step: 0,
                reason: "non-finite SAC critic loss".into(),
            });
        }
        agent
            .q1_opt
            .update(&mut agent.q1, &g1, Some(cfg.max_grad_norm));
        agent
            .q2_opt
            .update(&mut agent.q2, &g2, Some(cfg.max_grad_norm));
        agent.q_updates += 1;
        let mut loss = SacLoss {
            q: 0.5 * (l1 + l2),
            actor: None,
            alpha: agent.alpha(),
        };

        if agent.q_updates % cfg.policy_delay as u64 == 0 {
            let k = agent.layout.role.action_dim();
            let (la, ga, logp) = actor_loss_grad(agent, obs, joint, standard_noise(n, k, rng))?;
            if !la.is_finite() {
                return Err(Error::Diverged {
                    step: 0,
                    reason: "non-finite SAC actor loss".into(),
                });
            }
            agent
                .actor_opt
                .update(&mut agent.actor, &ga, Some(cfg.max_grad_norm));
            if cfg.autotune {
                // d/d log α of -log α (log π + H̄), averaged
                let g = -logp.iter().map(|l| l + agent.target_entropy).sum::<f64>() / n as f64;
                agent.alpha_opt.update(&mut agent.log_alpha, &vec![g], None);
            }
            loss.actor = Some(la);
            loss.alpha = agent.alpha();
        }
        agent.q1_target.polyak_from(&agent.q1, cfg.tau);
        agent.q2_target.polyak_from(&agent.q2, cfg.tau);
        out.push(loss);
    }
    Ok(out)
}

fn role_offset(role: AgentRole) -> usize {
    match role {
        AgentRole::Robot => 0,
        AgentRole::Human => ROBOT_ACTION_DIM,
    }
}

#[cfg(test)]
mod tests {
    use rand::Rng as _;

    use super::*;
    use crate::algos::ppo::tests::{random_matrix, rel_err};
    use crate::algos::ReplayBuffer;
    use crate::neural::Params;
    use crate::rng::from_seed;

    fn small_cfg() -> SacConfig {
        SacConfig {
            hidden: vec![8, 8],
            ..SacConfig::masac()
        }
    }

    fn agent(role: AgentRole, mode: CriticMode, seed: u64) -> SacAgent {
        let mut rng = from_seed(seed);
        let mut a = SacAgent::new(
            QLayout {
                obs_dim: 4,
                role,
                mode,
            },
            &small_cfg(),
            &mut rng,
        );
        for s in a.actor.slices_mut() {
            for x in s.iter_mut() {
                *x += rng.random_range(-0.5..0.5);
            }
        }
        a.log_alpha[0] = 0.3f64.ln();
        a
    }

    #[test]
    fn myopic_target_is_reward() {
        let mut a = agent(AgentRole::Robot, CriticMode::Independent, 0);
        a.log_alpha[0] = f64::NEG_INFINITY;
        let batch = ReplaySample {
            obs: vec![0.0; 8],
            actions: vec![0.1; 20],
            rewards: vec![1.5, -0.25],
            next_obs: vec![0.3; 8],
            dones: vec![false, true],
            tags: vec![0, 0],
            indices: vec![0, 1],
        };
        let next_obs = ArrayView2::from_shape((2, 4), &batch.next_obs).unwrap();
        let next_joint = Array2::zeros((2, 10));
        let y = sac_q_target(&a, &batch, next_obs, next_joint.view(), &[0.7, -0.2], 0.0).unwrap();
        assert_eq!(y, vec![1.5, -0.25]);
    }

    #[test]
    fn target_matches_hand_oracle() {
        let mut a = agent(AgentRole::Human, CriticMode::Independent, 1);
        // constant target critics: Q'1 = 2, Q'2 = 3 regardless of input
        for (q, c) in [(&mut a.q1_target, 2.0), (&mut a.q2_target, 3.0)] {
            for l in &mut q.layers {
                l.weight.fill(0.0);
                l.bias.fill(0.0);
            }
            q.layers.last_mut().unwrap().bias[0] = c;
        }
        let batch = ReplaySample {
            obs: vec![0.0; 8],
            actions: vec![0.0; 20],
            rewards: vec![1.0, 0.5],
            next_obs: vec![0.1; 8],
            dones: vec![false, true],
            tags: vec![0, 0],
            indices: vec![0, 1],
        };
        let next_obs = ArrayView2::from_shape((2, 4), &batch.next_obs).unwrap();
        let y = sac_q_target(
            &a,
            &batch,
            next_obs,
            Array2::zeros((2, 10)).view(),
            &[-1.2, 4.0],
            0.99,
        )
        .unwrap();
        assert!((y[0] - (1.0 + 0.99 * (2.0 - 0.3 * -1.2))).abs() < 1e-6);
        assert!((y[1] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn critic_gradients_match_finite_differences() {
        for seed in 0..10 {
            let a = agent(AgentRole::Robot, CriticMode::Centralized, seed);
            let mut rng = from_seed(100 + seed);
            let x = random_matrix(6, a.layout.input_dim(), &mut rng);
            let y: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (_, g) = q_loss_grad(&a.q1, x.view(), &y).unwrap();
            let gs = g.slices();
            let mut worst: f64 = 0.0;
            for (si, s) in a.q1.slices().iter().enumerate() {
                for k in 0..s.len() {
                    let (mut p, mut m) = (a.q1.clone(), a.q1.clone());
                    p.slices_mut()[si][k] += 1e-5;
                    m.slices_mut()[si][k] -= 1e-5;
                    let num = (q_loss_grad(&p, x.view(), &y).unwrap().0
                        - q_loss_grad(&m, x.view(), &y).unwrap().0)
                        / 2e-5;
                    worst = worst.max(rel_err(gs[si][k], num));
                }
            }
            assert!(worst < 1e-4, "seed {seed}: {worst}");
        }
    }

    #[test]
    fn actor_gradients_match_finite_differences() {
        for seed in 0..10 {
            let (role, mode) = if seed % 2 == 0 {
                (AgentRole::Robot, CriticMode::Independent)
            } else {
                (AgentRole::Human, CriticMode::Centralized)
            };
            let a = agent(role, mode, seed);
            let mut rng = from_seed(200 + seed);
            let obs = random_matrix(5, 4, &mut rng);
            let joint = random_matrix(5, 10, &mut rng);
            let noise = standard_noise(5, role.action_dim(), &mut rng);
            let (_, g, _) = actor_loss_grad(&a, obs.view(), joint.view(), noise.clone()).unwrap();
            let loss = |p: &Policy| {
                let mut b = a.clone();
                b.actor = p.clone();
                actor_loss_grad(&b, obs.view(), joint.view(), noise.clone())
                    .unwrap()
                    .0
            };
            let gs = g.slices();
            let mut worst: f64 = 0.0;
            for (si, s) in a.actor.slices().iter().enumerate() {
                for k in 0..s.len() {
                    let (mut p, mut m) = (a.actor.clone(), a.actor.clone());
                    p.slices_mut()[si][k] += 1e-5;
                    m.slices_mut()[si][k] -= 1e-5;
                    worst = worst.max(rel_err(gs[si][k], (loss(&p) - loss(&m)) / 2e-5));
                }
            }
            assert!(worst < 1e-4, "seed {seed}: {worst}");
        }
    }

    #[test]
    fn batched_log_probs_match_head() {
        let mut rng = from_seed(4);
        let out = random_matrix(7, 6, &mut rng);
        let noise = standard_noise(7, 3, &mut rng);
        let batch = squashed_batch(out.view(), noise.clone());
        let head = GaussianHead::TanhSquashed { act_dim: 3 };
        for i in 0..7 {
            let s = head.sample_with_noise(&out.row(i).to_vec(), noise.row(i).to_vec());
            assert!((s.log_prob - batch.log_probs[i]).abs() < 1e-12);
            assert_eq!(s.action, batch.actions.row(i).to_vec());
        }
    }

    #[test]
    fn frozen_policy_regression_shrinks_bellman_residual() {
        let cfg = SacConfig {
            q_lr: 3e-3,
            ..small_cfg()
        };
        let mut rng = from_seed(5);
        let mut a = SacAgent::new(
            QLayout {
                obs_dim: 4,
                role: AgentRole::Robot,
                mode: CriticMode::Independent,
            },
            &cfg,
            &mut rng,
        );
        let mut buf = ReplayBuffer::new(256, 4, 10);
        for _ in 0..256 {
            let o: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let act: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
            let r = o[0] - act[0];
            let o2: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            buf.push(&o, &act, r, &o2, false);
        }
        let all = buf.sample(256, &mut from_seed(0)).unwrap();
        let obs = ArrayView2::from_shape((256, 4), &all.obs)
            .unwrap()
            .to_owned();
        let next_obs = ArrayView2::from_shape((256, 4), &all.next_obs)
            .unwrap()
            .to_owned();
        let joint = ArrayView2::from_shape((256, 10), &all.actions)
            .unwrap()
            .to_owned();
        // frozen behavior and frozen targets: fixed regression problem
        let out = a.actor.net.predict(next_obs.view()).unwrap();
        let sample = squashed_batch(out.view(), standard_noise(256, 7, &mut rng));
        let mut next_joint = Array2::zeros((256, 10));
        next_joint.slice_mut(s![.., 0..7]).assign(&sample.actions);
        let y = sac_q_target(
            &a,
            &all,
            next_obs.view(),
            next_joint.view(),
            &sample.log_probs,
            cfg.gamma,
        )
        .unwrap();
        let x = a.layout.assemble(obs.view(), joint.view());
        let mut prev = f64::INFINITY;
        let mut first = None;
        let mut violations = 0;
        for _ in 0..100 {
            let (l, g) = q_loss_grad(&a.q1, x.view(), &y).unwrap();
            first.get_or_insert(l);
            if l > prev {
                violations += 1;
            }
            prev = l;
            a.q1_opt.update(&mut a.q1, &g, Some(cfg.max_grad_norm));
        }
        assert!(prev < 0.5 * first.unwrap());
        assert!(violations <= 5, "{violations} increases");
    }

    #[test]
    fn update_runs_for_a_learning_pair() {
        let cfg = small_cfg();
        let mut rng = from_seed(6);
        let mut r = agent(AgentRole::Robot, CriticMode::Centralized, 10);
        let mut h = agent(AgentRole::Human, CriticMode::Centralized, 11);
        let mut buf = ReplayBuffer::new(64, 4, 10);
        for _ in 0..64 {
            let o: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let act: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
            buf.push(&o, &act, 1.0, &o, false);
        }
        let before = r.q1.clone();
        for _ in 0..cfg.policy_delay {
            let batch = buf.sample(16, &mut rng).unwrap();
            let losses = sac_update(&mut [&mut r, &mut h], &[], &batch, &cfg, &mut rng).unwrap();
            assert_eq!(losses.len(), 2);
        }
        assert_ne!(r.q1, before);
        assert_ne!(r.q1_target, before);
        assert_ne!(h.log_alpha[0], 0.3f64.ln());
    }

    #[test]
    fn frozen_next_actions_follow_the_transition_tag() {
        let cfg = small_cfg();
        let mut rng = from_seed(8);
        let p0 = Policy::gaussian(4, 3, &[5], 0.0, &mut rng);
        let p1 = Policy::gaussian(4, 3, &[5], 0.0, &mut rng);
        let mut buf_tagged = ReplayBuffer::new(32, 4, 10);
        let mut buf_plain = ReplayBuffer::new(32, 4, 10);
        for _ in 0..32 {
            let o: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let o2: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let act: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
            buf_tagged.push_tagged(&o, &act, 0.5, &o2, false, 1);
            buf_plain.push(&o, &act, 0.5, &o2, false);
        }
        let base = agent(AgentRole::Robot, CriticMode::Centralized, 12);
        let (mut a, mut b) = (base.clone(), base);
        let batch_a = buf_tagged.sample(16, &mut from_seed(1)).unwrap();
        let batch_b = buf_plain.sample(16, &mut from_seed(1)).unwrap();
        sac_update(
            &mut [&mut a],
            &[(AgentRole::Human, vec![&p0, &p1])],
            &batch_a,
            &cfg,
            &mut from_seed(2),
        )
        .unwrap();
        sac_update(
            &mut [&mut b],
            &[(AgentRole::Human, vec![&p1])],
            &batch_b,
            &cfg,
            &mut from_seed(2),
        )
        .unwrap();
        assert_eq!(a.q1, b.q1);
        let mut c = agent(AgentRole::Robot, CriticMode::Centralized, 12);
        sac_update(
            &mut [&mut c],
            &[(AgentRole::Human, vec![&p0])],
            &batch_b,
            &cfg,
            &mut from_seed(2),
        )
        .unwrap();
        assert_ne!(c.q1, b.q1);
        assert!(sac_update(
            &mut [&mut c],
            &[(AgentRole::Human, vec![&p0])],
            &batch_a,
            &cfg,
            &mut from_seed(2)
        )
        .is_err());
    }
}
