use std::time::Instant;

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::normalize::RewardScaler;
use super::ppo::critic_values;
use super::{
    compute_gae, ppo_update, sac_update, squashed_batch, standard_noise, Algorithm, CriticMode,
    PpoAgent, PpoConfig, PpoData, QLayout, ReplayBuffer, SacAgent, SacConfig,
};
use crate::envs::{AgentRole, DisabilityProfile, EnvSpec, TaskId};
use crate::metrics::{MetricSummary, RunLog, RunLogRow};
use crate::neural::Policy;
use crate::rng::{derive_seed, from_seed, stream, Rng};
use crate::vecenv::{vreset_spec, BatchObs, BatchState, JOINT_ACTION_DIM};
use crate::{Error, Result};

/// A frozen teammate: its policy and the disability it was trained with.
#[derive(Clone, Debug, PartialEq)]
pub struct Partner {
    pub label: String,
    pub policy: Policy,
    pub disability: DisabilityProfile,
}

/// How one role is controlled during training.
#[derive(Clone, Debug, PartialEq)]
pub enum RoleSpec {
    Learner,
    /// Frozen policies; every environment instance draws one uniformly at
    /// each reset and plays the episode with that partner's disability.
    Frozen(Vec<Partner>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TeamSpec {
    pub robot: RoleSpec,
    pub human: RoleSpec,
    /// Extra partners for the frozen role, evaluated in a second run log but
    /// never trained against.
    pub held_out: Vec<Partner>,
}

impl TeamSpec {
    /// Both roles learn.
    pub fn co_training() -> Self {
        Self {
            robot: RoleSpec::Learner,
            human: RoleSpec::Learner,
            held_out: Vec::new(),
        }
    }

    /// The robot learns against a pool of frozen humans.
    pub fn robot_with_partners(partners: Vec<Partner>) -> Self {
        Self {
            robot: RoleSpec::Learner,
            human: RoleSpec::Frozen(partners),
            held_out: Vec::new(),
        }
    }

    pub fn role(&self, role: AgentRole) -> &RoleSpec {
        match role {
            AgentRole::Robot => &self.robot,
            AgentRole::Human => &self.human,
        }
    }

    pub fn learners(&self) -> Vec<AgentRole> {
        AgentRole::BOTH
            .into_iter()
            .filter(|r| *self.role(*r) == RoleSpec::Learner)
            .collect()
    }

    fn frozen_role(&self) -> Option<(AgentRole, &[Partner])> {
        AgentRole::BOTH
            .into_iter()
            .find_map(|r| match self.role(r) {
                RoleSpec::Frozen(p) => Some((r, p.as_slice())),
                RoleSpec::Learner => None,
            })
    }

    pub fn validate(&self, task: TaskId) -> Result<()> {
        if self.learners().is_empty() {
            return Err(Error::config("team", "at least one role must learn"));
        }
        for role in AgentRole::BOTH {
            if let RoleSpec::Frozen(pool) = self.role(role) {
                if pool.is_empty() {
                    return Err(Error::config(
                        "team",
                        format!("empty partner pool for the {role}"),
                    ));
                }
                check_partners(task, role, pool)?;
            }
        }
        match self.frozen_role() {
            Some((role, _)) => check_partners(task, role, &self.held_out)?,
            None if !self.held_out.is_empty() => {
                return Err(Error::config(
                    "team",
                    "held-out partners need a frozen role",
                ));
            }
            None => {}
        }
        Ok(())
    }
}

fn check_partners(task: TaskId, role: AgentRole, pool: &[Partner]) -> Result<()> {
    for p in pool {
        p.policy.validate()?;
        if p.policy.act_dim() != role.action_dim() || p.policy.obs_dim() != task.obs_dim() {
            return Err(Error::config(
                "partner",
                format!(
                    "`{}` maps {} observations to {} actions; the {role} on {task} needs {} to {}",
                    p.label,
                    p.policy.obs_dim(),
                    p.policy.act_dim(),
                    task.obs_dim(),
                    role.action_dim()
                ),
            ));
        }
        p.disability.validate()?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AlgoConfig {
    Ppo(PpoConfig),
    Sac(SacConfig),
}

/// Everything a training run needs besides task, algorithm and team.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub env: EnvSpec,
    /// Human disability when the human learns.
    pub disability: DisabilityProfile,
    pub algo: AlgoConfig,
    /// Environment steps between evaluations; 0 evaluates only at the end.
    pub eval_every: u64,
    pub eval_episodes: usize,
    pub run_id: String,
}

impl TrainConfig {
    pub fn new(task: TaskId, algorithm: Algorithm) -> Self {
        Self {
            env: EnvSpec::new(task),
            disability: DisabilityProfile::default(),
            algo: algorithm.default_config(),
            eval_every: 100_000,
            eval_episodes: 8,
            run_id: format!("{}-{}", algorithm.name(), task.name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    Diverged { env_step: u64, reason: String },
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Learned policy per role (`None` for frozen roles), indexed by [`AgentRole::index`].
    pub policies: [Option<Policy>; 2],
    /// Evaluation against the training conditions.
    pub log: RunLog,
    /// Evaluation against held-out partners, when any were given.
    pub held_out_log: Option<RunLog>,
    /// Episode returns of the last evaluation.
    pub final_returns: Vec<f64>,
    pub held_out_final_returns: Vec<f64>,
    pub env_steps: u64,
    pub status: RunStatus,
    /// How often each frozen partner was drawn at a reset.
    pub partner_draws: Vec<u64>,
}

impl TrainOutcome {
    pub fn policy(&self, role: AgentRole) -> Option<&Policy> {
        self.policies[role.index()].as_ref()
    }
}

/// Noise-free returns of one episode per entry of `teams`: `(robot, human, disability)`.
/// Episode `i` resets from `stream(seed, i)`.
pub fn evaluate_team(
    spec: &EnvSpec,
    teams: &[(&Policy, &Policy, DisabilityProfile)],
    seed: u64,
) -> Result<Vec<f64>> {
    teams
        .par_iter()
        .enumerate()
        .map(|(i, (robot, human, disability))| {
            let (mut state, obs) = spec.reset(*disability, stream(seed, i as u64))?;
            let mut obs = obs.robot.0;
            let mut ret = 0.0;
            loop {
                let ra = robot.mean_action(&obs)?;
                let ha = human.mean_action(&obs)?;
                let (r, done) = state.step_in_place(&ra, &ha)?;
                ret += r;
                if done {
                    return Ok(ret);
                }
                obs.clear();
                crate::envs::write_observation(&state, &mut obs);
            }
        })
        .collect()
}

enum Learner {
    Ppo(Box<PpoAgent>),
    Sac(Box<SacAgent>),
}

impl Learner {
    fn actor(&self) -> &Policy {
        match self {
            Learner::Ppo(a) => &a.actor,
            Learner::Sac(a) => &a.actor,
        }
    }
}

/// Per-role controller during a run.
enum Controller {
    Learner(Learner),
    Frozen(Vec<Partner>),
}

struct Run<'a> {
    task: TaskId,
    algorithm: Algorithm,
    cfg: &'a TrainConfig,
    spec: &'a TeamSpec,
    seed: u64,
    controllers: [Controller; 2],
    /// Partner index per instance for the frozen role.
    assignment: Vec<usize>,
    draws: Vec<u64>,
    rng: Rng,
    log: RunLog,
    held_out_log: RunLog,
    final_returns: Vec<f64>,
    held_out_final: Vec<f64>,
    started: Instant,
    next_eval: u64,
}

/// Train the learning roles of `spec` on `task` for `total_steps`
/// environment steps. Deterministic given `seed`.
pub fn train_team(
    task: TaskId,
    algorithm: Algorithm,
    spec: &TeamSpec,
    cfg: &TrainConfig,
    total_steps: u64,
    seed: u64,
) -> Result<TrainOutcome> {
    spec.validate(task)?;
    cfg.env.validate()?;
    cfg.disability.validate()?;
    if cfg.env.task != task {
        return Err(Error::config(
            "task",
            "environment spec is for a different task",
        ));
    }
    if matches!(algorithm, Algorithm::Ppo | Algorithm::Sac) && spec.learners().len() != 1 {
        return Err(Error::config(
            "algorithm",
            format!("{algorithm} trains exactly one role"),
        ));
    }
    let mut rng = from_seed(derive_seed(seed, 0));
    let obs_dim = task.obs_dim();
    let mode = algorithm.critic_mode();
    let critic_dim = match mode {
        CriticMode::Independent => obs_dim,
        CriticMode::Centralized => 2 * obs_dim,
    };
    let mut make = |role: AgentRole| -> Result<Controller> {
        Ok(match spec.role(role) {
            RoleSpec::Frozen(p) => Controller::Frozen(p.clone()),
            RoleSpec::Learner => Controller::Learner(match (&cfg.algo, algorithm.is_ppo()) {
                (AlgoConfig::Ppo(c), true) => {
                    c.validate()?;
                    Learner::Ppo(Box::new(PpoAgent::new(
                        obs_dim,
                        critic_dim,
                        role.action_dim(),
                        c,
                        &mut rng,
                    )))
                }
                (AlgoConfig::Sac(c), false) => {
                    c.validate()?;
                    Learner::Sac(Box::new(SacAgent::new(
                        QLayout {
                            obs_dim,
                            role,
                            mode,
                        },
                        c,
                        &mut rng,
                    )))
                }
                _ => {
                    return Err(Error::config(
                        "algo",
                        format!("configuration does not fit {algorithm}"),
                    ))
                }
            }),
        })
    };
    let controllers = [make(AgentRole::Robot)?, make(AgentRole::Human)?];
    let pool_len = spec.frozen_role().map_or(0, |(_, p)| p.len());

    let mut run = Run {
        task,
        algorithm,
        cfg,
        spec,
        seed,
        controllers,
        assignment: Vec::new(),
        draws: vec![0; pool_len],
        rng,
        log: RunLog::default(),
        held_out_log: RunLog::default(),
        final_returns: Vec::new(),
        held_out_final: Vec::new(),
        started: Instant::now(),
        next_eval: 0,
    };

    let mut env_steps = 0;
    let status = if total_steps == 0 {
        RunStatus::Completed
    } else {
        let result = match cfg.algo.clone() {
            AlgoConfig::Ppo(c) => run.train_ppo(&c, total_steps, &mut env_steps),
            AlgoConfig::Sac(c) => run.train_sac(&c, total_steps, &mut env_steps),
        };
        match result {
            Ok(()) => {
                run.evaluate(env_steps)?;
                RunStatus::Completed
            }
            Err(Error::Diverged { reason, .. }) => RunStatus::Diverged {
                env_step: env_steps,
                reason,
            },
            Err(e) => return Err(e),
        }
    };

    let policies =
        [AgentRole::Robot, AgentRole::Human].map(|r| match &run.controllers[r.index()] {
            Controller::Learner(l) => Some(l.actor().clone()),
            Controller::Frozen(_) => None,
        });
    Ok(TrainOutcome {
        policies,
        log: run.log,
        held_out_log: (!spec.held_out.is_empty()).then_some(run.held_out_log),
        final_returns: run.final_returns,
        held_out_final_returns: run.held_out_final,
        env_steps,
        status,
        partner_draws: run.draws,
    })
}

impl Run<'_> {
    fn frozen_pool(&self) -> Option<(AgentRole, &[Partner])> {
        AgentRole::BOTH
            .into_iter()
            .find_map(|r| match &self.controllers[r.index()] {
                Controller::Frozen(p) => Some((r, p.as_slice())),
                Controller::Learner(_) => None,
            })
    }

    fn draw_partner(&mut self) -> usize {
        let i = self.rng.random_range(0..self.draws.len());
        self.draws[i] += 1;
        i
    }

    fn reset_batch(&mut self, num_envs: usize) -> Result<(BatchState, BatchObs)> {
        let profiles: Vec<DisabilityProfile> = if self.draws.is_empty() {
            vec![self.cfg.disability]
        } else {
            self.assignment = (0..num_envs).map(|_| self.draw_partner()).collect();
            let (_, pool) = self
                .frozen_pool()
                .expect("pool exists when draws are tracked");
            self.assignment
                .iter()
                .map(|&i| pool[i].disability)
                .collect()
        };
        vreset_spec(self.cfg.env, num_envs, derive_seed(self.seed, 1), &profiles)
    }

    /// Step the batch, redrawing partners of instances that reset.
    fn vstep(&mut self, batch: &mut BatchState, joint: &[f64]) -> Result<crate::vecenv::VStep> {
        if self.draws.is_empty() {
            return batch.vstep(joint);
        }
        let n_partners = self.draws.len();
        let (_, pool) = self
            .frozen_pool()
            .expect("pool exists when draws are tracked");
        let profiles: Vec<DisabilityProfile> = pool.iter().map(|p| p.disability).collect();
        let mut draws = std::mem::take(&mut self.draws);
        let rng = &mut self.rng;
        let assignment = &mut self.assignment;
        let out = batch.vstep_with(joint, |i, _| {
            let k = rng.random_range(0..n_partners);
            draws[k] += 1;
            assignment[i] = k;
            profiles[k]
        });
        self.draws = draws;
        out
    }

    /// Mean actions of the frozen role for every instance, row-major.
    fn frozen_actions(&self, obs: ArrayView2<f64>) -> Result<Option<(AgentRole, Vec<f64>)>> {
        let Some((role, pool)) = self.frozen_pool() else {
            return Ok(None);
        };
        let k = role.action_dim();
        let mut out = vec![0.0; obs.nrows() * k];
        for (p, partner) in pool.iter().enumerate() {
            let rows: Vec<usize> = (0..obs.nrows())
                .filter(|&i| self.assignment[i] == p)
                .collect();
            if rows.is_empty() {
                continue;
            }
            let acts = partner
                .policy
                .mean_actions(obs.select(Axis(0), &rows).view())?;
            for (j, &i) in rows.iter().enumerate() {
                out[i * k..(i + 1) * k].copy_from_slice(&acts[j * k..(j + 1) * k]);
            }
        }
        Ok(Some((role, out)))
    }

    fn maybe_evaluate(&mut self, env_steps: u64) -> Result<()> {
        if self.cfg.eval_every > 0 && env_steps >= self.next_eval {
            self.evaluate(env_steps)?;
            while self.next_eval <= env_steps {
                self.next_eval += self.cfg.eval_every;
            }
        }
        Ok(())
    }

    fn evaluate(&mut self, env_steps: u64) -> Result<()> {
        if self.log.last().is_some_and(|r| r.env_step == env_steps) {
            return Ok(());
        }
        let eval_seed = derive_seed(self.seed, 2);
        let returns = self.evaluate_with(None, eval_seed)?;
        let row = self.row(env_steps, &returns, "")?;
        self.log.rows.push(row);
        self.final_returns = returns;
        if !self.spec.held_out.is_empty() {
            let returns = self.evaluate_with(Some(&self.spec.held_out), eval_seed)?;
            let row = self.row(env_steps, &returns, "-held-out")?;
            self.held_out_log.rows.push(row);
            self.held_out_final = returns;
        }
        Ok(())
    }

    /// Episodes cycle through the frozen pool (or `partners`, if given).
    fn evaluate_with(&self, partners: Option<&[Partner]>, seed: u64) -> Result<Vec<f64>> {
        let frozen = self.frozen_pool();
        let pool = partners.or(frozen.map(|(_, p)| p));
        let mut teams = Vec::with_capacity(self.cfg.eval_episodes);
        for e in 0..self.cfg.eval_episodes {
            let partner = pool.map(|p| &p[e % p.len()]);
            let pick = |role: AgentRole| match &self.controllers[role.index()] {
                Controller::Learner(l) => l.actor(),
                Controller::Frozen(_) => &partner.expect("frozen role has partners").policy,
            };
            let disability = partner.map_or(self.cfg.disability, |p| p.disability);
            teams.push((pick(AgentRole::Robot), pick(AgentRole::Human), disability));
        }
        evaluate_team(&self.cfg.env, &teams, seed)
    }

    fn row(&self, env_steps: u64, returns: &[f64], suffix: &str) -> Result<RunLogRow> {
        let summary =
            MetricSummary::from_runs(&[returns.to_vec()], 1000, derive_seed(self.seed, env_steps))?;
        Ok(RunLogRow {
            run_id: format!("{}{suffix}", self.cfg.run_id),
            task: self.task,
            algorithm: self.algorithm.name().to_owned(),
            seed: self.seed,
            env_step: env_steps,
            eval_return_iqm: summary.iqm,
            eval_return_ci_lo: summary.ci_lo,
            eval_return_ci_hi: summary.ci_hi,
            wallclock_s: self.started.elapsed().as_secs_f64(),
        })
    }

    fn train_ppo(&mut self, cfg: &PpoConfig, total_steps: u64, env_steps: &mut u64) -> Result<()> {
        let n = cfg.num_envs;
        let t_len = cfg.rollout_steps;
        let obs_dim = self.task.obs_dim();
        let centralized = self.algorithm.critic_mode() == CriticMode::Centralized;
        let (mut batch, mut obs) = self.reset_batch(n)?;
        let iterations = total_steps.div_ceil(cfg.batch_steps());
        let learners: Vec<AgentRole> = AgentRole::BOTH
            .into_iter()
            .filter(|r| matches!(self.controllers[r.index()], Controller::Learner(_)))
            .collect();

        let mut scaler = cfg
            .normalize_rewards
            .then(|| RewardScaler::new(n, cfg.gamma));
        for iter in 0..iterations {
            self.maybe_evaluate(*env_steps)?;
            if cfg.anneal_lr {
                let lr = cfg.lr * (1.0 - iter as f64 / iterations as f64);
                for c in &mut self.controllers {
                    if let Controller::Learner(Learner::Ppo(a)) = c {
                        a.set_lr(lr);
                    }
                }
            }
            let rows = t_len * n;
            let mut obs_buf = Array2::<f64>::zeros((rows, obs_dim));
            let mut actions: [Vec<f64>; 2] =
                [Vec::with_capacity(rows * 7), Vec::with_capacity(rows * 3)];
            let mut logps: [Vec<f64>; 2] = [Vec::with_capacity(rows), Vec::with_capacity(rows)];
            let mut values: [Vec<f64>; 2] = [Vec::with_capacity(rows), Vec::with_capacity(rows)];
            let mut rewards = Vec::with_capacity(rows);
            let mut dones = Vec::with_capacity(rows);

            for t in 0..t_len {
                let o = ArrayView2::from_shape((n, obs_dim), &obs.data).expect("batch shape");
                obs_buf.slice_mut(s![t * n..(t + 1) * n, ..]).assign(&o);
                let critic_in = if centralized {
                    concatenate![Axis(1), o, o]
                } else {
                    o.to_owned()
                };
                let mut joint = vec![0.0; n * JOINT_ACTION_DIM];
                for &role in &learners {
                    let Controller::Learner(Learner::Ppo(agent)) = &self.controllers[role.index()]
                    else {
                        unreachable!("PPO run holds PPO learners")
                    };
                    let mean = agent.actor.net.predict(o)?;
                    let k = role.action_dim();
                    let off = role_offset(role);
                    for i in 0..n {
                        let s = agent
                            .actor
                            .head
                            .sample(mean.row(i).as_slice().expect("row"), &mut self.rng);
                        joint[i * JOINT_ACTION_DIM + off..i * JOINT_ACTION_DIM + off + k]
                            .copy_from_slice(&s.action);
                        actions[role.index()].extend_from_slice(&s.action);
                        logps[role.index()].push(s.log_prob);
                    }
                    values[role.index()].extend(critic_values(&agent.critic, critic_in.view())?);
                }
                if let Some((role, acts)) = self.frozen_actions(o)? {
                    write_role_actions(&mut joint, role, &acts);
                }
                let step = self.vstep(&mut batch, &joint)?;
                let start = rewards.len();
                rewards.extend_from_slice(&step.rewards);
                if let Some(sc) = scaler.as_mut() {
                    sc.scale(&mut rewards[start..], &step.dones);
                }
                dones.extend_from_slice(&step.dones);
                obs = step.obs;
            }
            *env_steps += (t_len * n) as u64;

            let o = ArrayView2::from_shape((n, obs_dim), &obs.data).expect("batch shape");
            let critic_last = if centralized {
                concatenate![Axis(1), o, o]
            } else {
                o.to_owned()
            };
            let critic_obs = if centralized {
                concatenate![Axis(1), obs_buf, obs_buf]
            } else {
                obs_buf.clone()
            };
            for &role in &learners {
                let Controller::Learner(Learner::Ppo(agent)) = &mut self.controllers[role.index()]
                else {
                    unreachable!("PPO run holds PPO learners")
                };
                let bootstrap = critic_values(&agent.critic, critic_last.view())?;
                let r = role.index();
                let (advantages, targets) = compute_gae(
                    &rewards,
                    &values[r],
                    &dones,
                    &bootstrap,
                    cfg.gamma,
                    cfg.gae_lambda,
                );
                let data = PpoData {
                    obs: obs_buf.clone(),
                    critic_obs: critic_obs.clone(),
                    actions: Array2::from_shape_vec(
                        (rows, role.action_dim()),
                        std::mem::take(&mut actions[r]),
                    )
                    .expect("action rows"),
                    old_log_probs: std::mem::take(&mut logps[r]),
                    advantages,
                    targets,
                };
                ppo_update(agent, &data, cfg, &mut self.rng).map_err(|e| at_step(e, *env_steps))?;
            }
        }
        Ok(())
    }

    fn train_sac(&mut self, cfg: &SacConfig, total_steps: u64, env_steps: &mut u64) -> Result<()> {
        let n = cfg.num_envs;
        let obs_dim = self.task.obs_dim();
        let (mut batch, mut obs) = self.reset_batch(n)?;
        let mut buffer = ReplayBuffer::new(cfg.buffer_size, obs_dim, JOINT_ACTION_DIM);
        let learners: Vec<AgentRole> = AgentRole::BOTH
            .into_iter()
            .filter(|r| matches!(self.controllers[r.index()], Controller::Learner(_)))
            .collect();

        while *env_steps < total_steps {
            self.maybe_evaluate(*env_steps)?;
            for _ in 0..cfg.rollout_length {
                let o = ArrayView2::from_shape((n, obs_dim), &obs.data).expect("batch shape");
                let mut joint = vec![0.0; n * JOINT_ACTION_DIM];
                let explore = *env_steps < cfg.exploration_steps;
                for &role in &learners {
                    let k = role.action_dim();
                    let acts: Vec<f64> = if explore {
                        (0..n * k)
                            .map(|_| self.rng.random_range(-1.0..1.0))
                            .collect()
                    } else {
                        let Controller::Learner(Learner::Sac(agent)) =
                            &self.controllers[role.index()]
                        else {
                            unreachable!("SAC run holds SAC learners")
                        };
                        let out = agent.actor.net.predict(o)?;
                        let sample =
                            squashed_batch(out.view(), standard_noise(n, k, &mut self.rng));
                        sample.actions.into_raw_vec_and_offset().0
                    };
                    write_role_actions(&mut joint, role, &acts);
                }
                if let Some((role, acts)) = self.frozen_actions(o)? {
                    write_role_actions(&mut joint, role, &acts);
                }
                let in_play = self.assignment.clone();
                let step = self.vstep(&mut batch, &joint)?;
                for i in 0..n {
                    buffer.push_tagged(
                        obs.row(i),
                        &joint[i * JOINT_ACTION_DIM..(i + 1) * JOINT_ACTION_DIM],
                        step.rewards[i],
                        step.obs.row(i),
                        step.dones[i],
                        in_play.get(i).copied().unwrap_or(0),
                    );
                }
                obs = step.obs;
                *env_steps += n as u64;
            }
            if *env_steps < cfg.exploration_steps || buffer.len() < cfg.batch_size {
                continue;
            }
            for _ in 0..cfg.updates_per_iteration {
                let sample = buffer.sample(cfg.batch_size, &mut self.rng)?;
                let (mut agents, frozen) = sac_views(&mut self.controllers);
                sac_update(&mut agents, &frozen, &sample, cfg, &mut self.rng)
                    .map_err(|e| at_step(e, *env_steps))?;
            }
        }
        Ok(())
    }
}

/// Learning SAC agents and the frozen pool, indexed like the replay tags.
fn sac_views(
    controllers: &mut [Controller; 2],
) -> (Vec<&mut SacAgent>, Vec<(AgentRole, Vec<&Policy>)>) {
    let mut agents = Vec::new();
    let mut frozen = Vec::new();
    for (i, c) in controllers.iter_mut().enumerate() {
        let role = AgentRole::BOTH[i];
        match c {
            Controller::Learner(Learner::Sac(a)) => agents.push(a.as_mut()),
            Controller::Learner(Learner::Ppo(_)) => unreachable!("SAC run holds SAC learners"),
            Controller::Frozen(pool) => {
                frozen.push((role, pool.iter().map(|p| &p.policy).collect()))
            }
        }
    }
    (agents, frozen)
}

fn role_offset(role: AgentRole) -> usize {
    match role {
        AgentRole::Robot => 0,
        AgentRole::Human => crate::envs::ROBOT_ACTION_DIM,
    }
}

fn write_role_actions(joint: &mut [f64], role: AgentRole, acts: &[f64]) {
    let k = role.action_dim();
    let off = role_offset(role);
    for (row, a) in joint
        .chunks_exact_mut(JOINT_ACTION_DIM)
        .zip(acts.chunks_exact(k))
    {
        row[off..off + k].copy_from_slice(a);
    }
}

fn at_step(e: Error, env_step: u64) -> Error {
    match e {
        Error::Diverged { reason, .. } => Error::Diverged {
            step: env_step,
            reason,
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::Params;

    fn tiny_ppo(task: TaskId, algorithm: Algorithm) -> TrainConfig {
        let mut cfg = TrainConfig::new(task, algorithm);
        cfg.env.horizon = 20;
        cfg.eval_every = 512;
        cfg.eval_episodes = 2;
        if let AlgoConfig::Ppo(c) = &mut cfg.algo {
            c.num_envs = 8;
            c.rollout_steps = 32;
            c.hidden = vec![16];
        }
        cfg
    }

    fn tiny_sac(task: TaskId, algorithm: Algorithm) -> TrainConfig {
        let mut cfg = TrainConfig::new(task, algorithm);
        cfg.env.horizon = 20;
        cfg.eval_every = 400;
        cfg.eval_episodes = 2;
        if let AlgoConfig::Sac(c) = &mut cfg.algo {
            c.num_envs = 4;
            c.exploration_steps = 200;
            c.batch_size = 32;
            c.updates_per_iteration = 2;
            c.buffer_size = 2000;
            c.hidden = vec![16];
        }
        cfg
    }

    fn partner(label: &str, seed: u64, disability: DisabilityProfile) -> Partner {
        Partner {
            label: label.into(),
            policy: Policy::gaussian(52, 3, &[8], 0.0, &mut from_seed(seed)),
            disability,
        }
    }

    #[test]
    fn zero_steps_returns_initial_policies() {
        let cfg = tiny_ppo(TaskId::Scratch, Algorithm::Ippo);
        let out = train_team(
            TaskId::Scratch,
            Algorithm::Ippo,
            &TeamSpec::co_training(),
            &cfg,
            0,
            3,
        )
        .unwrap();
        assert!(out.log.is_empty());
        assert_eq!(out.env_steps, 0);
        assert_eq!(out.status, RunStatus::Completed);
        assert_eq!(out.policy(AgentRole::Robot).unwrap().act_dim(), 7);
        assert_eq!(out.policy(AgentRole::Human).unwrap().act_dim(), 3);
        let again = train_team(
            TaskId::Scratch,
            Algorithm::Ippo,
            &TeamSpec::co_training(),
            &cfg,
            0,
            3,
        )
        .unwrap();
        assert_eq!(out.policies, again.policies);
    }

    #[test]
    fn ppo_runs_are_deterministic_and_logged_at_cadence() {
        for algorithm in [Algorithm::Ippo, Algorithm::Mappo] {
            let cfg = tiny_ppo(TaskId::BedBath, algorithm);
            let run = || {
                train_team(
                    TaskId::BedBath,
                    algorithm,
                    &TeamSpec::co_training(),
                    &cfg,
                    2048,
                    5,
                )
                .unwrap()
            };
            let (a, b) = (run(), run());
            assert!(a.log.same_results(&b.log));
            assert_eq!(a.policies, b.policies);
            let steps: Vec<u64> = a.log.rows.iter().map(|r| r.env_step).collect();
            assert_eq!(steps, vec![0, 512, 1024, 1536, 2048]);
            assert!(a
                .log
                .rows
                .iter()
                .all(|r| r.eval_return_ci_lo <= r.eval_return_iqm));
        }
    }

    #[test]
    fn sac_runs_are_deterministic() {
        for algorithm in [Algorithm::Isac, Algorithm::Masac] {
            let cfg = tiny_sac(TaskId::Scratch, algorithm);
            let run = || {
                train_team(
                    TaskId::Scratch,
                    algorithm,
                    &TeamSpec::co_training(),
                    &cfg,
                    800,
                    1,
                )
                .unwrap()
            };
            let (a, b) = (run(), run());
            assert_eq!(a.status, RunStatus::Completed);
            assert!(a.log.same_results(&b.log));
            assert_eq!(a.policies, b.policies);
            assert_ne!(
                a.policy(AgentRole::Robot),
                train_team(
                    TaskId::Scratch,
                    algorithm,
                    &TeamSpec::co_training(),
                    &cfg,
                    0,
                    1
                )
                .unwrap()
                .policy(AgentRole::Robot)
            );
        }
    }

    #[test]
    fn divergence_is_recorded_with_partial_log() {
        let mut cfg = tiny_ppo(TaskId::Scratch, Algorithm::Ippo);
        if let AlgoConfig::Ppo(c) = &mut cfg.algo {
            c.lr = 1e300;
            c.max_grad_norm = 1e300;
        }
        let out = train_team(
            TaskId::Scratch,
            Algorithm::Ippo,
            &TeamSpec::co_training(),
            &cfg,
            4096,
            0,
        )
        .unwrap();
        assert!(
            matches!(out.status, RunStatus::Diverged { .. }),
            "{:?}",
            out.status
        );
        assert!(!out.log.is_empty());
    }

    #[test]
    fn partners_are_drawn_uniformly_per_reset() {
        let pool: Vec<Partner> = (0..4)
            .map(|k| partner(&format!("p{k}"), k, DisabilityProfile::default()))
            .collect();
        let mut cfg = tiny_ppo(TaskId::Scratch, Algorithm::Ppo);
        cfg.env.horizon = 2;
        cfg.eval_every = 0;
        if let AlgoConfig::Ppo(c) = &mut cfg.algo {
            c.num_envs = 50;
            c.rollout_steps = 40;
            c.epochs = 1;
        }
        let spec = TeamSpec::robot_with_partners(pool.clone());
        let out = train_team(TaskId::Scratch, Algorithm::Ppo, &spec, &cfg, 20_000, 9).unwrap();
        let total: u64 = out.partner_draws.iter().sum();
        // initial draw plus one per finished episode
        assert_eq!(total, 50 + 20_000 / 2);
        let expect = total as f64 / 4.0;
        let sd = (total as f64 * 0.25 * 0.75).sqrt();
        for &c in &out.partner_draws {
            assert!(
                (c as f64 - expect).abs() < 3.0 * sd,
                "{:?}",
                out.partner_draws
            );
        }
        assert!(out.policy(AgentRole::Human).is_none());
        // frozen partners are untouched
        if let RoleSpec::Frozen(after) = &spec.human {
            for (a, b) in after.iter().zip(&pool) {
                assert_eq!(a.policy.slices(), b.policy.slices());
            }
        }
    }

    #[test]
    fn held_out_partners_get_their_own_log() {
        let mut spec =
            TeamSpec::robot_with_partners(vec![partner("a", 1, DisabilityProfile::default())]);
        spec.held_out = vec![partner("b", 2, DisabilityProfile::default())];
        let cfg = tiny_ppo(TaskId::Scratch, Algorithm::Ppo);
        let out = train_team(TaskId::Scratch, Algorithm::Ppo, &spec, &cfg, 1024, 0).unwrap();
        let held = out.held_out_log.unwrap();
        assert_eq!(held.rows.len(), out.log.rows.len());
        assert!(held.rows[0].run_id.ends_with("held-out"));
        assert_eq!(out.held_out_final_returns.len(), cfg.eval_episodes);
    }

    #[test]
    fn invalid_teams_are_rejected() {
        let cfg = tiny_ppo(TaskId::Scratch, Algorithm::Ippo);
        let frozen = RoleSpec::Frozen(vec![partner("h", 0, DisabilityProfile::default())]);
        let nobody = TeamSpec {
            robot: RoleSpec::Frozen(vec![Partner {
                label: "r".into(),
                policy: Policy::gaussian(52, 7, &[8], 0.0, &mut from_seed(0)),
                disability: DisabilityProfile::default(),
            }]),
            human: frozen.clone(),
            held_out: vec![],
        };
        assert!(matches!(
            train_team(TaskId::Scratch, Algorithm::Ippo, &nobody, &cfg, 10, 0),
            Err(Error::Config { .. })
        ));
        // a scratch partner cannot act in arm assist (65-dimensional observations)
        let cfg_assist = tiny_ppo(TaskId::ArmAssist, Algorithm::Ppo);
        let spec = TeamSpec {
            robot: RoleSpec::Learner,
            human: frozen,
            held_out: vec![],
        };
        assert!(matches!(
            train_team(TaskId::ArmAssist, Algorithm::Ppo, &spec, &cfg_assist, 10, 0),
            Err(Error::Config { .. })
        ));
        // single-agent algorithms need exactly one learner
        assert!(train_team(
            TaskId::Scratch,
            Algorithm::Ppo,
            &TeamSpec::co_training(),
            &cfg,
            10,
            0
        )
        .is_err());
        // the algorithm config must fit the algorithm
        assert!(train_team(
            TaskId::Scratch,
            Algorithm::Isac,
            &TeamSpec::co_training(),
            &cfg,
            10,
            0
        )
        .is_err());
    }

    #[test]
    fn evaluation_matches_a_manual_rollout() {
        let spec = EnvSpec {
            horizon: 30,
            ..EnvSpec::new(TaskId::Scratch)
        };
        let robot = Policy::gaussian(52, 7, &[8], 0.0, &mut from_seed(1));
        let human = Policy::gaussian(52, 3, &[8], 0.0, &mut from_seed(2));
        let d = DisabilityProfile::default();
        let got = evaluate_team(&spec, &[(&robot, &human, d), (&robot, &human, d)], 4).unwrap();
        for (i, g) in got.iter().enumerate() {
            let (mut s, o) = spec.reset(d, stream(4, i as u64)).unwrap();
            let mut obs = o.robot.0;
            let mut ret = 0.0;
            for _ in 0..30 {
                let (r, _) = s
                    .step_in_place(
                        &robot.mean_action(&obs).unwrap(),
                        &human.mean_action(&obs).unwrap(),
                    )
                    .unwrap();
                ret += r;
                obs = crate::envs::build_observation(&s).robot.0;
            }
            assert_eq!(*g, ret);
        }
    }
}
