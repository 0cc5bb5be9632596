use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algos::{
    evaluate_team, train_team, Algorithm, Partner, TeamSpec, TrainConfig, TrainOutcome,
};
use crate::envs::{EnvSpec, TaskId};
use crate::metrics::{iqm, stratified_bootstrap_mean_ci};
use crate::neural::Policy;
use crate::rng::derive_seed;
use crate::{Error, Result};

/// Train a robot with single-agent PPO or SAC against frozen partners drawn
/// uniformly at every environment reset. `held_out` partners are only
/// evaluated, in `TrainOutcome::held_out_log`.
pub fn train_zsc_agent(
    task: TaskId,
    algorithm: Algorithm,
    train_partners: Vec<Partner>,
    held_out: Vec<Partner>,
    cfg: &TrainConfig,
    total_steps: u64,
    seed: u64,
) -> Result<TrainOutcome> {
    if !matches!(algorithm, Algorithm::Ppo | Algorithm::Sac) {
        return Err(Error::config(
            "algorithm",
            format!("ZSC agents train with PPO or SAC, not {algorithm}"),
        ));
    }
    if train_partners.is_empty() {
        return Err(Error::config(
            "partners",
            "the training population is empty",
        ));
    }
    let mut spec = TeamSpec::robot_with_partners(train_partners);
    spec.held_out = held_out;
    train_team(task, algorithm, &spec, cfg, total_steps, seed)
}

/// Expected return against a partner set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MEstimate {
    /// Episode returns per partner.
    pub per_partner: Vec<Vec<f64>>,
    /// Mean over partners and episodes.
    pub m: f64,
    pub iqm: f64,
    /// 95% bootstrap interval of `m`, stratified by partner.
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl MEstimate {
    pub fn from_returns(per_partner: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        let pooled: Vec<f64> = per_partner.iter().flatten().copied().collect();
        if pooled.is_empty() || per_partner.iter().any(Vec::is_empty) {
            return Err(Error::contract("every partner needs at least one episode"));
        }
        let m = pooled.iter().sum::<f64>() / pooled.len() as f64;
        let (lo, hi) = stratified_bootstrap_mean_ci(&per_partner, 0.95, 2000, seed)?;
        Ok(Self {
            m,
            iqm: iqm(&pooled)?,
            ci_lo: lo.min(m),
            ci_hi: hi.max(m),
            per_partner,
        })
    }

    pub fn per_partner_means(&self) -> Vec<f64> {
        self.per_partner
            .iter()
            .map(|r| r.iter().sum::<f64>() / r.len() as f64)
            .collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.ci_lo <= x && x <= self.ci_hi
    }
}

/// M from an arbitrary episode oracle `episode(partner, episode_index)`.
pub fn evaluate_m_with<F>(
    partners: usize,
    episodes_per_partner: usize,
    seed: u64,
    episode: F,
) -> Result<MEstimate>
where
    F: Fn(usize, usize) -> Result<f64> + Sync,
{
    if partners == 0 || episodes_per_partner == 0 {
        return Err(Error::contract(
            "M needs at least one partner and one episode",
        ));
    }
    let per_partner = (0..partners)
        .into_par_iter()
        .map(|p| {
            (0..episodes_per_partner)
                .map(|e| episode(p, e))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    MEstimate::from_returns(per_partner, seed)
}

/// Noise-free return of `robot` paired with each partner; partner `p`
/// plays its episodes from seed `derive_seed(seed, p)`.
pub fn evaluate_m(
    env: &EnvSpec,
    robot: &Policy,
    partners: &[Partner],
    episodes_per_partner: usize,
    seed: u64,
) -> Result<MEstimate> {
    if partners.is_empty() || episodes_per_partner == 0 {
        return Err(Error::contract(
            "M needs at least one partner and one episode",
        ));
    }
    let per_partner = partners
        .iter()
        .enumerate()
        .map(|(p, partner)| {
            let teams = vec![(robot, &partner.policy, partner.disability); episodes_per_partner];
            evaluate_team(env, &teams, derive_seed(seed, p as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    MEstimate::from_returns(per_partner, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algos::{AlgoConfig, RoleSpec};
    use crate::envs::{DisabilityProfile, RewardWeights};
    use crate::rng::from_seed;

    fn partner(seed: u64) -> Partner {
        Partner {
            label: format!("p{seed}"),
            policy: Policy::gaussian(52, 3, &[8], 0.0, &mut from_seed(seed)),
            disability: DisabilityProfile::default(),
        }
    }

    fn tiny(algorithm: Algorithm) -> TrainConfig {
        let mut cfg = TrainConfig::new(TaskId::Scratch, algorithm);
        cfg.env.horizon = 16;
        cfg.eval_every = 256;
        cfg.eval_episodes = 2;
        if let AlgoConfig::Ppo(c) = &mut cfg.algo {
            c.num_envs = 4;
            c.rollout_steps = 16;
            c.hidden = vec![8];
        }
        cfg
    }

    #[test]
    fn stub_partners_average() {
        let m = evaluate_m_with(2, 3, 0, |p, _| Ok(if p == 0 { 10.0 } else { 20.0 })).unwrap();
        assert_eq!(m.m, 15.0);
        assert_eq!(m.per_partner_means(), vec![10.0, 20.0]);
        assert!(m.contains(15.0));
        assert!(evaluate_m_with(0, 3, 0, |_, _| Ok(1.0)).is_err());
        assert!(evaluate_m_with(2, 0, 0, |_, _| Ok(1.0)).is_err());
    }

    #[test]
    fn zero_reward_environment_gives_zero() {
        let env = EnvSpec {
            horizon: 20,
            reward: RewardWeights {
                scale_reach: 0.0,
                scale_scratch: 0.0,
                ..RewardWeights::default()
            },
            ..EnvSpec::new(TaskId::Scratch)
        };
        let robot = Policy::gaussian(52, 7, &[8], 0.0, &mut from_seed(1));
        let m = evaluate_m(&env, &robot, &[partner(2), partner(3)], 2, 0).unwrap();
        assert_eq!(m.m, 0.0);
    }

    #[test]
    fn singleton_matches_paired_evaluation() {
        let env = EnvSpec {
            horizon: 25,
            ..EnvSpec::new(TaskId::Scratch)
        };
        let robot = Policy::gaussian(52, 7, &[8], 0.0, &mut from_seed(1));
        let p = partner(4);
        let m = evaluate_m(&env, &robot, std::slice::from_ref(&p), 5, 9).unwrap();
        let teams = vec![(&robot, &p.policy, p.disability); 5];
        let direct = evaluate_team(&env, &teams, derive_seed(9, 0)).unwrap();
        assert!((m.m - direct.iter().sum::<f64>() / 5.0).abs() < 1e-12);
    }

    #[test]
    fn singleton_population_is_fixed_partner_training() {
        let cfg = tiny(Algorithm::Ppo);
        let p = partner(5);
        let zsc = train_zsc_agent(
            TaskId::Scratch,
            Algorithm::Ppo,
            vec![p.clone()],
            vec![],
            &cfg,
            512,
            2,
        )
        .unwrap();
        let spec = TeamSpec {
            robot: RoleSpec::Learner,
            human: RoleSpec::Frozen(vec![p]),
            held_out: vec![],
        };
        let fixed = train_team(TaskId::Scratch, Algorithm::Ppo, &spec, &cfg, 512, 2).unwrap();
        assert!(zsc.log.same_results(&fixed.log));
        assert_eq!(zsc.policies, fixed.policies);
    }

    #[test]
    fn zsc_training_is_deterministic_and_validated() {
        let cfg = tiny(Algorithm::Ppo);
        let run = || {
            train_zsc_agent(
                TaskId::Scratch,
                Algorithm::Ppo,
                vec![partner(1), partner(2)],
                vec![partner(3)],
                &cfg,
                512,
                7,
            )
            .unwrap()
        };
        let (a, b) = (run(), run());
        assert!(a.log.same_results(&b.log));
        assert!(a
            .held_out_log
            .unwrap()
            .same_results(&b.held_out_log.unwrap()));
        assert!(matches!(
            train_zsc_agent(
                TaskId::Scratch,
                Algorithm::Ippo,
                vec![partner(1)],
                vec![],
                &cfg,
                10,
                0
            ),
            Err(Error::Config { .. })
        ));
        let wrong = Partner {
            policy: Policy::gaussian(65, 3, &[8], 0.0, &mut from_seed(0)),
            ..partner(0)
        };
        assert!(matches!(
            train_zsc_agent(
                TaskId::Scratch,
                Algorithm::Ppo,
                vec![wrong],
                vec![],
                &cfg,
                10,
                0
            ),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn sac_agent_trains_against_a_pool() {
        let mut cfg = TrainConfig::new(TaskId::Scratch, Algorithm::Sac);
        cfg.env.horizon = 16;
        cfg.eval_every = 0;
        cfg.eval_episodes = 2;
        if let AlgoConfig::Sac(c) = &mut cfg.algo {
            c.num_envs = 4;
            c.exploration_steps = 64;
            c.batch_size = 16;
            c.updates_per_iteration = 2;
            c.buffer_size = 1000;
            c.hidden = vec![8];
        }
        let out = train_zsc_agent(
            TaskId::Scratch,
            Algorithm::Sac,
            vec![partner(1), partner(2)],
            vec![],
            &cfg,
            256,
            0,
        )
        .unwrap();
        assert_eq!(out.env_steps, 256);
        assert_eq!(out.partner_draws.iter().sum::<u64>(), 4 + 256 / 16);
    }
}
