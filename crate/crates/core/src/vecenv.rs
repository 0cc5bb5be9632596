//! Batched stepping of independent task instances with auto-reset.
//!
//! Instances are stepped on the rayon pool and written back in instance
//! order, so results never depend on the number of worker threads.

use rayon::prelude::*;

use crate::envs::{
    write_observation, DisabilityProfile, EnvSpec, EnvState, TaskId, HUMAN_ACTION_DIM,
    ROBOT_ACTION_DIM,
};
use crate::rng::stream;
use crate::{Error, Result};

/// Width of one row of the joint action matrix: robot joints then human joints.
pub const JOINT_ACTION_DIM: usize = ROBOT_ACTION_DIM + HUMAN_ACTION_DIM;

/// Row-major `n × dim` observation matrix. Both agents see the same row.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchObs {
    pub n: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl BatchObs {
    fn zeros(n: usize, dim: usize) -> Self {
        Self {
            n,
            dim,
            data: vec![0.0; n * dim],
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// Return of an episode that ended during a `vstep`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FinalReturn {
    pub instance: usize,
    pub episode_return: f64,
    /// Disability profile the finished episode was played with.
    pub profile: DisabilityProfile,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VStep {
    pub obs: BatchObs,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    pub final_returns: Vec<FinalReturn>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchState {
    spec: EnvSpec,
    pub states: Vec<EnvState>,
    pub profiles: Vec<DisabilityProfile>,
    pub episode_returns: Vec<f64>,
}

/// Reset `n` instances; instance `i` draws from `stream(base_seed, i)`.
///
/// `profiles` holds either one profile for every instance or one per instance.
pub fn vreset(
    task: TaskId,
    n: usize,
    base_seed: u64,
    profiles: &[DisabilityProfile],
) -> Result<(BatchState, BatchObs)> {
    vreset_spec(EnvSpec::new(task), n, base_seed, profiles)
}

pub fn vreset_spec(
    spec: EnvSpec,
    n: usize,
    base_seed: u64,
    profiles: &[DisabilityProfile],
) -> Result<(BatchState, BatchObs)> {
    if n == 0 {
        return Err(Error::contract("batch needs at least one instance"));
    }
    let profiles: Vec<DisabilityProfile> = match profiles.len() {
        1 => vec![profiles[0]; n],
        len if len == n => profiles.to_vec(),
        len => {
            return Err(Error::contract(format!(
                "{len} disability profiles for {n} instances"
            )))
        }
    };
    let dim = spec.obs_dim();
    let mut obs = BatchObs::zeros(n, dim);
    let mut states = Vec::with_capacity(n);
    for (i, p) in profiles.iter().enumerate() {
        let (s, _) = spec.reset(*p, stream(base_seed, i as u64))?;
        fill_row(&s, &mut obs.data[i * dim..(i + 1) * dim]);
        states.push(s);
    }
    let batch = BatchState {
        spec,
        states,
        profiles,
        episode_returns: vec![0.0; n],
    };
    Ok((batch, obs))
}

fn fill_row(state: &EnvState, row: &mut [f64]) {
    let mut buf = Vec::with_capacity(row.len());
    write_observation(state, &mut buf);
    row.copy_from_slice(&buf);
}

impl BatchState {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn task(&self) -> TaskId {
        self.spec.task
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    pub fn obs_dim(&self) -> usize {
        self.spec.obs_dim()
    }

    /// Current observations without stepping.
    pub fn observe(&self) -> BatchObs {
        let dim = self.obs_dim();
        let mut obs = BatchObs::zeros(self.len(), dim);
        obs.data
            .par_chunks_mut(dim)
            .zip(self.states.par_iter())
            .for_each(|(row, s)| fill_row(s, row));
        obs
    }

    /// Step every instance with one row of the `n × 10` action matrix.
    pub fn vstep(&mut self, actions: &[f64]) -> Result<VStep> {
        self.vstep_with(actions, |_, p| p)
    }

    /// Like [`vstep`](Self::vstep), but `next_profile(instance, finished_profile)`
    /// picks the disability profile of each episode started by an auto-reset.
    /// It is called in instance order.
    pub fn vstep_with<F>(&mut self, actions: &[f64], mut next_profile: F) -> Result<VStep>
    where
        F: FnMut(usize, DisabilityProfile) -> DisabilityProfile,
    {
        let n = self.len();
        if actions.len() != n * JOINT_ACTION_DIM {
            return Err(Error::contract(format!(
                "action matrix has {} entries, expected {n}×{JOINT_ACTION_DIM}",
                actions.len()
            )));
        }
        let dim = self.obs_dim();
        let mut obs = BatchObs::zeros(n, dim);
        let mut rewards = vec![0.0; n];
        let mut dones = vec![false; n];
        self.states
            .par_iter_mut()
            .zip(actions.par_chunks(JOINT_ACTION_DIM))
            .zip(obs.data.par_chunks_mut(dim))
            .zip(rewards.par_iter_mut().zip(dones.par_iter_mut()))
            .with_min_len(4)
            .try_for_each(|(((s, a), row), (r, d))| -> Result<()> {
                let (reward, done) =
                    s.step_in_place(&a[..ROBOT_ACTION_DIM], &a[ROBOT_ACTION_DIM..])?;
                *r = reward;
                *d = done;
                if !done {
                    fill_row(s, row);
                }
                Ok(())
            })?;

        let mut final_returns = Vec::new();
        for i in 0..n {
            self.episode_returns[i] += rewards[i];
            if !dones[i] {
                continue;
            }
            final_returns.push(FinalReturn {
                instance: i,
                episode_return: self.episode_returns[i],
                profile: self.profiles[i],
            });
            self.episode_returns[i] = 0.0;
            let profile = next_profile(i, self.profiles[i]);
            let rng = std::mem::replace(&mut self.states[i].rng, stream(0, 0));
            let (s, _) = self.spec.reset(profile, rng)?;
            fill_row(&s, &mut obs.data[i * dim..(i + 1) * dim]);
            self.states[i] = s;
            self.profiles[i] = profile;
        }
        Ok(VStep {
            obs,
            rewards,
            dones,
            final_returns,
        })
    }
}

#[cfg(test)]
mod tests {
    use rand::Rng as _;

    use super::*;
    use crate::envs::{reset, DEFAULT_HORIZON};
    use crate::rng::{derive_seed, from_seed};

    fn random_actions(n: usize, rng: &mut crate::rng::Rng) -> Vec<f64> {
        (0..n * JOINT_ACTION_DIM)
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect()
    }

    #[test]
    fn batch_of_one_is_a_plain_reset() {
        let (b, obs) = vreset(TaskId::Scratch, 1, 42, &[DisabilityProfile::default()]).unwrap();
        let (s, o) = reset(
            TaskId::Scratch,
            DisabilityProfile::default(),
            from_seed(derive_seed(42, 0)),
        )
        .unwrap();
        assert_eq!(b.states[0], s);
        assert_eq!(obs.row(0), o.robot.as_slice());
    }

    #[test]
    fn reset_is_deterministic_and_instances_differ() {
        let p = [DisabilityProfile::default()];
        let (a, _) = vreset(TaskId::Scratch, 8, 7, &p).unwrap();
        let (b, _) = vreset(TaskId::Scratch, 8, 7, &p).unwrap();
        assert_eq!(a, b);
        let targets: Vec<_> = a
            .states
            .iter()
            .map(|s| s.scratch_target.unwrap().local)
            .collect();
        assert!(targets.iter().skip(1).any(|t| *t != targets[0]));
    }

    #[test]
    fn identical_seeds_and_actions_give_identical_rows() {
        let (mut b, _) = vreset(TaskId::ArmAssist, 1, 3, &[DisabilityProfile::default()]).unwrap();
        let s0 = b.states[0].clone();
        b.states = vec![s0; 4];
        b.profiles = vec![DisabilityProfile::default(); 4];
        b.episode_returns = vec![0.0; 4];
        let mut rng = from_seed(1);
        let row = random_actions(1, &mut rng);
        let actions: Vec<f64> = row
            .iter()
            .cycle()
            .take(4 * JOINT_ACTION_DIM)
            .copied()
            .collect();
        let out = b.vstep(&actions).unwrap();
        for i in 1..4 {
            assert_eq!(out.obs.row(i), out.obs.row(0));
            assert_eq!(out.rewards[i], out.rewards[0]);
        }
    }

    #[test]
    fn matches_sequential_instances_bit_for_bit() {
        for task in TaskId::ALL {
            let profile = DisabilityProfile::default();
            let (mut batch, _) = vreset(task, 8, 11, &[profile]).unwrap();
            let mut singles: Vec<EnvState> = (0..8)
                .map(|i| {
                    reset(task, profile, from_seed(derive_seed(11, i)))
                        .unwrap()
                        .0
                })
                .collect();
            let mut rng = from_seed(99);
            for _ in 0..200 {
                let actions = random_actions(8, &mut rng);
                let out = batch.vstep(&actions).unwrap();
                for (i, s) in singles.iter_mut().enumerate() {
                    let a = &actions[i * JOINT_ACTION_DIM..(i + 1) * JOINT_ACTION_DIM];
                    let r = crate::envs::step(s, &a[..7], &a[7..]).unwrap();
                    assert_eq!(r.reward.to_bits(), out.rewards[i].to_bits());
                    assert_eq!(r.obs.robot.as_slice(), out.obs.row(i));
                    *s = r.next_state;
                }
            }
            assert_eq!(batch.states, singles);
        }
    }

    #[test]
    fn output_does_not_depend_on_thread_count() {
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                let (mut b, _) =
                    vreset(TaskId::BedBath, 16, 5, &[DisabilityProfile::default()]).unwrap();
                let mut rng = from_seed(2);
                let mut last = None;
                for _ in 0..50 {
                    last = Some(b.vstep(&random_actions(16, &mut rng)).unwrap());
                }
                (b, last.unwrap())
            })
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn synchronized_horizon_resets_every_slot() {
        let (mut b, _) = vreset(TaskId::Scratch, 3, 0, &[DisabilityProfile::default()]).unwrap();
        let zeros = vec![0.0; 3 * JOINT_ACTION_DIM];
        let mut acc = [0.0; 3];
        for t in 1..=DEFAULT_HORIZON {
            let out = b.vstep(&zeros).unwrap();
            for i in 0..3 {
                acc[i] += out.rewards[i];
            }
            if t < DEFAULT_HORIZON {
                assert!(out.dones.iter().all(|d| !d));
                assert!(out.final_returns.is_empty());
            } else {
                assert!(out.dones.iter().all(|&d| d));
                assert_eq!(out.final_returns.len(), 3);
                for f in &out.final_returns {
                    assert_eq!(f.episode_return, acc[f.instance]);
                }
                for (i, s) in b.states.iter().enumerate() {
                    assert_eq!(s.t, 0);
                    assert_eq!(
                        out.obs.row(i),
                        crate::envs::build_observation(s).robot.as_slice()
                    );
                }
                assert!(b.episode_returns.iter().all(|&r| r == 0.0));
            }
        }
    }

    #[test]
    fn reset_hook_sets_next_profile() {
        let mut spec = EnvSpec::new(TaskId::Scratch);
        spec.horizon = 2;
        let (mut b, _) = vreset_spec(spec, 2, 0, &[DisabilityProfile::default()]).unwrap();
        let weak = DisabilityProfile {
            strength_multiplier: 0.5,
            ..Default::default()
        };
        let zeros = vec![0.0; 2 * JOINT_ACTION_DIM];
        b.vstep(&zeros).unwrap();
        let mut calls = Vec::new();
        let out = b
            .vstep_with(&zeros, |i, _| {
                calls.push(i);
                weak
            })
            .unwrap();
        assert_eq!(calls, vec![0, 1]);
        assert_eq!(out.final_returns[0].profile, DisabilityProfile::default());
        assert!(b.states.iter().all(|s| s.disability == weak));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let (mut b, _) = vreset(TaskId::Scratch, 2, 0, &[DisabilityProfile::default()]).unwrap();
        assert!(matches!(b.vstep(&[0.0; 10]), Err(Error::Contract(_))));
        assert!(vreset(TaskId::Scratch, 0, 0, &[DisabilityProfile::default()]).is_err());
        assert!(vreset(TaskId::Scratch, 3, 0, &[DisabilityProfile::default(); 2]).is_err());
    }
}
