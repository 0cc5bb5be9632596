//! Throughput measurement: open-loop random-action steps per second and its
//! scaling with the number of batched environments.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::envs::{DisabilityProfile, EnvSpec, TaskId};
use crate::rng::{derive_seed, from_seed};
use crate::vecenv::{vreset_spec, BatchState, JOINT_ACTION_DIM};
use crate::{Error, Result};

/// Batched steps run before the clock starts.
pub const WARMUP_STEPS: usize = 3;

/// Reference open-loop speeds at 512 environments, for side-by-side display only.
pub const REFERENCE_SPS: [(TaskId, f64); 3] = [
    (TaskId::Scratch, 26_953.0),
    (TaskId::BedBath, 34_218.0),
    (TaskId::ArmAssist, 34_097.0),
];

/// Something that advances `num_envs` environments per call.
pub trait BatchStepper {
    fn num_envs(&self) -> usize;
    fn action_dim(&self) -> usize;
    /// Step all environments; returns the episode returns that finished.
    fn step(&mut self, actions: &[f64]) -> Result<Vec<f64>>;
}

impl BatchStepper for BatchState {
    fn num_envs(&self) -> usize {
        self.len()
    }

    fn action_dim(&self) -> usize {
        JOINT_ACTION_DIM
    }

    fn step(&mut self, actions: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .vstep(actions)?
            .final_returns
            .iter()
            .map(|f| f.episode_return)
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpsRow {
    pub task: TaskId,
    pub n_envs: usize,
    /// Environment steps inside the timed window.
    pub total_steps: u64,
    pub sps: f64,
    pub wall_s: f64,
    /// Mean return of random-action episodes that finished; NaN if none did.
    pub mean_random_return: f64,
}

/// Time `total_steps / n` batched steps of uniform random actions in [-1, 1]
/// after [`WARMUP_STEPS`] untimed ones.
pub fn open_loop_sps_with<S: BatchStepper>(
    task: TaskId,
    stepper: &mut S,
    total_steps: u64,
    seed: u64,
) -> Result<SpsRow> {
    let n = stepper.num_envs();
    if n == 0 || total_steps < n as u64 {
        return Err(Error::contract(format!(
            "total_steps {total_steps} is below the batch size {n}"
        )));
    }
    let iterations = total_steps / n as u64;
    let mut rng = from_seed(derive_seed(seed, 7));
    let mut actions = vec![0.0; n * stepper.action_dim()];
    let mut finished = Vec::new();
    for _ in 0..WARMUP_STEPS {
        actions
            .iter_mut()
            .for_each(|a| *a = rng.random_range(-1.0..=1.0));
        finished.extend(stepper.step(&actions)?);
    }
    let start = Instant::now();
    for _ in 0..iterations {
        actions
            .iter_mut()
            .for_each(|a| *a = rng.random_range(-1.0..=1.0));
        finished.extend(stepper.step(&actions)?);
    }
    let wall_s = start.elapsed().as_secs_f64();
    let steps = iterations * n as u64;
    Ok(SpsRow {
        task,
        n_envs: n,
        total_steps: steps,
        sps: steps as f64 / wall_s,
        wall_s,
        mean_random_return: if finished.is_empty() {
            f64::NAN
        } else {
            finished.iter().sum::<f64>() / finished.len() as f64
        },
    })
}

/// Open-loop throughput of `n_envs` instances of `task`.
pub fn open_loop_sps(task: TaskId, n_envs: usize, total_steps: u64, seed: u64) -> Result<SpsRow> {
    open_loop_sps_spec(EnvSpec::new(task), n_envs, total_steps, seed)
}

pub fn open_loop_sps_spec(
    spec: EnvSpec,
    n_envs: usize,
    total_steps: u64,
    seed: u64,
) -> Result<SpsRow> {
    let (mut batch, _) = vreset_spec(spec, n_envs, seed, &[DisabilityProfile::default()])?;
    open_loop_sps_with(spec.task, &mut batch, total_steps, seed)
}

/// One [`open_loop_sps`] measurement per environment count.
pub fn scaling_curve(
    task: TaskId,
    env_counts: &[usize],
    steps_per_point: u64,
    seed: u64,
) -> Result<Vec<SpsRow>> {
    if env_counts.is_empty() {
        return Err(Error::contract(
            "scaling curve needs at least one environment count",
        ));
    }
    env_counts
        .iter()
        .map(|&n| open_loop_sps(task, n, steps_per_point.max(n as u64), seed))
        .collect()
}

/// Returns of complete random-action episodes: `episodes` instances run for
/// one full horizon.
pub fn random_policy_returns(task: TaskId, episodes: usize, seed: u64) -> Result<Vec<f64>> {
    let spec = EnvSpec::new(task);
    let (mut batch, _) = vreset_spec(spec, episodes, seed, &[DisabilityProfile::default()])?;
    let mut rng = from_seed(derive_seed(seed, 7));
    let mut actions = vec![0.0; episodes * JOINT_ACTION_DIM];
    let mut out = Vec::with_capacity(episodes);
    for _ in 0..spec.horizon {
        actions
            .iter_mut()
            .for_each(|a| *a = rng.random_range(-1.0..=1.0));
        out.extend(BatchStepper::step(&mut batch, &actions)?);
    }
    Ok(out)
}

pub fn write_csv<W: Write>(rows: &[SpsRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "task",
        "n_envs",
        "total_steps",
        "sps",
        "wall_s",
        "mean_random_return",
    ])?;
    for r in rows {
        out.write_record([
            r.task.name().to_owned(),
            r.n_envs.to_string(),
            r.total_steps.to_string(),
            r.sps.to_string(),
            r.wall_s.to_string(),
            r.mean_random_return.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_csv(rows: &[SpsRow], path: &Path) -> Result<()> {
    write_csv(rows, std::fs::File::create(path)?)
}
