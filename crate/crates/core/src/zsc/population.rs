use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algos::{train_team, Algorithm, Partner, RunStatus, TeamSpec, TrainConfig};
use crate::envs::{AgentRole, DisabilityProfile, TaskId};
use crate::neural::Checkpoint;
use crate::rng::from_seed;
use crate::{Error, Result};

pub const DISABILITY_SETTINGS: u8 = 9;
const STRENGTHS: [f64; 3] = [1.0, 0.5, 0.25];
const ROM_FRACTIONS: [f64; 3] = [1.0, 0.66, 0.33];

/// Disability setting `index` in 1..=9: strength varies slowest, elbow range
/// of motion fastest, tremor at its default.
pub fn disability_setting(index: u8) -> Result<DisabilityProfile> {
    if !(1..=DISABILITY_SETTINGS).contains(&index) {
        return Err(Error::config(
            "setting",
            format!("disability setting {index} is outside 1..=9"),
        ));
    }
    let k = (index - 1) as usize;
    Ok(DisabilityProfile {
        strength_multiplier: STRENGTHS[k / 3],
        elbow_rom_fraction: ROM_FRACTIONS[k % 3],
        ..DisabilityProfile::default()
    })
}

/// One co-training run that contributes a partner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RunRequest {
    pub task: TaskId,
    pub algorithm: Algorithm,
    pub setting: u8,
    pub seed: u64,
}

impl RunRequest {
    pub fn id(&self) -> String {
        format!(
            "{}-{}-d{}-s{}",
            self.task.name(),
            self.algorithm.name(),
            self.setting,
            self.seed
        )
    }

    pub fn validate(&self) -> Result<()> {
        disability_setting(self.setting)?;
        if !matches!(
            self.algorithm,
            Algorithm::Ippo | Algorithm::Mappo | Algorithm::Masac
        ) {
            return Err(Error::config(
                "algorithm",
                format!(
                    "population partners come from IPPO, MAPPO or MASAC, not {}",
                    self.algorithm
                ),
            ));
        }
        Ok(())
    }
}

/// Ordered, duplicate-free list of population runs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PopulationPlan {
    requests: Vec<RunRequest>,
    seen: HashSet<RunRequest>,
}

impl PopulationPlan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, request: RunRequest) -> Result<()> {
        request.validate()?;
        if !self.seen.insert(request) {
            return Err(Error::Duplicate(request.id()));
        }
        self.requests.push(request);
        Ok(())
    }

    /// Seeds `0..seeds_per_cell` for every (task, algorithm, setting).
    pub fn grid(
        tasks: &[TaskId],
        algorithms: &[Algorithm],
        settings: &[u8],
        seeds_per_cell: u64,
    ) -> Result<Self> {
        if tasks.is_empty() || algorithms.is_empty() || settings.is_empty() || seeds_per_cell == 0 {
            return Err(Error::config("population", "the run grid is empty"));
        }
        let mut plan = Self::new();
        for &task in tasks {
            for &algorithm in algorithms {
                for &setting in settings {
                    for seed in 0..seeds_per_cell {
                        plan.add(RunRequest {
                            task,
                            algorithm,
                            setting,
                            seed,
                        })?;
                    }
                }
            }
        }
        Ok(plan)
    }

    /// The 434-run reference population: PPO variants use 8 seeds over all
    /// nine settings on Scratch and settings 1-4 elsewhere; MASAC uses 6
    /// seeds over all nine settings on every task.
    pub fn reference() -> Self {
        let mut plan = Self::new();
        let all: Vec<u8> = (1..=DISABILITY_SETTINGS).collect();
        for task in TaskId::ALL {
            for algorithm in [Algorithm::Ippo, Algorithm::Mappo] {
                let settings = if task == TaskId::Scratch {
                    &all[..]
                } else {
                    &all[..4]
                };
                let cell = Self::grid(&[task], &[algorithm], settings, 8).expect("static grid");
                plan.extend(cell).expect("disjoint cells");
            }
            let cell = Self::grid(&[task], &[Algorithm::Masac], &all, 6).expect("static grid");
            plan.extend(cell).expect("disjoint cells");
        }
        plan
    }

    pub fn extend(&mut self, other: PopulationPlan) -> Result<()> {
        for r in other.requests {
            self.add(r)?;
        }
        Ok(())
    }

    pub fn requests(&self) -> &[RunRequest] {
        &self.requests
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    pub fn count(&self, task: Option<TaskId>, algorithm: Option<Algorithm>) -> usize {
        self.requests
            .iter()
            .filter(|r| {
                task.is_none_or(|t| r.task == t) && algorithm.is_none_or(|a| r.algorithm == a)
            })
            .count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationEntry {
    pub id: String,
    pub task: TaskId,
    pub algorithm: Algorithm,
    pub setting: u8,
    pub seed: u64,
    /// Paths relative to the manifest directory.
    pub human_checkpoint: PathBuf,
    pub robot_checkpoint: PathBuf,
    /// IQM of the co-training team's final evaluation.
    pub final_return: f64,
}

impl PopulationEntry {
    fn key(&self) -> (TaskId, Algorithm, u8, u64) {
        (self.task, self.algorithm, self.setting, self.seed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailedRun {
    pub request: RunRequest,
    pub reason: String,
}

/// Manifest of a trained partner population.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PartnerPopulation {
    pub entries: Vec<PopulationEntry>,
    #[serde(default)]
    pub failed: Vec<FailedRun>,
}

impl PartnerPopulation {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            disability_setting(e.setting)?;
            if !seen.insert(e.key()) {
                return Err(Error::Duplicate(e.id.clone()));
            }
        }
        Ok(())
    }

    /// The single task shared by all entries.
    pub fn task(&self) -> Result<TaskId> {
        let first = self
            .entries
            .first()
            .ok_or_else(|| Error::config("population", "population is empty"))?
            .task;
        if self.entries.iter().any(|e| e.task != first) {
            return Err(Error::config("population", "entries span several tasks"));
        }
        Ok(first)
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            entries: indices.iter().map(|&i| self.entries[i].clone()).collect(),
            failed: Vec::new(),
        }
    }

    /// Write the manifest atomically.
    pub fn save(&self, path: &Path) -> Result<()> {
        self.validate()?;
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_vec_pretty(self)?)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingCheckpoint(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        let pop: Self = serde_json::from_slice(&text)?;
        pop.validate()?;
        Ok(pop)
    }

    /// Human policies of the population, resolved against `base`.
    pub fn load_partners(&self, base: &Path) -> Result<Vec<Partner>> {
        self.entries
            .iter()
            .map(|e| {
                let ckpt = Checkpoint::load(&base.join(&e.human_checkpoint))?;
                if ckpt.header.agent_role != AgentRole::Human || ckpt.policy.act_dim() != 3 {
                    return Err(Error::Checkpoint(format!(
                        "{} is not a human-arm policy",
                        e.id
                    )));
                }
                if ckpt.header.task != e.task {
                    return Err(Error::Checkpoint(format!(
                        "{} was trained on {}",
                        e.id, ckpt.header.task
                    )));
                }
                Ok(Partner {
                    label: e.id.clone(),
                    policy: ckpt.policy,
                    disability: disability_setting(e.setting)?,
                })
            })
            .collect()
    }

    pub fn load_robot(&self, base: &Path, index: usize) -> Result<Checkpoint> {
        Checkpoint::load(&base.join(&self.entries[index].robot_checkpoint))
    }

    /// Entry counts per algorithm and setting, with task columns.
    pub fn roll_up(&self) -> String {
        let mut cells: BTreeMap<(Algorithm, u8), BTreeMap<TaskId, usize>> = BTreeMap::new();
        for e in &self.entries {
            *cells
                .entry((e.algorithm, e.setting))
                .or_default()
                .entry(e.task)
                .or_default() += 1;
        }
        let mut out = format!("{:<10}{:>8}", "algorithm", "setting");
        for t in TaskId::ALL {
            let _ = write!(out, "{:>12}", t.name());
        }
        let _ = writeln!(out, "{:>8}", "total");
        for ((algo, setting), per_task) in &cells {
            let _ = write!(out, "{:<10}{:>8}", algo.name(), setting);
            for t in TaskId::ALL {
                let _ = write!(out, "{:>12}", per_task.get(&t).copied().unwrap_or(0));
            }
            let _ = writeln!(out, "{:>8}", per_task.values().sum::<usize>());
        }
        let _ = write!(out, "{:<18}", "total");
        for t in TaskId::ALL {
            let _ = write!(
                out,
                "{:>12}",
                self.entries.iter().filter(|e| e.task == t).count()
            );
        }
        let _ = writeln!(out, "{:>8}", self.entries.len());
        out
    }
}

/// Train every planned run as a co-training team, keep both checkpoints and
/// write `manifest.json` into `out_dir`. Runs that fail are listed in
/// `failed` instead of `entries`. `configure` maps a request to its training
/// configuration; at most `jobs` runs train concurrently.
pub fn train_population(
    plan: &PopulationPlan,
    out_dir: &Path,
    budget_per_run: u64,
    jobs: usize,
    configure: &(dyn Fn(&RunRequest) -> TrainConfig + Sync),
) -> Result<PartnerPopulation> {
    if plan.is_empty() {
        return Err(Error::config("population", "the run plan is empty"));
    }
    let ckpt_dir = out_dir.join("checkpoints");
    std::fs::create_dir_all(&ckpt_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::contract(e.to_string()))?;
    let results: Vec<Result<std::result::Result<PopulationEntry, FailedRun>>> =
        pool.install(|| {
            plan.requests()
                .par_iter()
                .with_max_len(1)
                .map(|req| train_member(req, out_dir, budget_per_run, configure))
                .collect()
        });
    let mut pop = PartnerPopulation::default();
    for r in results {
        match r? {
            Ok(entry) => pop.entries.push(entry),
            Err(failed) => pop.failed.push(failed),
        }
    }
    pop.save(&out_dir.join("manifest.json"))?;
    Ok(pop)
}

fn train_member(
    req: &RunRequest,
    out_dir: &Path,
    budget: u64,
    configure: &(dyn Fn(&RunRequest) -> TrainConfig + Sync),
) -> Result<std::result::Result<PopulationEntry, FailedRun>> {
    let mut cfg = configure(req);
    cfg.disability = disability_setting(req.setting)?;
    cfg.run_id = req.id();
    let out = match train_team(
        req.task,
        req.algorithm,
        &TeamSpec::co_training(),
        &cfg,
        budget,
        req.seed,
    ) {
        Ok(out) => out,
        Err(e @ (Error::Config { .. } | Error::Io(_))) => return Err(e),
        Err(e) => {
            return Ok(Err(FailedRun {
                request: *req,
                reason: e.to_string(),
            }))
        }
    };
    if let RunStatus::Diverged { env_step, reason } = &out.status {
        return Ok(Err(FailedRun {
            request: *req,
            reason: format!("diverged at env step {env_step}: {reason}"),
        }));
    }
    let rel = |role: AgentRole| {
        PathBuf::from("checkpoints").join(format!("{}-{}.ckpt", req.id(), role.name()))
    };
    for role in AgentRole::BOTH {
        let policy = out
            .policy(role)
            .expect("co-training learns both roles")
            .clone();
        Checkpoint::new(
            req.task,
            req.algorithm.name(),
            role,
            cfg.disability,
            req.seed,
            policy,
        )
        .save(&out_dir.join(rel(role)))?;
    }
    Ok(Ok(PopulationEntry {
        id: req.id(),
        task: req.task,
        algorithm: req.algorithm,
        setting: req.setting,
        seed: req.seed,
        human_checkpoint: rel(AgentRole::Human),
        robot_checkpoint: rel(AgentRole::Robot),
        final_return: out.log.last().map_or(f64::NAN, |r| r.eval_return_iqm),
    }))
}

/// Disjoint train/test halves of a population, as sorted entry indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PopulationSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Uniform random bisection with `ceil(n/2)` training members.
pub fn split_population(n: usize, seed: u64) -> Result<PopulationSplit> {
    if n < 2 {
        return Err(Error::contract("splitting needs at least two partners"));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut from_seed(seed));
    let (train, test) = idx.split_at(n.div_ceil(2));
    let (mut train, mut test) = (train.to_vec(), test.to_vec());
    train.sort_unstable();
    test.sort_unstable();
    Ok(PopulationSplit { train, test })
}
