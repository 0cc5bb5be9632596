//! Command-line front end.
//!
//! Every subcommand resolves a [`RunConfig`] from an optional TOML file, then
//! `--set key=value` overrides, then its own flags, and writes the resolved
//! configuration to `config.toml` in its output directory next to the
//! artifacts and a `summary.json`. Running again with that snapshot as
//! `--config` reproduces the run.
//!
//! Exit codes: 0 success, 1 other failure, 2 invalid configuration or usage,
//! 3 missing checkpoint, 4 output directory exists, 5 a training run diverged.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::algos::{
    train_team, AlgoConfig, Algorithm, PpoConfig, RunStatus, SacConfig, TeamSpec, TrainConfig,
    TrainOutcome,
};
use crate::bench::{open_loop_sps_spec, random_policy_returns, save_csv, SpsRow, REFERENCE_SPS};
use crate::envs::{AgentRole, DisabilityProfile, EnvSpec, RewardWeights, TaskId, DEFAULT_HORIZON};
use crate::metrics::{iqm, RunLog, RunSetSummary};
use crate::neural::Checkpoint;
use crate::rng::derive_seed;
use crate::simcore::SimConfig;
use crate::zsc::{
    crossplay_population, evaluate_m, split_population, train_population, train_zsc_agent,
    MEstimate, PartnerPopulation, PopulationPlan, PopulationSplit, DISABILITY_SETTINGS,
};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_MISSING_CHECKPOINT: i32 = 3;
pub const EXIT_OUTPUT_EXISTS: i32 = 4;
pub const EXIT_DIVERGED: i32 = 5;

/// Seeds of a run: `n` means `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    Count(u64),
    List(Vec<u64>),
}

impl Seeds {
    pub fn list(&self) -> Vec<u64> {
        match self {
            Seeds::Count(n) => (0..*n).collect(),
            Seeds::List(v) => v.clone(),
        }
    }
}

/// Grid for `train-population`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanSection {
    /// Empty means the top-level task.
    pub tasks: Vec<TaskId>,
    pub algorithms: Vec<Algorithm>,
    /// Disability settings, 1-based.
    pub settings: Vec<u8>,
    pub seeds_per_cell: u64,
    /// Use the fixed 434-run reference plan instead of the grid.
    pub reference: bool,
    pub jobs: usize,
}

impl Default for PlanSection {
    fn default() -> Self {
        Self {
            tasks: Vec::new(),
            algorithms: vec![Algorithm::Ippo],
            settings: (1..=DISABILITY_SETTINGS).collect(),
            seeds_per_cell: 1,
            reference: false,
            jobs: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Subset {
    #[default]
    All,
    Train,
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZscSection {
    pub split_seed: u64,
    pub episodes_per_partner: usize,
    /// Robot checkpoint scored by `zsc-eval`.
    pub robot_checkpoint: Option<PathBuf>,
    /// Split file written by `zsc-train`; otherwise `split_seed` decides.
    pub split: Option<PathBuf>,
    pub subset: Subset,
}

impl Default for ZscSection {
    fn default() -> Self {
        Self {
            split_seed: 0,
            episodes_per_partner: 8,
            robot_checkpoint: None,
            split: None,
            subset: Subset::All,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrossplaySection {
    pub episodes_per_cell: usize,
}

impl Default for CrossplaySection {
    fn default() -> Self {
        Self {
            episodes_per_cell: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchSection {
    pub env_counts: Vec<usize>,
    pub steps_per_point: u64,
    pub random_episodes: usize,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            env_counts: vec![1, 8, 64, 512],
            steps_per_point: 200_000,
            random_episodes: 32,
        }
    }
}

/// Complete description of a CLI job. Every key has a default, so an empty
/// file is valid; unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub task: TaskId,
    pub algorithm: Algorithm,
    pub seeds: Seeds,
    /// Run seed `s` trains from `derive_seed(base_seed, s)`.
    pub base_seed: u64,
    pub total_steps: u64,
    /// Environment steps between evaluations; 0 evaluates only at the end.
    pub eval_cadence: u64,
    pub eval_episodes: usize,
    pub output_dir: Option<PathBuf>,
    /// Partner population manifest.
    pub population: Option<PathBuf>,
    pub horizon: u32,
    pub sim: SimConfig,
    pub reward: RewardWeights,
    pub disability: DisabilityProfile,
    /// Overrides of the algorithm's reference PPO hyperparameters.
    pub ppo: toml::Table,
    /// Overrides of the algorithm's reference SAC hyperparameters.
    pub sac: toml::Table,
    pub plan: PlanSection,
    pub zsc: ZscSection,
    pub crossplay: CrossplaySection,
    pub bench: BenchSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: TaskId::Scratch,
            algorithm: Algorithm::Ippo,
            seeds: Seeds::Count(1),
            base_seed: 0,
            total_steps: 2_000_000,
            eval_cadence: 100_000,
            eval_episodes: 8,
            output_dir: None,
            population: None,
            horizon: DEFAULT_HORIZON,
            sim: SimConfig::default(),
            reward: RewardWeights::default(),
            disability: DisabilityProfile::default(),
            ppo: toml::Table::new(),
            sac: toml::Table::new(),
            plan: PlanSection::default(),
            zsc: ZscSection::default(),
            crossplay: CrossplaySection::default(),
            bench: BenchSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_table(parse_table(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_table(load_table(path)?)
    }

    pub fn from_table(table: toml::Table) -> Result<Self> {
        let cfg: Self = deserialize_at("", toml::Value::Table(table))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_table(&self) -> Result<toml::Table> {
        toml::Table::try_from(self).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.env_spec()?;
        self.disability.validate()?;
        let seeds = self.seeds.list();
        if seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != seeds.len() {
            return Err(Error::config("seeds", "seed list has duplicates"));
        }
        if self.eval_episodes == 0 {
            return Err(Error::config("eval_episodes", "must be positive"));
        }
        if let Some(&s) = self
            .plan
            .settings
            .iter()
            .find(|&&s| !(1..=DISABILITY_SETTINGS).contains(&s))
        {
            return Err(Error::config(
                "plan.settings",
                format!("setting {s} is outside 1..={DISABILITY_SETTINGS}"),
            ));
        }
        if self.zsc.episodes_per_partner == 0 {
            return Err(Error::config(
                "zsc.episodes_per_partner",
                "must be positive",
            ));
        }
        if self.crossplay.episodes_per_cell == 0 {
            return Err(Error::config(
                "crossplay.episodes_per_cell",
                "must be positive",
            ));
        }
        if self.bench.env_counts.is_empty() || self.bench.env_counts.contains(&0) {
            return Err(Error::config(
                "bench.env_counts",
                "needs positive environment counts",
            ));
        }
        // Surface bad overrides before any training starts.
        if !self.ppo.is_empty() {
            self.ppo_config(Algorithm::Ippo)?;
        }
        if !self.sac.is_empty() {
            self.sac_config(Algorithm::Isac)?;
        }
        Ok(())
    }

    pub fn env_spec(&self) -> Result<EnvSpec> {
        self.env_spec_for(self.task)
    }

    pub fn env_spec_for(&self, task: TaskId) -> Result<EnvSpec> {
        let spec = EnvSpec {
            task,
            sim: self.sim,
            reward: self.reward,
            horizon: self.horizon,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn ppo_config(&self, algorithm: Algorithm) -> Result<PpoConfig> {
        let base = match algorithm.default_config() {
            AlgoConfig::Ppo(c) => c,
            AlgoConfig::Sac(_) => PpoConfig::ippo(),
        };
        let cfg: PpoConfig = overlay("ppo", &base, &self.ppo)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn sac_config(&self, algorithm: Algorithm) -> Result<SacConfig> {
        let base = match algorithm.default_config() {
            AlgoConfig::Sac(c) => c,
            AlgoConfig::Ppo(_) => SacConfig::isac(),
        };
        let cfg: SacConfig = overlay("sac", &base, &self.sac)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reference hyperparameters of `algorithm` with this config's overrides.
    pub fn algo_config(&self, algorithm: Algorithm) -> Result<AlgoConfig> {
        Ok(if algorithm.is_ppo() {
            AlgoConfig::Ppo(self.ppo_config(algorithm)?)
        } else {
            AlgoConfig::Sac(self.sac_config(algorithm)?)
        })
    }

    /// Training configuration of one seeded run.
    pub fn train_config(
        &self,
        task: TaskId,
        algorithm: Algorithm,
        run_id: String,
    ) -> Result<TrainConfig> {
        Ok(TrainConfig {
            env: self.env_spec_for(task)?,
            disability: self.disability,
            algo: self.algo_config(algorithm)?,
            eval_every: self.eval_cadence,
            eval_episodes: self.eval_episodes,
            run_id,
        })
    }

    /// Copy with the override table of `algorithm`'s family written out in
    /// full, so the snapshot does not depend on built-in defaults.
    pub fn resolved(&self, algorithm: Algorithm) -> Result<Self> {
        let mut out = self.clone();
        match self.algo_config(algorithm)? {
            AlgoConfig::Ppo(c) => out.ppo = to_table("ppo", &c)?,
            AlgoConfig::Sac(c) => out.sac = to_table("sac", &c)?,
        }
        Ok(out)
    }

    fn run_seed(&self, seed: u64) -> u64 {
        derive_seed(self.base_seed, seed)
    }
}

fn parse_table(text: &str) -> Result<toml::Table> {
    text.parse::<toml::Table>()
        .map_err(|e| Error::config("config", e.message().to_owned()))
}

fn load_table(path: &Path) -> Result<toml::Table> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
    parse_table(&text)
}

fn deserialize_at<T: serde::de::DeserializeOwned>(prefix: &str, value: toml::Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let mut key = match (prefix.is_empty(), path.as_str()) {
            (true, _) => path.clone(),
            (false, ".") => prefix.to_owned(),
            (false, p) => format!("{prefix}.{p}"),
        };
        let msg = inner.to_string().trim_end().to_owned();
        if key.is_empty() || key == "." {
            key = "config".into();
        }
        Error::config(key, msg)
    })
}

fn to_table<T: Serialize>(key: &str, value: &T) -> Result<toml::Table> {
    toml::Table::try_from(value).map_err(|e| Error::config(key, e.to_string()))
}

fn overlay<T>(key: &str, base: &T, overrides: &toml::Table) -> Result<T>
where
    T: Serialize + serde::de::DeserializeOwned,
{
    let mut table = to_table(key, base)?;
    for (k, v) in overrides {
        table.insert(k.clone(), v.clone());
    }
    deserialize_at(key, toml::Value::Table(table))
}

/// Set a dotted key, creating intermediate tables.
fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::config(key, "malformed key"));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(key, format!("`{p}` is not a section")))?;
    }
    cur.insert(parts[parts.len() - 1].to_owned(), value);
    Ok(())
}

/// Parse the right-hand side of `key=value` as a TOML value, falling back to
/// a bare string.
fn parse_value(text: &str) -> toml::Value {
    format!("v = {text}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(text.to_owned()))
}

fn int(key: &str, v: u64) -> Result<toml::Value> {
    i64::try_from(v)
        .map(toml::Value::Integer)
        .map_err(|_| Error::config(key, "value does not fit a TOML integer"))
}

#[derive(Parser, Debug)]
#[command(
    name = "assistive-marl",
    version,
    about = "Train and evaluate assistive human-robot teams"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by the config-driven subcommands.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// TOML run configuration; missing keys take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override any config key, e.g. `--set ppo.num_envs=64`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Replace an existing output directory.
    #[arg(long)]
    pub force: bool,
    #[arg(long)]
    pub task: Option<String>,
    /// Base seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Co-train a robot and a human policy for each seed.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        algo: Option<String>,
        /// Number of seeds (0..n).
        #[arg(long, conflicts_with = "seed_list")]
        seeds: Option<u64>,
        #[arg(long, value_delimiter = ',')]
        seed_list: Option<Vec<u64>>,
        #[arg(long)]
        total_steps: Option<u64>,
        #[arg(long)]
        eval_cadence: Option<u64>,
        #[arg(long)]
        eval_episodes: Option<usize>,
    },
    /// Train a partner population over a grid of algorithms, disability
    /// settings and seeds.
    TrainPopulation {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        algos: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        settings: Option<Vec<u8>>,
        #[arg(long)]
        seeds_per_cell: Option<u64>,
        /// Use the 434-run reference plan.
        #[arg(long)]
        reference: bool,
        /// Steps per population member.
        #[arg(long)]
        total_steps: Option<u64>,
        /// Concurrent training runs.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Train a robot against half of a population and evaluate on the other half.
    ZscTrain {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        population: Option<PathBuf>,
        /// `ppo` or `sac`; defaults to ppo unless the config names one.
        #[arg(long)]
        algo: Option<String>,
        #[arg(long)]
        split_seed: Option<u64>,
        #[arg(long, conflicts_with = "seed_list")]
        seeds: Option<u64>,
        #[arg(long, value_delimiter = ',')]
        seed_list: Option<Vec<u64>>,
        #[arg(long)]
        total_steps: Option<u64>,
        #[arg(long)]
        episodes_per_partner: Option<usize>,
    },
    /// Expected return of a robot checkpoint against population members.
    ZscEval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        population: Option<PathBuf>,
        /// Split file from `zsc-train`.
        #[arg(long)]
        split: Option<PathBuf>,
        #[arg(long)]
        split_seed: Option<u64>,
        #[arg(long, value_enum)]
        subset: Option<Subset>,
        /// Episodes per partner.
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Pair every robot of a population with every human.
    Crossplay {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        population: Option<PathBuf>,
        /// Episodes per cell.
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Open-loop throughput across environment counts.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        env_counts: Option<Vec<usize>>,
        #[arg(long)]
        steps_per_point: Option<u64>,
        #[arg(long)]
        random_episodes: Option<usize>,
    },
    /// Train every combination of a hyperparameter grid and rank by AUC.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// JSON object `{"parameters": {"ppo.lr": [..], ...}}`.
        #[arg(long)]
        grid: PathBuf,
    },
    /// Collect CSV and JSON artifacts of several run directories into one.
    ReportData {
        #[arg(long, required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
}

/// Parse `argv` (program name first), run the subcommand and return the
/// process exit code. Errors go to stderr as one JSON object.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } => EXIT_CONFIG,
        Error::MissingCheckpoint(_) => EXIT_MISSING_CHECKPOINT,
        Error::OutputExists(_) => EXIT_OUTPUT_EXISTS,
        Error::Diverged { .. } => EXIT_DIVERGED,
        _ => EXIT_FAILURE,
    }
}

fn error_json(e: &Error) -> serde_json::Value {
    let kind = match e {
        Error::Contract(_) => "contract",
        Error::SimulationFault { .. } => "simulation-fault",
        Error::Config { .. } => "config",
        Error::MissingCheckpoint(_) => "missing-checkpoint",
        Error::Checkpoint(_) => "checkpoint",
        Error::Diverged { .. } => "diverged",
        Error::Duplicate(_) => "duplicate",
        Error::OutputExists(_) => "output-exists",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
        Error::Csv(_) => "csv",
    };
    let mut v = serde_json::json!({ "error": kind, "message": e.to_string() });
    match e {
        Error::Config { key, .. } => v["key"] = key.as_str().into(),
        Error::MissingCheckpoint(p) | Error::OutputExists(p) => {
            v["path"] = p.display().to_string().into()
        }
        _ => {}
    }
    v
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            common,
            algo,
            seeds,
            seed_list,
            total_steps,
            eval_cadence,
            eval_episodes,
        } => {
            let mut t = base_table(&common)?;
            opt_str(&mut t, "algorithm", algo)?;
            seeds_flag(&mut t, seeds, seed_list)?;
            opt_int(&mut t, "total_steps", total_steps)?;
            opt_int(&mut t, "eval_cadence", eval_cadence)?;
            opt_int(&mut t, "eval_episodes", eval_episodes.map(|v| v as u64))?;
            let cfg = RunConfig::from_table(t)?;
            let out = prepare_output(&cfg, "train", &common)?;
            let summary = train(&cfg, &out)?;
            fail_on_divergence(&summary)
        }
        Command::TrainPopulation {
            common,
            algos,
            settings,
            seeds_per_cell,
            reference,
            total_steps,
            jobs,
        } => {
            let mut t = base_table(&common)?;
            if let Some(a) = algos {
                set_path(&mut t, "plan.algorithms", str_array(a))?;
            }
            if let Some(s) = settings {
                let v = s
                    .into_iter()
                    .map(|x| toml::Value::Integer(x.into()))
                    .collect();
                set_path(&mut t, "plan.settings", toml::Value::Array(v))?;
            }
            opt_int(&mut t, "plan.seeds_per_cell", seeds_per_cell)?;
            if reference {
                set_path(&mut t, "plan.reference", toml::Value::Boolean(true))?;
            }
            opt_int(&mut t, "total_steps", total_steps)?;
            opt_int(&mut t, "plan.jobs", jobs.map(|v| v as u64))?;
            let cfg = RunConfig::from_table(t)?;
            let out = prepare_output(&cfg, "train-population", &common)?;
            train_partner_population(&cfg, &out).map(|_| ())
        }
        Command::ZscTrain {
            common,
            population,
            algo,
            split_seed,
            seeds,
            seed_list,
            total_steps,
            episodes_per_partner,
        } => {
            let mut t = base_table(&common)?;
            opt_path(&mut t, "population", population)?;
            opt_str(&mut t, "algorithm", algo)?;
            opt_int(&mut t, "zsc.split_seed", split_seed)?;
            seeds_flag(&mut t, seeds, seed_list)?;
            opt_int(&mut t, "total_steps", total_steps)?;
            opt_int(
                &mut t,
                "zsc.episodes_per_partner",
                episodes_per_partner.map(|v| v as u64),
            )?;
            let mut cfg = RunConfig::from_table(t)?;
            if !matches!(cfg.algorithm, Algorithm::Ppo | Algorithm::Sac) {
                cfg.algorithm = Algorithm::Ppo;
            }
            let out = prepare_output(&cfg, "zsc-train", &common)?;
            zsc_train(&cfg, &out).map(|_| ())
        }
        Command::ZscEval {
            common,
            checkpoint,
            population,
            split,
            split_seed,
            subset,
            episodes,
        } => {
            let mut t = base_table(&common)?;
            opt_path(&mut t, "zsc.robot_checkpoint", checkpoint)?;
            opt_path(&mut t, "population", population)?;
            opt_path(&mut t, "zsc.split", split)?;
            opt_int(&mut t, "zsc.split_seed", split_seed)?;
            if let Some(s) = subset {
                let name = s.to_possible_value().expect("no skipped variants");
                set_path(
                    &mut t,
                    "zsc.subset",
                    toml::Value::String(name.get_name().into()),
                )?;
            }
            opt_int(
                &mut t,
                "zsc.episodes_per_partner",
                episodes.map(|v| v as u64),
            )?;
            let cfg = RunConfig::from_table(t)?;
            let out = prepare_output(&cfg, "zsc-eval", &common)?;
            zsc_eval(&cfg, &out).map(|_| ())
        }
        Command::Crossplay {
            common,
            population,
            episodes,
        } => {
            let mut t = base_table(&common)?;
            opt_path(&mut t, "population", population)?;
            opt_int(
                &mut t,
                "crossplay.episodes_per_cell",
                episodes.map(|v| v as u64),
            )?;
            let cfg = RunConfig::from_table(t)?;
            let out = prepare_output(&cfg, "crossplay", &common)?;
            crossplay_run(&cfg, &out).map(|_| ())
        }
        Command::Bench {
            common,
            env_counts,
            steps_per_point,
            random_episodes,
        } => {
            let mut t = base_table(&common)?;
            if let Some(c) = env_counts {
                let v = c
                    .into_iter()
                    .map(|x| int("bench.env_counts", x as u64))
                    .collect::<Result<_>>()?;
                set_path(&mut t, "bench.env_counts", toml::Value::Array(v))?;
            }
            opt_int(&mut t, "bench.steps_per_point", steps_per_point)?;
            opt_int(
                &mut t,
                "bench.random_episodes",
                random_episodes.map(|v| v as u64),
            )?;
            let cfg = RunConfig::from_table(t)?;
            let out = prepare_output(&cfg, "bench", &common)?;
            bench_run(&cfg, &out).map(|_| ())
        }
        Command::Sweep { common, grid } => {
            let t = base_table(&common)?;
            let cfg = RunConfig::from_table(t.clone())?;
            let grid = SweepGrid::load(&grid)?;
            let out = prepare_output(&cfg, "sweep", &common)?;
            sweep(&t, &grid, &out).map(|_| ())
        }
        Command::ReportData {
            inputs,
            output_dir,
            force,
        } => {
            if let Some(bad) = inputs.iter().find(|p| !p.is_dir()) {
                return Err(Error::config(
                    "inputs",
                    format!("{} is not a directory", bad.display()),
                ));
            }
            let out = output_dir.unwrap_or_else(|| PathBuf::from("runs/report-data"));
            claim_dir(&out, force)?;
            report_data(&inputs, &out).map(|_| ())
        }
    }
}

fn base_table(common: &Common) -> Result<toml::Table> {
    let mut t = match &common.config {
        Some(p) => load_table(p)?,
        None => toml::Table::new(),
    };
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::config(kv.as_str(), "expected KEY=VALUE"))?;
        set_path(&mut t, k.trim(), parse_value(v.trim()))?;
    }
    opt_str(&mut t, "task", common.task.clone())?;
    opt_int(&mut t, "base_seed", common.seed)?;
    opt_path(&mut t, "output_dir", common.output_dir.clone())?;
    Ok(t)
}

fn opt_str(t: &mut toml::Table, key: &str, v: Option<String>) -> Result<()> {
    match v {
        Some(v) => set_path(t, key, toml::Value::String(v)),
        None => Ok(()),
    }
}

fn opt_int(t: &mut toml::Table, key: &str, v: Option<u64>) -> Result<()> {
    match v {
        Some(v) => set_path(t, key, int(key, v)?),
        None => Ok(()),
    }
}

fn opt_path(t: &mut toml::Table, key: &str, v: Option<PathBuf>) -> Result<()> {
    opt_str(t, key, v.map(|p| p.display().to_string()))
}

fn str_array(v: Vec<String>) -> toml::Value {
    toml::Value::Array(v.into_iter().map(toml::Value::String).collect())
}

fn seeds_flag(t: &mut toml::Table, count: Option<u64>, list: Option<Vec<u64>>) -> Result<()> {
    if let Some(n) = count {
        set_path(t, "seeds", int("seeds", n)?)?;
    }
    if let Some(list) = list {
        let v = list
            .into_iter()
            .map(|s| int("seeds", s))
            .collect::<Result<_>>()?;
        set_path(t, "seeds", toml::Value::Array(v))?;
    }
    Ok(())
}

fn prepare_output(cfg: &RunConfig, command: &str, common: &Common) -> Result<PathBuf> {
    let out = cfg
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs").join(command));
    claim_dir(&out, common.force)?;
    Ok(out)
}

/// Create `dir`, refusing a non-empty one unless `force`, in which case its
/// contents are removed first.
pub fn claim_dir(dir: &Path, force: bool) -> Result<()> {
    let occupied = match std::fs::read_dir(dir) {
        Ok(mut it) => it.next().is_some(),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => false,
        Err(e) => return Err(e.into()),
    };
    if occupied {
        if !force {
            return Err(Error::OutputExists(dir.to_owned()));
        }
        let cwd = std::env::current_dir()?.canonicalize()?;
        if cwd.starts_with(dir.canonicalize()?) {
            return Err(Error::config(
                "output_dir",
                "refusing to clear a directory containing the working directory",
            ));
        }
        std::fs::remove_dir_all(dir)?;
    }
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn write_snapshot(cfg: &RunConfig, out: &Path) -> Result<()> {
    std::fs::write(out.join("config.toml"), cfg.to_toml_string()?)?;
    Ok(())
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    std::fs::write(path, serde_json::to_vec_pretty(value)?)?;
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub run_seed: u64,
    #[serde(flatten)]
    pub status: RunStatus,
    pub env_steps: u64,
    pub final_iqm: Option<f64>,
    /// Paths relative to the output directory.
    pub runlog: PathBuf,
    pub checkpoints: Vec<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainSummary {
    pub task: TaskId,
    pub algorithm: Algorithm,
    pub base_seed: u64,
    pub total_steps: u64,
    pub runs: Vec<SeedRecord>,
    /// Across-seed statistics; absent when no run logged an evaluation.
    pub summary: Option<RunSetSummary>,
}

impl TrainSummary {
    pub fn diverged(&self) -> Option<&SeedRecord> {
        self.runs
            .iter()
            .find(|r| matches!(r.status, RunStatus::Diverged { .. }))
    }
}

fn fail_on_divergence(summary: &TrainSummary) -> Result<()> {
    match summary.diverged() {
        Some(SeedRecord {
            status: RunStatus::Diverged { env_step, reason },
            seed,
            ..
        }) => Err(Error::Diverged {
            step: *env_step,
            reason: format!("seed {seed}: {reason}"),
        }),
        _ => Ok(()),
    }
}

fn seed_record(
    out: &Path,
    seed: u64,
    run_seed: u64,
    outcome: &TrainOutcome,
    checkpoints: Vec<PathBuf>,
) -> SeedRecord {
    SeedRecord {
        seed,
        run_seed,
        status: outcome.status.clone(),
        env_steps: outcome.env_steps,
        final_iqm: outcome.log.last().map(|r| r.eval_return_iqm),
        runlog: PathBuf::from(format!("seed-{seed}")).join("runlog.csv"),
        checkpoints: checkpoints
            .into_iter()
            .map(|p| p.strip_prefix(out).map(Path::to_path_buf).unwrap_or(p))
            .collect(),
    }
}

fn save_policies(
    cfg: &RunConfig,
    task: TaskId,
    seed: u64,
    outcome: &TrainOutcome,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    if outcome.status != RunStatus::Completed {
        return Ok(Vec::new());
    }
    let mut paths = Vec::new();
    for role in AgentRole::BOTH {
        if let Some(policy) = outcome.policy(role) {
            let path = dir.join(format!("{}.ckpt", role.name()));
            Checkpoint::new(
                task,
                cfg.algorithm.name(),
                role,
                cfg.disability,
                seed,
                policy.clone(),
            )
            .save(&path)?;
            paths.push(path);
        }
    }
    Ok(paths)
}

/// Co-train one team per seed. Writes `config.toml`, `seed-<s>/runlog.csv`,
/// `seed-<s>/{robot,human}.ckpt` and `summary.json` into `out`.
pub fn train(cfg: &RunConfig, out: &Path) -> Result<TrainSummary> {
    if !Algorithm::MARL.contains(&cfg.algorithm) {
        return Err(Error::config(
            "algorithm",
            format!(
                "`train` co-trains both agents with ippo, mappo, isac or masac, not {}",
                cfg.algorithm
            ),
        ));
    }
    let cfg = cfg.resolved(cfg.algorithm)?;
    write_snapshot(&cfg, out)?;
    let mut runs = Vec::new();
    let mut logs = Vec::new();
    for seed in cfg.seeds.list() {
        let run_seed = cfg.run_seed(seed);
        let tc = cfg.train_config(
            cfg.task,
            cfg.algorithm,
            format!("{}-{}-s{seed}", cfg.algorithm, cfg.task),
        )?;
        let outcome = train_team(
            cfg.task,
            cfg.algorithm,
            &TeamSpec::co_training(),
            &tc,
            cfg.total_steps,
            run_seed,
        )?;
        let dir = out.join(format!("seed-{seed}"));
        std::fs::create_dir_all(&dir)?;
        outcome.log.write_csv(&dir.join("runlog.csv"))?;
        let ckpts = save_policies(&cfg, cfg.task, seed, &outcome, &dir)?;
        let record = seed_record(out, seed, run_seed, &outcome, ckpts);
        println!(
            "seed {seed}: {} env steps, final IQM {}",
            record.env_steps,
            fmt_opt(record.final_iqm)
        );
        runs.push(record);
        logs.push(outcome.log);
    }
    let summary = TrainSummary {
        task: cfg.task,
        algorithm: cfg.algorithm,
        base_seed: cfg.base_seed,
        total_steps: cfg.total_steps,
        runs,
        summary: summarize(&logs, cfg.base_seed)?,
    };
    write_json(&summary, &out.join("summary.json"))?;
    Ok(summary)
}

fn summarize(logs: &[RunLog], seed: u64) -> Result<Option<RunSetSummary>> {
    if logs.iter().all(RunLog::is_empty) {
        return Ok(None);
    }
    RunSetSummary::from_logs(logs, 2000, seed).map(Some)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.1}"))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PopulationSummary {
    pub planned: usize,
    pub trained: usize,
    pub failed: usize,
    pub manifest: PathBuf,
    pub roll_up: String,
}

/// Train the planned population into `out` (`manifest.json`,
/// `checkpoints/`) and print its roll-up.
pub fn train_partner_population(cfg: &RunConfig, out: &Path) -> Result<PartnerPopulation> {
    let p = &cfg.plan;
    let plan = if p.reference {
        PopulationPlan::reference()
    } else {
        let tasks = if p.tasks.is_empty() {
            vec![cfg.task]
        } else {
            p.tasks.clone()
        };
        PopulationPlan::grid(&tasks, &p.algorithms, &p.settings, p.seeds_per_cell)?
    };
    for req in plan.requests() {
        req.validate()?;
        cfg.algo_config(req.algorithm)?;
    }
    write_snapshot(cfg, out)?;
    let configure = |req: &crate::zsc::RunRequest| {
        cfg.train_config(req.task, req.algorithm, req.id())
            .expect("validated above")
    };
    let pop = train_population(&plan, out, cfg.total_steps, p.jobs, &configure)?;
    let roll_up = pop.roll_up();
    println!("{roll_up}");
    for f in &pop.failed {
        println!("failed {}: {}", f.request.id(), f.reason);
    }
    write_json(
        &PopulationSummary {
            planned: plan.len(),
            trained: pop.len(),
            failed: pop.failed.len(),
            manifest: PathBuf::from("manifest.json"),
            roll_up,
        },
        &out.join("summary.json"),
    )?;
    Ok(pop)
}

fn load_population(cfg: &RunConfig) -> Result<(PartnerPopulation, PathBuf)> {
    let path = cfg
        .population
        .as_ref()
        .ok_or_else(|| Error::config("population", "a population manifest is required"))?;
    let pop = PartnerPopulation::load(path)?;
    if pop.is_empty() {
        return Err(Error::config("population", "the manifest lists no members"));
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((pop, base))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitFile {
    pub seed: u64,
    #[serde(flatten)]
    pub split: PopulationSplit,
    pub train_labels: Vec<String>,
    pub test_labels: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZscSeedRecord {
    #[serde(flatten)]
    pub run: SeedRecord,
    pub m_train: MEstimate,
    pub m_test: MEstimate,
    /// Whether the held-out mean lies inside the training interval.
    pub test_within_train_ci: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZscSummary {
    pub task: TaskId,
    pub algorithm: Algorithm,
    pub population: PathBuf,
    pub split: PathBuf,
    pub runs: Vec<ZscSeedRecord>,
}

/// Train a robot per seed against the training half of the population,
/// then score it against both halves.
pub fn zsc_train(cfg: &RunConfig, out: &Path) -> Result<ZscSummary> {
    let (pop, base) = load_population(cfg)?;
    let task = pop.task()?;
    let mut cfg = cfg.resolved(cfg.algorithm)?;
    cfg.task = task;
    write_snapshot(&cfg, out)?;
    let partners = pop.load_partners(&base)?;
    let split = split_population(partners.len(), cfg.zsc.split_seed)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| partners[i].clone()).collect::<Vec<_>>();
    let (train_set, test_set) = (pick(&split.train), pick(&split.test));
    let labels = |idx: &[usize]| idx.iter().map(|&i| pop.entries[i].id.clone()).collect();
    write_json(
        &SplitFile {
            seed: cfg.zsc.split_seed,
            train_labels: labels(&split.train),
            test_labels: labels(&split.test),
            split: split.clone(),
        },
        &out.join("split.json"),
    )?;
    let env = cfg.env_spec()?;
    let mut runs = Vec::new();
    for seed in cfg.seeds.list() {
        let run_seed = cfg.run_seed(seed);
        let tc = cfg.train_config(
            task,
            cfg.algorithm,
            format!("zsc-{}-{task}-s{seed}", cfg.algorithm),
        )?;
        let outcome = train_zsc_agent(
            task,
            cfg.algorithm,
            train_set.clone(),
            test_set.clone(),
            &tc,
            cfg.total_steps,
            run_seed,
        )?;
        let dir = out.join(format!("seed-{seed}"));
        std::fs::create_dir_all(&dir)?;
        outcome.log.write_csv(&dir.join("runlog.csv"))?;
        if let Some(h) = &outcome.held_out_log {
            h.write_csv(&dir.join("runlog-held-out.csv"))?;
        }
        let ckpts = save_policies(&cfg, task, seed, &outcome, &dir)?;
        let run = seed_record(out, seed, run_seed, &outcome, ckpts);
        if outcome.status != RunStatus::Completed {
            println!("seed {seed}: {:?}", outcome.status);
            continue;
        }
        let robot = outcome.policy(AgentRole::Robot).expect("the robot learns");
        let eval_seed = derive_seed(run_seed, 3);
        let n = cfg.zsc.episodes_per_partner;
        let m_train = evaluate_m(&env, robot, &train_set, n, eval_seed)?;
        let m_test = evaluate_m(&env, robot, &test_set, n, derive_seed(eval_seed, 1))?;
        println!(
            "seed {seed}: M_train {:.1} [{:.1}, {:.1}], M_test {:.1}",
            m_train.m, m_train.ci_lo, m_train.ci_hi, m_test.m
        );
        runs.push(ZscSeedRecord {
            test_within_train_ci: m_train.contains(m_test.m),
            run,
            m_train,
            m_test,
        });
    }
    let summary = ZscSummary {
        task,
        algorithm: cfg.algorithm,
        population: cfg.population.clone().expect("checked on load"),
        split: PathBuf::from("split.json"),
        runs,
    };
    write_json(&summary, &out.join("summary.json"))?;
    Ok(summary)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZscEvalSummary {
    pub checkpoint: PathBuf,
    pub subset: Subset,
    pub partners: Vec<String>,
    pub estimate: MEstimate,
}

/// Score a robot checkpoint against all, the training or the held-out
/// members of a population.
pub fn zsc_eval(cfg: &RunConfig, out: &Path) -> Result<ZscEvalSummary> {
    let ckpt_path =
        cfg.zsc.robot_checkpoint.clone().ok_or_else(|| {
            Error::config("zsc.robot_checkpoint", "a robot checkpoint is required")
        })?;
    let ckpt = Checkpoint::load(&ckpt_path)?;
    let (pop, base) = load_population(cfg)?;
    let task = pop.task()?;
    if ckpt.header.task != task || ckpt.header.agent_role != AgentRole::Robot {
        return Err(Error::Checkpoint(format!(
            "{} is not a robot policy for {task}",
            ckpt_path.display()
        )));
    }
    let mut cfg = cfg.clone();
    cfg.task = task;
    write_snapshot(&cfg, out)?;
    let split = match &cfg.zsc.split {
        Some(p) => serde_json::from_slice::<SplitFile>(&std::fs::read(p)?)?.split,
        None => split_population(pop.len().max(2), cfg.zsc.split_seed)?,
    };
    let indices: Vec<usize> = match cfg.zsc.subset {
        Subset::All => (0..pop.len()).collect(),
        Subset::Train => split.train,
        Subset::Test => split.test,
    };
    if indices.iter().any(|&i| i >= pop.len()) || indices.is_empty() {
        return Err(Error::config(
            "zsc.split",
            "split does not match the population",
        ));
    }
    let all = pop.load_partners(&base)?;
    let partners: Vec<_> = indices.iter().map(|&i| all[i].clone()).collect();
    let estimate = evaluate_m(
        &cfg.env_spec()?,
        &ckpt.policy,
        &partners,
        cfg.zsc.episodes_per_partner,
        cfg.base_seed,
    )?;
    println!(
        "M = {:.1} [{:.1}, {:.1}] over {} partners",
        estimate.m,
        estimate.ci_lo,
        estimate.ci_hi,
        partners.len()
    );
    let summary = ZscEvalSummary {
        checkpoint: ckpt_path,
        subset: cfg.zsc.subset,
        partners: partners.iter().map(|p| p.label.clone()).collect(),
        estimate,
    };
    write_json(&summary, &out.join("summary.json"))?;
    Ok(summary)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossplaySummary {
    pub n: usize,
    pub episodes_per_cell: usize,
    pub diagonal_mean: f64,
    pub off_diagonal_mean: f64,
    pub permutation: Vec<usize>,
    pub matrix: PathBuf,
}

/// Cross-play matrix of a population, written to `crossplay.json`.
pub fn crossplay_run(cfg: &RunConfig, out: &Path) -> Result<CrossplaySummary> {
    let (pop, base) = load_population(cfg)?;
    let mut cfg = cfg.clone();
    cfg.task = pop.task()?;
    write_snapshot(&cfg, out)?;
    let m = crossplay_population(
        &pop,
        &base,
        Some(cfg.env_spec()?),
        cfg.crossplay.episodes_per_cell,
        cfg.base_seed,
    )?;
    m.save(&out.join("crossplay.json"))?;
    let n = m.len();
    let off: Vec<f64> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| m.matrix[i][j])
        .collect();
    let summary = CrossplaySummary {
        n,
        episodes_per_cell: m.episodes_per_cell,
        diagonal_mean: m.diagonal_mean(),
        off_diagonal_mean: if off.is_empty() {
            f64::NAN
        } else {
            off.iter().sum::<f64>() / off.len() as f64
        },
        permutation: m.permutation.clone(),
        matrix: PathBuf::from("crossplay.json"),
    };
    println!(
        "{n}x{n} cross-play: diagonal {:.1}, off-diagonal {:.1}",
        summary.diagonal_mean, summary.off_diagonal_mean
    );
    write_json(&summary, &out.join("summary.json"))?;
    Ok(summary)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchSummary {
    pub task: TaskId,
    pub rows: Vec<SpsRow>,
    /// SPS at the largest count over SPS at the smallest.
    pub speedup: f64,
    pub reference_sps_512: Option<f64>,
    pub random_policy_iqm: f64,
    pub available_parallelism: usize,
}

/// Open-loop throughput per environment count plus the random-policy
/// baseline, written to `bench.csv` and `summary.json`.
pub fn bench_run(cfg: &RunConfig, out: &Path) -> Result<BenchSummary> {
    write_snapshot(cfg, out)?;
    let spec = cfg.env_spec()?;
    let b = &cfg.bench;
    let rows = b
        .env_counts
        .iter()
        .map(|&n| {
            let row = open_loop_sps_spec(spec, n, b.steps_per_point.max(n as u64), cfg.base_seed)?;
            println!("{:>6} envs: {:>10.0} steps/s", n, row.sps);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    save_csv(&rows, &out.join("bench.csv"))?;
    let (lo, hi) = (
        rows.iter().min_by_key(|r| r.n_envs).expect("non-empty"),
        rows.iter().max_by_key(|r| r.n_envs).expect("non-empty"),
    );
    let random = if b.random_episodes > 0 {
        iqm(&random_policy_returns(
            cfg.task,
            b.random_episodes,
            cfg.base_seed,
        )?)?
    } else {
        f64::NAN
    };
    let summary = BenchSummary {
        task: cfg.task,
        speedup: hi.sps / lo.sps,
        reference_sps_512: REFERENCE_SPS
            .iter()
            .find(|(t, _)| *t == cfg.task)
            .map(|(_, s)| *s),
        random_policy_iqm: random,
        available_parallelism: std::thread::available_parallelism().map_or(1, |n| n.get()),
        rows,
    };
    write_json(&summary, &out.join("summary.json"))?;
    Ok(summary)
}

/// Hyperparameter grid: dotted config keys to candidate values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub parameters: BTreeMap<String, Vec<serde_json::Value>>,
}

impl SweepGrid {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::config("grid", format!("cannot read {}: {e}", path.display())))?;
        let grid: Self =
            serde_json::from_slice(&bytes).map_err(|e| Error::config("grid", e.to_string()))?;
        if grid.parameters.is_empty() || grid.parameters.values().any(Vec::is_empty) {
            return Err(Error::config(
                "grid.parameters",
                "every parameter needs values",
            ));
        }
        Ok(grid)
    }

    /// All combinations in key order, the last key varying fastest.
    pub fn combinations(&self) -> Vec<Vec<(String, serde_json::Value)>> {
        let mut out: Vec<Vec<(String, serde_json::Value)>> = vec![Vec::new()];
        for (k, values) in &self.parameters {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |v| {
                        let mut c = prefix.clone();
                        c.push((k.clone(), v.clone()));
                        c
                    })
                })
                .collect();
        }
        out
    }
}

fn json_to_toml(key: &str, v: &serde_json::Value) -> Result<toml::Value> {
    toml::Value::try_from(v).map_err(|e| Error::config(key, e.to_string()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepTrial {
    pub rank: usize,
    pub trial: usize,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub mean_auc: f64,
    pub final_iqm: f64,
    pub diverged: bool,
    pub dir: PathBuf,
}

/// Train every grid combination on top of `base` and rank by mean AUC
/// (diverged trials last). Writes `trial-<k>/`, `sweep.csv` and `summary.json`.
pub fn sweep(base: &toml::Table, grid: &SweepGrid, out: &Path) -> Result<Vec<SweepTrial>> {
    let combos = grid.combinations();
    let configs = combos
        .iter()
        .map(|combo| {
            let mut t = base.clone();
            for (k, v) in combo {
                set_path(&mut t, k, json_to_toml(k, v)?)?;
            }
            RunConfig::from_table(t)
        })
        .collect::<Result<Vec<_>>>()?;
    write_snapshot(&RunConfig::from_table(base.clone())?, out)?;
    write_json(grid, &out.join("grid.json"))?;
    let mut trials = Vec::new();
    for (k, (combo, cfg)) in combos.iter().zip(&configs).enumerate() {
        let dir = out.join(format!("trial-{k:03}"));
        std::fs::create_dir_all(&dir)?;
        println!("trial {k}: {}", describe(combo));
        let summary = train(cfg, &dir)?;
        let (mean_auc, final_iqm) = summary
            .summary
            .as_ref()
            .map_or((f64::NAN, f64::NAN), |s| (s.mean_auc, s.final_summary.iqm));
        trials.push(SweepTrial {
            rank: 0,
            trial: k,
            parameters: combo.iter().cloned().collect(),
            mean_auc,
            final_iqm,
            diverged: summary.diverged().is_some(),
            dir: PathBuf::from(format!("trial-{k:03}")),
        });
    }
    let score = |t: &SweepTrial| {
        if t.diverged || t.mean_auc.is_nan() {
            f64::NEG_INFINITY
        } else {
            t.mean_auc
        }
    };
    trials.sort_by(|a, b| score(b).total_cmp(&score(a)).then(a.trial.cmp(&b.trial)));
    for (r, t) in trials.iter_mut().enumerate() {
        t.rank = r + 1;
    }
    write_sweep_csv(&trials, grid, &out.join("sweep.csv"))?;
    write_json(&trials, &out.join("summary.json"))?;
    for t in trials.iter().take(5) {
        println!(
            "#{} trial {}: AUC {:.1}, final IQM {:.1}{}",
            t.rank,
            t.trial,
            t.mean_auc,
            t.final_iqm,
            if t.diverged { " (diverged)" } else { "" }
        );
    }
    Ok(trials)
}

fn describe(combo: &[(String, serde_json::Value)]) -> String {
    combo
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn write_sweep_csv(trials: &[SweepTrial], grid: &SweepGrid, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["rank".to_owned(), "trial".into()];
    header.extend(grid.parameters.keys().cloned());
    header.extend(["mean_auc", "final_iqm", "diverged"].map(String::from));
    w.write_record(&header)?;
    for t in trials {
        let mut rec = vec![t.rank.to_string(), t.trial.to_string()];
        rec.extend(grid.parameters.keys().map(|k| t.parameters[k].to_string()));
        rec.extend([
            t.mean_auc.to_string(),
            t.final_iqm.to_string(),
            t.diverged.to_string(),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundledFile {
    pub source: PathBuf,
    pub file: String,
    /// `runlog`, `bench`, `crossplay`, `manifest`, `summary`, `split` or `other`.
    pub kind: String,
}

/// Copy every CSV and JSON file below `inputs` into `out` under flattened,
/// unique names and list them in `index.json`.
pub fn report_data(inputs: &[PathBuf], out: &Path) -> Result<Vec<BundledFile>> {
    let mut files = Vec::new();
    for (k, input) in inputs.iter().enumerate() {
        if !input.is_dir() {
            return Err(Error::config(
                "inputs",
                format!("{} is not a directory", input.display()),
            ));
        }
        let mut found = Vec::new();
        collect_files(input, &mut found)?;
        found.sort();
        let stem = input
            .file_name()
            .map_or_else(|| format!("input{k}"), |s| s.to_string_lossy().into_owned());
        for path in found {
            let rel = path.strip_prefix(input).expect("walked from input");
            let flat = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("__");
            let mut name = format!("{k:02}-{stem}__{flat}");
            if name.len() > 200 {
                name = format!("{k:02}-{}", files.len()) + &flat[flat.len() - 100..];
            }
            std::fs::copy(&path, out.join(&name))?;
            files.push(BundledFile {
                kind: file_kind(&path).into(),
                source: path,
                file: name,
            });
        }
    }
    write_json(&files, &out.join("index.json"))?;
    println!("bundled {} files into {}", files.len(), out.display());
    Ok(files)
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(&path, out)?;
        } else if matches!(
            path.extension().and_then(|e| e.to_str()),
            Some("csv" | "json")
        ) {
            out.push(path);
        }
    }
    Ok(())
}

fn file_kind(path: &Path) -> &'static str {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
    match name {
        n if n.starts_with("runlog") => "runlog",
        "bench.csv" => "bench",
        "crossplay.json" => "crossplay",
        "manifest.json" => "manifest",
        "summary.json" => "summary",
        "split.json" => "split",
        "sweep.csv" => "sweep",
        _ => "other",
    }
}
