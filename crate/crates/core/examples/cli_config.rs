//! Drive the command-line layer from code: parse a run configuration, show
//! the resolved hyperparameters and run a short `train` job.

use assistive_marl::algos::Algorithm;
use assistive_marl::cli::{run_command, RunConfig};

const CONFIG: &str = r#"
task = "bed-bath"
algorithm = "mappo"
seeds = [0, 1]
total_steps = 4096
eval_cadence = 2048
eval_episodes = 2

[ppo]
num_envs = 16
rollout_steps = 32

[disability]
strength_multiplier = 0.5
"#;

fn main() -> assistive_marl::Result<()> {
    let cfg = RunConfig::from_toml_str(CONFIG)?;
    let ppo = cfg.ppo_config(Algorithm::Mappo)?;
    println!(
        "mappo lr {} clip {} envs {}",
        ppo.lr, ppo.clip_eps, ppo.num_envs
    );

    let dir = std::env::temp_dir().join("assistive-marl-cli");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("run.toml");
    std::fs::write(&path, CONFIG)?;
    let out = dir.join("train");
    let code = run_command([
        "assistive-marl",
        "train",
        "--config",
        path.to_str().unwrap(),
        "--output-dir",
        out.to_str().unwrap(),
        "--force",
    ]);
    println!(
        "exit code {code}; summary at {}",
        out.join("summary.json").display()
    );
    Ok(())
}
