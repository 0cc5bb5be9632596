//! Co-train robot and human with IPPO or MAPPO on one task.
//!
//! cargo run --release --example train_ippo -- [task] [algorithm] [steps]

use assistive_marl::algos::{train_team, AlgoConfig, Algorithm, PpoConfig, TeamSpec, TrainConfig};
use assistive_marl::envs::TaskId;

fn main() -> assistive_marl::Result<()> {
    let mut args = std::env::args().skip(1);
    let task: TaskId = args.next().as_deref().unwrap_or("scratch").parse()?;
    let algorithm: Algorithm = args.next().as_deref().unwrap_or("ippo").parse()?;
    let steps: u64 = args
        .next()
        .map_or(300_000, |s| s.parse().expect("step count"));

    let mut cfg = TrainConfig::new(task, algorithm);
    if let AlgoConfig::Ppo(ppo) = &cfg.algo {
        cfg.algo = AlgoConfig::Ppo(PpoConfig {
            num_envs: 64,
            ..ppo.clone()
        });
    }
    cfg.eval_every = steps / 5;
    let out = train_team(task, algorithm, &TeamSpec::co_training(), &cfg, steps, 0)?;
    for row in &out.log.rows {
        println!(
            "{:>9} steps  IQM {:>7.1}  [{:.1}, {:.1}]",
            row.env_step, row.eval_return_iqm, row.eval_return_ci_lo, row.eval_return_ci_hi
        );
    }
    println!("{:?} after {} env steps", out.status, out.env_steps);
    Ok(())
}
