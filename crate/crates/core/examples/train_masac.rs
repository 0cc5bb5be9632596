//! Co-train with the soft actor-critic baselines (ISAC or MASAC).
//!
//! cargo run --release --example train_masac -- [task] [isac|masac] [steps]

use assistive_marl::algos::{train_team, Algorithm, TeamSpec, TrainConfig};
use assistive_marl::envs::TaskId;

fn main() -> assistive_marl::Result<()> {
    let mut args = std::env::args().skip(1);
    let task: TaskId = args.next().as_deref().unwrap_or("arm-assist").parse()?;
    let algorithm: Algorithm = args.next().as_deref().unwrap_or("masac").parse()?;
    let steps: u64 = args
        .next()
        .map_or(20_000, |s| s.parse().expect("step count"));

    let mut cfg = TrainConfig::new(task, algorithm);
    cfg.eval_every = steps / 4;
    cfg.eval_episodes = 4;
    let out = train_team(task, algorithm, &TeamSpec::co_training(), &cfg, steps, 0)?;
    for row in &out.log.rows {
        println!(
            "{:>8} steps  IQM {:>8.1}",
            row.env_step, row.eval_return_iqm
        );
    }
    println!("{:?}", out.status);
    Ok(())
}
