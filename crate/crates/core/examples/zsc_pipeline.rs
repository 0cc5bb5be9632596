//! Zero-shot coordination end to end: train a small partner population,
//! split it, train a robot against the training half and compare its
//! expected return on both halves.
//!
//! cargo run --release --example zsc_pipeline -- [partner_steps] [robot_steps]

use assistive_marl::algos::{AlgoConfig, Algorithm, PpoConfig, TrainConfig};
use assistive_marl::envs::{AgentRole, EnvSpec, TaskId};
use assistive_marl::zsc::{
    evaluate_m, split_population, train_population, train_zsc_agent, PopulationPlan, RunRequest,
};

fn desk(task: TaskId, algorithm: Algorithm) -> TrainConfig {
    let mut cfg = TrainConfig::new(task, algorithm);
    cfg.algo = AlgoConfig::Ppo(PpoConfig {
        num_envs: 64,
        ..PpoConfig::ippo()
    });
    cfg.eval_every = 0;
    cfg.eval_episodes = 4;
    cfg
}

fn main() -> assistive_marl::Result<()> {
    let mut args = std::env::args().skip(1);
    let partner_steps: u64 = args.next().map_or(100_000, |s| s.parse().expect("steps"));
    let robot_steps: u64 = args.next().map_or(200_000, |s| s.parse().expect("steps"));
    let task = TaskId::Scratch;
    let dir = std::env::temp_dir().join("assistive-marl-zsc");
    std::fs::create_dir_all(&dir)?;

    let plan = PopulationPlan::grid(&[task], &[Algorithm::Ippo], &[1, 9], 2)?;
    let configure = |req: &RunRequest| desk(req.task, req.algorithm);
    let pop = train_population(&plan, &dir, partner_steps, 1, &configure)?;
    println!("{}", pop.roll_up());

    let partners = pop.load_partners(&dir)?;
    let split = split_population(partners.len(), 0)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| partners[i].clone()).collect::<Vec<_>>();
    let (train, test) = (pick(&split.train), pick(&split.test));
    println!("train {:?}  test {:?}", split.train, split.test);

    let out = train_zsc_agent(
        task,
        Algorithm::Ppo,
        train.clone(),
        test.clone(),
        &desk(task, Algorithm::Ppo),
        robot_steps,
        0,
    )?;
    let robot = out.policy(AgentRole::Robot).expect("the robot learns");
    let env = EnvSpec::new(task);
    let m_train = evaluate_m(&env, robot, &train, 8, 1)?;
    let m_test = evaluate_m(&env, robot, &test, 8, 2)?;
    println!(
        "M_train {:.1} [{:.1}, {:.1}]  M_test {:.1}  inside: {}",
        m_train.m,
        m_train.ci_lo,
        m_train.ci_hi,
        m_test.m,
        m_train.contains(m_test.m)
    );
    Ok(())
}
