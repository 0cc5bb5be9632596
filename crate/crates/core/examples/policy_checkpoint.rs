//! Build a Gaussian policy, query it and round-trip it through a checkpoint.

use assistive_marl::envs::{AgentRole, DisabilityProfile, TaskId};
use assistive_marl::neural::{Checkpoint, Policy};
use assistive_marl::rng::from_seed;

fn main() -> assistive_marl::Result<()> {
    let task = TaskId::ArmAssist;
    let mut rng = from_seed(3);
    let policy = Policy::gaussian(task.obs_dim(), 3, &[64, 64], -0.5, &mut rng);
    let obs = vec![0.1; task.obs_dim()];
    println!("mean action {:.4?}", policy.mean_action(&obs)?);
    let s = policy.sample(&obs, &mut rng)?;
    println!("sampled {:.4?} with log-prob {:.3}", s.action, s.log_prob);

    let dir = std::env::temp_dir().join("assistive-marl-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("human.ckpt");
    Checkpoint::new(
        task,
        "ippo",
        AgentRole::Human,
        DisabilityProfile::default(),
        3,
        policy.clone(),
    )
    .save(&path)?;
    let back = Checkpoint::load(&path)?;
    println!(
        "{} bytes, header {:?}",
        std::fs::metadata(&path)?.len(),
        back.header.layer_shapes
    );
    // parameters are stored as f32
    let same = back.policy.mean_action(&obs)?;
    println!("reloaded mean action {same:.4?}");
    Ok(())
}
