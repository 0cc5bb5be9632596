//! Batched random-action rollouts with automatic resets and per-instance
//! disability profiles.

use assistive_marl::envs::{DisabilityProfile, TaskId};
use assistive_marl::rng::from_seed;
use assistive_marl::vecenv::{vreset, JOINT_ACTION_DIM};
use rand::Rng as _;

fn main() -> assistive_marl::Result<()> {
    let n = 16;
    let weak = DisabilityProfile {
        strength_multiplier: 0.25,
        elbow_rom_fraction: 0.33,
        ..DisabilityProfile::default()
    };
    // one profile per instance: even ones healthy, odd ones weakened
    let profiles: Vec<DisabilityProfile> = (0..n)
        .map(|i| {
            if i % 2 == 0 {
                DisabilityProfile::default()
            } else {
                weak
            }
        })
        .collect();
    let (mut batch, obs) = vreset(TaskId::BedBath, n, 7, &profiles)?;
    println!(
        "{} instances, observation {}x{}",
        batch.len(),
        obs.n,
        obs.dim
    );

    let mut rng = from_seed(1);
    let mut actions = vec![0.0; n * JOINT_ACTION_DIM];
    let mut finished = Vec::new();
    for _ in 0..2500 {
        actions
            .iter_mut()
            .for_each(|a| *a = rng.random_range(-1.0..=1.0));
        finished.extend(batch.vstep(&actions)?.final_returns);
    }
    for f in finished.iter().take(6) {
        println!(
            "instance {:>2} (strength {:.2}) finished with return {:.2}",
            f.instance, f.profile.strength_multiplier, f.episode_return
        );
    }
    println!("{} episodes finished", finished.len());
    Ok(())
}
