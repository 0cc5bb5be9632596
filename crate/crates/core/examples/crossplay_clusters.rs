//! Cross-play matrices and the hierarchical-clustering order that groups
//! compatible teams: first on a synthetic payoff with two known conventions,
//! then with simulated episodes between constant-action teams.

use assistive_marl::algos::Partner;
use assistive_marl::envs::{DisabilityProfile, EnvSpec, TaskId};
use assistive_marl::neural::Policy;
use assistive_marl::rng::from_seed;
use assistive_marl::zsc::{cluster_order, crossplay, crossplay_with, CrossplayMatrix, Team};

/// A policy whose every action coordinate is the constant `value`.
fn constant(obs_dim: usize, act_dim: usize, value: f64) -> Policy {
    let mut p = Policy::gaussian(obs_dim, act_dim, &[8], 0.0, &mut from_seed(0));
    for l in &mut p.net.layers {
        l.weight.fill(0.0);
        l.bias.fill(0.0);
    }
    p.net.layers.last_mut().unwrap().bias.fill(value);
    p
}

fn show(m: &CrossplayMatrix) -> assistive_marl::Result<()> {
    for (label, row) in m.labels.iter().zip(&m.matrix) {
        println!("{label:>8} {:>7.1?}", row);
    }
    println!("cluster order {:?}", cluster_order(&m.matrix)?);
    println!("self-play mean {:.1}\n", m.diagonal_mean());
    Ok(())
}

fn main() -> assistive_marl::Result<()> {
    // Teams 0, 2, 4 share one convention and 1, 3, 5 the other: pairing a
    // robot with a human of the same convention pays 10, otherwise 1.
    let labels = (0..6).map(|i| format!("team-{i}")).collect();
    let synthetic = crossplay_with(labels, 1, |r, h, _| {
        Ok(if r % 2 == h % 2 { 10.0 } else { 1.0 })
    })?;
    show(&synthetic)?;

    let task = TaskId::ArmAssist;
    let d = task.obs_dim();
    // Robots and humans pushing in matching or opposite directions.
    let signs = [1.0, -1.0, 1.0, -1.0];
    let robots: Vec<Policy> = signs.iter().map(|&s| constant(d, 7, 0.3 * s)).collect();
    let humans: Vec<Partner> = signs
        .iter()
        .enumerate()
        .map(|(i, &s)| Partner {
            label: format!("team-{i}"),
            policy: constant(d, 3, 0.6 * s),
            disability: DisabilityProfile::default(),
        })
        .collect();
    let teams: Vec<Team<'_>> = robots
        .iter()
        .zip(&humans)
        .map(|(r, h)| Team {
            label: h.label.clone(),
            robot: r,
            human: &h.policy,
            disability: h.disability,
        })
        .collect();
    show(&crossplay(&EnvSpec::new(task), &teams, 2, 0)?)
}
