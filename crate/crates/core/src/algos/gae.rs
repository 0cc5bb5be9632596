/// Generalized advantage estimation over time-major `steps × envs` arrays.
///
/// `dones[t * envs + e]` marks that the transition at step `t` ended an
/// episode, so nothing is bootstrapped across it. `bootstrap` holds the value
/// of the observation after the last step. Returns `(advantages, targets)`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: &[f64],
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let envs = bootstrap.len();
    assert!(envs > 0, "at least one environment");
    assert_eq!(rewards.len(), values.len());
    assert_eq!(rewards.len(), dones.len());
    assert_eq!(rewards.len() % envs, 0, "arrays must be steps × envs");
    let steps = rewards.len() / envs;
    let mut adv = vec![0.0; rewards.len()];
    for e in 0..envs {
        let mut next_value = bootstrap[e];
        let mut next_adv = 0.0;
        for t in (0..steps).rev() {
            let i = t * envs + e;
            let live = if dones[i] { 0.0 } else { 1.0 };
            let delta = rewards[i] + gamma * live * next_value - values[i];
            next_adv = delta + gamma * lambda * live * next_adv;
            adv[i] = next_adv;
            next_value = values[i];
        }
    }
    let targets = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, targets)
}

/// Shift and scale to zero mean and unit (population) standard deviation.
pub fn normalize_advantages(adv: &mut [f64]) {
    if adv.len() < 2 {
        return;
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let sd = var.sqrt() + 1e-8;
    for a in adv {
        *a = (*a - mean) / sd;
    }
}
