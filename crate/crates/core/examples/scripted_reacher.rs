//! One Scratch episode driven by a hand-written Jacobian-transpose
//! controller, showing the single-instance environment API.

use assistive_marl::envs::{observation_manifest, reset, DisabilityProfile, TaskId};
use assistive_marl::rng::from_seed;
use assistive_marl::simcore::jacobian_transpose_force;

fn main() -> assistive_marl::Result<()> {
    let task = TaskId::Scratch;
    for f in observation_manifest(task) {
        println!("obs[{:>2}..{:>2}] {}", f.offset, f.offset + f.len, f.name);
    }

    let (kp, kd) = (100.0, 5.0);
    let (mut state, _) = reset(task, DisabilityProfile::default(), from_seed(0))?;
    let mut ret = 0.0;
    for t in 0..state.horizon() {
        let model = state.robot_model();
        let frames = model.forward_kinematics(&state.robot.q)?;
        let ee = state.ee_position();
        let target = state
            .scratch_target_position()
            .expect("scratch has a target");
        let mut tau = vec![0.0; 7];
        jacobian_transpose_force(model, &frames, 6, &ee, &((target - ee) * kp), &mut tau);
        let limits = model.torque_limits();
        let robot: Vec<f64> = (0..7)
            .map(|i| ((tau[i] - kd * state.robot.qdot[i]) / limits[i]).clamp(-1.0, 1.0))
            .collect();
        // the human holds still
        let (r, _done) = state.step_in_place(&robot, &[0.0; 3])?;
        ret += r;
        if t % 200 == 0 {
            println!(
                "t={t:>4}  distance {:.3} m  reward {r:.3}",
                (target - ee).norm()
            );
        }
    }
    println!("episode return {ret:.1}");
    Ok(())
}
