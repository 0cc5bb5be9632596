//! Kinematics, dynamics and contact of the built-in chains.

use assistive_marl::simcore::{
    builtin_model, capsule_contact, step_dynamics, CapsuleGeom, ChainState, CollisionGroup,
    SimConfig, Vec3,
};

fn main() -> assistive_marl::Result<()> {
    let robot = builtin_model("robot7")?;
    let cfg = SimConfig::default();

    let mut state = ChainState::at_rest(vec![0.0, 0.5, 0.0, -1.0, 0.0, 0.8, 0.0]);
    let ee = robot
        .forward_kinematics(&state.q)?
        .end_effector
        .translation
        .vector;
    println!(
        "{}: {} joints, end effector at {:.3?}",
        robot.name,
        robot.dof(),
        ee
    );

    // Constant torque on the shoulder against damping and the joint stops.
    let mut torques = vec![0.0; robot.dof()];
    torques[1] = 0.5 * robot.torque_limits()[1];
    let external = vec![0.0; robot.dof()];
    for t in 1..=100 {
        state = step_dynamics(&robot, &state, &torques, &external, &cfg)?;
        if t % 25 == 0 {
            println!(
                "t={:.2}s  q1={:+.3}  kinetic energy {:.4}",
                t as f64 * cfg.dt,
                state.q[1],
                state.kinetic_energy()
            );
        }
    }

    // Two overlapping capsules push each other apart.
    let a = CapsuleGeom {
        segment_start: Vec3::new(0.0, 0.0, 0.0),
        segment_end: Vec3::new(0.3, 0.0, 0.0),
        radius: 0.05,
        collision_group: CollisionGroup::RED,
    };
    let b = CapsuleGeom::sphere(Vec3::new(0.15, 0.0, 0.08), 0.05, CollisionGroup::GREEN);
    let c = capsule_contact(&a, &b, &cfg, &Vec3::zeros());
    println!(
        "contact: depth {:.3} m, force on the capsule {:.2?} N",
        c.penetration_depth,
        c.world_force()
    );
    Ok(())
}
