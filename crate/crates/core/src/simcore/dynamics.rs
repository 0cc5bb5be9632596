use serde::{Deserialize, Serialize};

use super::{ChainModel, ChainState, LinkFrames, Vec3};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Control period (s); integrated in `substeps` equal substeps.
    pub dt: f64,
    pub contact_stiffness: f64,
    pub contact_damping: f64,
    pub gravity: Vec3,
    pub substeps: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            contact_stiffness: 1000.0,
            contact_damping: 20.0,
            gravity: Vec3::new(0.0, 0.0, -9.81),
            substeps: 4,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::config("sim.dt", "must be positive"));
        }
        if self.substeps < 1 {
            return Err(Error::config("sim.substeps", "must be at least 1"));
        }
        if !(self.contact_stiffness >= 0.0) || !(self.contact_damping >= 0.0) {
            return Err(Error::config(
                "sim.contact_stiffness",
                "contact gains must be non-negative",
            ));
        }
        Ok(())
    }

    pub fn substep_dt(&self) -> f64 {
        self.dt / self.substeps as f64
    }
}

/// Joint torques produced by gravity acting on each link's point mass.
pub fn gravity_torques(model: &ChainModel, frames: &LinkFrames, gravity: &Vec3) -> Vec<f64> {
    let n = model.dof();
    let mut tau = vec![0.0; n];
    for j in 0..n {
        let m = model.links[j].mass;
        if m == 0.0 {
            continue;
        }
        let center = model.world_geom(frames, j).center();
        let f = m * gravity;
        for (i, t) in tau.iter_mut().enumerate().take(j + 1) {
            let axis = model.world_axis(frames, i);
            *t += axis.dot(&(center - frames.joint_origin(i)).cross(&f));
        }
    }
    tau
}

/// Accumulate `Jᵀ f` for a world force applied at `point` on link `link`.
pub fn jacobian_transpose_force(
    model: &ChainModel,
    frames: &LinkFrames,
    link: usize,
    point: &Vec3,
    force: &Vec3,
    tau: &mut [f64],
) {
    for (i, t) in tau.iter_mut().enumerate().take(link + 1) {
        let axis = model.world_axis(frames, i);
        *t += axis.dot(&(point - frames.joint_origin(i)).cross(force));
    }
}

/// World velocity of a point rigidly attached to link `link`.
pub fn point_velocity(
    model: &ChainModel,
    frames: &LinkFrames,
    qdot: &[f64],
    link: usize,
    point: &Vec3,
) -> Vec3 {
    let mut v = Vec3::zeros();
    for (i, &w) in qdot.iter().enumerate().take(link + 1) {
        if w != 0.0 {
            v += w * model
                .world_axis(frames, i)
                .cross(&(point - frames.joint_origin(i)));
        }
    }
    v
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(joint) => Err(Error::SimulationFault {
            joint,
            reason: format!("non-finite {what}"),
        }),
        None => Ok(()),
    }
}

/// One semi-implicit Euler substep of length `h` with unit joint inertia.
///
/// Damping is integrated implicitly. Joints that cross a limit are placed
/// exactly on it with zero velocity.
pub fn integrate_substep(
    model: &ChainModel,
    state: &ChainState,
    torques: &[f64],
    external: &[f64],
    h: f64,
    gravity: &Vec3,
) -> Result<ChainState> {
    let n = model.dof();
    if state.q.len() != n || state.qdot.len() != n || torques.len() != n || external.len() != n {
        return Err(Error::contract(format!(
            "{}: state/torque dimensions do not match {} joints",
            model.name, n
        )));
    }
    check_finite(&state.q, "joint angle")?;
    check_finite(&state.qdot, "joint velocity")?;
    check_finite(torques, "torque")?;
    check_finite(external, "external joint force")?;

    let needs_gravity = *gravity != Vec3::zeros() && model.links.iter().any(|l| l.mass != 0.0);
    let grav = if needs_gravity {
        let frames = model.forward_kinematics(&state.q)?;
        gravity_torques(model, &frames, gravity)
    } else {
        vec![0.0; n]
    };

    let mut next = state.clone();
    for (i, link) in model.links.iter().enumerate() {
        let accel = torques[i] + external[i] + grav[i];
        let mut qdot = (state.qdot[i] + h * accel) / (1.0 + h * link.damping);
        let mut q = state.q[i] + h * qdot;
        let [lo, hi] = link.joint_limits;
        if q >= hi {
            q = hi;
            qdot = 0.0;
        } else if q <= lo {
            q = lo;
            qdot = 0.0;
        }
        next.q[i] = q;
        next.qdot[i] = qdot;
    }
    Ok(next)
}

/// Advance one control period (`cfg.dt`) holding torques and external
/// joint forces constant across the substeps.
pub fn step_dynamics(
    model: &ChainModel,
    state: &ChainState,
    torques: &[f64],
    external: &[f64],
    cfg: &SimConfig,
) -> Result<ChainState> {
    let h = cfg.substep_dt();
    let mut s = integrate_substep(model, state, torques, external, h, &cfg.gravity)?;
    for _ in 1..cfg.substeps {
        s = integrate_substep(model, &s, torques, external, h, &cfg.gravity)?;
    }
    Ok(s)
}
