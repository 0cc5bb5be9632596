use serde::{Deserialize, Serialize};

use super::state::{EnvState, Snapshot};
use super::{TaskId, NUM_WIPE_TARGETS};
use crate::simcore::Mat3;
use crate::{Error, Result};

/// Distance (m) under which the end-effector counts as "at" its target.
pub const TARGET_RADIUS: f64 = 0.1;

/// Scales of the reward components and their shaping constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardWeights {
    pub scale_reach: f64,
    pub scale_scratch: f64,
    pub scale_wipe: f64,
    pub scale_waist: f64,
    pub scale_rotation: f64,
    pub sigma: f64,
    /// Scratch force that maximizes the scratch term (N).
    pub target_force: f64,
    /// Scratch speed that maximizes the scratch term (m/s).
    pub target_velocity: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            scale_reach: 1.0,
            scale_scratch: 1.0,
            scale_wipe: 1.0,
            scale_waist: 10.0,
            scale_rotation: 0.1,
            sigma: 0.1,
            target_force: 3.0,
            target_velocity: 0.05,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::config("reward.sigma", "must be positive"));
        }
        if !(self.target_force > 0.0) {
            return Err(Error::config("reward.target_force", "must be positive"));
        }
        if !(self.target_velocity > 0.0) {
            return Err(Error::config("reward.target_velocity", "must be positive"));
        }
        Ok(())
    }

    pub fn reach(&self, distance: f64) -> f64 {
        self.scale_reach * (-distance * distance / self.sigma).exp()
    }

    /// Peaks at `e^-2` when speed and force both hit their targets.
    pub fn scratch(&self, distance: f64, speed: f64, force: f64) -> f64 {
        if distance >= TARGET_RADIUS {
            return 0.0;
        }
        let v = speed / self.target_velocity;
        let f = force / self.target_force;
        self.scale_scratch * (v * (-v).exp()) * (f * (-f).exp())
    }

    pub fn wipe(&self, distance: f64, force: f64) -> f64 {
        if distance < TARGET_RADIUS && force > 0.0 {
            self.scale_wipe
        } else {
            0.0
        }
    }

    pub fn waist(&self, distance: f64) -> f64 {
        self.scale_waist * (1.0 - (distance / self.sigma).tanh())
    }

    /// `‖R + I‖_F`, which is `2√3` when the frames coincide and 2 at a half turn.
    pub fn rotation(&self, relative: &Mat3) -> f64 {
        self.scale_rotation * (relative + Mat3::identity()).norm()
    }
}

/// Team reward of the state reached after a step.
pub fn compute_reward(state: &EnvState, weights: &RewardWeights) -> f64 {
    let snap = state.snapshot();
    reward_from_snapshot(state, &snap, weights)
}

pub(crate) fn reward_from_snapshot(state: &EnvState, snap: &Snapshot, w: &RewardWeights) -> f64 {
    let force = state.last_contact.force.norm();
    let d = state.target_distance(snap);
    match state.task() {
        TaskId::Scratch => {
            let speed = state.ee_velocity(snap).norm();
            w.reach(d) + w.scratch(d, speed, force)
        }
        TaskId::BedBath => {
            let bonus = if state.wiped_this_step {
                w.scale_wipe
            } else {
                0.0
            };
            w.reach(d) + bonus
        }
        TaskId::ArmAssist => {
            let waist = state.arm_to_waist(snap).norm();
            w.reach(d) + w.waist(waist) + w.rotation(&state.ee_to_target_rotation(snap))
        }
    }
}

/// Return obtained by collecting the largest possible reward at every step.
pub fn reward_upper_bound(task: TaskId, horizon: u32, w: &RewardWeights) -> f64 {
    let h = horizon as f64;
    match task {
        TaskId::Scratch => (w.scale_reach + w.scale_scratch * (-2.0f64).exp()) * h,
        // one wipe per step at most, each target pays once
        TaskId::BedBath => {
            w.scale_reach * h + w.scale_wipe * (NUM_WIPE_TARGETS.min(horizon as usize)) as f64
        }
        TaskId::ArmAssist => {
            (w.scale_reach + w.scale_waist + w.scale_rotation * 2.0 * 3f64.sqrt()) * h
        }
    }
}
