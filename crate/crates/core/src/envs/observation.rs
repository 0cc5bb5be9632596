use serde::{Deserialize, Serialize};

use super::scene::{LOWER_ARM, UPPER_ARM};
use super::state::EnvState;
use super::TaskId;

/// Flat observation of one agent.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentObservation(pub Vec<f64>);

impl AgentObservation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Slice of one named field from the manifest.
    pub fn field(&self, task: TaskId, name: &str) -> Option<&[f64]> {
        observation_manifest(task)
            .into_iter()
            .find(|f| f.name == name)
            .map(|f| &self.0[f.offset..f.offset + f.len])
    }
}

/// Both agents observe the same vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Observations {
    pub robot: AgentObservation,
    pub human: AgentObservation,
}

/// One contiguous block of the observation vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObsField {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

const COMMON: [(&str, usize); 11] = [
    ("joint_pos_robot", 7),
    ("joint_vel_robot", 7),
    ("ee_pos", 3),
    ("ee_quat", 4),
    ("ee_force", 3),
    ("joint_pos_human", 9),
    ("joint_vel_human", 9),
    ("human_lower_arm_pos", 3),
    ("human_upper_arm_pos", 3),
    ("ee_to_target", 3),
    ("ee_target_dist", 1),
];

const ARM_ASSIST: [(&str, usize); 3] = [
    ("ee_to_target_rot", 9),
    ("arm_to_waist", 3),
    ("arm_waist_dist", 1),
];

/// Field layout for `task`, in vector order.
pub fn observation_manifest(task: TaskId) -> Vec<ObsField> {
    let extra: &[(&str, usize)] = if task == TaskId::ArmAssist {
        &ARM_ASSIST
    } else {
        &[]
    };
    let mut offset = 0;
    COMMON
        .iter()
        .chain(extra)
        .map(|&(name, len)| {
            let f = ObsField {
                name: name.to_owned(),
                offset,
                len,
            };
            offset += len;
            f
        })
        .collect()
}

pub fn build_observation(state: &EnvState) -> Observations {
    let mut v = Vec::with_capacity(state.task().obs_dim());
    write_observation(state, &mut v);
    Observations {
        robot: AgentObservation(v.clone()),
        human: AgentObservation(v),
    }
}

/// Append the observation of `state` to `out`.
pub(crate) fn write_observation(state: &EnvState, out: &mut Vec<f64>) {
    let snap = state.snapshot();
    let scene = state.scene();
    out.extend_from_slice(&state.robot.q);
    out.extend_from_slice(&state.robot.qdot);

    let ee = &snap.robot.end_effector;
    out.extend_from_slice(ee.translation.vector.as_slice());
    let q = ee.rotation.quaternion();
    let sign = if q.w < 0.0 { -1.0 } else { 1.0 };
    out.extend([q.w, q.i, q.j, q.k].map(|c| sign * c));
    out.extend_from_slice(state.last_contact.force.as_slice());

    out.extend_from_slice(&state.human.q);
    out.extend_from_slice(&scene.human_passive);
    out.extend_from_slice(&state.human.qdot);
    out.extend([0.0; 6]);

    let human = state.human_model();
    out.extend_from_slice(human.world_geom(&snap.human, LOWER_ARM).center().as_slice());
    out.extend_from_slice(human.world_geom(&snap.human, UPPER_ARM).center().as_slice());

    let to_target = state.ee_to_target(&snap);
    out.extend_from_slice(to_target.as_slice());
    out.push(to_target.norm());

    if state.task() == TaskId::ArmAssist {
        let r = state.ee_to_target_rotation(&snap);
        for i in 0..3 {
            for j in 0..3 {
                out.push(r[(i, j)]);
            }
        }
        let w = state.arm_to_waist(&snap);
        out.extend_from_slice(w.as_slice());
        out.push(w.norm());
    }
}
