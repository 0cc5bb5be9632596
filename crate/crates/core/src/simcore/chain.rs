use nalgebra::{Quaternion, Translation3, Unit, UnitQuaternion};
use serde::{Deserialize, Serialize};

use super::{CapsuleGeom, Transform, Vec3};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointType {
    Revolute,
}

/// One joint plus the rigid body it drives.
#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    /// Unit axis in the joint frame.
    pub joint_axis: Vec3,
    pub joint_type: JointType,
    /// Parent frame to joint frame, applied before the joint rotation.
    pub link_offset: Transform,
    /// Collision capsule in the link frame.
    pub geom: CapsuleGeom,
    pub damping: f64,
    pub torque_limit: f64,
    pub joint_limits: [f64; 2],
    /// Point mass at the capsule center, used only for gravity torques.
    pub mass: f64,
}

/// Serial kinematic chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainModel {
    pub name: String,
    /// World pose of the chain root.
    pub base: Transform,
    pub links: Vec<Link>,
    /// Last link frame to end-effector frame.
    pub tool_offset: Transform,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
}

impl ChainState {
    pub fn at_rest(q: Vec<f64>) -> Self {
        let qdot = vec![0.0; q.len()];
        Self { q, qdot }
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.qdot.iter().map(|v| v * v).sum::<f64>()
    }
}

/// World frames of every link (after its joint rotation) and the end-effector.
#[derive(Clone, Debug)]
pub struct LinkFrames {
    pub links: Vec<Transform>,
    pub end_effector: Transform,
}

impl LinkFrames {
    pub fn joint_origin(&self, i: usize) -> Vec3 {
        self.links[i].translation.vector
    }
}

impl ChainModel {
    pub fn dof(&self) -> usize {
        self.links.len()
    }

    pub fn torque_limits(&self) -> Vec<f64> {
        self.links.iter().map(|l| l.torque_limit).collect()
    }

    /// Compose link frames root to tip.
    pub fn forward_kinematics(&self, q: &[f64]) -> Result<LinkFrames> {
        if q.len() != self.links.len() {
            return Err(Error::contract(format!(
                "{}: expected {} joint angles, got {}",
                self.name,
                self.links.len(),
                q.len()
            )));
        }
        let mut frame = self.base;
        let mut links = Vec::with_capacity(self.links.len());
        for (link, &angle) in self.links.iter().zip(q) {
            let joint =
                UnitQuaternion::from_axis_angle(&Unit::new_unchecked(link.joint_axis), angle);
            frame =
                frame * link.link_offset * Transform::from_parts(Translation3::identity(), joint);
            links.push(frame);
        }
        let end_effector = frame * self.tool_offset;
        Ok(LinkFrames {
            links,
            end_effector,
        })
    }

    /// World-space axis of joint `i` given its link frame.
    pub fn world_axis(&self, frames: &LinkFrames, i: usize) -> Vec3 {
        frames.links[i].rotation * self.links[i].joint_axis
    }

    pub fn world_geom(&self, frames: &LinkFrames, i: usize) -> CapsuleGeom {
        self.links[i].geom.transformed(&frames.links[i])
    }

    pub fn validate(&self) -> Result<()> {
        if self.links.is_empty() {
            return Err(Error::contract(format!(
                "{}: chain has no links",
                self.name
            )));
        }
        for (i, l) in self.links.iter().enumerate() {
            if (l.joint_axis.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::contract(format!(
                    "{}: link {i} axis is not unit-norm",
                    self.name
                )));
            }
            if !(l.joint_limits[0] < l.joint_limits[1]) {
                return Err(Error::contract(format!(
                    "{}: link {i} joint limits not ordered",
                    self.name
                )));
            }
            if !(l.torque_limit > 0.0) {
                return Err(Error::contract(format!(
                    "{}: link {i} torque limit must be positive",
                    self.name
                )));
            }
            if !(l.damping >= 0.0) || !(l.mass >= 0.0) {
                return Err(Error::contract(format!(
                    "{}: link {i} damping and mass must be non-negative",
                    self.name
                )));
            }
            l.geom.validate()?;
        }
        Ok(())
    }

    pub fn with_base(mut self, base: Transform) -> Self {
        self.base = base;
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(text)?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::contract(format!(
                "unsupported chain model format version {}",
                doc.format_version
            )));
        }
        let model = ChainModel {
            name: doc.name,
            base: doc
                .base
                .map(TransformDoc::into_transform)
                .unwrap_or_else(Transform::identity),
            tool_offset: doc.tool_offset.into_transform(),
            links: doc
                .links
                .into_iter()
                .map(|l| Link {
                    joint_axis: l.joint_axis,
                    joint_type: l.joint_type,
                    link_offset: l.link_offset.into_transform(),
                    geom: l.geom,
                    damping: l.damping,
                    torque_limit: l.torque_limit,
                    joint_limits: l.joint_limits,
                    mass: l.mass,
                })
                .collect(),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDoc {
            format_version: MODEL_FORMAT_VERSION,
            name: self.name.clone(),
            base: Some(TransformDoc::from_transform(&self.base)),
            tool_offset: TransformDoc::from_transform(&self.tool_offset),
            links: self
                .links
                .iter()
                .map(|l| LinkDoc {
                    joint_axis: l.joint_axis,
                    joint_type: l.joint_type,
                    link_offset: TransformDoc::from_transform(&l.link_offset),
                    geom: l.geom,
                    damping: l.damping,
                    torque_limit: l.torque_limit,
                    joint_limits: l.joint_limits,
                    mass: l.mass,
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}

const MODEL_FORMAT_VERSION: u32 = 1;

pub const BUILTIN_MODELS: [&str; 2] = ["robot7", "human-arm3"];

/// Embedded chain models: `robot7` (7-DOF torque-controlled arm) and
/// `human-arm3` (shoulder abduction, shoulder flexion, elbow).
pub fn builtin_model(name: &str) -> Result<ChainModel> {
    let text = match name {
        "robot7" => include_str!("../../models/robot7.json"),
        "human-arm3" => include_str!("../../models/human-arm3.json"),
        other => return Err(Error::contract(format!("unknown built-in model `{other}`"))),
    };
    ChainModel::from_json(text)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransformDoc {
    translation: [f64; 3],
    /// Quaternion as [w, x, y, z].
    #[serde(default = "identity_quaternion")]
    rotation: [f64; 4],
}

fn identity_quaternion() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

impl TransformDoc {
    fn into_transform(self) -> Transform {
        let [w, x, y, z] = self.rotation;
        Transform::from_parts(
            Translation3::new(
                self.translation[0],
                self.translation[1],
                self.translation[2],
            ),
            UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z)),
        )
    }

    fn from_transform(t: &Transform) -> Self {
        let q = t.rotation.quaternion();
        let v = t.translation.vector;
        Self {
            translation: [v.x, v.y, v.z],
            rotation: [q.w, q.i, q.j, q.k],
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkDoc {
    joint_axis: Vec3,
    joint_type: JointType,
    link_offset: TransformDoc,
    geom: CapsuleGeom,
    damping: f64,
    torque_limit: f64,
    joint_limits: [f64; 2],
    #[serde(default)]
    mass: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    format_version: u32,
    name: String,
    #[serde(default)]
    base: Option<TransformDoc>,
    tool_offset: TransformDoc,
    links: Vec<LinkDoc>,
}
