//! Minimal articulated rigid-body simulation.
//!
//! Serial revolute chains with per-joint unit inertia, viscous damping,
//! gravity torque projection and hard joint stops, plus capsule geometry with
//! spring-damper penalty contacts. Everything here is a pure function of
//! value-type inputs.

mod chain;
mod contact;
mod dynamics;
mod geometry;

pub use chain::{
    builtin_model, ChainModel, ChainState, JointType, Link, LinkFrames, BUILTIN_MODELS,
};
pub use contact::{capsule_contact, groups_collide, CollisionGroup, ContactInfo};
pub use dynamics::{
    gravity_torques, integrate_substep, jacobian_transpose_force, point_velocity, step_dynamics,
    SimConfig,
};
pub use geometry::{closest_points_segments, sample_surface_point, CapsuleGeom, SegmentClosest};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
pub type Transform = nalgebra::Isometry3<f64>;
