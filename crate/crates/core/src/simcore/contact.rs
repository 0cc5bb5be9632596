use super::geometry::any_perpendicular;
use super::{closest_points_segments, CapsuleGeom, Mat3, SimConfig, Vec3};

/// Collision-group masking. Disabled geometry never collides; green and
/// blue collide with their own color and with red; red collides with every
/// enabled group.
pub struct CollisionGroup;

impl CollisionGroup {
    pub const DISABLED: u8 = 0;
    pub const GREEN: u8 = 1;
    pub const BLUE: u8 = 2;
    pub const RED: u8 = 3;
}

pub fn groups_collide(a: u8, b: u8) -> bool {
    if a == CollisionGroup::DISABLED || b == CollisionGroup::DISABLED {
        return false;
    }
    a == b || a == CollisionGroup::RED || b == CollisionGroup::RED
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContactInfo {
    pub in_contact: bool,
    pub penetration_depth: f64,
    pub contact_point: Vec3,
    /// Columns: normal (pointing from the second body to the first), then two tangents.
    pub contact_frame: Mat3,
    /// Force on the first body, in `contact_frame` coordinates.
    pub force: Vec3,
}

impl Default for ContactInfo {
    fn default() -> Self {
        Self::none()
    }
}

impl ContactInfo {
    pub fn none() -> Self {
        Self {
            in_contact: false,
            penetration_depth: 0.0,
            contact_point: Vec3::zeros(),
            contact_frame: Mat3::identity(),
            force: Vec3::zeros(),
        }
    }

    pub fn normal(&self) -> Vec3 {
        self.contact_frame.column(0).into()
    }

    pub fn world_force(&self) -> Vec3 {
        self.contact_frame * self.force
    }
}

fn frame_from_normal(n: Vec3) -> Mat3 {
    let t1 = any_perpendicular(&n);
    let t2 = n.cross(&t1);
    Mat3::from_columns(&[n, t1, t2])
}

/// Spring-damper penalty contact between two capsules.
///
/// `rel_velocity` is the velocity of `a`'s contact point relative to `b`'s.
pub fn capsule_contact(
    a: &CapsuleGeom,
    b: &CapsuleGeom,
    cfg: &SimConfig,
    rel_velocity: &Vec3,
) -> ContactInfo {
    if !groups_collide(a.collision_group, b.collision_group) {
        return ContactInfo::none();
    }
    let closest = closest_points_segments(
        &a.segment_start,
        &a.segment_end,
        &b.segment_start,
        &b.segment_end,
    );
    let d = closest.distance();
    let reach = a.radius + b.radius;
    if d >= reach {
        return ContactInfo::none();
    }
    let n = if d > 1e-12 {
        (closest.point_a - closest.point_b) / d
    } else {
        let centers = a.center() - b.center();
        if centers.norm() > 1e-12 {
            centers.normalize()
        } else {
            Vec3::z()
        }
    };
    let penetration = reach - d;
    let approach = -rel_velocity.dot(&n);
    let normal_force =
        (cfg.contact_stiffness * penetration + cfg.contact_damping * approach).max(0.0);
    let surface_a = closest.point_a - a.radius * n;
    let surface_b = closest.point_b + b.radius * n;
    ContactInfo {
        in_contact: true,
        penetration_depth: penetration,
        contact_point: 0.5 * (surface_a + surface_b),
        contact_frame: frame_from_normal(n),
        force: Vec3::new(normal_force, 0.0, 0.0),
    }
}
