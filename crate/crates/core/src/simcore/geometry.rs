use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Transform, Vec3};
use crate::rng::Rng;

/// A capsule: every point within `radius` of the segment `segment_start`–`segment_end`.
///
/// Coincident endpoints give a sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapsuleGeom {
    pub segment_start: Vec3,
    pub segment_end: Vec3,
    pub radius: f64,
    /// See [`crate::simcore::groups_collide`].
    pub collision_group: u8,
}

impl CapsuleGeom {
    pub fn sphere(center: Vec3, radius: f64, collision_group: u8) -> Self {
        Self {
            segment_start: center,
            segment_end: center,
            radius,
            collision_group,
        }
    }

    pub fn transformed(&self, frame: &Transform) -> Self {
        Self {
            segment_start: frame.transform_point(&self.segment_start.into()).coords,
            segment_end: frame.transform_point(&self.segment_end.into()).coords,
            ..*self
        }
    }

    pub fn center(&self) -> Vec3 {
        0.5 * (self.segment_start + self.segment_end)
    }

    pub fn axis_length(&self) -> f64 {
        (self.segment_end - self.segment_start).norm()
    }

    pub fn surface_area(&self) -> f64 {
        let r = self.radius;
        2.0 * std::f64::consts::PI * r * self.axis_length() + 4.0 * std::f64::consts::PI * r * r
    }

    /// Distance from `p` to the axis segment.
    pub fn axis_distance(&self, p: &Vec3) -> f64 {
        let d = self.segment_end - self.segment_start;
        let len2 = d.norm_squared();
        let t = if len2 > 0.0 {
            ((p - self.segment_start).dot(&d) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        (p - (self.segment_start + t * d)).norm()
    }

    pub fn validate(&self) -> crate::Result<()> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(crate::Error::contract(format!(
                "capsule radius must be positive, got {}",
                self.radius
            )));
        }
        Ok(())
    }
}

/// Closest points between two segments, as parameters along each.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentClosest {
    pub s: f64,
    pub t: f64,
    pub point_a: Vec3,
    pub point_b: Vec3,
}

impl SegmentClosest {
    pub fn distance(&self) -> f64 {
        (self.point_a - self.point_b).norm()
    }
}

const DEGENERATE: f64 = 1e-14;
const PARALLEL: f64 = 1e-12;

/// Closest points between segments `p1q1` and `p2q2`.
///
/// Parallel segments with overlapping projections resolve to the midpoint
/// of the overlap, which keeps the result symmetric under swapping the
/// arguments.
pub fn closest_points_segments(p1: &Vec3, q1: &Vec3, p2: &Vec3, q2: &Vec3) -> SegmentClosest {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);

    let (s, t) = if a <= DEGENERATE && e <= DEGENERATE {
        (0.0, 0.0)
    } else if a <= DEGENERATE {
        (0.0, (f / e).clamp(0.0, 1.0))
    } else {
        let c = d1.dot(&r);
        if e <= DEGENERATE {
            ((-c / a).clamp(0.0, 1.0), 0.0)
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            if denom <= PARALLEL * a * e {
                // projections of segment 2's endpoints onto segment 1
                let s0 = -c / a;
                let s1 = d1.dot(&(q2 - p1)) / a;
                let lo = s0.min(s1).max(0.0);
                let hi = s0.max(s1).min(1.0);
                if lo <= hi {
                    let s = 0.5 * (lo + hi);
                    (s, ((b * s + f) / e).clamp(0.0, 1.0))
                } else {
                    let s = if s0.max(s1) < 0.0 { 0.0 } else { 1.0 };
                    let t = ((b * s + f) / e).clamp(0.0, 1.0);
                    (((b * t - c) / a).clamp(0.0, 1.0), t)
                }
            } else {
                let mut s = ((b * f - c * e) / denom).clamp(0.0, 1.0);
                let mut t = (b * s + f) / e;
                if t < 0.0 {
                    t = 0.0;
                    s = (-c / a).clamp(0.0, 1.0);
                } else if t > 1.0 {
                    t = 1.0;
                    s = ((b - c) / a).clamp(0.0, 1.0);
                }
                (s, t)
            }
        }
    };
    SegmentClosest {
        s,
        t,
        point_a: p1 + s * d1,
        point_b: p2 + t * d2,
    }
}

/// Any unit vector orthogonal to `n`.
pub(crate) fn any_perpendicular(n: &Vec3) -> Vec3 {
    let helper = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
        Vec3::x()
    } else if n.y.abs() <= n.z.abs() {
        Vec3::y()
    } else {
        Vec3::z()
    };
    n.cross(&helper).normalize()
}

/// Area-uniform sample on the capsule surface.
pub fn sample_surface_point(geom: &CapsuleGeom, rng: &mut Rng) -> Vec3 {
    let axis = geom.segment_end - geom.segment_start;
    let len = axis.norm();
    let r = geom.radius;
    let unit_sphere = |rng: &mut Rng| -> Vec3 {
        let z: f64 = rng.random_range(-1.0..=1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let rho = (1.0 - z * z).max(0.0).sqrt();
        Vec3::new(rho * phi.cos(), rho * phi.sin(), z)
    };
    if len <= DEGENERATE {
        return geom.segment_start + r * unit_sphere(rng);
    }
    let u = axis / len;
    let e1 = any_perpendicular(&u);
    let e2 = u.cross(&e1);
    let cylinder = 2.0 * std::f64::consts::PI * r * len;
    let pick = rng.random::<f64>() * geom.surface_area();
    if pick < cylinder {
        let t: f64 = rng.random();
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        geom.segment_start + t * axis + r * (phi.cos() * e1 + phi.sin() * e2)
    } else {
        let d = unit_sphere(rng);
        if d.dot(&u) >= 0.0 {
            geom.segment_end + r * d
        } else {
            geom.segment_start + r * d
        }
    }
}
