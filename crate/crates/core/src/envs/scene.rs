use std::sync::OnceLock;

use nalgebra::{Translation3, UnitQuaternion};

use super::TaskId;
use crate::simcore::{builtin_model, groups_collide, ChainModel, LinkFrames, Transform, Vec3};

/// Bed-bath targets: 13 stations along each arm segment, two rows each.
pub const NUM_WIPE_TARGETS: usize = 52;

const WIPE_STATIONS: usize = 13;
pub(crate) const UPPER_ARM: usize = 1;
pub(crate) const LOWER_ARM: usize = 2;
pub(crate) const ELBOW: usize = 2;

/// A point rigidly attached to a human link.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint {
    pub link: usize,
    pub local: Vec3,
}

impl SurfacePoint {
    pub fn world(&self, frames: &LinkFrames) -> Vec3 {
        frames.links[self.link]
            .transform_point(&self.local.into())
            .coords
    }
}

/// Static layout of one task: placed chain models, start poses and task
/// targets. Positions are in meters; the human lies along +x, the robot
/// stands beside the bed on the -y side.
#[derive(Clone, Debug)]
pub struct Scene {
    pub task: TaskId,
    pub robot: ChainModel,
    pub human: ChainModel,
    pub robot_start: [f64; 7],
    pub human_start: [f64; 3],
    /// Unactuated humanoid joints reported in the observation (left arm, neck, hips).
    pub human_passive: [f64; 6],
    pub wipe_layout: Vec<SurfacePoint>,
    pub grasp_point: SurfacePoint,
    /// Desired end-effector orientation at the grasp point, relative to the lower-arm frame.
    pub grasp_orientation: UnitQuaternion<f64>,
    pub waist_target: Vec3,
    /// (robot link, human link) pairs whose geometry may collide.
    pub contact_pairs: Vec<(usize, usize)>,
    /// Jitter applied to the human start pose (rad).
    pub start_jitter: f64,
}

impl Scene {
    fn build(task: TaskId) -> Scene {
        let robot_base = Transform::from_parts(
            Translation3::new(0.3, -0.8, 0.55),
            UnitQuaternion::from_euler_angles(0.0, 0.0, std::f64::consts::FRAC_PI_2),
        );
        let robot = builtin_model("robot7")
            .expect("embedded robot model")
            .with_base(robot_base);
        let human = builtin_model("human-arm3")
            .expect("embedded human model")
            .with_base(Transform::translation(0.0, 0.0, 0.7));

        let human_start = match task {
            TaskId::Scratch | TaskId::BedBath => [0.0, 0.0, 0.0],
            TaskId::ArmAssist => [-0.6, 0.9, 0.3],
        };

        let mut wipe_layout = Vec::with_capacity(NUM_WIPE_TARGETS);
        let rows = [
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(0.0, -1.0, 1.0).normalize(),
        ];
        for link in [UPPER_ARM, LOWER_ARM] {
            let geom = human.links[link].geom;
            let axis = geom.segment_end - geom.segment_start;
            for k in 0..WIPE_STATIONS {
                let along = geom.segment_start + axis * ((k as f64 + 0.5) / WIPE_STATIONS as f64);
                for dir in &rows {
                    wipe_layout.push(SurfacePoint {
                        link,
                        local: along + geom.radius * dir,
                    });
                }
            }
        }

        let lower = human.links[LOWER_ARM].geom;
        let grasp_point = SurfacePoint {
            link: LOWER_ARM,
            local: Vec3::new(0.15, 0.0, lower.radius),
        };
        // tool z axis pointing down onto the top of the forearm
        let grasp_orientation = UnitQuaternion::from_euler_angles(std::f64::consts::PI, 0.0, 0.0);
        let rest = human
            .forward_kinematics(&[0.0, 0.0, 0.0])
            .expect("human rest pose");
        let waist_target = grasp_point.world(&rest);

        let mut contact_pairs = Vec::new();
        for (i, rl) in robot.links.iter().enumerate() {
            for (j, hl) in human.links.iter().enumerate() {
                if groups_collide(rl.geom.collision_group, hl.geom.collision_group) {
                    contact_pairs.push((i, j));
                }
            }
        }

        Scene {
            task,
            robot,
            human,
            robot_start: [0.0, -1.2, 0.0, -2.8, 0.0, 1.6, 0.785],
            human_start,
            human_passive: [0.0; 6],
            wipe_layout,
            grasp_point,
            grasp_orientation,
            waist_target,
            contact_pairs,
            start_jitter: 0.05,
        }
    }

    pub fn get(task: TaskId) -> &'static Scene {
        static SCENES: [OnceLock<Scene>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
        let idx = match task {
            TaskId::Scratch => 0,
            TaskId::BedBath => 1,
            TaskId::ArmAssist => 2,
        };
        SCENES[idx].get_or_init(|| Scene::build(task))
    }

    /// Human model with the elbow's upper stop pulled in to `rom` of its range.
    pub fn human_with_rom(&self, rom: f64) -> ChainModel {
        let mut m = self.human.clone();
        let [lo, hi] = m.links[ELBOW].joint_limits;
        m.links[ELBOW].joint_limits = [lo, lo + rom * (hi - lo)];
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_tool_and_arm_geometry_collide() {
        let s = Scene::get(TaskId::Scratch);
        assert_eq!(s.contact_pairs, vec![(6, UPPER_ARM), (6, LOWER_ARM)]);
        assert_eq!(s.wipe_layout.len(), NUM_WIPE_TARGETS);
    }

    #[test]
    fn wipe_targets_lie_on_the_arm_surface() {
        let s = Scene::get(TaskId::BedBath);
        for p in &s.wipe_layout {
            let g = s.human.links[p.link].geom;
            assert!((g.axis_distance(&p.local) - g.radius).abs() < 1e-12);
        }
    }

    #[test]
    fn rom_shrinks_elbow_interval() {
        let s = Scene::get(TaskId::Scratch);
        let m = s.human_with_rom(0.5);
        let [lo, hi] = s.human.links[ELBOW].joint_limits;
        assert_eq!(m.links[ELBOW].joint_limits, [lo, lo + 0.5 * (hi - lo)]);
    }
}
