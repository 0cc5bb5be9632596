use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::observation::{build_observation, Observations};
use super::reward::{reward_from_snapshot, RewardWeights};
use super::scene::{Scene, SurfacePoint, LOWER_ARM, UPPER_ARM};
use super::tremor::TremorProcess;
use super::{
    DisabilityProfile, TaskId, DEFAULT_HORIZON, HUMAN_ACTION_DIM, NUM_WIPE_TARGETS,
    ROBOT_ACTION_DIM,
};
use crate::rng::Rng;
use crate::simcore::{
    capsule_contact, closest_points_segments, integrate_substep, jacobian_transpose_force,
    point_velocity, sample_surface_point, ChainModel, ChainState, ContactInfo, LinkFrames, Mat3,
    SimConfig, Vec3,
};
use crate::{Error, Result};

/// Everything that parameterizes a task instance apart from the disability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub task: TaskId,
    pub sim: SimConfig,
    pub reward: RewardWeights,
    pub horizon: u32,
}

impl EnvSpec {
    pub fn new(task: TaskId) -> Self {
        Self {
            task,
            sim: SimConfig::default(),
            reward: RewardWeights::default(),
            horizon: DEFAULT_HORIZON,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.reward.validate()?;
        if self.horizon == 0 {
            return Err(Error::config("horizon", "must be positive"));
        }
        Ok(())
    }

    pub fn obs_dim(&self) -> usize {
        self.task.obs_dim()
    }

    /// Sample an initial state from `rng`, which the state then owns.
    pub fn reset(
        &self,
        disability: DisabilityProfile,
        mut rng: Rng,
    ) -> Result<(EnvState, Observations)> {
        self.validate()?;
        disability.validate()?;
        let scene = Scene::get(self.task);
        let human_model = scene.human_with_rom(disability.elbow_rom_fraction);

        let mut hq = scene.human_start.to_vec();
        for (q, link) in hq.iter_mut().zip(&human_model.links) {
            let jitter: f64 = rng.random_range(-scene.start_jitter..=scene.start_jitter);
            let [lo, hi] = link.joint_limits;
            *q = (*q + jitter).clamp(lo, hi);
        }

        let scratch_target = match self.task {
            TaskId::Scratch => {
                let upper = human_model.links[UPPER_ARM].geom;
                let lower = human_model.links[LOWER_ARM].geom;
                let pick = rng.random::<f64>() * (upper.surface_area() + lower.surface_area());
                let (link, geom) = if pick < upper.surface_area() {
                    (UPPER_ARM, upper)
                } else {
                    (LOWER_ARM, lower)
                };
                Some(SurfacePoint {
                    link,
                    local: sample_surface_point(&geom, &mut rng),
                })
            }
            _ => None,
        };
        let (grasp_target, waist_target) = match self.task {
            TaskId::ArmAssist => (Some(scene.grasp_point), Some(scene.waist_target)),
            _ => (None, None),
        };
        let wipe_active = match self.task {
            TaskId::BedBath => (1u64 << NUM_WIPE_TARGETS) - 1,
            _ => 0,
        };
        let tremor = TremorProcess::new(
            disability.tremor_amplitude,
            disability.tremor_timescale,
            &mut rng,
        );

        let mut state = EnvState {
            params: Arc::new(TaskParams {
                spec: *self,
                human: human_model,
            }),
            disability,
            robot: ChainState::at_rest(scene.robot_start.to_vec()),
            human: ChainState::at_rest(hq),
            scratch_target,
            wipe_active,
            grasp_target,
            waist_target,
            last_contact: ContactInfo::none(),
            human_torque: [0.0; HUMAN_ACTION_DIM],
            tremor,
            wiped_this_step: false,
            t: 0,
            rng,
        };
        let snap = state.snapshot();
        state.last_contact = state.measure_contact(&snap);
        let obs = build_observation(&state);
        Ok((state, obs))
    }
}

#[derive(Clone, Debug)]
pub(crate) struct TaskParams {
    pub spec: EnvSpec,
    /// Human chain with the disability's range-of-motion restriction.
    pub human: ChainModel,
}

impl PartialEq for TaskParams {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.human == other.human
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WipeTarget {
    pub position: Vec3,
    pub active: bool,
}

/// Full simulation state of one task instance.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvState {
    pub(crate) params: Arc<TaskParams>,
    pub disability: DisabilityProfile,
    pub robot: ChainState,
    pub human: ChainState,
    /// Scratch: point on the human arm surface that must be scratched.
    pub scratch_target: Option<SurfacePoint>,
    /// Bed bath: bit `i` set while wipe target `i` is still active.
    pub wipe_active: u64,
    /// Arm assist: point on the forearm the end-effector should hold.
    pub grasp_target: Option<SurfacePoint>,
    /// Arm assist: where the grasp point should end up.
    pub waist_target: Option<Vec3>,
    /// Net end-effector/arm contact after the last step.
    pub last_contact: ContactInfo,
    /// Human joint torques applied during the last step, tremor included.
    pub human_torque: [f64; HUMAN_ACTION_DIM],
    pub tremor: TremorProcess,
    pub wiped_this_step: bool,
    pub t: u32,
    pub rng: Rng,
}

/// Link frames of both chains for one state.
pub(crate) struct Snapshot {
    pub robot: LinkFrames,
    pub human: LinkFrames,
}

#[derive(Clone, Debug)]
pub struct StepResult {
    pub next_state: EnvState,
    pub obs: Observations,
    pub reward: f64,
    pub done: bool,
}

pub fn reset(
    task: TaskId,
    disability: DisabilityProfile,
    rng: Rng,
) -> Result<(EnvState, Observations)> {
    EnvSpec::new(task).reset(disability, rng)
}

/// Pure transition: returns the successor without touching `state`.
pub fn step(state: &EnvState, robot_action: &[f64], human_action: &[f64]) -> Result<StepResult> {
    let mut next = state.clone();
    let (reward, done) = next.step_in_place(robot_action, human_action)?;
    let obs = build_observation(&next);
    Ok(StepResult {
        next_state: next,
        obs,
        reward,
        done,
    })
}

fn clipped_action<const N: usize>(action: &[f64], who: &str) -> Result<[f64; N]> {
    if action.len() != N {
        return Err(Error::contract(format!(
            "{who} action has {} entries, expected {N}",
            action.len()
        )));
    }
    let mut out = [0.0; N];
    for (i, (o, &a)) in out.iter_mut().zip(action).enumerate() {
        if a.is_nan() {
            return Err(Error::SimulationFault {
                joint: i,
                reason: format!("NaN {who} action"),
            });
        }
        *o = a.clamp(-1.0, 1.0);
    }
    Ok(out)
}

impl EnvState {
    pub fn task(&self) -> TaskId {
        self.params.spec.task
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.params.spec
    }

    pub fn scene(&self) -> &'static Scene {
        Scene::get(self.task())
    }

    pub fn human_model(&self) -> &ChainModel {
        &self.params.human
    }

    pub fn robot_model(&self) -> &'static ChainModel {
        &self.scene().robot
    }

    pub fn horizon(&self) -> u32 {
        self.params.spec.horizon
    }

    pub fn is_done(&self) -> bool {
        self.t >= self.horizon()
    }

    /// Hand the random stream back, e.g. to seed the next episode.
    pub fn into_rng(self) -> Rng {
        self.rng
    }

    pub(crate) fn snapshot(&self) -> Snapshot {
        Snapshot {
            robot: self
                .robot_model()
                .forward_kinematics(&self.robot.q)
                .expect("robot state dimension"),
            human: self
                .human_model()
                .forward_kinematics(&self.human.q)
                .expect("human state dimension"),
        }
    }

    pub fn ee_position(&self) -> Vec3 {
        self.snapshot().robot.end_effector.translation.vector
    }

    pub fn scratch_target_position(&self) -> Option<Vec3> {
        let snap = self.snapshot();
        self.scratch_target.map(|p| p.world(&snap.human))
    }

    pub fn wipe_targets(&self) -> Vec<WipeTarget> {
        if self.task() != TaskId::BedBath {
            return Vec::new();
        }
        let snap = self.snapshot();
        self.scene()
            .wipe_layout
            .iter()
            .enumerate()
            .map(|(i, p)| WipeTarget {
                position: p.world(&snap.human),
                active: self.wipe_active & (1 << i) != 0,
            })
            .collect()
    }

    pub fn active_wipe_count(&self) -> u32 {
        self.wipe_active.count_ones()
    }

    pub(crate) fn ee_velocity(&self, snap: &Snapshot) -> Vec3 {
        let ee = snap.robot.end_effector.translation.vector;
        point_velocity(
            self.robot_model(),
            &snap.robot,
            &self.robot.qdot,
            ROBOT_ACTION_DIM - 1,
            &ee,
        )
    }

    fn nearest_active_wipe(&self, snap: &Snapshot) -> Option<(usize, Vec3)> {
        let ee = snap.robot.end_effector.translation.vector;
        let mut best: Option<(usize, Vec3, f64)> = None;
        for (i, p) in self.scene().wipe_layout.iter().enumerate() {
            if self.wipe_active & (1 << i) == 0 {
                continue;
            }
            let w = p.world(&snap.human);
            let d = (w - ee).norm_squared();
            if best.is_none_or(|(_, _, bd)| d < bd) {
                best = Some((i, w, d));
            }
        }
        best.map(|(i, w, _)| (i, w))
    }

    /// World position of the current reach target. `None` once every bed-bath
    /// target has been wiped.
    pub(crate) fn target_position(&self, snap: &Snapshot) -> Option<Vec3> {
        match self.task() {
            TaskId::Scratch => self.scratch_target.map(|p| p.world(&snap.human)),
            TaskId::BedBath => self.nearest_active_wipe(snap).map(|(_, w)| w),
            TaskId::ArmAssist => self.grasp_target.map(|p| p.world(&snap.human)),
        }
    }

    /// Target minus end-effector; zero when no target remains.
    pub(crate) fn ee_to_target(&self, snap: &Snapshot) -> Vec3 {
        let ee = snap.robot.end_effector.translation.vector;
        self.target_position(snap)
            .map_or_else(Vec3::zeros, |t| t - ee)
    }

    pub(crate) fn target_distance(&self, snap: &Snapshot) -> f64 {
        self.ee_to_target(snap).norm()
    }

    /// Rotation taking end-effector coordinates to grasp-target coordinates.
    pub(crate) fn ee_to_target_rotation(&self, snap: &Snapshot) -> Mat3 {
        let target = snap.human.links[self.scene().grasp_point.link].rotation
            * self.scene().grasp_orientation;
        let ee = snap.robot.end_effector.rotation;
        (ee.inverse() * target).to_rotation_matrix().into_inner()
    }

    pub(crate) fn arm_to_waist(&self, snap: &Snapshot) -> Vec3 {
        match (self.grasp_target, self.waist_target) {
            (Some(g), Some(w)) => w - g.world(&snap.human),
            _ => Vec3::zeros(),
        }
    }

    /// Net end-effector/arm contact, expressed in the frame of the deepest pair.
    pub(crate) fn measure_contact(&self, snap: &Snapshot) -> ContactInfo {
        let robot = self.robot_model();
        let human = self.human_model();
        let cfg = &self.params.spec.sim;
        let mut net = Vec3::zeros();
        let mut deepest: Option<ContactInfo> = None;
        for &(i, j) in &self.scene().contact_pairs {
            if let Some(c) = pair_contact(
                robot,
                &snap.robot,
                &self.robot,
                i,
                human,
                &snap.human,
                &self.human,
                j,
                cfg,
            ) {
                net += c.world_force();
                if deepest.is_none_or(|d| c.penetration_depth > d.penetration_depth) {
                    deepest = Some(c);
                }
            }
        }
        match deepest {
            Some(mut c) => {
                c.force = c.contact_frame.transpose() * net;
                c
            }
            None => ContactInfo::none(),
        }
    }

    /// Advance one control step in place; returns `(reward, done)`.
    pub fn step_in_place(
        &mut self,
        robot_action: &[f64],
        human_action: &[f64],
    ) -> Result<(f64, bool)> {
        if self.is_done() {
            return Err(Error::contract("step called on a finished episode"));
        }
        let ra: [f64; ROBOT_ACTION_DIM] = clipped_action(robot_action, "robot")?;
        let ha: [f64; HUMAN_ACTION_DIM] = clipped_action(human_action, "human")?;

        let params = Arc::clone(&self.params);
        let cfg = &params.spec.sim;
        let robot = self.robot_model();
        let human = &params.human;

        let mut robot_tau = [0.0; ROBOT_ACTION_DIM];
        for ((t, a), l) in robot_tau.iter_mut().zip(&ra).zip(&robot.links) {
            *t = a * l.torque_limit;
        }
        let tremor = self.tremor.advance(cfg.dt, &mut self.rng);
        let strength = self.disability.strength_multiplier;
        let mut human_tau = [0.0; HUMAN_ACTION_DIM];
        for (k, l) in human.links.iter().enumerate() {
            let cap = strength * l.torque_limit;
            human_tau[k] = (ha[k] * cap + tremor[k]).clamp(-cap, cap);
        }
        self.human_torque = human_tau;

        let h = cfg.substep_dt();
        for _ in 0..cfg.substeps {
            let rf = robot.forward_kinematics(&self.robot.q)?;
            let hf = human.forward_kinematics(&self.human.q)?;
            let mut ext_r = [0.0; ROBOT_ACTION_DIM];
            let mut ext_h = [0.0; HUMAN_ACTION_DIM];
            for &(i, j) in &self.scene().contact_pairs {
                if let Some(c) =
                    pair_contact(robot, &rf, &self.robot, i, human, &hf, &self.human, j, cfg)
                {
                    let f = c.world_force();
                    jacobian_transpose_force(robot, &rf, i, &c.contact_point, &f, &mut ext_r);
                    jacobian_transpose_force(human, &hf, j, &c.contact_point, &(-f), &mut ext_h);
                }
            }
            self.robot =
                integrate_substep(robot, &self.robot, &robot_tau, &ext_r, h, &cfg.gravity)?;
            self.human =
                integrate_substep(human, &self.human, &human_tau, &ext_h, h, &cfg.gravity)?;
        }
        self.t += 1;

        let snap = self.snapshot();
        self.last_contact = self.measure_contact(&snap);
        self.wiped_this_step = false;
        if self.task() == TaskId::BedBath {
            if let Some((i, w)) = self.nearest_active_wipe(&snap) {
                let d = (w - snap.robot.end_effector.translation.vector).norm();
                if params.spec.reward.wipe(d, self.last_contact.force.norm()) > 0.0 {
                    self.wipe_active &= !(1 << i);
                    self.wiped_this_step = true;
                }
            }
        }
        let reward = reward_from_snapshot(self, &snap, &params.spec.reward);
        Ok((reward, self.is_done()))
    }
}

#[allow(clippy::too_many_arguments)]
fn pair_contact(
    robot: &ChainModel,
    rf: &LinkFrames,
    rs: &ChainState,
    i: usize,
    human: &ChainModel,
    hf: &LinkFrames,
    hs: &ChainState,
    j: usize,
    cfg: &SimConfig,
) -> Option<ContactInfo> {
    let a = robot.world_geom(rf, i);
    let b = human.world_geom(hf, j);
    let cp = closest_points_segments(
        &a.segment_start,
        &a.segment_end,
        &b.segment_start,
        &b.segment_end,
    );
    if cp.distance() >= a.radius + b.radius {
        return None;
    }
    let va = point_velocity(robot, rf, &rs.qdot, i, &cp.point_a);
    let vb = point_velocity(human, hf, &hs.qdot, j, &cp.point_b);
    let c = capsule_contact(&a, &b, cfg, &(va - vb));
    c.in_contact.then_some(c)
}

#[cfg(test)]
mod tests {
    use rand::Rng as _;

    use super::*;
    use crate::envs::observation_manifest;
    use crate::rng::from_seed;

    fn random_action<const N: usize>(rng: &mut Rng) -> [f64; N] {
        std::array::from_fn(|_| rng.random_range(-1.0..=1.0))
    }

    #[test]
    fn reset_is_deterministic() {
        for task in TaskId::ALL {
            let (a, oa) = reset(task, DisabilityProfile::default(), from_seed(3)).unwrap();
            let (b, ob) = reset(task, DisabilityProfile::default(), from_seed(3)).unwrap();
            assert_eq!(a, b);
            assert_eq!(oa, ob);
        }
    }

    #[test]
    fn only_active_task_fields_are_populated() {
        let (s, _) = reset(TaskId::Scratch, DisabilityProfile::default(), from_seed(0)).unwrap();
        assert!(s.scratch_target.is_some() && s.grasp_target.is_none() && s.wipe_active == 0);
        let (b, _) = reset(TaskId::BedBath, DisabilityProfile::default(), from_seed(0)).unwrap();
        assert!(b.scratch_target.is_none() && b.grasp_target.is_none());
        assert_eq!(b.wipe_targets().iter().filter(|w| w.active).count(), 52);
        let (a, _) = reset(
            TaskId::ArmAssist,
            DisabilityProfile::default(),
            from_seed(0),
        )
        .unwrap();
        assert!(a.scratch_target.is_none() && a.grasp_target.is_some() && a.waist_target.is_some());
    }

    #[test]
    fn scratch_target_lies_on_arm_surface() {
        for seed in 0..50 {
            let (s, _) = reset(
                TaskId::Scratch,
                DisabilityProfile::default(),
                from_seed(seed),
            )
            .unwrap();
            let p = s.scratch_target.unwrap();
            let geom = s.human_model().links[p.link].geom;
            assert!((geom.axis_distance(&p.local) - geom.radius).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_action_reward_is_reach_only() {
        let disability = DisabilityProfile {
            tremor_amplitude: 0.0,
            ..DisabilityProfile::default()
        };
        let (s, _) = reset(TaskId::Scratch, disability, from_seed(1)).unwrap();
        assert!(!s.last_contact.in_contact);
        let r = step(&s, &[0.0; 7], &[0.0; 3]).unwrap();
        let snap = r.next_state.snapshot();
        let d = r.next_state.target_distance(&snap);
        assert!(!r.next_state.last_contact.in_contact);
        assert!((r.reward - (-d * d / 0.1).exp()).abs() < 1e-12);
    }

    #[test]
    fn human_torque_respects_strength() {
        let weak = DisabilityProfile {
            strength_multiplier: 0.25,
            tremor_amplitude: 2.0,
            ..Default::default()
        };
        let mut rng = from_seed(5);
        let (mut s, _) = reset(TaskId::Scratch, weak, from_seed(1)).unwrap();
        for _ in 0..500 {
            s.step_in_place(&random_action::<7>(&mut rng), &random_action::<3>(&mut rng))
                .unwrap();
            for (tau, l) in s.human_torque.iter().zip(&s.human_model().links) {
                assert!(tau.abs() <= 0.25 * l.torque_limit + 1e-12);
            }
        }
        let quiet = DisabilityProfile {
            tremor_amplitude: 0.0,
            ..weak
        };
        let (mut s, _) = reset(TaskId::Scratch, quiet, from_seed(1)).unwrap();
        s.step_in_place(&[0.0; 7], &[1.0, -1.0, 0.5]).unwrap();
        let limits: Vec<f64> = s.human_model().torque_limits();
        assert_eq!(
            s.human_torque,
            [0.25 * limits[0], -0.25 * limits[1], 0.125 * limits[2]]
        );
    }

    #[test]
    fn episode_ends_exactly_at_horizon() {
        let (mut s, _) =
            reset(TaskId::BedBath, DisabilityProfile::default(), from_seed(9)).unwrap();
        let mut rng = from_seed(10);
        for t in 1..=DEFAULT_HORIZON {
            let (_, done) = s
                .step_in_place(&random_action::<7>(&mut rng), &random_action::<3>(&mut rng))
                .unwrap();
            assert_eq!(done, t == DEFAULT_HORIZON);
        }
        assert!(s.step_in_place(&[0.0; 7], &[0.0; 3]).is_err());
    }

    #[test]
    fn nan_action_is_a_fault() {
        let (s, _) = reset(TaskId::Scratch, DisabilityProfile::default(), from_seed(0)).unwrap();
        let mut a = [0.0; 7];
        a[3] = f64::NAN;
        assert!(matches!(
            step(&s, &a, &[0.0; 3]),
            Err(Error::SimulationFault { joint: 3, .. })
        ));
    }

    #[test]
    fn observation_slices_match_state() {
        for task in TaskId::ALL {
            let (mut s, _) = reset(task, DisabilityProfile::default(), from_seed(2)).unwrap();
            let mut rng = from_seed(4);
            for _ in 0..30 {
                s.step_in_place(&random_action::<7>(&mut rng), &random_action::<3>(&mut rng))
                    .unwrap();
            }
            let obs = build_observation(&s);
            assert_eq!(obs.robot, obs.human);
            let o = &obs.robot;
            assert_eq!(o.len(), task.obs_dim());
            assert_eq!(o.field(task, "joint_pos_robot").unwrap(), &s.robot.q[..]);
            assert_eq!(o.field(task, "joint_vel_robot").unwrap(), &s.robot.qdot[..]);
            assert_eq!(
                &o.field(task, "joint_pos_human").unwrap()[..3],
                &s.human.q[..]
            );
            assert_eq!(
                &o.field(task, "joint_vel_human").unwrap()[..3],
                &s.human.qdot[..]
            );
            assert_eq!(o.field(task, "ee_pos").unwrap(), s.ee_position().as_slice());
            assert_eq!(
                o.field(task, "ee_force").unwrap(),
                s.last_contact.force.as_slice()
            );
            let snap = s.snapshot();
            let d = o.field(task, "ee_to_target").unwrap();
            assert_eq!(d, s.ee_to_target(&snap).as_slice());
            let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            assert!((o.field(task, "ee_target_dist").unwrap()[0] - norm).abs() < 1e-12);
            let quat = o.field(task, "ee_quat").unwrap();
            assert!(quat[0] >= 0.0);
            assert!((quat.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-9);
            let total: usize = observation_manifest(task).iter().map(|f| f.len).sum();
            assert_eq!(total, o.len());
        }
    }

    #[test]
    fn ee_at_target_gives_zero_offset() {
        let (mut s, _) =
            reset(TaskId::Scratch, DisabilityProfile::default(), from_seed(0)).unwrap();
        let snap = s.snapshot();
        let ee = snap.robot.end_effector.translation.vector;
        let local = snap.human.links[UPPER_ARM]
            .inverse_transform_point(&ee.into())
            .coords;
        s.scratch_target = Some(SurfacePoint {
            link: UPPER_ARM,
            local,
        });
        let o = build_observation(&s).robot;
        for x in o.field(TaskId::Scratch, "ee_to_target").unwrap() {
            assert!(x.abs() < 1e-12);
        }
        assert!(o.field(TaskId::Scratch, "ee_target_dist").unwrap()[0] < 1e-12);
    }

    #[test]
    fn rom_restriction_holds() {
        for (k, rho) in [0.2, 0.5, 1.0].into_iter().enumerate() {
            let disability = DisabilityProfile {
                elbow_rom_fraction: rho,
                ..Default::default()
            };
            let (mut s, _) = reset(TaskId::ArmAssist, disability, from_seed(k as u64)).unwrap();
            let [lo, hi] = s.scene().human.links[2].joint_limits;
            let top = lo + rho * (hi - lo);
            let mut rng = from_seed(100 + k as u64);
            for _ in 0..300 {
                s.step_in_place(&random_action::<7>(&mut rng), &random_action::<3>(&mut rng))
                    .unwrap();
                assert!(s.human.q[2] >= lo - 1e-12 && s.human.q[2] <= top + 1e-12);
            }
        }
    }

    #[test]
    fn wipes_only_decrease_and_pay_once() {
        let (mut s, _) =
            reset(TaskId::BedBath, DisabilityProfile::default(), from_seed(6)).unwrap();
        let mut rng = from_seed(7);
        let mut active = s.active_wipe_count();
        let mut ret = 0.0;
        for _ in 0..DEFAULT_HORIZON {
            let (r, _) = s
                .step_in_place(&random_action::<7>(&mut rng), &random_action::<3>(&mut rng))
                .unwrap();
            ret += r;
            let now = s.active_wipe_count();
            assert!(now <= active);
            assert_eq!(active - now, s.wiped_this_step as u32);
            active = now;
        }
        assert!(ret <= 1052.0);
    }
}
