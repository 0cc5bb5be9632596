//! The three two-agent assistive tasks.
//!
//! A robot arm (7 torque-controlled joints) and a human right arm (3
//! torque-controlled joints) share one team reward. Stepping is a pure
//! function of `(state, actions)`; environment states are plain values that
//! can be cloned and stepped from many threads.

mod observation;
pub(crate) use observation::write_observation;
mod reward;
mod scene;
mod state;
mod tremor;

pub use observation::{
    build_observation, observation_manifest, AgentObservation, ObsField, Observations,
};
pub use reward::{compute_reward, reward_upper_bound, RewardWeights};
pub use scene::{Scene, SurfacePoint, NUM_WIPE_TARGETS};
pub use state::{reset, step, EnvSpec, EnvState, StepResult, WipeTarget};
pub use tremor::TremorProcess;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Actuated joints of the robot agent.
pub const ROBOT_ACTION_DIM: usize = 7;
/// Actuated joints of the human agent.
pub const HUMAN_ACTION_DIM: usize = 3;
/// Episode length in steps; there is no early termination.
pub const DEFAULT_HORIZON: u32 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskId {
    Scratch,
    BedBath,
    ArmAssist,
}

impl TaskId {
    pub const ALL: [TaskId; 3] = [TaskId::Scratch, TaskId::BedBath, TaskId::ArmAssist];

    pub fn name(self) -> &'static str {
        match self {
            TaskId::Scratch => "scratch",
            TaskId::BedBath => "bed-bath",
            TaskId::ArmAssist => "arm-assist",
        }
    }

    pub fn obs_dim(self) -> usize {
        match self {
            TaskId::Scratch | TaskId::BedBath => 52,
            TaskId::ArmAssist => 65,
        }
    }
}

impl std::fmt::Display for TaskId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for TaskId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "scratch" => Ok(TaskId::Scratch),
            "bed-bath" | "bedbath" => Ok(TaskId::BedBath),
            "arm-assist" | "armassist" => Ok(TaskId::ArmAssist),
            other => Err(Error::config("task", format!("unknown task `{other}`"))),
        }
    }
}

/// The two agents of every task.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentRole {
    Robot,
    Human,
}

impl AgentRole {
    pub const BOTH: [AgentRole; 2] = [AgentRole::Robot, AgentRole::Human];

    pub fn action_dim(self) -> usize {
        match self {
            AgentRole::Robot => ROBOT_ACTION_DIM,
            AgentRole::Human => HUMAN_ACTION_DIM,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AgentRole::Robot => "robot",
            AgentRole::Human => "human",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl std::fmt::Display for AgentRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Impairments of the simulated human.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisabilityProfile {
    /// Scales every human joint torque, in (0, 1].
    pub strength_multiplier: f64,
    /// Fraction of the elbow's range of motion still available, in (0, 1].
    pub elbow_rom_fraction: f64,
    /// Stationary standard deviation of the tremor torque (N·m).
    pub tremor_amplitude: f64,
    /// Correlation time of the tremor (s).
    pub tremor_timescale: f64,
}

impl Default for DisabilityProfile {
    fn default() -> Self {
        Self {
            strength_multiplier: 1.0,
            elbow_rom_fraction: 1.0,
            tremor_amplitude: 0.05,
            tremor_timescale: 0.2,
        }
    }
}

impl DisabilityProfile {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v <= 1.0;
        if !unit(self.strength_multiplier) {
            return Err(Error::config(
                "disability.strength_multiplier",
                "must lie in (0, 1]",
            ));
        }
        if !unit(self.elbow_rom_fraction) {
            return Err(Error::config(
                "disability.elbow_rom_fraction",
                "must lie in (0, 1]",
            ));
        }
        if !(self.tremor_amplitude >= 0.0) {
            return Err(Error::config(
                "disability.tremor_amplitude",
                "must be non-negative",
            ));
        }
        if !(self.tremor_timescale > 0.0) {
            return Err(Error::config(
                "disability.tremor_timescale",
                "must be positive",
            ));
        }
        Ok(())
    }
}
