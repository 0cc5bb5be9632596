//! MARL baselines (IPPO, MAPPO, ISAC, MASAC) and their single-learner
//! degenerations (PPO, SAC) used against frozen partners.

mod config;
mod gae;
mod normalize;
mod ppo;
mod replay;
mod sac;
mod team;

use serde::{Deserialize, Serialize};

pub use config::{PpoConfig, SacConfig};
pub use gae::{compute_gae, normalize_advantages};
pub use normalize::{RewardScaler, RunningMeanStd};
pub use ppo::{ppo_loss_grad, ppo_update, PpoAgent, PpoData, PpoLoss};
pub use replay::{ReplayBuffer, ReplaySample};
pub use sac::{
    actor_loss_grad, q_loss_grad, sac_q_target, sac_update, squashed_batch, standard_noise,
    QLayout, SacAgent, SacLoss,
};
pub use team::{
    evaluate_team, train_team, AlgoConfig, Partner, RoleSpec, RunStatus, TeamSpec, TrainConfig,
    TrainOutcome,
};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Ippo,
    Mappo,
    Isac,
    Masac,
    /// Single learner with a PPO update, e.g. against frozen partners.
    Ppo,
    /// Single learner with a SAC update.
    Sac,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriticMode {
    /// Critic sees the agent's own observation (and action, for Q).
    Independent,
    /// Critic sees both agents' observations (and joint action, for Q).
    Centralized,
}

impl Algorithm {
    pub const MARL: [Algorithm; 4] = [
        Algorithm::Ippo,
        Algorithm::Mappo,
        Algorithm::Isac,
        Algorithm::Masac,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ippo => "ippo",
            Algorithm::Mappo => "mappo",
            Algorithm::Isac => "isac",
            Algorithm::Masac => "masac",
            Algorithm::Ppo => "ppo",
            Algorithm::Sac => "sac",
        }
    }

    pub fn is_ppo(self) -> bool {
        matches!(self, Algorithm::Ippo | Algorithm::Mappo | Algorithm::Ppo)
    }

    pub fn critic_mode(self) -> CriticMode {
        match self {
            Algorithm::Mappo | Algorithm::Masac => CriticMode::Centralized,
            _ => CriticMode::Independent,
        }
    }

    /// Reference hyperparameters for this algorithm.
    pub fn default_config(self) -> AlgoConfig {
        match self {
            Algorithm::Ippo | Algorithm::Ppo => AlgoConfig::Ppo(PpoConfig::ippo()),
            Algorithm::Mappo => AlgoConfig::Ppo(PpoConfig::mappo()),
            Algorithm::Isac | Algorithm::Sac => AlgoConfig::Sac(SacConfig::isac()),
            Algorithm::Masac => AlgoConfig::Sac(SacConfig::masac()),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ippo" => Ok(Algorithm::Ippo),
            "mappo" => Ok(Algorithm::Mappo),
            "isac" => Ok(Algorithm::Isac),
            "masac" => Ok(Algorithm::Masac),
            "ppo" => Ok(Algorithm::Ppo),
            "sac" => Ok(Algorithm::Sac),
            other => Err(Error::config(
                "algorithm",
                format!("unknown algorithm `{other}`"),
            )),
        }
    }
}
