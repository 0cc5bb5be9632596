//! Zero-shot coordination: partner populations over the disability grid,
//! train/test splits, robots trained against sampled partners, the expected
//! return against unseen partners and cross-play analysis.

mod agent;
mod crossplay;
mod population;

pub use agent::{evaluate_m, evaluate_m_with, train_zsc_agent, MEstimate};
pub use crossplay::{
    cluster_order, crossplay, crossplay_population, crossplay_with, CrossplayMatrix, Team,
};
pub use population::{
    disability_setting, split_population, train_population, FailedRun, PartnerPopulation,
    PopulationEntry, PopulationPlan, PopulationSplit, RunRequest, DISABILITY_SETTINGS,
};
