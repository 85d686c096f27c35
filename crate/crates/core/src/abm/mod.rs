//! Stochastic agent-based transmission model.
//!
//! Agents carry an age and a disease state and mix over household, school,
//! work and community contact layers. Each simulated day runs transmission,
//! then scheduled state progression, then allocation of the day's tests.

pub mod params;
pub mod population;
pub mod sim;
pub mod state;

pub use params::{AgeProgression, BetaChange, DiseaseParams, Duration, Durations, LayerWeights};
pub use population::{
    synthesize_population, Agent, LayerConfig, LayerKind, Population, PopulationSpec,
};
pub use sim::{ensemble_mean, run, run_ensemble, step, DaySummary, SimResult, Statistic};
pub use state::AgentState;

/// Number of ten-year age bins (`0-9` through `90+`).
pub const AGE_BINS: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum AbmError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("tests series covers {available} days, need {needed}")]
    TestsSeriesTooShort { needed: usize, available: usize },
}

pub type Result<T, E = AbmError> = std::result::Result<T, E>;
