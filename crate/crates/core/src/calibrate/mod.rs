//! Parameter identification for the agent-based model.

pub mod misfit;
pub mod tpe;
pub mod windows;

pub use misfit::{misfit, normalizer, simulated_set, MisfitSpec, SeriesSet};
pub use tpe::{
    expected_improvement, optimize, optimize_batched, random_search, tpe_split, tpe_suggest,
    DimKind, Dimension, ParzenDensity, SearchSpace, TpeConfig, Trial, TrialStore,
};
pub use windows::{
    calibrate_windows, split_windows, CalibrationBounds, CalibrationConfig, CalibrationResult,
    WindowResult,
};

use crate::abm::{AbmError, Statistic};
use crate::data::DataError;

#[derive(Debug, thiserror::Error)]
pub enum CalibrateError {
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("trial store holds {0} trials, need at least 2")]
    StoreTooSmall(usize),
    #[error("density needs at least one point")]
    EmptyPoints,
    #[error("series covers {available} days, window needs {needed}")]
    WindowMismatch { needed: usize, available: usize },
    #[error("no series for statistic {0}")]
    MissingStatistic(Statistic),
    #[error("observed {0} is zero over the whole window")]
    ZeroNormalizer(Statistic),
    #[error("window {} has no usable observations", .0 + 1)]
    WindowWithoutData(usize),
    #[error(transparent)]
    Abm(#[from] AbmError),
    #[error(transparent)]
    Data(#[from] DataError),
}

pub type Result<T, E = CalibrateError> = std::result::Result<T, E>;
