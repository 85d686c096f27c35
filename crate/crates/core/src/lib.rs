//! Epidemic modeling toolkit.
//!
//! The crate is organised along the pipeline it supports:
//!
//! - [`data`]: ingest daily indicator series, fill gaps, smooth and decompose.
//! - [`tsa`]: seasonality, stationarity and cross-indicator diagnostics.
//! - [`forecast`]: SARIMA, Holt-Winters and linear-trend forecasts of the
//!   testing-volume series, compared by rolling-origin cross-validation.
//! - [`abm`]: stochastic agent-based transmission model with age structure,
//!   four contact layers, data-driven testing and a piecewise-constant
//!   transmissibility schedule.
//! - [`calibrate`]: misfit functional and a tree-structured Parzen estimator
//!   used to fit the model over sequential windows.
//! - [`report`]: effective reproduction number, ensemble quantile bands and
//!   forward projections.

pub mod abm;
pub mod calibrate;
pub mod data;
pub mod forecast;
pub mod report;
pub mod stats;
pub mod tsa;

pub use abm::{AgentState, DiseaseParams, Population, SimResult, Statistic};
pub use calibrate::{SearchSpace, TpeConfig, TrialStore};
pub use data::{Indicator, TimeSeries};
