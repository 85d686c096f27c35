use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{CalibrateError, Result};
use crate::abm::{ensemble_mean, SimResult, Statistic};
use crate::data::{smooth_values, DEFAULT_SMOOTHING_WINDOW};

/// Daily values per statistic, indexed from simulation day 0.
pub type SeriesSet = BTreeMap<Statistic, Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MisfitSpec {
    /// Statistics and their weights.
    pub statistics: Vec<(Statistic, f64)>,
    /// Half-open day range `[start, end)`.
    pub window: (usize, usize),
    /// Centered smoothing applied to both sides before comparison; 1 disables it.
    pub smoothing: usize,
}

impl MisfitSpec {
    pub fn new(statistics: &[Statistic], window: (usize, usize)) -> Self {
        Self {
            statistics: statistics.iter().map(|&s| (s, 1.0)).collect(),
            window,
            smoothing: DEFAULT_SMOOTHING_WINDOW,
        }
    }

    pub fn with_smoothing(mut self, window: usize) -> Self {
        self.smoothing = window;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.window.0 >= self.window.1 {
            return Err(CalibrateError::InvalidConfig(format!(
                "empty window {:?}",
                self.window
            )));
        }
        if self.statistics.is_empty() {
            return Err(CalibrateError::InvalidConfig(
                "no statistics selected".into(),
            ));
        }
        if self.smoothing == 0 || self.smoothing % 2 == 0 {
            return Err(CalibrateError::InvalidConfig(
                "smoothing window must be odd".into(),
            ));
        }
        for &(s, w) in &self.statistics {
            if matches!(s, Statistic::NewInfections | Statistic::InfectiousCount) {
                return Err(CalibrateError::InvalidConfig(format!(
                    "{s} is not an observable statistic"
                )));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(CalibrateError::InvalidConfig(format!(
                    "weight for {s} must be finite and non-negative"
                )));
            }
        }
        Ok(())
    }
}

fn prepare(x: &[f64], smoothing: usize) -> Result<Vec<f64>> {
    if smoothing <= 1 {
        Ok(x.to_vec())
    } else {
        Ok(smooth_values(x, smoothing)?)
    }
}

/// Per-statistic normaliser: the maximum of the (smoothed) observed series over the window.
pub fn normalizer(observed: &[f64], spec: &MisfitSpec) -> Result<f64> {
    let (a, b) = spec.window;
    if observed.len() < b {
        return Err(CalibrateError::WindowMismatch {
            needed: b,
            available: observed.len(),
        });
    }
    let obs = prepare(observed, spec.smoothing)?;
    Ok(obs[a..b].iter().cloned().fold(0.0, f64::max))
}

/// Weighted sum over statistics of `sum |observed - simulated| / M_s` on the window.
pub fn misfit(observed: &SeriesSet, simulated: &SeriesSet, spec: &MisfitSpec) -> Result<f64> {
    spec.validate()?;
    let (a, b) = spec.window;
    let mut total = 0.0;
    for &(stat, weight) in &spec.statistics {
        let obs = observed
            .get(&stat)
            .ok_or(CalibrateError::MissingStatistic(stat))?;
        let sim = simulated
            .get(&stat)
            .ok_or(CalibrateError::MissingStatistic(stat))?;
        for len in [obs.len(), sim.len()] {
            if len < b {
                return Err(CalibrateError::WindowMismatch {
                    needed: b,
                    available: len,
                });
            }
        }
        let m = normalizer(obs, spec)?;
        if m <= 0.0 {
            return Err(CalibrateError::ZeroNormalizer(stat));
        }
        let obs = prepare(obs, spec.smoothing)?;
        let sim = prepare(sim, spec.smoothing)?;
        let abs: f64 = obs[a..b]
            .iter()
            .zip(&sim[a..b])
            .map(|(x, y)| (x - y).abs())
            .sum();
        total += weight * abs / m;
    }
    Ok(total)
}

/// Ensemble means of the statistics named in `spec`.
pub fn simulated_set(runs: &[SimResult], spec: &MisfitSpec) -> SeriesSet {
    spec.statistics
        .iter()
        .map(|&(s, _)| (s, ensemble_mean(runs, s)))
        .collect()
}
