//! Derived outputs: effective reproduction number, ensemble quantile bands
//! and forward projections.

use serde::Serialize;

use crate::abm::{
    run_ensemble, AbmError, BetaChange, DiseaseParams, Population, SimResult, Statistic,
};
use crate::forecast::{select_sarima, ForecastError};
use crate::stats::quantile_sorted;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("ensemble holds {0} runs, need at least 2")]
    EnsembleTooSmall(usize),
    #[error("runs have different lengths")]
    RaggedEnsemble,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Abm(#[from] AbmError),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
}

pub type Result<T, E = ReportError> = std::result::Result<T, E>;

pub const DEFAULT_REPRO_WINDOW: usize = 7;

/// `R(t) = new_infections(t) * f / infectious(t)`; `None` where nobody is infectious.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReproSeries {
    pub raw: Vec<Option<f64>>,
    pub smoothed: Vec<Option<f64>>,
    pub window: usize,
    pub f: f64,
}

impl ReproSeries {
    fn from_counts(new: &[f64], infectious: &[f64], f: f64, window: usize) -> Result<Self> {
        if !(f > 0.0 && f.is_finite()) {
            return Err(ReportError::InvalidArgument(format!(
                "infectious period must be positive, got {f}"
            )));
        }
        if window == 0 || window % 2 == 0 {
            return Err(ReportError::InvalidArgument(format!(
                "smoothing window must be odd, got {window}"
            )));
        }
        let raw: Vec<Option<f64>> = new
            .iter()
            .zip(infectious)
            .map(|(&n, &c)| (c > 0.0).then(|| n * f / c))
            .collect();
        let half = window / 2;
        let smoothed = (0..raw.len())
            .map(|t| {
                raw[t]?;
                let lo = t.saturating_sub(half);
                let hi = (t + half + 1).min(raw.len());
                let vals: Vec<f64> = raw[lo..hi].iter().flatten().copied().collect();
                Some(vals.iter().sum::<f64>() / vals.len() as f64)
            })
            .collect();
        Ok(Self {
            raw,
            smoothed,
            window,
            f,
        })
    }

    /// Mean of the defined smoothed values over `[from, to)`.
    pub fn mean_over(&self, from: usize, to: usize) -> Option<f64> {
        let vals: Vec<f64> = self.smoothed
            [from.min(self.smoothed.len())..to.min(self.smoothed.len())]
            .iter()
            .flatten()
            .copied()
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

pub fn reproduction_number(result: &SimResult, f: f64, window: usize) -> Result<ReproSeries> {
    ReproSeries::from_counts(
        &result.series(Statistic::NewInfections),
        &result.series(Statistic::InfectiousCount),
        f,
        window,
    )
}

/// R(t) from counts summed over the runs of an ensemble.
pub fn pooled_reproduction_number(
    runs: &[SimResult],
    f: f64,
    window: usize,
) -> Result<ReproSeries> {
    let n = check_lengths(runs)?;
    let mut new = vec![0.0; n];
    let mut inf = vec![0.0; n];
    for r in runs {
        for (a, v) in new.iter_mut().zip(r.series(Statistic::NewInfections)) {
            *a += v;
        }
        for (a, v) in inf.iter_mut().zip(r.series(Statistic::InfectiousCount)) {
            *a += v;
        }
    }
    ReproSeries::from_counts(&new, &inf, f, window)
}

fn check_lengths(runs: &[SimResult]) -> Result<usize> {
    let n = runs.first().map_or(0, |r| r.len());
    if runs.iter().any(|r| r.len() != n) {
        return Err(ReportError::RaggedEnsemble);
    }
    Ok(n)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileBand {
    pub statistic: Statistic,
    pub q10: Vec<f64>,
    pub q50: Vec<f64>,
    pub q90: Vec<f64>,
}

/// Per-day 10%, 50% and 90% quantiles with linear interpolation between order statistics.
pub fn quantile_bands(runs: &[SimResult], statistic: Statistic) -> Result<QuantileBand> {
    if runs.len() < 2 {
        return Err(ReportError::EnsembleTooSmall(runs.len()));
    }
    let n = check_lengths(runs)?;
    let series: Vec<Vec<f64>> = runs.iter().map(|r| r.series(statistic)).collect();
    let mut band = QuantileBand {
        statistic,
        q10: Vec::with_capacity(n),
        q50: Vec::with_capacity(n),
        q90: Vec::with_capacity(n),
    };
    let mut day = vec![0.0; runs.len()];
    for t in 0..n {
        for (d, s) in day.iter_mut().zip(&series) {
            *d = s[t];
        }
        day.sort_by(f64::total_cmp);
        band.q10.push(quantile_sorted(&day, 0.1));
        band.q50.push(quantile_sorted(&day, 0.5));
        band.q90.push(quantile_sorted(&day, 0.9));
    }
    Ok(band)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestSource {
    /// No horizon; only observed tests were used.
    Observed,
    Sarima,
    /// The last observed week repeated.
    HoldLastWeek,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionConfig {
    pub horizon: usize,
    pub n_runs: usize,
    pub base_seed: u64,
    /// Extra transmission multiplier applied from the first forecast day.
    pub beta_multiplier: Option<f64>,
    /// Overrides the infectious period used for R(t).
    pub infectious_period: Option<f64>,
    pub repro_window: usize,
    pub statistics: Vec<Statistic>,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self {
            horizon: 30,
            n_runs: 10,
            base_seed: 0,
            beta_multiplier: None,
            infectious_period: None,
            repro_window: DEFAULT_REPRO_WINDOW,
            statistics: vec![
                Statistic::NewDiagnoses,
                Statistic::NewDeaths,
                Statistic::NumCritical,
                Statistic::NewInfections,
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Projection {
    /// First forecast day; days before it are history.
    pub boundary: usize,
    pub tests: Vec<f64>,
    pub test_source: TestSource,
    pub bands: Vec<QuantileBand>,
    pub repro: ReproSeries,
}

/// `horizon` more days of tests: the selected seasonal ARIMA forecast, or the
/// last observed week repeated when no model can be fitted.
pub fn extend_tests(history: &[f64], horizon: usize) -> Result<(Vec<f64>, TestSource)> {
    if history.is_empty() {
        return Err(ReportError::InvalidArgument("empty test history".into()));
    }
    if horizon == 0 {
        return Ok((history.to_vec(), TestSource::Observed));
    }
    let (future, source) = match select_sarima(history) {
        Ok(model) => (model.forecast(horizon), TestSource::Sarima),
        Err(e) => {
            log::warn!("test forecast failed ({e}); repeating the last week");
            let week = &history[history.len().saturating_sub(7)..];
            (
                (0..horizon).map(|k| week[k % week.len()]).collect(),
                TestSource::HoldLastWeek,
            )
        }
    };
    let mut tests = history.to_vec();
    tests.extend(future);
    Ok((tests, source))
}

fn with_multiplier_from(params: &DiseaseParams, day: u32, multiplier: f64) -> DiseaseParams {
    let mut p = params.clone();
    match p.beta_schedule.iter_mut().find(|c| c.day == day) {
        Some(c) => c.multiplier *= multiplier,
        None => {
            let at = p.beta_schedule.partition_point(|c| c.day < day);
            p.beta_schedule.insert(at, BetaChange { day, multiplier });
        }
    }
    p
}

/// Simulates the observed history plus `horizon` forecast days and
/// summarises the ensemble.
pub fn project(
    template: &Population,
    params: &DiseaseParams,
    tests_history: &[f64],
    cfg: &ProjectionConfig,
) -> Result<Projection> {
    if cfg.n_runs < 2 {
        return Err(ReportError::EnsembleTooSmall(cfg.n_runs));
    }
    let boundary = tests_history.len();
    let (tests, test_source) = extend_tests(tests_history, cfg.horizon)?;
    let params = match cfg.beta_multiplier {
        Some(m) if cfg.horizon > 0 => with_multiplier_from(params, boundary as u32, m),
        _ => params.clone(),
    };
    let n_days = boundary + cfg.horizon;
    let runs = run_ensemble(template, &params, n_days, &tests, cfg.n_runs, cfg.base_seed)?;
    let bands = cfg
        .statistics
        .iter()
        .map(|&s| quantile_bands(&runs, s))
        .collect::<Result<Vec<_>>>()?;
    let f = cfg
        .infectious_period
        .unwrap_or_else(|| params.infectious_period(&template.age_histogram()));
    let repro = pooled_reproduction_number(&runs, f, cfg.repro_window)?;
    Ok(Projection {
        boundary,
        tests,
        test_source,
        bands,
        repro,
    })
}
