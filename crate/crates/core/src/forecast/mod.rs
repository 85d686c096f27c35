//! Forecasts of the daily testing-volume series and their rolling-origin
//! comparison.

pub mod holt_winters;
pub mod linreg;
pub mod sarima;
pub mod simplex;
pub mod transform;

use std::fmt;

use chrono::Duration;
use serde::Serialize;

use crate::data::{DataError, TimeSeries};
use crate::stats::mean_absolute_error;
use crate::tsa::TsaError;

pub use holt_winters::{
    fit_holt_winters, HoltWintersFit, HoltWintersModel, HoltWintersParams, HoltWintersSearch,
};
pub use linreg::LinearTrend;
pub use sarima::{
    fit_sarima, fit_sarima_with, select_sarima, select_sarima_report, SarimaModel, SarimaOrder,
};
pub use transform::{boxcox, difference, integrate, inv_boxcox};

#[derive(Debug, thiserror::Error)]
pub enum ForecastError {
    #[error("non-positive value at index {0}")]
    NonPositiveValue(usize),
    #[error("series of length {len} is too short (minimum {min})")]
    SeriesTooShort { len: usize, min: usize },
    #[error("invalid order {0}")]
    InvalidOrder(String),
    #[error("fitted AR polynomial of {0} is not stationary")]
    NonStationaryFit(String),
    #[error("no candidate model could be fitted")]
    AllFitsFailed,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Tsa(#[from] TsaError),
}

pub type Result<T, E = ForecastError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelTag {
    Sarima,
    HoltWinters,
    LinearRegression,
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelTag::Sarima => "sarima",
            ModelTag::HoltWinters => "holt_winters",
            ModelTag::LinearRegression => "linear_regression",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ForecastResult {
    pub point_forecast: TimeSeries,
    pub model_tag: ModelTag,
    pub cv_mae: f64,
    pub fold_maes: Vec<f64>,
}

pub const CV_FOLDS: usize = 5;
pub const CV_HORIZON: usize = 14;

/// One rolling-origin split: train on `[0, train_end)`, test on
/// `[train_end, test_end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CvFold {
    pub train_end: usize,
    pub test_end: usize,
}

/// `folds` consecutive test blocks of `horizon` days ending at `n`. Folds
/// with an empty training span are omitted.
pub fn rolling_origin_folds(n: usize, folds: usize, horizon: usize) -> Vec<CvFold> {
    (0..folds)
        .filter_map(|k| {
            let back = (folds - k) * horizon;
            (back < n).then(|| CvFold {
                train_end: n - back,
                test_end: n - back + horizon,
            })
        })
        .collect()
}

/// Mean over folds of the MAE of `forecast(train, horizon)` against the held
/// out block, plus the per-fold values.
pub fn cross_validate<F>(x: &[f64], folds: &[CvFold], mut forecast: F) -> Result<(f64, Vec<f64>)>
where
    F: FnMut(&[f64], usize) -> Result<Vec<f64>>,
{
    if folds.is_empty() {
        return Err(ForecastError::InvalidArgument(
            "no cross-validation folds".into(),
        ));
    }
    let mut maes = Vec::with_capacity(folds.len());
    for f in folds {
        let pred = forecast(&x[..f.train_end], f.test_end - f.train_end)?;
        maes.push(mean_absolute_error(&pred, &x[f.train_end..f.test_end]));
    }
    Ok((maes.iter().sum::<f64>() / maes.len() as f64, maes))
}

/// Repeats the last observed week.
pub fn naive_seasonal(x: &[f64], horizon: usize, season: usize) -> Vec<f64> {
    let n = x.len();
    (0..horizon).map(|h| x[n - season + h % season]).collect()
}

fn forecast_series(history: &TimeSeries, values: Vec<f64>) -> Result<TimeSeries> {
    Ok(TimeSeries::new(
        history.end_date() + Duration::days(1),
        values,
        history.indicator(),
    )?)
}

fn check_horizon(horizon: usize) -> Result<()> {
    if horizon == 0 {
        return Err(ForecastError::InvalidArgument(
            "horizon must be positive".into(),
        ));
    }
    Ok(())
}

fn usable_folds(n: usize, min_train: usize) -> Result<Vec<CvFold>> {
    let folds: Vec<CvFold> = rolling_origin_folds(n, CV_FOLDS, CV_HORIZON)
        .into_iter()
        .filter(|f| f.train_end >= min_train)
        .collect();
    if folds.is_empty() {
        return Err(ForecastError::SeriesTooShort {
            len: n,
            min: min_train + CV_HORIZON,
        });
    }
    Ok(folds)
}

fn run_model(tag: ModelTag, x: &[f64], horizon: usize) -> Result<Vec<f64>> {
    match tag {
        ModelTag::Sarima => Ok(select_sarima(x)?.forecast(horizon)),
        ModelTag::HoltWinters => Ok(fit_holt_winters(x, &HoltWintersSearch::default())?
            .model
            .forecast(horizon)),
        ModelTag::LinearRegression => Ok(LinearTrend::fit(x)?.forecast(horizon)),
    }
}

fn min_train(tag: ModelTag) -> usize {
    match tag {
        ModelTag::Sarima => 60,
        ModelTag::HoltWinters => 3 * holt_winters::SEASON,
        ModelTag::LinearRegression => 2,
    }
}

/// Fits one model on the full series and scores it on the rolling-origin
/// folds whose training span the model can use.
pub fn forecast_with(series: &TimeSeries, tag: ModelTag, horizon: usize) -> Result<ForecastResult> {
    check_horizon(horizon)?;
    let x = series.values();
    let folds = usable_folds(x.len(), min_train(tag))?;
    let (cv_mae, fold_maes) = cross_validate(x, &folds, |t, h| run_model(tag, t, h))?;
    Ok(ForecastResult {
        point_forecast: forecast_series(series, run_model(tag, x, horizon)?)?,
        model_tag: tag,
        cv_mae,
        fold_maes,
    })
}

pub fn fit_linear_regression(series: &TimeSeries, horizon: usize) -> Result<ForecastResult> {
    forecast_with(series, ModelTag::LinearRegression, horizon)
}

#[derive(Debug, Clone)]
pub struct ModelComparison {
    /// Folds shared by every model.
    pub folds: Vec<CvFold>,
    /// Ascending by `cv_mae`.
    pub ranked: Vec<ForecastResult>,
}

/// Scores SARIMA, Holt-Winters and linear regression on identical
/// rolling-origin folds (those long enough for every model) and ranks them.
pub fn compare_models(series: &TimeSeries, horizon: usize) -> Result<ModelComparison> {
    check_horizon(horizon)?;
    let x = series.values();
    if x.len() < 90 {
        return Err(ForecastError::SeriesTooShort {
            len: x.len(),
            min: 90,
        });
    }
    let tags = [
        ModelTag::Sarima,
        ModelTag::HoltWinters,
        ModelTag::LinearRegression,
    ];
    let needed = tags.iter().map(|&t| min_train(t)).max().unwrap_or(0);
    let folds = usable_folds(x.len(), needed)?;
    let mut ranked = Vec::with_capacity(tags.len());
    for tag in tags {
        let (cv_mae, fold_maes) = cross_validate(x, &folds, |t, h| run_model(tag, t, h))?;
        ranked.push(ForecastResult {
            point_forecast: forecast_series(series, run_model(tag, x, horizon)?)?,
            model_tag: tag,
            cv_mae,
            fold_maes,
        });
    }
    ranked.sort_by(|a, b| a.cv_mae.total_cmp(&b.cv_mae));
    Ok(ModelComparison { folds, ranked })
}
