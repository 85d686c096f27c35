//! Additive Holt-Winters (triple exponential smoothing) with weekly season.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{rolling_origin_folds, CvFold, ForecastError, Result, CV_FOLDS, CV_HORIZON};

pub const SEASON: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HoltWintersParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub season: usize,
}

/// Smoothed state after the last observation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoltWintersModel {
    pub params: HoltWintersParams,
    pub level: f64,
    pub trend: f64,
    /// `seasonals[t % season]` is the component for day index `t`; sums to zero.
    pub seasonals: Vec<f64>,
    pub n_obs: usize,
}

#[derive(Debug, Clone, Copy)]
struct State {
    level: f64,
    trend: f64,
}

/// Initial level (at index -1), trend and seasonals from a centered moving
/// average over the first two seasons. Exact for linear-plus-periodic input.
fn initial_state(x: &[f64], m: usize) -> (State, Vec<f64>) {
    let half = m / 2;
    // centered average of an odd season; even seasons use a 2 x m average
    let ma: Vec<(usize, f64)> = (half..2 * m - half)
        .filter_map(|t| {
            if m % 2 == 1 {
                Some((t, x[t - half..=t + half].iter().sum::<f64>() / m as f64))
            } else if t + half < 2 * m {
                let a: f64 = x[t - half..t + half].iter().sum();
                let b: f64 = x[t - half + 1..=t + half].iter().sum();
                Some((t, (a + b) / (2 * m) as f64))
            } else {
                None
            }
        })
        .collect();
    let (t0, first) = ma[0];
    let (t1, last) = ma[ma.len() - 1];
    let trend = if t1 > t0 {
        (last - first) / (t1 - t0) as f64
    } else {
        0.0
    };
    let mut sum = vec![0.0; m];
    let mut count = vec![0usize; m];
    for &(t, v) in &ma {
        sum[t % m] += x[t] - v;
        count[t % m] += 1;
    }
    let mut seasonals: Vec<f64> = sum
        .iter()
        .zip(&count)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let mean = seasonals.iter().sum::<f64>() / m as f64;
    seasonals.iter_mut().for_each(|s| *s -= mean);
    let level = first - (t0 as f64 + 1.0) * trend;
    (State { level, trend }, seasonals)
}

/// Runs the recursions over `x`, calling `visit(t, state, seasonals)` after
/// each update.
fn filter<F>(x: &[f64], p: &HoltWintersParams, mut visit: F) -> (State, Vec<f64>)
where
    F: FnMut(usize, State, &[f64]),
{
    let m = p.season;
    let (mut st, mut seas) = initial_state(x, m);
    for (t, &v) in x.iter().enumerate() {
        let s_old = seas[t % m];
        let level = p.alpha * (v - s_old) + (1.0 - p.alpha) * (st.level + st.trend);
        let trend = p.beta * (level - st.level) + (1.0 - p.beta) * st.trend;
        seas[t % m] = p.gamma * (v - level) + (1.0 - p.gamma) * s_old;
        st = State { level, trend };
        visit(t, st, &seas);
    }
    (st, seas)
}

fn project(st: State, seas: &[f64], last: usize, horizon: usize) -> Vec<f64> {
    let m = seas.len();
    (1..=horizon)
        .map(|h| st.level + h as f64 * st.trend + seas[(last + h) % m])
        .collect()
}

impl HoltWintersModel {
    pub fn fit(x: &[f64], params: HoltWintersParams) -> Result<Self> {
        check_length(x, params.season)?;
        let (st, mut seas) = filter(x, &params, |_, _, _| {});
        let shift = seas.iter().sum::<f64>() / seas.len() as f64;
        seas.iter_mut().for_each(|s| *s -= shift);
        Ok(Self {
            params,
            level: st.level + shift,
            trend: st.trend,
            seasonals: seas,
            n_obs: x.len(),
        })
    }

    /// Raw (unclamped) forecasts `1..=horizon` steps ahead.
    pub fn forecast_raw(&self, horizon: usize) -> Vec<f64> {
        let st = State {
            level: self.level,
            trend: self.trend,
        };
        project(st, &self.seasonals, self.n_obs - 1, horizon)
    }

    pub fn forecast(&self, horizon: usize) -> Vec<f64> {
        self.forecast_raw(horizon)
            .into_iter()
            .map(|v| v.max(0.0))
            .collect()
    }
}

fn check_length(x: &[f64], m: usize) -> Result<()> {
    if x.len() < 3 * m {
        return Err(ForecastError::SeriesTooShort {
            len: x.len(),
            min: 3 * m,
        });
    }
    Ok(())
}

/// Rolling-origin MAE of `params` over `folds`, from a single filtering pass.
fn folds_mae(x: &[f64], params: &HoltWintersParams, folds: &[CvFold]) -> f64 {
    let mut total = 0.0;
    let mut fi = 0;
    filter(x, params, |t, st, seas| {
        while fi < folds.len() && folds[fi].train_end == t + 1 {
            let f = &folds[fi];
            let pred = project(st, seas, t, f.test_end - f.train_end);
            let actual = &x[f.train_end..f.test_end];
            total += crate::stats::mean_absolute_error(&pred, actual);
            fi += 1;
        }
    });
    total / folds.len() as f64
}

fn one_step_mae(x: &[f64], params: &HoltWintersParams) -> f64 {
    let mut err = 0.0;
    let mut prev: Option<(State, Vec<f64>)> = None;
    filter(x, params, |t, st, seas| {
        if let Some((p, s)) = prev.take() {
            err += (project(p, &s, t - 1, 1)[0] - x[t]).abs();
        }
        prev = Some((st, seas.to_vec()));
    });
    err / (x.len() - 1) as f64
}

#[derive(Debug, Clone, Copy)]
pub struct HoltWintersSearch {
    pub samples: usize,
    pub folds: usize,
    pub fold_horizon: usize,
    pub seed: u64,
}

impl Default for HoltWintersSearch {
    fn default() -> Self {
        Self {
            samples: 500,
            folds: CV_FOLDS,
            fold_horizon: CV_HORIZON,
            seed: 0x4877,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HoltWintersFit {
    pub model: HoltWintersModel,
    /// Search objective of the chosen parameters.
    pub search_mae: f64,
}

/// Random search over `(alpha, beta, gamma)` in `(0, 1)^3` minimising the
/// rolling-origin MAE. Folds whose training span is under three seasons are
/// skipped; with none left the one-step in-sample MAE is used instead.
pub fn fit_holt_winters(x: &[f64], search: &HoltWintersSearch) -> Result<HoltWintersFit> {
    check_length(x, SEASON)?;
    let folds: Vec<CvFold> = rolling_origin_folds(x.len(), search.folds, search.fold_horizon)
        .into_iter()
        .filter(|f| f.train_end >= 3 * SEASON)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    let mut best: Option<(HoltWintersParams, f64)> = None;
    for _ in 0..search.samples.max(1) {
        let mut draw = || rng.random_range(1e-3..1.0 - 1e-3);
        let p = HoltWintersParams {
            alpha: draw(),
            beta: draw(),
            gamma: draw(),
            season: SEASON,
        };
        let mae = if folds.is_empty() {
            one_step_mae(x, &p)
        } else {
            folds_mae(x, &p, &folds)
        };
        if best.is_none_or(|(_, b)| mae < b) {
            best = Some((p, mae));
        }
    }
    let (params, search_mae) = best.expect("at least one sample");
    Ok(HoltWintersFit {
        model: HoltWintersModel::fit(x, params)?,
        search_mae,
    })
}
