//! Variance-stabilising and differencing transforms with their inverses.

use super::{ForecastError, Result};

/// Box-Cox transform: `ln x` for `lambda == 0`, else `(x^lambda - 1) / lambda`.
pub fn boxcox(x: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if let Some(i) = x.iter().position(|&v| !(v > 0.0)) {
        return Err(ForecastError::NonPositiveValue(i));
    }
    Ok(x.iter().map(|&v| boxcox_one(v, lambda)).collect())
}

fn boxcox_one(v: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        v.ln()
    } else {
        (v.powf(lambda) - 1.0) / lambda
    }
}

/// Inverse of [`boxcox`]. Values outside the transform's range (possible for
/// forecasts when `lambda != 0`) map to zero.
pub fn inv_boxcox(y: &[f64], lambda: f64) -> Vec<f64> {
    y.iter()
        .map(|&v| {
            if lambda == 0.0 {
                v.exp()
            } else {
                let base = lambda * v + 1.0;
                if base > 0.0 {
                    base.powf(1.0 / lambda)
                } else {
                    0.0
                }
            }
        })
        .collect()
}

pub const BOXCOX_GRID: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

/// Grid value maximising the Gaussian profile log-likelihood
/// `-n/2 ln(var(y_lambda)) + (lambda - 1) sum ln x`.
/// `None` if the series has non-positive or constant values.
pub fn select_boxcox_lambda(x: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let log_sum: f64 = x.iter().map(|v| v.ln()).sum();
    let n = x.len() as f64;
    let mut best: Option<(f64, f64)> = None;
    for &lambda in &BOXCOX_GRID {
        let y: Vec<f64> = x.iter().map(|&v| boxcox_one(v, lambda)).collect();
        let var = crate::stats::variance(&y);
        if !(var > 0.0) || !var.is_finite() {
            return None;
        }
        let ll = -0.5 * n * var.ln() + (lambda - 1.0) * log_sum;
        if best.is_none_or(|(_, b)| ll > b) {
            best = Some((lambda, ll));
        }
    }
    best.map(|(l, _)| l)
}

/// `order`-fold lag-`lag` difference; output is `lag * order` shorter.
pub fn difference(x: &[f64], lag: usize, order: usize) -> Result<Vec<f64>> {
    if lag == 0 {
        return Err(ForecastError::InvalidArgument(
            "lag must be positive".into(),
        ));
    }
    if x.len() <= lag * order {
        return Err(ForecastError::SeriesTooShort {
            len: x.len(),
            min: lag * order + 1,
        });
    }
    Ok(difference_unchecked(x, lag, order))
}

fn difference_unchecked(x: &[f64], lag: usize, order: usize) -> Vec<f64> {
    let mut cur = x.to_vec();
    for _ in 0..order {
        cur = (lag..cur.len()).map(|t| cur[t] - cur[t - lag]).collect();
    }
    cur
}

/// Inverts [`difference`] given the first `lag * order` values of the
/// original series.
pub fn integrate(diffed: &[f64], head: &[f64], lag: usize, order: usize) -> Result<Vec<f64>> {
    if head.len() != lag * order {
        return Err(ForecastError::InvalidArgument(format!(
            "need {} initial values, got {}",
            lag * order,
            head.len()
        )));
    }
    let mut cur = diffed.to_vec();
    for j in (0..order).rev() {
        let level_head = difference_unchecked(head, lag, j);
        let mut next = level_head[..lag].to_vec();
        next.reserve(cur.len());
        for (i, d) in cur.iter().enumerate() {
            next.push(d + next[i]);
        }
        cur = next;
    }
    Ok(cur)
}

/// Applies the differences `lags` (in order) to `history` and returns each
/// intermediate level, `levels[0] == history`.
pub fn difference_levels(history: &[f64], lags: &[usize]) -> Vec<Vec<f64>> {
    let mut levels = vec![history.to_vec()];
    for &lag in lags {
        let prev = levels.last().expect("non-empty");
        levels.push((lag..prev.len()).map(|t| prev[t] - prev[t - lag]).collect());
    }
    levels
}

/// Extends `history` by undoing the differences `lags` on `future_diff`, the
/// continuation of the fully differenced series.
pub fn integrate_forward(history: &[f64], future_diff: &[f64], lags: &[usize]) -> Vec<f64> {
    let levels = difference_levels(history, lags);
    let mut fut = future_diff.to_vec();
    for j in (0..lags.len()).rev() {
        let lag = lags[j];
        let mut ext = levels[j].clone();
        let base = ext.len();
        for (h, d) in fut.iter().enumerate() {
            let v = d + ext[base + h - lag];
            ext.push(v);
        }
        fut = ext.split_off(base);
    }
    fut
}
