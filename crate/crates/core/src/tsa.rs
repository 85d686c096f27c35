//! Seasonality, stationarity and cross-indicator diagnostics.

use chrono::{Datelike, Duration, Weekday};
use serde::Serialize;

use crate::data::{DataError, TimeSeries};
use crate::stats::{mean, ols, variance};

#[derive(Debug, thiserror::Error)]
pub enum TsaError {
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("Durbin-Levinson innovation variance vanished at lag {0}")]
    NumericalBreakdown(usize),
    #[error("series of length {len} is too short (minimum {min})")]
    SeriesTooShort { len: usize, min: usize },
    #[error("need at least {needed} complete weeks, found {found}")]
    TooFewWeeks { needed: usize, found: usize },
    #[error("week starting at index {0} sums to zero")]
    ZeroWeekSum(usize),
    #[error("zero denominator at index {0}")]
    ZeroDenominator(usize),
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

pub type Result<T, E = TsaError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcfResult {
    pub lags: Vec<usize>,
    pub coefficients: Vec<f64>,
    /// Half-width of the approximate 95% band around zero, `1.96 / sqrt(M)`.
    pub confidence_band: f64,
}

impl AcfResult {
    /// Lags whose coefficient exceeds both neighbours.
    pub fn local_maxima(&self) -> Vec<usize> {
        let c = &self.coefficients;
        (1..c.len().saturating_sub(1))
            .filter(|&k| c[k] > c[k - 1] && c[k] > c[k + 1])
            .map(|k| self.lags[k])
            .collect()
    }
}

/// Sample autocorrelation
/// `R(n) = sum_{t<M-n} (x_t - mu)(x_{t+n} - mu) / ((M - n) sigma^2)`
/// with the population variance `sigma^2`.
pub fn acf(series: &TimeSeries, max_lag: usize) -> Result<AcfResult> {
    acf_values(series.values(), max_lag)
}

pub fn acf_values(x: &[f64], max_lag: usize) -> Result<AcfResult> {
    let m = x.len();
    if m <= max_lag {
        return Err(TsaError::SeriesTooShort {
            len: m,
            min: max_lag + 1,
        });
    }
    let mu = mean(x);
    let var = variance(x);
    if !(var > 0.0) {
        return Err(TsaError::ZeroVariance);
    }
    let mut coefficients = Vec::with_capacity(max_lag + 1);
    coefficients.push(1.0);
    for n in 1..=max_lag {
        let s: f64 = (0..m - n).map(|t| (x[t] - mu) * (x[t + n] - mu)).sum();
        coefficients.push(s / ((m - n) as f64 * var));
    }
    Ok(AcfResult {
        lags: (0..=max_lag).collect(),
        coefficients,
        confidence_band: 1.96 / (m as f64).sqrt(),
    })
}

/// Partial autocorrelation by the Durbin-Levinson recursion on [`acf`].
pub fn pacf(series: &TimeSeries, max_lag: usize) -> Result<AcfResult> {
    pacf_values(series.values(), max_lag)
}

pub fn pacf_values(x: &[f64], max_lag: usize) -> Result<AcfResult> {
    let r = acf_values(x, max_lag)?;
    let rho = &r.coefficients;
    let mut out = vec![1.0];
    let mut phi: Vec<f64> = Vec::new();
    let mut v = 1.0;
    for k in 1..=max_lag {
        let num = rho[k] - (1..k).map(|j| phi[j - 1] * rho[k - j]).sum::<f64>();
        let a = num / v;
        let mut next = Vec::with_capacity(k);
        for j in 1..k {
            next.push(phi[j - 1] - a * phi[k - j - 1]);
        }
        next.push(a);
        phi = next;
        v *= 1.0 - a * a;
        if !(v > 0.0) {
            return Err(TsaError::NumericalBreakdown(k));
        }
        out.push(a);
    }
    Ok(AcfResult {
        lags: r.lags,
        coefficients: out,
        confidence_band: r.confidence_band,
    })
}

/// Average share of each weekday in its week's total.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeasonProfile {
    /// Monday first.
    pub day_fractions: [f64; 7],
    pub weeks_used: usize,
}

pub const WEEKDAY_NAMES: [&str; 7] = [
    "Monday",
    "Tuesday",
    "Wednesday",
    "Thursday",
    "Friday",
    "Saturday",
    "Sunday",
];

/// Mean over complete Monday-to-Sunday weeks of `x(day) / week_total`.
/// Partial leading and trailing weeks are ignored.
pub fn weekly_fractions(series: &TimeSeries) -> Result<SeasonProfile> {
    let start = series.start_date();
    let offset = (7 - start.weekday().num_days_from_monday() as usize) % 7;
    debug_assert_eq!(
        (start + Duration::days(offset as i64)).weekday(),
        Weekday::Mon
    );
    let x = series.values();
    let weeks = x.len().saturating_sub(offset) / 7;
    if weeks < 2 {
        return Err(TsaError::TooFewWeeks {
            needed: 2,
            found: weeks,
        });
    }
    let mut acc = [0.0; 7];
    for w in 0..weeks {
        let base = offset + 7 * w;
        let week = &x[base..base + 7];
        let total: f64 = week.iter().sum();
        if !(total > 0.0) {
            return Err(TsaError::ZeroWeekSum(base));
        }
        for (a, v) in acc.iter_mut().zip(week) {
            *a += v / total;
        }
    }
    Ok(SeasonProfile {
        day_fractions: acc.map(|a| a / weeks as f64),
        weeks_used: weeks,
    })
}

/// `x(n) / x(n - lag) - 1`, starting at index `lag`.
pub fn percent_change(series: &TimeSeries, lag: usize) -> Result<TimeSeries> {
    let x = series.values();
    if lag == 0 {
        return Err(TsaError::InvalidArgument("lag must be positive".into()));
    }
    if x.len() <= lag {
        return Err(TsaError::SeriesTooShort {
            len: x.len(),
            min: lag + 1,
        });
    }
    let mut out = Vec::with_capacity(x.len() - lag);
    for n in lag..x.len() {
        let d = x[n - lag];
        if d == 0.0 {
            return Err(TsaError::ZeroDenominator(n - lag));
        }
        out.push(x[n] / d - 1.0);
    }
    Ok(TimeSeries::new(
        series.date_at(lag),
        out,
        series.indicator(),
    )?)
}

/// Trailing-window Pearson correlation. Entry `k` covers source indices
/// `[k, k + window)`; windows where either side is constant hold NaN and are
/// listed in `degenerate`.
#[derive(Debug, Clone, Serialize)]
pub struct RollingCorrelation {
    pub start_date: chrono::NaiveDate,
    pub window: usize,
    pub values: Vec<f64>,
    pub degenerate: Vec<usize>,
}

pub fn rolling_correlation(
    a: &TimeSeries,
    b: &TimeSeries,
    window: usize,
) -> Result<RollingCorrelation> {
    let (x, y) = (a.values(), b.values());
    if x.len() != y.len() {
        return Err(TsaError::LengthMismatch(x.len(), y.len()));
    }
    if window < 3 {
        return Err(TsaError::InvalidArgument(
            "window must be at least 3".into(),
        ));
    }
    if x.len() < window {
        return Err(TsaError::SeriesTooShort {
            len: x.len(),
            min: window,
        });
    }
    let mut values = Vec::with_capacity(x.len() - window + 1);
    let mut degenerate = Vec::new();
    for k in 0..=x.len() - window {
        match pearson(&x[k..k + window], &y[k..k + window]) {
            Some(r) => values.push(r),
            None => {
                values.push(f64::NAN);
                degenerate.push(k);
            }
        }
    }
    Ok(RollingCorrelation {
        start_date: a.date_at(window - 1),
        window,
        values,
        degenerate,
    })
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Exponential moving average with `alpha = 2 / (span + 1)`, seeded with the
/// first value.
pub fn ema(x: &[f64], span: usize) -> Vec<f64> {
    let alpha = 2.0 / (span as f64 + 1.0);
    let mut out = Vec::with_capacity(x.len());
    let mut s = match x.first() {
        Some(&v) => v,
        None => return out,
    };
    for &v in x {
        s += alpha * (v - s);
        out.push(s);
    }
    out
}

#[derive(Debug, Clone)]
pub struct MacdResult {
    pub macd_line: TimeSeries,
    pub signal_line: TimeSeries,
    pub histogram: TimeSeries,
}

pub fn macd(series: &TimeSeries, fast: usize, slow: usize, signal: usize) -> Result<MacdResult> {
    let x = series.values();
    if fast == 0 || slow == 0 || signal == 0 {
        return Err(TsaError::InvalidArgument("spans must be positive".into()));
    }
    if x.len() <= slow + signal {
        return Err(TsaError::SeriesTooShort {
            len: x.len(),
            min: slow + signal + 1,
        });
    }
    let line: Vec<f64> = ema(x, fast)
        .iter()
        .zip(ema(x, slow))
        .map(|(f, s)| f - s)
        .collect();
    let sig = ema(&line, signal);
    let hist = line.iter().zip(&sig).map(|(l, s)| l - s).collect();
    Ok(MacdResult {
        macd_line: series.with_values(line)?,
        signal_line: series.with_values(sig)?,
        histogram: series.with_values(hist)?,
    })
}

/// Critical values of the constant-only Dickey-Fuller distribution
/// (1%, 5%, 10%), asymptotic.
pub const ADF_CRITICAL_VALUES: [f64; 3] = [-3.43, -2.86, -2.57];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdfReport {
    pub statistic: f64,
    pub lag_order: usize,
    pub n_obs: usize,
    pub reject_at_5pct: bool,
}

/// Schwert's rule `floor(12 (n / 100)^(1/4))`.
pub fn adf_lag_order(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

/// Augmented Dickey-Fuller regression with a constant:
/// `dy_t = a + g y_{t-1} + sum_{i=1}^k d_i dy_{t-i} + e_t`.
/// The statistic is the t-ratio of `g`.
pub fn adf_test(series: &TimeSeries) -> Result<AdfReport> {
    adf_values(series.values())
}

pub fn adf_values(y: &[f64]) -> Result<AdfReport> {
    let n = y.len();
    if n < 20 {
        return Err(TsaError::SeriesTooShort { len: n, min: 20 });
    }
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    // keep enough residual degrees of freedom on short series
    let mut k = adf_lag_order(n).min((n - 1) / 3);
    loop {
        let rows: Vec<Vec<f64>> = (k..dy.len())
            .map(|t| {
                let mut r = Vec::with_capacity(k + 2);
                r.push(1.0);
                r.push(y[t]);
                r.extend((1..=k).map(|i| dy[t - i]));
                r
            })
            .collect();
        let target = &dy[k..];
        if let Some(fit) = ols(&rows, target) {
            let se = fit.std_errors[1];
            let statistic = if se > 0.0 {
                fit.coefficients[1] / se
            } else if fit.coefficients[1] < 0.0 {
                f64::NEG_INFINITY
            } else {
                0.0
            };
            return Ok(AdfReport {
                statistic,
                lag_order: k,
                n_obs: target.len(),
                reject_at_5pct: statistic < ADF_CRITICAL_VALUES[1],
            });
        }
        if k == 0 {
            return Err(TsaError::ZeroVariance);
        }
        k -= 1;
    }
}
