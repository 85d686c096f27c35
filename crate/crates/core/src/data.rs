//! Daily indicator series: CSV ingestion, gap handling, backward
//! extrapolation of missing leading values, Hodrick-Prescott decomposition
//! and centered moving-average smoothing.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use chrono::{Duration, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: unparseable date `{value}`")]
    UnparseableDate { row: usize, value: String },
    #[error("row {row}: unparseable value `{value}` in column `{column}`")]
    UnparseableValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: negative value {value} in column `{column}`")]
    NegativeValue {
        row: usize,
        column: String,
        value: f64,
    },
    #[error("row {row}: duplicate date {date}")]
    DuplicateDate { row: usize, date: NaiveDate },
    #[error("column `{0}` has no observations")]
    NoObservations(String),
    #[error("series is empty")]
    Empty,
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("need at least {needed} known values, have {available}")]
    InsufficientHistory { needed: usize, available: usize },
    #[error("series of length {len} is too short (minimum {min})")]
    SeriesTooShort { len: usize, min: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = DataError> = std::result::Result<T, E>;

/// Epidemiological indicator carried by a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Indicator {
    NewTests,
    NewDiagnoses,
    NewDeaths,
    NumCritical,
}

impl Indicator {
    pub const ALL: [Indicator; 4] = [
        Indicator::NewTests,
        Indicator::NewDiagnoses,
        Indicator::NewDeaths,
        Indicator::NumCritical,
    ];

    /// Default CSV column name.
    pub fn column_name(self) -> &'static str {
        match self {
            Indicator::NewTests => "new_tests",
            Indicator::NewDiagnoses => "new_diagnoses",
            Indicator::NewDeaths => "new_deaths",
            Indicator::NumCritical => "num_critical",
        }
    }
}

impl fmt::Display for Indicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column_name())
    }
}

impl FromStr for Indicator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Indicator::ALL
            .into_iter()
            .find(|i| i.column_name() == s)
            .ok_or_else(|| format!("unknown indicator `{s}`"))
    }
}

/// Consecutive daily observations of one indicator.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    start_date: NaiveDate,
    values: Vec<f64>,
    indicator: Indicator,
    /// Indices whose value was interpolated over a gap in the source.
    gaps: Vec<usize>,
}

impl TimeSeries {
    pub fn new(start_date: NaiveDate, values: Vec<f64>, indicator: Indicator) -> Result<Self> {
        if values.is_empty() {
            return Err(DataError::Empty);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonFinite(i));
        }
        Ok(Self {
            start_date,
            values,
            indicator,
            gaps: Vec::new(),
        })
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    pub fn end_date(&self) -> NaiveDate {
        self.date_at(self.values.len() - 1)
    }

    pub fn date_at(&self, index: usize) -> NaiveDate {
        self.start_date + Duration::days(index as i64)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn indicator(&self) -> Indicator {
        self.indicator
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn gaps(&self) -> &[usize] {
        &self.gaps
    }

    /// Same dates and indicator, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        let mut ts = TimeSeries::new(self.start_date, values, self.indicator)?;
        ts.gaps = self
            .gaps
            .iter()
            .copied()
            .filter(|&g| g < ts.len())
            .collect();
        Ok(ts)
    }

    /// Sub-series over `[from, to)`.
    pub fn slice(&self, from: usize, to: usize) -> Result<Self> {
        let to = to.min(self.len());
        if from >= to {
            return Err(DataError::Empty);
        }
        let mut ts = TimeSeries::new(
            self.date_at(from),
            self.values[from..to].to_vec(),
            self.indicator,
        )?;
        ts.gaps = self
            .gaps
            .iter()
            .filter(|&&g| g >= from && g < to)
            .map(|g| g - from)
            .collect();
        Ok(ts)
    }

    /// Index of `date`, if it falls inside the series.
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let d = (date - self.start_date).num_days();
        (d >= 0 && (d as usize) < self.len()).then_some(d as usize)
    }
}

/// A set of series loaded from one file, sharing a calendar.
#[derive(Debug, Clone)]
pub struct Dataset {
    /// First date present in the file.
    pub start_date: NaiveDate,
    pub series: BTreeMap<Indicator, TimeSeries>,
}

impl Dataset {
    pub fn get(&self, indicator: Indicator) -> Option<&TimeSeries> {
        self.series.get(&indicator)
    }

    /// Days between the file's first date and the first observation of
    /// `indicator` (the leading gap a backward extrapolation has to fill).
    pub fn leading_gap(&self, indicator: Indicator) -> Option<usize> {
        self.series
            .get(&indicator)
            .map(|s| (s.start_date() - self.start_date).num_days() as usize)
    }
}

/// Reads a CSV with a `date` column (ISO-8601) and one column per indicator.
///
/// Each indicator's series runs from its first to its last non-empty cell.
/// Interior gaps (missing dates or empty cells) are filled by linear
/// interpolation and reported through [`TimeSeries::gaps`].
pub fn load_csv(path: &Path, column_map: &[(Indicator, String)]) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file, column_map)
}

pub fn read_csv<R: Read>(reader: R, column_map: &[(Indicator, String)]) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))
    };
    let date_col = find("date")?;
    let cols = column_map
        .iter()
        .map(|(ind, name)| find(name).map(|c| (*ind, name.as_str(), c)))
        .collect::<Result<Vec<_>>>()?;

    // (date, row, one optional value per mapped column)
    let mut rows: Vec<(NaiveDate, usize, Vec<Option<f64>>)> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let raw_date = record.get(date_col).unwrap_or("");
        let date = NaiveDate::parse_from_str(raw_date, DATE_FORMAT).map_err(|_| {
            DataError::UnparseableDate {
                row,
                value: raw_date.to_string(),
            }
        })?;
        let mut values = Vec::with_capacity(cols.len());
        for &(_, name, c) in &cols {
            let cell = record.get(c).unwrap_or("");
            if cell.is_empty() {
                values.push(None);
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| DataError::UnparseableValue {
                row,
                column: name.to_string(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(DataError::UnparseableValue {
                    row,
                    column: name.to_string(),
                    value: cell.to_string(),
                });
            }
            if v < 0.0 {
                return Err(DataError::NegativeValue {
                    row,
                    column: name.to_string(),
                    value: v,
                });
            }
            values.push(Some(v));
        }
        rows.push((date, row, values));
    }
    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(DataError::DuplicateDate {
            row: w[1].1.max(w[0].1),
            date: w[1].0,
        });
    }
    let start_date = rows.first().ok_or(DataError::Empty)?.0;

    let mut series = BTreeMap::new();
    for (k, &(indicator, name, _)) in cols.iter().enumerate() {
        let obs: Vec<(i64, f64)> = rows
            .iter()
            .filter_map(|(d, _, vals)| vals[k].map(|v| ((*d - start_date).num_days(), v)))
            .collect();
        let (first, last) = match (obs.first(), obs.last()) {
            (Some(f), Some(l)) => (f.0, l.0),
            _ => return Err(DataError::NoObservations(name.to_string())),
        };
        let len = (last - first + 1) as usize;
        let mut values = vec![f64::NAN; len];
        for &(d, v) in &obs {
            values[(d - first) as usize] = v;
        }
        let gaps = interpolate_gaps(&mut values);
        let mut ts = TimeSeries::new(start_date + Duration::days(first), values, indicator)?;
        ts.gaps = gaps;
        series.insert(indicator, ts);
    }
    Ok(Dataset { start_date, series })
}

/// Linearly interpolates NaN runs bounded by known values on both sides and
/// returns the filled indices.
fn interpolate_gaps(values: &mut [f64]) -> Vec<usize> {
    let mut gaps = Vec::new();
    let mut i = 0;
    while i < values.len() {
        if !values[i].is_nan() {
            i += 1;
            continue;
        }
        let start = i;
        while values[i].is_nan() {
            i += 1;
        }
        let (lo, hi) = (values[start - 1], values[i]);
        let span = (i - start + 1) as f64;
        for (k, j) in (start..i).enumerate() {
            values[j] = lo + (hi - lo) * (k + 1) as f64 / span;
            gaps.push(j);
        }
    }
    gaps
}

/// Writes series as a `date,<indicator>...` CSV. Series may have different
/// spans; cells outside a series' span are left empty.
pub fn write_csv<W: std::io::Write>(writer: W, series: &[&TimeSeries]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let start = series
        .iter()
        .map(|s| s.start_date())
        .min()
        .ok_or(DataError::Empty)?;
    let end = series
        .iter()
        .map(|s| s.end_date())
        .max()
        .ok_or(DataError::Empty)?;
    let mut header = vec!["date".to_string()];
    header.extend(series.iter().map(|s| s.indicator().to_string()));
    wtr.write_record(&header)?;
    let mut date = start;
    while date <= end {
        let mut rec = vec![date.format(DATE_FORMAT).to_string()];
        for s in series {
            rec.push(
                s.index_of(date)
                    .map(|i| s.values()[i].to_string())
                    .unwrap_or_default(),
            );
        }
        wtr.write_record(&rec)?;
        date += Duration::days(1);
    }
    wtr.flush().map_err(|e| DataError::Csv(e.into()))?;
    Ok(())
}

/// Settings for [`extrapolate_backward`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtrapolationConfig {
    /// Number of following days averaged for each filled value.
    pub window: usize,
    /// Per-step growth factor applied as `growth^n`.
    pub growth: f64,
    /// Number of days to fill before the first known value.
    pub gap_count: usize,
    /// Noise standard deviation is `value / noise_divisor`; infinity disables noise.
    pub noise_divisor: f64,
    pub rng_seed: u64,
}

impl Default for ExtrapolationConfig {
    fn default() -> Self {
        Self {
            window: 7,
            growth: 1.03,
            gap_count: 0,
            noise_divisor: 3.0,
            rng_seed: 0,
        }
    }
}

/// Extends `series` backward by `cfg.gap_count` days.
///
/// Going backward one day at a time, step `n` (starting at 1) fills the day
/// before the current first value with the mean of the `window` values that
/// follow it, multiplied by `growth^n`, plus Gaussian noise with standard
/// deviation `value / noise_divisor`. Filled values are clamped at zero.
pub fn extrapolate_backward(series: &TimeSeries, cfg: &ExtrapolationConfig) -> Result<TimeSeries> {
    if cfg.window == 0 {
        return Err(DataError::InvalidConfig("window must be at least 1".into()));
    }
    if !(cfg.growth > 0.0) {
        return Err(DataError::InvalidConfig("growth must be positive".into()));
    }
    if !(cfg.noise_divisor > 0.0) {
        return Err(DataError::InvalidConfig(
            "noise divisor must be positive".into(),
        ));
    }
    if series.len() < cfg.window {
        return Err(DataError::InsufficientHistory {
            needed: cfg.window,
            available: series.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let l = cfg.gap_count;
    // filled[k] is the value k+1 days before the first known day
    let mut filled: Vec<f64> = Vec::with_capacity(l);
    let known = series.values();
    let value_at = |filled: &[f64], offset: usize| -> f64 {
        // offset days after the day being filled (offset >= 1)
        let n = filled.len();
        if offset <= n {
            filled[n - offset]
        } else {
            known[offset - n - 1]
        }
    };
    for n in 1..=l {
        let avg = (1..=cfg.window).map(|j| value_at(&filled, j)).sum::<f64>() / cfg.window as f64;
        let det = avg * cfg.growth.powi(n as i32);
        let sd = if cfg.noise_divisor.is_infinite() {
            0.0
        } else {
            det / cfg.noise_divisor
        };
        let noise = if sd > 0.0 {
            Normal::new(0.0, sd)
                .expect("finite non-negative sd")
                .sample(&mut rng)
        } else {
            0.0
        };
        filled.push((det + noise).max(0.0));
    }
    let mut values: Vec<f64> = filled.into_iter().rev().collect();
    values.extend_from_slice(known);
    let mut ts = TimeSeries::new(
        series.start_date() - Duration::days(l as i64),
        values,
        series.indicator(),
    )?;
    ts.gaps = series.gaps().iter().map(|g| g + l).collect();
    Ok(ts)
}

/// Trend plus residual split of a series.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub trend: Vec<f64>,
    /// Seasonal plus noise part, `source - trend`.
    pub residual: Vec<f64>,
}

pub const DEFAULT_HP_LAMBDA: f64 = 1e4;

/// Hodrick-Prescott filter: the trend minimises
/// `sum (x - T)^2 + lambda * sum (second difference of T)^2`,
/// obtained from the pentadiagonal system `(I + lambda K'K) T = x`.
pub fn hp_filter(series: &TimeSeries, lambda: f64) -> Result<Decomposition> {
    let x = series.values();
    let n = x.len();
    if n < 3 {
        return Err(DataError::SeriesTooShort { len: n, min: 3 });
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(DataError::InvalidConfig(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    // Bands of the symmetric matrix: diagonal, first and second superdiagonal.
    let mut d = vec![1.0; n];
    let mut e1 = vec![0.0; n];
    let mut e2 = vec![0.0; n];
    for r in 0..n - 2 {
        d[r] += lambda;
        d[r + 1] += 4.0 * lambda;
        d[r + 2] += lambda;
        e1[r] -= 2.0 * lambda;
        e1[r + 1] -= 2.0 * lambda;
        e2[r] += lambda;
    }
    let trend = solve_pentadiagonal_spd(&d, &e1, &e2, x);
    let residual = x.iter().zip(&trend).map(|(a, t)| a - t).collect();
    Ok(Decomposition { trend, residual })
}

/// LDL' solve of a symmetric positive definite pentadiagonal system.
fn solve_pentadiagonal_spd(a: &[f64], b: &[f64], c: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut dd = vec![0.0; n];
    let mut l1 = vec![0.0; n];
    let mut l2 = vec![0.0; n];
    for i in 0..n {
        let mut di = a[i];
        if i >= 1 {
            di -= l1[i - 1] * l1[i - 1] * dd[i - 1];
        }
        if i >= 2 {
            di -= l2[i - 2] * l2[i - 2] * dd[i - 2];
        }
        dd[i] = di;
        if i + 1 < n {
            let mut v = b[i];
            if i >= 1 {
                v -= l2[i - 1] * l1[i - 1] * dd[i - 1];
            }
            l1[i] = v / di;
        }
        if i + 2 < n {
            l2[i] = c[i] / di;
        }
    }
    let mut z = rhs.to_vec();
    for i in 0..n {
        if i >= 1 {
            z[i] -= l1[i - 1] * z[i - 1];
        }
        if i >= 2 {
            z[i] -= l2[i - 2] * z[i - 2];
        }
    }
    for i in 0..n {
        z[i] /= dd[i];
    }
    for i in (0..n).rev() {
        if i + 1 < n {
            z[i] -= l1[i] * z[i + 1];
        }
        if i + 2 < n {
            z[i] -= l2[i] * z[i + 2];
        }
    }
    z
}

pub const DEFAULT_SMOOTHING_WINDOW: usize = 7;

/// Centered moving average over an odd `window`. Near the ends the window
/// shrinks symmetrically so it stays centered; the length is preserved.
pub fn smooth(series: &TimeSeries, window: usize) -> Result<TimeSeries> {
    let values = smooth_values(series.values(), window)?;
    series.with_values(values)
}

/// Slice form of [`smooth`].
pub fn smooth_values(x: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 || window % 2 == 0 {
        return Err(DataError::InvalidConfig(format!(
            "smoothing window must be odd and positive, got {window}"
        )));
    }
    let half = window / 2;
    let n = x.len();
    Ok((0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            let centre = x[i];
            // averaging deviations from the centre keeps constants exact
            let dev: f64 = x[i - h..=i + h].iter().map(|v| v - centre).sum();
            centre + dev / (2 * h + 1) as f64
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, DATE_FORMAT).unwrap()
    }

    fn ts(values: Vec<f64>) -> TimeSeries {
        TimeSeries::new(date("2020-03-01"), values, Indicator::NewTests).unwrap()
    }

    fn diag_map() -> Vec<(Indicator, String)> {
        vec![(Indicator::NewDiagnoses, "new_diagnoses".into())]
    }

    #[test]
    fn load_reads_rows_through() {
        let csv = "date,new_diagnoses\n2020-03-01,1\n2020-03-02,2\n2020-03-03,3\n";
        let ds = read_csv(csv.as_bytes(), &diag_map()).unwrap();
        let s = ds.get(Indicator::NewDiagnoses).unwrap();
        assert_eq!(s.start_date(), date("2020-03-01"));
        assert_eq!(s.values(), &[1.0, 2.0, 3.0]);
        assert!(s.gaps().is_empty());
    }

    #[test]
    fn load_sorts_rows_and_flags_missing_dates() {
        let csv = "date,new_diagnoses\n2020-03-03,3\n2020-03-01,1\n";
        let ds = read_csv(csv.as_bytes(), &diag_map()).unwrap();
        let s = ds.get(Indicator::NewDiagnoses).unwrap();
        assert_eq!(s.values(), &[1.0, 2.0, 3.0]);
        assert_eq!(s.gaps(), &[1]);
    }

    #[test]
    fn load_rejects_negative_values_with_row() {
        let csv = "date,new_diagnoses\n2020-03-01,1\n2020-03-02,-5\n";
        match read_csv(csv.as_bytes(), &diag_map()) {
            Err(DataError::NegativeValue { row, value, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(value, -5.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn load_reports_missing_column_and_bad_date() {
        let csv = "date,new_tests\n2020-03-01,1\n";
        assert!(matches!(
            read_csv(csv.as_bytes(), &diag_map()),
            Err(DataError::MissingColumn(c)) if c == "new_diagnoses"
        ));
        let csv = "date,new_diagnoses\n2020-03-01,1\n03/02/2020,2\n";
        assert!(matches!(
            read_csv(csv.as_bytes(), &diag_map()),
            Err(DataError::UnparseableDate { row: 2, .. })
        ));
    }

    #[test]
    fn leading_empty_cells_start_the_series_later() {
        let csv = "date,new_tests,new_diagnoses\n\
                   2020-03-01,,1\n2020-03-02,,2\n2020-03-03,10,3\n2020-03-04,12,4\n";
        let map = vec![
            (Indicator::NewTests, "new_tests".to_string()),
            (Indicator::NewDiagnoses, "new_diagnoses".to_string()),
        ];
        let ds = read_csv(csv.as_bytes(), &map).unwrap();
        assert_eq!(ds.leading_gap(Indicator::NewTests), Some(2));
        assert_eq!(ds.get(Indicator::NewTests).unwrap().values(), &[10.0, 12.0]);
    }

    #[test]
    fn csv_round_trip() {
        let a = ts(vec![1.0, 2.5, 3.0]);
        let mut buf = Vec::new();
        write_csv(&mut buf, &[&a]).unwrap();
        let map = vec![(Indicator::NewTests, "new_tests".to_string())];
        let back = read_csv(buf.as_slice(), &map).unwrap();
        assert_eq!(back.get(Indicator::NewTests).unwrap(), &a);
    }

    fn no_noise(gap_count: usize, growth: f64) -> ExtrapolationConfig {
        ExtrapolationConfig {
            window: 7,
            growth,
            gap_count,
            noise_divisor: f64::INFINITY,
            rng_seed: 1,
        }
    }

    #[test]
    fn extrapolating_constants_without_growth_repeats_them() {
        let out = extrapolate_backward(&ts(vec![100.0; 14]), &no_noise(3, 1.0)).unwrap();
        assert_eq!(out.len(), 17);
        assert_eq!(&out.values()[..3], &[100.0, 100.0, 100.0]);
        assert_eq!(out.start_date(), date("2020-02-27"));
    }

    #[test]
    fn extrapolation_hand_unrolled() {
        // Step 1: mean of the seven known values (100) times 1.03^1.
        let out = extrapolate_backward(&ts(vec![100.0; 14]), &no_noise(1, 1.03)).unwrap();
        assert!((out.values()[0] - 103.0).abs() < 1e-12);
        // Step 2 averages the filled 103 with six known 100s, times 1.03^2.
        let out = extrapolate_backward(&ts(vec![100.0; 14]), &no_noise(2, 1.03)).unwrap();
        let step2 = (103.0 + 600.0) / 7.0 * 1.03f64.powi(2);
        assert!((out.values()[0] - step2).abs() < 1e-9);
        assert!((out.values()[1] - 103.0).abs() < 1e-12);
    }

    #[test]
    fn extrapolation_is_seed_deterministic_and_non_negative() {
        let cfg = ExtrapolationConfig {
            gap_count: 30,
            noise_divisor: 0.5,
            rng_seed: 42,
            ..Default::default()
        };
        let src = ts((0..20).map(|i| 10.0 + i as f64).collect());
        let a = extrapolate_backward(&src, &cfg).unwrap();
        let b = extrapolate_backward(&src, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn extrapolation_needs_a_full_window() {
        let err = extrapolate_backward(&ts(vec![1.0; 5]), &no_noise(1, 1.0)).unwrap_err();
        assert!(matches!(
            err,
            DataError::InsufficientHistory {
                needed: 7,
                available: 5
            }
        ));
    }

    #[test]
    fn hp_leaves_lines_and_constants_alone() {
        let line = ts((0..50).map(|n| 2.0 * n as f64 + 1.0).collect());
        for lambda in [1.0, 1e4, 1e7] {
            let d = hp_filter(&line, lambda).unwrap();
            // conditioning grows roughly like lambda n^4
            let tol = 1e-12 * lambda.max(1e4);
            for (t, x) in d.trend.iter().zip(line.values()) {
                assert!((t - x).abs() < tol, "lambda {lambda}: {t} vs {x}");
            }
        }
        let c = hp_filter(&ts(vec![5.0; 20]), 1e4).unwrap();
        assert!(c.residual.iter().all(|r| r.abs() < 1e-9));
    }

    #[test]
    fn hp_rejects_short_series() {
        assert!(matches!(
            hp_filter(&ts(vec![1.0, 2.0]), 1e4),
            Err(DataError::SeriesTooShort { len: 2, min: 3 })
        ));
    }

    #[test]
    fn smoothing_examples() {
        let x = ts(vec![3.0, 1.0, 4.0, 1.0, 5.0]);
        assert_eq!(smooth(&x, 1).unwrap(), x);
        let s = smooth_values(&[0.0, 0.0, 7.0, 0.0, 0.0], 7).unwrap();
        assert!((s[2] - 7.0 / 5.0).abs() < 1e-15);
        assert_eq!(s[0], 0.0);
        assert!((s[1] - 7.0 / 3.0).abs() < 1e-15);
        let c = smooth_values(&[0.1; 30], 7).unwrap();
        assert!(c.iter().all(|&v| v == 0.1));
        assert!(smooth_values(&[1.0], 4).is_err());
    }
}
