//! Region configuration files and the data they point at.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use episim_core::abm::{synthesize_population, LayerConfig, Population, PopulationSpec, AGE_BINS};
use episim_core::calibrate::CalibrationConfig;
use episim_core::data::{extrapolate_backward, load_csv, Dataset, ExtrapolationConfig};
use episim_core::{DiseaseParams, Indicator, Statistic, TimeSeries};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationConfig {
    /// Number of simulated agents.
    pub size: usize,
    /// Real population divided by `size`.
    #[serde(default = "one")]
    pub scale_factor: f64,
    pub age_distribution: [f64; AGE_BINS],
    pub mean_household_size: f64,
    #[serde(default)]
    pub layers: LayerConfig,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectionSettings {
    pub horizon: usize,
    pub n_runs: usize,
    pub beta_multiplier: Option<f64>,
    pub infectious_period: Option<f64>,
}

impl Default for ProjectionSettings {
    fn default() -> Self {
        Self {
            horizon: 30,
            n_runs: 10,
            beta_multiplier: None,
            infectious_period: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub region: String,
    /// CSV path, relative to the config file's directory.
    pub dataset: PathBuf,
    /// Column name per indicator when it differs from the default.
    #[serde(default)]
    pub columns: BTreeMap<Indicator, String>,
    /// Restricts the dataset to this date range (inclusive).
    #[serde(default)]
    pub start_date: Option<NaiveDate>,
    #[serde(default)]
    pub end_date: Option<NaiveDate>,
    pub population: PopulationConfig,
    #[serde(default)]
    pub disease: DiseaseParams,
    #[serde(default)]
    pub calibration: CalibrationConfig,
    #[serde(default)]
    pub projection: ProjectionSettings,
    /// Fills days before the first New Tests observation.
    #[serde(default)]
    pub extrapolation: ExtrapolationConfig,
    #[serde(default)]
    pub seed: u64,
}

/// A parsed and validated config plus where it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub path: PathBuf,
    pub config: RegionConfig,
    pub sha256: String,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::data(format!("cannot read config {}: {e}", path.display())))?;
        let config: RegionConfig = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::data(format!("invalid config {}: {e}", path.display())))?;
        let loaded = Self {
            path: path.to_path_buf(),
            config,
            sha256: hex(&Sha256::digest(&bytes)),
        };
        loaded.validate()?;
        Ok(loaded)
    }

    pub fn dataset_path(&self) -> PathBuf {
        let dir = self.path.parent().unwrap_or(Path::new(""));
        dir.join(&self.config.dataset)
    }

    fn validate(&self) -> Result<()> {
        let c = &self.config;
        let dataset = self.dataset_path();
        if !dataset.is_file() {
            return Err(CliError::data(format!(
                "dataset not found: {}",
                dataset.display()
            )));
        }
        if c.population.size == 0 {
            return Err(CliError::data("population size must be positive"));
        }
        if !(c.population.scale_factor >= 1.0 && c.population.scale_factor.is_finite()) {
            return Err(CliError::data("scale factor must be at least 1"));
        }
        if let (Some(a), Some(b)) = (c.start_date, c.end_date) {
            if b < a {
                return Err(CliError::data("end_date precedes start_date"));
            }
        }
        c.disease.validate()?;
        Ok(())
    }

    pub fn population(&self) -> Result<Population> {
        let p = &self.config.population;
        Ok(synthesize_population(&PopulationSpec {
            size: p.size,
            age_distribution: p.age_distribution,
            mean_household_size: p.mean_household_size,
            layers: p.layers,
            seed: self.config.seed,
        })?)
    }

    pub fn column_map(&self) -> Vec<(Indicator, String)> {
        Indicator::ALL
            .into_iter()
            .map(|i| {
                let name = self
                    .config
                    .columns
                    .get(&i)
                    .cloned()
                    .unwrap_or_else(|| i.column_name().to_string());
                (i, name)
            })
            .collect()
    }

    /// Loads the indicators present in the dataset, clipped to the configured
    /// date range. Columns absent from the file are skipped.
    pub fn dataset(&self) -> Result<Dataset> {
        let path = self.dataset_path();
        let header = csv::Reader::from_path(&path)?.headers()?.clone();
        let map: Vec<_> = self
            .column_map()
            .into_iter()
            .filter(|(_, name)| header.iter().any(|h| h == name))
            .collect();
        let mut data = load_csv(&path, &map)?;
        let from = self
            .config
            .start_date
            .unwrap_or(data.start_date)
            .max(data.start_date);
        let mut clipped = BTreeMap::new();
        for (ind, s) in data.series {
            let lo = s
                .index_of(from)
                .unwrap_or(if s.start_date() > from { 0 } else { s.len() });
            let hi = match self.config.end_date {
                Some(to) if to < s.start_date() => 0,
                Some(to) => s.index_of(to).map_or(s.len(), |i| i + 1),
                None => s.len(),
            };
            if lo < hi {
                clipped.insert(ind, s.slice(lo, hi)?);
            }
        }
        data.series = clipped;
        data.start_date = from;
        Ok(data)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    Ok(hex(&Sha256::digest(&bytes)))
}

/// Model inputs aligned on simulation day 0 and in agent units.
#[derive(Debug, Clone)]
pub struct ModelInputs {
    pub start_date: NaiveDate,
    /// Tests per day, leading gap extrapolated.
    pub tests: Vec<f64>,
    /// Observed statistics, zero before their first report.
    pub observed: BTreeMap<Statistic, Vec<f64>>,
    pub scale: f64,
}

impl ModelInputs {
    pub fn n_days(&self) -> usize {
        self.tests.len()
    }

    pub fn date(&self, day: usize) -> NaiveDate {
        self.start_date + chrono::Duration::days(day as i64)
    }
}

/// Aligns the dataset on its first date and cuts every series at the
/// earliest last observation.
pub fn model_inputs(cfg: &LoadedConfig, data: &Dataset) -> Result<ModelInputs> {
    let tests = data.get(Indicator::NewTests).ok_or_else(|| {
        CliError::data(format!(
            "{} has no new_tests observations",
            cfg.dataset_path().display()
        ))
    })?;
    let gap = data.leading_gap(Indicator::NewTests).unwrap_or(0);
    let tests = if gap > 0 {
        log::info!(
            "extrapolating {gap} days of tests before {}",
            tests.start_date()
        );
        let ex = ExtrapolationConfig {
            gap_count: gap,
            ..cfg.config.extrapolation
        };
        extrapolate_backward(tests, &ex)?
    } else {
        tests.clone()
    };
    let mut end = tests.end_date();
    for s in data.series.values() {
        end = end.min(s.end_date());
    }
    let n_days = (end - data.start_date).num_days() + 1;
    if n_days <= 0 {
        return Err(CliError::data("indicators share no dates"));
    }
    let n_days = n_days as usize;
    let scale = cfg.config.population.scale_factor;
    let mut observed = BTreeMap::new();
    for (&ind, s) in &data.series {
        if let Some(stat) = Statistic::from_indicator(ind) {
            observed.insert(
                stat,
                aligned(s, data.start_date, n_days)
                    .iter()
                    .map(|v| v / scale)
                    .collect(),
            );
        }
    }
    Ok(ModelInputs {
        start_date: data.start_date,
        tests: tests.values()[..n_days].iter().map(|v| v / scale).collect(),
        observed,
        scale,
    })
}

fn aligned(s: &TimeSeries, start: NaiveDate, n_days: usize) -> Vec<f64> {
    let lead = (s.start_date() - start).num_days() as usize;
    (0..n_days)
        .map(|d| {
            if d < lead {
                0.0
            } else {
                s.values().get(d - lead).copied().unwrap_or(0.0)
            }
        })
        .collect()
}
