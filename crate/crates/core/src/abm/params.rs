use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, LogNormal as LogNormalCdf};

use super::{AbmError, Result, AGE_BINS};

/// Stage duration in days: lognormal with the given mean and standard
/// deviation, rounded to a whole number of days (at least one).
/// `sd == 0` makes the duration deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Duration {
    pub mean: f64,
    pub sd: f64,
}

impl Duration {
    pub const fn new(mean: f64, sd: f64) -> Self {
        Self { mean, sd }
    }

    pub const fn fixed(days: f64) -> Self {
        Self {
            mean: days,
            sd: 0.0,
        }
    }

    fn log_params(&self) -> (f64, f64) {
        let s2 = (1.0 + (self.sd / self.mean).powi(2)).ln();
        (self.mean.ln() - 0.5 * s2, s2.sqrt())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let raw = if self.sd > 0.0 {
            let (mu, sigma) = self.log_params();
            LogNormal::new(mu, sigma)
                .expect("validated duration")
                .sample(rng)
        } else {
            self.mean
        };
        (raw.round() as u32).max(1)
    }

    /// Expected value of the rounded, floored-at-one duration.
    pub fn expected_days(&self) -> f64 {
        if self.sd <= 0.0 {
            return self.mean.round().max(1.0);
        }
        let (mu, sigma) = self.log_params();
        let d = LogNormalCdf::new(mu, sigma).expect("validated duration");
        let mut total = d.cdf(1.5);
        let mut k = 2.0;
        loop {
            let p = d.cdf(k + 0.5) - d.cdf(k - 0.5);
            total += k * p;
            if d.sf(k + 0.5) < 1e-12 || k > 10_000.0 {
                break;
            }
            k += 1.0;
        }
        total
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.mean > 0.0 && self.mean.is_finite() && self.sd >= 0.0 && self.sd.is_finite()) {
            return Err(AbmError::InvalidParams(format!(
                "duration `{name}` needs mean > 0 and sd >= 0"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Durations {
    pub exp2inf: Duration,
    pub inf2sym: Duration,
    pub sym2mild: Duration,
    pub sym2sev: Duration,
    pub sev2crit: Duration,
    pub crit2die: Duration,
    pub asym2rec: Duration,
    pub mild2rec: Duration,
    pub sev2rec: Duration,
    pub crit2rec: Duration,
}

impl Default for Durations {
    fn default() -> Self {
        Self {
            exp2inf: Duration::new(4.5, 1.5),
            inf2sym: Duration::new(1.1, 0.9),
            sym2mild: Duration::fixed(1.0),
            sym2sev: Duration::new(6.6, 4.9),
            sev2crit: Duration::new(1.5, 2.0),
            crit2die: Duration::new(10.7, 4.8),
            asym2rec: Duration::new(8.0, 2.0),
            mild2rec: Duration::new(8.0, 2.0),
            sev2rec: Duration::new(18.1, 6.3),
            crit2rec: Duration::new(18.1, 6.3),
        }
    }
}

impl Durations {
    /// Every duration fixed at `days`.
    pub fn all_fixed(days: f64) -> Self {
        let d = Duration::fixed(days);
        Self {
            exp2inf: d,
            inf2sym: d,
            sym2mild: d,
            sym2sev: d,
            sev2crit: d,
            crit2die: d,
            asym2rec: d,
            mild2rec: d,
            sev2rec: d,
            crit2rec: d,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, d) in [
            ("exp2inf", self.exp2inf),
            ("inf2sym", self.inf2sym),
            ("sym2mild", self.sym2mild),
            ("sym2sev", self.sym2sev),
            ("sev2crit", self.sev2crit),
            ("crit2die", self.crit2die),
            ("asym2rec", self.asym2rec),
            ("mild2rec", self.mild2rec),
            ("sev2rec", self.sev2rec),
            ("crit2rec", self.crit2rec),
        ] {
            d.validate(name)?;
        }
        Ok(())
    }
}

/// Age-specific branch probabilities, each conditional on reaching the
/// preceding stage (symptoms, then severe, then critical, then death).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgeProgression {
    pub p_sym: [f64; AGE_BINS],
    pub p_sev: [f64; AGE_BINS],
    pub p_crit: [f64; AGE_BINS],
    pub p_death: [f64; AGE_BINS],
    /// Skip the non-decreasing-in-age check on severe, critical and death.
    pub allow_non_monotone: bool,
}

impl Default for AgeProgression {
    fn default() -> Self {
        Self {
            p_sym: [0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.90],
            p_sev: [
                0.001, 0.003, 0.012, 0.032, 0.049, 0.102, 0.166, 0.243, 0.273, 0.273,
            ],
            p_crit: [
                0.05, 0.05, 0.05, 0.05, 0.063, 0.122, 0.274, 0.432, 0.709, 0.709,
            ],
            p_death: [0.25, 0.25, 0.28, 0.31, 0.45, 0.45, 0.45, 0.45, 0.48, 0.93],
            allow_non_monotone: false,
        }
    }
}

impl AgeProgression {
    fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_sym", &self.p_sym),
            ("p_sev", &self.p_sev),
            ("p_crit", &self.p_crit),
            ("p_death", &self.p_death),
        ] {
            if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(AbmError::InvalidParams(format!(
                    "{name} must lie in [0, 1]"
                )));
            }
            if name != "p_sym" && !self.allow_non_monotone && p.windows(2).any(|w| w[1] < w[0]) {
                return Err(AbmError::InvalidParams(format!(
                    "{name} must be non-decreasing in age"
                )));
            }
        }
        Ok(())
    }
}

/// Transmission multiplier per contact layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayerWeights {
    pub household: f64,
    pub school: f64,
    pub work: f64,
    pub community: f64,
}

impl Default for LayerWeights {
    fn default() -> Self {
        Self {
            household: 3.0,
            school: 0.6,
            work: 0.6,
            community: 0.3,
        }
    }
}

/// From `day` onward the transmissibility is multiplied by `multiplier`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaChange {
    pub day: u32,
    pub multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiseaseParams {
    /// Per-contact daily transmission probability scale.
    pub beta: f64,
    pub beta_schedule: Vec<BetaChange>,
    pub layer_weights: LayerWeights,
    pub progression: AgeProgression,
    pub durations: Durations,
    /// Relative odds that a symptomatic agent receives one of the day's tests.
    pub test_odds: f64,
    /// Agents placed in `E` on day 0.
    pub initial_exposed: usize,
    /// Susceptible agents moved to `E` every day from outside the population.
    pub daily_imports: usize,
    pub quarantine_days: u32,
    /// Overrides the mean infectious period derived from the durations.
    pub infectious_period: Option<f64>,
}

impl Default for DiseaseParams {
    fn default() -> Self {
        Self {
            beta: 0.016,
            beta_schedule: Vec::new(),
            layer_weights: LayerWeights::default(),
            progression: AgeProgression::default(),
            durations: Durations::default(),
            test_odds: 10.0,
            initial_exposed: 20,
            daily_imports: 0,
            quarantine_days: 14,
            infectious_period: None,
        }
    }
}

impl DiseaseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(AbmError::InvalidParams(
                "beta must be finite and non-negative".into(),
            ));
        }
        if self.beta_schedule.windows(2).any(|w| w[1].day <= w[0].day) {
            return Err(AbmError::InvalidParams(
                "beta schedule days must strictly increase".into(),
            ));
        }
        if self
            .beta_schedule
            .iter()
            .any(|c| !(c.multiplier >= 0.0 && c.multiplier.is_finite()))
        {
            return Err(AbmError::InvalidParams(
                "beta multipliers must be finite and non-negative".into(),
            ));
        }
        let w = &self.layer_weights;
        if [w.household, w.school, w.work, w.community]
            .iter()
            .any(|v| !(*v >= 0.0))
        {
            return Err(AbmError::InvalidParams(
                "layer weights must be non-negative".into(),
            ));
        }
        if !(self.test_odds >= 1.0 && self.test_odds.is_finite()) {
            return Err(AbmError::InvalidParams(
                "test odds must be at least 1".into(),
            ));
        }
        if let Some(f) = self.infectious_period {
            if !(f > 0.0) {
                return Err(AbmError::InvalidParams(
                    "infectious period must be positive".into(),
                ));
            }
        }
        self.progression.validate()?;
        self.durations.validate()
    }

    /// Product of the multipliers whose day has been reached.
    pub fn beta_multiplier(&self, day: u32) -> f64 {
        self.beta_schedule
            .iter()
            .filter(|c| c.day <= day)
            .map(|c| c.multiplier)
            .product()
    }

    /// Expected days an agent of `age_bin` spends infectious (from `I` or
    /// `A` until recovery or death), with durations rounded as in the
    /// simulation.
    pub fn expected_infectious_days(&self, age_bin: usize) -> f64 {
        let d = &self.durations;
        let p = &self.progression;
        let a = age_bin.min(AGE_BINS - 1);
        let crit = p.p_death[a] * d.crit2die.expected_days()
            + (1.0 - p.p_death[a]) * d.crit2rec.expected_days();
        let sev = p.p_crit[a] * (d.sev2crit.expected_days() + crit)
            + (1.0 - p.p_crit[a]) * d.sev2rec.expected_days();
        let sym = p.p_sev[a] * (d.sym2sev.expected_days() + sev)
            + (1.0 - p.p_sev[a]) * (d.sym2mild.expected_days() + d.mild2rec.expected_days());
        p.p_sym[a] * (d.inf2sym.expected_days() + sym)
            + (1.0 - p.p_sym[a]) * d.asym2rec.expected_days()
    }

    /// Mean infectious period `f` for a population with the given age
    /// histogram, unless overridden.
    pub fn infectious_period(&self, age_histogram: &[f64; AGE_BINS]) -> f64 {
        if let Some(f) = self.infectious_period {
            return f;
        }
        let total: f64 = age_histogram.iter().sum();
        (0..AGE_BINS)
            .map(|a| age_histogram[a] / total * self.expected_infectious_days(a))
            .sum()
    }
}
