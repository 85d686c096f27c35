//! Sequential calibration over consecutive windows.
//!
//! The first window recovers `(E0, beta, day_1, change_1, test_odds)`. Every
//! later window freezes what came before and recovers one more change of the
//! transmission multiplier, `(day_i, change_i)`, with `day_i` inside the
//! window. Each objective evaluation simulates from day 0 with a fixed set of
//! seeds and scores the misfit on the current window only.

use serde::{Deserialize, Serialize};

use super::misfit::{misfit, normalizer, simulated_set, MisfitSpec, SeriesSet};
use super::tpe::{optimize_batched, random_search, Dimension, SearchSpace, TpeConfig, TrialStore};
use super::{CalibrateError, Result};
use crate::abm::{run_ensemble, BetaChange, DiseaseParams, Population, Statistic};
use crate::data::DEFAULT_SMOOTHING_WINDOW;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationBounds {
    pub initial_exposed: (i64, i64),
    pub beta: (f64, f64),
    pub beta_change: (f64, f64),
    pub test_odds: (f64, f64),
}

impl Default for CalibrationBounds {
    fn default() -> Self {
        Self {
            initial_exposed: (1, 200),
            beta: (0.002, 0.05),
            beta_change: (0.05, 2.0),
            test_odds: (1.0, 50.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationConfig {
    pub window_length: usize,
    /// Objective evaluations per window, random start included.
    pub trials_per_window: usize,
    /// Simulations averaged per evaluation.
    pub ensemble_size: usize,
    /// Statistics compared and their weights.
    pub statistics: Vec<(Statistic, f64)>,
    pub smoothing: usize,
    pub bounds: CalibrationBounds,
    pub tpe: TpeConfig,
    /// Objective evaluations in flight at once.
    pub batch: usize,
    pub seed: u64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            window_length: 30,
            trials_per_window: 300,
            ensemble_size: 3,
            statistics: vec![(Statistic::NewDiagnoses, 1.0), (Statistic::NewDeaths, 1.0)],
            smoothing: DEFAULT_SMOOTHING_WINDOW,
            bounds: CalibrationBounds::default(),
            tpe: TpeConfig::default(),
            batch: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowResult {
    /// Half-open day range `[start, end)`.
    pub start: usize,
    pub end: usize,
    pub names: Vec<String>,
    pub store: TrialStore,
    pub best: Vec<f64>,
    pub best_misfit: f64,
    /// Statistics that entered the misfit for this window.
    pub statistics: Vec<Statistic>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub windows: Vec<WindowResult>,
    /// Base parameters with every window's best values applied.
    pub params: DiseaseParams,
}

impl CalibrationResult {
    pub fn schedule(&self) -> &[BetaChange] {
        &self.params.beta_schedule
    }
}

/// Shortest trailing window kept on its own; shorter tails join the previous window.
pub const MIN_TAIL_WINDOW: usize = 7;

/// Contiguous windows `[0, L), [L, 2L), ...`; the last may be shorter.
pub fn split_windows(n_days: usize, length: usize) -> Vec<(usize, usize)> {
    if length == 0 {
        return Vec::new();
    }
    let mut w: Vec<(usize, usize)> = (0..n_days)
        .step_by(length)
        .map(|s| (s, (s + length).min(n_days)))
        .collect();
    if w.len() > 1 && w[w.len() - 1].1 - w[w.len() - 1].0 < MIN_TAIL_WINDOW.min(length) {
        let tail = w.pop().unwrap();
        w.last_mut().unwrap().1 = tail.1;
    }
    w
}

fn first_window_space(b: &CalibrationBounds, end: usize) -> Result<SearchSpace> {
    SearchSpace::new(vec![
        Dimension::integer("initial_exposed", b.initial_exposed.0, b.initial_exposed.1),
        Dimension::continuous("beta", b.beta.0, b.beta.1),
        Dimension::integer("beta_day_1", 0, end as i64 - 1),
        Dimension::continuous("beta_change_1", b.beta_change.0, b.beta_change.1),
        Dimension::continuous("test_odds", b.test_odds.0, b.test_odds.1),
    ])
}

fn later_window_space(
    b: &CalibrationBounds,
    i: usize,
    start: usize,
    end: usize,
) -> Result<SearchSpace> {
    SearchSpace::new(vec![
        Dimension::integer(&format!("beta_day_{}", i + 1), start as i64, end as i64 - 1),
        Dimension::continuous(
            &format!("beta_change_{}", i + 1),
            b.beta_change.0,
            b.beta_change.1,
        ),
    ])
}

fn apply_first(base: &DiseaseParams, q: &[f64]) -> DiseaseParams {
    let mut p = base.clone();
    p.initial_exposed = q[0] as usize;
    p.beta = q[1];
    p.beta_schedule = vec![BetaChange {
        day: q[2] as u32,
        multiplier: q[3],
    }];
    p.test_odds = q[4];
    p
}

fn apply_later(base: &DiseaseParams, q: &[f64]) -> DiseaseParams {
    let mut p = base.clone();
    p.beta_schedule.push(BetaChange {
        day: q[0] as u32,
        multiplier: q[1],
    });
    p
}

/// Calibrates `base` against `observed` (daily series from simulation day 0)
/// with `tests[t]` tests on day `t`.
pub fn calibrate_windows(
    observed: &SeriesSet,
    tests: &[f64],
    template: &Population,
    base: &DiseaseParams,
    cfg: &CalibrationConfig,
) -> Result<CalibrationResult> {
    if cfg.window_length == 0 || cfg.trials_per_window == 0 || cfg.ensemble_size == 0 {
        return Err(CalibrateError::InvalidConfig(
            "window length, trials per window and ensemble size must be positive".into(),
        ));
    }
    if cfg.statistics.is_empty() {
        return Err(CalibrateError::InvalidConfig(
            "no statistics selected".into(),
        ));
    }
    let mut n_days = usize::MAX;
    for &(s, _) in &cfg.statistics {
        let obs = observed
            .get(&s)
            .ok_or(CalibrateError::MissingStatistic(s))?;
        n_days = n_days.min(obs.len());
    }
    if n_days == 0 {
        return Err(CalibrateError::WindowWithoutData(0));
    }
    if tests.len() < n_days {
        return Err(CalibrateError::WindowMismatch {
            needed: n_days,
            available: tests.len(),
        });
    }

    let half = cfg.smoothing / 2;
    let mut params = base.clone();
    params.beta_schedule.clear();
    let mut windows = Vec::new();
    for (i, (start, end)) in split_windows(n_days, cfg.window_length)
        .into_iter()
        .enumerate()
    {
        // simulate a little past the window so edge smoothing sees the same days on both sides
        let sim_len = (end + half).min(n_days);
        let observed_trunc: SeriesSet = cfg
            .statistics
            .iter()
            .map(|&(s, _)| (s, observed[&s][..sim_len].to_vec()))
            .collect();
        let mut spec = MisfitSpec {
            statistics: Vec::new(),
            window: (start, end),
            smoothing: cfg.smoothing,
        };
        for &(s, w) in &cfg.statistics {
            let probe = MisfitSpec {
                statistics: vec![(s, w)],
                ..spec.clone()
            };
            if normalizer(&observed_trunc[&s], &probe)? > 0.0 {
                spec.statistics.push((s, w));
            } else {
                log::warn!("window {} has no {s} data; statistic skipped", i + 1);
            }
        }
        if spec.statistics.is_empty() {
            return Err(CalibrateError::WindowWithoutData(i));
        }
        spec.validate()?;

        let space = if i == 0 {
            first_window_space(&cfg.bounds, end)?
        } else {
            later_window_space(&cfg.bounds, i, start, end)?
        };
        let frozen = params.clone();
        let objective = |q: &[f64]| -> f64 {
            let candidate = if i == 0 {
                apply_first(&frozen, q)
            } else {
                apply_later(&frozen, q)
            };
            match run_ensemble(
                template,
                &candidate,
                sim_len,
                tests,
                cfg.ensemble_size,
                cfg.seed,
            ) {
                Ok(runs) => misfit(&observed_trunc, &simulated_set(&runs, &spec), &spec)
                    .unwrap_or_else(|e| {
                        log::warn!("misfit failed: {e}");
                        f64::INFINITY
                    }),
                Err(e) => {
                    log::warn!("simulation failed: {e}");
                    f64::INFINITY
                }
            }
        };
        let tpe_seed = cfg.tpe.seed.wrapping_add(cfg.seed).wrapping_add(i as u64);
        let store = if cfg.trials_per_window <= cfg.tpe.n_init {
            random_search(objective, &space, cfg.trials_per_window, tpe_seed)
        } else {
            let tpe = TpeConfig {
                max_iter: cfg.trials_per_window - cfg.tpe.n_init,
                seed: tpe_seed,
                ..cfg.tpe
            };
            optimize_batched(objective, &space, &tpe, cfg.batch)?
        };
        let best = store.best().expect("at least one trial").clone();
        log::info!(
            "window {} [{start}, {end}): best misfit {:.4} at {:?}",
            i + 1,
            best.value,
            best.params
        );
        params = if i == 0 {
            apply_first(&params, &best.params)
        } else {
            apply_later(&params, &best.params)
        };
        windows.push(WindowResult {
            start,
            end,
            names: space.dims().iter().map(|d| d.name.clone()).collect(),
            best: best.params,
            best_misfit: best.value,
            statistics: spec.statistics.iter().map(|&(s, _)| s).collect(),
            store,
        });
    }
    Ok(CalibrationResult { windows, params })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abm::{ensemble_mean, run_ensemble, synthesize_population, PopulationSpec};

    #[test]
    fn windows_are_contiguous() {
        assert_eq!(split_windows(67, 30), vec![(0, 30), (30, 60), (60, 67)]);
        assert_eq!(split_windows(65, 30), vec![(0, 30), (30, 65)]);
        assert_eq!(split_windows(5, 30), vec![(0, 5)]);
        assert_eq!(split_windows(60, 30), vec![(0, 30), (30, 60)]);
        assert!(split_windows(0, 30).is_empty());
        for n in 1..200 {
            let w = split_windows(n, 30);
            assert_eq!(w[0].0, 0);
            assert_eq!(w.last().unwrap().1, n);
            assert!(w.windows(2).all(|p| p[0].1 == p[1].0));
        }
    }

    fn small_case() -> (Population, DiseaseParams, SeriesSet, Vec<f64>) {
        let pop = synthesize_population(&PopulationSpec {
            size: 400,
            age_distribution: [0.1; 10],
            mean_household_size: 3.0,
            layers: Default::default(),
            seed: 4,
        })
        .unwrap();
        let params = DiseaseParams {
            beta: 0.03,
            initial_exposed: 30,
            ..Default::default()
        };
        let tests = vec![30.0; 40];
        let runs = run_ensemble(&pop, &params, 40, &tests, 3, 99).unwrap();
        let observed: SeriesSet = [(
            Statistic::NewDiagnoses,
            ensemble_mean(&runs, Statistic::NewDiagnoses),
        )]
        .into_iter()
        .collect();
        (pop, params, observed, tests)
    }

    #[test]
    fn single_trial_budget_is_the_random_trial() {
        let (pop, params, observed, tests) = small_case();
        let cfg = CalibrationConfig {
            window_length: 40,
            trials_per_window: 1,
            statistics: vec![(Statistic::NewDiagnoses, 1.0)],
            ..Default::default()
        };
        let res = calibrate_windows(&observed, &tests, &pop, &params, &cfg).unwrap();
        assert_eq!(res.windows.len(), 1);
        let w = &res.windows[0];
        assert_eq!(w.store.len(), 1);
        assert_eq!(w.best, w.store.trials()[0].params);
        let space = first_window_space(&cfg.bounds, 40).unwrap();
        let lone = random_search(|_| 0.0, &space, 1, cfg.tpe.seed.wrapping_add(cfg.seed));
        assert_eq!(lone.trials()[0].params, w.best);
        assert_eq!(res.params.beta, w.best[1]);
    }

    #[test]
    fn schedule_days_stay_in_their_windows() {
        let (pop, params, observed, tests) = small_case();
        let cfg = CalibrationConfig {
            window_length: 15,
            trials_per_window: 12,
            ensemble_size: 1,
            statistics: vec![(Statistic::NewDiagnoses, 1.0)],
            ..Default::default()
        };
        let res = calibrate_windows(&observed, &tests, &pop, &params, &cfg).unwrap();
        assert_eq!(res.windows.len(), 3);
        assert_eq!(res.schedule().len(), 3);
        for (w, c) in res.windows.iter().zip(res.schedule()).skip(1) {
            assert!((w.start..w.end).contains(&(c.day as usize)));
        }
        for w in &res.windows {
            let curve = w.store.best_so_far();
            assert!(curve.windows(2).all(|p| p[1] <= p[0]));
        }
    }

    #[test]
    fn window_without_data_is_an_error() {
        let (pop, params, _, tests) = small_case();
        let observed: SeriesSet = [(Statistic::NewDeaths, vec![0.0; 40])]
            .into_iter()
            .collect();
        let cfg = CalibrationConfig {
            statistics: vec![(Statistic::NewDeaths, 1.0)],
            trials_per_window: 1,
            ..Default::default()
        };
        assert!(matches!(
            calibrate_windows(&observed, &tests, &pop, &params, &cfg),
            Err(CalibrateError::WindowWithoutData(0))
        ));
    }
}
