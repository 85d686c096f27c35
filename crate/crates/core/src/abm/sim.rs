use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::DiseaseParams;
use super::population::Population;
use super::state::AgentState;
use super::{AbmError, Result};

/// Per-day outputs of a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    NewDiagnoses,
    NewDeaths,
    NumCritical,
    NewInfections,
    InfectiousCount,
}

impl Statistic {
    pub const ALL: [Statistic; 5] = [
        Statistic::NewDiagnoses,
        Statistic::NewDeaths,
        Statistic::NumCritical,
        Statistic::NewInfections,
        Statistic::InfectiousCount,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Statistic::NewDiagnoses => "new_diagnoses",
            Statistic::NewDeaths => "new_deaths",
            Statistic::NumCritical => "num_critical",
            Statistic::NewInfections => "new_infections",
            Statistic::InfectiousCount => "infectious_count",
        }
    }

    /// The observable indicator this statistic is compared against.
    pub fn from_indicator(ind: crate::data::Indicator) -> Option<Self> {
        use crate::data::Indicator;
        match ind {
            Indicator::NewDiagnoses => Some(Statistic::NewDiagnoses),
            Indicator::NewDeaths => Some(Statistic::NewDeaths),
            Indicator::NumCritical => Some(Statistic::NumCritical),
            Indicator::NewTests => None,
        }
    }
}

impl std::fmt::Display for Statistic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Statistic {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Statistic::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown statistic `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct DaySummary {
    pub new_infections: u32,
    pub new_diagnoses: u32,
    pub new_deaths: u32,
    /// Agents in `C` at the end of the day.
    pub num_critical: u32,
    /// Infectious agents at the start of the day.
    pub infectious_count: u32,
    pub state_counts: [u32; 10],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub seed: u64,
    pub days: Vec<DaySummary>,
}

impl SimResult {
    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn series(&self, stat: Statistic) -> Vec<f64> {
        self.days
            .iter()
            .map(|d| {
                f64::from(match stat {
                    Statistic::NewDiagnoses => d.new_diagnoses,
                    Statistic::NewDeaths => d.new_deaths,
                    Statistic::NumCritical => d.num_critical,
                    Statistic::NewInfections => d.new_infections,
                    Statistic::InfectiousCount => d.infectious_count,
                })
            })
            .collect()
    }

    pub fn state_series(&self, state: AgentState) -> Vec<u32> {
        self.days
            .iter()
            .map(|d| d.state_counts[state.index()])
            .collect()
    }
}

fn schedule_exposure<R: Rng>(
    pop: &mut Population,
    params: &DiseaseParams,
    id: usize,
    day: u32,
    rng: &mut R,
) {
    let a = &mut pop.agents[id];
    a.state = AgentState::E;
    a.state_entry_day = day;
    let branch = if rng.random::<f64>() < params.progression.p_sym[a.age_bin()] {
        AgentState::I
    } else {
        AgentState::A
    };
    a.next = Some((day + params.durations.exp2inf.sample(rng), branch));
}

/// Enters `state` on `day` and draws the following transition.
fn enter<R: Rng>(
    pop: &mut Population,
    params: &DiseaseParams,
    id: usize,
    state: AgentState,
    day: u32,
    rng: &mut R,
) {
    use AgentState::*;
    let d = &params.durations;
    let p = &params.progression;
    let a = &mut pop.agents[id];
    let bin = a.age_bin();
    a.state = state;
    a.state_entry_day = day;
    let mut coin = |prob: f64| rng.random::<f64>() < prob;
    let next = match state {
        I => Some((d.inf2sym, Y)),
        A => Some((d.asym2rec, R)),
        Y => Some(if coin(p.p_sev[bin]) {
            (d.sym2sev, H)
        } else {
            (d.sym2mild, M)
        }),
        M => Some((d.mild2rec, R)),
        H => Some(if coin(p.p_crit[bin]) {
            (d.sev2crit, C)
        } else {
            (d.sev2rec, R)
        }),
        C => Some(if coin(p.p_death[bin]) {
            (d.crit2die, D)
        } else {
            (d.crit2rec, R)
        }),
        S | E | R | D => None,
    };
    a.next = next.map(|(dur, s)| (day + dur.sample(rng), s));
}

fn try_infect<R: Rng>(
    pop: &mut Population,
    params: &DiseaseParams,
    target: u32,
    prob: f64,
    day: u32,
    respect_quarantine: bool,
    rng: &mut R,
) -> bool {
    let t = &pop.agents[target as usize];
    if t.state != AgentState::S || (respect_quarantine && t.is_quarantined(day)) {
        return false;
    }
    if prob > 0.0 && rng.random::<f64>() < prob {
        schedule_exposure(pop, params, target as usize, day, rng);
        return true;
    }
    false
}

/// Advances the population by one day: transmission, then progression, then
/// testing.
pub fn step<R: Rng>(
    pop: &mut Population,
    params: &DiseaseParams,
    day: u32,
    tests_today: u32,
    rng: &mut R,
) -> DaySummary {
    let mut out = DaySummary::default();
    let n = pop.agents.len();

    // transmission over a start-of-day snapshot
    let infectious: Vec<u32> = (0..n as u32)
        .filter(|&i| pop.agents[i as usize].state.is_infectious())
        .collect();
    out.infectious_count = infectious.len() as u32;
    let scale = params.beta * params.beta_multiplier(day);
    let w = params.layer_weights;
    let prob = |weight: f64| (scale * weight).clamp(0.0, 1.0);
    let (p_home, p_school, p_work, p_comm) = (
        prob(w.household),
        prob(w.school),
        prob(w.work),
        prob(w.community),
    );
    let community = (pop.layers.community_contacts > 0.0 && n > 1)
        .then(|| Poisson::new(pop.layers.community_contacts).expect("positive rate"));
    let mut partners: Vec<u32> = Vec::new();
    for &src in &infectious {
        let s = src as usize;
        let household = pop.agents[s].household as usize;
        for k in 0..pop.households[household].len() {
            let t = pop.households[household][k];
            if t != src && try_infect(pop, params, t, p_home, day, false, rng) {
                out.new_infections += 1;
            }
        }
        if pop.agents[s].is_quarantined(day) {
            continue;
        }
        for (layer_p, school) in [(p_school, true), (p_work, false)] {
            let len = if school {
                pop.school[s].len()
            } else {
                pop.work[s].len()
            };
            for k in 0..len {
                let t = if school {
                    pop.school[s][k]
                } else {
                    pop.work[s][k]
                };
                if try_infect(pop, params, t, layer_p, day, true, rng) {
                    out.new_infections += 1;
                }
            }
        }
        if let Some(pois) = &community {
            let k = pois.sample(rng) as usize;
            partners.clear();
            partners.extend((0..k).map(|_| rng.random_range(0..n as u32)));
            for &t in &partners {
                if t != src && try_infect(pop, params, t, p_comm, day, true, rng) {
                    out.new_infections += 1;
                }
            }
        }
    }
    if params.daily_imports > 0 {
        let susceptible: Vec<usize> = (0..n)
            .filter(|&i| pop.agents[i].state == AgentState::S)
            .collect();
        let k = params.daily_imports.min(susceptible.len());
        for j in sample(rng, susceptible.len(), k)
            .into_iter()
            .collect::<Vec<_>>()
        {
            schedule_exposure(pop, params, susceptible[j], day, rng);
            out.new_infections += 1;
        }
    }

    // progression
    for i in 0..n {
        if let Some((when, target)) = pop.agents[i].next {
            if when <= day {
                if target == AgentState::D {
                    out.new_deaths += 1;
                }
                enter(pop, params, i, target, day, rng);
            }
        }
    }

    // testing: two weight classes, sampled without replacement
    if tests_today > 0 {
        let mut symptomatic: Vec<u32> = Vec::new();
        let mut other: Vec<u32> = Vec::new();
        for (i, a) in pop.agents.iter().enumerate() {
            if a.diagnosed || a.state == AgentState::D {
                continue;
            }
            if a.state.is_symptomatic() {
                symptomatic.push(i as u32);
            } else {
                other.push(i as u32);
            }
        }
        let odds = params.test_odds;
        for _ in 0..tests_today {
            let ws = odds * symptomatic.len() as f64;
            let wo = other.len() as f64;
            if ws + wo <= 0.0 {
                break;
            }
            let pool = if rng.random::<f64>() * (ws + wo) < ws {
                &mut symptomatic
            } else {
                &mut other
            };
            let id = pool.swap_remove(rng.random_range(0..pool.len())) as usize;
            let a = &mut pop.agents[id];
            if a.state.is_test_positive() {
                a.diagnosed = true;
                out.new_diagnoses += 1;
                if !a.state.is_hospitalised() {
                    a.quarantined_until = Some(day + params.quarantine_days);
                }
            }
        }
    }

    out.state_counts = pop.state_counts();
    out.num_critical = out.state_counts[AgentState::C.index()];
    out
}

/// Simulates `n_days` days on a copy of `template`. `tests[t]` is the number
/// of tests on day `t` (rounded, negatives treated as zero).
pub fn run(
    template: &Population,
    params: &DiseaseParams,
    n_days: usize,
    tests: &[f64],
    seed: u64,
) -> Result<SimResult> {
    params.validate()?;
    if tests.len() < n_days {
        return Err(AbmError::TestsSeriesTooShort {
            needed: n_days,
            available: tests.len(),
        });
    }
    if params.beta * params.layer_weights.household > 1.0 {
        log::debug!("household transmission probability clamped at 1");
    }
    let mut pop = template.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = pop.agents.len();
    let seeds = params.initial_exposed.min(n);
    for i in sample(&mut rng, n, seeds).into_iter().collect::<Vec<_>>() {
        schedule_exposure(&mut pop, params, i, 0, &mut rng);
    }
    let days = (0..n_days)
        .map(|t| {
            let k = tests[t].round().max(0.0) as u32;
            step(&mut pop, params, t as u32, k, &mut rng)
        })
        .collect();
    Ok(SimResult { seed, days })
}

/// Independent runs with seeds `base_seed..base_seed + n_runs`, in seed order.
pub fn run_ensemble(
    template: &Population,
    params: &DiseaseParams,
    n_days: usize,
    tests: &[f64],
    n_runs: usize,
    base_seed: u64,
) -> Result<Vec<SimResult>> {
    if n_runs == 0 {
        return Err(AbmError::InvalidParams(
            "ensemble needs at least one run".into(),
        ));
    }
    (0..n_runs as u64)
        .into_par_iter()
        .map(|k| run(template, params, n_days, tests, base_seed + k))
        .collect()
}

/// Per-day mean of `stat` over an ensemble.
pub fn ensemble_mean(runs: &[SimResult], stat: Statistic) -> Vec<f64> {
    let Some(first) = runs.first() else {
        return Vec::new();
    };
    let mut acc = vec![0.0; first.len()];
    for r in runs {
        for (a, v) in acc.iter_mut().zip(r.series(stat)) {
            *a += v;
        }
    }
    acc.iter().map(|v| v / runs.len() as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abm::params::Durations;
    use crate::abm::population::{synthesize_population, PopulationSpec};
    use crate::abm::AGE_BINS;

    fn small_pop(seed: u64) -> Population {
        synthesize_population(&PopulationSpec {
            size: 2_000,
            age_distribution: [0.1; AGE_BINS],
            mean_household_size: 3.0,
            layers: Default::default(),
            seed,
        })
        .unwrap()
    }

    #[test]
    fn zero_beta_means_no_transmission() {
        let pop = small_pop(1);
        let params = DiseaseParams {
            beta: 0.0,
            ..Default::default()
        };
        let r = run(&pop, &params, 60, &[20.0; 60], 5).unwrap();
        assert!(r.series(Statistic::NewInfections).iter().all(|&v| v == 0.0));
        let last = r.days.last().unwrap().state_counts;
        assert_eq!(last[AgentState::S.index()], 2_000 - 20);
    }

    #[test]
    fn no_seeds_no_epidemic() {
        let params = DiseaseParams {
            initial_exposed: 0,
            ..Default::default()
        };
        let r = run(&small_pop(1), &params, 30, &[50.0; 30], 1).unwrap();
        for stat in Statistic::ALL {
            assert!(r.series(stat).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn no_deaths_without_death_probability() {
        let mut params = DiseaseParams {
            beta: 0.05,
            ..Default::default()
        };
        params.progression.p_death = [0.0; AGE_BINS];
        let r = run(&small_pop(2), &params, 90, &[10.0; 90], 3).unwrap();
        assert!(r.series(Statistic::NewDeaths).iter().all(|&v| v == 0.0));
        assert!(r.series(Statistic::NewInfections).iter().sum::<f64>() > 0.0);
    }

    #[test]
    fn exhaustive_testing_finds_every_positive() {
        let params = DiseaseParams {
            beta: 0.03,
            test_odds: 1.0,
            ..Default::default()
        };
        let pop = small_pop(4);
        let mut p = pop.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for i in 0..30 {
            schedule_exposure(&mut p, &params, i, 0, &mut rng);
        }
        for day in 0..15 {
            step(&mut p, &params, day, 0, &mut rng);
        }
        let positive = p
            .agents
            .iter()
            .filter(|a| a.state.is_test_positive())
            .count();
        assert!(positive > 0);
        let n = p.len() as u32;
        let s = step(&mut p, &params, 15, n, &mut rng);
        let still = p
            .agents
            .iter()
            .filter(|a| a.state.is_test_positive() && !a.diagnosed)
            .count();
        assert_eq!(still, 0);
        assert!(s.new_diagnoses as usize >= positive);
    }

    #[test]
    fn household_binomial_oracle() {
        // one infectious agent, k = 4 susceptible housemates, one step
        let beta = 0.07;
        let params = DiseaseParams {
            beta,
            durations: Durations::all_fixed(5.0),
            ..Default::default()
        };
        let template = Population::single_household(&[30, 31, 32, 33, 34]);
        let trials = 100_000;
        let mut total = 0u64;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..trials {
            let mut p = template.clone();
            enter(&mut p, &params, 0, AgentState::A, 0, &mut rng);
            total += u64::from(step(&mut p, &params, 0, 0, &mut rng).new_infections);
        }
        let q = (3.0 * beta).clamp(0.0, 1.0);
        let expect = 4.0 * q;
        let sd = (4.0 * q * (1.0 - q) / trials as f64).sqrt();
        let mean = total as f64 / trials as f64;
        assert!((mean - expect).abs() < 3.0 * sd, "{mean} vs {expect}");
    }

    #[test]
    fn ensemble_of_one_equals_run() {
        let pop = small_pop(3);
        let params = DiseaseParams::default();
        let tests = vec![30.0; 40];
        let e = run_ensemble(&pop, &params, 40, &tests, 1, 11).unwrap();
        assert_eq!(e[0], run(&pop, &params, 40, &tests, 11).unwrap());
    }

    #[test]
    fn short_test_series_is_rejected() {
        let err = run(&small_pop(1), &DiseaseParams::default(), 10, &[1.0; 5], 0).unwrap_err();
        assert!(matches!(
            err,
            AbmError::TestsSeriesTooShort {
                needed: 10,
                available: 5
            }
        ));
    }
}
