use episim_core::abm::{
    ensemble_mean, run, run_ensemble, synthesize_population, BetaChange, Population, PopulationSpec,
};
use episim_core::{AgentState, DiseaseParams, Statistic};
use proptest::prelude::*;

fn population(size: usize, seed: u64) -> Population {
    synthesize_population(&PopulationSpec {
        size,
        age_distribution: [0.11, 0.12, 0.14, 0.14, 0.12, 0.13, 0.12, 0.07, 0.04, 0.01],
        mean_household_size: 2.6,
        layers: Default::default(),
        seed,
    })
    .unwrap()
}

fn total(v: &[f64]) -> f64 {
    v.iter().sum()
}

#[test]
fn doubling_beta_raises_infections_in_most_runs() {
    let pop = population(3000, 1);
    let tests = vec![50.0; 60];
    let base = DiseaseParams {
        beta: 0.008,
        ..Default::default()
    };
    let doubled = DiseaseParams {
        beta: 0.016,
        ..base.clone()
    };
    let lo = run_ensemble(&pop, &base, 60, &tests, 20, 500).unwrap();
    let hi = run_ensemble(&pop, &doubled, 60, &tests, 20, 500).unwrap();
    let wins = lo
        .iter()
        .zip(&hi)
        .filter(|(a, b)| {
            total(&b.series(Statistic::NewInfections)) > total(&a.series(Statistic::NewInfections))
        })
        .count();
    assert!(wins >= 18, "{wins}/20");
    let mean_lo = total(&ensemble_mean(&lo, Statistic::NewInfections));
    let mean_hi = total(&ensemble_mean(&hi, Statistic::NewInfections));
    assert!(mean_hi > 1.5 * mean_lo, "{mean_hi} vs {mean_lo}");
}

#[test]
fn zero_multiplier_stops_transmission() {
    let pop = population(2000, 2);
    let tests = vec![30.0; 50];
    let p = DiseaseParams {
        beta: 0.02,
        beta_schedule: vec![BetaChange {
            day: 10,
            multiplier: 0.0,
        }],
        ..Default::default()
    };
    let r = run(&pop, &p, 50, &tests, 9).unwrap();
    let late = &r.series(Statistic::NewInfections)[10..];
    assert!(late.iter().all(|v| *v == 0.0));
}

#[test]
fn runs_are_reproducible_and_seed_sensitive() {
    let pop = population(2000, 3);
    let tests = vec![40.0; 40];
    let p = DiseaseParams::default();
    let a = run(&pop, &p, 40, &tests, 77).unwrap();
    assert_eq!(a, run(&pop, &p, 40, &tests, 77).unwrap());
    assert_ne!(a.days, run(&pop, &p, 40, &tests, 78).unwrap().days);
    let ens = run_ensemble(&pop, &p, 40, &tests, 3, 77).unwrap();
    assert_eq!(ens[0], a);
    assert_eq!(
        ens.iter().map(|r| r.seed).collect::<Vec<_>>(),
        vec![77, 78, 79]
    );
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn counts_are_conserved_and_absorbing_states_only_grow(
        size in 100usize..500,
        beta in 0.0f64..0.05,
        seeds in 0usize..30,
        tests in 0.0f64..40.0,
        seed in 0u64..1000,
    ) {
        let pop = population(size, seed);
        let p = DiseaseParams { beta, initial_exposed: seeds.min(size), ..Default::default() };
        let r = run(&pop, &p, 40, &vec![tests; 40], seed).unwrap();
        let mut prev = pop.state_counts();
        prop_assert_eq!(prev.iter().sum::<u32>() as usize, size);
        for d in &r.days {
            prop_assert_eq!(d.state_counts.iter().sum::<u32>() as usize, size);
            let s = AgentState::S.index();
            prop_assert!(d.state_counts[s] <= prev[s]);
            for st in [AgentState::R, AgentState::D] {
                prop_assert!(d.state_counts[st.index()] >= prev[st.index()]);
            }
            prop_assert_eq!(d.new_deaths, d.state_counts[AgentState::D.index()] - prev[AgentState::D.index()]);
            prop_assert_eq!(d.num_critical, d.state_counts[AgentState::C.index()]);
            prop_assert!(d.new_diagnoses as f64 <= tests.round());
            prev = d.state_counts;
        }
    }
}
