use episim_core::abm::{run_ensemble, synthesize_population, PopulationSpec};
use episim_core::calibrate::{
    calibrate_windows, optimize, random_search, tpe_suggest, CalibrationBounds, CalibrationConfig,
    Dimension, SearchSpace, SeriesSet, TpeConfig, TrialStore,
};
use episim_core::{DiseaseParams, Statistic};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    0.5 * (v[(v.len() - 1) / 2] + v[v.len() / 2])
}

fn line() -> SearchSpace {
    SearchSpace::new(vec![Dimension::continuous("x", 0.0, 10.0)]).unwrap()
}

#[test]
fn tpe_finds_the_minimum_of_a_parabola() {
    let f = |q: &[f64]| (q[0] - 3.0).powi(2);
    let errors: Vec<f64> = (0..20)
        .map(|seed| {
            let cfg = TpeConfig {
                seed,
                ..Default::default()
            };
            assert_eq!(cfg.budget(), 100);
            let store = optimize(f, &line(), &cfg).unwrap();
            assert_eq!(store.len(), 100);
            (store.best().unwrap().params[0] - 3.0).abs()
        })
        .collect();
    let m = median(errors);
    assert!(m < 0.2, "median |x - 3| = {m}");
}

#[test]
fn tpe_beats_random_search_in_one_dimension() {
    let f = |q: &[f64]| (q[0] - 3.0).powi(2);
    let wins = (0..20)
        .filter(|&seed| {
            let cfg = TpeConfig {
                seed,
                ..Default::default()
            };
            let tpe = optimize(f, &line(), &cfg).unwrap().best().unwrap().value;
            let rnd = random_search(f, &line(), 100, seed).best().unwrap().value;
            tpe < rnd
        })
        .count();
    assert!(wins >= 15, "{wins}/20");
}

#[test]
fn null_intervention_recovers_a_unit_multiplier() {
    let pop = synthesize_population(&PopulationSpec {
        size: 10_000,
        age_distribution: [0.11, 0.12, 0.14, 0.14, 0.12, 0.13, 0.12, 0.07, 0.04, 0.01],
        mean_household_size: 2.6,
        layers: Default::default(),
        seed: 4,
    })
    .unwrap();
    let days = 60;
    let tests = vec![150.0; days];
    let truth = DiseaseParams::default();
    let runs = run_ensemble(&pop, &truth, days, &tests, 20, 9_000).unwrap();
    let stats = [Statistic::NewDiagnoses, Statistic::NumCritical];
    let observed: SeriesSet = stats
        .iter()
        .map(|&s| (s, episim_core::abm::ensemble_mean(&runs, s)))
        .collect();
    // window 1 is pinned close to the truth so window 2 only has to find the change
    let cfg = CalibrationConfig {
        window_length: 30,
        trials_per_window: 60,
        ensemble_size: 4,
        statistics: stats.iter().map(|&s| (s, 1.0)).collect(),
        bounds: CalibrationBounds {
            initial_exposed: (19, 21),
            beta: (0.0155, 0.0165),
            test_odds: (9.5, 10.5),
            ..Default::default()
        },
        seed: 1,
        ..Default::default()
    };
    let res = calibrate_windows(&observed, &tests, &pop, &truth, &cfg).unwrap();
    assert_eq!(res.windows.len(), 2);
    let w2 = &res.windows[1];
    assert_eq!(w2.names, ["beta_day_2", "beta_change_2"]);
    let change = w2.best[1];
    assert!((change - 1.0).abs() <= 0.15, "multiplier {change}");
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn suggestions_stay_inside_the_space(
        values in prop::collection::vec(-1e6f64..1e6, 12..40),
        lo in -100.0f64..100.0,
        width in 0.01f64..50.0,
        ilo in -20i64..20,
        iwidth in 1i64..10,
        seed in 0u64..10_000,
    ) {
        let space = SearchSpace::new(vec![
            Dimension::continuous("c", lo, lo + width),
            Dimension::integer("k", ilo, ilo + iwidth),
        ]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = TrialStore::new();
        for v in &values {
            let q = space.sample_uniform(&mut rng);
            store.push(q, *v);
        }
        let cfg = TpeConfig { seed, ..Default::default() };
        for _ in 0..5 {
            let q = tpe_suggest(&store, &space, &cfg, &mut rng).unwrap();
            prop_assert!(space.contains(&q), "{:?}", q);
            store.push(q, 0.0);
        }
    }
}
