use chrono::NaiveDate;
use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use episim_core::abm::{step, synthesize_population, PopulationSpec};
use episim_core::calibrate::{tpe_suggest, Dimension, SearchSpace, TpeConfig, TrialStore};
use episim_core::data::hp_filter;
use episim_core::forecast::{fit_sarima, SarimaOrder};
use episim_core::{DiseaseParams, Indicator, TimeSeries};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn weekly_series(n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    (0..n)
        .map(|t| {
            let t = t as f64;
            1000.0
                + 5.0 * t
                + 150.0 * (2.0 * std::f64::consts::PI * t / 7.0).sin()
                + rng.random_range(-20.0..20.0)
        })
        .collect()
}

fn sim_step(c: &mut Criterion) {
    let pop = synthesize_population(&PopulationSpec {
        size: 100_000,
        age_distribution: [0.1; 10],
        mean_household_size: 2.5,
        layers: Default::default(),
        seed: 1,
    })
    .unwrap();
    let params = DiseaseParams {
        initial_exposed: 2_000,
        ..Default::default()
    };
    // warm the epidemic up so the step sees a realistic mix of states
    let mut warm = pop.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for day in 0..30 {
        step(&mut warm, &params, day, 500, &mut rng);
    }
    c.bench_function("abm step, 1e5 agents", |b| {
        b.iter_batched(
            || (warm.clone(), ChaCha8Rng::seed_from_u64(3)),
            |(mut p, mut r)| black_box(step(&mut p, &params, 30, 500, &mut r)),
            BatchSize::LargeInput,
        )
    });
}

fn tpe(c: &mut Criterion) {
    let space = SearchSpace::new(vec![
        Dimension::integer("e0", 1, 200),
        Dimension::continuous("beta", 0.002, 0.05),
        Dimension::integer("day", 0, 29),
        Dimension::continuous("change", 0.05, 2.0),
        Dimension::continuous("odds", 1.0, 50.0),
    ])
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut store = TrialStore::default();
    for _ in 0..300 {
        let q = space.sample_uniform(&mut rng);
        let v = q.iter().map(|x| x.sin()).sum::<f64>();
        store.push(q, v);
    }
    let cfg = TpeConfig::default();
    c.bench_function("tpe_suggest, 300 trials, 5 dims", |b| {
        b.iter(|| black_box(tpe_suggest(&store, &space, &cfg, &mut rng).unwrap()))
    });
}

fn hp(c: &mut Criterion) {
    let start = NaiveDate::from_ymd_opt(2020, 3, 2).unwrap();
    let s = TimeSeries::new(start, weekly_series(3_000), Indicator::NewTests).unwrap();
    c.bench_function("hp_filter, 3000 days", |b| {
        b.iter(|| black_box(hp_filter(&s, 1e4).unwrap()))
    });
}

fn sarima(c: &mut Criterion) {
    let x = weekly_series(300);
    let order = SarimaOrder::new(1, 1, 1, 1, 1, 1, 7).unwrap();
    let mut g = c.benchmark_group("sarima");
    g.sample_size(10);
    g.bench_function("fit (1,1,1)(1,1,1)[7], 300 days", |b| {
        b.iter(|| black_box(fit_sarima(&x, order).unwrap()))
    });
    g.finish();
}

criterion_group!(benches, sim_step, tpe, hp, sarima);
criterion_main!(benches);
