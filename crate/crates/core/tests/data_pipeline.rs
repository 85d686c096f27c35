use chrono::NaiveDate;
use episim_core::data::{
    extrapolate_backward, hp_filter, read_csv, smooth, smooth_values, write_csv,
    ExtrapolationConfig,
};
use episim_core::{Indicator, TimeSeries};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 3, 2).unwrap()
}

fn ts(values: Vec<f64>) -> TimeSeries {
    TimeSeries::new(start(), values, Indicator::NewTests).unwrap()
}

/// Dense solve of `(I + lambda D'D) T = x` with `D` the second-difference operator.
fn dense_hp(x: &[f64], lambda: f64) -> Vec<f64> {
    let n = x.len();
    let mut d = DMatrix::<f64>::zeros(n - 2, n);
    for i in 0..n - 2 {
        d[(i, i)] = 1.0;
        d[(i, i + 1)] = -2.0;
        d[(i, i + 2)] = 1.0;
    }
    let a = DMatrix::<f64>::identity(n, n) + d.transpose() * &d * lambda;
    let t = a.lu().solve(&DVector::from_column_slice(x)).unwrap();
    t.iter().copied().collect()
}

#[test]
fn hp_matches_dense_solve_and_recovers_weekly_sinusoid() {
    let n = 210;
    let season = |t: usize| (2.0 * std::f64::consts::PI * t as f64 / 7.0).sin();
    let x: Vec<f64> = (0..n).map(|t| 50.0 + 0.8 * t as f64 + season(t)).collect();
    let d = hp_filter(&ts(x.clone()), 1e4).unwrap();

    let oracle = dense_hp(&x, 1e4);
    for (a, b) in d.trend.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
    for i in 0..n {
        assert!((d.trend[i] + d.residual[i] - x[i]).abs() < 1e-9);
    }

    // amplitude of the residual over the interior 80% against the true unit sinusoid
    let (lo, hi) = (n / 10, n - n / 10);
    let num: f64 = (lo..hi).map(|t| d.residual[t] * season(t)).sum();
    let den: f64 = (lo..hi).map(|t| season(t) * season(t)).sum();
    let amplitude = num / den;
    assert!((amplitude - 1.0).abs() < 0.05, "amplitude {amplitude}");
}

#[test]
fn csv_gap_fill_extrapolate_and_smooth() {
    let csv = "date,new_tests,new_diagnoses\n\
        2020-03-02,,1\n2020-03-03,,1\n2020-03-04,100,2\n2020-03-05,,3\n\
        2020-03-06,120,5\n2020-03-07,110,8\n2020-03-08,130,13\n2020-03-09,90,21\n\
        2020-03-10,100,34\n2020-03-11,140,55\n";
    let map = vec![
        (Indicator::NewTests, "new_tests".to_string()),
        (Indicator::NewDiagnoses, "new_diagnoses".to_string()),
    ];
    let data = read_csv(csv.as_bytes(), &map).unwrap();
    let tests = data.get(Indicator::NewTests).unwrap();
    assert_eq!(data.leading_gap(Indicator::NewTests), Some(2));
    // interior empty cell interpolated and flagged
    assert_eq!(tests.values()[1], 110.0);
    assert_eq!(tests.gaps(), &[1]);

    let cfg = ExtrapolationConfig {
        window: 7,
        growth: 1.03,
        gap_count: 2,
        noise_divisor: f64::INFINITY,
        rng_seed: 0,
    };
    let full = extrapolate_backward(tests, &cfg).unwrap();
    assert_eq!(full.start_date(), data.start_date);
    assert_eq!(full.len(), data.get(Indicator::NewDiagnoses).unwrap().len());
    // hand-unrolled first step: mean of the 7 following values times 1.03
    let first7: f64 = tests.values()[..7].iter().sum::<f64>() / 7.0;
    assert!((full.values()[1] - 1.03 * first7).abs() < 1e-9);

    let sm = smooth(&full, 7).unwrap();
    assert_eq!(sm.len(), full.len());
    let total: f64 = full.values().iter().sum();
    assert!(sm.values().iter().all(|v| *v > 0.0 && *v < total));

    let mut buf = Vec::new();
    write_csv(
        &mut buf,
        &[&full, data.get(Indicator::NewDiagnoses).unwrap()],
    )
    .unwrap();
    let back = read_csv(buf.as_slice(), &map).unwrap();
    assert_eq!(
        back.get(Indicator::NewTests).unwrap().values(),
        full.values()
    );
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn hp_parts_sum_to_source(x in prop::collection::vec(0.0f64..1e4, 3..120), lambda in 1.0f64..1e6) {
        let d = hp_filter(&ts(x.clone()), lambda).unwrap();
        for i in 0..x.len() {
            prop_assert!((d.trend[i] + d.residual[i] - x[i]).abs() < 1e-6 * (1.0 + x[i]));
        }
    }

    #[test]
    fn smoothing_preserves_length_bounds_and_constants(
        x in prop::collection::vec(-1e3f64..1e3, 1..80),
        half in 0usize..6,
        c in -50.0f64..50.0,
    ) {
        let w = 2 * half + 1;
        let s = smooth_values(&x, w).unwrap();
        prop_assert_eq!(s.len(), x.len());
        let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        prop_assert!(s.iter().all(|v| *v >= lo - 1e-9 && *v <= hi + 1e-9));
        let k = smooth_values(&vec![c; x.len()], w).unwrap();
        prop_assert!(k.iter().all(|v| (v - c).abs() < 1e-9));
    }

    #[test]
    fn extrapolation_is_non_negative_and_keeps_the_known_tail(
        x in prop::collection::vec(0.0f64..500.0, 7..40),
        gap in 0usize..20,
        seed in 0u64..1000,
    ) {
        let cfg = ExtrapolationConfig { gap_count: gap, rng_seed: seed, ..ExtrapolationConfig::default() };
        let out = extrapolate_backward(&ts(x.clone()), &cfg).unwrap();
        prop_assert_eq!(out.len(), x.len() + gap);
        prop_assert!(out.values().iter().all(|v| *v >= 0.0));
        prop_assert_eq!(&out.values()[gap..], x.as_slice());
    }
}
