use chrono::NaiveDate;
use episim_core::forecast::{
    compare_models, difference, integrate, naive_seasonal, select_sarima_report, LinearTrend,
    ModelTag,
};
use episim_core::{Indicator, TimeSeries};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn noise(n: usize, sd: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = Normal::new(0.0, sd).unwrap();
    (0..n).map(|_| d.sample(&mut rng)).collect()
}

#[test]
fn white_noise_selection_stays_near_the_seasonal_ma_reference() {
    let x: Vec<f64> = noise(140, 5.0, 21).iter().map(|e| 100.0 + e).collect();
    let sel = select_sarima_report(&x).unwrap();
    let o = sel.best.order;
    assert_eq!(o.d, 0, "ADF should reject a unit root on white noise");
    assert_eq!(sel.candidates.len(), 81);
    assert!(sel.candidates.iter().all(|(_, aic)| sel.best.aic <= *aic));
    // seasonal differencing of white noise is a seasonal MA(1) with unit root
    let reference = sel
        .candidates
        .iter()
        .find(|(c, _)| (c.p, c.q, c.sp, c.sq) == (0, 0, 0, 1))
        .map(|(_, aic)| *aic)
        .expect("reference candidate fitted");
    assert!(
        reference - sel.best.aic < 10.0,
        "{} vs {reference}",
        sel.best.aic
    );
    let r = sel.best.residuals();
    let n = r.len() as f64;
    let mean = r.iter().sum::<f64>() / n;
    let sd = (r.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(mean.abs() < 3.0 * sd / n.sqrt());
}

#[test]
fn seasonal_series_ranks_a_seasonal_model_first() {
    let week = [1.0, 1.1, 1.05, 1.0, 0.95, 0.6, 0.4];
    let e = noise(140, 3.0, 5);
    let x: Vec<f64> = (0..140)
        .map(|t| (200.0 + 0.5 * t as f64) * week[t % 7] + e[t])
        .collect();
    let s = TimeSeries::new(
        NaiveDate::from_ymd_opt(2021, 3, 1).unwrap(),
        x,
        Indicator::NewTests,
    )
    .unwrap();
    let cmp = compare_models(&s, 14).unwrap();
    assert_eq!(cmp.ranked.len(), 3);
    assert!(cmp.ranked.windows(2).all(|w| w[0].cv_mae <= w[1].cv_mae));
    assert_ne!(cmp.ranked[0].model_tag, ModelTag::LinearRegression);
    let lin = cmp
        .ranked
        .iter()
        .position(|r| r.model_tag == ModelTag::LinearRegression)
        .unwrap();
    assert_eq!(lin, 2);
    let best = &cmp.ranked[0].point_forecast;
    assert_eq!(best.len(), 14);
    assert_eq!(
        best.start_date(),
        s.start_date() + chrono::Duration::days(140)
    );
    // the winner beats repeating the last week
    let naive = naive_seasonal(s.values(), 14, 7);
    let truth: Vec<f64> = (140..154)
        .map(|t| (200.0 + 0.5 * t as f64) * week[t % 7])
        .collect();
    let mae = |f: &[f64]| {
        f.iter()
            .zip(&truth)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / 14.0
    };
    assert!(mae(best.values()) < mae(&naive));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn linear_regression_is_exact_on_lines(a in -1e3f64..1e3, b in -50.0f64..50.0, n in 2usize..200, h in 1usize..40) {
        let x: Vec<f64> = (0..n).map(|t| a + b * t as f64).collect();
        let fit = LinearTrend::fit(&x).unwrap();
        prop_assert!((fit.intercept - a).abs() < 1e-6 * (1.0 + a.abs()));
        prop_assert!((fit.slope - b).abs() < 1e-8 * (1.0 + b.abs()));
        for (k, v) in fit.forecast(h).iter().enumerate() {
            let want = (a + b * (n + k) as f64).max(0.0);
            prop_assert!((v - want).abs() < 1e-6 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn seasonal_differencing_round_trips(x in prop::collection::vec(-1e3f64..1e3, 15..60), order in 1usize..3) {
        let d = difference(&x, 7, order).unwrap();
        prop_assert_eq!(d.len(), x.len() - 7 * order);
        let back = integrate(&d, &x[..7 * order], 7, order).unwrap();
        for (a, b) in back.iter().zip(&x) {
            prop_assert!((a - b).abs() < 1e-6);
        }
    }
}
