//! Regenerates the bundled synthetic regional datasets and their configs.
//!
//! ```text
//! cargo run --release -p episim-core --example make_fixtures -- <repo root>
//! ```
//!
//! New Tests follow a smooth logistic level that is held constant within each
//! Monday-to-Sunday week, spread over the week by a fixed weekday profile and
//! perturbed by 5% multiplicative noise. The other indicators come from one
//! run of the agent-based model driven by those tests, scaled back up to the
//! regional population.

use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use episim_core::abm::{run, synthesize_population, BetaChange, DiseaseParams, PopulationSpec};
use episim_core::data::write_csv;
use episim_core::{Indicator, Statistic, TimeSeries};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde_json::json;

struct Region {
    name: &'static str,
    title: &'static str,
    start: NaiveDate,
    end: NaiveDate,
    /// First day with a New Tests value; earlier cells are left empty.
    tests_start: NaiveDate,
    real_population: f64,
    sim_population: usize,
    age_distribution: [f64; 10],
    household: f64,
    /// Monday first.
    weekday_profile: [f64; 7],
    tests_low: f64,
    tests_high: f64,
    tests_midpoint: f64,
    tests_rate: f64,
    beta: f64,
    initial_exposed: usize,
    schedule: Vec<(u32, f64)>,
    statistics: Vec<(Statistic, f64)>,
    seed: u64,
}

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

fn regions() -> Vec<Region> {
    vec![
        Region {
            name: "ny",
            title: "New York-like",
            start: date(2020, 3, 2),
            end: date(2021, 1, 17),
            tests_start: date(2020, 3, 2),
            real_population: 19_450_000.0,
            sim_population: 50_000,
            age_distribution: [
                0.114, 0.122, 0.139, 0.140, 0.124, 0.133, 0.119, 0.068, 0.032, 0.009,
            ],
            household: 2.6,
            weekday_profile: [
                0.113654, 0.127697, 0.134512, 0.155779, 0.162017, 0.163702, 0.142640,
            ],
            tests_low: 2_000.0,
            tests_high: 190_000.0,
            tests_midpoint: 170.0,
            tests_rate: 0.03,
            beta: 0.02,
            initial_exposed: 40,
            schedule: vec![(16, 0.3), (150, 1.2), (250, 1.1)],
            statistics: vec![(Statistic::NewDiagnoses, 1.0), (Statistic::NewDeaths, 1.0)],
            seed: 11,
        },
        Region {
            name: "uk",
            title: "United Kingdom-like",
            start: date(2020, 3, 9),
            end: date(2021, 1, 17),
            tests_start: date(2020, 3, 9),
            real_population: 66_800_000.0,
            sim_population: 100_000,
            age_distribution: [
                0.117, 0.113, 0.124, 0.135, 0.127, 0.136, 0.113, 0.088, 0.038, 0.009,
            ],
            household: 2.4,
            weekday_profile: [
                0.125222, 0.135905, 0.159167, 0.166208, 0.157837, 0.131992, 0.123668,
            ],
            tests_low: 8_000.0,
            tests_high: 520_000.0,
            tests_midpoint: 190.0,
            tests_rate: 0.025,
            beta: 0.017,
            initial_exposed: 60,
            schedule: vec![(14, 0.35), (170, 1.25), (240, 0.85)],
            statistics: vec![(Statistic::NewDiagnoses, 1.0)],
            seed: 12,
        },
        Region {
            name: "nsk",
            title: "Novosibirsk-like",
            start: date(2020, 3, 16),
            end: date(2021, 1, 17),
            tests_start: date(2020, 4, 27),
            real_population: 2_800_000.0,
            sim_population: 20_000,
            age_distribution: [
                0.125, 0.098, 0.106, 0.163, 0.144, 0.121, 0.133, 0.066, 0.036, 0.008,
            ],
            household: 2.5,
            weekday_profile: [
                0.064055, 0.176845, 0.148333, 0.161924, 0.162173, 0.183951, 0.075146,
            ],
            tests_low: 1_500.0,
            tests_high: 9_000.0,
            tests_midpoint: 140.0,
            tests_rate: 0.04,
            beta: 0.014,
            initial_exposed: 15,
            schedule: vec![(25, 0.4), (110, 1.15), (210, 0.85)],
            statistics: vec![(Statistic::NewDiagnoses, 1.0)],
            seed: 13,
        },
    ]
}

/// Daily New Tests in regional units, one per day from `region.start`.
fn tests_series(region: &Region, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let days = (region.end - region.start).num_days() as usize + 1;
    let noise = LogNormal::new(-0.05f64.powi(2) / 2.0, 0.05).unwrap();
    (0..days)
        .map(|t| {
            let day = region.start + chrono::Duration::days(t as i64);
            let monday = t as f64 - day.weekday().num_days_from_monday() as f64;
            let level = region.tests_low
                + (region.tests_high - region.tests_low)
                    / (1.0 + (-region.tests_rate * (monday - region.tests_midpoint)).exp());
            let share = region.weekday_profile[day.weekday().num_days_from_monday() as usize];
            (7.0 * level * share * noise.sample(rng)).round()
        })
        .collect()
}

fn build(region: &Region, root: &Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(region.seed);
    let tests = tests_series(region, &mut rng);
    let scale = region.real_population / region.sim_population as f64;
    let spec = PopulationSpec {
        size: region.sim_population,
        age_distribution: region.age_distribution,
        mean_household_size: region.household,
        layers: Default::default(),
        seed: region.seed,
    };
    let pop = synthesize_population(&spec).unwrap();
    let params = DiseaseParams {
        beta: region.beta,
        initial_exposed: region.initial_exposed,
        beta_schedule: region
            .schedule
            .iter()
            .map(|&(day, multiplier)| BetaChange { day, multiplier })
            .collect(),
        ..Default::default()
    };
    let sim_tests: Vec<f64> = tests.iter().map(|t| t / scale).collect();
    let res = run(&pop, &params, tests.len(), &sim_tests, region.seed).unwrap();

    let skip = (region.tests_start - region.start).num_days() as usize;
    let scaled =
        |s: Statistic| -> Vec<f64> { res.series(s).iter().map(|v| (v * scale).round()).collect() };
    let series = [
        TimeSeries::new(
            region.tests_start,
            tests[skip..].to_vec(),
            Indicator::NewTests,
        )
        .unwrap(),
        TimeSeries::new(
            region.start,
            scaled(Statistic::NewDiagnoses),
            Indicator::NewDiagnoses,
        )
        .unwrap(),
        TimeSeries::new(
            region.start,
            scaled(Statistic::NewDeaths),
            Indicator::NewDeaths,
        )
        .unwrap(),
        TimeSeries::new(
            region.start,
            scaled(Statistic::NumCritical),
            Indicator::NumCritical,
        )
        .unwrap(),
    ];
    let data_path = root.join("data").join(format!("{}.csv", region.name));
    let file = std::fs::File::create(&data_path).unwrap();
    write_csv(file, &series.iter().collect::<Vec<_>>()).unwrap();

    let total_diag: f64 = series[1].values().iter().sum();
    let total_deaths: f64 = series[2].values().iter().sum();
    println!(
        "{}: {} days, attack rate {:.3}, {} diagnoses, {} deaths, peak critical {}",
        region.name,
        tests.len(),
        res.series(Statistic::NewInfections).iter().sum::<f64>() / region.sim_population as f64,
        total_diag,
        total_deaths,
        series[3].values().iter().cloned().fold(0.0, f64::max)
    );

    let config = json!({
        "region": region.title,
        "dataset": format!("../data/{}.csv", region.name),
        "population": {
            "size": region.sim_population,
            "scale_factor": scale,
            "age_distribution": region.age_distribution,
            "mean_household_size": region.household,
        },
        "disease": {
            "beta": region.beta,
            "initial_exposed": region.initial_exposed,
        },
        "calibration": {
            "window_length": 30,
            "trials_per_window": 100,
            "ensemble_size": 3,
            "statistics": region.statistics,
        },
        "projection": {
            "horizon": 30,
            "n_runs": 10,
        },
        "seed": region.seed,
    });
    let config_path = root.join("configs").join(format!("{}.json", region.name));
    std::fs::write(
        &config_path,
        serde_json::to_string_pretty(&config).unwrap() + "\n",
    )
    .unwrap();
}

fn main() {
    let root = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(root.join("data")).unwrap();
    std::fs::create_dir_all(root.join("configs")).unwrap();
    for region in regions() {
        build(&region, &root);
    }
}
