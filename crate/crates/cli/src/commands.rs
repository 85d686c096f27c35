//! Subcommand implementations.

use std::collections::BTreeMap;
use std::path::Path;

use episim_core::abm::{ensemble_mean, run_ensemble, AgentState, SimResult};
use episim_core::calibrate::calibrate_windows;
use episim_core::data::hp_filter;
use episim_core::forecast::{compare_models, forecast_with, ForecastResult, ModelTag};
use episim_core::report::{project, quantile_bands, ProjectionConfig, QuantileBand};
use episim_core::tsa::{
    acf, adf_test, macd, pacf, rolling_correlation, weekly_fractions, TsaError,
    ADF_CRITICAL_VALUES, WEEKDAY_NAMES,
};
use episim_core::{DiseaseParams, Indicator, Statistic, TimeSeries};
use serde_json::json;

use crate::config::{model_inputs, LoadedConfig, ModelInputs};
use crate::error::{CliError, Result};
use crate::output::{cell, Manifest, OutDir};
use crate::svg::{Chart, Line};
use crate::{Cli, Command, ModelChoice};

pub fn run(cli: &Cli) -> Result<()> {
    let mut cfg = LoadedConfig::load(cli.config_path()?)?;
    if let Some(seed) = cli.common.seed {
        cfg.config.seed = seed;
    }
    // one seed drives population synthesis, simulation and calibration
    cfg.config.calibration.seed = cfg.config.seed;

    let threads = match cli.common.threads {
        Some(0) => return Err(CliError::Usage("--threads must be positive".into())),
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            n
        }
        None => rayon::current_num_threads(),
    };

    match &cli.command {
        Command::Calibrate {
            window_length,
            trials,
            ensemble_size,
            batch,
        } => {
            let c = &mut cfg.config.calibration;
            c.window_length = window_length.unwrap_or(c.window_length);
            c.trials_per_window = trials.unwrap_or(c.trials_per_window);
            c.ensemble_size = ensemble_size.unwrap_or(c.ensemble_size);
            c.batch = batch.unwrap_or(c.batch);
        }
        Command::Project {
            horizon,
            runs,
            beta_multiplier,
            ..
        } => {
            let s = &mut cfg.config.projection;
            s.horizon = horizon.unwrap_or(s.horizon);
            s.n_runs = runs.unwrap_or(s.n_runs);
            s.beta_multiplier = beta_multiplier.or(s.beta_multiplier);
        }
        Command::ValidateConfig => {
            println!("{}", serde_json::to_string_pretty(&cfg.config)?);
            return Ok(());
        }
        _ => {}
    }

    let mut out = OutDir::create(&cli.common.out)?;
    let mut manifest = Manifest::new(command_name(&cli.command), &cfg, threads);
    manifest.input(&cfg.dataset_path())?;
    match &cli.command {
        Command::Analyze {
            indicator,
            max_lag,
            window,
            lambda,
        } => analyze(&cfg, &mut out, *indicator, *max_lag, *window, *lambda)?,
        Command::Forecast {
            indicator,
            horizon,
            model,
        } => forecast(&cfg, &mut out, *indicator, *horizon, *model)?,
        Command::Simulate { params, days, runs } => {
            if let Some(p) = params {
                manifest.input(p)?;
            }
            simulate(&cfg, &mut out, params.as_deref(), *days, *runs)?
        }
        Command::Calibrate { .. } => calibrate(&cfg, &mut out)?,
        Command::Project { params, .. } => {
            if let Some(p) = params {
                manifest.input(p)?;
            }
            projection(&cfg, &mut out, params.as_deref())?
        }
        Command::ValidateConfig => unreachable!(),
    }
    manifest.write(&mut out)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Analyze { .. } => "analyze",
        Command::Forecast { .. } => "forecast",
        Command::Simulate { .. } => "simulate",
        Command::Calibrate { .. } => "calibrate",
        Command::Project { .. } => "project",
        Command::ValidateConfig => "validate-config",
    }
}

fn indicator_series(cfg: &LoadedConfig, indicator: Indicator) -> Result<TimeSeries> {
    let data = cfg.dataset()?;
    data.get(indicator).cloned().ok_or_else(|| {
        CliError::data(format!(
            "{} has no {indicator} observations",
            cfg.dataset_path().display()
        ))
    })
}

fn dates(start: chrono::NaiveDate, n: usize) -> Vec<String> {
    (0..n)
        .map(|i| (start + chrono::Duration::days(i as i64)).to_string())
        .collect()
}

fn num(v: f64) -> String {
    cell(Some(v))
}

fn analyze(
    cfg: &LoadedConfig,
    out: &mut OutDir,
    indicator: Indicator,
    max_lag: usize,
    window: usize,
    lambda: f64,
) -> Result<()> {
    let s = indicator_series(cfg, indicator)?;
    let x_dates = dates(s.start_date(), s.len());

    let a = acf(&s, max_lag)?;
    // the recursion can break down on the unbiased acf; keep the lags it reached
    let p = match pacf(&s, max_lag) {
        Ok(p) => p.coefficients,
        Err(TsaError::NumericalBreakdown(k)) => {
            log::warn!("pacf stops at lag {}: innovation variance vanished", k - 1);
            pacf(&s, k - 1)?.coefficients
        }
        Err(e) => return Err(e.into()),
    };
    out.csv(
        "acf.csv",
        &["lag", "acf", "pacf"],
        a.lags.iter().map(|&k| {
            vec![
                k.to_string(),
                num(a.coefficients[k]),
                cell(p.get(k).copied()),
            ]
        }),
    )?;
    let mut chart = Chart::new(
        format!("{indicator}: autocorrelation"),
        a.lags.iter().map(|k| k.to_string()).collect(),
    );
    chart.lines.push(Line::new("acf", &a.coefficients));
    chart.lines.push(Line::new("pacf", &p));
    chart.band = Some((
        vec![-a.confidence_band; a.lags.len()],
        vec![a.confidence_band; a.lags.len()],
    ));
    chart.reference = Some(0.0);
    out.text("acf.svg", &chart.render())?;

    let season = weekly_fractions(&s)?;
    out.csv(
        "weekday_fractions.csv",
        &["day", "fraction"],
        WEEKDAY_NAMES
            .iter()
            .zip(season.day_fractions)
            .map(|(d, f)| vec![d.to_string(), num(f)]),
    )?;
    let mut chart = Chart::new(
        format!("{indicator}: weekday share ({} weeks)", season.weeks_used),
        WEEKDAY_NAMES.iter().map(|d| d[..3].to_string()).collect(),
    );
    chart
        .lines
        .push(Line::new("fraction", &season.day_fractions));
    chart.reference = Some(1.0 / 7.0);
    out.text("weekday_fractions.svg", &chart.render())?;

    let hp = hp_filter(&s, lambda)?;
    out.csv(
        "trend.csv",
        &["date", "value", "trend", "residual"],
        (0..s.len()).map(|i| {
            vec![
                x_dates[i].clone(),
                num(s.values()[i]),
                num(hp.trend[i]),
                num(hp.residual[i]),
            ]
        }),
    )?;
    let mut chart = Chart::new(format!("{indicator}: trend"), x_dates.clone());
    chart.lines.push(Line::new("value", s.values()));
    chart.lines.push(Line::new("trend", &hp.trend));
    out.text("trend.svg", &chart.render())?;

    let m = macd(&s, 12, 26, 9)?;
    out.csv(
        "macd.csv",
        &["date", "macd", "signal", "histogram"],
        (0..s.len()).map(|i| {
            vec![
                x_dates[i].clone(),
                num(m.macd_line.values()[i]),
                num(m.signal_line.values()[i]),
                num(m.histogram.values()[i]),
            ]
        }),
    )?;
    let mut chart = Chart::new(format!("{indicator}: MACD 12/26/9"), x_dates.clone());
    chart.lines.push(Line::new("macd", m.macd_line.values()));
    chart
        .lines
        .push(Line::new("signal", m.signal_line.values()));
    chart.reference = Some(0.0);
    out.text("macd.svg", &chart.render())?;

    if indicator != Indicator::NewDiagnoses {
        if let Ok(diag) = indicator_series(cfg, Indicator::NewDiagnoses) {
            let from = s.start_date().max(diag.start_date());
            let to = s.end_date().min(diag.end_date());
            if to >= from && ((to - from).num_days() as usize) >= window {
                let cut = |t: &TimeSeries| {
                    t.slice(t.index_of(from).unwrap(), t.index_of(to).unwrap() + 1)
                };
                let rc = rolling_correlation(&cut(&s)?, &cut(&diag)?, window)?;
                let labels = dates(
                    from + chrono::Duration::days(window as i64 - 1),
                    rc.values.len(),
                );
                out.csv(
                    "correlation.csv",
                    &["date", "correlation"],
                    rc.values
                        .iter()
                        .zip(&labels)
                        .map(|(v, d)| vec![d.clone(), cell(Some(*v))]),
                )?;
                let mut chart = Chart::new(
                    format!("{window}-day correlation of {indicator} and new_diagnoses"),
                    labels,
                );
                chart.lines.push(Line::new("correlation", &rc.values));
                chart.reference = Some(0.0);
                out.text("correlation.svg", &chart.render())?;
            } else {
                log::warn!("too few shared dates for a {window}-day correlation");
            }
        }
    }

    let adf = adf_test(&s)?;
    out.json(
        "summary.json",
        &json!({
            "indicator": indicator,
            "start_date": s.start_date(),
            "end_date": s.end_date(),
            "interpolated_days": s.gaps().len(),
            "adf": adf,
            "adf_critical_values": {"1%": ADF_CRITICAL_VALUES[0], "5%": ADF_CRITICAL_VALUES[1], "10%": ADF_CRITICAL_VALUES[2]},
            "acf_local_maxima": a.local_maxima(),
            "weekday_fractions": season,
        }),
    )
}

fn tag_of(model: ModelChoice) -> Option<ModelTag> {
    match model {
        ModelChoice::Sarima => Some(ModelTag::Sarima),
        ModelChoice::Hw => Some(ModelTag::HoltWinters),
        ModelChoice::Linreg => Some(ModelTag::LinearRegression),
        ModelChoice::Auto => None,
    }
}

fn forecast(
    cfg: &LoadedConfig,
    out: &mut OutDir,
    indicator: Indicator,
    horizon: usize,
    model: ModelChoice,
) -> Result<()> {
    let s = indicator_series(cfg, indicator)?;
    let (chosen, scores): (ForecastResult, Vec<(ModelTag, f64, Vec<f64>)>) = match tag_of(model) {
        Some(tag) => {
            let r = forecast_with(&s, tag, horizon)?;
            let scores = vec![(r.model_tag, r.cv_mae, r.fold_maes.clone())];
            (r, scores)
        }
        None => {
            let cmp = compare_models(&s, horizon)?;
            let scores = cmp
                .ranked
                .iter()
                .map(|r| (r.model_tag, r.cv_mae, r.fold_maes.clone()))
                .collect();
            (
                cmp.ranked.into_iter().next().expect("three models ranked"),
                scores,
            )
        }
    };
    let f = &chosen.point_forecast;
    let tag = chosen.model_tag.to_string();
    out.csv(
        "forecast.csv",
        &["date", "point", "model_tag"],
        (0..f.len()).map(|i| vec![f.date_at(i).to_string(), num(f.values()[i]), tag.clone()]),
    )?;
    out.json(
        "cv_scores.json",
        &scores
            .iter()
            .map(|(t, mae, folds)| json!({"model": t, "cv_mae": mae, "fold_maes": folds}))
            .collect::<Vec<_>>(),
    )?;

    let n = s.len() + f.len();
    let mut history: Vec<f64> = s.values().to_vec();
    history.resize(n, f64::NAN);
    let mut ahead = vec![f64::NAN; s.len() - 1];
    ahead.push(*s.values().last().expect("non-empty series"));
    ahead.extend(f.values());
    let mut chart = Chart::new(
        format!("{indicator}: {tag} forecast"),
        dates(s.start_date(), n),
    );
    chart.lines.push(Line::new("observed", &history));
    chart.lines.push(Line {
        dashed: true,
        ..Line::new("forecast", &ahead)
    });
    chart.divider = Some(s.len());
    out.text("forecast.svg", &chart.render())
}

fn load_params(cfg: &LoadedConfig, path: Option<&Path>) -> Result<DiseaseParams> {
    let params = match path {
        Some(p) => {
            let text = std::fs::read(p).map_err(|e| {
                CliError::data(format!("cannot read parameters {}: {e}", p.display()))
            })?;
            serde_json::from_slice::<DiseaseParams>(&text)
                .map_err(|e| CliError::data(format!("invalid parameters {}: {e}", p.display())))?
        }
        None => cfg.config.disease.clone(),
    };
    params.validate()?;
    Ok(params)
}

fn prepare(cfg: &LoadedConfig) -> Result<ModelInputs> {
    model_inputs(cfg, &cfg.dataset()?)
}

fn scaled(v: &[f64], scale: f64) -> Vec<f64> {
    v.iter().map(|x| x * scale).collect()
}

fn band_rows<'a>(
    band: &'a QuantileBand,
    labels: &'a [String],
    scale: f64,
    boundary: usize,
) -> impl Iterator<Item = Vec<String>> + 'a {
    let stat = band.statistic.to_string();
    labels.iter().enumerate().map(move |(t, d)| {
        vec![
            d.clone(),
            stat.clone(),
            num(band.q10[t] * scale),
            num(band.q50[t] * scale),
            num(band.q90[t] * scale),
            u8::from(t >= boundary).to_string(),
        ]
    })
}

fn band_chart(
    band: &QuantileBand,
    labels: &[String],
    scale: f64,
    observed: Option<&Vec<f64>>,
    boundary: Option<usize>,
    region: &str,
) -> Chart {
    let mut chart = Chart::new(format!("{region}: {}", band.statistic), labels.to_vec());
    chart
        .lines
        .push(Line::new("median", &scaled(&band.q50, scale)));
    if let Some(obs) = observed {
        chart.lines.push(Line {
            dashed: true,
            ..Line::new("observed", &scaled(obs, scale))
        });
    }
    chart.band = Some((scaled(&band.q10, scale), scaled(&band.q90, scale)));
    chart.divider = boundary;
    chart
}

fn write_run(out: &mut OutDir, name: &str, run: &SimResult, labels: &[String]) -> Result<()> {
    let mut header = vec!["day", "date"];
    header.extend(Statistic::ALL.iter().map(|s| s.name()));
    let states: Vec<String> = AgentState::ALL.iter().map(|s| format!("{s:?}")).collect();
    header.extend(states.iter().map(String::as_str));
    let rows = run.days.iter().enumerate().map(|(t, d)| {
        let mut r = vec![t.to_string(), labels[t].clone()];
        r.extend(
            [
                d.new_diagnoses,
                d.new_deaths,
                d.num_critical,
                d.new_infections,
                d.infectious_count,
            ]
            .iter()
            .map(|v| v.to_string()),
        );
        r.extend(d.state_counts.iter().map(|v| v.to_string()));
        r
    });
    out.csv(name, &header, rows)
}

fn simulate(
    cfg: &LoadedConfig,
    out: &mut OutDir,
    params: Option<&Path>,
    days: Option<usize>,
    runs: Option<usize>,
) -> Result<()> {
    let params = load_params(cfg, params)?;
    let inputs = prepare(cfg)?;
    let n_days = days.unwrap_or(inputs.n_days());
    if n_days > inputs.n_days() {
        return Err(CliError::data(format!(
            "requested {n_days} days but the dataset covers {}",
            inputs.n_days()
        )));
    }
    let n_runs = runs.unwrap_or(cfg.config.projection.n_runs);
    let pop = cfg.population()?;
    let results = run_ensemble(
        &pop,
        &params,
        n_days,
        &inputs.tests,
        n_runs,
        cfg.config.seed,
    )?;
    let labels: Vec<String> = (0..n_days).map(|t| inputs.date(t).to_string()).collect();
    let width = (n_runs.max(1) - 1).to_string().len().max(3);
    for (k, r) in results.iter().enumerate() {
        write_run(out, &format!("run_{k:0width$}.csv"), r, &labels)?;
    }
    let mut rows = Vec::new();
    for stat in Statistic::ALL {
        let band = (n_runs >= 2)
            .then(|| quantile_bands(&results, stat))
            .transpose()?;
        let mean = ensemble_mean(&results, stat);
        for t in 0..n_days {
            let q = |f: fn(&QuantileBand) -> &Vec<f64>| {
                band.as_ref()
                    .map_or(String::new(), |b| num(f(b)[t] * inputs.scale))
            };
            rows.push(vec![
                labels[t].clone(),
                stat.to_string(),
                num(mean[t] * inputs.scale),
                q(|b| &b.q10),
                q(|b| &b.q50),
                q(|b| &b.q90),
            ]);
        }
    }
    out.csv(
        "summary.csv",
        &["date", "statistic", "mean", "q10", "q50", "q90"],
        rows,
    )
}

fn calibrate(cfg: &LoadedConfig, out: &mut OutDir) -> Result<()> {
    let inputs = prepare(cfg)?;
    let pop = cfg.population()?;
    let c = &cfg.config.calibration;
    let res = calibrate_windows(
        &inputs.observed,
        &inputs.tests,
        &pop,
        &cfg.config.disease,
        c,
    )?;
    let mut summary = Vec::new();
    for (i, w) in res.windows.iter().enumerate() {
        let mut header = vec!["trial"];
        header.extend(w.names.iter().map(String::as_str));
        header.push("misfit");
        let rows = w.store.trials().iter().enumerate().map(|(k, t)| {
            let mut r = vec![k.to_string()];
            r.extend(t.params.iter().map(|v| num(*v)));
            r.push(num(t.value));
            r
        });
        out.csv(&format!("trials_window_{}.csv", i + 1), &header, rows)?;
        summary.push(json!({
            "window": i + 1,
            "start_date": inputs.date(w.start),
            "end_date": inputs.date(w.end - 1),
            "statistics": w.statistics,
            "best": w.names.iter().zip(&w.best).map(|(n, v)| (n.clone(), *v)).collect::<BTreeMap<_, _>>(),
            "best_misfit": w.best_misfit,
        }));
    }
    out.json("calibration.json", &summary)?;
    out.json("calibrated_params.json", &res.params)
}

fn projection(cfg: &LoadedConfig, out: &mut OutDir, params: Option<&Path>) -> Result<()> {
    let params = load_params(cfg, params)?;
    let inputs = prepare(cfg)?;
    let pop = cfg.population()?;
    let s = &cfg.config.projection;
    let pc = ProjectionConfig {
        horizon: s.horizon,
        n_runs: s.n_runs,
        base_seed: cfg.config.seed,
        beta_multiplier: s.beta_multiplier,
        infectious_period: s.infectious_period,
        ..Default::default()
    };
    let p = project(&pop, &params, &inputs.tests, &pc)?;
    let n = p.tests.len();
    let labels: Vec<String> = (0..n).map(|t| inputs.date(t).to_string()).collect();
    let region = &cfg.config.region;

    let rows = p
        .bands
        .iter()
        .flat_map(|b| band_rows(b, &labels, inputs.scale, p.boundary));
    out.csv(
        "bands.csv",
        &["date", "statistic", "q10", "q50", "q90", "is_forecast"],
        rows,
    )?;
    out.csv(
        "repro.csv",
        &["date", "r_raw", "r_smoothed", "is_forecast"],
        (0..n).map(|t| {
            vec![
                labels[t].clone(),
                cell(p.repro.raw[t]),
                cell(p.repro.smoothed[t]),
                u8::from(t >= p.boundary).to_string(),
            ]
        }),
    )?;
    out.csv(
        "tests.csv",
        &["date", "tests", "is_forecast"],
        (0..n).map(|t| {
            vec![
                labels[t].clone(),
                num(p.tests[t] * inputs.scale),
                u8::from(t >= p.boundary).to_string(),
            ]
        }),
    )?;
    let divider = (pc.horizon > 0).then_some(p.boundary);
    for b in &p.bands {
        let chart = band_chart(
            b,
            &labels,
            inputs.scale,
            inputs.observed.get(&b.statistic),
            divider,
            region,
        );
        out.text(&format!("{}.svg", b.statistic), &chart.render())?;
    }
    let mut chart = Chart::new(format!("{region}: effective reproduction number"), labels);
    chart.lines.push(Line {
        label: format!("R(t), {}-day mean", p.repro.window),
        values: p.repro.smoothed.clone(),
        dashed: false,
    });
    chart.divider = divider;
    chart.reference = Some(1.0);
    out.text("repro.svg", &chart.render())?;
    out.json(
        "projection.json",
        &json!({
            "boundary_date": inputs.date(p.boundary),
            "history_days": p.boundary,
            "horizon": pc.horizon,
            "runs": pc.n_runs,
            "test_source": p.test_source,
            "infectious_period": p.repro.f,
            "scale_factor": inputs.scale,
        }),
    )
}
