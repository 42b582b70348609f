use std::path::Path;

use eiot_core::forecast::{
    fit as fit_model, shf_backtest, DailySeries, FitConfig, ForecastModel, HolidayCalendar, Regularization, ShfConfig,
};
use serde_json::json;

use crate::args::{BacktestArgs, ForecastFitArgs, ForecastPredictArgs, HolidayArgs, ModelArgs};
use crate::output::Output;
use crate::Outcome;

fn calendar(args: &HolidayArgs) -> eiot_core::Result<HolidayCalendar> {
    match (&args.holidays, args.no_holidays) {
        (_, true) => Ok(HolidayCalendar::default()),
        (Some(p), false) => HolidayCalendar::read_csv(p),
        (None, false) => Ok(HolidayCalendar::finnish()),
    }
}

fn config(args: &ModelArgs) -> FitConfig {
    FitConfig {
        n_changepoints: args.changepoints,
        changepoint_range: args.changepoint_range,
        weekly_order: args.weekly_order,
        yearly_order: args.yearly_order,
        reg: Regularization {
            changepoint_l1: args.changepoint_l1,
            seasonality_l2: args.seasonality_l2,
            holiday_l2: args.holiday_l2,
        },
        log_domain: args.log_domain,
        ..Default::default()
    }
}

pub fn fit(dir: &Path, args: &ForecastFitArgs) -> Outcome {
    let series = DailySeries::read_csv(&args.series)?;
    let holidays = calendar(&args.holidays)?;
    let out = Output::new(dir, "forecast fit", args, None)?;
    let model = fit_model(&series, &holidays, &config(&args.model))?;
    out.text("forecast_model.json", &(model.to_json()? + "\n"))?;
    let dates = series.dates();
    let fitted = model.predict(&dates);
    out.table(
        "fitted.csv",
        &["date", "actual", "fitted", "trend"],
        dates.iter().zip(&series.values).zip(&fitted).map(|((d, a), f)| {
            vec![d.to_string(), a.to_string(), f.to_string(), model.trend(*d).to_string()]
        }),
    )?;
    Ok(())
}

pub fn predict(dir: &Path, args: &ForecastPredictArgs) -> Outcome {
    let model = ForecastModel::load(&args.model)?;
    let out = Output::new(dir, "forecast predict", args, None)?;
    out.table(
        "forecast.csv",
        &["date", "forecast", "trend"],
        model.forecast(args.days).into_iter().map(|(d, y)| vec![d.to_string(), y.to_string(), model.trend(d).to_string()]),
    )?;
    Ok(())
}

pub fn backtest(dir: &Path, args: &BacktestArgs) -> Outcome {
    let series = DailySeries::read_csv(&args.series)?;
    let holidays = calendar(&args.holidays)?;
    let shf = ShfConfig { train_days: args.train, horizons: args.horizons.0.clone(), period_days: args.period };
    let out = Output::new(dir, "forecast backtest", args, None)?;
    let report = shf_backtest(&series, &shf, &holidays, &config(&args.model))?;
    out.table(
        "backtest.csv",
        &["cutoff", "horizon", "mape", "excluded_zero"],
        report.rows.iter().map(|r| {
            vec![
                r.cutoff.to_string(),
                r.horizon.to_string(),
                r.mape.map(|m| m.to_string()).unwrap_or_default(),
                r.excluded_zero.to_string(),
            ]
        }),
    )?;
    out.table(
        "backtest_summary.csv",
        &["horizon", "mape"],
        report.by_horizon.iter().map(|(h, m)| vec![h.to_string(), m.to_string()]),
    )?;
    let cutoffs: Vec<String> = shf.cutoffs(series.len())?.iter().map(|&c| series.date(c).to_string()).collect();
    out.json("backtest_cutoffs.json", &json!({ "cutoffs": cutoffs }))?;
    Ok(())
}
