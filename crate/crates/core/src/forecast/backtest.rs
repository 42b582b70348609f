use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use chrono::NaiveDate;

use super::model::{fit, FitConfig};
use super::series::{DailySeries, HolidayCalendar};
use crate::error::{Error, Result};

/// Mean absolute percentage error as a fraction. Points with a zero actual
/// are skipped; see [`mape_counted`].
pub fn mape(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    mape_counted(actual, predicted).map(|(m, _)| m)
}

/// MAPE together with the number of zero actuals left out.
pub fn mape_counted(actual: &[f64], predicted: &[f64]) -> Result<(f64, usize)> {
    if actual.len() != predicted.len() {
        return Err(Error::invalid(format!("length mismatch: {} actual vs {} predicted", actual.len(), predicted.len())));
    }
    let (sum, used) = actual
        .iter()
        .zip(predicted)
        .filter(|(a, _)| **a != 0.0)
        .fold((0.0, 0usize), |(s, k), (a, p)| (s + ((a - p) / a).abs(), k + 1));
    if used == 0 {
        return Err(Error::invalid("MAPE is undefined: no non-zero actual values"));
    }
    Ok((sum / used as f64, actual.len() - used))
}

/// Rolling-origin evaluation windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShfConfig {
    pub train_days: usize,
    pub horizons: Vec<usize>,
    pub period_days: usize,
}

impl Default for ShfConfig {
    fn default() -> Self {
        ShfConfig { train_days: 365, horizons: (1..=6).map(|k| 30 * k).collect(), period_days: 90 }
    }
}

impl ShfConfig {
    /// Cutoffs `train, train + period, ...` while the longest horizon still
    /// fits in the series. A cutoff is the index of the first forecast day.
    pub fn cutoffs(&self, len: usize) -> Result<Vec<usize>> {
        if self.train_days < 14 || self.period_days == 0 {
            return Err(Error::invalid("train_days must be >= 14 and period_days > 0"));
        }
        let Some(&longest) = self.horizons.iter().max() else {
            return Err(Error::invalid("no horizons given"));
        };
        if self.horizons.contains(&0) {
            return Err(Error::invalid("horizons must be positive"));
        }
        let cuts: Vec<usize> =
            (self.train_days..).step_by(self.period_days).take_while(|c| c + longest <= len).collect();
        if cuts.is_empty() {
            return Err(Error::invalid(format!(
                "no feasible cutoff: {} training + {longest} horizon days exceed the {len}-day series; use smaller horizons or a shorter training window",
                self.train_days
            )));
        }
        Ok(cuts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestRow {
    pub cutoff: NaiveDate,
    pub horizon: usize,
    pub mape: Option<f64>,
    pub excluded_zero: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub rows: Vec<BacktestRow>,
    /// Mean MAPE over cutoffs, per horizon.
    pub by_horizon: Vec<(usize, f64)>,
}

/// Fit on the trailing `train_days` before each cutoff and score the first
/// `h` forecast days for every horizon `h`.
pub fn shf_backtest(
    series: &DailySeries,
    cfg: &ShfConfig,
    holidays: &HolidayCalendar,
    fit_cfg: &FitConfig,
) -> Result<BacktestReport> {
    let cuts = cfg.cutoffs(series.len())?;
    let longest = *cfg.horizons.iter().max().expect("checked by cutoffs");
    let per_cut: Vec<Vec<BacktestRow>> = cuts
        .par_iter()
        .map(|&cut| {
            let model = fit(&series.slice(cut - cfg.train_days..cut)?, holidays, fit_cfg)?;
            let predicted: Vec<f64> = model.forecast(longest).into_iter().map(|p| p.1).collect();
            let actual = &series.values[cut..cut + longest];
            cfg.horizons
                .iter()
                .map(|&h| {
                    let scored = mape_counted(&actual[..h], &predicted[..h]);
                    let excluded_zero = actual[..h].iter().filter(|a| **a == 0.0).count();
                    Ok(BacktestRow { cutoff: series.date(cut), horizon: h, mape: scored.ok().map(|s| s.0), excluded_zero })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let rows: Vec<BacktestRow> = per_cut.into_iter().flatten().collect();
    let by_horizon = cfg
        .horizons
        .iter()
        .filter_map(|&h| {
            let v: Vec<f64> = rows.iter().filter(|r| r.horizon == h).filter_map(|r| r.mape).collect();
            (!v.is_empty()).then(|| (h, v.iter().sum::<f64>() / v.len() as f64))
        })
        .collect();
    Ok(BacktestReport { rows, by_horizon })
}
