use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use chrono::{Days, NaiveDate};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::backtest::mape;
use super::series::{DailySeries, Holiday, HolidayCalendar};
use crate::error::{Error, Result};
use crate::MODEL_FORMAT_VERSION;

/// Prior precisions on the standardized problem (values centred and scaled
/// to unit variance, time scaled to `[0, 1]`): a Laplace prior of scale
/// `1 / changepoint_l1` on slope changes and Gaussian priors of variance
/// `1 / seasonality_l2`, `1 / holiday_l2`. The fit maximises the posterior
/// jointly with the residual variance, so the effective penalty shrinks with
/// the noise level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regularization {
    pub changepoint_l1: f64,
    pub seasonality_l2: f64,
    pub holiday_l2: f64,
}

impl Default for Regularization {
    fn default() -> Self {
        Regularization { changepoint_l1: 20.0, seasonality_l2: 0.01, holiday_l2: 0.01 }
    }
}

impl Regularization {
    pub fn scaled(self, f: f64) -> Self {
        Regularization {
            changepoint_l1: self.changepoint_l1 * f,
            seasonality_l2: self.seasonality_l2 * f,
            holiday_l2: self.holiday_l2 * f,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub n_changepoints: usize,
    /// Leading fraction of the history that may hold changepoints.
    pub changepoint_range: f64,
    /// Fourier order of the weekly term; 0 disables it.
    pub weekly_order: usize,
    /// Fourier order of the yearly term; 0 disables it.
    pub yearly_order: usize,
    /// Yearly seasonality is only fitted on at least this many days.
    pub yearly_min_days: usize,
    pub reg: Regularization,
    /// Fit `ln y` and exponentiate predictions.
    pub log_domain: bool,
    pub max_sweeps: usize,
    pub tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            n_changepoints: 25,
            changepoint_range: 0.8,
            weekly_order: 3,
            yearly_order: 10,
            yearly_min_days: 730,
            reg: Regularization::default(),
            log_domain: false,
            max_sweeps: 100_000,
            tol: 1e-10,
        }
    }
}

/// Fourier seasonality; `coeffs` holds `[sin 1, cos 1, sin 2, cos 2, ...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seasonality {
    pub name: String,
    pub period: f64,
    pub order: usize,
    pub coeffs: Vec<f64>,
}

fn fourier(period: f64, order: usize, epoch_day: f64) -> impl Iterator<Item = f64> {
    (1..=order).flat_map(move |k| {
        let x = 2.0 * PI * k as f64 * epoch_day / period;
        [x.sin(), x.cos()]
    })
}

fn epoch_day(date: NaiveDate) -> f64 {
    (date - NaiveDate::default()).num_days() as f64
}

impl Seasonality {
    pub fn value(&self, date: NaiveDate) -> f64 {
        fourier(self.period, self.order, epoch_day(date)).zip(&self.coeffs).map(|(f, c)| f * c).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub in_sample_mape: f64,
    /// Of the penalized Gram matrix of the smooth terms.
    pub condition_number: f64,
    pub sweeps: usize,
    pub converged: bool,
}

/// Additive model: piecewise-linear trend + Fourier seasonality + holiday
/// effects. Trend parameters are in value units per day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastModel {
    pub format_version: u32,
    pub start: NaiveDate,
    pub train_days: usize,
    pub log_domain: bool,
    pub intercept: f64,
    pub base_slope: f64,
    pub changepoints: Vec<NaiveDate>,
    pub slope_deltas: Vec<f64>,
    pub seasonalities: Vec<Seasonality>,
    pub holiday_effects: BTreeMap<String, f64>,
    /// Calendar used for prediction, restricted to holidays with an effect.
    pub holidays: Vec<Holiday>,
    pub sigma: f64,
    pub diagnostics: FitDiagnostics,
}

fn changepoint_indices(n: usize, count: usize, range: f64) -> Vec<usize> {
    let hist = (n as f64 * range).floor() as usize;
    if count == 0 || hist < 2 {
        return Vec::new();
    }
    let last = (hist - 1) as f64;
    let mut idx: Vec<usize> = (1..=count).map(|k| (last * k as f64 / count as f64).round() as usize).collect();
    idx.dedup();
    idx.retain(|&i| i > 0);
    idx
}

fn soft_threshold(x: f64, l: f64) -> f64 {
    x.signum() * (x.abs() - l).max(0.0)
}

const MAX_VARIANCE_ROUNDS: usize = 60;
const MIN_VARIANCE: f64 = 1e-20;

struct Problem<'a> {
    gram: &'a DMatrix<f64>,
    bs: &'a DVector<f64>,
    cross: &'a DMatrix<f64>,
    bd: &'a DVector<f64>,
    gdd: &'a DMatrix<f64>,
    prior: &'a [f64],
}

struct Solution {
    beta: DVector<f64>,
    delta: DVector<f64>,
    condition_number: f64,
    sweeps: usize,
    converged: bool,
}

impl Problem<'_> {
    /// Minimise `|r|^2 / 2n + w (l1 |delta| + sum l2_k beta_k^2 / 2)`.
    fn solve(&self, w: f64, start: &DVector<f64>, cfg: &FitConfig) -> Result<Solution> {
        let ps = self.gram.nrows();
        let mut a = self.gram.clone();
        for k in 0..ps {
            a[(k, k)] += w * self.prior[k];
        }
        let eig = SymmetricEigen::new(a.clone()).eigenvalues;
        let (lo, hi) = (eig.min(), eig.max());
        let condition_number = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !(condition_number < 1e12) {
            return Err(Error::numerical(format!(
                "design matrix is singular (condition number {condition_number:.3e})"
            )));
        }
        let chol = a.cholesky().ok_or_else(|| Error::numerical("Cholesky factorisation of the design failed"))?;
        let a_inv_cross = chol.solve(self.cross);
        let a_inv_bs = chol.solve(self.bs);
        // quadratic in the slope changes after profiling out the smooth block
        let s = self.gdd - self.cross.transpose() * &a_inv_cross;
        let c = self.bd - self.cross.transpose() * &a_inv_bs;
        let l1 = w * self.prior[ps];

        let pd = start.len();
        let mut delta = start.clone();
        let mut s_delta = &s * &delta;
        let mut sweeps = 0;
        let mut converged = pd == 0;
        while !converged && sweeps < cfg.max_sweeps {
            sweeps += 1;
            let mut biggest = 0.0f64;
            for j in 0..pd {
                let sjj = s[(j, j)];
                let new = if sjj > 1e-12 { soft_threshold(c[j] - s_delta[j] + sjj * delta[j], l1) / sjj } else { 0.0 };
                let step = new - delta[j];
                if step != 0.0 {
                    delta[j] = new;
                    s_delta.axpy(step, &s.column(j), 1.0);
                    biggest = biggest.max(step.abs() * sjj.sqrt());
                }
            }
            converged = biggest < cfg.tol;
        }
        let beta = &a_inv_bs - &a_inv_cross * &delta;
        Ok(Solution { beta, delta, condition_number, sweeps, converged })
    }
}

/// Fit the additive model to `series`. Values must be positive.
pub fn fit(series: &DailySeries, holidays: &HolidayCalendar, cfg: &FitConfig) -> Result<ForecastModel> {
    let n = series.len();
    if n < 14 {
        return Err(Error::invalid(format!("series of {n} days is shorter than two weeks")));
    }
    if let Some(i) = series.values.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::invalid(format!(
            "non-positive value {} on {}; the model expects positive traffic",
            series.values[i],
            series.date(i)
        )));
    }
    let y: Vec<f64> = if cfg.log_domain { series.values.iter().map(|v| v.ln()).collect() } else { series.values.clone() };
    let mean = y.iter().sum::<f64>() / n as f64;
    let sd = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let sd = if sd > 0.0 { sd } else { 1.0 };
    let ys = DVector::from_iterator(n, y.iter().map(|v| (v - mean) / sd));
    let span = (n - 1) as f64;
    let dates = series.dates();

    let mut seasons: Vec<(&str, f64, usize)> = Vec::new();
    if cfg.weekly_order > 0 {
        seasons.push(("weekly", 7.0, cfg.weekly_order));
    }
    if cfg.yearly_order > 0 && n >= cfg.yearly_min_days {
        seasons.push(("yearly", 365.25, cfg.yearly_order));
    }
    let mut hol_names: Vec<String> = dates.iter().flat_map(|d| holidays.on(*d).map(str::to_string)).collect();
    hol_names.sort();
    hol_names.dedup();

    // smooth block: intercept, slope, Fourier, holidays
    let n_fourier: usize = seasons.iter().map(|s| 2 * s.2).sum();
    let ps = 2 + n_fourier + hol_names.len();
    let mut xs = DMatrix::<f64>::zeros(n, ps);
    let mut prior = vec![0.0; ps + 1];
    prior[2..2 + n_fourier].iter_mut().for_each(|p| *p = cfg.reg.seasonality_l2);
    prior[2 + n_fourier..ps].iter_mut().for_each(|p| *p = cfg.reg.holiday_l2);
    // last slot: changepoint weight
    prior[ps] = cfg.reg.changepoint_l1;
    for (i, date) in dates.iter().enumerate() {
        xs[(i, 0)] = 1.0;
        xs[(i, 1)] = i as f64 / span;
        let mut col = 2;
        for &(_, period, order) in &seasons {
            for f in fourier(period, order, epoch_day(*date)) {
                xs[(i, col)] = f;
                col += 1;
            }
        }
        for name in holidays.on(*date) {
            let k = hol_names.binary_search_by(|h| h.as_str().cmp(name)).expect("collected above");
            xs[(i, col + k)] = 1.0;
        }
    }
    let cps = changepoint_indices(n, cfg.n_changepoints, cfg.changepoint_range);
    let xd = DMatrix::from_fn(n, cps.len(), |i, j| (i as f64 - cps[j] as f64).max(0.0) / span);

    let nf = n as f64;
    let gram = xs.transpose() * &xs / nf;
    let bs = xs.transpose() * &ys / nf;
    let cross = xs.transpose() * &xd / nf;
    let bd = xd.transpose() * &ys / nf;
    let gdd = xd.transpose() * &xd / nf;
    let problem = Problem { gram: &gram, bs: &bs, cross: &cross, bd: &bd, gdd: &gdd, prior: &prior };

    let mut sigma2 = 1.0f64;
    let mut delta = DVector::<f64>::zeros(cps.len());
    let mut sol = problem.solve(sigma2 / nf, &delta, cfg)?;
    for _ in 0..MAX_VARIANCE_ROUNDS {
        delta = sol.delta.clone();
        let resid = &ys - &xs * &sol.beta - &xd * &sol.delta;
        let next = (resid.norm_squared() / nf).max(MIN_VARIANCE);
        if (next - sigma2).abs() <= 1e-6 * sigma2 {
            break;
        }
        sigma2 = next;
        sol = problem.solve(sigma2 / nf, &delta, cfg)?;
    }
    if !sol.converged {
        log::warn!("changepoint solver stopped after {} sweeps without converging", sol.sweeps);
    }
    let (beta, delta, condition_number, sweeps, converged) =
        (sol.beta, sol.delta, sol.condition_number, sol.sweeps, sol.converged);

    let mut col = 2;
    let seasonalities = seasons
        .iter()
        .map(|&(name, period, order)| {
            let coeffs = (0..2 * order).map(|k| sd * beta[col + k]).collect();
            col += 2 * order;
            Seasonality { name: name.to_string(), period, order, coeffs }
        })
        .collect();
    let holiday_effects: BTreeMap<String, f64> =
        hol_names.iter().enumerate().map(|(k, h)| (h.clone(), sd * beta[col + k])).collect();
    let mut model = ForecastModel {
        format_version: MODEL_FORMAT_VERSION,
        start: series.start,
        train_days: n,
        log_domain: cfg.log_domain,
        intercept: mean + sd * beta[0],
        base_slope: sd * beta[1] / span,
        changepoints: cps.iter().map(|&i| series.date(i)).collect(),
        slope_deltas: delta.iter().map(|d| sd * d / span).collect(),
        seasonalities,
        holidays: holidays.entries().iter().filter(|h| holiday_effects.contains_key(&h.name)).cloned().collect(),
        holiday_effects,
        sigma: 0.0,
        diagnostics: FitDiagnostics { in_sample_mape: 0.0, condition_number, sweeps, converged },
    };
    let fitted = model.predict(&dates);
    model.sigma = (series.values.iter().zip(&fitted).map(|(a, p)| (a - p).powi(2)).sum::<f64>() / nf).sqrt();
    model.diagnostics.in_sample_mape = mape(&series.values, &fitted)?;
    Ok(model)
}

impl ForecastModel {
    fn day(&self, date: NaiveDate) -> f64 {
        (date - self.start).num_days() as f64
    }

    /// Trend component at `date`; beyond the last changepoint it continues
    /// with the final slope.
    pub fn trend(&self, date: NaiveDate) -> f64 {
        let d = self.day(date);
        let bends: f64 =
            self.changepoints.iter().zip(&self.slope_deltas).map(|(c, k)| k * (d - self.day(*c)).max(0.0)).sum();
        self.intercept + self.base_slope * d + bends
    }

    /// Slope after the last changepoint, per day.
    pub fn final_slope(&self) -> f64 {
        self.base_slope + self.slope_deltas.iter().sum::<f64>()
    }

    pub fn predict(&self, dates: &[NaiveDate]) -> Vec<f64> {
        let cal = HolidayCalendar::new(self.holidays.clone());
        dates
            .iter()
            .map(|&date| {
                let s: f64 = self.seasonalities.iter().map(|s| s.value(date)).sum();
                let h: f64 = cal.on(date).filter_map(|n| self.holiday_effects.get(n)).sum();
                let v = self.trend(date) + s + h;
                if self.log_domain {
                    v.exp()
                } else {
                    v
                }
            })
            .collect()
    }

    /// Predictions for the `days` days after the training window.
    pub fn forecast(&self, days: usize) -> Vec<(NaiveDate, f64)> {
        let dates: Vec<NaiveDate> =
            (0..days).map(|k| self.start + Days::new((self.train_days + k) as u64)).collect();
        let values = self.predict(&dates);
        dates.into_iter().zip(values).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: ForecastModel = serde_json::from_str(s)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::invalid(format!("unsupported model format version {}", m.format_version)));
        }
        if m.changepoints.len() != m.slope_deltas.len() {
            return Err(Error::invalid("changepoints and slope_deltas differ in length"));
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
        Self::from_json(&s)
    }
}
