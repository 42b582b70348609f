use chrono::{Days, NaiveDate};
use eiot_core::forecast::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn day0() -> NaiveDate {
    NaiveDate::from_ymd_opt(2016, 9, 1).unwrap()
}

fn series(values: Vec<f64>) -> DailySeries {
    DailySeries::new(day0(), values).unwrap()
}

fn no_holidays() -> HolidayCalendar {
    HolidayCalendar::default()
}

/// Two-slope trend with a weekday/weekend swing.
fn two_regime(n: usize, change: usize, noise: f64, seed: u64) -> DailySeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = Normal::new(0.0, 1.0).unwrap();
    let v = (0..n)
        .map(|i| {
            let t = i as f64;
            let trend = 200.0 + t + 2.0 * (t - change as f64).max(0.0);
            let week = 40.0 * (2.0 * std::f64::consts::PI * t / 7.0).sin();
            (trend + week) * (1.0 + noise * eps.sample(&mut rng))
        })
        .collect();
    series(v)
}

#[test]
fn straight_line_is_recovered() {
    let s = series((0..200).map(|t| 2.0 * t as f64 + 5.0).collect());
    let m = fit(&s, &no_holidays(), &FitConfig::default()).unwrap();
    assert!((m.base_slope - 2.0).abs() < 1e-3, "{}", m.base_slope);
    assert!(m.slope_deltas.iter().all(|d| d.abs() < 1e-3), "{:?}", m.slope_deltas);
    assert!(m.diagnostics.in_sample_mape < 1e-3);
}

#[test]
fn dominant_changepoint_near_truth() {
    let s = two_regime(730, 400, 0.0, 1);
    let m = fit(&s, &no_holidays(), &FitConfig::default()).unwrap();
    let (j, _) = m.slope_deltas.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap();
    let at = (m.changepoints[j] - day0()).num_days();
    assert!((at - 400).abs() <= 14, "dominant change at day {at}");
}

#[test]
fn holiday_spikes_are_separated() {
    let cal = HolidayCalendar::new(
        [10u64, 50, 90, 130, 170]
            .iter()
            .map(|&d| Holiday { date: day0() + Days::new(d), name: "spike".into() })
            .collect(),
    );
    let v = (0..200).map(|i| if [10, 50, 90, 130, 170].contains(&i) { 110.0 } else { 100.0 }).collect();
    let m = fit(&series(v), &cal, &FitConfig::default()).unwrap();
    assert!((m.holiday_effects["spike"] - 10.0).abs() < 0.1, "{:?}", m.holiday_effects);
    assert!(m.final_slope().abs() < 1e-3);
}

#[test]
fn noiseless_fit_reproduces_training_values() {
    // candidate changepoints of a 500-day fit sit at round(399 k / 25); k = 9 gives 144
    let s = two_regime(500, 144, 0.0, 1);
    let m = fit(&s, &no_holidays(), &FitConfig::default()).unwrap();
    let p = m.predict(&s.dates());
    for (a, b) in s.values.iter().zip(&p) {
        assert!(((a - b) / a).abs() < 1e-3);
    }
}

#[test]
fn trend_only_predictions_lie_on_the_line() {
    let cfg = FitConfig { weekly_order: 0, yearly_order: 0, ..Default::default() };
    let m = fit(&two_regime(300, 100, 0.05, 2), &no_holidays(), &cfg).unwrap();
    let dates: Vec<NaiveDate> = (0..400).map(|k| day0() + Days::new(k)).collect();
    for (d, p) in dates.iter().zip(m.predict(&dates)) {
        assert_eq!(p, m.trend(*d));
    }
}

#[test]
fn weekly_steps_follow_final_slope() {
    let m = fit(&two_regime(400, 150, 0.05, 3), &no_holidays(), &FitConfig::default()).unwrap();
    let last = *m.changepoints.last().unwrap();
    let a = last + Days::new(30);
    let b = a + Days::new(7);
    let p = m.predict(&[a, b]);
    assert!((p[1] - p[0] - 7.0 * m.final_slope()).abs() < 1e-9 * p[0].abs());
}

#[test]
fn constant_shift_moves_predictions() {
    let s = two_regime(365, 120, 0.1, 4);
    let shifted = series(s.values.iter().map(|v| v + 250.0).collect());
    let cfg = FitConfig::default();
    let a = fit(&s, &no_holidays(), &cfg).unwrap();
    let b = fit(&shifted, &no_holidays(), &cfg).unwrap();
    let dates: Vec<NaiveDate> = (0..500).map(|k| day0() + Days::new(k)).collect();
    for (x, y) in a.predict(&dates).iter().zip(b.predict(&dates)) {
        assert!((y - x - 250.0).abs() < 1e-6, "{x} {y}");
    }
}

#[test]
fn calendar_labels_only_matter_through_weekday() {
    let s = two_regime(365, 120, 0.1, 5);
    let moved = DailySeries::new(day0() + Days::new(7 * 30), s.values.clone()).unwrap();
    let cfg = FitConfig::default();
    let a = fit(&s, &no_holidays(), &cfg).unwrap().forecast(60);
    let b = fit(&moved, &no_holidays(), &cfg).unwrap().forecast(60);
    for (x, y) in a.iter().zip(&b) {
        assert!((x.1 - y.1).abs() < 1e-6 * x.1.abs());
    }
}

#[test]
fn weaker_penalty_fits_no_worse() {
    let s = two_regime(365, 120, 0.1, 6);
    let (mut last_sigma, mut last_mape) = (f64::INFINITY, f64::INFINITY);
    for f in [100.0, 10.0, 1.0, 0.1, 0.01, 0.0] {
        let cfg = FitConfig { reg: Regularization::default().scaled(f), ..Default::default() };
        let m = fit(&s, &no_holidays(), &cfg).unwrap();
        // squared error is the fitted loss; MAPE tracks it up to a small slack
        assert!(m.sigma <= last_sigma * (1.0 + 1e-9), "scale {f}: {} > {last_sigma}", m.sigma);
        assert!(m.diagnostics.in_sample_mape <= last_mape * (1.0 + 1e-4), "scale {f}");
        last_sigma = m.sigma;
        last_mape = m.diagnostics.in_sample_mape;
    }
}

#[test]
fn model_json_round_trip() {
    let m = fit(&two_regime(400, 150, 0.05, 7), &HolidayCalendar::finnish(), &FitConfig::default()).unwrap();
    let back = ForecastModel::from_json(&m.to_json().unwrap()).unwrap();
    assert_eq!(back, m);
}

#[test]
fn fit_errors() {
    assert!(fit(&series(vec![1.0; 10]), &no_holidays(), &FitConfig::default()).is_err());
    let mut v = vec![1.0; 30];
    v[3] = 0.0;
    assert!(fit(&series(v), &no_holidays(), &FitConfig::default()).is_err());
    // a holiday on every day duplicates the intercept
    let every = HolidayCalendar::new((0..30).map(|d| Holiday { date: day0() + Days::new(d), name: "x".into() }).collect());
    let cfg = FitConfig { reg: Regularization { holiday_l2: 0.0, ..Default::default() }, ..Default::default() };
    let err = fit(&series((0..30).map(|i| 10.0 + i as f64).collect()), &every, &cfg).unwrap_err();
    assert_eq!(err.class(), eiot_core::ErrorClass::Numerical);
    assert!(err.to_string().contains("condition number"));
}

#[test]
fn cutoff_rule() {
    assert_eq!(ShfConfig::default().cutoffs(730).unwrap(), vec![365, 455, 545]);
    let one = ShfConfig { train_days: 100, horizons: vec![30], period_days: 1000 };
    assert_eq!(one.cutoffs(400).unwrap(), vec![100]);
    let err = ShfConfig::default().cutoffs(500).unwrap_err();
    assert!(err.to_string().contains("smaller horizons"));
}

#[test]
fn mape_examples() {
    assert_eq!(mape(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
    assert!((mape(&[100.0], &[85.0]).unwrap() - 0.15).abs() < 1e-15);
    assert_eq!(mape_counted(&[0.0, 10.0], &[5.0, 11.0]).unwrap(), (0.1, 1));
    assert!(mape(&[0.0, 0.0], &[1.0, 1.0]).is_err());
    assert!(mape(&[1.0], &[1.0, 2.0]).is_err());
}

proptest! {
    #[test]
    fn mape_matches_elementwise(pairs in proptest::collection::vec((0.1f64..1e3, -1e3f64..1e3), 1..50)) {
        let (a, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let mut total = 0.0;
        for i in 0..a.len() {
            total += (a[i] - p[i]).abs() / a[i].abs();
        }
        prop_assert!((mape(&a, &p).unwrap() - total / a.len() as f64).abs() < 1e-12);
    }
}

#[test]
fn perfect_forecast_scores_zero() {
    // exactly linear: every fit extrapolates without error
    let s = series((0..730).map(|t| 50.0 + 0.5 * t as f64).collect());
    let cfg = FitConfig { weekly_order: 0, ..Default::default() };
    let r = shf_backtest(&s, &ShfConfig::default(), &no_holidays(), &cfg).unwrap();
    assert_eq!(r.rows.len(), 3 * 6);
    assert!(r.by_horizon.iter().all(|(_, m)| *m < 1e-9), "{:?}", r.by_horizon);
}

#[test]
fn backtest_band_on_two_regime_series() {
    let cfg = FitConfig::default();
    let noisy = shf_backtest(&two_regime(730, 200, 0.15, 9), &ShfConfig::default(), &no_holidays(), &cfg).unwrap();
    let clean = shf_backtest(&two_regime(730, 200, 0.0, 9), &ShfConfig::default(), &no_holidays(), &cfg).unwrap();
    assert!(noisy.by_horizon.iter().all(|(_, m)| (0.10..=0.20).contains(m)));
    assert!(clean.by_horizon.iter().all(|(_, m)| *m < 0.02));
}
