use std::collections::BTreeMap;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, TimeRange};
use crate::error::{Error, Result};

/// Which byte counter a series is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Direction {
    #[default]
    Total,
    Uplink,
    Downlink,
}

/// One value per hour of an analysis window; hours without records are 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlySeries {
    pub device_id: String,
    pub values: Vec<f64>,
}

/// Build one [`HourlySeries`] per device with traffic in `window`, ordered by device id.
pub fn hourly_series(ds: &Dataset, window: TimeRange, direction: Direction) -> Vec<HourlySeries> {
    let n = window.hours();
    let mut out: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in ds.records_in(window) {
        let idx = window.hour_index(r.hour).expect("record inside window");
        let v = match direction {
            Direction::Total => r.total_bytes(),
            Direction::Uplink => r.uplink_bytes,
            Direction::Downlink => r.downlink_bytes,
        };
        out.entry(&r.device_id).or_insert_with(|| vec![0.0; n])[idx] += v as f64;
    }
    out.into_iter()
        .map(|(d, values)| HourlySeries { device_id: d.to_string(), values })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPeak {
    pub device_id: String,
    pub peak_power: f64,
    pub period_hours: f64,
}

/// Periodogram `|X_k|^2 / n` for every bin `k = 0..n`.
///
/// With this normalization the bins sum to the series energy `sum x_t^2`.
pub fn periodogram(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.iter().map(|c| c.norm_sqr() / n as f64).collect()
}

/// Dominant periodic component of a device's hourly series.
///
/// Searches bins `1 <= k < n/2`, skipping the mean (DC) and the Nyquist bin.
/// Ties go to the lowest frequency.
pub fn periodogram_peak(series: &HourlySeries) -> Result<SpectrumPeak> {
    let n = series.values.len();
    if n < 48 {
        return Err(Error::invalid(format!(
            "device {}: series of {n} hours is shorter than 48",
            series.device_id
        )));
    }
    if series.values.iter().all(|v| *v == 0.0) {
        return Err(Error::invalid(format!("device {} is inactive (all-zero series)", series.device_id)));
    }
    let p = periodogram(&series.values);
    let upper = n.div_ceil(2); // exclusive; drops k = n/2 for even n
    let (k, power) = (1..upper)
        .map(|k| (k, p[k]))
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    Ok(SpectrumPeak {
        device_id: series.device_id.clone(),
        peak_power: power,
        period_hours: n as f64 / k as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn naive_dft_power(x: &[f64], k: usize) -> f64 {
        let n = x.len() as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for (t, v) in x.iter().enumerate() {
            let ang = -2.0 * PI * k as f64 * t as f64 / n;
            re += v * ang.cos();
            im += v * ang.sin();
        }
        (re * re + im * im) / n
    }

    fn series(values: Vec<f64>) -> HourlySeries {
        HourlySeries { device_id: "d".into(), values }
    }

    #[test]
    fn daily_cosine() {
        let v: Vec<f64> = (0..720).map(|t| 5.0 + (2.0 * PI * t as f64 / 24.0).cos()).collect();
        assert_eq!(periodogram_peak(&series(v)).unwrap().period_hours, 24.0);
    }

    #[test]
    fn dominant_of_two_tones() {
        let v: Vec<f64> = (0..720)
            .map(|t| {
                let t = t as f64;
                10.0 + 2.0 * (2.0 * PI * t / 24.0).sin() + (2.0 * PI * t / 12.0).sin()
            })
            .collect();
        assert_eq!(periodogram_peak(&series(v)).unwrap().period_hours, 24.0);
    }

    #[test]
    fn impulse_train_matches_naive_dft() {
        let v: Vec<f64> = (0..720).map(|t| if t % 6 == 0 { 100.0 } else { 0.0 }).collect();
        let peak = periodogram_peak(&series(v.clone())).unwrap();
        assert_eq!(peak.period_hours, 6.0);
        let want = naive_dft_power(&v, 120);
        assert!((peak.peak_power - want).abs() <= 1e-9 * want);
    }

    #[test]
    fn fft_matches_naive_everywhere() {
        let v: Vec<f64> = (0..96).map(|t| ((t * 37 + 11) % 17) as f64).collect();
        let p = periodogram(&v);
        for (k, pk) in p.iter().enumerate() {
            assert!((pk - naive_dft_power(&v, k)).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_inactive_and_short() {
        assert!(periodogram_peak(&series(vec![0.0; 720])).is_err());
        assert!(periodogram_peak(&series(vec![1.0; 47])).is_err());
    }

    #[test]
    fn parseval() {
        let v: Vec<f64> = (0..720).map(|t| ((t * 7919) % 101) as f64 / 10.0).collect();
        let energy: f64 = v.iter().map(|x| x * x).sum();
        let total: f64 = periodogram(&v).iter().sum();
        assert!((energy - total).abs() < 1e-9 * energy);
    }
}
