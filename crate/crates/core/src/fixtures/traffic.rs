use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::DailySeries;
use crate::temporal::DailyProfile;

/// Share of a device's daily traffic in its peak hour.
pub const PEAK_SHARE: f64 = 0.8;

/// Daily traffic shapes of the synthetic population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Archetype {
    /// 80% of the day's traffic at 00:00.
    PeakMidnight,
    Flat,
    /// 80% of the day's traffic at 02:00.
    PeakTwo,
}

impl Archetype {
    pub const ALL: [Archetype; 3] = [Archetype::PeakMidnight, Archetype::Flat, Archetype::PeakTwo];
    /// Population shares, in the order of [`Archetype::ALL`].
    pub const SHARES: [f64; 3] = [0.25, 0.41, 0.34];

    pub fn fractions(self) -> [f64; 24] {
        let peak = |h: usize| {
            let mut f = [(1.0 - PEAK_SHARE) / 23.0; 24];
            f[h] = PEAK_SHARE;
            f
        };
        match self {
            Archetype::PeakMidnight => peak(0),
            Archetype::PeakTwo => peak(2),
            Archetype::Flat => [1.0 / 24.0; 24],
        }
    }
}

/// Exact-count archetype labels for `n` devices in `shares` proportions
/// (largest remainder), in seeded random order.
pub fn archetype_labels(n: usize, shares: &[f64; 3], rng: &mut ChaCha8Rng) -> Vec<Archetype> {
    let raw: Vec<f64> = shares.iter().map(|s| s * n as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())).then(a.cmp(&b)));
    let short = n - counts.iter().sum::<usize>();
    for &k in order.iter().take(short) {
        counts[k] += 1;
    }
    let mut labels: Vec<Archetype> =
        Archetype::ALL.iter().zip(&counts).flat_map(|(a, &c)| std::iter::repeat_n(*a, c)).collect();
    labels.shuffle(rng);
    labels
}

/// Multiply each entry by `1 + noise * N(0, 1)`, floored at zero, and
/// renormalise to sum 1.
pub(crate) fn perturb(f: &[f64; 24], noise: f64, rng: &mut ChaCha8Rng) -> [f64; 24] {
    let eps = Normal::new(0.0, 1.0).expect("unit normal");
    let mut out = [0.0; 24];
    for (o, v) in out.iter_mut().zip(f) {
        *o = v * (1.0 + noise * eps.sample(rng)).max(0.0);
    }
    let total: f64 = out.iter().sum();
    if total > 0.0 {
        out.iter_mut().for_each(|o| *o /= total);
        out
    } else {
        *f
    }
}

/// Noisy daily profiles of `n` devices drawn from the three archetypes.
pub fn archetype_profiles(n: usize, noise: f64, seed: u64) -> (Vec<DailyProfile>, Vec<Archetype>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = archetype_labels(n, &Archetype::SHARES, &mut rng);
    let profiles = labels
        .iter()
        .enumerate()
        .map(|(i, a)| DailyProfile { device_id: format!("dev{i:06}"), fractions: perturb(&a.fractions(), noise, &mut rng) })
        .collect();
    (profiles, labels)
}

/// Shape of the synthetic daily-traffic series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailySeriesSpec {
    pub start: NaiveDate,
    pub days: usize,
    pub level: f64,
    pub slope: f64,
    /// Day index where the slope changes.
    pub change_day: usize,
    pub slope_after: f64,
    /// Additive drop on Saturdays and Sundays.
    pub weekend_drop: f64,
    /// Standard deviation of the multiplicative noise.
    pub noise: f64,
}

impl Default for DailySeriesSpec {
    fn default() -> Self {
        DailySeriesSpec {
            start: NaiveDate::from_ymd_opt(2016, 9, 1).expect("valid date"),
            days: 730,
            level: 200.0,
            slope: 1.0,
            change_day: 200,
            slope_after: 3.0,
            weekend_drop: 40.0,
            noise: 0.15,
        }
    }
}

impl DailySeriesSpec {
    /// Noise-free value on day `i`.
    pub fn mean(&self, i: usize) -> f64 {
        use chrono::{Datelike, Days, Weekday};
        let t = i as f64;
        let trend = self.level + self.slope * t + (self.slope_after - self.slope) * (t - self.change_day as f64).max(0.0);
        let weekday = (self.start + Days::new(i as u64)).weekday();
        trend - if matches!(weekday, Weekday::Sat | Weekday::Sun) { self.weekend_drop } else { 0.0 }
    }

    pub fn generate(&self, seed: u64) -> Result<DailySeries> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eps = Normal::new(0.0, 1.0).expect("unit normal");
        let values: Vec<f64> = (0..self.days)
            .map(|i| {
                // keep values positive under heavy noise
                self.mean(i) * (1.0 + self.noise * eps.sample(&mut rng)).max(0.05)
            })
            .collect();
        if let Some(i) = values.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::invalid(format!("series parameters give a non-positive mean on day {i}")));
        }
        DailySeries::new(self.start, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_shares() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let l = archetype_labels(1000, &Archetype::SHARES, &mut rng);
        let count = |a| l.iter().filter(|x| **x == a).count();
        assert_eq!((count(Archetype::PeakMidnight), count(Archetype::Flat), count(Archetype::PeakTwo)), (250, 410, 340));
        let l = archetype_labels(7, &Archetype::SHARES, &mut rng);
        assert_eq!(l.len(), 7);
    }

    #[test]
    fn archetype_fractions_sum_to_one() {
        for a in Archetype::ALL {
            assert!((a.fractions().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(Archetype::PeakTwo.fractions()[2], PEAK_SHARE);
    }

    #[test]
    fn noisy_profiles_stay_normalised() {
        let (p, _) = archetype_profiles(50, 0.1, 3);
        for x in &p {
            assert!((x.fractions.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(x.fractions.iter().all(|v| *v >= 0.0));
        }
        assert_eq!(p, archetype_profiles(50, 0.1, 3).0);
    }

    #[test]
    fn noiseless_series_follows_spec() {
        let spec = DailySeriesSpec { noise: 0.0, ..Default::default() };
        let s = spec.generate(0).unwrap();
        assert_eq!(s.len(), 730);
        // 2016-09-03 is a Saturday
        assert_eq!(s.values[2], 200.0 + 2.0 - 40.0);
        assert_eq!(s.values[300] - s.values[299], 3.0);
    }
}
