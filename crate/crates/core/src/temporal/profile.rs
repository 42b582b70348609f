use serde::{Deserialize, Serialize};

use super::HourlySeries;
use crate::error::{Error, Result};

/// Share of a device's traffic falling in each hour of the day, averaged over
/// the analysis window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyProfile {
    pub device_id: String,
    pub fractions: [f64; 24],
}

/// Hour-of-day totals divided by the grand total. Index 0 of the series is
/// taken to be 00:00 UTC.
pub fn daily_profile(series: &HourlySeries) -> Result<DailyProfile> {
    let mut fractions = [0.0; 24];
    for (i, v) in series.values.iter().enumerate() {
        fractions[i % 24] += v;
    }
    let total: f64 = fractions.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid(format!("device {} has no traffic", series.device_id)));
    }
    for f in &mut fractions {
        *f /= total;
    }
    Ok(DailyProfile { device_id: series.device_id.clone(), fractions })
}

/// Profiles for every device with traffic; the ids of zero-traffic devices
/// are returned separately.
pub fn daily_profiles(series: &[HourlySeries]) -> (Vec<DailyProfile>, Vec<String>) {
    let mut profiles = Vec::with_capacity(series.len());
    let mut excluded = Vec::new();
    for s in series {
        match daily_profile(s) {
            Ok(p) => profiles.push(p),
            Err(_) => excluded.push(s.device_id.clone()),
        }
    }
    (profiles, excluded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn series(values: Vec<f64>) -> HourlySeries {
        HourlySeries { device_id: "d".into(), values }
    }

    #[test]
    fn midnight_only() {
        let v: Vec<f64> = (0..720).map(|t| if t % 24 == 0 { 3.0 } else { 0.0 }).collect();
        let p = daily_profile(&series(v)).unwrap();
        assert_eq!(p.fractions[0], 1.0);
        assert!(p.fractions[1..].iter().all(|f| *f == 0.0));
    }

    #[test]
    fn uniform() {
        let p = daily_profile(&series(vec![7.0; 720])).unwrap();
        assert!(p.fractions.iter().all(|f| (f - 1.0 / 24.0).abs() < 1e-15));
    }

    #[test]
    fn zero_traffic_excluded() {
        let (p, ex) = daily_profiles(&[series(vec![0.0; 48]), series(vec![1.0; 48])]);
        assert_eq!(p.len(), 1);
        assert_eq!(ex, vec!["d".to_string()]);
    }

    #[test]
    fn matches_direct_accumulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v: Vec<f64> = (0..720).map(|_| rng.random_range(0.0..1000.0)).collect();
        let p = daily_profile(&series(v.clone())).unwrap();
        let total: f64 = v.iter().sum();
        for h in 0..24 {
            let mut s = 0.0;
            for day in 0..30 {
                s += v[day * 24 + h];
            }
            assert!((p.fractions[h] - s / total).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn sums_to_one_and_scale_free(
            v in proptest::collection::vec(0.0f64..1e6, 48..200),
            scale in 1e-3f64..1e3,
        ) {
            prop_assume!(v.iter().sum::<f64>() > 0.0);
            let p = daily_profile(&series(v.clone())).unwrap();
            prop_assert!((p.fractions.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let q = daily_profile(&series(v.iter().map(|x| x * scale).collect())).unwrap();
            for (a, b) in p.fractions.iter().zip(&q.fractions) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
