use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{Duration, TimeZone, Utc};
use serde::Serialize;

use super::types::{Dataset, Hour};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GroupBy {
    Device,
    Company,
    Industry,
    Cell,
    All,
}

impl FromStr for GroupBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "device" => Ok(GroupBy::Device),
            "company" => Ok(GroupBy::Company),
            "industry" => Ok(GroupBy::Industry),
            "cell" => Ok(GroupBy::Cell),
            "all" => Ok(GroupBy::All),
            other => Err(Error::invalid(format!(
                "unknown group key `{other}` (device|company|industry|cell|all)"
            ))),
        }
    }
}

impl fmt::Display for GroupBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupBy::Device => "device",
            GroupBy::Company => "company",
            GroupBy::Industry => "industry",
            GroupBy::Cell => "cell",
            GroupBy::All => "all",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AggregateRow {
    pub group: String,
    pub period_start: Hour,
    pub uplink_bytes: u64,
    pub downlink_bytes: u64,
    pub device_count: usize,
}

/// Sum traffic per group per period of `period_days` days.
///
/// Periods are anchored at midnight UTC of the first day in the dataset.
/// Records whose company has no industry go to the group `"unknown"` when
/// grouping by industry.
pub fn aggregate_traffic(ds: &Dataset, group_by: GroupBy, period_days: u32) -> Result<Vec<AggregateRow>> {
    if period_days == 0 {
        return Err(Error::invalid("aggregation period must be at least one day"));
    }
    let Some((first, _)) = ds.time_span() else {
        return Ok(Vec::new());
    };
    let anchor = Utc.from_utc_datetime(&first.date_naive().and_hms_opt(0, 0, 0).expect("midnight"));
    let period_hours = i64::from(period_days) * 24;

    #[derive(Default)]
    struct Acc<'a> {
        up: u64,
        down: u64,
        devices: BTreeSet<&'a str>,
    }
    let mut acc: BTreeMap<(String, i64), Acc> = BTreeMap::new();
    for r in ds.records() {
        let group = match group_by {
            GroupBy::Device => r.device_id.clone(),
            GroupBy::Company => r.company_id.clone(),
            GroupBy::Industry => ds.industry_of_company(&r.company_id).unwrap_or("unknown").to_string(),
            GroupBy::Cell => r.cell_id.clone(),
            GroupBy::All => "all".to_string(),
        };
        let idx = (r.hour - anchor).num_hours().div_euclid(period_hours);
        let a = acc.entry((group, idx)).or_default();
        a.up += r.uplink_bytes;
        a.down += r.downlink_bytes;
        a.devices.insert(&r.device_id);
    }
    Ok(acc
        .into_iter()
        .map(|((group, idx), a)| AggregateRow {
            group,
            period_start: anchor + Duration::hours(idx * period_hours),
            uplink_bytes: a.up,
            downlink_bytes: a.down,
            device_count: a.devices.len(),
        })
        .collect())
}

/// Trailing mean over `window` points. The first `window - 1` outputs are `None`.
pub fn moving_average<T>(series: &[(T, f64)], window: usize) -> Result<Vec<(T, Option<f64>)>>
where
    T: PartialOrd + Clone,
{
    if window == 0 {
        return Err(Error::invalid("moving-average window must be positive"));
    }
    if series.windows(2).any(|w| !(w[0].0 < w[1].0)) {
        return Err(Error::invalid("moving-average input is not strictly time-sorted"));
    }
    Ok(series
        .iter()
        .enumerate()
        .map(|(i, (t, _))| {
            let v = (i + 1 >= window).then(|| {
                series[i + 1 - window..=i].iter().map(|(_, v)| v).sum::<f64>() / window as f64
            });
            (t.clone(), v)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::types::DataDetailRecord;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rec(dev: &str, cell: &str, h: i64, up: u64, down: u64) -> DataDetailRecord {
        DataDetailRecord {
            device_id: dev.into(),
            cell_id: cell.into(),
            company_id: "co".into(),
            tac: "10000000".into(),
            hour: Utc.with_ymd_and_hms(2018, 8, 1, 0, 0, 0).unwrap() + Duration::hours(h),
            uplink_bytes: up,
            downlink_bytes: down,
        }
    }

    fn random_dataset(seed: u64, n: usize) -> Vec<DataDetailRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        while out.len() < n {
            let dev = format!("d{}", rng.random_range(0..5));
            let cell = format!("c{}", rng.random_range(0..3));
            let h = rng.random_range(0..24 * 10);
            if seen.insert((dev.clone(), cell.clone(), h)) {
                out.push(rec(&dev, &cell, h, rng.random_range(0..1000), rng.random_range(1..1000)));
            }
        }
        out
    }

    #[test]
    fn single_record_daily() {
        let ds = Dataset::new(vec![rec("d", "c", 5, 100, 0)], Default::default(), Default::default())
            .unwrap();
        let rows = aggregate_traffic(&ds, GroupBy::Device, 1).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!((rows[0].uplink_bytes, rows[0].downlink_bytes, rows[0].device_count), (100, 0, 1));
        assert_eq!(rows[0].period_start, Utc.with_ymd_and_hms(2018, 8, 1, 0, 0, 0).unwrap());
    }

    #[test]
    fn empty_dataset_empty_table() {
        let ds = Dataset::default();
        assert!(aggregate_traffic(&ds, GroupBy::All, 7).unwrap().is_empty());
    }

    #[test]
    fn zero_period_rejected() {
        assert!(aggregate_traffic(&Dataset::default(), GroupBy::All, 0).is_err());
        assert!("region".parse::<GroupBy>().is_err());
    }

    #[test]
    fn per_day_sums_match_brute_force() {
        let recs = random_dataset(7, 300);
        let ds = Dataset::new(recs.clone(), Default::default(), Default::default()).unwrap();
        let rows = aggregate_traffic(&ds, GroupBy::Device, 1).unwrap();

        // oracle: bucket by (device, calendar day) directly
        let mut oracle: BTreeMap<(String, chrono::NaiveDate), (u64, u64)> = BTreeMap::new();
        for r in &recs {
            let e = oracle.entry((r.device_id.clone(), r.hour.date_naive())).or_default();
            e.0 += r.uplink_bytes;
            e.1 += r.downlink_bytes;
        }
        assert_eq!(rows.len(), oracle.len());
        for row in rows {
            let want = oracle[&(row.group.clone(), row.period_start.date_naive())];
            assert_eq!((row.uplink_bytes, row.downlink_bytes), want);
            assert_eq!(row.device_count, 1);
        }
    }

    #[test]
    fn whole_span_all_group_reproduces_totals() {
        let recs = random_dataset(3, 200);
        let up: u64 = recs.iter().map(|r| r.uplink_bytes).sum();
        let down: u64 = recs.iter().map(|r| r.downlink_bytes).sum();
        let ds = Dataset::new(recs, Default::default(), Default::default()).unwrap();
        let rows = aggregate_traffic(&ds, GroupBy::All, 10).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!((rows[0].uplink_bytes, rows[0].downlink_bytes), (up, down));
        assert_eq!(rows[0].device_count, 5);
    }

    #[test]
    fn moving_average_examples() {
        let s: Vec<(i32, f64)> = vec![(1, 1.0), (2, 2.0), (3, 3.0), (4, 4.0)];
        let ma = moving_average(&s, 2).unwrap();
        let vals: Vec<_> = ma.iter().map(|(_, v)| *v).collect();
        assert_eq!(vals, vec![None, Some(1.5), Some(2.5), Some(3.5)]);
        let id = moving_average(&s, 1).unwrap();
        assert!(id.iter().zip(&s).all(|((_, a), (_, b))| *a == Some(*b)));
        assert!(moving_average(&[(2, 1.0), (1, 1.0)], 1).is_err());
        assert!(moving_average(&s, 0).is_err());
    }

    #[test]
    fn moving_average_matches_direct_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s: Vec<(usize, f64)> = (0..100).map(|i| (i, rng.random_range(-50.0..50.0))).collect();
        let ma = moving_average(&s, 7).unwrap();
        for (i, (_, v)) in ma.iter().enumerate() {
            if i < 6 {
                assert!(v.is_none());
            } else {
                let mut sum = 0.0;
                for j in i - 6..=i {
                    sum += s[j].1;
                }
                assert!((v.unwrap() - sum / 7.0).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn totals_invariant_to_record_order(seed in 0u64..1000, period in 1u32..5) {
            let mut recs = random_dataset(seed, 60);
            let ds = Dataset::new(recs.clone(), Default::default(), Default::default()).unwrap();
            recs.reverse();
            let rev = Dataset::new(recs, Default::default(), Default::default()).unwrap();
            prop_assert_eq!(
                aggregate_traffic(&ds, GroupBy::Cell, period).unwrap(),
                aggregate_traffic(&rev, GroupBy::Cell, period).unwrap()
            );
        }
    }
}
