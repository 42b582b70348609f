use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::fano::fano_bound;
use super::lz::{lz_entropy, DEFAULT_MIN_LEN};
use crate::data::{eligible_industries, Dataset, EligibilityRule, TimeRange};
use crate::descriptive::Ecdf;
use crate::error::Result;
use crate::mobility::{device_cell_sequences, rank_encode};

/// Entropy rate and predictability bound of one device.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictabilityResult {
    pub device_id: String,
    pub industry: Option<String>,
    pub n: usize,
    pub n_distinct: usize,
    pub h_rate: f64,
    pub pi_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictabilityOptions {
    pub min_len: usize,
    pub rule: EligibilityRule,
}

impl Default for PredictabilityOptions {
    fn default() -> Self {
        PredictabilityOptions { min_len: DEFAULT_MIN_LEN, rule: EligibilityRule::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictabilityReport {
    /// Devices long enough to score, in device-id order.
    pub per_device: Vec<PredictabilityResult>,
    /// Devices with any traffic in the window.
    pub total_devices: usize,
    pub excluded_short: usize,
    pub excluded_fraction: f64,
    /// Only industries passing the eligibility rule.
    pub by_industry: BTreeMap<String, Ecdf>,
}

/// Score already-encoded sequences. Sequences shorter than `min_len` are skipped.
pub fn sequence_predictability(seqs: &[(String, Vec<usize>)], min_len: usize) -> Result<Vec<PredictabilityResult>> {
    seqs.par_iter()
        .filter(|(_, s)| s.len() >= min_len.max(2))
        .map(|(id, s)| {
            let e = lz_entropy(id, s, min_len)?;
            // a run-free sequence of length >= 2 has at least two symbols
            let pi_max = if e.n_distinct < 2 { 1.0 } else { fano_bound(e.h_rate, e.n_distinct)? };
            Ok(PredictabilityResult {
                device_id: e.device_id,
                industry: None,
                n: e.n,
                n_distinct: e.n_distinct,
                h_rate: e.h_rate,
                pi_max,
            })
        })
        .collect()
}

/// Per-device predictability over `window` and its distribution per industry.
pub fn predictability_report(ds: &Dataset, window: TimeRange, opts: &PredictabilityOptions) -> Result<PredictabilityReport> {
    let seqs: Vec<(String, Vec<usize>)> =
        device_cell_sequences(ds, window).into_iter().map(|(id, cells)| (id, rank_encode(&cells))).collect();
    let total_devices = seqs.len();
    let mut per_device = sequence_predictability(&seqs, opts.min_len)?;
    let excluded_short = total_devices - per_device.len();
    let industries = ds.device_industries();
    for r in &mut per_device {
        r.industry = industries.get(&r.device_id).cloned();
    }
    let eligible = eligible_industries(ds, opts.rule);
    let mut grouped: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in &per_device {
        if let Some(ind) = r.industry.as_ref().filter(|i| eligible.contains(*i)) {
            grouped.entry(ind.clone()).or_default().push(r.pi_max);
        }
    }
    Ok(PredictabilityReport {
        per_device,
        total_devices,
        excluded_short,
        excluded_fraction: if total_devices == 0 { 0.0 } else { excluded_short as f64 / total_devices as f64 },
        by_industry: grouped.into_iter().map(|(k, v)| (k, Ecdf::new(v))).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{CompanyProfile, DataDetailRecord};
    use chrono::{Duration, TimeZone, Utc};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dataset(devices: &[(String, String, Vec<usize>)], industries: &[(&str, usize)]) -> Dataset {
        let t0 = Utc.with_ymd_and_hms(2018, 3, 1, 0, 0, 0).unwrap();
        let mut recs = Vec::new();
        for (dev, co, cells) in devices {
            for (h, c) in cells.iter().enumerate() {
                recs.push(DataDetailRecord {
                    device_id: dev.clone(),
                    cell_id: format!("c{c}"),
                    company_id: co.clone(),
                    tac: "35000000".into(),
                    hour: t0 + Duration::hours(h as i64),
                    uplink_bytes: 10,
                    downlink_bytes: 10,
                });
            }
        }
        let companies: BTreeMap<String, CompanyProfile> = industries
            .iter()
            .flat_map(|(ind, n)| {
                (0..*n).map(move |k| {
                    let id = format!("{ind}-{k}");
                    (id.clone(), CompanyProfile { company_id: id, industry_code: ind.to_string() })
                })
            })
            .collect();
        Dataset::new(recs, Default::default(), companies).unwrap()
    }

    fn cyclic(len: usize, period: usize) -> Vec<usize> {
        (0..len).map(|i| i % period).collect()
    }

    fn uniform(len: usize, n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        // run-free draw so run compression keeps the length
        let mut v = vec![rng.random_range(0..n)];
        while v.len() < len {
            let x = rng.random_range(0..n);
            if x != *v.last().unwrap() {
                v.push(x);
            }
        }
        v
    }

    #[test]
    fn cyclic_devices_are_fully_predictable() {
        let devs: Vec<_> = (0..40).map(|i| (format!("d{i}"), format!("ind-{}", i % 10), cyclic(2000, 4))).collect();
        let ds = dataset(&devs, &[("ind", 10)]);
        let r = predictability_report(&ds, ds.full_range().unwrap(), &Default::default()).unwrap();
        let e = &r.by_industry["ind"];
        assert_eq!(e.len(), 40);
        assert!(e.quantile(0.0).unwrap() > 0.97, "{:?}", e.quantile(0.0));
    }

    #[test]
    fn uniform_devices_concentrate_at_their_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let devs: Vec<_> = (0..30).map(|i| (format!("d{i}"), format!("ind-{}", i % 10), uniform(3000, 10, &mut rng))).collect();
        let ds = dataset(&devs, &[("ind", 10)]);
        let r = predictability_report(&ds, ds.full_range().unwrap(), &Default::default()).unwrap();
        for d in &r.per_device {
            assert_eq!(d.pi_max, fano_bound(d.h_rate, 10).unwrap());
        }
        let mean_h = r.per_device.iter().map(|d| d.h_rate).sum::<f64>() / 30.0;
        let centre = fano_bound(mean_h, 10).unwrap();
        let e = &r.by_industry["ind"];
        assert!((e.quantile(0.05).unwrap() - centre).abs() < 0.05);
        assert!((e.quantile(0.95).unwrap() - centre).abs() < 0.05);
    }

    #[test]
    fn mixed_population_splits_in_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let devs: Vec<_> = (0..40)
            .map(|i| {
                let s = if i % 2 == 0 { cyclic(1500, 5) } else { uniform(1500, 10, &mut rng) };
                (format!("d{i}"), format!("ind-{}", i % 10), s)
            })
            .collect();
        let ds = dataset(&devs, &[("ind", 10)]);
        let r = predictability_report(&ds, ds.full_range().unwrap(), &Default::default()).unwrap();
        let e = &r.by_industry["ind"];
        assert!((e.evaluate(0.8) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn short_devices_are_counted_and_excluded() {
        let mut devs: Vec<_> = (0..61).map(|i| (format!("a{i}"), format!("ind-{}", i % 10), cyclic(40, 3))).collect();
        devs.extend((0..39).map(|i| (format!("b{i}"), format!("ind-{}", i % 10), cyclic(19, 3))));
        let ds = dataset(&devs, &[("ind", 10)]);
        let r = predictability_report(&ds, ds.full_range().unwrap(), &Default::default()).unwrap();
        assert_eq!(r.total_devices, 100);
        assert_eq!(r.excluded_short, 39);
        assert!((r.excluded_fraction - 0.39).abs() < 1e-12);
        assert_eq!(r.per_device.len(), 61);
    }

    #[test]
    fn ineligible_industries_have_no_ecdf() {
        let devs: Vec<_> = (0..20)
            .map(|i| {
                let co = if i < 10 { format!("big-{}", i % 10) } else { "small-0".to_string() };
                (format!("d{i}"), co, cyclic(30, 3))
            })
            .collect();
        let ds = dataset(&devs, &[("big", 10), ("small", 1)]);
        let r = predictability_report(&ds, ds.full_range().unwrap(), &Default::default()).unwrap();
        assert!(r.by_industry.contains_key("big"));
        assert!(!r.by_industry.contains_key("small"));
        assert_eq!(r.per_device.iter().filter(|d| d.industry.as_deref() == Some("small")).count(), 10);
    }
}
