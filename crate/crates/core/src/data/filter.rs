use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::types::{Dataset, IotCategory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FilterOptions {
    /// Drop `MaybeIot` devices as well as `NonIot`/`Unknown` ones.
    pub drop_maybe_iot: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterReport {
    pub total_devices: usize,
    pub removed_devices: usize,
    pub removed_fraction: f64,
}

/// Remove every record of devices whose resolved TAC is not an IoT module.
pub fn filter_iot(ds: &Dataset, opts: FilterOptions) -> (Dataset, FilterReport) {
    let tacs = ds.device_tacs();
    let keep: BTreeSet<&str> = tacs
        .iter()
        .filter(|(_, tac)| match ds.category_of_tac(tac) {
            IotCategory::Iot => true,
            IotCategory::MaybeIot => !opts.drop_maybe_iot,
            IotCategory::NonIot | IotCategory::Unknown => false,
        })
        .map(|(dev, _)| dev.as_str())
        .collect();
    let records = ds
        .records()
        .iter()
        .filter(|r| keep.contains(r.device_id.as_str()))
        .cloned()
        .collect();
    let total = tacs.len();
    let removed = total - keep.len();
    let report = FilterReport {
        total_devices: total,
        removed_devices: removed,
        removed_fraction: if total == 0 { 0.0 } else { removed as f64 / total as f64 },
    };
    (ds.with_records(records), report)
}

/// Industry inclusion rule for industry-level analyses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EligibilityRule {
    pub min_companies: usize,
    /// Largest company's share of both traffic and devices must not exceed this.
    pub max_dominance: f64,
}

impl Default for EligibilityRule {
    fn default() -> Self {
        EligibilityRule { min_companies: 10, max_dominance: 0.8 }
    }
}

#[derive(Default)]
struct CompanyTotals {
    bytes: u64,
    devices: BTreeSet<String>,
}

pub fn eligible_industries(ds: &Dataset, rule: EligibilityRule) -> BTreeSet<String> {
    let mut by_industry: BTreeMap<&str, BTreeMap<&str, CompanyTotals>> = BTreeMap::new();
    for r in ds.records() {
        let Some(ind) = ds.industry_of_company(&r.company_id) else { continue };
        let t = by_industry.entry(ind).or_default().entry(&r.company_id).or_default();
        t.bytes += r.total_bytes();
        if !t.devices.contains(&r.device_id) {
            t.devices.insert(r.device_id.clone());
        }
    }

    by_industry
        .into_iter()
        .filter(|(_, cos)| {
            if cos.len() < rule.min_companies {
                return false;
            }
            let bytes: u64 = cos.values().map(|c| c.bytes).sum();
            let devices: usize = cos.values().map(|c| c.devices.len()).sum();
            let top_bytes = cos.values().map(|c| c.bytes).max().unwrap_or(0);
            let top_devices = cos.values().map(|c| c.devices.len()).max().unwrap_or(0);
            top_bytes as f64 <= rule.max_dominance * bytes as f64
                && top_devices as f64 <= rule.max_dominance * devices as f64
        })
        .map(|(ind, _)| ind.to_string())
        .collect()
}
