use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::Ecdf;
use crate::data::{argmax_lexicographic, Capability, Dataset, Month, TimeRange};
use crate::error::{Error, Result};

/// Per-device log10(uplink / downlink), with one-directional devices split out.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct UdRatios {
    pub finite: BTreeMap<String, f64>,
    /// Devices with uplink traffic but no downlink (ratio +inf).
    pub uplink_only: BTreeSet<String>,
    /// Devices with downlink traffic but no uplink (ratio -inf).
    pub downlink_only: BTreeSet<String>,
}

impl UdRatios {
    pub fn ecdf(&self) -> Ecdf {
        Ecdf::new(self.finite.values().copied())
    }
}

pub fn ud_log_ratio(ds: &Dataset, window: TimeRange) -> UdRatios {
    let mut totals: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for r in ds.records_in(window) {
        let t = totals.entry(&r.device_id).or_default();
        t.0 += r.uplink_bytes;
        t.1 += r.downlink_bytes;
    }
    let mut out = UdRatios::default();
    for (dev, (up, down)) in totals {
        match (up, down) {
            (0, 0) => {}
            (_, 0) => {
                out.uplink_only.insert(dev.to_string());
            }
            (0, _) => {
                out.downlink_only.insert(dev.to_string());
            }
            (u, d) => {
                out.finite.insert(dev.to_string(), (u as f64 / d as f64).log10());
            }
        }
    }
    out
}

/// Distinct cells with at least one record in the window, per device.
pub fn cells_visited(ds: &Dataset, window: TimeRange) -> BTreeMap<String, usize> {
    let mut cells: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for r in ds.records_in(window) {
        cells.entry(&r.device_id).or_default().insert(&r.cell_id);
    }
    cells.into_iter().map(|(d, c)| (d.to_string(), c.len())).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConcentrationWeight {
    Traffic,
    /// Each device counted once, at its most visited cell.
    Devices,
}

/// Cumulative share carried by the top fraction of cells, cells sorted by
/// descending weight.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationCurve {
    pub points: Vec<(f64, f64)>,
}

impl ConcentrationCurve {
    /// Build from raw per-cell weights (zeros allowed, at least one positive).
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("concentration needs at least one cell"));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid("concentration weights must be non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("concentration weights sum to zero"));
        }
        let mut w = weights.to_vec();
        w.sort_by(|a, b| b.total_cmp(a));
        let n = w.len() as f64;
        let mut acc = 0.0;
        let mut points = Vec::with_capacity(w.len());
        for (i, v) in w.iter().enumerate() {
            acc += v;
            points.push(((i + 1) as f64 / n, (acc / total).min(1.0)));
        }
        if let Some(last) = points.last_mut() {
            *last = (1.0, 1.0);
        }
        Ok(ConcentrationCurve { points })
    }

    /// Share carried by the top `fraction` of cells, linear between points.
    pub fn share_at(&self, fraction: f64) -> f64 {
        let f = fraction.clamp(0.0, 1.0);
        let mut prev = (0.0, 0.0);
        for &(x, y) in &self.points {
            if f <= x {
                let span = x - prev.0;
                return if span <= 0.0 { y } else { prev.1 + (y - prev.1) * (f - prev.0) / span };
            }
            prev = (x, y);
        }
        1.0
    }
}

pub fn concentration(ds: &Dataset, weight: ConcentrationWeight, window: TimeRange) -> Result<ConcentrationCurve> {
    let mut per_cell: BTreeMap<&str, f64> = BTreeMap::new();
    match weight {
        ConcentrationWeight::Traffic => {
            for r in ds.records_in(window) {
                *per_cell.entry(&r.cell_id).or_default() += r.total_bytes() as f64;
            }
        }
        ConcentrationWeight::Devices => {
            let mut hours: BTreeMap<&str, BTreeMap<&str, usize>> = BTreeMap::new();
            for r in ds.records_in(window) {
                per_cell.entry(&r.cell_id).or_default();
                *hours.entry(&r.device_id).or_default().entry(&r.cell_id).or_default() += 1;
            }
            for cells in hours.values() {
                *per_cell.get_mut(argmax_lexicographic(cells)).expect("cell seen") += 1.0;
            }
        }
    }
    let weights: Vec<f64> = per_cell.into_values().collect();
    ConcentrationCurve::from_weights(&weights)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CmAgeReport {
    pub by_industry: BTreeMap<String, f64>,
    pub overall: Option<f64>,
    /// Active devices left out because their module has no release year.
    pub missing_release_year: usize,
}

/// Mean module age, in years, of devices active in `as_of`.
///
/// Modules count as released on Jan 1 of their release year; age runs to the
/// first day of `as_of`, so a module released this year is `(month - 1) / 12`
/// years old.
pub fn cm_age(ds: &Dataset, as_of: Month) -> CmAgeReport {
    let active = active_devices(ds, as_of);
    let tacs = ds.device_tacs();
    let industries = ds.device_industries();
    let offset = (as_of.month - 1) as f64 / 12.0;

    let mut report = CmAgeReport::default();
    let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    let mut all = (0.0, 0usize);
    for dev in &active {
        let Some(year) = tacs.get(*dev).and_then(|t| ds.devices().get(t)).and_then(|p| p.cm_release_year)
        else {
            report.missing_release_year += 1;
            continue;
        };
        let age = f64::from(as_of.year - year) + offset;
        all.0 += age;
        all.1 += 1;
        if let Some(ind) = industries.get(*dev) {
            let e = sums.entry(ind).or_default();
            e.0 += age;
            e.1 += 1;
        }
    }
    report.overall = (all.1 > 0).then(|| all.0 / all.1 as f64);
    report.by_industry = sums.into_iter().map(|(k, (s, n))| (k.to_string(), s / n as f64)).collect();
    report
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Penetration {
    pub by_capability: BTreeMap<Capability, f64>,
    /// Share of devices whose module supports GPRS/EDGE only.
    pub two_g_only: f64,
    pub devices: usize,
}

/// Share of devices active in `month` whose module supports each capability.
/// Devices with unknown TACs count as supporting nothing.
pub fn feature_penetration(ds: &Dataset, month: Month) -> Penetration {
    let active = active_devices(ds, month);
    let tacs = ds.device_tacs();
    let n = active.len();
    let mut counts: BTreeMap<Capability, usize> = Capability::ALL.iter().map(|c| (*c, 0)).collect();
    let mut two_g = 0usize;
    for dev in &active {
        let Some(p) = tacs.get(*dev).and_then(|t| ds.devices().get(t)) else { continue };
        for c in &p.capabilities {
            *counts.get_mut(c).expect("all capabilities present") += 1;
        }
        two_g += usize::from(p.is_2g_only());
    }
    let frac = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    Penetration {
        by_capability: counts.into_iter().map(|(c, k)| (c, frac(k))).collect(),
        two_g_only: frac(two_g),
        devices: n,
    }
}

/// Herfindahl-Hirschman index: sum of squared shares.
pub fn hhi(shares: &[f64]) -> Result<f64> {
    if shares.is_empty() {
        return Err(Error::invalid("hhi of an empty market"));
    }
    if let Some(s) = shares.iter().find(|s| !(**s >= 0.0)) {
        return Err(Error::invalid(format!("negative market share {s}")));
    }
    let total: f64 = shares.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("market shares sum to {total}, not 1")));
    }
    Ok(shares.iter().map(|s| s * s).sum())
}

/// HHI of module vendors over devices active in `month`. Devices without a
/// vendor are left out.
pub fn vendor_hhi(ds: &Dataset, month: Month) -> Result<f64> {
    let active = active_devices(ds, month);
    let tacs = ds.device_tacs();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for dev in &active {
        if let Some(v) = tacs.get(*dev).and_then(|t| ds.devices().get(t)).and_then(|p| p.vendor.as_deref()) {
            *counts.entry(v).or_default() += 1;
        }
    }
    let total: usize = counts.values().sum();
    if total == 0 {
        return Err(Error::invalid(format!("no devices with a known vendor in {month}")));
    }
    let shares: Vec<f64> = counts.values().map(|&c| c as f64 / total as f64).collect();
    // rounding can push the sum a hair off 1
    let s: f64 = shares.iter().sum();
    hhi(&shares.iter().map(|x| x / s).collect::<Vec<_>>())
}

fn active_devices(ds: &Dataset, month: Month) -> BTreeSet<&str> {
    ds.records_in(month.range()).map(|r| r.device_id.as_str()).collect()
}
