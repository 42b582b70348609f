use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, TimeZone, Timelike, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// UTC timestamp truncated to the hour.
pub type Hour = DateTime<Utc>;

/// One hour of one device's traffic in one cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataDetailRecord {
    pub device_id: String,
    pub cell_id: String,
    pub company_id: String,
    pub tac: String,
    pub hour: Hour,
    pub uplink_bytes: u64,
    pub downlink_bytes: u64,
}

impl DataDetailRecord {
    pub fn total_bytes(&self) -> u64 {
        self.uplink_bytes + self.downlink_bytes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Capability {
    Gprs,
    Edge,
    Hsdpa,
    Hsupa,
    Lte,
}

impl Capability {
    pub const ALL: [Capability; 5] = [
        Capability::Gprs,
        Capability::Edge,
        Capability::Hsdpa,
        Capability::Hsupa,
        Capability::Lte,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Capability::Gprs => "GPRS",
            Capability::Edge => "EDGE",
            Capability::Hsdpa => "HSDPA",
            Capability::Hsupa => "HSUPA",
            Capability::Lte => "LTE",
        }
    }
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IotCategory {
    Iot,
    MaybeIot,
    NonIot,
    /// TAC absent from the device-feature table.
    Unknown,
}

impl IotCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            IotCategory::Iot => "IoT",
            IotCategory::MaybeIot => "MaybeIoT",
            IotCategory::NonIot => "NonIoT",
            IotCategory::Unknown => "Unknown",
        }
    }
}

impl fmt::Display for IotCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IotCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "iot" => Ok(IotCategory::Iot),
            "maybeiot" | "maybe_iot" | "maybe" => Ok(IotCategory::MaybeIot),
            "noniot" | "non_iot" => Ok(IotCategory::NonIot),
            other => Err(Error::invalid(format!("unknown iot_category `{other}`"))),
        }
    }
}

/// Device-feature table row, keyed by TAC.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub tac: String,
    pub cm_model: String,
    pub cm_release_year: Option<i32>,
    pub capabilities: BTreeSet<Capability>,
    pub iot_category: IotCategory,
    pub vendor: Option<String>,
}

impl DeviceProfile {
    /// Placeholder for a TAC that the feature table does not know.
    pub fn unknown(tac: &str) -> Self {
        DeviceProfile {
            tac: tac.to_string(),
            cm_model: String::new(),
            cm_release_year: None,
            capabilities: BTreeSet::new(),
            iot_category: IotCategory::Unknown,
            vendor: None,
        }
    }

    pub fn has(&self, cap: Capability) -> bool {
        self.capabilities.contains(&cap)
    }

    /// Only GPRS and/or EDGE, no 3G or 4G bearer.
    pub fn is_2g_only(&self) -> bool {
        !self.capabilities.is_empty()
            && !self.has(Capability::Hsdpa)
            && !self.has(Capability::Hsupa)
            && !self.has(Capability::Lte)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompanyProfile {
    pub company_id: String,
    pub industry_code: String,
}

/// Half-open interval `[start, end)` of hours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeRange {
    pub start: Hour,
    pub end: Hour,
}

impl TimeRange {
    pub fn new(start: Hour, end: Hour) -> Result<Self> {
        if end <= start {
            return Err(Error::invalid(format!("empty time range {start} .. {end}")));
        }
        Ok(TimeRange { start, end })
    }

    /// Whole calendar days, `end` exclusive.
    pub fn days(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        let s = Utc.from_utc_datetime(&start.and_hms_opt(0, 0, 0).expect("midnight"));
        let e = Utc.from_utc_datetime(&end.and_hms_opt(0, 0, 0).expect("midnight"));
        TimeRange::new(s, e)
    }

    pub fn contains(&self, h: Hour) -> bool {
        h >= self.start && h < self.end
    }

    pub fn hours(&self) -> usize {
        ((self.end - self.start).num_hours()).max(0) as usize
    }

    /// Index of `h` counted in hours from `start`.
    pub fn hour_index(&self, h: Hour) -> Option<usize> {
        self.contains(h).then(|| (h - self.start).num_hours() as usize)
    }
}

impl fmt::Display for TimeRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}..{}",
            self.start.format("%Y-%m-%dT%H:%M:%SZ"),
            self.end.format("%Y-%m-%dT%H:%M:%SZ")
        )
    }
}

impl FromStr for TimeRange {
    type Err = Error;

    /// Accepts `START..END` with RFC 3339 timestamps or dates, or `START:END`
    /// with plain dates. `END` is exclusive.
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = if let Some(parts) = s.split_once("..") {
            parts
        } else if let Some(parts) = s.split_once(':') {
            parts
        } else {
            return Err(Error::invalid(format!("window `{s}`: expected START:END")));
        };
        TimeRange::new(parse_instant(a)?, parse_instant(b)?)
    }
}

fn parse_instant(s: &str) -> Result<Hour> {
    let s = s.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(Utc.from_utc_datetime(&d.and_hms_opt(0, 0, 0).expect("midnight")));
    }
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| Error::invalid(format!("bad timestamp `{s}`: {e}")))
}

/// Parse an hour stamp, rejecting anything not on an hour boundary.
pub fn parse_hour(s: &str) -> Result<Hour> {
    let t = DateTime::parse_from_rfc3339(s.trim())
        .map_err(|e| Error::invalid(format!("bad hour_utc `{s}`: {e}")))?
        .with_timezone(&Utc);
    if t.minute() != 0 || t.second() != 0 || t.nanosecond() != 0 {
        return Err(Error::invalid(format!("hour_utc `{s}` not truncated to the hour")));
    }
    Ok(t)
}

pub fn format_hour(h: &Hour) -> String {
    h.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

/// Calendar month, used for "devices active in month" statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Month {
    pub year: i32,
    pub month: u32,
}

impl Month {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::invalid(format!("month {month} out of range")));
        }
        Ok(Month { year, month })
    }

    pub fn of(h: Hour) -> Self {
        Month { year: h.year(), month: h.month() }
    }

    pub fn range(&self) -> TimeRange {
        let start = NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("valid month");
        let end = if self.month == 12 {
            NaiveDate::from_ymd_opt(self.year + 1, 1, 1)
        } else {
            NaiveDate::from_ymd_opt(self.year, self.month + 1, 1)
        }
        .expect("valid month");
        TimeRange::days(start, end).expect("month is nonempty")
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for Month {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (y, m) = s
            .trim()
            .split_once('-')
            .ok_or_else(|| Error::invalid(format!("month `{s}`: expected YYYY-MM")))?;
        let year = y.parse().map_err(|_| Error::invalid(format!("month `{s}`: bad year")))?;
        let month = m.parse().map_err(|_| Error::invalid(format!("month `{s}`: bad month")))?;
        Month::new(year, month)
    }
}

/// How a device that reported several TACs is mapped to one profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TacPolicy {
    /// TAC seen on the most records, ties by lexicographic TAC.
    #[default]
    MostFrequent,
    /// TAC of the latest record.
    Latest,
}

/// Ingested DDR table joined with its two side tables. Immutable once built.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Dataset {
    records: Vec<DataDetailRecord>,
    devices: BTreeMap<String, DeviceProfile>,
    companies: BTreeMap<String, CompanyProfile>,
    time_span: Option<(Hour, Hour)>,
    #[serde(default)]
    tac_policy: TacPolicy,
}

impl Dataset {
    /// Validates record invariants and sorts records by (hour, device, cell).
    pub fn new(
        mut records: Vec<DataDetailRecord>,
        devices: BTreeMap<String, DeviceProfile>,
        companies: BTreeMap<String, CompanyProfile>,
    ) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if r.total_bytes() == 0 {
                return Err(Error::invalid(format!(
                    "record ({}, {}, {}) carries no traffic",
                    r.device_id,
                    r.cell_id,
                    format_hour(&r.hour)
                )));
            }
            if !seen.insert((r.device_id.as_str(), r.cell_id.as_str(), r.hour)) {
                return Err(Error::DuplicateRecord {
                    device_id: r.device_id.clone(),
                    cell_id: r.cell_id.clone(),
                    hour: format_hour(&r.hour),
                });
            }
        }
        drop(seen);
        records.sort_by(|a, b| {
            (a.hour, &a.device_id, &a.cell_id).cmp(&(b.hour, &b.device_id, &b.cell_id))
        });
        let time_span = match (records.first(), records.last()) {
            (Some(a), Some(b)) => Some((a.hour, b.hour)),
            _ => None,
        };
        Ok(Dataset { records, devices, companies, time_span, tac_policy: TacPolicy::default() })
    }

    pub fn with_tac_policy(mut self, policy: TacPolicy) -> Self {
        self.tac_policy = policy;
        self
    }

    pub fn tac_policy(&self) -> TacPolicy {
        self.tac_policy
    }

    pub fn records(&self) -> &[DataDetailRecord] {
        &self.records
    }

    pub fn devices(&self) -> &BTreeMap<String, DeviceProfile> {
        &self.devices
    }

    pub fn companies(&self) -> &BTreeMap<String, CompanyProfile> {
        &self.companies
    }

    /// `[first hour, last hour]`, both inclusive; `None` when empty.
    pub fn time_span(&self) -> Option<(Hour, Hour)> {
        self.time_span
    }

    /// The whole span as a half-open range (last hour included).
    pub fn full_range(&self) -> Option<TimeRange> {
        self.time_span
            .map(|(a, b)| TimeRange { start: a, end: b + chrono::Duration::hours(1) })
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records_in(&self, window: TimeRange) -> impl Iterator<Item = &DataDetailRecord> {
        // records are hour-sorted
        let lo = self.records.partition_point(|r| r.hour < window.start);
        let hi = self.records.partition_point(|r| r.hour < window.end);
        self.records[lo..hi].iter()
    }

    pub fn profile(&self, tac: &str) -> DeviceProfile {
        self.devices.get(tac).cloned().unwrap_or_else(|| DeviceProfile::unknown(tac))
    }

    pub fn category_of_tac(&self, tac: &str) -> IotCategory {
        self.devices.get(tac).map_or(IotCategory::Unknown, |p| p.iot_category)
    }

    pub fn industry_of_company(&self, company_id: &str) -> Option<&str> {
        self.companies.get(company_id).map(|c| c.industry_code.as_str())
    }

    pub fn device_ids(&self) -> BTreeSet<&str> {
        self.records.iter().map(|r| r.device_id.as_str()).collect()
    }

    /// One TAC per device, resolved by the dataset's [`TacPolicy`].
    pub fn device_tacs(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        match self.tac_policy {
            TacPolicy::MostFrequent => {
                let counts = self.count_by_device(|r| r.tac.as_str());
                for (dev, tacs) in counts {
                    out.insert(dev.to_string(), argmax_lexicographic(&tacs).to_string());
                }
            }
            TacPolicy::Latest => {
                for r in &self.records {
                    out.insert(r.device_id.clone(), r.tac.clone());
                }
            }
        }
        out
    }

    /// One company per device: the company on most of its records.
    pub fn device_companies(&self) -> BTreeMap<String, String> {
        self.count_by_device(|r| r.company_id.as_str())
            .into_iter()
            .map(|(dev, m)| (dev.to_string(), argmax_lexicographic(&m).to_string()))
            .collect()
    }

    /// Industry per device via its company; devices of unknown companies are absent.
    pub fn device_industries(&self) -> BTreeMap<String, String> {
        self.device_companies()
            .into_iter()
            .filter_map(|(dev, co)| self.industry_of_company(&co).map(|i| (dev, i.to_string())))
            .collect()
    }

    fn count_by_device<'a, F>(&'a self, key: F) -> BTreeMap<&'a str, BTreeMap<&'a str, usize>>
    where
        F: Fn(&'a DataDetailRecord) -> &'a str,
    {
        let mut counts: BTreeMap<&str, BTreeMap<&str, usize>> = BTreeMap::new();
        for r in &self.records {
            *counts.entry(r.device_id.as_str()).or_default().entry(key(r)).or_default() += 1;
        }
        counts
    }

    /// Rebuild from a subset of records, keeping side tables. Invariants of
    /// the subset are inherited from `self`.
    pub(crate) fn with_records(&self, records: Vec<DataDetailRecord>) -> Self {
        let time_span = match (records.first(), records.last()) {
            (Some(a), Some(b)) => Some((a.hour, b.hour)),
            _ => None,
        };
        Dataset {
            records,
            devices: self.devices.clone(),
            companies: self.companies.clone(),
            time_span,
            tac_policy: self.tac_policy,
        }
    }
}

/// Key with the largest count; ties go to the lexicographically smallest key.
pub(crate) fn argmax_lexicographic<'a>(counts: &BTreeMap<&'a str, usize>) -> &'a str {
    let mut best: Option<(&str, usize)> = None;
    for (&k, &c) in counts {
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((k, c));
        }
    }
    best.map(|(k, _)| k).unwrap_or("")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_parsing() {
        let w: TimeRange = "2018-03-01:2018-09-01".parse().unwrap();
        assert_eq!(w.hours(), 184 * 24);
        let w: TimeRange = "2018-08-01T13:00:00Z..2018-08-01T15:00:00Z".parse().unwrap();
        assert_eq!(w.hours(), 2);
        assert!("2018-08-01".parse::<TimeRange>().is_err());
        assert!("2018-08-02:2018-08-01".parse::<TimeRange>().is_err());
    }

    #[test]
    fn hour_must_be_truncated() {
        assert!(parse_hour("2018-08-01T13:00:00Z").is_ok());
        assert!(parse_hour("2018-08-01T13:30:00Z").is_err());
    }

    #[test]
    fn month_range() {
        let m: Month = "2018-12".parse().unwrap();
        assert_eq!(m.range().hours(), 31 * 24);
        assert!("2018-13".parse::<Month>().is_err());
    }

    #[test]
    fn argmax_breaks_ties_lexicographically() {
        let m: BTreeMap<&str, usize> = [("b", 2), ("a", 2), ("c", 1)].into_iter().collect();
        assert_eq!(argmax_lexicographic(&m), "a");
    }
}
