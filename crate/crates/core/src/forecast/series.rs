use std::fs::File;
use std::path::Path;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values on consecutive calendar days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailySeries {
    pub start: NaiveDate,
    pub values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SeriesRow {
    date: NaiveDate,
    value: f64,
}

impl DailySeries {
    pub fn new(start: NaiveDate, values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value at day {i}")));
        }
        Ok(DailySeries { start, values })
    }

    /// Build from dated values; dates must be consecutive and increasing.
    pub fn from_pairs(pairs: &[(NaiveDate, f64)]) -> Result<Self> {
        let Some(&(start, _)) = pairs.first() else {
            return Err(Error::invalid("empty series"));
        };
        for (k, w) in pairs.windows(2).enumerate() {
            if w[0].0.succ_opt() != Some(w[1].0) {
                return Err(Error::invalid(format!(
                    "dates not consecutive at row {}: {} then {} (gaps must be imputed)",
                    k + 2,
                    w[0].0,
                    w[1].0
                )));
            }
        }
        DailySeries::new(start, pairs.iter().map(|p| p.1).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn date(&self, i: usize) -> NaiveDate {
        self.start + Days::new(i as u64)
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        (0..self.len()).map(|i| self.date(i)).collect()
    }

    /// Days `range.start..range.end` as a new series.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<DailySeries> {
        if range.end > self.len() || range.start >= range.end {
            return Err(Error::invalid(format!("slice {range:?} outside series of {} days", self.len())));
        }
        Ok(DailySeries { start: self.date(range.start), values: self.values[range].to_vec() })
    }

    /// Read a `date,value` CSV.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|source| Error::Io { path: path.into(), source })?;
        let rows: Vec<SeriesRow> = csv::Reader::from_reader(file)
            .deserialize()
            .collect::<std::result::Result<_, _>>()
            .map_err(|source| Error::Csv { path: path.into(), source })?;
        let pairs: Vec<(NaiveDate, f64)> = rows.into_iter().map(|r| (r.date, r.value)).collect();
        DailySeries::from_pairs(&pairs).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_rows(path, self.dates().into_iter().zip(self.values.iter().copied()))
    }
}

pub(crate) fn write_rows(path: &Path, rows: impl IntoIterator<Item = (NaiveDate, f64)>) -> Result<()> {
    let csv_err = |source| Error::Csv { path: path.into(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for (date, value) in rows {
        w.serialize(SeriesRow { date, value }).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io { path: path.into(), source })
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Holiday {
    pub date: NaiveDate,
    pub name: String,
}

/// Named holiday dates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HolidayCalendar {
    entries: Vec<Holiday>,
}

const FINNISH: &str = include_str!("../../fixtures/finnish_holidays.csv");

impl HolidayCalendar {
    pub fn new(mut entries: Vec<Holiday>) -> Self {
        entries.sort();
        entries.dedup();
        HolidayCalendar { entries }
    }

    /// National public holidays of Finland, 2015 to 2021.
    pub fn finnish() -> Self {
        Self::parse(FINNISH.as_bytes()).expect("bundled holiday table is valid")
    }

    fn parse(r: impl std::io::Read) -> std::result::Result<Self, csv::Error> {
        let entries = csv::Reader::from_reader(r).deserialize().collect::<std::result::Result<Vec<Holiday>, _>>()?;
        Ok(HolidayCalendar::new(entries))
    }

    /// Read a `date,name` CSV.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|source| Error::Io { path: path.into(), source })?;
        Self::parse(file).map_err(|source| Error::Csv { path: path.into(), source })
    }

    pub fn entries(&self) -> &[Holiday] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Holiday names falling on `date`.
    pub fn on(&self, date: NaiveDate) -> impl Iterator<Item = &str> {
        let from = self.entries.partition_point(|h| h.date < date);
        self.entries[from..].iter().take_while(move |h| h.date == date).map(|h| h.name.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn gaps_are_rejected() {
        assert!(DailySeries::from_pairs(&[(d(2018, 1, 1), 1.0), (d(2018, 1, 3), 1.0)]).is_err());
        assert!(DailySeries::from_pairs(&[(d(2018, 1, 2), 1.0), (d(2018, 1, 1), 1.0)]).is_err());
        let s = DailySeries::from_pairs(&[(d(2018, 12, 31), 1.0), (d(2019, 1, 1), 2.0)]).unwrap();
        assert_eq!(s.date(1), d(2019, 1, 1));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let s = DailySeries::new(d(2016, 2, 28), vec![1.5, 2.25, 3.0]).unwrap();
        s.write_csv(&p).unwrap();
        assert!(std::fs::read_to_string(&p).unwrap().starts_with("date,value\n2016-02-28,1.5\n"));
        assert_eq!(DailySeries::read_csv(&p).unwrap(), s);
    }

    #[test]
    fn finnish_calendar() {
        let cal = HolidayCalendar::finnish();
        assert_eq!(cal.entries().len(), 7 * 15);
        assert_eq!(cal.on(d(2018, 4, 1)).collect::<Vec<_>>(), vec!["Easter Sunday"]);
        assert_eq!(cal.on(d(2017, 6, 24)).collect::<Vec<_>>(), vec!["Midsummer Day"]);
        assert_eq!(cal.on(d(2018, 4, 3)).count(), 0);
    }
}
