//! CSV ingest and export for the DDR table and its two side tables.
//!
//! Headers are checked verbatim. Rows that fail to parse are collected in an
//! [`IngestReport`]; more than 10% bad rows in any one file aborts the load,
//! since that usually means the file is not in the expected schema at all.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use csv::StringRecord;
use serde::Serialize;

use super::types::{
    format_hour, parse_hour, Capability, CompanyProfile, DataDetailRecord, Dataset, DeviceProfile,
    IotCategory,
};
use crate::error::{Error, Result};

pub const DDR_HEADER: &[&str] = &[
    "device_id",
    "cell_id",
    "company_id",
    "tac",
    "hour_utc",
    "uplink_bytes",
    "downlink_bytes",
];

pub const FEATURES_HEADER: &[&str] = &[
    "tac",
    "cm_model",
    "cm_release_year",
    "gprs",
    "edge",
    "hsdpa",
    "hsupa",
    "lte",
    "iot_category",
];

/// Optional trailing column of the feature table, used for vendor concentration.
pub const VENDOR_COLUMN: &str = "vendor";

pub const COMPANIES_HEADER: &[&str] = &["company_id", "industry_code"];

const MAX_MALFORMED_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MalformedRow {
    pub file: PathBuf,
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct IngestReport {
    pub ddr_rows: usize,
    pub feature_rows: usize,
    pub company_rows: usize,
    pub malformed: Vec<MalformedRow>,
}

/// Load the three tables and join them into a [`Dataset`].
pub fn ingest(
    ddr_path: &Path,
    features_path: &Path,
    companies_path: &Path,
) -> Result<(Dataset, IngestReport)> {
    let mut report = IngestReport::default();

    let records = read_table(ddr_path, DDR_HEADER, false, &mut report.malformed, parse_ddr_row)?;
    report.ddr_rows = records.len();

    let features = read_table(
        features_path,
        FEATURES_HEADER,
        true,
        &mut report.malformed,
        parse_feature_row,
    )?;
    report.feature_rows = features.len();

    let companies = read_table(
        companies_path,
        COMPANIES_HEADER,
        false,
        &mut report.malformed,
        parse_company_row,
    )?;
    report.company_rows = companies.len();

    let devices: BTreeMap<_, _> = features.into_iter().map(|p| (p.tac.clone(), p)).collect();
    let companies: BTreeMap<_, _> =
        companies.into_iter().map(|c| (c.company_id.clone(), c)).collect();
    for m in &report.malformed {
        log::warn!("{}:{}: {}", m.file.display(), m.line, m.reason);
    }
    Ok((Dataset::new(records, devices, companies)?, report))
}

fn open(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|source| Error::Io { path: path.into(), source })?;
    Ok(csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(file))
}

fn read_table<T>(
    path: &Path,
    expected: &[&str],
    allow_vendor: bool,
    malformed: &mut Vec<MalformedRow>,
    parse: fn(&StringRecord, bool) -> Result<T>,
) -> Result<Vec<T>> {
    let mut rdr = open(path)?;
    let header = rdr
        .headers()
        .map_err(|source| Error::Csv { path: path.into(), source })?
        .clone();
    let found: Vec<&str> = header.iter().map(str::trim).collect();
    let has_vendor = allow_vendor
        && found.len() == expected.len() + 1
        && found.last() == Some(&VENDOR_COLUMN);
    let body = if has_vendor { &found[..expected.len()] } else { &found[..] };
    if body != expected {
        return Err(Error::Header {
            path: path.into(),
            expected: expected.join(","),
            found: found.join(","),
        });
    }

    let mut rows = Vec::new();
    let mut bad = Vec::new();
    let mut total = 0usize;
    for rec in rdr.records() {
        total += 1;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                bad.push(MalformedRow { file: path.into(), line, reason: e.to_string() });
                continue;
            }
        };
        let line = rec.position().map_or(0, |p| p.line());
        let want = expected.len() + usize::from(has_vendor);
        if rec.len() != want {
            bad.push(MalformedRow {
                file: path.into(),
                line,
                reason: format!("expected {want} fields, found {}", rec.len()),
            });
            continue;
        }
        match parse(&rec, has_vendor) {
            Ok(v) => rows.push(v),
            Err(e) => bad.push(MalformedRow { file: path.into(), line, reason: e.to_string() }),
        }
    }

    if total > 0 && bad.len() as f64 > MAX_MALFORMED_FRACTION * total as f64 {
        return Err(Error::TooManyMalformed {
            path: path.into(),
            malformed: bad.len(),
            total,
            first: format!("line {}: {}", bad[0].line, bad[0].reason),
        });
    }
    malformed.extend(bad);
    Ok(rows)
}

fn nonempty<'a>(rec: &'a StringRecord, i: usize, name: &str) -> Result<&'a str> {
    let v = rec.get(i).map(str::trim).unwrap_or("");
    if v.is_empty() {
        return Err(Error::invalid(format!("empty {name}")));
    }
    Ok(v)
}

fn bytes_field(rec: &StringRecord, i: usize, name: &str) -> Result<u64> {
    let v = nonempty(rec, i, name)?;
    v.parse::<u64>().map_err(|_| Error::invalid(format!("{name} `{v}` is not a non-negative integer")))
}

fn parse_ddr_row(rec: &StringRecord, _: bool) -> Result<DataDetailRecord> {
    let tac = nonempty(rec, 3, "tac")?;
    if tac.len() != 8 || !tac.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::invalid(format!("tac `{tac}` is not 8 digits")));
    }
    let r = DataDetailRecord {
        device_id: nonempty(rec, 0, "device_id")?.to_string(),
        cell_id: nonempty(rec, 1, "cell_id")?.to_string(),
        company_id: nonempty(rec, 2, "company_id")?.to_string(),
        tac: tac.to_string(),
        hour: parse_hour(nonempty(rec, 4, "hour_utc")?)?,
        uplink_bytes: bytes_field(rec, 5, "uplink_bytes")?,
        downlink_bytes: bytes_field(rec, 6, "downlink_bytes")?,
    };
    if r.total_bytes() == 0 {
        return Err(Error::invalid("record carries no traffic"));
    }
    Ok(r)
}

fn flag(rec: &StringRecord, i: usize) -> Result<bool> {
    match rec.get(i).map(str::trim) {
        Some("1") => Ok(true),
        Some("0") => Ok(false),
        other => Err(Error::invalid(format!(
            "capability column {} must be 0/1, found `{}`",
            FEATURES_HEADER[i],
            other.unwrap_or("")
        ))),
    }
}

fn parse_feature_row(rec: &StringRecord, has_vendor: bool) -> Result<DeviceProfile> {
    let year = match rec.get(2).map(str::trim) {
        None | Some("") => None,
        Some(y) => Some(
            y.parse::<i32>()
                .map_err(|_| Error::invalid(format!("cm_release_year `{y}` is not a year")))?,
        ),
    };
    let mut capabilities = std::collections::BTreeSet::new();
    for (i, cap) in Capability::ALL.iter().enumerate() {
        if flag(rec, 3 + i)? {
            capabilities.insert(*cap);
        }
    }
    let iot_category: IotCategory = nonempty(rec, 8, "iot_category")?.parse()?;
    let vendor = if has_vendor {
        rec.get(9).map(str::trim).filter(|v| !v.is_empty()).map(str::to_string)
    } else {
        None
    };
    Ok(DeviceProfile {
        tac: nonempty(rec, 0, "tac")?.to_string(),
        cm_model: rec.get(1).map(str::trim).unwrap_or("").to_string(),
        cm_release_year: year,
        capabilities,
        iot_category,
        vendor,
    })
}

fn parse_company_row(rec: &StringRecord, _: bool) -> Result<CompanyProfile> {
    Ok(CompanyProfile {
        company_id: nonempty(rec, 0, "company_id")?.to_string(),
        industry_code: nonempty(rec, 1, "industry_code")?.to_string(),
    })
}

fn create(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|source| Error::Io { path: path.into(), source })?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv { path: path.into(), source }
}

pub fn write_ddr_csv(path: &Path, records: &[DataDetailRecord]) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(DDR_HEADER).map_err(csv_err(path))?;
    for r in records {
        w.write_record([
            r.device_id.as_str(),
            r.cell_id.as_str(),
            r.company_id.as_str(),
            r.tac.as_str(),
            &format_hour(&r.hour),
            &r.uplink_bytes.to_string(),
            &r.downlink_bytes.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    flush(w, path)
}

pub fn write_features_csv<'a>(
    path: &Path,
    profiles: impl IntoIterator<Item = &'a DeviceProfile>,
) -> Result<()> {
    let mut w = create(path)?;
    let mut header: Vec<&str> = FEATURES_HEADER.to_vec();
    header.push(VENDOR_COLUMN);
    w.write_record(&header).map_err(csv_err(path))?;
    for p in profiles {
        let mut row = vec![
            p.tac.clone(),
            p.cm_model.clone(),
            p.cm_release_year.map(|y| y.to_string()).unwrap_or_default(),
        ];
        row.extend(Capability::ALL.iter().map(|c| if p.has(*c) { "1" } else { "0" }.to_string()));
        row.push(p.iot_category.as_str().to_string());
        row.push(p.vendor.clone().unwrap_or_default());
        w.write_record(&row).map_err(csv_err(path))?;
    }
    flush(w, path)
}

pub fn write_companies_csv<'a>(
    path: &Path,
    companies: impl IntoIterator<Item = &'a CompanyProfile>,
) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(COMPANIES_HEADER).map_err(csv_err(path))?;
    for c in companies {
        w.write_record([c.company_id.as_str(), c.industry_code.as_str()]).map_err(csv_err(path))?;
    }
    flush(w, path)
}

fn flush(w: csv::Writer<File>, path: &Path) -> Result<()> {
    let mut f = w
        .into_inner()
        .map_err(|e| Error::Io { path: path.into(), source: e.into_error() })?;
    f.flush().map_err(|source| Error::Io { path: path.into(), source })
}
