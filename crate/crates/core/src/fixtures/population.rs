use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use super::traffic::{archetype_labels, Archetype, DailySeriesSpec};
use crate::data::{
    write_companies_csv, write_ddr_csv, write_features_csv, Capability, CompanyProfile, DataDetailRecord, Dataset,
    DeviceProfile, IotCategory, TimeRange,
};
use crate::error::{Error, Result};
use crate::forecast::DailySeries;
use crate::mobility::{synthesize_ranks, LengthDist, MarkovMixtureModel};

pub const FIXTURE_DAYS: usize = 30;
/// Share of devices made deliberately short and mostly stationary.
pub const LOW_ACTIVITY_SHARE: f64 = 0.39;
pub const CELL_POOL: usize = 400;
/// Relative noise on each hour's byte count.
pub const HOURLY_NOISE: f64 = 0.1;

pub fn fixture_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2018, 3, 1).expect("valid date")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixtureProfile {
    /// Reference-model mobility, flat daily traffic.
    Mobility,
    /// Archetype daily traffic, stationary devices, plus a daily-total series.
    Traffic,
    /// Both of the above on the same devices.
    Full,
}

impl FixtureProfile {
    fn mobile(self) -> bool {
        matches!(self, FixtureProfile::Mobility | FixtureProfile::Full)
    }

    fn archetypes(self) -> bool {
        matches!(self, FixtureProfile::Traffic | FixtureProfile::Full)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceTruth {
    pub device_id: String,
    pub company_id: String,
    pub tac: String,
    pub archetype: Archetype,
    /// Generating mixture component of a mobile device.
    pub component: Option<usize>,
    pub low_activity: bool,
    /// Cell of each model rank for mobile devices; visited cells otherwise.
    pub cells: Vec<String>,
    /// Visit sequence as generated (before any run compression).
    pub visits: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub profile: FixtureProfile,
    pub scale: usize,
    pub seed: u64,
    pub window: TimeRange,
    pub archetype_shares: BTreeMap<String, f64>,
    pub low_activity_share: f64,
    pub daily_series: Option<DailySeriesSpec>,
    pub devices: Vec<DeviceTruth>,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub records: Vec<DataDetailRecord>,
    pub devices: BTreeMap<String, DeviceProfile>,
    pub companies: BTreeMap<String, CompanyProfile>,
    pub truth: GroundTruth,
    pub daily_series: Option<DailySeries>,
}

const INDUSTRIES: [&str; 4] = ["C", "G", "H", "N"];
const COMPANIES_PER_INDUSTRY: usize = 12;

fn companies() -> BTreeMap<String, CompanyProfile> {
    let mut out: BTreeMap<String, CompanyProfile> = INDUSTRIES
        .iter()
        .enumerate()
        .flat_map(|(k, ind)| {
            (0..COMPANIES_PER_INDUSTRY).map(move |j| {
                let id = format!("co{:03}", k * COMPANIES_PER_INDUSTRY + j);
                (id.clone(), CompanyProfile { company_id: id, industry_code: ind.to_string() })
            })
        })
        .collect();
    // an industry with too few companies for industry-level results
    out.insert("co900".into(), CompanyProfile { company_id: "co900".into(), industry_code: "K".into() });
    out
}

fn device_table() -> BTreeMap<String, DeviceProfile> {
    use Capability::*;
    let rows: [(&str, &str, Option<i32>, &[Capability], IotCategory, &str); 10] = [
        ("35100001", "M2M-GSM-1", Some(2006), &[Gprs], IotCategory::Iot, "Alpha"),
        ("35100002", "M2M-GSM-2", Some(2009), &[Gprs, Edge], IotCategory::Iot, "Alpha"),
        ("35100003", "Telemetry-E", Some(2011), &[Gprs, Edge], IotCategory::Iot, "Beta"),
        ("35100004", "Meter-3G", Some(2012), &[Gprs, Edge, Hsdpa], IotCategory::Iot, "Beta"),
        ("35100005", "Router-3G", Some(2013), &[Gprs, Edge, Hsdpa, Hsupa], IotCategory::Iot, "Gamma"),
        ("35100006", "Tracker-2G", Some(2014), &[Gprs], IotCategory::Iot, "Gamma"),
        ("35100007", "Gateway-LTE", Some(2016), &[Gprs, Edge, Hsdpa, Hsupa, Lte], IotCategory::Iot, "Delta"),
        ("35100008", "Modem-U", Some(2010), &[Gprs, Edge, Hsdpa], IotCategory::MaybeIot, "Delta"),
        ("35100009", "Module-X", None, &[Gprs, Edge], IotCategory::Iot, "Epsilon"),
        ("35100010", "Handset-Q", Some(2015), &[Gprs, Edge, Hsdpa, Hsupa, Lte], IotCategory::NonIot, "Zeta"),
    ];
    rows.iter()
        .map(|(tac, model, year, caps, cat, vendor)| {
            let p = DeviceProfile {
                tac: tac.to_string(),
                cm_model: model.to_string(),
                cm_release_year: *year,
                capabilities: caps.iter().copied().collect(),
                iot_category: *cat,
                vendor: Some(vendor.to_string()),
            };
            (tac.to_string(), p)
        })
        .collect()
}

/// Generate a seeded synthetic population. `scale` is the number of devices.
pub fn generate(profile: FixtureProfile, scale: usize, seed: u64) -> Result<Fixture> {
    if scale == 0 {
        return Err(Error::invalid("scale must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let companies = companies();
    let company_ids: Vec<&String> = companies.keys().collect();
    let devices = device_table();
    // weighted towards IoT modules, one handset TAC at low weight
    let tac_ids: Vec<&String> = devices.keys().collect();
    let hours = FIXTURE_DAYS * 24;
    let t0 = Utc.from_utc_datetime(&fixture_start().and_hms_opt(0, 0, 0).expect("midnight"));
    let window = TimeRange::new(t0, t0 + Duration::hours(hours as i64))?;

    let archetypes = if profile.archetypes() {
        archetype_labels(scale, &Archetype::SHARES, &mut rng)
    } else {
        vec![Archetype::Flat; scale]
    };
    let n_low = if profile.mobile() { (LOW_ACTIVITY_SHARE * scale as f64).round() as usize } else { scale };
    let mut low = vec![false; scale];
    low[..n_low].iter_mut().for_each(|l| *l = true);
    low.shuffle(&mut rng);

    let model = MarkovMixtureModel::reference();
    let n_mobile = scale - n_low;
    let mobile = if n_mobile > 0 {
        Some(synthesize_ranks(&model, n_mobile, &LengthDist::Empirical((20..=60).collect()), rng.random())?)
    } else {
        None
    };

    let volume = LogNormal::new((2e5f64).ln(), 1.0).expect("valid lognormal");
    let eps = Normal::new(0.0, 1.0).expect("unit normal");
    let mut records = Vec::with_capacity(scale * hours);
    let mut truth = Vec::with_capacity(scale);
    let mut next_mobile = 0;
    for i in 0..scale {
        let device_id = format!("dev{i:06}");
        let company_id = company_ids[rng.random_range(0..company_ids.len())].clone();
        let tac = if rng.random::<f64>() < 0.05 {
            tac_ids[tac_ids.len() - 1].clone()
        } else {
            tac_ids[rng.random_range(0..tac_ids.len() - 1)].clone()
        };
        let (cells, visits, component) = if low[i] {
            // one or two cells, alternated, fewer than 20 visits
            let pool = index::sample(&mut rng, CELL_POOL, 2).into_vec();
            let n_cells = rng.random_range(1..=2usize);
            let cells: Vec<String> = pool[..n_cells].iter().map(|c| format!("cell{c:04}")).collect();
            let len = if n_cells == 1 { 1 } else { rng.random_range(2..=12usize) };
            let visits: Vec<String> = (0..len).map(|k| cells[k % n_cells].clone()).collect();
            (cells, visits, None)
        } else {
            let syn = mobile.as_ref().expect("mobile devices exist");
            let seq = &syn.sequences[next_mobile];
            let component = syn.components[next_mobile];
            next_mobile += 1;
            let cells: Vec<String> =
                index::sample(&mut rng, CELL_POOL, model.m()).into_iter().map(|c| format!("cell{c:04}")).collect();
            let visits = seq.states.iter().map(|&r| cells[r].clone()).collect();
            (cells, visits, Some(component))
        };
        let daily = volume.sample(&mut rng);
        let uplink_share = rng.random_range(0.3..0.95);
        let shape = archetypes[i].fractions();
        let len = visits.len();
        for k in 0..len {
            let (from, to) = (k * hours / len, (k + 1) * hours / len);
            for h in from..to {
                let noise = (1.0 + HOURLY_NOISE * eps.sample(&mut rng)).max(0.0);
                let bytes = ((daily * shape[h % 24] * noise).round() as u64).max(1);
                let up = (bytes as f64 * uplink_share).round() as u64;
                records.push(DataDetailRecord {
                    device_id: device_id.clone(),
                    cell_id: visits[k].clone(),
                    company_id: company_id.clone(),
                    tac: tac.clone(),
                    hour: t0 + Duration::hours(h as i64),
                    uplink_bytes: up,
                    downlink_bytes: bytes - up,
                });
            }
        }
        truth.push(DeviceTruth {
            device_id,
            company_id,
            tac,
            archetype: archetypes[i],
            component,
            low_activity: low[i],
            cells,
            visits,
        });
    }

    let (daily_spec, daily_series) = if profile.archetypes() {
        let spec = DailySeriesSpec::default();
        let s = spec.generate(rng.random())?;
        (Some(spec), Some(s))
    } else {
        (None, None)
    };
    let truth = GroundTruth {
        profile,
        scale,
        seed,
        window,
        archetype_shares: Archetype::ALL
            .iter()
            .zip(Archetype::SHARES)
            .map(|(a, s)| (format!("{a:?}"), if profile.archetypes() { s } else if *a == Archetype::Flat { 1.0 } else { 0.0 }))
            .collect(),
        low_activity_share: n_low as f64 / scale as f64,
        daily_series: daily_spec,
        devices: truth,
    };
    Ok(Fixture { records, devices, companies, truth, daily_series })
}

impl Fixture {
    pub fn dataset(&self) -> Result<Dataset> {
        Dataset::new(self.records.clone(), self.devices.clone(), self.companies.clone())
    }

    /// Write `ddr.csv`, `features.csv`, `companies.csv`, `ground_truth.json`
    /// and, when present, `daily_series.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.into(), source })?;
        let ds = self.dataset()?;
        let path = |name: &str| dir.join(name);
        let mut written = Vec::new();
        write_ddr_csv(&path("ddr.csv"), ds.records())?;
        written.push(path("ddr.csv"));
        write_features_csv(&path("features.csv"), self.devices.values())?;
        written.push(path("features.csv"));
        write_companies_csv(&path("companies.csv"), self.companies.values())?;
        written.push(path("companies.csv"));
        let json = serde_json::to_string_pretty(&self.truth)?;
        std::fs::write(path("ground_truth.json"), json + "\n")
            .map_err(|source| Error::Io { path: path("ground_truth.json"), source })?;
        written.push(path("ground_truth.json"));
        if let Some(s) = &self.daily_series {
            s.write_csv(&path("daily_series.csv"))?;
            written.push(path("daily_series.csv"));
        }
        Ok(written)
    }
}
