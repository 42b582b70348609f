mod describe;
mod forecast;
mod mobility;
mod predictability;
mod synth;
mod temporal;

use std::path::PathBuf;

use eiot_core::data::{filter_iot, ingest, Dataset, FilterOptions, FilterReport, TimeRange};
use eiot_core::Error;
use serde::Serialize;

use crate::args::{Cli, Command, DataArgs, ForecastCommand, MobilityCommand};
use crate::{Failure, Outcome};

pub fn run(cli: Cli) -> Outcome {
    let out = cli.out;
    match cli.command {
        Command::Synth(a) => synth::run(&out, &a),
        Command::Describe(a) => describe::run(&out, &a),
        Command::Spectrum(a) => temporal::spectrum(&out, &a),
        Command::Cluster(a) => temporal::cluster(&out, &a),
        Command::Mobility(MobilityCommand::Fit(a)) => mobility::fit(&out, &a),
        Command::Mobility(MobilityCommand::Synth(a)) => mobility::synth(&out, &a),
        Command::Predictability(a) => predictability::run(&out, &a),
        Command::Forecast(ForecastCommand::Fit(a)) => forecast::fit(&out, &a),
        Command::Forecast(ForecastCommand::Predict(a)) => forecast::predict(&out, &a),
        Command::Forecast(ForecastCommand::Backtest(a)) => forecast::backtest(&out, &a),
    }
}

/// Dataset after the IoT filter, plus the analysis window.
pub struct Loaded {
    pub ds: Dataset,
    pub window: TimeRange,
    pub filter: Option<FilterReport>,
}

#[derive(Serialize)]
pub struct LoadSummary<'a> {
    pub window: String,
    pub devices: usize,
    pub records: usize,
    pub filter: &'a Option<FilterReport>,
}

impl Loaded {
    pub fn summary(&self) -> LoadSummary<'_> {
        LoadSummary {
            window: self.window.to_string(),
            devices: self.ds.device_ids().len(),
            records: self.ds.records_in(self.window).count(),
            filter: &self.filter,
        }
    }
}

fn table_path(args: &DataArgs, explicit: &Option<PathBuf>, name: &str) -> Result<PathBuf, Failure> {
    match (explicit, &args.data) {
        (Some(p), _) => Ok(p.clone()),
        (None, Some(dir)) => Ok(dir.join(format!("{name}.csv"))),
        (None, None) => Err(Failure::Usage(format!("no input: pass --data DIR or --{name} FILE"))),
    }
}

pub fn load(args: &DataArgs) -> Result<Loaded, Failure> {
    let ddr = table_path(args, &args.ddr, "ddr")?;
    let features = table_path(args, &args.features, "features")?;
    let companies = table_path(args, &args.companies, "companies")?;
    let (ds, report) = ingest(&ddr, &features, &companies)?;
    for m in &report.malformed {
        log::warn!("skipped malformed row: {m:?}");
    }
    log::info!("ingested {} DDR rows", report.ddr_rows);
    let (ds, filter) = if args.all_devices {
        (ds, None)
    } else {
        let (ds, r) = filter_iot(&ds, FilterOptions { drop_maybe_iot: args.strict_iot });
        log::info!("IoT filter removed {} of {} devices", r.removed_devices, r.total_devices);
        (ds, Some(r))
    };
    let window = match args.window {
        Some(w) => w,
        None => ds.full_range().ok_or_else(|| Error::invalid("no records left after filtering"))?,
    };
    Ok(Loaded { ds, window, filter })
}
