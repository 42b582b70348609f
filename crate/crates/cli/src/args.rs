use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eiot_core::data::{GroupBy, Month, TimeRange};
use serde::{Serialize, Serializer};

#[derive(Debug, Parser)]
#[command(name = "eiot", about = "Enterprise IoT cellular telemetry analysis")]
pub struct Cli {
    /// Output directory; defaults to $EIOT_OUT_DIR, then the current directory.
    #[arg(long, global = true, env = "EIOT_OUT_DIR", default_value = ".")]
    pub out: PathBuf,

    /// Print progress information.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    pub fn log_level(&self) -> &'static str {
        match self.verbose {
            0 => "warn",
            1 => "info",
            _ => "debug",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic DDR population with ground truth.
    Synth(SynthArgs),
    /// Descriptive statistics: ratios, cells, concentration, module age, features.
    Describe(DescribeArgs),
    /// Per-device periodogram peak.
    Spectrum(SpectrumArgs),
    /// Cluster daily traffic profiles.
    Cluster(ClusterArgs),
    /// Markov-mixture mobility models.
    #[command(subcommand)]
    Mobility(MobilityCommand),
    /// Entropy rate and maximum predictability per device.
    Predictability(PredictabilityArgs),
    /// Daily traffic forecasting.
    #[command(subcommand)]
    Forecast(ForecastCommand),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Describe(_) => "describe",
            Command::Spectrum(_) => "spectrum",
            Command::Cluster(_) => "cluster",
            Command::Mobility(MobilityCommand::Fit(_)) => "mobility fit",
            Command::Mobility(MobilityCommand::Synth(_)) => "mobility synth",
            Command::Predictability(_) => "predictability",
            Command::Forecast(ForecastCommand::Fit(_)) => "forecast fit",
            Command::Forecast(ForecastCommand::Predict(_)) => "forecast predict",
            Command::Forecast(ForecastCommand::Backtest(_)) => "forecast backtest",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum MobilityCommand {
    /// Fit a mixture of Markov chains to cell sequences.
    Fit(MobilityFitArgs),
    /// Generate sequences from a fitted model.
    Synth(MobilitySynthArgs),
}

#[derive(Debug, Subcommand)]
pub enum ForecastCommand {
    /// Fit a model to a daily series.
    Fit(ForecastFitArgs),
    /// Extend a fitted model into the future.
    Predict(ForecastPredictArgs),
    /// Rolling-origin backtest.
    Backtest(BacktestArgs),
}

fn display<T: fmt::Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn display_opt<T: fmt::Display, S: Serializer>(v: &Option<T>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.collect_str(v),
        None => s.serialize_none(),
    }
}

/// Where the three input tables come from.
#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// Directory holding ddr.csv, features.csv and companies.csv.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub ddr: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub companies: Option<PathBuf>,
    /// Keep devices whose module is not classified as IoT.
    #[arg(long)]
    pub all_devices: bool,
    /// Also drop devices whose module is only possibly IoT.
    #[arg(long)]
    pub strict_iot: bool,
    /// Analysis window, START:END (dates, END exclusive) or START..END (RFC 3339).
    /// Defaults to the whole data span.
    #[arg(long)]
    #[serde(serialize_with = "display_opt")]
    pub window: Option<TimeRange>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileArg {
    Mobility,
    Traffic,
    Full,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "full")]
    pub profile: ProfileArg,
    /// Number of devices.
    #[arg(long, default_value_t = 100)]
    pub scale: usize,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct DescribeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Month for module-age, feature and vendor statistics (YYYY-MM);
    /// defaults to the month the window starts in.
    #[arg(long)]
    #[serde(serialize_with = "display_opt")]
    pub month: Option<Month>,
    /// Traffic aggregation key: device, company, industry, cell or all.
    #[arg(long, default_value = "industry")]
    #[serde(serialize_with = "display")]
    pub group_by: GroupBy,
    #[arg(long, default_value_t = 1)]
    pub period_days: u32,
    /// Moving-average window over aggregated periods.
    #[arg(long, default_value_t = 7)]
    pub ma_window: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionArg {
    Total,
    Uplink,
    Downlink,
}

#[derive(Debug, Args, Serialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "total")]
    pub direction: DirectionArg,
}

#[derive(Debug, Args, Serialize)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "total")]
    pub direction: DirectionArg,
    #[arg(long, default_value_t = 2)]
    pub k_min: usize,
    #[arg(long, default_value_t = 10)]
    pub k_max: usize,
    #[arg(long)]
    pub seed: u64,
    /// Points scored per silhouette evaluation.
    #[arg(long, default_value_t = 5000)]
    pub silhouette_sample: usize,
    /// Sample size for the Ward cross-check; 0 skips it.
    #[arg(long, default_value_t = 2000)]
    pub ward_sample: usize,
}

/// Inclusive integer range written `LO:HI`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KRange {
    pub lo: usize,
    pub hi: usize,
}

impl FromStr for KRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(':').unwrap_or((s, s));
        let lo: usize = a.trim().parse().map_err(|_| format!("bad K range `{s}`, expected LO:HI"))?;
        let hi: usize = b.trim().parse().map_err(|_| format!("bad K range `{s}`, expected LO:HI"))?;
        if lo == 0 || hi < lo {
            return Err(format!("K range `{s}` must satisfy 1 <= LO <= HI"));
        }
        Ok(KRange { lo, hi })
    }
}

impl fmt::Display for KRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lo, self.hi)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct MobilityFitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Read rank-encoded sequences from a CSV (device_id,sequence) instead of DDR data.
    #[arg(long, conflicts_with_all = ["data", "ddr"])]
    pub sequences: Option<PathBuf>,
    #[arg(long, default_value = "1:4")]
    #[serde(serialize_with = "display")]
    pub k_range: KRange,
    /// Search state aggregations as well as K.
    #[arg(long)]
    pub fss: bool,
    #[arg(long)]
    pub seed: u64,
    /// Devices sampled for fitting.
    #[arg(long, default_value_t = 2000)]
    pub sample: usize,
    #[arg(long, default_value_t = 5)]
    pub min_len: usize,
    #[arg(long, default_value_t = 3)]
    pub min_distinct: usize,
    #[arg(long, default_value_t = 50)]
    pub max_distinct: usize,
    /// EM random restarts.
    #[arg(long, default_value_t = 50)]
    pub restarts: usize,
    /// EM iterations per restart before ranking restarts.
    #[arg(long, default_value_t = 10)]
    pub short_iter: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = eiot_core::mobility::MIN_BETA)]
    pub min_beta: f64,
    #[arg(long, default_value_t = eiot_core::mobility::MIN_GAMMA)]
    pub min_gamma: f64,
    /// Merge candidates refitted per aggregation step.
    #[arg(long, default_value_t = 3)]
    pub candidates: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct MobilitySynthArgs {
    /// Model JSON; defaults to the built-in reference model.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long)]
    pub seed: u64,
    /// Length of every sequence.
    #[arg(long, default_value_t = 30)]
    pub length: usize,
    /// Emit block states instead of raw ranks.
    #[arg(long)]
    pub blocks: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictabilityArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Minimum run-compressed sequence length.
    #[arg(long, default_value_t = eiot_core::predictability::DEFAULT_MIN_LEN)]
    pub min_len: usize,
    /// Industries need at least this many companies to get an ECDF.
    #[arg(long, default_value_t = 10)]
    pub min_companies: usize,
    /// Largest admissible share of one company in an industry.
    #[arg(long, default_value_t = 0.8)]
    pub max_dominance: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HolidayArgs {
    /// Holiday CSV (date,name); defaults to the built-in Finnish calendar.
    #[arg(long)]
    pub holidays: Option<PathBuf>,
    #[arg(long, conflicts_with = "holidays")]
    pub no_holidays: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// Candidate trend changepoints.
    #[arg(long, default_value_t = 25)]
    pub changepoints: usize,
    /// Fraction of the history where changepoints may fall.
    #[arg(long, default_value_t = 0.8)]
    pub changepoint_range: f64,
    #[arg(long, default_value_t = 20.0)]
    pub changepoint_l1: f64,
    #[arg(long, default_value_t = 0.01)]
    pub seasonality_l2: f64,
    #[arg(long, default_value_t = 0.01)]
    pub holiday_l2: f64,
    #[arg(long, default_value_t = 3)]
    pub weekly_order: usize,
    #[arg(long, default_value_t = 10)]
    pub yearly_order: usize,
    /// Fit log(y) and exponentiate predictions.
    #[arg(long)]
    pub log_domain: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct ForecastFitArgs {
    /// Daily series CSV (date,value).
    #[arg(long)]
    pub series: PathBuf,
    #[command(flatten)]
    pub holidays: HolidayArgs,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ForecastPredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Days to forecast past the end of the training data.
    #[arg(long, default_value_t = 365)]
    pub days: usize,
}

/// Forecast horizons, `START:END:STEP` or a comma list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Horizons(pub Vec<usize>);

impl FromStr for Horizons {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("bad horizons `{s}`, expected START:END:STEP or a comma list");
        let parse = |x: &str| x.trim().parse::<usize>().map_err(|_| bad());
        let v: Vec<usize> = if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            let [a, b, step] = parts[..] else { return Err(bad()) };
            let (a, b, step) = (parse(a)?, parse(b)?, parse(step)?);
            if step == 0 || b < a {
                return Err(bad());
            }
            (a..=b).step_by(step).collect()
        } else {
            s.split(',').map(parse).collect::<Result<_, _>>()?
        };
        if v.is_empty() || v.contains(&0) {
            return Err(bad());
        }
        Ok(Horizons(v))
    }
}

impl Serialize for Horizons {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct BacktestArgs {
    #[arg(long)]
    pub series: PathBuf,
    #[command(flatten)]
    pub holidays: HolidayArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Initial training window in days.
    #[arg(long, default_value_t = 365)]
    pub train: usize,
    #[arg(long, default_value = "30:180:30")]
    pub horizons: Horizons,
    /// Days between cutoffs.
    #[arg(long, default_value_t = 90)]
    pub period: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizons_forms() {
        assert_eq!("30:180:30".parse::<Horizons>().unwrap().0, vec![30, 60, 90, 120, 150, 180]);
        assert_eq!("7,14".parse::<Horizons>().unwrap().0, vec![7, 14]);
        assert!("30:10:5".parse::<Horizons>().is_err());
        assert!("0,5".parse::<Horizons>().is_err());
    }

    #[test]
    fn k_range_forms() {
        assert_eq!("1:4".parse::<KRange>().unwrap(), KRange { lo: 1, hi: 4 });
        assert_eq!("3".parse::<KRange>().unwrap(), KRange { lo: 3, hi: 3 });
        assert!("4:1".parse::<KRange>().is_err());
        assert!("0:2".parse::<KRange>().is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
