//! DDR data model, CSV ingest, IoT/industry filters and traffic aggregation.

mod aggregate;
mod filter;
mod io;
mod types;

pub use aggregate::{aggregate_traffic, moving_average, AggregateRow, GroupBy};
pub use filter::{eligible_industries, filter_iot, EligibilityRule, FilterOptions, FilterReport};
pub use io::{
    ingest, write_companies_csv, write_ddr_csv, write_features_csv, IngestReport, MalformedRow,
    COMPANIES_HEADER, DDR_HEADER, FEATURES_HEADER,
};
pub use types::{
    format_hour, parse_hour, Capability, CompanyProfile, DataDetailRecord, Dataset, DeviceProfile,
    Hour, IotCategory, Month, TacPolicy, TimeRange,
};
pub(crate) use types::argmax_lexicographic;
