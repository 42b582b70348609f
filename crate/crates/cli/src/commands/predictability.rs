use std::path::Path;

use eiot_core::data::EligibilityRule;
use eiot_core::predictability::{predictability_report, PredictabilityOptions};
use serde_json::json;

use super::load;
use crate::args::PredictabilityArgs;
use crate::output::{ecdf_rows, Output, ECDF_HEADER};
use crate::Outcome;

/// Industry codes go into file names; keep them path-safe.
fn file_key(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

pub fn run(dir: &Path, args: &PredictabilityArgs) -> Outcome {
    let data = load(&args.data)?;
    let out = Output::new(dir, "predictability", args, None)?;
    let opts = PredictabilityOptions {
        min_len: args.min_len,
        rule: EligibilityRule { min_companies: args.min_companies, max_dominance: args.max_dominance },
    };
    let report = predictability_report(&data.ds, data.window, &opts)?;
    out.table(
        "predictability.csv",
        &["device_id", "industry", "n", "N", "h_rate", "pi_max"],
        report.per_device.iter().map(|r| {
            vec![
                r.device_id.clone(),
                r.industry.clone().unwrap_or_default(),
                r.n.to_string(),
                r.n_distinct.to_string(),
                r.h_rate.to_string(),
                r.pi_max.to_string(),
            ]
        }),
    )?;
    let mut industries = serde_json::Map::new();
    for (ind, ecdf) in &report.by_industry {
        let name = format!("predictability_ecdf_{}.csv", file_key(ind));
        out.table(&name, ECDF_HEADER, ecdf_rows(&ecdf.points()))?;
        industries.insert(
            ind.clone(),
            json!({ "file": name, "devices": ecdf.len(), "median_pi_max": ecdf.median(), "mean_pi_max": ecdf.mean() }),
        );
    }
    out.json(
        "predictability_summary.json",
        &json!({
            "data": data.summary(),
            "total_devices": report.total_devices,
            "scored_devices": report.per_device.len(),
            "excluded_short": report.excluded_short,
            "excluded_fraction": report.excluded_fraction,
            "industries": industries,
        }),
    )?;
    Ok(())
}
