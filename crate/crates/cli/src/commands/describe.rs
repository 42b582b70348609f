use std::collections::BTreeMap;
use std::path::Path;

use eiot_core::data::{aggregate_traffic, format_hour, moving_average, Month};
use eiot_core::descriptive::{
    cells_visited, cm_age, concentration, feature_penetration, ud_log_ratio, vendor_hhi, ConcentrationWeight,
};
use serde_json::json;

use super::load;
use crate::args::DescribeArgs;
use crate::output::{ecdf_rows, Output, ECDF_HEADER};
use crate::Outcome;

fn num(v: f64) -> String {
    v.to_string()
}

pub fn run(dir: &Path, args: &DescribeArgs) -> Outcome {
    let data = load(&args.data)?;
    let (ds, window) = (&data.ds, data.window);
    let out = Output::new(dir, "describe", args, None)?;
    let month = args.month.unwrap_or_else(|| Month::of(window.start));

    let ud = ud_log_ratio(ds, window);
    let mut rows: Vec<Vec<String>> = ud.finite.iter().map(|(d, r)| vec![d.clone(), num(*r)]).collect();
    rows.extend(ud.uplink_only.iter().map(|d| vec![d.clone(), "inf".into()]));
    rows.extend(ud.downlink_only.iter().map(|d| vec![d.clone(), "-inf".into()]));
    rows.sort();
    out.table("ud_log_ratio.csv", &["device_id", "log10_ud_ratio"], rows)?;
    let ud_ecdf = ud.ecdf();
    out.table("ud_log_ratio_ecdf.csv", ECDF_HEADER, ecdf_rows(&ud_ecdf.points()))?;

    let cells = cells_visited(ds, window);
    out.table(
        "cells_visited.csv",
        &["device_id", "cells"],
        cells.iter().map(|(d, c)| vec![d.clone(), c.to_string()]),
    )?;
    let cells_ecdf = eiot_core::descriptive::Ecdf::new(cells.values().map(|&c| c as f64));
    out.table("cells_visited_ecdf.csv", ECDF_HEADER, ecdf_rows(&cells_ecdf.points()))?;

    for (weight, name) in [
        (ConcentrationWeight::Traffic, "concentration_traffic.csv"),
        (ConcentrationWeight::Devices, "concentration_devices.csv"),
    ] {
        let curve = concentration(ds, weight, window)?;
        out.table(
            name,
            &["cell_fraction", "cumulative_share"],
            curve.points.iter().map(|(x, y)| vec![num(*x), num(*y)]),
        )?;
    }

    let age = cm_age(ds, month);
    let mut rows: Vec<Vec<String>> = age.by_industry.iter().map(|(i, a)| vec![i.clone(), num(*a)]).collect();
    if let Some(all) = age.overall {
        rows.push(vec!["all".into(), num(all)]);
    }
    out.table("cm_age.csv", &["industry", "mean_age_years"], rows)?;

    let pen = feature_penetration(ds, month);
    let mut rows: Vec<Vec<String>> =
        pen.by_capability.iter().map(|(c, s)| vec![c.as_str().to_string(), num(*s)]).collect();
    rows.push(vec!["2G_ONLY".into(), num(pen.two_g_only)]);
    out.table("feature_penetration.csv", &["capability", "device_share"], rows)?;

    let vendor = match vendor_hhi(ds, month) {
        Ok(v) => Some(v),
        Err(e) => {
            log::warn!("vendor HHI not available: {e}");
            None
        }
    };

    let agg = aggregate_traffic(ds, args.group_by, args.period_days)?;
    let mut by_group: BTreeMap<&str, Vec<(chrono::DateTime<chrono::Utc>, f64)>> = BTreeMap::new();
    for r in &agg {
        by_group.entry(&r.group).or_default().push((r.period_start, (r.uplink_bytes + r.downlink_bytes) as f64));
    }
    let mut ma: BTreeMap<(&str, String), Option<f64>> = BTreeMap::new();
    for (g, series) in &by_group {
        for (t, v) in moving_average(series, args.ma_window)? {
            ma.insert((g, format_hour(&t)), v);
        }
    }
    let agg_name = format!("traffic_by_{}.csv", args.group_by);
    out.table(
        &agg_name,
        &["group", "period_start", "uplink_bytes", "downlink_bytes", "device_count", "total_bytes_ma"],
        agg.iter().map(|r| {
            let t = format_hour(&r.period_start);
            let m = ma.get(&(r.group.as_str(), t.clone())).copied().flatten();
            vec![
                r.group.clone(),
                t,
                r.uplink_bytes.to_string(),
                r.downlink_bytes.to_string(),
                r.device_count.to_string(),
                m.map(num).unwrap_or_default(),
            ]
        }),
    )?;

    let n_ud = ud.finite.len() + ud.uplink_only.len() + ud.downlink_only.len();
    let uplink_dominant = (n_ud > 0).then(|| {
        (ud.finite.values().filter(|r| **r > 0.0).count() + ud.uplink_only.len()) as f64 / n_ud as f64
    });
    let summary = json!({
        "data": data.summary(),
        "month": month.to_string(),
        "ud_log_ratio": {
            "finite": ud.finite.len(),
            "uplink_only": ud.uplink_only.len(),
            "downlink_only": ud.downlink_only.len(),
            "uplink_dominant_share": uplink_dominant,
            "median": ud_ecdf.median(),
        },
        "cells_visited": { "median": cells_ecdf.median(), "mean": cells_ecdf.mean() },
        "cm_age": { "overall": age.overall, "missing_release_year": age.missing_release_year },
        "feature_penetration": { "devices": pen.devices, "two_g_only": pen.two_g_only },
        "vendor_hhi": vendor,
        "aggregate_file": agg_name,
    });
    out.json("describe_summary.json", &summary)?;
    Ok(())
}
