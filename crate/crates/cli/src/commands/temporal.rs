use std::path::Path;

use eiot_core::temporal::{
    adjusted_rand_index, cluster_profiles, daily_profiles, dwt_haar, hourly_series, periodogram_peak, ward_oracle,
    Direction, KMeansConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::load;
use crate::args::{ClusterArgs, DirectionArg, SpectrumArgs};
use crate::output::Output;
use crate::{Failure, Outcome};

fn direction(d: DirectionArg) -> Direction {
    match d {
        DirectionArg::Total => Direction::Total,
        DirectionArg::Uplink => Direction::Uplink,
        DirectionArg::Downlink => Direction::Downlink,
    }
}

pub fn spectrum(dir: &Path, args: &SpectrumArgs) -> Outcome {
    let data = load(&args.data)?;
    let out = Output::new(dir, "spectrum", args, None)?;
    let series = hourly_series(&data.ds, data.window, direction(args.direction));
    let mut peaks = Vec::with_capacity(series.len());
    let mut skipped = Vec::new();
    for s in &series {
        match periodogram_peak(s) {
            Ok(p) => peaks.push(p),
            Err(e) => {
                log::warn!("{}: {e}", s.device_id);
                skipped.push(s.device_id.clone());
            }
        }
    }
    out.table(
        "spectrum.csv",
        &["device_id", "peak_power", "period_hours"],
        peaks.iter().map(|p| vec![p.device_id.clone(), p.peak_power.to_string(), p.period_hours.to_string()]),
    )?;
    let daily = peaks.iter().filter(|p| (p.period_hours - 24.0).abs() < 1e-9).count();
    out.json(
        "spectrum_summary.json",
        &json!({
            "data": data.summary(),
            "devices": peaks.len(),
            "skipped": skipped,
            "period_24h_share": (!peaks.is_empty()).then(|| daily as f64 / peaks.len() as f64),
        }),
    )?;
    Ok(())
}

pub fn cluster(dir: &Path, args: &ClusterArgs) -> Outcome {
    if args.k_min < 2 || args.k_max < args.k_min {
        return Err(Failure::Usage("need 2 <= --k-min <= --k-max".into()));
    }
    let data = load(&args.data)?;
    let out = Output::new(dir, "cluster", args, Some(args.seed))?;
    let series = hourly_series(&data.ds, data.window, direction(args.direction));
    let (profiles, excluded) = daily_profiles(&series);
    let cfg = KMeansConfig {
        k_min: args.k_min,
        k_max: args.k_max,
        seed: args.seed,
        silhouette_sample: args.silhouette_sample,
        ..Default::default()
    };
    let model = cluster_profiles(&profiles, &cfg)?;

    out.table(
        "assignments.csv",
        &["device_id", "cluster"],
        model.assignments.iter().map(|(d, c)| vec![d.clone(), c.to_string()]),
    )?;
    let mut header = vec!["cluster".to_string(), "share".to_string()];
    header.extend((0..24).map(|h| format!("h{h:02}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.table(
        "centroids.csv",
        &header,
        model.centroid_profiles.iter().enumerate().map(|(c, p)| {
            let mut row = vec![c.to_string(), model.shares[c].to_string()];
            row.extend(p.iter().map(f64::to_string));
            row
        }),
    )?;

    let ward = if args.ward_sample > 0 && profiles.len() > args.k_min {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        let n = profiles.len();
        let mut idx = rand::seq::index::sample(&mut rng, n, args.ward_sample.min(n)).into_vec();
        idx.sort_unstable();
        let points: Vec<Vec<f64>> = idx.iter().map(|&i| dwt_haar(&profiles[i])).collect();
        let fit = ward_oracle(&points, args.k_max)?;
        let km: Vec<usize> = idx.iter().map(|&i| model.assignments[&profiles[i].device_id]).collect();
        let ari = adjusted_rand_index(&fit.best.labels, &km);
        Some(json!({
            "sample": idx.len(),
            "k": fit.best.k,
            "davies_bouldin": fit.davies_bouldin,
            "adjusted_rand_vs_kmeans": ari,
        }))
    } else {
        None
    };
    out.json(
        "cluster_summary.json",
        &json!({
            "data": data.summary(),
            "devices": profiles.len(),
            "excluded_zero_traffic": excluded.len(),
            "k": model.k,
            "silhouette": model.silhouette,
            "shares": model.shares,
            "silhouette_by_k": model.scores,
            "ward": ward,
        }),
    )?;
    Ok(())
}
