use std::collections::BTreeMap;

use eiot_core::fixtures::{generate, FixtureProfile, LOW_ACTIVITY_SHARE};
use eiot_core::mobility::{device_cell_sequences, MarkovMixtureModel};
use eiot_core::predictability::{predictability_report, PredictabilityOptions};
use eiot_core::temporal::{cluster_profiles, daily_profiles, hourly_series, Direction, KMeansConfig};

#[test]
fn outputs_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let fa = generate(FixtureProfile::Full, 60, 17).unwrap().write(a.path()).unwrap();
    let fb = generate(FixtureProfile::Full, 60, 17).unwrap().write(b.path()).unwrap();
    assert_eq!(fa.len(), 5);
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), "{}", x.display());
    }
    let other = tempfile::tempdir().unwrap();
    let fc = generate(FixtureProfile::Full, 60, 18).unwrap().write(other.path()).unwrap();
    assert_ne!(std::fs::read(&fa[0]).unwrap(), std::fs::read(&fc[0]).unwrap());
}

/// Block transitions observed in the DDR of the dominant component's
/// devices against the reference rows. A single-cell block cannot repeat in a
/// run-compressed sequence, so its self-transition is removed from the
/// reference row before comparing.
#[test]
fn mobility_follows_reference_transitions() {
    let fx = generate(FixtureProfile::Mobility, 1200, 5).unwrap();
    let ds = fx.dataset().unwrap();
    let model = MarkovMixtureModel::reference();
    let agg = &model.aggregation;
    let d = agg.d();
    let seqs = device_cell_sequences(&ds, ds.full_range().unwrap());
    let mut counts = vec![vec![0.0f64; d]; d];
    let mut total = 0usize;
    for dev in fx.truth.devices.iter().filter(|t| t.component == Some(0)) {
        let rank: BTreeMap<&str, usize> = dev.cells.iter().enumerate().map(|(r, c)| (c.as_str(), r)).collect();
        let blocks: Vec<usize> = seqs[&dev.device_id].iter().map(|c| agg.block_of(rank[c.as_str()])).collect();
        for w in blocks.windows(2) {
            counts[w[0]][w[1]] += 1.0;
            total += 1;
        }
    }
    assert!(total >= 10_000, "{total} transitions");
    let mut checked = 0;
    for (b, row) in counts.iter().enumerate() {
        let n: f64 = row.iter().sum();
        // rows seen less often are too noisy for a 0.02 tolerance
        if n < 4000.0 {
            continue;
        }
        let mut want = model.transition[0][b].clone();
        if agg.members(b).len() == 1 {
            let stay = want[b];
            want[b] = 0.0;
            want.iter_mut().for_each(|p| *p /= 1.0 - stay);
        }
        for (c, w) in row.iter().zip(&want) {
            assert!((c / n - w).abs() < 0.02, "block {b}: {} vs {w}", c / n);
        }
        checked += 1;
    }
    assert!(checked >= 2, "only {checked} rows had enough transitions");
}

#[test]
fn low_activity_share_is_excluded_by_length_filter() {
    let fx = generate(FixtureProfile::Mobility, 500, 2).unwrap();
    let ds = fx.dataset().unwrap();
    let r = predictability_report(&ds, ds.full_range().unwrap(), &PredictabilityOptions::default()).unwrap();
    assert_eq!(r.total_devices, 500);
    assert!((r.excluded_fraction - LOW_ACTIVITY_SHARE).abs() < 0.01, "{}", r.excluded_fraction);
    assert!(!r.by_industry.contains_key("K"));
    assert_eq!(r.by_industry.len(), 4);
}

#[test]
fn full_profile_clusters_into_three() {
    let fx = generate(FixtureProfile::Full, 400, 3).unwrap();
    let ds = fx.dataset().unwrap();
    let series = hourly_series(&ds, ds.full_range().unwrap(), Direction::Total);
    let (profiles, excluded) = daily_profiles(&series);
    assert!(excluded.is_empty());
    let m = cluster_profiles(&profiles, &KMeansConfig::default()).unwrap();
    assert_eq!(m.k, 3);
    let mut shares = m.shares.clone();
    shares.sort_by(f64::total_cmp);
    for (s, want) in shares.iter().zip([0.25, 0.34, 0.41]) {
        assert!((s - want).abs() < 0.05, "{shares:?}");
    }
}
