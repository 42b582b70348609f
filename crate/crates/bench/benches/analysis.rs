use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use eiot_core::fixtures::{archetype_profiles, DailySeriesSpec};
use eiot_core::forecast::{fit, FitConfig, HolidayCalendar};
use eiot_core::mobility::{em_fit, synthesize, EmConfig, LengthDist, MarkovMixtureModel, StateAggregation};
use eiot_core::predictability::{fano_bound, lz_entropy};
use eiot_core::temporal::{cluster_profiles, dwt_haar, periodogram, KMeansConfig};

fn predictability(c: &mut Criterion) {
    let mut g = c.benchmark_group("lz_entropy");
    for n in [1_000usize, 10_000, 100_000] {
        // deterministic pseudo-random walk over 16 states
        let mut s = 0x9e3779b97f4a7c15u64;
        let x: Vec<usize> = (0..n)
            .map(|_| {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                (s % 16) as usize
            })
            .collect();
        g.bench_with_input(BenchmarkId::from_parameter(n), &x, |b, x| b.iter(|| lz_entropy("b", x, 20).unwrap()));
    }
    g.finish();
    c.bench_function("fano_bound", |b| b.iter(|| fano_bound(black_box(2.3), black_box(40)).unwrap()));
}

fn temporal(c: &mut Criterion) {
    let x: Vec<f64> = (0..720).map(|t| ((t % 24) as f64).sin() + 1.5).collect();
    c.bench_function("periodogram_720h", |b| b.iter(|| periodogram(black_box(&x))));
    let (profiles, _) = archetype_profiles(2000, 0.1, 1);
    c.bench_function("dwt_haar", |b| b.iter(|| dwt_haar(black_box(&profiles[0]))));
    let mut g = c.benchmark_group("cluster_profiles");
    g.sample_size(10);
    g.bench_function("2000", |b| b.iter(|| cluster_profiles(&profiles, &KMeansConfig::default()).unwrap()));
    g.finish();
}

fn mobility(c: &mut Criterion) {
    let m = MarkovMixtureModel::reference();
    let block = MarkovMixtureModel::new(m.alpha, m.initial, m.transition, StateAggregation::identity(7), None)
        .unwrap()
        .with_run_free(false);
    let seqs = synthesize(&block, 2000, &LengthDist::Fixed(30), 1).unwrap().sequences;
    let cfg = EmConfig { restarts: 5, ..Default::default() };
    let mut g = c.benchmark_group("em_fit");
    g.sample_size(10);
    g.bench_function("k3_2000x30", |b| b.iter(|| em_fit(&seqs, 3, &StateAggregation::identity(7), &cfg).unwrap()));
    g.finish();
}

fn forecast(c: &mut Criterion) {
    let series = DailySeriesSpec::default().generate(1).unwrap();
    let mut g = c.benchmark_group("forecast_fit");
    g.sample_size(10);
    g.bench_function("730d", |b| b.iter(|| fit(&series, &HolidayCalendar::finnish(), &FitConfig::default()).unwrap()));
    g.finish();
}

criterion_group!(benches, predictability, temporal, mobility, forecast);
criterion_main!(benches);
