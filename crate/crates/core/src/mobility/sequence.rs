use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, TimeRange};
use crate::error::{Error, Result};

/// A device's visited cells, run-compressed and encoded by visit-frequency
/// rank (0 = most visited).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellSequence {
    pub device_id: String,
    pub states: Vec<usize>,
}

impl CellSequence {
    pub fn new(device_id: impl Into<String>, states: Vec<usize>) -> Self {
        CellSequence { device_id: device_id.into(), states }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn n_distinct(&self) -> usize {
        let mut s = self.states.clone();
        s.sort_unstable();
        s.dedup();
        s.len()
    }
}

/// Collapse consecutive repeats.
pub fn run_compress<T: PartialEq + Clone>(cells: &[T]) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(cells.len());
    for c in cells {
        if out.last() != Some(c) {
            out.push(c.clone());
        }
    }
    out
}

/// Replace each symbol by its frequency rank; ties go to the symbol seen first.
pub fn rank_encode<T: Eq + Hash>(cells: &[T]) -> Vec<usize> {
    let mut stats: HashMap<&T, (usize, usize)> = HashMap::new();
    for (pos, c) in cells.iter().enumerate() {
        stats.entry(c).or_insert((0, pos)).0 += 1;
    }
    let mut order: Vec<(&T, (usize, usize))> = stats.into_iter().collect();
    order.sort_by(|a, b| b.1 .0.cmp(&a.1 .0).then(a.1 .1.cmp(&b.1 .1)));
    let rank: HashMap<&T, usize> = order.iter().enumerate().map(|(r, (c, _))| (*c, r)).collect();
    cells.iter().map(|c| rank[c]).collect()
}

/// Run-compressed cell visits of every device active in `window`, keyed by
/// device id. Visits are ordered by hour, then by cell id within an hour.
pub fn device_cell_sequences(ds: &Dataset, window: TimeRange) -> BTreeMap<String, Vec<String>> {
    let mut raw: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    // records are sorted by (hour, device, cell)
    for r in ds.records_in(window) {
        raw.entry(&r.device_id).or_default().push(&r.cell_id);
    }
    raw.into_iter()
        .map(|(d, cells)| {
            let cells: Vec<String> = run_compress(&cells).into_iter().map(str::to_string).collect();
            (d.to_string(), cells)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessOptions {
    pub min_len: usize,
    pub min_distinct: usize,
    pub max_distinct: usize,
    pub sample: usize,
    pub seed: u64,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions { min_len: 5, min_distinct: 3, max_distinct: 50, sample: 2000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessed {
    pub sequences: Vec<CellSequence>,
    /// Devices with any traffic in the window.
    pub active_devices: usize,
    /// Devices passing the length and distinct-cell filters.
    pub eligible_devices: usize,
}

/// Build modelling sequences: run-compress, filter on length and number of
/// distinct cells, rank-encode, then draw a seeded uniform sample of devices.
pub fn preprocess(ds: &Dataset, window: TimeRange, opts: &PreprocessOptions) -> Result<Preprocessed> {
    let span = ds.full_range().ok_or_else(|| Error::invalid("dataset is empty"))?;
    if window.start < span.start || window.end > span.end {
        return Err(Error::invalid(format!("window {window} is outside the data span {span}")));
    }
    let per_device = device_cell_sequences(ds, window);
    let active_devices = per_device.len();
    let eligible: Vec<CellSequence> = per_device
        .into_iter()
        .filter_map(|(id, cells)| {
            let seq = CellSequence::new(id, rank_encode(&cells));
            let nd = seq.n_distinct();
            (seq.len() >= opts.min_len && nd >= opts.min_distinct && nd <= opts.max_distinct).then_some(seq)
        })
        .collect();
    let eligible_devices = eligible.len();
    let sequences = if eligible.len() > opts.sample {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut idx = rand::seq::index::sample(&mut rng, eligible.len(), opts.sample).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| eligible[i].clone()).collect()
    } else {
        if eligible.len() < opts.sample {
            log::warn!(
                "only {} eligible devices, fewer than the requested sample of {}; using all",
                eligible.len(),
                opts.sample
            );
        }
        eligible
    };
    Ok(Preprocessed { sequences, active_devices, eligible_devices })
}
