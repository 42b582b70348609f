//! Greedy BIC-driven aggregation of Markov states into equivalence blocks.
//!
//! Starting from one block per raw rank, every pairwise merge of the current
//! blocks is scored by the expected complete-data log-likelihood at the
//! current responsibilities. The best few candidates are refitted with EM
//! (warm-started) and the best refit is kept if it lowers the BIC. The search
//! stops when no candidate improves.

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::em::{bic, effective_floor, fit_stats, floored_mle, parameter_count, weighted_counts, EmConfig, Fit, FitReport, RawStats};
use super::model::{MarkovMixtureModel, StateAggregation};
use super::CellSequence;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FssConfig {
    pub em: EmConfig,
    /// Merge candidates refitted with EM per step.
    pub candidates: usize,
}

impl Default for FssConfig {
    fn default() -> Self {
        FssConfig { em: EmConfig::default(), candidates: 3 }
    }
}

/// Search outcome for one K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FssPath {
    pub k: usize,
    /// Fit over the unaggregated states.
    pub baseline: FitReport,
    /// Fit after each accepted merge.
    pub steps: Vec<FitReport>,
    pub aggregation: StateAggregation,
}

impl FssPath {
    pub fn best(&self) -> &FitReport {
        self.steps.last().unwrap_or(&self.baseline)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FssResult {
    pub model: MarkovMixtureModel,
    pub aggregation: StateAggregation,
    pub report: FitReport,
    pub paths: Vec<FssPath>,
}

/// Block-level weighted counts for one aggregation of the raw counts.
struct BlockCounts {
    d: usize,
    init: Vec<Vec<f64>>,
    trans: Vec<Vec<f64>>,
}

impl BlockCounts {
    fn merged(&self, a: usize, b: usize) -> BlockCounts {
        let d = self.d - 1;
        let f = |x: usize| match x {
            x if x == b => a,
            x if x > b => x - 1,
            x => x,
        };
        let fold = |v: &Vec<f64>| {
            let mut o = vec![0.0; d];
            v.iter().enumerate().for_each(|(x, c)| o[f(x)] += c);
            o
        };
        let trans = self
            .trans
            .iter()
            .map(|t| {
                let mut o = vec![0.0; d * d];
                for i in 0..self.d {
                    let fi = f(i) * d;
                    for j in 0..self.d {
                        o[fi + f(j)] += t[i * self.d + j];
                    }
                }
                o
            })
            .collect();
        BlockCounts { d, init: self.init.iter().map(fold).collect(), trans }
    }

    /// Expected complete-data log-likelihood of the block path, without the
    /// mixing-weight term (which does not depend on the aggregation).
    fn q(&self, cfg: &EmConfig) -> f64 {
        let beta = effective_floor(cfg.min_beta, self.d);
        let gamma = effective_floor(cfg.min_gamma, self.d);
        let xlogp = |c: &[f64], p: &[f64]| c.iter().zip(p).filter(|(c, _)| **c > 0.0).map(|(c, p)| c * p.ln()).sum::<f64>();
        let mut q = 0.0;
        for (init, trans) in self.init.iter().zip(&self.trans) {
            q += xlogp(init, &floored_mle(init, gamma));
            for row in trans.chunks(self.d) {
                q += xlogp(row, &floored_mle(row, beta));
            }
        }
        q
    }
}

fn block_counts(raw: &RawStats, agg: &StateAggregation, resp: &[Vec<f64>], k: usize) -> BlockCounts {
    let w = weighted_counts(&raw.aggregate(agg), resp, k, agg.d());
    BlockCounts { d: agg.d(), init: w.init, trans: w.trans }
}

fn search(raw: &RawStats, k: usize, cfg: &FssConfig) -> Result<(FssPath, Fit)> {
    let n = raw.n();
    let mut agg = StateAggregation::identity(raw.m);
    let mut fit = fit_stats(raw, k, &agg, &cfg.em, None)?;
    let baseline = fit.report.clone();
    let mut steps = Vec::new();
    while agg.d() > 1 {
        let counts = block_counts(raw, &agg, &fit.resp, k);
        let d = agg.d();
        let pairs: Vec<(usize, usize)> = (0..d).flat_map(|a| (a + 1..d).map(move |b| (a, b))).collect();
        let p = parameter_count(k, d - 1, raw.m) as f64 * (n as f64).ln();
        let mut scored: Vec<(f64, usize, usize)> = pairs
            .par_iter()
            .map(|&(a, b)| {
                let cand = agg.merge(a, b);
                let within = raw.within_log_likelihood(&cand, &raw.within(&cand));
                (-2.0 * (counts.merged(a, b).q(&cfg.em) + within) + p, a, b)
            })
            .collect();
        scored.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        scored.truncate(cfg.candidates.max(1));
        let refits: Vec<(StateAggregation, Fit)> = scored
            .par_iter()
            .map(|&(_, a, b)| {
                let cand = agg.merge(a, b);
                fit_stats(raw, k, &cand, &cfg.em, Some(&fit.resp)).map(|f| (cand, f))
            })
            .collect::<Result<_>>()?;
        let best = refits
            .into_iter()
            .reduce(|x, y| if y.1.report.bic < x.1.report.bic { y } else { x })
            .expect("at least one candidate");
        if best.1.report.bic >= fit.report.bic {
            break;
        }
        log::debug!("K={k}: merged to d={} (BIC {:.2})", best.0.d(), best.1.report.bic);
        agg = best.0;
        fit = best.1;
        steps.push(fit.report.clone());
    }
    // the warm-started chain can drift into a poor mixture; retry from scratch
    if !steps.is_empty() {
        let cold = fit_stats(raw, k, &agg, &cfg.em, None)?;
        if cold.report.bic < fit.report.bic {
            fit = cold;
            *steps.last_mut().unwrap() = fit.report.clone();
        }
    }
    Ok((FssPath { k, baseline, steps, aggregation: agg.canonical() }, fit))
}

/// Search state aggregations for every K in `k_range` and return the
/// (K, aggregation) pair with the lowest BIC. Raw states are taken to be
/// `0..=max state` of `seqs`.
pub fn forward_state_selection(
    seqs: &[CellSequence],
    k_range: RangeInclusive<usize>,
    cfg: &FssConfig,
) -> Result<FssResult> {
    let m = seqs.iter().flat_map(|s| s.states.iter()).max().map_or(0, |x| x + 1);
    if m < 2 {
        return Err(Error::invalid("state selection needs at least two raw states"));
    }
    if k_range.is_empty() {
        return Err(Error::invalid("empty K range"));
    }
    let raw = RawStats::new(seqs, m)?;
    let mut paths = Vec::new();
    let mut best: Option<Fit> = None;
    for k in k_range {
        let (path, fit) = search(&raw, k, cfg)?;
        paths.push(path);
        if best.as_ref().is_none_or(|b| fit.report.bic < b.report.bic) {
            best = Some(fit);
        }
    }
    let fit = best.expect("non-empty range");
    debug_assert!((bic(fit.report.log_likelihood, fit.report.parameter_count, raw.n()) - fit.report.bic).abs() < 1e-6);
    // present blocks in canonical order
    let canon = fit.model.aggregation.canonical();
    let relabel: Vec<usize> = {
        let mut r = vec![0; canon.d()];
        for x in 0..m {
            r[fit.model.aggregation.block_of(x)] = canon.block_of(x);
        }
        r
    };
    let d = canon.d();
    let permute_vec = |v: &Vec<f64>| {
        let mut o = vec![0.0; d];
        v.iter().enumerate().for_each(|(b, p)| o[relabel[b]] = *p);
        o
    };
    let model = MarkovMixtureModel {
        alpha: fit.model.alpha.clone(),
        initial: fit.model.initial.iter().map(permute_vec).collect(),
        transition: fit
            .model
            .transition
            .iter()
            .map(|t| {
                let mut o = vec![vec![0.0; d]; d];
                for (i, row) in t.iter().enumerate() {
                    for (j, p) in row.iter().enumerate() {
                        o[relabel[i]][relabel[j]] = *p;
                    }
                }
                o
            })
            .collect(),
        aggregation: canon.clone(),
        within: fit.model.within.clone(),
        run_free: fit.model.run_free,
    };
    Ok(FssResult { model, aggregation: canon, report: fit.report, paths })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobility::em::em_fit;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn chain(rows: &[[f64; 3]], n: usize, len: usize, seed: u64) -> Vec<CellSequence> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let mut s = vec![rng.random_range(0..3)];
                while s.len() < len {
                    let u: f64 = rng.random();
                    let row = rows[*s.last().unwrap()];
                    let next = if u < row[0] { 0 } else if u < row[0] + row[1] { 1 } else { 2 };
                    s.push(next);
                }
                CellSequence::new(format!("d{i}"), s)
            })
            .collect()
    }

    fn all_partitions_of_3() -> Vec<Vec<usize>> {
        vec![vec![0, 1, 2], vec![0, 0, 1], vec![0, 1, 0], vec![0, 1, 1], vec![0, 0, 0]]
    }

    #[test]
    fn identical_rows_merge() {
        // states 1 and 2 have the same outgoing row
        let rows = [[0.1, 0.45, 0.45], [0.7, 0.15, 0.15], [0.7, 0.15, 0.15]];
        let seqs = chain(&rows, 300, 20, 3);
        let cfg = FssConfig { em: EmConfig { restarts: 1, ..Default::default() }, ..Default::default() };
        let r = forward_state_selection(&seqs, 1..=1, &cfg).unwrap();
        assert_eq!(r.aggregation.blocks(), &[0, 1, 1]);
        assert!(r.report.bic < r.paths[0].baseline.bic);
    }

    #[test]
    fn matches_exhaustive_partition_search() {
        let rows = [[0.2, 0.4, 0.4], [0.6, 0.1, 0.3], [0.6, 0.1, 0.3]];
        let seqs = chain(&rows, 200, 15, 8);
        let em = EmConfig { restarts: 1, ..Default::default() };
        let r = forward_state_selection(&seqs, 1..=1, &FssConfig { em: em.clone(), candidates: 3 }).unwrap();
        let best = all_partitions_of_3()
            .into_iter()
            .map(|p| {
                let agg = StateAggregation::from_blocks(p).unwrap();
                let (_, rep) = em_fit(&seqs, 1, &agg, &em).unwrap();
                (rep.bic, agg)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap();
        assert_eq!(r.aggregation, best.1.canonical());
        assert!((r.report.bic - best.0).abs() < 1e-6);
    }

    #[test]
    fn distinct_rows_stay_apart() {
        let rows = [[0.05, 0.9, 0.05], [0.05, 0.05, 0.9], [0.9, 0.05, 0.05]];
        let seqs = chain(&rows, 200, 20, 5);
        let cfg = FssConfig { em: EmConfig { restarts: 1, ..Default::default() }, ..Default::default() };
        let r = forward_state_selection(&seqs, 1..=1, &cfg).unwrap();
        assert_eq!(r.aggregation.d(), 3);
        assert!(r.paths[0].steps.is_empty());
    }

    #[test]
    fn needs_two_states() {
        let seqs = vec![CellSequence::new("a", vec![0, 0])];
        assert!(forward_state_selection(&seqs, 1..=1, &FssConfig::default()).is_err());
    }
}
