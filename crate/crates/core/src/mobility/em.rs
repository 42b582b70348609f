//! EM for mixtures of first-order Markov chains.
//!
//! Initialisation follows the short-run strategy: `restarts` random
//! Dirichlet(1) responsibility draws are each improved by `short_iter` EM
//! steps, and the best is iterated to convergence.

use std::ops::RangeInclusive;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{log_sum_exp, MarkovMixtureModel, StateAggregation};
use super::CellSequence;
use crate::error::{Error, Result};

pub const MIN_BETA: f64 = 1e-2;
pub const MIN_GAMMA: f64 = 1e-2;

const CHUNK: usize = 256;
const EMPTY_WEIGHT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub restarts: usize,
    pub short_iter: usize,
    pub max_iter: usize,
    /// Stop when the log-likelihood gain falls below `tol * |log-likelihood|`.
    pub tol: f64,
    /// Floor on transition probabilities (capped at `0.5 / d`).
    pub min_beta: f64,
    /// Floor on initial-state probabilities (capped at `0.5 / d`).
    pub min_gamma: f64,
    pub seed: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            restarts: 50,
            short_iter: 10,
            max_iter: 100,
            tol: 1e-8,
            min_beta: MIN_BETA,
            min_gamma: MIN_GAMMA,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub k: usize,
    pub d: usize,
    pub log_likelihood: f64,
    pub bic: f64,
    pub parameter_count: usize,
    pub n_sequences: usize,
    pub iterations: usize,
    pub converged: bool,
    /// A component lost all responsibility even after re-seeding.
    pub degenerate: bool,
    /// Log-likelihood after every M-step of the final run.
    pub trace: Vec<f64>,
}

/// Free parameters: mixing weights, initial distributions, transition rows,
/// and the within-block member distributions.
pub fn parameter_count(k: usize, d: usize, m: usize) -> usize {
    (k - 1) + k * (d - 1) + k * d * (d - 1) + (m - d)
}

/// `-2 ll + p ln n`, with n the number of sequences.
pub fn bic(log_likelihood: f64, parameter_count: usize, n_sequences: usize) -> f64 {
    -2.0 * log_likelihood + parameter_count as f64 * (n_sequences as f64).ln()
}

/// Maximiser of `sum c_j ln p_j` over the simplex with `p_j >= floor`.
pub(crate) fn floored_mle(counts: &[f64], floor: f64) -> Vec<f64> {
    let d = counts.len();
    let total: f64 = counts.iter().sum();
    if !(total > 0.0) {
        return vec![1.0 / d as f64; d];
    }
    let mut fixed = vec![false; d];
    let mut lambda;
    loop {
        let n_fixed = fixed.iter().filter(|f| **f).count();
        let free: f64 = counts.iter().zip(&fixed).filter(|(_, f)| !**f).map(|(c, _)| c).sum();
        lambda = free / (1.0 - floor * n_fixed as f64);
        let mut changed = false;
        for (c, f) in counts.iter().zip(fixed.iter_mut()) {
            if !*f && *c < floor * lambda {
                *f = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    counts.iter().zip(&fixed).map(|(c, f)| if *f { floor } else { c / lambda }).collect()
}

pub(crate) fn effective_floor(floor: f64, d: usize) -> f64 {
    floor.min(0.5 / d as f64)
}

/// Sparse sufficient statistics of one sequence.
#[derive(Debug, Clone)]
pub(crate) struct SeqStats {
    pub first: usize,
    pub trans: Vec<(usize, usize, f64)>,
}

fn sparse(first: usize, pairs: impl Iterator<Item = (usize, usize)>) -> SeqStats {
    let mut v: Vec<(usize, usize)> = pairs.collect();
    v.sort_unstable();
    let mut trans: Vec<(usize, usize, f64)> = Vec::with_capacity(v.len());
    for (i, j) in v {
        match trans.last_mut() {
            Some(t) if t.0 == i && t.1 == j => t.2 += 1.0,
            _ => trans.push((i, j, 1.0)),
        }
    }
    SeqStats { first, trans }
}

/// Raw-state statistics of a sequence set, reusable across aggregations.
#[derive(Debug, Clone)]
pub(crate) struct RawStats {
    pub m: usize,
    pub seqs: Vec<SeqStats>,
    /// Occurrences of each raw state over all positions.
    pub occ: Vec<f64>,
    /// Transition counts summed over sequences, between distinct states.
    pub moves: Vec<(usize, usize, f64)>,
    /// No sequence repeats a state in consecutive positions.
    pub run_free: bool,
}

impl RawStats {
    pub fn new(seqs: &[CellSequence], m: usize) -> Result<Self> {
        if seqs.is_empty() {
            return Err(Error::invalid("no sequences"));
        }
        let mut occ = vec![0.0; m];
        let mut stats = Vec::with_capacity(seqs.len());
        let mut run_free = true;
        for s in seqs {
            let Some(&first) = s.states.first() else {
                return Err(Error::invalid(format!("sequence {} is empty", s.device_id)));
            };
            if let Some(&bad) = s.states.iter().find(|&&x| x >= m) {
                return Err(Error::invalid(format!(
                    "sequence {} has state {bad} outside the {m} aggregated states",
                    s.device_id
                )));
            }
            s.states.iter().for_each(|&x| occ[x] += 1.0);
            run_free &= s.states.windows(2).all(|w| w[0] != w[1]);
            stats.push(sparse(first, s.states.windows(2).map(|w| (w[0], w[1]))));
        }
        let mut moves: Vec<(usize, usize, f64)> =
            stats.iter().flat_map(|s| s.trans.iter().copied()).filter(|t| t.0 != t.1).collect();
        moves.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(moves.len());
        for (i, j, c) in moves {
            match merged.last_mut() {
                Some(t) if t.0 == i && t.1 == j => t.2 += c,
                _ => merged.push((i, j, c)),
            }
        }
        Ok(RawStats { m, seqs: stats, occ, moves: merged, run_free })
    }

    pub fn n(&self) -> usize {
        self.seqs.len()
    }

    pub fn aggregate(&self, agg: &StateAggregation) -> Vec<SeqStats> {
        self.seqs
            .iter()
            .map(|s| {
                let mut v: Vec<(usize, usize, f64)> =
                    s.trans.iter().map(|&(i, j, c)| (agg.block_of(i), agg.block_of(j), c)).collect();
                v.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
                let mut trans: Vec<(usize, usize, f64)> = Vec::with_capacity(v.len());
                for (i, j, c) in v {
                    match trans.last_mut() {
                        Some(t) if t.0 == i && t.1 == j => t.2 += c,
                        _ => trans.push((i, j, c)),
                    }
                }
                SeqStats { first: agg.block_of(s.first), trans }
            })
            .collect()
    }

    /// Member distribution within each block, estimated by visit frequency
    /// (the maximum-likelihood value unless the data are run-free).
    pub fn within(&self, agg: &StateAggregation) -> Vec<f64> {
        let mut block_occ = vec![0.0; agg.d()];
        let mut size = vec![0usize; agg.d()];
        for (x, o) in self.occ.iter().enumerate() {
            block_occ[agg.block_of(x)] += o;
            size[agg.block_of(x)] += 1;
        }
        (0..self.m)
            .map(|x| {
                let b = agg.block_of(x);
                if block_occ[b] > 0.0 { self.occ[x] / block_occ[b] } else { 1.0 / size[b] as f64 }
            })
            .collect()
    }

    pub fn within_log_likelihood(&self, agg: &StateAggregation, within: &[f64]) -> f64 {
        let mut ll: f64 = self.occ.iter().zip(within).filter(|(o, _)| **o > 0.0).map(|(o, q)| o * q.ln()).sum();
        if self.run_free {
            for &(i, j, c) in &self.moves {
                if agg.block_of(i) == agg.block_of(j) {
                    ll -= c * (1.0 - within[i]).ln();
                }
            }
        }
        ll
    }
}

#[derive(Debug, Clone)]
struct Params {
    k: usize,
    d: usize,
    alpha: Vec<f64>,
    init: Vec<Vec<f64>>,
    /// `trans[c][i * d + j]`
    trans: Vec<Vec<f64>>,
}

impl Params {
    fn logs(&self) -> (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let ln = |v: &Vec<f64>| v.iter().map(|x| x.ln()).collect::<Vec<f64>>();
        (ln(&self.alpha), self.init.iter().map(ln).collect(), self.trans.iter().map(ln).collect())
    }
}

/// Responsibility-weighted counts, accumulated in fixed chunks so the sum
/// order does not depend on thread scheduling.
pub(crate) struct WeightedCounts {
    pub weight: Vec<f64>,
    pub init: Vec<Vec<f64>>,
    pub trans: Vec<Vec<f64>>,
}

pub(crate) fn weighted_counts(seqs: &[SeqStats], resp: &[Vec<f64>], k: usize, d: usize) -> WeightedCounts {
    let partial: Vec<WeightedCounts> = seqs
        .par_chunks(CHUNK)
        .zip(resp.par_chunks(CHUNK))
        .map(|(ss, rr)| {
            let mut w = WeightedCounts { weight: vec![0.0; k], init: vec![vec![0.0; d]; k], trans: vec![vec![0.0; d * d]; k] };
            for (s, r) in ss.iter().zip(rr) {
                for c in 0..k {
                    let rc = r[c];
                    if rc == 0.0 {
                        continue;
                    }
                    w.weight[c] += rc;
                    w.init[c][s.first] += rc;
                    let t = &mut w.trans[c];
                    for &(i, j, n) in &s.trans {
                        t[i * d + j] += rc * n;
                    }
                }
            }
            w
        })
        .collect();
    let mut it = partial.into_iter();
    let mut acc = it.next().expect("at least one chunk");
    for p in it {
        for c in 0..k {
            acc.weight[c] += p.weight[c];
            acc.init[c].iter_mut().zip(&p.init[c]).for_each(|(a, b)| *a += b);
            acc.trans[c].iter_mut().zip(&p.trans[c]).for_each(|(a, b)| *a += b);
        }
    }
    acc
}

fn m_step(seqs: &[SeqStats], resp: &[Vec<f64>], k: usize, d: usize, cfg: &EmConfig) -> (Params, Vec<f64>) {
    let w = weighted_counts(seqs, resp, k, d);
    let n = seqs.len() as f64;
    let beta = effective_floor(cfg.min_beta, d);
    let gamma = effective_floor(cfg.min_gamma, d);
    let params = Params {
        k,
        d,
        alpha: w.weight.iter().map(|x| x / n).collect(),
        init: w.init.iter().map(|v| floored_mle(v, gamma)).collect(),
        trans: w
            .trans
            .iter()
            .map(|t| t.chunks(d).flat_map(|row| floored_mle(row, beta)).collect())
            .collect(),
    };
    (params, w.weight)
}

/// Per-sequence responsibilities and the total block-level log-likelihood.
fn e_step(seqs: &[SeqStats], p: &Params) -> (Vec<Vec<f64>>, f64) {
    let (la, li, lt) = p.logs();
    let d = p.d;
    let per: Vec<(Vec<f64>, f64)> = seqs
        .par_iter()
        .map(|s| {
            let lp: Vec<f64> = (0..p.k)
                .map(|c| {
                    let mut v = la[c] + li[c][s.first];
                    for &(i, j, n) in &s.trans {
                        v += n * lt[c][i * d + j];
                    }
                    v
                })
                .collect();
            let ll = log_sum_exp(&lp);
            (lp.iter().map(|x| (x - ll).exp()).collect(), ll)
        })
        .collect();
    let ll = per.iter().map(|(_, l)| l).sum();
    (per.into_iter().map(|(r, _)| r).collect(), ll)
}

struct Run {
    params: Params,
    resp: Vec<Vec<f64>>,
    ll: f64,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
    reseeded: Vec<bool>,
    just_reseeded: bool,
    degenerate: bool,
}

impl Run {
    fn start(seqs: &[SeqStats], resp: Vec<Vec<f64>>, k: usize, d: usize, cfg: &EmConfig) -> Run {
        let mut run = Run {
            params: Params { k, d, alpha: vec![], init: vec![], trans: vec![] },
            resp,
            ll: f64::NEG_INFINITY,
            trace: Vec::new(),
            iterations: 0,
            converged: false,
            reseeded: vec![false; k],
            just_reseeded: false,
            degenerate: false,
        };
        run.step(seqs, cfg);
        run
    }

    /// One M-step followed by an E-step.
    fn step(&mut self, seqs: &[SeqStats], cfg: &EmConfig) -> f64 {
        let (k, d) = (self.params.k, self.params.d);
        let (mut params, weight) = m_step(seqs, &self.resp, k, d, cfg);
        self.just_reseeded = false;
        if let Some(c) = (0..k).find(|&c| weight[c] < EMPTY_WEIGHT) {
            if !self.reseeded[c] {
                // hand the empty component the worst-explained sequence
                self.reseeded[c] = true;
                self.just_reseeded = true;
                let (_, per_ll) = per_sequence_ll(seqs, &params);
                let worst = per_ll
                    .iter()
                    .enumerate()
                    .fold((0, f64::INFINITY), |b, (i, l)| if *l < b.1 { (i, *l) } else { b })
                    .0;
                self.resp[worst].iter_mut().for_each(|r| *r = 0.0);
                self.resp[worst][c] = 1.0;
                params = m_step(seqs, &self.resp, k, d, cfg).0;
            } else {
                self.degenerate = true;
            }
        }
        let (resp, ll) = e_step(seqs, &params);
        let gain = ll - self.ll;
        self.params = params;
        self.resp = resp;
        self.ll = ll;
        self.trace.push(ll);
        self.iterations += 1;
        gain
    }

    fn iterate(&mut self, seqs: &[SeqStats], cfg: &EmConfig, max: usize) {
        for _ in 0..max {
            let prev = self.ll;
            let gain = self.step(seqs, cfg);
            debug_assert!(self.just_reseeded || gain >= -1e-9 * prev.abs().max(1.0), "EM decreased the log-likelihood by {}", -gain);
            if gain.abs() < cfg.tol * prev.abs() {
                self.converged = true;
                break;
            }
        }
    }
}

fn per_sequence_ll(seqs: &[SeqStats], p: &Params) -> (Vec<Vec<f64>>, Vec<f64>) {
    let (la, li, lt) = p.logs();
    let d = p.d;
    seqs.iter()
        .map(|s| {
            let lp: Vec<f64> = (0..p.k)
                .map(|c| {
                    let mut v = la[c] + li[c][s.first];
                    for &(i, j, n) in &s.trans {
                        v += n * lt[c][i * d + j];
                    }
                    v
                })
                .collect();
            let ll = log_sum_exp(&lp);
            (lp, ll)
        })
        .unzip()
}

fn dirichlet_resp(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let g: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
            let s: f64 = g.iter().sum();
            g.iter().map(|x| x / s).collect()
        })
        .collect()
}

/// A fitted mixture with its final responsibilities.
pub(crate) struct Fit {
    pub model: MarkovMixtureModel,
    pub report: FitReport,
    pub resp: Vec<Vec<f64>>,
}

/// Fit from precomputed statistics; `warm` replaces the random restarts.
pub(crate) fn fit_stats(
    raw: &RawStats,
    k: usize,
    agg: &StateAggregation,
    cfg: &EmConfig,
    warm: Option<&[Vec<f64>]>,
) -> Result<Fit> {
    let n = raw.n();
    if k == 0 {
        return Err(Error::invalid("K must be at least 1"));
    }
    if k > n {
        return Err(Error::invalid(format!("K = {k} exceeds the {n} sequences")));
    }
    let d = agg.d();
    let seqs = raw.aggregate(agg);
    let mut run = match warm {
        Some(r) => Run::start(&seqs, r.to_vec(), k, d, cfg),
        None if k == 1 => Run::start(&seqs, vec![vec![1.0]; n], k, d, cfg),
        None => {
            let runs: Vec<Run> = (0..cfg.restarts.max(1))
                .into_par_iter()
                .map(|r| {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                    rng.set_stream(r as u64);
                    let mut run = Run::start(&seqs, dirichlet_resp(n, k, &mut rng), k, d, cfg);
                    run.iterate(&seqs, cfg, cfg.short_iter.saturating_sub(1));
                    run
                })
                .collect();
            runs.into_iter()
                .reduce(|best, r| if r.ll > best.ll { r } else { best })
                .expect("at least one restart")
        }
    };
    run.converged = false;
    run.trace = vec![run.ll];
    run.iterate(&seqs, cfg, cfg.max_iter);
    if !run.ll.is_finite() {
        return Err(Error::numerical(format!("log-likelihood is {} at K = {k}", run.ll)));
    }

    // order components by decreasing weight
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| run.params.alpha[b].total_cmp(&run.params.alpha[a]).then(a.cmp(&b)));
    let p = &run.params;
    let within = raw.within(agg);
    let model = MarkovMixtureModel {
        alpha: order.iter().map(|&c| p.alpha[c]).collect(),
        initial: order.iter().map(|&c| p.init[c].clone()).collect(),
        transition: order.iter().map(|&c| p.trans[c].chunks(d).map(<[f64]>::to_vec).collect()).collect(),
        aggregation: agg.clone(),
        within: within.clone(),
        run_free: raw.run_free,
    };
    let resp = run.resp.iter().map(|r| order.iter().map(|&c| r[c]).collect()).collect();
    let ll = run.ll + raw.within_log_likelihood(agg, &within);
    let pc = parameter_count(k, d, agg.m());
    let report = FitReport {
        k,
        d,
        log_likelihood: ll,
        bic: bic(ll, pc, n),
        parameter_count: pc,
        n_sequences: n,
        iterations: run.iterations,
        converged: run.converged,
        degenerate: run.degenerate,
        trace: run.trace,
    };
    Ok(Fit { model, report, resp })
}

/// Fit a K-component mixture over the blocks of `agg`.
pub fn em_fit(
    seqs: &[CellSequence],
    k: usize,
    agg: &StateAggregation,
    cfg: &EmConfig,
) -> Result<(MarkovMixtureModel, FitReport)> {
    let raw = RawStats::new(seqs, agg.m())?;
    let fit = fit_stats(&raw, k, agg, cfg, None)?;
    Ok((fit.model, fit.report))
}

/// Posterior component probabilities of each sequence under `model`.
pub fn responsibilities(model: &MarkovMixtureModel, seqs: &[CellSequence]) -> Vec<Vec<f64>> {
    seqs.par_iter()
        .map(|s| {
            let lp: Vec<f64> = model
                .component_log_likelihoods(s)
                .iter()
                .zip(&model.alpha)
                .map(|(l, a)| l + a.ln())
                .collect();
            let t = log_sum_exp(&lp);
            lp.iter().map(|x| (x - t).exp()).collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelection {
    pub best_k: usize,
    pub model: MarkovMixtureModel,
    pub reports: Vec<FitReport>,
}

/// Fit every K in `k_range` and keep the one with the lowest BIC.
pub fn select_k(
    seqs: &[CellSequence],
    k_range: RangeInclusive<usize>,
    agg: &StateAggregation,
    cfg: &EmConfig,
) -> Result<KSelection> {
    if k_range.is_empty() {
        return Err(Error::invalid("empty K range"));
    }
    let raw = RawStats::new(seqs, agg.m())?;
    let mut best: Option<(f64, usize, MarkovMixtureModel)> = None;
    let mut reports = Vec::new();
    for k in k_range {
        let fit = fit_stats(&raw, k, agg, cfg, None)?;
        if best.as_ref().is_none_or(|b| fit.report.bic < b.0) {
            best = Some((fit.report.bic, k, fit.model));
        }
        reports.push(fit.report);
    }
    let (_, best_k, model) = best.expect("non-empty range");
    Ok(KSelection { best_k, model, reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn seq(states: &[usize]) -> CellSequence {
        CellSequence::new("s", states.to_vec())
    }

    #[test]
    fn floored_mle_examples() {
        assert_eq!(floored_mle(&[1.0, 3.0], 0.01), vec![0.25, 0.75]);
        let p = floored_mle(&[0.0, 5.0, 5.0], 0.1);
        assert!((p[0] - 0.1).abs() < 1e-15 && (p[1] - 0.45).abs() < 1e-15);
        assert_eq!(floored_mle(&[0.0, 0.0], 0.1), vec![0.5, 0.5]);
    }

    #[test]
    fn floored_mle_beats_grid() {
        // brute-force maximisation on a 3-simplex grid
        let c = [0.2, 7.0, 1.0];
        let f = 0.1;
        let obj = |p: &[f64]| c.iter().zip(p).map(|(c, p)| c * p.ln()).sum::<f64>();
        let got = floored_mle(&c, f);
        let mut best = f64::NEG_INFINITY;
        let steps = 2000;
        for a in 0..=steps {
            for b in 0..=steps - a {
                let p = [a as f64 / steps as f64, b as f64 / steps as f64, (steps - a - b) as f64 / steps as f64];
                if p.iter().all(|x| *x >= f - 1e-12) {
                    best = best.max(obj(&p));
                }
            }
        }
        assert!(obj(&got) >= best - 1e-9);
        assert!(got.iter().all(|x| *x >= f - 1e-15));
    }

    #[test]
    fn single_component_no_floor_exact() {
        let s = vec![seq(&[0, 0, 1, 1, 0, 1, 0, 0, 1, 1, 1, 0])];
        let (m, _) = em_fit(&s, 1, &StateAggregation::identity(2), &EmConfig::default()).unwrap();
        // counts: 0->0: 2, 0->1: 3, 1->0: 3, 1->1: 3
        assert!((m.transition[0][0][0] - 0.4).abs() < 1e-15);
        assert!((m.transition[0][1][1] - 0.5).abs() < 1e-15);
    }

    /// Classification log-likelihood of the best hard split, each group fit
    /// with the same floors.
    fn best_hard_assignment(seqs: &[CellSequence]) -> f64 {
        let clamp = |p: f64| p.clamp(0.01, 0.99);
        let mut best = f64::NEG_INFINITY;
        for mask in 0u32..(1 << seqs.len()) {
            let mut total = 0.0;
            for g in 0..2 {
                let members: Vec<&CellSequence> =
                    seqs.iter().enumerate().filter(|(i, _)| (mask >> i) & 1 == g).map(|(_, s)| s).collect();
                if members.is_empty() {
                    continue;
                }
                let alpha = members.len() as f64 / seqs.len() as f64;
                let first0 = members.iter().filter(|s| s.states[0] == 0).count() as f64;
                let p0 = clamp(first0 / members.len() as f64);
                let mut c = [[0.0f64; 2]; 2];
                for s in &members {
                    for w in s.states.windows(2) {
                        c[w[0]][w[1]] += 1.0;
                    }
                }
                let t: Vec<f64> = (0..2)
                    .map(|i| {
                        let tot = c[i][0] + c[i][1];
                        if tot > 0.0 { clamp(c[i][0] / tot) } else { 0.5 }
                    })
                    .collect();
                for s in &members {
                    let mut l = alpha.ln() + if s.states[0] == 0 { p0.ln() } else { (1.0 - p0).ln() };
                    for w in s.states.windows(2) {
                        l += if w[1] == 0 { t[w[0]].ln() } else { (1.0 - t[w[0]]).ln() };
                    }
                    total += l;
                }
            }
            best = best.max(total);
        }
        best
    }

    #[test]
    fn beats_every_hard_assignment() {
        let s = vec![seq(&[0, 0, 0, 1, 0, 0]), seq(&[1, 1, 0, 1, 1, 1]), seq(&[0, 1, 1, 1, 0, 0, 1])];
        let (_, r) = em_fit(&s, 2, &StateAggregation::identity(2), &EmConfig::default()).unwrap();
        let oracle = best_hard_assignment(&s);
        assert!(r.log_likelihood >= oracle - 1e-9, "{} < {}", r.log_likelihood, oracle);
    }

    #[test]
    fn trace_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let seqs: Vec<CellSequence> = (0..60)
            .map(|i| {
                let len = rng.random_range(5..25);
                let st: Vec<usize> = (0..len).map(|_| rng.random_range(0..5)).collect();
                CellSequence::new(format!("d{i}"), st)
            })
            .collect();
        let cfg = EmConfig { restarts: 5, ..Default::default() };
        let (_, r) = em_fit(&seqs, 3, &StateAggregation::identity(5), &cfg).unwrap();
        for w in r.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * w[0].abs(), "{w:?}");
        }
        assert!((r.bic - (-2.0 * r.log_likelihood + r.parameter_count as f64 * 60f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn k_larger_than_data() {
        let s = vec![seq(&[0, 1]), seq(&[1, 0])];
        assert!(em_fit(&s, 3, &StateAggregation::identity(2), &EmConfig::default()).is_err());
    }

    #[test]
    fn state_outside_aggregation() {
        let s = vec![seq(&[0, 5])];
        assert!(em_fit(&s, 1, &StateAggregation::identity(2), &EmConfig::default()).is_err());
    }

    #[test]
    fn parameter_count_formula() {
        assert_eq!(parameter_count(3, 7, 50), 2 + 18 + 126 + 43);
        assert_eq!(parameter_count(1, 2, 2), 1 + 2);
    }

    #[test]
    fn deterministic_given_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let seqs: Vec<CellSequence> = (0..40)
            .map(|i| CellSequence::new(format!("d{i}"), (0..15).map(|_| rng.random_range(0..4)).collect()))
            .collect();
        let cfg = EmConfig { restarts: 8, seed: 77, ..Default::default() };
        let a = em_fit(&seqs, 2, &StateAggregation::identity(4), &cfg).unwrap();
        let b = em_fit(&seqs, 2, &StateAggregation::identity(4), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_range() {
        let s = vec![seq(&[0, 1, 0]), seq(&[1, 0, 1]), seq(&[0, 1, 1])];
        let sel = select_k(&s, 2..=2, &StateAggregation::identity(2), &EmConfig::default()).unwrap();
        assert_eq!(sel.best_k, 2);
        assert_eq!(sel.reports.len(), 1);
    }
}
