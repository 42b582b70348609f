use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CellSequence;
use crate::error::{Error, Result};

/// Largest row-sum error that is silently renormalized when loading a model.
/// Published matrices are rounded to eight decimals and miss 1 by up to ~1e-7.
pub const LOAD_SUM_TOLERANCE: f64 = 1e-6;

/// Tolerance for the stochastic-row invariant of a model in memory.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Partition of raw frequency ranks into equivalence blocks. Blocks are
/// 0-based here and 1-based in the JSON model format.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StateAggregation {
    block_of: Vec<usize>,
    d: usize,
}

impl StateAggregation {
    /// Every raw state in its own block.
    pub fn identity(m: usize) -> Self {
        StateAggregation { block_of: (0..m).collect(), d: m }
    }

    /// `block_of[rank]` must cover `0..d` for some d.
    pub fn from_blocks(block_of: Vec<usize>) -> Result<Self> {
        if block_of.is_empty() {
            return Err(Error::invalid("aggregation with no states"));
        }
        let d = block_of.iter().max().unwrap() + 1;
        let mut seen = vec![false; d];
        block_of.iter().for_each(|&b| seen[b] = true);
        if let Some(b) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(format!("block {} has no member states", b + 1)));
        }
        Ok(StateAggregation { block_of, d })
    }

    pub fn m(&self) -> usize {
        self.block_of.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn block_of(&self, rank: usize) -> usize {
        self.block_of[rank]
    }

    pub fn blocks(&self) -> &[usize] {
        &self.block_of
    }

    pub fn members(&self, block: usize) -> Vec<usize> {
        (0..self.m()).filter(|&r| self.block_of[r] == block).collect()
    }

    /// Merge blocks `a` and `b`; the remaining blocks keep their relative order.
    pub fn merge(&self, a: usize, b: usize) -> Self {
        let (lo, hi) = (a.min(b), a.max(b));
        let block_of = self
            .block_of
            .iter()
            .map(|&x| match x {
                x if x == hi => lo,
                x if x > hi => x - 1,
                x => x,
            })
            .collect();
        StateAggregation { block_of, d: self.d - 1 }
    }

    /// Relabel blocks by first appearance along the ranks.
    pub fn canonical(&self) -> Self {
        let mut map = vec![usize::MAX; self.d];
        let mut next = 0;
        let block_of = self
            .block_of
            .iter()
            .map(|&b| {
                if map[b] == usize::MAX {
                    map[b] = next;
                    next += 1;
                }
                map[b]
            })
            .collect();
        StateAggregation { block_of, d: self.d }
    }
}

/// Finite mixture of first-order Markov chains over equivalence blocks.
///
/// A raw state `j` in block `b` is emitted with probability `within[j]`
/// given the block, shared by all components. For run-free data
/// (`run_free`), a step that stays inside a block cannot re-emit the previous
/// state, so the member draw excludes it: `within[j] / (1 - within[prev])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovMixtureModel {
    pub alpha: Vec<f64>,
    pub initial: Vec<Vec<f64>>,
    pub transition: Vec<Vec<Vec<f64>>>,
    pub aggregation: StateAggregation,
    pub within: Vec<f64>,
    pub run_free: bool,
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    k: usize,
    alpha: Vec<f64>,
    blocks: BTreeMap<usize, usize>,
    initial: Vec<Vec<f64>>,
    transition: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    within: Option<Vec<f64>>,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    run_free: bool,
}

const REFERENCE_MODEL: &str = include_str!("../../fixtures/reference_model.json");

fn check_distribution(v: &mut [f64], what: &str, tolerance: f64) -> Result<()> {
    if v.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::invalid(format!("{what} has a negative or non-finite entry")));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > tolerance {
        return Err(Error::invalid(format!("{what} sums to {s}")));
    }
    v.iter_mut().for_each(|p| *p /= s);
    Ok(())
}

/// Uniform member distribution within every block.
pub(crate) fn uniform_within(agg: &StateAggregation) -> Vec<f64> {
    let mut size = vec![0usize; agg.d()];
    agg.blocks().iter().for_each(|&b| size[b] += 1);
    agg.blocks().iter().map(|&b| 1.0 / size[b] as f64).collect()
}

impl MarkovMixtureModel {
    /// Build and validate; distributions within [`LOAD_SUM_TOLERANCE`] of
    /// summing to one are renormalized. The model is run-free; see
    /// [`MarkovMixtureModel::with_run_free`].
    pub fn new(
        alpha: Vec<f64>,
        initial: Vec<Vec<f64>>,
        transition: Vec<Vec<Vec<f64>>>,
        aggregation: StateAggregation,
        within: Option<Vec<f64>>,
    ) -> Result<Self> {
        let k = alpha.len();
        let d = aggregation.d();
        if k == 0 {
            return Err(Error::invalid("model has no components"));
        }
        if initial.len() != k || transition.len() != k {
            return Err(Error::invalid("alpha, initial and transition disagree on the component count"));
        }
        let mut m = MarkovMixtureModel {
            within: within.unwrap_or_else(|| uniform_within(&aggregation)),
            alpha,
            initial,
            transition,
            aggregation,
            run_free: true,
        };
        check_distribution(&mut m.alpha, "alpha", LOAD_SUM_TOLERANCE)?;
        if m.alpha.iter().any(|a| *a <= 0.0) {
            return Err(Error::invalid("mixing proportions must be positive"));
        }
        for (c, (init, trans)) in m.initial.iter_mut().zip(m.transition.iter_mut()).enumerate() {
            if init.len() != d || trans.len() != d || trans.iter().any(|r| r.len() != d) {
                return Err(Error::invalid(format!("component {} does not match {d} blocks", c + 1)));
            }
            check_distribution(init, &format!("component {} initial", c + 1), LOAD_SUM_TOLERANCE)?;
            for (i, row) in trans.iter_mut().enumerate() {
                check_distribution(row, &format!("component {} row {}", c + 1, i + 1), LOAD_SUM_TOLERANCE)?;
            }
        }
        if m.within.len() != m.aggregation.m() {
            return Err(Error::invalid("within-block distribution does not cover every state"));
        }
        for b in 0..d {
            let members = m.aggregation.members(b);
            let mut q: Vec<f64> = members.iter().map(|&j| m.within[j]).collect();
            check_distribution(&mut q, &format!("within-block distribution of block {}", b + 1), LOAD_SUM_TOLERANCE)?;
            members.iter().zip(q).for_each(|(&j, p)| m.within[j] = p);
        }
        Ok(m)
    }

    pub fn with_run_free(mut self, run_free: bool) -> Self {
        self.run_free = run_free;
        self
    }

    pub fn k(&self) -> usize {
        self.alpha.len()
    }

    pub fn d(&self) -> usize {
        self.aggregation.d()
    }

    pub fn m(&self) -> usize {
        self.aggregation.m()
    }

    /// The packaged three-component, seven-block reference model over 50 ranks.
    pub fn reference() -> Self {
        Self::from_json(REFERENCE_MODEL).expect("packaged reference model is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(text)?;
        if f.k != f.alpha.len() {
            return Err(Error::invalid(format!("k = {} but {} mixing proportions", f.k, f.alpha.len())));
        }
        let m = f.blocks.len();
        if f.blocks.keys().copied().ne(0..m) {
            return Err(Error::invalid("block map must list ranks 0..m-1"));
        }
        if f.blocks.values().any(|&b| b == 0) {
            return Err(Error::invalid("block numbers start at 1"));
        }
        let agg = StateAggregation::from_blocks(f.blocks.values().map(|b| b - 1).collect())?;
        Ok(Self::new(f.alpha, f.initial, f.transition, agg, f.within)?.with_run_free(f.run_free))
    }

    pub fn to_json(&self) -> String {
        let uniform = uniform_within(&self.aggregation);
        let same = self.within.iter().zip(&uniform).all(|(a, b)| (a - b).abs() < 1e-15);
        let f = ModelFile {
            k: self.k(),
            alpha: self.alpha.clone(),
            blocks: self.aggregation.blocks().iter().enumerate().map(|(r, b)| (r, b + 1)).collect(),
            initial: self.initial.clone(),
            transition: self.transition.clone(),
            within: (!same).then(|| self.within.clone()),
            run_free: self.run_free,
        };
        serde_json::to_string_pretty(&f).expect("model serializes") + "\n"
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }

    /// Per-component log-likelihood of the block path of `seq`, without the
    /// mixing weight or the within-block term.
    pub fn component_log_likelihoods(&self, seq: &CellSequence) -> Vec<f64> {
        let agg = &self.aggregation;
        (0..self.k())
            .map(|c| {
                let Some(&first) = seq.states.first() else { return 0.0 };
                let mut ll = self.initial[c][agg.block_of(first)].ln();
                for w in seq.states.windows(2) {
                    ll += self.transition[c][agg.block_of(w[0])][agg.block_of(w[1])].ln();
                }
                ll
            })
            .collect()
    }

    /// Mixture log-likelihood of a raw-rank sequence.
    pub fn log_likelihood(&self, seq: &CellSequence) -> f64 {
        let comps: Vec<f64> = self
            .component_log_likelihoods(seq)
            .iter()
            .zip(&self.alpha)
            .map(|(l, a)| l + a.ln())
            .collect();
        log_sum_exp(&comps) + self.within_log_likelihood(seq)
    }

    /// Log-probability of the member states given the block path.
    pub fn within_log_likelihood(&self, seq: &CellSequence) -> f64 {
        let agg = &self.aggregation;
        let mut ll = 0.0;
        for (t, &s) in seq.states.iter().enumerate() {
            ll += self.within[s].ln();
            if self.run_free && t > 0 {
                let p = seq.states[t - 1];
                if p == s {
                    return f64::NEG_INFINITY;
                }
                if agg.block_of(p) == agg.block_of(s) {
                    ll -= (1.0 - self.within[p]).ln();
                }
            }
        }
        ll
    }

    /// Stationary distribution of component `c` by power iteration.
    pub fn stationary(&self, c: usize) -> Vec<f64> {
        let d = self.d();
        let t = &self.transition[c];
        let mut pi = vec![1.0 / d as f64; d];
        for _ in 0..10_000 {
            let mut next = vec![0.0; d];
            for (i, p) in pi.iter().enumerate() {
                for (j, n) in next.iter_mut().enumerate() {
                    *n += p * t[i][j];
                }
            }
            let diff: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
            pi = next;
            if diff < 1e-15 {
                break;
            }
        }
        pi
    }
}

pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
