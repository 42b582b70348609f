use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedIndex;
use serde::{Deserialize, Serialize};

use super::model::MarkovMixtureModel;
use super::CellSequence;
use crate::error::{Error, Result};

/// Sequence lengths for synthetic generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LengthDist {
    Fixed(usize),
    /// Lengths drawn uniformly from the listed values.
    Empirical(Vec<usize>),
}

impl LengthDist {
    pub fn of_sequences(seqs: &[CellSequence]) -> Self {
        LengthDist::Empirical(seqs.iter().map(CellSequence::len).collect())
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        match self {
            LengthDist::Fixed(n) => *n,
            LengthDist::Empirical(v) => v[rng.random_range(0..v.len())],
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            LengthDist::Fixed(0) => Err(Error::invalid("sequence length must be positive")),
            LengthDist::Empirical(v) if v.is_empty() || v.contains(&0) => {
                Err(Error::invalid("empirical lengths must be non-empty and positive"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Synthetic {
    pub sequences: Vec<CellSequence>,
    /// Generating component of each sequence.
    pub components: Vec<usize>,
}

struct Samplers {
    alpha: WeightedIndex<f64>,
    init: Vec<WeightedIndex<f64>>,
    rows: Vec<Vec<WeightedIndex<f64>>>,
}

fn weighted(p: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(p).map_err(|e| Error::invalid(format!("bad probability vector: {e}")))
}

impl Samplers {
    fn new(model: &MarkovMixtureModel) -> Result<Self> {
        Ok(Samplers {
            alpha: weighted(&model.alpha)?,
            init: model.initial.iter().map(|p| weighted(p)).collect::<Result<_>>()?,
            rows: model
                .transition
                .iter()
                .map(|t| t.iter().map(|r| weighted(r)).collect::<Result<_>>())
                .collect::<Result<_>>()?,
        })
    }
}

fn name(i: usize) -> String {
    format!("syn{i:06}")
}

/// Draw block-level sequences: component from `alpha`, first block from the
/// component's initial distribution, then Markov steps. Self-transitions of a
/// block are kept.
pub fn synthesize(model: &MarkovMixtureModel, n: usize, lengths: &LengthDist, seed: u64) -> Result<Synthetic> {
    lengths.validate()?;
    let s = Samplers::new(model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sequences = Vec::with_capacity(n);
    let mut components = Vec::with_capacity(n);
    for i in 0..n {
        let c = s.alpha.sample(&mut rng);
        let len = lengths.sample(&mut rng);
        let mut states = Vec::with_capacity(len);
        states.push(s.init[c].sample(&mut rng));
        while states.len() < len {
            let prev = *states.last().unwrap();
            states.push(s.rows[c][prev].sample(&mut rng));
        }
        sequences.push(CellSequence::new(name(i), states));
        components.push(c);
    }
    Ok(Synthetic { sequences, components })
}

/// Draw raw-rank sequences. Each block step emits a member rank drawn from the
/// within-block distribution, excluding the previous rank so the output is
/// run-free; a self-transition of a single-member block emits nothing.
pub fn synthesize_ranks(model: &MarkovMixtureModel, n: usize, lengths: &LengthDist, seed: u64) -> Result<Synthetic> {
    lengths.validate()?;
    let s = Samplers::new(model)?;
    let agg = &model.aggregation;
    let members: Vec<Vec<usize>> = (0..agg.d()).map(|b| agg.members(b)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sequences = Vec::with_capacity(n);
    let mut components = Vec::with_capacity(n);
    for i in 0..n {
        let c = s.alpha.sample(&mut rng);
        let len = lengths.sample(&mut rng);
        let mut block = s.init[c].sample(&mut rng);
        let mut states: Vec<usize> = Vec::with_capacity(len);
        let mut guard = 0usize;
        loop {
            let prev = states.last().copied();
            let choices: Vec<(usize, f64)> = members[block]
                .iter()
                .filter(|&&j| Some(j) != prev)
                .map(|&j| (j, model.within[j]))
                .collect();
            let total: f64 = choices.iter().map(|c| c.1).sum();
            if total > 0.0 {
                let mut u = rng.random::<f64>() * total;
                let mut pick = choices.last().unwrap().0;
                for &(j, w) in &choices {
                    if u < w {
                        pick = j;
                        break;
                    }
                    u -= w;
                }
                states.push(pick);
            }
            if states.len() >= len {
                break;
            }
            guard += 1;
            if guard > 1000 * len.max(1) {
                return Err(Error::numerical("generator is stuck in a single-state block"));
            }
            block = s.rows[c][block].sample(&mut rng);
        }
        sequences.push(CellSequence::new(name(i), states));
        components.push(c);
    }
    Ok(Synthetic { sequences, components })
}
