use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MIN_LEN: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub device_id: String,
    pub n: usize,
    pub n_distinct: usize,
    /// Bits per symbol.
    pub h_rate: f64,
}

/// Incrementally built suffix automaton of a growing prefix.
struct SuffixAutomaton {
    next: Vec<HashMap<usize, usize>>,
    link: Vec<Option<usize>>,
    len: Vec<usize>,
    last: usize,
}

impl SuffixAutomaton {
    fn new() -> Self {
        SuffixAutomaton { next: vec![HashMap::new()], link: vec![None], len: vec![0], last: 0 }
    }

    fn push(&mut self, c: usize) {
        let cur = self.next.len();
        self.next.push(HashMap::new());
        self.len.push(self.len[self.last] + 1);
        self.link.push(Some(0));
        let mut p = Some(self.last);
        while let Some(q) = p {
            if self.next[q].contains_key(&c) {
                break;
            }
            self.next[q].insert(c, cur);
            p = self.link[q];
        }
        if let Some(p) = p {
            let q = self.next[p][&c];
            if self.len[p] + 1 == self.len[q] {
                self.link[cur] = Some(q);
            } else {
                let clone = self.next.len();
                self.next.push(self.next[q].clone());
                self.len.push(self.len[p] + 1);
                self.link.push(self.link[q]);
                let mut r = Some(p);
                while let Some(s) = r {
                    if self.next[s].get(&c) != Some(&q) {
                        break;
                    }
                    self.next[s].insert(c, clone);
                    r = self.link[s];
                }
                self.link[q] = Some(clone);
                self.link[cur] = Some(clone);
            }
        }
        self.last = cur;
    }

    /// Length of the longest prefix of `s` that occurs in the indexed text.
    fn longest_prefix_match(&self, s: &[usize]) -> usize {
        let mut state = 0;
        for (k, c) in s.iter().enumerate() {
            match self.next[state].get(c) {
                Some(&t) => state = t,
                None => return k,
            }
        }
        s.len()
    }
}

/// Match lengths: `lambda[i]` is one more than the longest prefix of `x[i..]`
/// that occurs inside `x[..i]`. When all of `x[i..]` occurs, this is
/// `n - i + 1`.
pub fn match_lengths(x: &[usize]) -> Vec<usize> {
    let mut sam = SuffixAutomaton::new();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        if i > 0 {
            sam.push(x[i - 1]);
        }
        out.push(sam.longest_prefix_match(&x[i..]) + 1);
    }
    out
}

/// Lempel-Ziv entropy-rate estimate `n log2 n / sum(lambda)` in bits.
pub fn lz_entropy(device_id: &str, states: &[usize], min_len: usize) -> Result<EntropyEstimate> {
    let n = states.len();
    if n < min_len.max(2) {
        return Err(Error::invalid(format!("sequence of {device_id} has {n} symbols, below {}", min_len.max(2))));
    }
    let total: usize = match_lengths(states).iter().sum();
    let mut distinct = states.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    Ok(EntropyEstimate {
        device_id: device_id.to_string(),
        n,
        n_distinct: distinct.len(),
        h_rate: n as f64 * (n as f64).log2() / total as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct substring search: shortest window at `i` not found in `x[..i]`.
    fn brute_lambda(x: &[usize]) -> Vec<usize> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let prefix = &x[..i];
                for l in 1..=n - i {
                    let w = &x[i..i + l];
                    if !prefix.windows(l).any(|p| p == w) {
                        return l;
                    }
                }
                n - i + 1
            })
            .collect()
    }

    #[test]
    fn matches_brute_force_on_all_short_binary_sequences() {
        for len in 1..=12 {
            for bits in 0u32..(1 << len) {
                let x: Vec<usize> = (0..len).map(|k| ((bits >> k) & 1) as usize).collect();
                assert_eq!(match_lengths(&x), brute_lambda(&x), "{x:?}");
            }
        }
    }

    #[test]
    fn matches_brute_force_on_random_sequences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..400 {
            let len = rng.random_range(1..=100);
            let alphabet = rng.random_range(1..=6);
            let x: Vec<usize> = (0..len).map(|_| rng.random_range(0..alphabet)).collect();
            assert_eq!(match_lengths(&x), brute_lambda(&x));
        }
    }

    #[test]
    fn boundary_convention() {
        // 0,1,0,1: at i=2 the remainder [0,1] occurs in full
        assert_eq!(match_lengths(&[0, 1, 0, 1]), vec![1, 1, 3, 2]);
    }

    #[test]
    fn alternation_has_low_entropy() {
        let x: Vec<usize> = (0..10_000).map(|i| i % 2).collect();
        let e = lz_entropy("d", &x, 20).unwrap();
        assert!(e.h_rate <= 0.1, "{}", e.h_rate);
        assert_eq!(e.n_distinct, 2);
    }

    #[test]
    fn too_short() {
        assert!(lz_entropy("d", &[0, 1, 2], 20).is_err());
    }

    #[test]
    fn uniform_sequences_near_log2_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n_sym in [2usize, 4, 8] {
            let x: Vec<usize> = (0..10_000).map(|_| rng.random_range(0..n_sym)).collect();
            let h = lz_entropy("d", &x, 20).unwrap().h_rate;
            let want = (n_sym as f64).log2();
            assert!((h - want).abs() <= 0.1 * want, "N={n_sym}: {h}");
        }
    }

    proptest! {
        #[test]
        fn invariant_under_relabeling(x in proptest::collection::vec(0usize..5, 20..200), shift in 1usize..50) {
            let y: Vec<usize> = x.iter().map(|s| (s * 7 + shift) % 1000).collect();
            prop_assert_eq!(match_lengths(&x), match_lengths(&y));
        }

        #[test]
        fn doubling_does_not_raise_entropy(x in proptest::collection::vec(0usize..4, 20..150)) {
            let mut xx = x.clone();
            xx.extend(&x);
            let a = lz_entropy("d", &x, 20).unwrap().h_rate;
            let b = lz_entropy("d", &xx, 20).unwrap().h_rate;
            prop_assert!(b <= a + 1e-12, "{} > {}", b, a);
        }
    }
}
