//! Ward agglomerative clustering via the nearest-neighbour chain, used as a
//! cross-check on the bisecting k-means result.

use serde::{Deserialize, Serialize};

use super::kmeans::Partition;
use super::metrics::{davies_bouldin, sq_dist};
use crate::error::{Error, Result};

/// One merge step. Cluster ids follow the usual linkage-matrix convention:
/// `0..n` are the input points and merge `i` creates cluster `n + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    /// Increase in the total within-cluster sum of squares.
    pub cost: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub n: usize,
    pub merges: Vec<Merge>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }
    fn union(&mut self, a: usize, b: usize) -> usize {
        let (ra, rb) = (self.find(a), self.find(b));
        let r = ra.min(rb);
        self.0[ra] = r;
        self.0[rb] = r;
        r
    }
}

fn tri(i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (j, i) } else { (i, j) };
    i * (i - 1) / 2 + j
}

/// Ward linkage. O(n^2) memory and time.
pub fn ward_linkage(points: &[Vec<f64>]) -> Result<Dendrogram> {
    let n = points.len();
    if n < 2 {
        return Err(Error::invalid("need at least two points"));
    }
    // dissimilarity between singletons is half the squared distance
    let mut d = vec![0.0; n * (n - 1) / 2];
    for i in 1..n {
        for j in 0..i {
            d[tri(i, j)] = 0.5 * sq_dist(&points[i], &points[j]);
        }
    }
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut chain: Vec<usize> = Vec::with_capacity(n);
    // (slot a, slot b, cost, merged size); the merged cluster lives in slot min(a, b)
    let mut raw: Vec<(usize, usize, f64, usize)> = Vec::with_capacity(n - 1);

    while raw.len() < n - 1 {
        if chain.is_empty() {
            chain.push(active.iter().position(|&a| a).expect("an active cluster"));
        }
        let a = *chain.last().unwrap();
        let prev = (chain.len() >= 2).then(|| chain[chain.len() - 2]);
        let mut best = prev.map_or((usize::MAX, f64::INFINITY), |p| (p, d[tri(a, p)]));
        for c in (0..n).filter(|&c| c != a && active[c]) {
            let dc = d[tri(a, c)];
            if dc < best.1 {
                best = (c, dc);
            }
        }
        let (b, cost) = best;
        if Some(b) != prev {
            chain.push(b);
            continue;
        }
        chain.truncate(chain.len() - 2);
        let (keep, gone) = (a.min(b), a.max(b));
        let (na, nb) = (size[a] as f64, size[b] as f64);
        for c in (0..n).filter(|&c| active[c] && c != a && c != b) {
            let nc = size[c] as f64;
            let updated =
                ((na + nc) * d[tri(a, c)] + (nb + nc) * d[tri(b, c)] - nc * cost) / (na + nb + nc);
            d[tri(keep, c)] = updated;
        }
        active[gone] = false;
        size[keep] += size[gone];
        raw.push((a, b, cost, size[keep]));
    }

    // Ward is reducible, so sorting by cost keeps children ahead of parents;
    // the sort is stable for ties.
    raw.sort_by(|x, y| x.2.total_cmp(&y.2));
    let mut uf = UnionFind::new(n);
    let mut id_of_root: Vec<usize> = (0..n).collect();
    let merges = raw
        .iter()
        .enumerate()
        .map(|(step, &(a, b, cost, sz))| {
            let (ra, rb) = (uf.find(a), uf.find(b));
            let (ia, ib) = (id_of_root[ra], id_of_root[rb]);
            let r = uf.union(ra, rb);
            id_of_root[r] = n + step;
            Merge { left: ia.min(ib), right: ia.max(ib), cost, size: sz }
        })
        .collect();
    Ok(Dendrogram { n, merges })
}

impl Dendrogram {
    /// Flat labels with `k` clusters, numbered by first appearance.
    pub fn cut(&self, k: usize) -> Result<Vec<usize>> {
        if k == 0 || k > self.n {
            return Err(Error::invalid(format!("cannot cut {} points into {k} clusters", self.n)));
        }
        // member representative of every cluster id
        let mut rep: Vec<usize> = (0..self.n).collect();
        let mut uf = UnionFind::new(self.n);
        for m in &self.merges[..self.n - k] {
            let (a, b) = (rep[m.left], rep[m.right]);
            rep.push(uf.union(a, b));
        }
        let mut seen = std::collections::HashMap::new();
        Ok((0..self.n)
            .map(|i| {
                let r = uf.find(i);
                let next = seen.len();
                *seen.entry(r).or_insert(next)
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WardFit {
    pub best: Partition,
    pub davies_bouldin: f64,
    /// `(k, Davies-Bouldin)` for every cut considered.
    pub scores: Vec<(usize, f64)>,
}

/// Ward clustering cut at the k in `2..=k_max` with the lowest Davies-Bouldin
/// index (ties to the smaller k).
pub fn ward_oracle(points: &[Vec<f64>], k_max: usize) -> Result<WardFit> {
    let dendro = ward_linkage(points)?;
    let top = k_max.min(points.len());
    if top < 2 {
        return Err(Error::invalid("k_max must be at least 2"));
    }
    let mut scores = Vec::new();
    let mut best: Option<(Vec<usize>, f64)> = None;
    for k in 2..=top {
        let labels = dendro.cut(k)?;
        let Some(db) = davies_bouldin(points, &labels) else { continue };
        scores.push((k, db));
        if best.as_ref().is_none_or(|(_, b)| db < *b) {
            best = Some((labels, db));
        }
    }
    let (labels, db) = best.ok_or_else(|| Error::numerical("no cut has a defined Davies-Bouldin index"))?;
    Ok(WardFit { best: Partition::from_labels(points, &labels), davies_bouldin: db, scores })
}
