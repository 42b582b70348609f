//! Bisecting k-means with silhouette-based choice of k.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dwt::{dwt_haar, haar_idwt, PROFILE_LEVELS};
use super::metrics::{centroids, silhouettes, sq_dist};
use super::DailyProfile;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub seed: u64,
    /// Silhouettes are scored on a seeded subsample of at most this many points.
    pub silhouette_sample: usize,
    pub max_iter: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig { k_min: 2, k_max: 10, seed: 0, silhouette_sample: 5000, max_iter: 100 }
    }
}

/// A flat clustering: labels are `0..k`, numbered by first appearance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub k: usize,
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
}

impl Partition {
    pub(crate) fn from_labels(points: &[Vec<f64>], labels: &[usize]) -> Self {
        let mut remap = BTreeMap::new();
        let labels: Vec<usize> = labels
            .iter()
            .map(|l| {
                let next = remap.len();
                *remap.entry(*l).or_insert(next)
            })
            .collect();
        let k = remap.len();
        Partition { k, centroids: centroids(points, &labels, k), labels }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        self.labels.iter().for_each(|&l| s[l] += 1);
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectingFit {
    pub best: Partition,
    pub silhouette: f64,
    /// `(k, silhouette)` for every k that was reached.
    pub scores: Vec<(usize, f64)>,
}

/// Run bisecting k-means up to `k_max` clusters and keep the k in
/// `k_min..=k_max` with the highest silhouette (ties to the smaller k).
///
/// Each step splits the cluster with the largest within-cluster sum of squares
/// using 2-means seeded by the point farthest from the cluster mean and the
/// point farthest from that one.
pub fn bisecting_kmeans(points: &[Vec<f64>], cfg: &KMeansConfig) -> Result<BisectingFit> {
    let n = points.len();
    if cfg.k_min < 2 || cfg.k_min > cfg.k_max {
        return Err(Error::invalid(format!("bad k range {}..={}", cfg.k_min, cfg.k_max)));
    }
    if cfg.k_max > n {
        return Err(Error::invalid(format!("k_max {} exceeds the {n} points", cfg.k_max)));
    }

    let mut clusters: Vec<Vec<usize>> = vec![(0..n).collect()];
    let mut frozen = vec![false];
    let mut partitions: Vec<(usize, Vec<usize>)> = Vec::new();
    while clusters.len() < cfg.k_max {
        let pick = (0..clusters.len())
            .filter(|&c| !frozen[c] && clusters[c].len() >= 2)
            .map(|c| (c, sse(points, &clusters[c])))
            .filter(|(_, s)| *s > 0.0)
            .fold(None, |best: Option<(usize, f64)>, cur| match best {
                Some(b) if b.1 >= cur.1 => Some(b),
                _ => Some(cur),
            });
        let Some((c, _)) = pick else { break };
        match two_means(points, &clusters[c], cfg.max_iter) {
            Some((left, right)) => {
                clusters[c] = left;
                clusters.push(right);
                frozen.push(false);
            }
            None => frozen[c] = true,
        }
        if clusters.len() >= cfg.k_min {
            let mut labels = vec![0; n];
            for (ci, members) in clusters.iter().enumerate() {
                members.iter().for_each(|&i| labels[i] = ci);
            }
            if partitions.last().is_none_or(|(k, _)| *k != clusters.len()) {
                partitions.push((clusters.len(), labels));
            }
        }
    }
    if partitions.is_empty() {
        return Err(Error::invalid("points cannot be split into at least k_min distinct clusters"));
    }

    let sample = sample_indices(n, cfg.silhouette_sample, cfg.seed);
    let sub_points: Vec<Vec<f64>> = sample.iter().map(|&i| points[i].clone()).collect();
    let sub_labels: Vec<Vec<usize>> = partitions
        .iter()
        .map(|(_, l)| sample.iter().map(|&i| l[i]).collect())
        .collect();
    let sil = silhouettes(&sub_points, &sub_labels);

    let scores: Vec<(usize, f64)> = partitions
        .iter()
        .zip(&sil)
        .filter_map(|((k, _), s)| s.map(|s| (*k, s)))
        .collect();
    let (best_i, best_s) = partitions
        .iter()
        .zip(&sil)
        .enumerate()
        .filter_map(|(i, (_, s))| s.map(|s| (i, s)))
        .fold((usize::MAX, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
    if best_i == usize::MAX {
        return Err(Error::numerical("no partition has a defined silhouette"));
    }
    Ok(BisectingFit {
        best: Partition::from_labels(points, &partitions[best_i].1),
        silhouette: best_s,
        scores,
    })
}

fn sse(points: &[Vec<f64>], members: &[usize]) -> f64 {
    let mean = mean_of(points, members);
    members.iter().map(|&i| sq_dist(&points[i], &mean)).sum()
}

fn mean_of(points: &[Vec<f64>], members: &[usize]) -> Vec<f64> {
    let dim = points[members[0]].len();
    let mut m = vec![0.0; dim];
    for &i in members {
        m.iter_mut().zip(&points[i]).for_each(|(a, b)| *a += b);
    }
    m.iter_mut().for_each(|a| *a /= members.len() as f64);
    m
}

fn farthest(points: &[Vec<f64>], members: &[usize], from: &[f64]) -> usize {
    let mut best = (members[0], -1.0);
    for &i in members {
        let d = sq_dist(&points[i], from);
        if d > best.1 {
            best = (i, d);
        }
    }
    best.0
}

/// Lloyd's 2-means on `members`. `None` if the seeds coincide or a side empties.
fn two_means(points: &[Vec<f64>], members: &[usize], max_iter: usize) -> Option<(Vec<usize>, Vec<usize>)> {
    let mean = mean_of(points, members);
    let a = farthest(points, members, &mean);
    let b = farthest(points, members, &points[a]);
    if sq_dist(&points[a], &points[b]) == 0.0 {
        return None;
    }
    let mut ca = points[a].clone();
    let mut cb = points[b].clone();
    let mut side: Option<Vec<bool>> = None;
    let mut split = (Vec::new(), Vec::new());
    for _ in 0..max_iter.max(1) {
        // ties go to the first seed
        let next: Vec<bool> = members
            .iter()
            .map(|&i| sq_dist(&points[i], &cb) < sq_dist(&points[i], &ca))
            .collect();
        if side.as_ref() == Some(&next) {
            break;
        }
        let (left, right): (Vec<usize>, Vec<usize>) =
            (0..members.len()).partition(|&p| !next[p]);
        let left: Vec<usize> = left.into_iter().map(|p| members[p]).collect();
        let right: Vec<usize> = right.into_iter().map(|p| members[p]).collect();
        if left.is_empty() || right.is_empty() {
            return None;
        }
        ca = mean_of(points, &left);
        cb = mean_of(points, &right);
        split = (left, right);
        side = Some(next);
    }
    Some(split)
}

pub(crate) fn sample_indices(n: usize, cap: usize, seed: u64) -> Vec<usize> {
    if n <= cap {
        return (0..n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, n, cap).into_vec();
    idx.sort_unstable();
    idx
}

/// Temporal clusters of daily profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub assignments: BTreeMap<String, usize>,
    /// Centroids in wavelet-coefficient space.
    pub centroids: Vec<Vec<f64>>,
    /// Centroids mapped back to 24-hour profiles.
    pub centroid_profiles: Vec<Vec<f64>>,
    pub silhouette: f64,
    pub shares: Vec<f64>,
    pub scores: Vec<(usize, f64)>,
}

/// Haar-transform each profile and cluster the coefficients.
pub fn cluster_profiles(profiles: &[DailyProfile], cfg: &KMeansConfig) -> Result<ClusterModel> {
    let points: Vec<Vec<f64>> = profiles.iter().map(dwt_haar).collect();
    let fit = bisecting_kmeans(&points, cfg)?;
    let n = profiles.len() as f64;
    let centroid_profiles = fit
        .best
        .centroids
        .iter()
        .map(|c| haar_idwt(c, PROFILE_LEVELS).expect("24 coefficients"))
        .collect();
    Ok(ClusterModel {
        k: fit.best.k,
        assignments: profiles
            .iter()
            .zip(&fit.best.labels)
            .map(|(p, l)| (p.device_id.clone(), *l))
            .collect(),
        shares: fit.best.sizes().iter().map(|&s| s as f64 / n).collect(),
        centroids: fit.best.centroids,
        centroid_profiles,
        silhouette: fit.silhouette,
        scores: fit.scores,
    })
}
