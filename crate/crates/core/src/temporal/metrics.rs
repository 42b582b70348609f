//! Partition quality scores shared by the clustering routines.

use rayon::prelude::*;

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

pub(crate) fn centroids(points: &[Vec<f64>], labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let dim = points.first().map_or(0, Vec::len);
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(p) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            s.iter_mut().for_each(|v| *v /= c as f64);
        }
    }
    sums
}

/// Mean silhouette of one partition (Euclidean). Points in singleton
/// clusters score 0. Returns `None` for fewer than two clusters.
pub fn silhouette(points: &[Vec<f64>], labels: &[usize]) -> Option<f64> {
    silhouettes(points, &[labels.to_vec()]).pop().flatten()
}

/// Mean silhouette of several partitions of the same points, computing each
/// pairwise distance once.
pub fn silhouettes(points: &[Vec<f64>], partitions: &[Vec<usize>]) -> Vec<Option<f64>> {
    let n = points.len();
    let ks: Vec<usize> = partitions
        .iter()
        .map(|l| l.iter().copied().max().map_or(0, |m| m + 1))
        .collect();
    let sizes: Vec<Vec<usize>> = partitions
        .iter()
        .zip(&ks)
        .map(|(l, &k)| {
            let mut s = vec![0usize; k];
            l.iter().for_each(|&c| s[c] += 1);
            s
        })
        .collect();

    // per point, per partition silhouette value
    let per_point: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut sums: Vec<Vec<f64>> = ks.iter().map(|&k| vec![0.0; k]).collect();
            for j in 0..n {
                if i == j {
                    continue;
                }
                let d = dist(&points[i], &points[j]);
                for (p, labels) in partitions.iter().enumerate() {
                    sums[p][labels[j]] += d;
                }
            }
            partitions
                .iter()
                .enumerate()
                .map(|(p, labels)| {
                    let own = labels[i];
                    let own_size = sizes[p][own];
                    if own_size <= 1 {
                        return 0.0;
                    }
                    let a = sums[p][own] / (own_size - 1) as f64;
                    let b = (0..ks[p])
                        .filter(|&c| c != own && sizes[p][c] > 0)
                        .map(|c| sums[p][c] / sizes[p][c] as f64)
                        .fold(f64::INFINITY, f64::min);
                    let m = a.max(b);
                    if m > 0.0 { (b - a) / m } else { 0.0 }
                })
                .collect()
        })
        .collect();

    (0..partitions.len())
        .map(|p| {
            let nonempty = sizes[p].iter().filter(|&&s| s > 0).count();
            (nonempty >= 2 && n > 0).then(|| per_point.iter().map(|v| v[p]).sum::<f64>() / n as f64)
        })
        .collect()
}

/// Davies-Bouldin index (lower is better). `None` for fewer than two clusters.
pub fn davies_bouldin(points: &[Vec<f64>], labels: &[usize]) -> Option<f64> {
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    if k < 2 {
        return None;
    }
    let cents = centroids(points, labels, k);
    let mut scatter = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        scatter[l] += dist(p, &cents[l]);
        counts[l] += 1;
    }
    for (s, &c) in scatter.iter_mut().zip(&counts) {
        if c > 0 {
            *s /= c as f64;
        }
    }
    let live: Vec<usize> = (0..k).filter(|&c| counts[c] > 0).collect();
    if live.len() < 2 {
        return None;
    }
    let mut total = 0.0;
    for &i in &live {
        let worst = live
            .iter()
            .filter(|&&j| j != i)
            .map(|&j| {
                let sep = dist(&cents[i], &cents[j]);
                if sep > 0.0 { (scatter[i] + scatter[j]) / sep } else { f64::INFINITY }
            })
            .fold(0.0, f64::max);
        total += worst;
    }
    Some(total / live.len() as f64)
}

/// Adjusted Rand index between two labelings of the same points.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings differ in length");
    let n = a.len();
    let ka = a.iter().copied().max().map_or(0, |m| m + 1);
    let kb = b.iter().copied().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let c2 = |m: u64| (m * m.saturating_sub(1)) as f64 / 2.0;
    let index: f64 = table.iter().flatten().map(|&m| c2(m)).sum();
    let rows: f64 = table.iter().map(|r| c2(r.iter().sum())).sum();
    let cols: f64 = (0..kb).map(|j| c2(table.iter().map(|r| r[j]).sum())).sum();
    let total = c2(n as u64);
    if total == 0.0 {
        return 1.0;
    }
    let expected = rows * cols / total;
    let max = 0.5 * (rows + cols);
    if (max - expected).abs() < f64::EPSILON {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Textbook O(n^2) silhouette, one partition at a time.
    pub(crate) fn brute_silhouette(points: &[Vec<f64>], labels: &[usize]) -> f64 {
        let n = points.len();
        let mut total = 0.0;
        for i in 0..n {
            let same: Vec<usize> = (0..n).filter(|&j| j != i && labels[j] == labels[i]).collect();
            if same.is_empty() {
                continue;
            }
            let a = same.iter().map(|&j| dist(&points[i], &points[j])).sum::<f64>() / same.len() as f64;
            let mut b = f64::INFINITY;
            let k = labels.iter().max().unwrap() + 1;
            for c in 0..k {
                if c == labels[i] {
                    continue;
                }
                let other: Vec<usize> = (0..n).filter(|&j| labels[j] == c).collect();
                if other.is_empty() {
                    continue;
                }
                let m = other.iter().map(|&j| dist(&points[i], &points[j])).sum::<f64>() / other.len() as f64;
                b = b.min(m);
            }
            total += (b - a) / a.max(b);
        }
        total / n as f64
    }

    #[test]
    fn silhouette_matches_brute_force() {
        let pts: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 7) as f64, (i * i % 11) as f64]).collect();
        let labels: Vec<usize> = (0..40).map(|i| (i * 3 % 4) as usize).collect();
        let got = silhouette(&pts, &labels).unwrap();
        assert!((got - brute_silhouette(&pts, &labels)).abs() < 1e-12);
    }

    #[test]
    fn ari_examples() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]), 1.0);
        let a = [0, 0, 0, 1, 1, 1];
        let b = [0, 1, 0, 1, 0, 1];
        assert!(adjusted_rand_index(&a, &b) < 0.1);
    }

    #[test]
    fn davies_bouldin_separated_is_small() {
        let pts = vec![vec![0.0], vec![0.1], vec![10.0], vec![10.1]];
        let db = davies_bouldin(&pts, &[0, 0, 1, 1]).unwrap();
        assert!((db - 0.01).abs() < 1e-12);
        assert!(davies_bouldin(&pts, &[0, 0, 0, 0]).is_none());
    }
}
