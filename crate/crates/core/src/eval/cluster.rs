//! Spherical k-means under cosine distance, and silhouette scores.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embed::objective::{dot, norm};
use crate::embed::EmbeddingTable;
use crate::error::{Error, Result};

const RESTARTS: usize = 10;
const MAX_ITERS: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub assignment: Vec<usize>,
    pub silhouette: f64,
}

fn unit_rows(points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    points
        .iter()
        .map(|p| {
            let n = norm(p);
            if n == 0.0 || !n.is_finite() {
                Err(Error::DegenerateVector("cannot cluster a zero vector".into()))
            } else {
                Ok(p.iter().map(|v| v / n).collect())
            }
        })
        .collect()
}

fn cos_dist(a: &[f64], b: &[f64]) -> f64 {
    (1.0 - dot(a, b)).max(0.0)
}

fn seed_centroids<R: Rng>(x: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut chosen = vec![rng.gen_range(0..x.len())];
    while chosen.len() < k {
        let d2: Vec<f64> = x
            .iter()
            .map(|p| chosen.iter().map(|&c| cos_dist(p, &x[c])).fold(f64::INFINITY, f64::min).powi(2))
            .collect();
        let next = match WeightedIndex::new(&d2) {
            Ok(w) => w.sample(rng),
            Err(_) => {
                let rest: Vec<usize> = (0..x.len()).filter(|i| !chosen.contains(i)).collect();
                rest[rng.gen_range(0..rest.len())]
            }
        };
        chosen.push(next);
    }
    chosen.into_iter().map(|c| x[c].clone()).collect()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = cos_dist(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// One Lloyd run; `None` when a cluster empties out.
fn lloyd(x: &[Vec<f64>], mut centroids: Vec<Vec<f64>>) -> Option<(Vec<usize>, f64)> {
    let k = centroids.len();
    let dim = x[0].len();
    let mut assign = vec![usize::MAX; x.len()];
    for _ in 0..MAX_ITERS {
        let mut changed = false;
        for (i, p) in x.iter().enumerate() {
            let (j, _) = nearest(p, &centroids);
            if assign[i] != j {
                assign[i] = j;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut sizes = vec![0usize; k];
        for (p, &j) in x.iter().zip(&assign) {
            sizes[j] += 1;
            for (s, v) in sums[j].iter_mut().zip(p) {
                *s += v;
            }
        }
        if sizes.contains(&0) {
            return None;
        }
        for (c, s) in centroids.iter_mut().zip(sums) {
            let n = norm(&s);
            if n > 0.0 {
                *c = s.iter().map(|v| v / n).collect();
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = x.iter().zip(&assign).map(|(p, &j)| cos_dist(p, &centroids[j])).sum();
    Some((assign, inertia))
}

/// Cosine k-means with k-means++ seeding; the best of several restarts by
/// total distance to centroids.
pub fn kmeans_cosine(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::Eval("k-means needs k >= 2".into()));
    }
    if points.len() < k {
        return Err(Error::Eval(format!("{} points cannot form {k} clusters", points.len())));
    }
    let x = unit_rows(points)?;
    let distinct = x.iter().any(|p| cos_dist(p, &x[0]) > 1e-12);
    if !distinct {
        return Err(Error::Eval("all points are identical; clustering is degenerate".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..RESTARTS {
        let init = seed_centroids(&x, k, &mut rng);
        if let Some((assign, inertia)) = lloyd(&x, init) {
            if best.as_ref().map_or(true, |b| inertia < b.1) {
                best = Some((assign, inertia));
            }
        }
    }
    best.map(|b| b.0).ok_or_else(|| Error::Eval(format!("k-means left an empty cluster in all {RESTARTS} restarts")))
}

/// Mean silhouette coefficient under cosine distance; singleton clusters
/// score 0.
pub fn silhouette(points: &[Vec<f64>], assignment: &[usize]) -> Result<f64> {
    if points.len() != assignment.len() || points.is_empty() {
        return Err(Error::Eval("silhouette needs one assignment per point".into()));
    }
    let x = unit_rows(points)?;
    let k = assignment.iter().max().map_or(0, |m| m + 1);
    let mut total = 0.0;
    for i in 0..x.len() {
        let mut sum = vec![0.0; k];
        let mut cnt = vec![0usize; k];
        for j in 0..x.len() {
            if j != i {
                sum[assignment[j]] += cos_dist(&x[i], &x[j]);
                cnt[assignment[j]] += 1;
            }
        }
        let own = assignment[i];
        if cnt[own] == 0 {
            continue;
        }
        let a = sum[own] / cnt[own] as f64;
        let b =
            (0..k).filter(|&c| c != own && cnt[c] > 0).map(|c| sum[c] / cnt[c] as f64).fold(f64::INFINITY, f64::min);
        if b.is_finite() {
            let m = a.max(b);
            if m > 0.0 {
                total += (b - a) / m;
            }
        }
    }
    Ok(total / x.len() as f64)
}

/// Cluster every object's vector (temporal tables use the concatenation of
/// all slices) and score the result.
pub fn kmeans_silhouette(emb: &EmbeddingTable, k: usize, seed: u64) -> Result<Clustering> {
    let points: Vec<Vec<f64>> = (0..emb.n_objects()).map(|l| emb.concatenated(l)).collect();
    let assignment = kmeans_cosine(&points, k, seed)?;
    let silhouette = silhouette(&points, &assignment)?;
    Ok(Clustering { assignment, silhouette })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::rand_index;

    fn blobs() -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut pts = Vec::new();
        let mut truth = Vec::new();
        for c in 0..3 {
            for j in 0..5 {
                let mut p = vec![0.02 * j as f64; 3];
                p[c] = 1.0;
                pts.push(p);
                truth.push(c);
            }
        }
        (pts, truth)
    }

    #[test]
    fn orthogonal_blobs_separate() {
        let (pts, truth) = blobs();
        let a = kmeans_cosine(&pts, 3, 1).unwrap();
        assert_eq!(rand_index(&a, &truth).unwrap(), 1.0);
        assert!(silhouette(&pts, &a).unwrap() > 0.5);
    }

    #[test]
    fn identical_points_are_degenerate() {
        assert!(kmeans_cosine(&vec![vec![1.0, 2.0]; 4], 2, 0).is_err());
    }

    #[test]
    fn singletons_score_zero() {
        let pts = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let a = kmeans_cosine(&pts, 3, 0).unwrap();
        let mut sorted = a.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2]);
        assert_eq!(silhouette(&pts, &a).unwrap(), 0.0);
    }
}
