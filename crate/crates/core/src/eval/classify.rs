//! Scene-class prediction from concatenated temporal embeddings with a
//! nearest-centroid classifier.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embed::objective::{dot, norm};
use crate::embed::EmbeddingTable;
use crate::error::{Error, Result};

const SPLIT_RETRIES: u64 = 20;

fn unit(v: Vec<f64>) -> Result<Vec<f64>> {
    let n = norm(&v);
    if n == 0.0 {
        return Err(Error::DegenerateVector("cannot classify a zero feature vector".into()));
    }
    Ok(v.into_iter().map(|x| x / n).collect())
}

/// Test accuracy of nearest-centroid classification (cosine) on a seeded
/// split. `classes[label]` is `None` for objects left out.
pub fn classify_contexts(
    emb: &EmbeddingTable,
    classes: &[Option<usize>],
    split_seed: u64,
    train_fraction: f64,
) -> Result<f64> {
    if !emb.is_temporal() {
        return Err(Error::Eval("classification uses temporal embeddings".into()));
    }
    if classes.len() != emb.n_objects() {
        return Err(Error::Eval(format!("{} classes for {} objects", classes.len(), emb.n_objects())));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Eval(format!("train_fraction must lie in (0, 1), got {train_fraction}")));
    }
    let items: Vec<(Vec<f64>, usize)> = classes
        .iter()
        .enumerate()
        .filter_map(|(l, c)| c.map(|c| (l, c)))
        .map(|(l, c)| unit(emb.concatenated(l)).map(|f| (f, c)))
        .collect::<Result<_>>()?;
    let n_classes = items.iter().map(|i| i.1).max().map_or(0, |m| m + 1);
    let present: Vec<usize> = (0..n_classes).filter(|c| items.iter().any(|i| i.1 == *c)).collect();
    if present.len() < 2 {
        return Err(Error::Eval("classification needs at least 2 classes".into()));
    }
    let n_train = ((items.len() as f64 * train_fraction).round() as usize).clamp(1, items.len() - 1);

    for attempt in 0..SPLIT_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(split_seed.wrapping_add(attempt));
        let mut order: Vec<usize> = (0..items.len()).collect();
        order.shuffle(&mut rng);
        let (train, test) = order.split_at(n_train);
        let dim = items[0].0.len();
        let mut centroids = vec![vec![0.0; dim]; n_classes];
        let mut seen = vec![false; n_classes];
        for &i in train {
            let (f, c) = &items[i];
            seen[*c] = true;
            for (s, v) in centroids[*c].iter_mut().zip(f) {
                *s += v;
            }
        }
        if present.iter().any(|&c| !seen[c]) {
            continue;
        }
        let correct = test
            .iter()
            .filter(|&&i| {
                let (f, c) = &items[i];
                let best = present
                    .iter()
                    .copied()
                    .map(|k| (k, dot(f, &centroids[k]) / norm(&centroids[k]).max(f64::MIN_POSITIVE)))
                    .fold((usize::MAX, f64::NEG_INFINITY), |b, x| if x.1 > b.1 { x } else { b });
                best.0 == *c
            })
            .count();
        return Ok(correct as f64 / test.len() as f64);
    }
    Err(Error::Eval(format!("no split in {SPLIT_RETRIES} attempts put every class in the training set")))
}

/// Mean accuracy over `n_perm` random relabelings of the same objects.
pub fn permutation_baseline(
    emb: &EmbeddingTable,
    classes: &[Option<usize>],
    split_seed: u64,
    train_fraction: f64,
    n_perm: usize,
    perm_seed: u64,
) -> Result<f64> {
    if n_perm == 0 {
        return Err(Error::Eval("permutation baseline needs at least one permutation".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(perm_seed);
    let idx: Vec<usize> = (0..classes.len()).filter(|&l| classes[l].is_some()).collect();
    let mut total = 0.0;
    for _ in 0..n_perm {
        let mut shuffled: Vec<Option<usize>> = idx.iter().map(|&l| classes[l]).collect();
        shuffled.shuffle(&mut rng);
        let mut permuted = classes.to_vec();
        for (&l, c) in idx.iter().zip(shuffled) {
            permuted[l] = c;
        }
        total += classify_contexts(emb, &permuted, split_seed, train_fraction)?;
    }
    Ok(total / n_perm as f64)
}
