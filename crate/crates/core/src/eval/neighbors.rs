use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, LabelId};
use crate::embed::{cosine_similarity, EmbeddingTable};
use crate::error::{Error, Result};
use crate::scoring::spatial_distance;

/// Ranked neighbors of one query. For embedding neighbors the score is
/// cosine similarity (nonincreasing); for base neighbors it is mean spatial
/// distance (nondecreasing).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborList {
    pub query: LabelId,
    pub t: Option<usize>,
    pub neighbors: Vec<(LabelId, f64)>,
}

impl NeighborList {
    pub fn labels(&self) -> Vec<LabelId> {
        self.neighbors.iter().map(|&(l, _)| l).collect()
    }
}

/// Top `k` labels by cosine similarity to `query` (slice `t` of a temporal
/// table). Ties break toward the lower label id.
pub fn nearest_neighbors(emb: &EmbeddingTable, query: LabelId, t: Option<usize>, k: usize) -> Result<NeighborList> {
    if k == 0 {
        return Err(Error::Eval("k must be at least 1".into()));
    }
    let q = emb.lookup(query, t)?;
    let mut scored = Vec::with_capacity(emb.n_objects().saturating_sub(1));
    for other in 0..emb.n_objects() {
        if other != query {
            scored.push((other, cosine_similarity(q, emb.lookup(other, t)?)?));
        }
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(NeighborList { query, t, neighbors: scored })
}

/// Labels ranked by ascending mean distance to `query` over same-frame
/// co-occurrences in timestamp `t`; labels that never share a frame with
/// `query` there are left out.
pub fn base_neighbors(corpus: &Corpus, query: LabelId, t: usize, k: usize) -> Result<NeighborList> {
    corpus.check_label(query)?;
    corpus.check_timestamp(t)?;
    if !corpus.present_in_timestamp(query, t) {
        return Err(Error::Eval(format!("{} does not occur in timestamp {t}", corpus.label_name(query))));
    }
    let mut sum = vec![0.0; corpus.n_labels()];
    let mut count = vec![0usize; corpus.n_labels()];
    for f in corpus.timestamp_frames(t) {
        let frame = corpus.frame(f);
        for q in frame.iter().filter(|i| i.label == query) {
            for c in frame.iter().filter(|i| i.label != query) {
                sum[c.label] += spatial_distance(q, c);
                count[c.label] += 1;
            }
        }
    }
    let mut ranked: Vec<(LabelId, f64)> =
        (0..corpus.n_labels()).filter(|&l| count[l] > 0).map(|l| (l, sum[l] / count[l] as f64)).collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    ranked.truncate(k);
    Ok(NeighborList { query, t: Some(t), neighbors: ranked })
}

/// Every `(label, t)` where the label occurs.
pub fn default_sample(corpus: &Corpus) -> Vec<(LabelId, usize)> {
    (0..corpus.n_labels())
        .flat_map(|l| (0..corpus.n_timestamps()).map(move |t| (l, t)))
        .filter(|&(l, t)| corpus.present_in_timestamp(l, t))
        .collect()
}

/// Mean of `|base ∩ embedding top-k| / k` over the sample. Static tables
/// compare their single vector against each timestamp's base neighbors.
pub fn hit_at_k(emb: &EmbeddingTable, corpus: &Corpus, k: usize, sample: &[(LabelId, usize)]) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::Eval("hit@k sample is empty".into()));
    }
    let t_of = |t: usize| emb.is_temporal().then_some(t);
    let mut total = 0.0;
    for &(label, t) in sample {
        let base = base_neighbors(corpus, label, t, k)?.labels();
        let found = nearest_neighbors(emb, label, t_of(t), k)?.labels();
        let hits = found.iter().filter(|l| base.contains(l)).count();
        total += hits as f64 / k as f64;
    }
    Ok(total / sample.len() as f64)
}

/// Mean over labels of the share of their `k` nearest neighbors that carry
/// the same category. `categories[label]` must cover every object.
pub fn clustering_consistency(emb: &EmbeddingTable, categories: &[usize], k: usize, t: Option<usize>) -> Result<f64> {
    if categories.len() != emb.n_objects() {
        return Err(Error::Eval(format!("{} categories for {} objects", categories.len(), emb.n_objects())));
    }
    if emb.n_objects() < 2 {
        return Err(Error::Eval("clustering consistency needs at least 2 objects".into()));
    }
    let mut total = 0.0;
    for label in 0..emb.n_objects() {
        let nn = nearest_neighbors(emb, label, t, k)?;
        let same = nn.neighbors.iter().filter(|&&(l, _)| categories[l] == categories[label]).count();
        total += same as f64 / nn.neighbors.len() as f64;
    }
    Ok(total / emb.n_objects() as f64)
}
