use std::fmt::Write;

use crate::corpus::LabelId;
use crate::embed::{cosine_similarity, EmbeddingTable};
use crate::error::{Error, Result};

/// Opening sentence of the narrative prompt.
pub const NARRATIVE_HEADER: &str =
    "A security camera captured the following object pairs at different time, can you summarize the video:";

fn require_temporal(emb: &EmbeddingTable) -> Result<()> {
    if emb.is_temporal() {
        Ok(())
    } else {
        Err(Error::Eval("this metric needs a temporal embedding".into()))
    }
}

/// Cosine similarity of `a` and `b` at each timestamp.
pub fn similarity_series(emb: &EmbeddingTable, a: LabelId, b: LabelId) -> Result<Vec<f64>> {
    require_temporal(emb)?;
    (0..emb.n_timestamps()).map(|t| cosine_similarity(emb.lookup(a, Some(t))?, emb.lookup(b, Some(t))?)).collect()
}

/// The `m` most similar unordered label pairs at `t`, as `(a, b, sim)` with
/// `a < b`; ties break lexicographically on `(a, b)`.
pub fn top_pairs(emb: &EmbeddingTable, t: usize, m: usize) -> Result<Vec<(LabelId, LabelId, f64)>> {
    require_temporal(emb)?;
    if t >= emb.n_timestamps() {
        return Err(Error::Index(format!("timestamp {t} out of range ({})", emb.n_timestamps())));
    }
    let n = emb.n_objects();
    let mut all = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            all.push((a, b, cosine_similarity(emb.vector(a, t), emb.vector(b, t))?));
        }
    }
    all.sort_by(|x, y| y.2.total_cmp(&x.2).then((x.0, x.1).cmp(&(y.0, y.1))));
    all.truncate(m);
    Ok(all)
}

/// Prompt text listing the top `m_per_t` pairs of each timestamp, one
/// `Time t:` line per timestamp (0-based).
pub fn narrative_prompt(emb: &EmbeddingTable, labels: &[String], m_per_t: usize) -> Result<String> {
    require_temporal(emb)?;
    if labels.len() != emb.n_objects() {
        return Err(Error::Eval(format!("{} labels for {} objects", labels.len(), emb.n_objects())));
    }
    let mut out = String::from(NARRATIVE_HEADER);
    out.push('\n');
    if m_per_t == 0 {
        log::warn!("narrative prompt with zero pairs per timestamp has only a header");
        return Ok(out);
    }
    for t in 0..emb.n_timestamps() {
        let pairs: Vec<String> = top_pairs(emb, t, m_per_t)?
            .into_iter()
            .map(|(a, b, _)| format!("({}, {})", labels[a], labels[b]))
            .collect();
        writeln!(out, "Time {t}: {}", pairs.join(", ")).expect("writing to a String");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::TableKind;

    fn two_by_two() -> EmbeddingTable {
        // objects a, b, c over 2 timestamps; a and c coincide at t=1
        EmbeddingTable::from_data(
            TableKind::Temporal,
            3,
            2,
            2,
            vec![1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.5, 0.5, 2.0, 2.0],
        )
        .unwrap()
    }

    #[test]
    fn series_examples() {
        let emb = two_by_two();
        assert!(similarity_series(&emb, 0, 0).unwrap().iter().all(|v| (v - 1.0).abs() < 1e-15));
        let s = similarity_series(&emb, 0, 1).unwrap();
        assert!(s[0].abs() < 1e-15);
        assert!(matches!(similarity_series(&EmbeddingTable::new_static(2, 2, 0), 0, 1), Err(Error::Eval(_))));
    }

    #[test]
    fn duplicate_vectors_rank_first() {
        let top = top_pairs(&two_by_two(), 1, 1).unwrap();
        assert_eq!((top[0].0, top[0].1), (0, 2));
        assert!((top[0].2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn prompt_structure() {
        let labels: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let text = narrative_prompt(&two_by_two(), &labels, 1).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], NARRATIVE_HEADER);
        assert_eq!(lines[2], "Time 1: (a, c)");
        assert_eq!(narrative_prompt(&two_by_two(), &labels, 0).unwrap().lines().count(), 1);
    }
}
