//! Random toy corpora for property and oracle tests.

#![allow(dead_code)]

use ctxembed::{Corpus, ObjectInstance};
use rand::Rng;

pub struct Toy {
    pub corpus: Corpus,
    /// `(label, frame, cx, cy)` exactly as fed to the corpus.
    pub raw: Vec<(usize, usize, f64, f64)>,
}

/// Every label in `0..n_labels` appears at least once; frames may repeat
/// labels or be empty.
pub fn random_corpus<R: Rng>(rng: &mut R, n_labels: usize, n_frames: usize, n_ts: usize) -> Toy {
    let mut raw = Vec::new();
    for l in 0..n_labels {
        raw.push((l, rng.gen_range(0..n_frames), rng.gen::<f64>(), rng.gen::<f64>()));
    }
    for f in 0..n_frames {
        for _ in 0..rng.gen_range(0..6) {
            raw.push((rng.gen_range(0..n_labels), f, rng.gen::<f64>(), rng.gen::<f64>()));
        }
    }
    // guarantee the last frame exists so the frame count is fixed
    raw.push((0, n_frames - 1, 0.5, 0.5));
    let labels = (0..n_labels).map(|l| format!("o{l}")).collect();
    let instances = raw.iter().map(|&(label, frame, cx, cy)| ObjectInstance { label, frame, cx, cy }).collect();
    let corpus = Corpus::from_instances(labels, instances, n_frames, n_ts).unwrap();
    Toy { corpus, raw }
}
