//! Context-aware object embeddings learned from annotated video.
//!
//! The pipeline runs corpus → training pairs → embedding table → metrics:
//!
//! * [`corpus`] ingests per-frame object annotations and partitions frames
//!   into timestamps.
//! * [`context`] extracts reference/context pairs under three window
//!   mechanisms, plus frequency-weighted negatives.
//! * [`scoring`] holds the scalar math: discrepancy scores, temporal weights
//!   and frequency normalization.
//! * [`embed`] trains static or temporal tables against ten objectives.
//! * [`eval`] provides neighbor, clustering, series, PCA and classification
//!   metrics.
//! * [`synth`] generates the synthetic benchmark scenarios.

pub mod config;
pub mod context;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod eval;
pub mod scoring;
pub mod synth;

use std::io::Write;
use std::path::Path;

pub use context::{PairKind, TrainingPair};
pub use corpus::{AnnotationRecord, Corpus, LabelId, ObjectInstance};
pub use embed::{EmbeddingFile, EmbeddingTable, Objective, TableKind};
pub use error::{Error, Result};
pub use scoring::{DiffusionKernel, DiscrepancyScorer, FrequencyNormalizer, ScoreMethod};

/// Write `bytes` to `path` via a temporary sibling and rename, so readers
/// never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
