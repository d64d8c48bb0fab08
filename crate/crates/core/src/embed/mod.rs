//! Embedding tables and their training.
//!
//! A static table holds one `dim`-vector per object; a temporal table holds
//! one per object per timestamp, laid out object-major so all slices of an
//! object are contiguous. Training treats the table as the hidden layer of a
//! one-hot-input network and minimizes the chosen objective directly.

mod io;
pub(crate) mod objective;
mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::LabelId;
use crate::error::{Error, Result};

pub use io::{EmbeddingFile, EmbeddingHeader};
pub use objective::{cosine_distance, cosine_similarity, diffused_vector, Objective, ObjectiveContext, SparseGradient};
pub use train::{train, Optimizer, TrainConfig, TrainOutput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    Static,
    Temporal,
}

/// Dense embedding table, `n_objects × n_timestamps × dim` (static tables
/// have a single timestamp slice).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    kind: TableKind,
    n_objects: usize,
    n_timestamps: usize,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingTable {
    /// `|O| × |e|` table initialized uniformly in `[0, 1)`.
    pub fn new_static(n_objects: usize, dim: usize, seed: u64) -> Self {
        Self::init(TableKind::Static, n_objects, 1, dim, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// `|O| × |T| × |e|` table initialized uniformly in `[0, 1)`.
    pub fn new_temporal(n_objects: usize, n_timestamps: usize, dim: usize, seed: u64) -> Self {
        Self::init(TableKind::Temporal, n_objects, n_timestamps, dim, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub(crate) fn init<R: Rng>(
        kind: TableKind,
        n_objects: usize,
        n_timestamps: usize,
        dim: usize,
        rng: &mut R,
    ) -> Self {
        let data = (0..n_objects * n_timestamps * dim).map(|_| rng.gen::<f64>()).collect();
        EmbeddingTable { kind, n_objects, n_timestamps, dim, data }
    }

    /// Wrap existing values; validates the shape and finiteness.
    pub fn from_data(
        kind: TableKind,
        n_objects: usize,
        n_timestamps: usize,
        dim: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 || n_objects == 0 || n_timestamps == 0 {
            return Err(Error::Config("embedding table dimensions must be positive".into()));
        }
        if kind == TableKind::Static && n_timestamps != 1 {
            return Err(Error::Config("static tables have exactly one timestamp slice".into()));
        }
        if data.len() != n_objects * n_timestamps * dim {
            return Err(Error::Config(format!(
                "expected {} values for {n_objects}x{n_timestamps}x{dim}, found {}",
                n_objects * n_timestamps * dim,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("embedding table contains non-finite values".into()));
        }
        Ok(EmbeddingTable { kind, n_objects, n_timestamps, dim, data })
    }

    pub fn kind(&self) -> TableKind {
        self.kind
    }

    pub fn is_temporal(&self) -> bool {
        self.kind == TableKind::Temporal
    }

    pub fn n_objects(&self) -> usize {
        self.n_objects
    }

    pub fn n_timestamps(&self) -> usize {
        self.n_timestamps
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub(crate) fn offset(&self, label: LabelId, t: usize) -> usize {
        (label * self.n_timestamps + t) * self.dim
    }

    /// Vector of `label` at slice `t` (use `t = 0` for static tables).
    pub fn vector(&self, label: LabelId, t: usize) -> &[f64] {
        let o = self.offset(label, t);
        &self.data[o..o + self.dim]
    }

    pub fn vector_mut(&mut self, label: LabelId, t: usize) -> &mut [f64] {
        let o = self.offset(label, t);
        let dim = self.dim;
        &mut self.data[o..o + dim]
    }

    /// All slices of `label`, contiguous.
    pub fn object_block(&self, label: LabelId) -> &[f64] {
        let o = self.offset(label, 0);
        &self.data[o..o + self.n_timestamps * self.dim]
    }

    /// Vector for an optional timestamp: static tables ignore `t`, temporal
    /// tables require it.
    pub fn lookup(&self, label: LabelId, t: Option<usize>) -> Result<&[f64]> {
        if label >= self.n_objects {
            return Err(Error::Index(format!("label {label} out of range ({} objects)", self.n_objects)));
        }
        match (self.kind, t) {
            (TableKind::Static, _) => Ok(self.vector(label, 0)),
            (TableKind::Temporal, Some(t)) if t < self.n_timestamps => Ok(self.vector(label, t)),
            (TableKind::Temporal, Some(t)) => {
                Err(Error::Index(format!("timestamp {t} out of range ({} timestamps)", self.n_timestamps)))
            }
            (TableKind::Temporal, None) => Err(Error::Config("temporal table lookups need a timestamp".into())),
        }
    }

    /// Per-object concatenation of every timestamp slice.
    pub fn concatenated(&self, label: LabelId) -> Vec<f64> {
        self.object_block(label).to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_seeded_and_in_unit_interval() {
        let a = EmbeddingTable::new_temporal(3, 4, 5, 9);
        let b = EmbeddingTable::new_temporal(3, 4, 5, 9);
        assert_eq!(a, b);
        assert!(a.data().iter().all(|v| (0.0..1.0).contains(v)));
        assert_ne!(a, EmbeddingTable::new_temporal(3, 4, 5, 10));
    }

    #[test]
    fn layout_is_object_major() {
        let t = EmbeddingTable::from_data(TableKind::Temporal, 2, 2, 2, (0..8).map(f64::from).collect()).unwrap();
        assert_eq!(t.vector(0, 1), &[2.0, 3.0]);
        assert_eq!(t.vector(1, 0), &[4.0, 5.0]);
        assert_eq!(t.object_block(1), &[4.0, 5.0, 6.0, 7.0]);
        assert!(t.lookup(0, None).is_err());
        assert!(t.lookup(0, Some(2)).is_err());
        assert!(t.lookup(2, Some(0)).is_err());
    }

    #[test]
    fn from_data_validates() {
        assert!(EmbeddingTable::from_data(TableKind::Static, 2, 1, 2, vec![0.0; 3]).is_err());
        assert!(EmbeddingTable::from_data(TableKind::Static, 2, 2, 1, vec![0.0; 4]).is_err());
        assert!(EmbeddingTable::from_data(TableKind::Static, 1, 1, 2, vec![0.0, f64::NAN]).is_err());
    }
}
