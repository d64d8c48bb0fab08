use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{EmbeddingTable, Objective, TableKind};
use crate::error::{Error, Result};

pub const FORMAT: &str = "ctxembed-embedding";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingHeader {
    pub format: String,
    pub version: u32,
    pub kind: TableKind,
    pub n_objects: usize,
    pub n_timestamps: usize,
    pub dim: usize,
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<Objective>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Free-form echo of the producing configuration.
    #[serde(default)]
    pub config: serde_json::Value,
}

/// A table with its label names and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingFile {
    pub header: EmbeddingHeader,
    pub table: EmbeddingTable,
}

#[derive(Serialize, Deserialize)]
struct Document {
    header: EmbeddingHeader,
    /// Little-endian f64 values, object-major, base64.
    data: String,
}

impl EmbeddingFile {
    pub fn new(table: EmbeddingTable, labels: Vec<String>) -> Result<Self> {
        if labels.len() != table.n_objects() {
            return Err(Error::Config(format!("{} labels for a table of {} objects", labels.len(), table.n_objects())));
        }
        let header = EmbeddingHeader {
            format: FORMAT.into(),
            version: VERSION,
            kind: table.kind(),
            n_objects: table.n_objects(),
            n_timestamps: table.n_timestamps(),
            dim: table.dim(),
            labels,
            objective: None,
            seed: None,
            config: serde_json::Value::Null,
        };
        Ok(EmbeddingFile { header, table })
    }

    pub fn with_provenance(mut self, objective: Objective, seed: u64, config: serde_json::Value) -> Self {
        self.header.objective = Some(objective);
        self.header.seed = Some(seed);
        self.header.config = config;
        self
    }

    pub fn labels(&self) -> &[String] {
        &self.header.labels
    }

    pub fn label_id(&self, name: &str) -> Option<usize> {
        self.header.labels.iter().position(|l| l == name)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut bytes = Vec::with_capacity(self.table.data().len() * 8);
        for v in self.table.data() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let doc = Document { header: self.header.clone(), data: STANDARD.encode(bytes) };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::parse(text, Path::new("<memory>"))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&std::fs::read_to_string(path)?, path)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::write_atomic(path.as_ref(), self.to_json()?.as_bytes())
    }

    fn parse(text: &str, path: &Path) -> Result<Self> {
        let fail = |message: String| Error::Format { path: path.to_path_buf(), message };
        let doc: Document = serde_json::from_str(text).map_err(|e| fail(e.to_string()))?;
        let h = doc.header;
        if h.format != FORMAT {
            return Err(fail(format!("unexpected format tag {:?}", h.format)));
        }
        if h.version != VERSION {
            return Err(fail(format!("unsupported version {}", h.version)));
        }
        if h.labels.len() != h.n_objects {
            return Err(fail(format!("{} labels for {} objects", h.labels.len(), h.n_objects)));
        }
        let bytes = STANDARD.decode(doc.data.as_bytes()).map_err(|e| fail(e.to_string()))?;
        let expected = h.n_objects * h.n_timestamps * h.dim;
        if bytes.len() != expected * 8 {
            return Err(fail(format!(
                "expected {expected} values for {}x{}x{}, found {} bytes",
                h.n_objects,
                h.n_timestamps,
                h.dim,
                bytes.len()
            )));
        }
        let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
        let table = EmbeddingTable::from_data(h.kind, h.n_objects, h.n_timestamps, h.dim, data)
            .map_err(|e| fail(e.to_string()))?;
        Ok(EmbeddingFile { header: h, table })
    }
}
