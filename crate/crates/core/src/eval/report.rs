//! CSV and JSON serialization of metric outputs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::PcaRow;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitRow {
    pub objective: String,
    pub k: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub pair: String,
    pub t: usize,
    pub similarity: f64,
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Eval(e.to_string()))
}

/// `objective,k,value`
pub fn hit_at_k_csv(rows: &[HitRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["objective", "k", "value"])?;
    for r in rows {
        w.serialize((&r.objective, r.k, r.value))?;
    }
    finish(w)
}

/// `pair,t,similarity`
pub fn series_csv(rows: &[SeriesRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["pair", "t", "similarity"])?;
    for r in rows {
        w.serialize((&r.pair, r.t, r.similarity))?;
    }
    finish(w)
}

/// `label,t,x,y` with label names and an empty `t` for static rows.
pub fn pca_csv(rows: &[PcaRow], labels: &[String]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["label", "t", "x", "y"])?;
    for r in rows {
        let name = labels.get(r.label).ok_or_else(|| Error::Index(format!("label {} has no name", r.label)))?;
        let t = r.t.map(|t| t.to_string()).unwrap_or_default();
        w.serialize((name, t, r.x, r.y))?;
    }
    finish(w)
}

/// Run manifest: configuration echo, seeds and a metric summary.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub metrics: BTreeMap<String, serde_json::Value>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_headers_and_rows() {
        let hit = hit_at_k_csv(&[HitRow { objective: "t1".into(), k: 3, value: 0.5 }]).unwrap();
        assert_eq!(hit, "objective,k,value\nt1,3,0.5\n");
        let pca = pca_csv(&[PcaRow { label: 0, t: None, x: 1.0, y: -2.0 }], &["car".into()]).unwrap();
        assert_eq!(pca, "label,t,x,y\ncar,,1.0,-2.0\n");
    }
}
