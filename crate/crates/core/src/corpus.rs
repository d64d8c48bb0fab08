//! Annotation ingestion, timestamp partitioning and per-timestamp frequency tables.
//!
//! Annotation files are line-delimited JSON, one detected object per line:
//!
//! ```text
//! {"label":"chair","frame":0,"x":320,"y":240,"w":640,"h":480}
//! {"label":"desk","frame":0,"cx":0.25,"cy":0.75}
//! ```
//!
//! Pixel centers are normalized by the frame dimensions so every instance
//! lives in the unit square; records that already carry `cx`/`cy` are taken
//! as-is. Labels are re-indexed densely in order of first appearance.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense object-label index, `0..n_labels`.
pub type LabelId = usize;

/// One detected object occurrence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub label: LabelId,
    pub frame: usize,
    /// Horizontal center, normalized to `[0, 1]`.
    pub cx: f64,
    /// Vertical center, normalized to `[0, 1]`.
    pub cy: f64,
}

/// A raw annotation record as it appears in an annotation file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub label: String,
    pub frame: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cy: Option<f64>,
}

impl AnnotationRecord {
    /// Record with coordinates already normalized to the unit square.
    pub fn normalized(label: impl Into<String>, frame: usize, cx: f64, cy: f64) -> Self {
        AnnotationRecord { label: label.into(), frame, x: None, y: None, w: None, h: None, cx: Some(cx), cy: Some(cy) }
    }

    /// Record in pixel coordinates with the frame dimensions.
    pub fn pixels(label: impl Into<String>, frame: usize, x: f64, y: f64, w: f64, h: f64) -> Self {
        AnnotationRecord {
            label: label.into(),
            frame,
            x: Some(x),
            y: Some(y),
            w: Some(w),
            h: Some(h),
            cx: None,
            cy: None,
        }
    }

    fn unit_center(&self, line: usize) -> Result<(f64, f64)> {
        let reject = |reason: String| Error::Rejected { line, label: self.label.clone(), frame: self.frame, reason };
        match (self.w, self.h) {
            (Some(w), Some(h)) => {
                let (x, y) = match (self.x, self.y) {
                    (Some(x), Some(y)) => (x, y),
                    _ => return Err(Error::Parse { line, message: "record has w/h but is missing x or y".into() }),
                };
                if !(w.is_finite() && h.is_finite() && w > 0.0 && h > 0.0) {
                    return Err(reject(format!("invalid frame dimensions {w}x{h}")));
                }
                if !(x.is_finite() && y.is_finite()) || x < 0.0 || y < 0.0 || x > w || y > h {
                    return Err(reject(format!("center ({x}, {y}) outside frame {w}x{h}")));
                }
                Ok((x / w, y / h))
            }
            (None, None) => match (self.cx, self.cy) {
                (Some(cx), Some(cy)) => {
                    if !(cx.is_finite() && cy.is_finite()) || !(0.0..=1.0).contains(&cx) || !(0.0..=1.0).contains(&cy) {
                        return Err(reject(format!("normalized center ({cx}, {cy}) outside unit square")));
                    }
                    Ok((cx, cy))
                }
                _ => Err(Error::Parse { line, message: "record needs x,y,w,h or cx,cy".into() }),
            },
            _ => Err(Error::Parse { line, message: "record has only one of w/h".into() }),
        }
    }
}

/// Write records as line-delimited JSON.
pub fn write_annotations<W: Write>(records: &[AnnotationRecord], mut out: W) -> Result<()> {
    for rec in records {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Timestamp index of `frame` when each timestamp holds `frames_per_timestamp` frames.
pub fn partition_of(frame: usize, frames_per_timestamp: usize) -> usize {
    frame / frames_per_timestamp
}

/// Indexed frames, timestamp partition and per-label per-timestamp counts.
///
/// Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    frames: Vec<Vec<ObjectInstance>>,
    labels: Vec<String>,
    label_index: HashMap<String, LabelId>,
    n_timestamps: usize,
    frames_per_timestamp: usize,
    /// `freq[label][t]`
    freq: Vec<Vec<u32>>,
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    labels: Vec<String>,
    n_frames: usize,
    n_timestamps: usize,
    frames_per_timestamp: usize,
    /// `[label, frame, cx, cy]` rows in frame-major order.
    instances: Vec<(LabelId, usize, f64, f64)>,
}

impl Corpus {
    /// Build a corpus from already-indexed instances.
    ///
    /// `n_frames` may exceed the largest referenced frame (trailing empty
    /// frames are legal). Every label in the table must occur at least once.
    pub fn from_instances(
        labels: Vec<String>,
        instances: Vec<ObjectInstance>,
        n_frames: usize,
        n_timestamps: usize,
    ) -> Result<Self> {
        if instances.is_empty() {
            return Err(Error::Empty);
        }
        if n_timestamps == 0 {
            return Err(Error::Config("n_timestamps must be positive".into()));
        }
        if n_timestamps > n_frames {
            return Err(Error::Config(format!(
                "n_timestamps ({n_timestamps}) exceeds the number of frames ({n_frames})"
            )));
        }
        let frames_per_timestamp = n_frames.div_ceil(n_timestamps);
        let mut frames = vec![Vec::new(); n_frames];
        let mut freq = vec![vec![0u32; n_timestamps]; labels.len()];
        for inst in instances {
            if inst.label >= labels.len() {
                return Err(Error::Index(format!("label {} not in label table", inst.label)));
            }
            if inst.frame >= n_frames {
                return Err(Error::Index(format!("frame {} >= {n_frames}", inst.frame)));
            }
            if !(0.0..=1.0).contains(&inst.cx) || !(0.0..=1.0).contains(&inst.cy) {
                return Err(Error::Domain(format!(
                    "instance of label {} in frame {} has center ({}, {}) outside the unit square",
                    inst.label, inst.frame, inst.cx, inst.cy
                )));
            }
            freq[inst.label][partition_of(inst.frame, frames_per_timestamp)] += 1;
            frames[inst.frame].push(inst);
        }
        if let Some(k) = freq.iter().position(|row| row.iter().all(|&c| c == 0)) {
            return Err(Error::DegenerateFrequency(k));
        }
        let label_index = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        Ok(Corpus { frames, labels, label_index, n_timestamps, frames_per_timestamp, freq })
    }

    /// Parse line-delimited annotation records.
    pub fn from_records<I>(records: I, n_timestamps: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, AnnotationRecord)>,
    {
        let mut labels: Vec<String> = Vec::new();
        let mut index: HashMap<String, LabelId> = HashMap::new();
        let mut instances = Vec::new();
        let mut n_frames = 0;
        for (line, rec) in records {
            let (cx, cy) = rec.unit_center(line)?;
            let label = match index.get(&rec.label) {
                Some(&id) => id,
                None => {
                    let id = labels.len();
                    labels.push(rec.label.clone());
                    index.insert(rec.label.clone(), id);
                    id
                }
            };
            n_frames = n_frames.max(rec.frame + 1);
            instances.push(ObjectInstance { label, frame: rec.frame, cx, cy });
        }
        if instances.is_empty() {
            return Err(Error::Empty);
        }
        Self::from_instances(labels, instances, n_frames, n_timestamps)
    }

    /// Build from in-memory records, numbered from line 1 in error reports.
    pub fn from_annotations(records: &[AnnotationRecord], n_timestamps: usize) -> Result<Self> {
        Self::from_records(records.iter().cloned().enumerate().map(|(i, r)| (i + 1, r)), n_timestamps)
    }

    /// Parse annotation text (one JSON object per line; blank lines ignored).
    pub fn ingest_str(text: &str, n_timestamps: usize) -> Result<Self> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if let Some(rec) = parse_line(line, i + 1)? {
                records.push((i + 1, rec));
            }
        }
        Self::from_records(records, n_timestamps)
    }

    /// Read an annotation file from disk.
    pub fn ingest(path: impl AsRef<Path>, n_timestamps: usize) -> Result<Self> {
        let reader = BufReader::new(fs::File::open(path.as_ref())?);
        let mut records = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if let Some(rec) = parse_line(&line, i + 1)? {
                records.push((i + 1, rec));
            }
        }
        Self::from_records(records, n_timestamps)
    }

    /// Serialize to the single-document JSON snapshot format.
    pub fn to_snapshot_json(&self) -> Result<String> {
        let snap = Snapshot {
            labels: self.labels.clone(),
            n_frames: self.frames.len(),
            n_timestamps: self.n_timestamps,
            frames_per_timestamp: self.frames_per_timestamp,
            instances: self.instances().map(|i| (i.label, i.frame, i.cx, i.cy)).collect(),
        };
        Ok(serde_json::to_string(&snap)?)
    }

    pub fn from_snapshot_json(text: &str) -> Result<Self> {
        let snap: Snapshot = serde_json::from_str(text)?;
        let corpus = Self::from_instances(
            snap.labels,
            snap.instances.into_iter().map(|(label, frame, cx, cy)| ObjectInstance { label, frame, cx, cy }).collect(),
            snap.n_frames,
            snap.n_timestamps,
        )?;
        if corpus.frames_per_timestamp != snap.frames_per_timestamp {
            return Err(Error::Config(format!(
                "snapshot frames_per_timestamp {} disagrees with derived {}",
                snap.frames_per_timestamp, corpus.frames_per_timestamp
            )));
        }
        Ok(corpus)
    }

    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn n_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn n_timestamps(&self) -> usize {
        self.n_timestamps
    }

    pub fn frames_per_timestamp(&self) -> usize {
        self.frames_per_timestamp
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_name(&self, label: LabelId) -> &str {
        &self.labels[label]
    }

    pub fn label_id(&self, name: &str) -> Option<LabelId> {
        self.label_index.get(name).copied()
    }

    pub fn frames(&self) -> &[Vec<ObjectInstance>] {
        &self.frames
    }

    pub fn frame(&self, frame: usize) -> &[ObjectInstance] {
        &self.frames[frame]
    }

    /// All instances in frame-major order.
    pub fn instances(&self) -> impl Iterator<Item = &ObjectInstance> + '_ {
        self.frames.iter().flatten()
    }

    pub fn instance_count(&self) -> usize {
        self.frames.iter().map(Vec::len).sum()
    }

    pub fn timestamp_of(&self, frame: usize) -> usize {
        partition_of(frame, self.frames_per_timestamp)
    }

    /// Frame indices belonging to timestamp `t` (the last one may be short).
    pub fn timestamp_frames(&self, t: usize) -> Range<usize> {
        let start = (t * self.frames_per_timestamp).min(self.frames.len());
        let end = ((t + 1) * self.frames_per_timestamp).min(self.frames.len());
        start..end
    }

    /// `f(o_k, t)`: number of instances of `label` in timestamp `t`.
    pub fn frequency(&self, label: LabelId, t: usize) -> Result<u32> {
        self.check_label(label)?;
        self.check_timestamp(t)?;
        Ok(self.freq[label][t])
    }

    /// `f(o_k)`: number of instances of `label` across the whole video.
    pub fn total_frequency(&self, label: LabelId) -> u32 {
        self.freq[label].iter().sum()
    }

    /// Row-major `[label][t]` frequency table.
    pub fn freq_table(&self) -> &[Vec<u32>] {
        &self.freq
    }

    /// Largest single per-timestamp count in the table.
    pub fn max_frequency(&self) -> u32 {
        self.freq.iter().flatten().copied().max().unwrap_or(0)
    }

    /// Whether `label` occurs anywhere in timestamp `t`.
    pub fn present_in_timestamp(&self, label: LabelId, t: usize) -> bool {
        self.freq[label][t] > 0
    }

    /// Membership mask of the labels occurring in `frames`.
    pub fn label_mask(&self, frames: Range<usize>) -> Vec<bool> {
        let mut mask = vec![false; self.labels.len()];
        for f in frames {
            for inst in &self.frames[f] {
                mask[inst.label] = true;
            }
        }
        mask
    }

    pub(crate) fn check_label(&self, label: LabelId) -> Result<()> {
        if label >= self.labels.len() {
            return Err(Error::Index(format!("label {label} out of range (n_labels = {})", self.labels.len())));
        }
        Ok(())
    }

    pub(crate) fn check_timestamp(&self, t: usize) -> Result<()> {
        if t >= self.n_timestamps {
            return Err(Error::Index(format!("timestamp {t} out of range (n_timestamps = {})", self.n_timestamps)));
        }
        Ok(())
    }
}

fn parse_line(line: &str, number: usize) -> Result<Option<AnnotationRecord>> {
    let trimmed = line.trim();
    if trimmed.is_empty() {
        return Ok(None);
    }
    serde_json::from_str(trimmed).map(Some).map_err(|e| Error::Parse { line: number, message: e.to_string() })
}
