//! The ten objectives and their closed-form gradients.
//!
//! Every objective is a squared residual `(a·dist(x, y) − b)²` where `x`, `y`
//! are the reference and context vectors (a single slice, or the
//! kernel-weighted sum over all slices for the diffused objectives) and
//! `a`, `b` depend only on the target discrepancy and normalized
//! frequencies:
//!
//! | objective | vectors           | `a`         | `b`                      |
//! |-----------|-------------------|-------------|--------------------------|
//! | `t1s`     | static            | 1           | δ                        |
//! | `t1`      | slice `t_r`       | 1           | δ                        |
//! | `t2`      | diffused          | 1           | δ                        |
//! | `t3`      | diffused          | `N_r + N_c` | δ                        |
//! | `t4`      | diffused          | 1           | `(2 − N_r − N_c)·δ`      |
//! | `t5`      | diffused          | 1           | `(1 − φ_avg)·δ`          |
//! | `t6`      | diffused          | 1           | `(1 − φ_min)·δ`          |
//! | `t7`      | diffused          | 1           | `(1 − φ_min/2)·δ`        |
//! | `t8`      | diffused          | 1           | `2·ln(1.5/φ_min)·δ`      |
//! | `t9`      | diffused          | 1           | `ω_ln(φ_avg)·δ`          |
//!
//! Targets of `t4`, `t8` and `t9` can exceed 1 and are left unclamped.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{EmbeddingTable, TableKind};
use crate::context::TrainingPair;
use crate::corpus::{Corpus, LabelId};
use crate::error::{Error, Result};
use crate::scoring::{omega_ln, phi_avg, phi_min, DiffusionKernel, FrequencyNormalizer, FrequencyTable};

/// `1 − x·y / (‖x‖‖y‖)`.
pub fn cosine_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    cosine_similarity(x, y).map(|s| 1.0 - s)
}

pub fn cosine_similarity(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::Domain(format!("cosine needs equal nonzero lengths, got {} and {}", x.len(), y.len())));
    }
    let (nx, ny) = (norm(x), norm(y));
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::DegenerateVector("cosine of a zero vector".into()));
    }
    Ok(dot(x, y) / (nx * ny))
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Objective {
    #[serde(rename = "t1s")]
    T1S,
    #[serde(rename = "t1")]
    T1,
    #[serde(rename = "t2")]
    T2,
    #[serde(rename = "t3")]
    T3,
    #[serde(rename = "t4")]
    T4,
    #[serde(rename = "t5")]
    T5,
    #[serde(rename = "t6")]
    T6,
    #[serde(rename = "t7")]
    T7,
    #[serde(rename = "t8")]
    T8,
    #[serde(rename = "t9")]
    T9,
}

impl Objective {
    pub const ALL: [Objective; 10] = [
        Objective::T1S,
        Objective::T1,
        Objective::T2,
        Objective::T3,
        Objective::T4,
        Objective::T5,
        Objective::T6,
        Objective::T7,
        Objective::T8,
        Objective::T9,
    ];

    pub const TEMPORAL: [Objective; 9] = [
        Objective::T1,
        Objective::T2,
        Objective::T3,
        Objective::T4,
        Objective::T5,
        Objective::T6,
        Objective::T7,
        Objective::T8,
        Objective::T9,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Objective::T1S => "t1s",
            Objective::T1 => "t1",
            Objective::T2 => "t2",
            Objective::T3 => "t3",
            Objective::T4 => "t4",
            Objective::T5 => "t5",
            Objective::T6 => "t6",
            Objective::T7 => "t7",
            Objective::T8 => "t8",
            Objective::T9 => "t9",
        }
    }

    pub fn is_static(self) -> bool {
        self == Objective::T1S
    }

    /// Uses kernel-weighted sums over all timestamp slices.
    pub fn is_diffused(self) -> bool {
        !matches!(self, Objective::T1S | Objective::T1)
    }

    pub fn uses_frequency(self) -> bool {
        !matches!(self, Objective::T1S | Objective::T1 | Objective::T2)
    }

    pub fn table_kind(self) -> TableKind {
        if self.is_static() {
            TableKind::Static
        } else {
            TableKind::Temporal
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Objective::ALL
            .into_iter()
            .find(|o| o.id() == s)
            .ok_or_else(|| Error::Config(format!("unknown objective {s:?} (expected t1s, t1 .. t9)")))
    }
}

/// Gradient restricted to the slices a pair touches.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseGradient {
    entries: BTreeMap<(LabelId, usize), Vec<f64>>,
}

impl SparseGradient {
    pub fn get(&self, label: LabelId, t: usize) -> Option<&[f64]> {
        self.entries.get(&(label, t)).map(Vec::as_slice)
    }

    /// `(label, t, values)` in label/timestamp order.
    pub fn iter(&self) -> impl Iterator<Item = (LabelId, usize, &[f64])> + '_ {
        self.entries.iter().map(|(&(l, t), v)| (l, t, v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.values().flatten().all(|&v| v == 0.0)
    }

    fn add(&mut self, label: LabelId, t: usize, weight: f64, g: &[f64]) {
        let slot = self.entries.entry((label, t)).or_insert_with(|| vec![0.0; g.len()]);
        for (s, v) in slot.iter_mut().zip(g) {
            *s += weight * v;
        }
    }
}

/// Scratch buffers reused across pair evaluations.
#[derive(Debug, Default, Clone)]
pub(crate) struct Workspace {
    x: Vec<f64>,
    y: Vec<f64>,
    pub(crate) gx: Vec<f64>,
    pub(crate) gy: Vec<f64>,
}

/// Objective plus the precomputed scoring state it needs: temporal weights
/// `γ(t_r, ·)` for the diffused objectives and normalized frequencies for the
/// frequency-weighted ones.
#[derive(Debug, Clone)]
pub struct ObjectiveContext {
    objective: Objective,
    weights: Vec<Vec<f64>>,
    freq: Option<FrequencyTable>,
}

impl ObjectiveContext {
    /// Build from a corpus; `sigma_f = None` picks half the largest
    /// per-timestamp count.
    pub fn new(objective: Objective, corpus: &Corpus, sigma_t: f64, sigma_f: Option<f64>) -> Result<Self> {
        let kernel =
            if objective.is_diffused() { Some(DiffusionKernel::new(sigma_t, corpus.n_timestamps())?) } else { None };
        let freq = if objective.uses_frequency() {
            let normalizer = match sigma_f {
                Some(s) => FrequencyNormalizer::new(s, crate::scoring::DEFAULT_EPSILON)?,
                None => FrequencyNormalizer::for_corpus(corpus),
            };
            Some(normalizer.table(corpus)?)
        } else {
            None
        };
        Self::from_parts(objective, kernel, freq)
    }

    pub fn from_parts(
        objective: Objective,
        kernel: Option<DiffusionKernel>,
        freq: Option<FrequencyTable>,
    ) -> Result<Self> {
        let weights = match (objective.is_diffused(), kernel) {
            (true, Some(k)) => (0..k.n_timestamps).map(|t| k.weights(t)).collect(),
            (true, None) => return Err(Error::Config(format!("objective {objective} needs a diffusion kernel"))),
            (false, _) => Vec::new(),
        };
        if objective.uses_frequency() && freq.is_none() {
            return Err(Error::Config(format!("objective {objective} needs a frequency table")));
        }
        Ok(ObjectiveContext { objective, weights, freq })
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    /// Validate that a pair and table fit this objective.
    pub fn check(&self, pair: &TrainingPair, emb: &EmbeddingTable) -> Result<()> {
        let obj = self.objective;
        if emb.kind() != obj.table_kind() {
            return Err(Error::Config(format!("objective {obj} cannot train a {:?} table", emb.kind())));
        }
        if pair.reference >= emb.n_objects() || pair.context >= emb.n_objects() {
            return Err(Error::Index(format!(
                "pair ({}, {}) references a label outside the {} objects",
                pair.reference,
                pair.context,
                emb.n_objects()
            )));
        }
        match (obj.is_static(), pair.t_ref) {
            (true, Some(_)) => Err(Error::Config(format!("static objective {obj} applied to temporal pairs"))),
            (false, None) => Err(Error::Config(format!("temporal objective {obj} applied to static pairs"))),
            (false, Some(t)) if t >= emb.n_timestamps() => {
                Err(Error::Index(format!("pair timestamp {t} outside {} timestamps", emb.n_timestamps())))
            }
            _ => {
                if obj.is_diffused() && self.weights.len() != emb.n_timestamps() {
                    return Err(Error::Config("diffusion kernel and table disagree on |T|".into()));
                }
                if let Some(f) = &self.freq {
                    if f.n_timestamps() != emb.n_timestamps() || f.n_labels() < emb.n_objects() {
                        return Err(Error::Config("frequency table and embedding table disagree in shape".into()));
                    }
                }
                Ok(())
            }
        }
    }

    /// `(a, b)` of the residual `a·dist − b`.
    pub fn coefficients(&self, pair: &TrainingPair) -> Result<(f64, f64)> {
        let delta = pair.delta;
        let (nr, nc) = match (&self.freq, pair.t_ref) {
            (Some(f), Some(t)) => (f.get(pair.reference, t), f.get(pair.context, t)),
            _ => (0.0, 0.0),
        };
        Ok(match self.objective {
            Objective::T1S | Objective::T1 | Objective::T2 => (1.0, delta),
            Objective::T3 => (nr + nc, delta),
            Objective::T4 => (1.0, (2.0 - (nr + nc)) * delta),
            Objective::T5 => (1.0, (1.0 - phi_avg(nr, nc)) * delta),
            Objective::T6 => (1.0, (1.0 - phi_min(nr, nc)) * delta),
            Objective::T7 => (1.0, (1.0 - phi_min(nr, nc) / 2.0) * delta),
            Objective::T8 => {
                let m = phi_min(nr, nc);
                if m.is_nan() || m <= 0.0 {
                    return Err(Error::Domain(format!("t8 needs phi_min > 0, got {m}")));
                }
                (1.0, 2.0 * (1.5 / m).ln() * delta)
            }
            Objective::T9 => (1.0, omega_ln(phi_avg(nr, nc))? * delta),
        })
    }

    /// The (possibly diffused) reference and context vectors.
    fn fill(&self, pair: &TrainingPair, emb: &EmbeddingTable, x: &mut Vec<f64>, y: &mut Vec<f64>) {
        let dim = emb.dim();
        x.clear();
        y.clear();
        match self.objective {
            Objective::T1S => {
                x.extend_from_slice(emb.vector(pair.reference, 0));
                y.extend_from_slice(emb.vector(pair.context, 0));
            }
            Objective::T1 => {
                let t = pair.t_ref.unwrap_or(0);
                x.extend_from_slice(emb.vector(pair.reference, t));
                y.extend_from_slice(emb.vector(pair.context, t));
            }
            _ => {
                let w = &self.weights[pair.t_ref.unwrap_or(0)];
                x.resize(dim, 0.0);
                y.resize(dim, 0.0);
                diffuse_into(emb, pair.reference, w, x);
                diffuse_into(emb, pair.context, w, y);
            }
        }
    }

    /// Loss of one pair; when `grad` is set, also fills `ws.gx`, `ws.gy` with
    /// the derivative with respect to the (diffused) vectors.
    pub(crate) fn evaluate(
        &self,
        pair: &TrainingPair,
        emb: &EmbeddingTable,
        ws: &mut Workspace,
        grad: bool,
    ) -> Result<f64> {
        let mut x = std::mem::take(&mut ws.x);
        let mut y = std::mem::take(&mut ws.y);
        self.fill(pair, emb, &mut x, &mut y);
        let out = self.residual(pair, &x, &y, ws, grad);
        ws.x = x;
        ws.y = y;
        out
    }

    fn residual(&self, pair: &TrainingPair, x: &[f64], y: &[f64], ws: &mut Workspace, grad: bool) -> Result<f64> {
        let (a, b) = self.coefficients(pair)?;
        let (nx, ny) = (norm(x), norm(y));
        if nx == 0.0 || ny == 0.0 {
            return Err(Error::DegenerateVector(format!(
                "pair ({}, {}) has a zero embedding vector",
                pair.reference, pair.context
            )));
        }
        let nxy = nx * ny;
        let s = dot(x, y) / nxy;
        let r = a * (1.0 - s) - b;
        if grad {
            // d(dist)/dx = -(y/(|x||y|) - s·x/|x|²)
            let g = 2.0 * a * r;
            ws.gx.clear();
            ws.gy.clear();
            ws.gx.extend(x.iter().zip(y).map(|(xi, yi)| -g * (yi / nxy - s * xi / (nx * nx))));
            ws.gy.extend(x.iter().zip(y).map(|(xi, yi)| -g * (xi / nxy - s * yi / (ny * ny))));
        }
        Ok(r * r)
    }

    /// Push `scale · ∂L/∂(x, y)` back onto the table slices the pair touches.
    pub(crate) fn scatter(
        &self,
        pair: &TrainingPair,
        emb: &EmbeddingTable,
        ws: &Workspace,
        scale: f64,
        out: &mut [f64],
    ) {
        let dim = emb.dim();
        let mut add = |label: LabelId, t: usize, w: f64, g: &[f64]| {
            let o = emb.offset(label, t);
            for (slot, v) in out[o..o + dim].iter_mut().zip(g) {
                *slot += w * v;
            }
        };
        match self.objective {
            Objective::T1S => {
                add(pair.reference, 0, scale, &ws.gx);
                add(pair.context, 0, scale, &ws.gy);
            }
            Objective::T1 => {
                let t = pair.t_ref.unwrap_or(0);
                add(pair.reference, t, scale, &ws.gx);
                add(pair.context, t, scale, &ws.gy);
            }
            _ => {
                let w = &self.weights[pair.t_ref.unwrap_or(0)];
                for (t, &wt) in w.iter().enumerate() {
                    add(pair.reference, t, scale * wt, &ws.gx);
                    add(pair.context, t, scale * wt, &ws.gy);
                }
            }
        }
    }

    pub fn loss(&self, pair: &TrainingPair, emb: &EmbeddingTable) -> Result<f64> {
        self.check(pair, emb)?;
        self.evaluate(pair, emb, &mut Workspace::default(), false)
    }

    /// Sum of per-pair losses.
    pub fn total_loss(&self, pairs: &[TrainingPair], emb: &EmbeddingTable) -> Result<f64> {
        let mut ws = Workspace::default();
        let mut total = 0.0;
        for p in pairs {
            self.check(p, emb)?;
            total += self.evaluate(p, emb, &mut ws, false)?;
        }
        Ok(total)
    }

    /// Exact gradient of one pair's loss over every entry it touches.
    pub fn gradient(&self, pair: &TrainingPair, emb: &EmbeddingTable) -> Result<SparseGradient> {
        self.check(pair, emb)?;
        let mut ws = Workspace::default();
        self.evaluate(pair, emb, &mut ws, true)?;
        let mut g = SparseGradient::default();
        match self.objective {
            Objective::T1S => {
                g.add(pair.reference, 0, 1.0, &ws.gx);
                g.add(pair.context, 0, 1.0, &ws.gy);
            }
            Objective::T1 => {
                let t = pair.t_ref.unwrap_or(0);
                g.add(pair.reference, t, 1.0, &ws.gx);
                g.add(pair.context, t, 1.0, &ws.gy);
            }
            _ => {
                let w = &self.weights[pair.t_ref.unwrap_or(0)];
                for (t, &wt) in w.iter().enumerate() {
                    g.add(pair.reference, t, wt, &ws.gx);
                    g.add(pair.context, t, wt, &ws.gy);
                }
            }
        }
        Ok(g)
    }
}

/// `Σ_t w[t] · e_label^t` into `out`.
fn diffuse_into(emb: &EmbeddingTable, label: LabelId, w: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (t, &wt) in w.iter().enumerate() {
        for (o, v) in out.iter_mut().zip(emb.vector(label, t)) {
            *o += wt * v;
        }
    }
}

/// Kernel-weighted sum of an object's vectors across all timestamps.
pub fn diffused_vector(emb: &EmbeddingTable, label: LabelId, t_r: usize, kernel: &DiffusionKernel) -> Result<Vec<f64>> {
    if !emb.is_temporal() {
        return Err(Error::Config("diffused vectors need a temporal table".into()));
    }
    if label >= emb.n_objects() || t_r >= emb.n_timestamps() {
        return Err(Error::Index(format!("({label}, {t_r}) out of range")));
    }
    if kernel.n_timestamps != emb.n_timestamps() {
        return Err(Error::Config("kernel and table disagree on |T|".into()));
    }
    let mut out = vec![0.0; emb.dim()];
    diffuse_into(emb, label, &kernel.weights(t_r), &mut out);
    Ok(out)
}
