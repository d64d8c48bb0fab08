//! Reference/context pair generation.
//!
//! Three context windows are supported:
//!
//! * [`Mechanism::SameFrame`]: every other-label instance in the reference frame.
//! * [`Mechanism::SurroundingFrames`]: instances in frames `r-w_f ..= r+w_f`
//!   whose label does not occur in the reference frame.
//! * [`Mechanism::NeighborTimestamps`]: instances in timestamps
//!   `t-w_t ..= t+w_t` (excluding `t`) whose label does not occur anywhere in
//!   the reference timestamp; the discrepancy is damped by `1 - γ`.
//!
//! Negative pairs are drawn with probability proportional to how often a
//! label occurs outside the reference's context window.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, LabelId};
use crate::error::{Error, Result};
use crate::scoring::{DiffusionKernel, DiscrepancyScorer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mechanism {
    SameFrame,
    SurroundingFrames,
    NeighborTimestamps,
}

impl Mechanism {
    pub fn as_str(self) -> &'static str {
        match self {
            Mechanism::SameFrame => "same-frame",
            Mechanism::SurroundingFrames => "surrounding-frames",
            Mechanism::NeighborTimestamps => "neighbor-timestamps",
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "same-frame" | "frame" | "1" => Ok(Mechanism::SameFrame),
            "surrounding-frames" | "surrounding" | "2" => Ok(Mechanism::SurroundingFrames),
            "neighbor-timestamps" | "timestamps" | "3" => Ok(Mechanism::NeighborTimestamps),
            other => Err(Error::Config(format!("unknown context mechanism {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextConfig {
    pub mechanisms: Vec<Mechanism>,
    /// Frame-window radius for surrounding-frame contexts.
    pub w_f: usize,
    /// Timestamp-window radius for neighbor-timestamp contexts.
    pub w_t: usize,
    pub negatives_per_positive: usize,
    /// Damp cross-frame discrepancies by `1 - γ` at frame granularity.
    pub frame_diffusion: bool,
}

impl Default for ContextConfig {
    fn default() -> Self {
        ContextConfig {
            mechanisms: vec![Mechanism::SameFrame],
            w_f: 1,
            w_t: 1,
            negatives_per_positive: 0,
            frame_diffusion: true,
        }
    }
}

impl ContextConfig {
    pub fn uses(&self, m: Mechanism) -> bool {
        self.mechanisms.contains(&m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mechanisms.is_empty() {
            return Err(Error::Config("at least one context mechanism is required".into()));
        }
        if self.uses(Mechanism::SurroundingFrames) && self.w_f == 0 {
            return Err(Error::Config("surrounding-frames context requires w_f >= 1".into()));
        }
        if self.uses(Mechanism::NeighborTimestamps) && self.w_t == 0 {
            return Err(Error::Config("neighbor-timestamps context requires w_t >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairKind {
    Positive,
    Negative,
}

impl PairKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PairKind::Positive => "positive",
            PairKind::Negative => "negative",
        }
    }
}

/// One row of training data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub reference: LabelId,
    pub context: LabelId,
    /// Reference timestamp; `None` for static training data.
    pub t_ref: Option<usize>,
    /// Target cosine distance, in `[0, 1]`.
    pub delta: f64,
    pub kind: PairKind,
    /// Reference frame the pair was drawn from. Kept in memory only, so
    /// static negative sampling can exclude the reference's frame window.
    #[serde(skip)]
    pub frame: Option<usize>,
}

impl TrainingPair {
    pub fn positive(reference: LabelId, context: LabelId, t_ref: Option<usize>, delta: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&delta));
        TrainingPair { reference, context, t_ref, delta, kind: PairKind::Positive, frame: None }
    }

    pub fn negative(reference: LabelId, context: LabelId, t_ref: Option<usize>) -> Self {
        TrainingPair { reference, context, t_ref, delta: 1.0, kind: PairKind::Negative, frame: None }
    }

    fn at_frame(mut self, frame: usize) -> Self {
        self.frame = Some(frame);
        self
    }
}

/// Context 1: ordered pairs of distinct-label instances sharing a frame.
///
/// Pairs carry the timestamp of their frame; see [`strip_timestamps`].
pub fn pairs_same_frame(corpus: &Corpus, scorer: &DiscrepancyScorer) -> Vec<TrainingPair> {
    let mut out = Vec::new();
    for (f, frame) in corpus.frames().iter().enumerate() {
        let t = corpus.timestamp_of(f);
        for r in frame {
            for c in frame {
                if r.label != c.label {
                    out.push(TrainingPair::positive(r.label, c.label, Some(t), scorer.score(r, c)).at_frame(f));
                }
            }
        }
    }
    out
}

/// Context 2: reference instances against instances in the surrounding frames.
///
/// When `frame_kernel` is given, each discrepancy is damped by `1 - γ(r, r')`
/// evaluated at frame granularity.
pub fn pairs_surrounding_frames(
    corpus: &Corpus,
    w_f: usize,
    scorer: &DiscrepancyScorer,
    frame_kernel: Option<&DiffusionKernel>,
) -> Vec<TrainingPair> {
    let mut out = Vec::new();
    if w_f == 0 {
        return out;
    }
    let n_frames = corpus.n_frames();
    for r in 0..n_frames {
        let refs = corpus.frame(r);
        if refs.is_empty() {
            continue;
        }
        let in_ref = corpus.label_mask(r..r + 1);
        let t = corpus.timestamp_of(r);
        let lo = r.saturating_sub(w_f);
        let hi = (r + w_f).min(n_frames - 1);
        for o_r in refs {
            for f in (lo..=hi).filter(|&f| f != r) {
                for o_c in corpus.frame(f).iter().filter(|c| !in_ref[c.label]) {
                    let mut delta = scorer.score(o_r, o_c);
                    if let Some(k) = frame_kernel {
                        delta = k.damp(delta, r, f);
                    }
                    out.push(TrainingPair::positive(o_r.label, o_c.label, Some(t), delta).at_frame(r));
                }
            }
        }
    }
    out
}

/// Context 3: reference instances against instances of neighboring timestamps
/// whose label is absent from the whole reference timestamp.
pub fn pairs_neighbor_timestamps(
    corpus: &Corpus,
    w_t: usize,
    scorer: &DiscrepancyScorer,
    kernel: &DiffusionKernel,
) -> Vec<TrainingPair> {
    let mut out = Vec::new();
    if w_t == 0 {
        return out;
    }
    let n_ts = corpus.n_timestamps();
    for t_r in 0..n_ts {
        let in_ref = corpus.label_mask(corpus.timestamp_frames(t_r));
        let lo = t_r.saturating_sub(w_t);
        let hi = (t_r + w_t).min(n_ts - 1);
        // candidates outside t_r, grouped by their timestamp
        let candidates: Vec<(usize, Vec<_>)> = (lo..=hi)
            .filter(|&t| t != t_r)
            .map(|t_c| {
                let insts: Vec<_> = corpus
                    .timestamp_frames(t_c)
                    .flat_map(|f| corpus.frame(f).iter())
                    .filter(|c| !in_ref[c.label])
                    .copied()
                    .collect();
                (t_c, insts)
            })
            .collect();
        if candidates.iter().all(|(_, c)| c.is_empty()) {
            continue;
        }
        for f in corpus.timestamp_frames(t_r) {
            for o_r in corpus.frame(f) {
                for (t_c, insts) in &candidates {
                    for o_c in insts {
                        let delta = kernel.damp(scorer.score(o_r, o_c), t_r, *t_c);
                        out.push(TrainingPair::positive(o_r.label, o_c.label, Some(t_r), delta).at_frame(f));
                    }
                }
            }
        }
    }
    out
}

/// Drop reference timestamps, turning pairs into static training data.
pub fn strip_timestamps(pairs: &mut [TrainingPair]) {
    for p in pairs {
        p.t_ref = None;
    }
}

/// Drawable labels for one window and reference, with their sampler.
type Candidates = (Vec<LabelId>, WeightedIndex<f64>);

/// Which window a negative must come from outside of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Window {
    Timestamp(usize),
    Frames(usize),
    Unknown,
}

/// Append `n_neg` frequency-weighted negatives after every positive.
///
/// Temporal pairs (with `t_ref`) draw label `i` with probability
/// proportional to `f(o_i) - f(o_i, t_ref)` among labels absent from the
/// reference timestamp. Static pairs draw proportionally to `f(o_i)` among
/// labels absent from frames `frame - w_f ..= frame + w_f`. Deterministic for
/// a given seed.
pub fn negative_samples(
    corpus: &Corpus,
    positives: &[TrainingPair],
    n_neg: usize,
    w_f: usize,
    seed: u64,
) -> Vec<TrainingPair> {
    if n_neg == 0 {
        return positives.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cache: HashMap<(Window, LabelId), Option<Candidates>> = HashMap::new();
    let mut starved = 0usize;
    let mut out = Vec::with_capacity(positives.len() * (1 + n_neg));
    for pos in positives {
        out.push(*pos);
        let window = match (pos.t_ref, pos.frame) {
            (Some(t), _) => Window::Timestamp(t),
            (None, Some(f)) => Window::Frames(f),
            (None, None) => Window::Unknown,
        };
        let dist = cache
            .entry((window, pos.reference))
            .or_insert_with(|| candidate_distribution(corpus, window, pos.reference, w_f));
        match dist {
            Some((labels, weights)) => {
                for _ in 0..n_neg {
                    let ctx = labels[weights.sample(&mut rng)];
                    out.push(TrainingPair {
                        frame: pos.frame,
                        ..TrainingPair::negative(pos.reference, ctx, pos.t_ref)
                    });
                }
            }
            None => starved += 1,
        }
    }
    if starved > 0 {
        log::info!("{starved} positive pairs had no negative candidates outside their context window");
    }
    out
}

/// Candidate labels and weights for one window; `None` when all weights are zero.
fn candidate_distribution(
    corpus: &Corpus,
    window: Window,
    reference: LabelId,
    w_f: usize,
) -> Option<(Vec<LabelId>, WeightedIndex<f64>)> {
    let excluded = match window {
        Window::Timestamp(t) => corpus.label_mask(corpus.timestamp_frames(t)),
        Window::Frames(f) => {
            let lo = f.saturating_sub(w_f);
            let hi = (f + w_f + 1).min(corpus.n_frames());
            corpus.label_mask(lo..hi)
        }
        Window::Unknown => vec![false; corpus.n_labels()],
    };
    let mut labels = Vec::new();
    let mut weights = Vec::new();
    for (label, &skip) in excluded.iter().enumerate() {
        if label == reference || skip {
            continue;
        }
        let total = corpus.total_frequency(label) as f64;
        let inside = match window {
            Window::Timestamp(t) => corpus.freq_table()[label][t] as f64,
            _ => 0.0,
        };
        let w = total - inside;
        if w > 0.0 {
            labels.push(label);
            weights.push(w);
        }
    }
    if labels.is_empty() {
        return None;
    }
    WeightedIndex::new(&weights).ok().map(|idx| (labels, idx))
}

/// Everything needed to turn a corpus into a training pair list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairConfig {
    pub context: ContextConfig,
    pub scorer: DiscrepancyScorer,
    pub sigma_t: f64,
    /// Emit temporal pairs (with `t_ref`) rather than static ones.
    pub temporal: bool,
    pub seed: u64,
}

impl Default for PairConfig {
    fn default() -> Self {
        PairConfig {
            context: ContextConfig::default(),
            scorer: DiscrepancyScorer::default(),
            sigma_t: crate::scoring::DEFAULT_SIGMA_T,
            temporal: false,
            seed: 0,
        }
    }
}

/// Positive pairs from every configured mechanism followed by negatives,
/// concatenated in frame-major order per mechanism.
pub fn generate_pairs(corpus: &Corpus, cfg: &PairConfig) -> Result<Vec<TrainingPair>> {
    cfg.context.validate()?;
    let ctx = &cfg.context;
    if ctx.uses(Mechanism::NeighborTimestamps) {
        if !cfg.temporal {
            return Err(Error::Config("neighbor-timestamps context only applies to temporal pairs".into()));
        }
        if corpus.n_timestamps() < 2 {
            return Err(Error::Config("neighbor-timestamps context needs at least 2 timestamps".into()));
        }
    }
    let mut pairs = Vec::new();
    if ctx.uses(Mechanism::SameFrame) {
        pairs.extend(pairs_same_frame(corpus, &cfg.scorer));
    }
    if ctx.uses(Mechanism::SurroundingFrames) {
        let frame_kernel =
            if ctx.frame_diffusion { Some(DiffusionKernel::new(cfg.sigma_t, corpus.n_frames())?) } else { None };
        pairs.extend(pairs_surrounding_frames(corpus, ctx.w_f, &cfg.scorer, frame_kernel.as_ref()));
    }
    if ctx.uses(Mechanism::NeighborTimestamps) {
        let kernel = DiffusionKernel::new(cfg.sigma_t, corpus.n_timestamps())?;
        pairs.extend(pairs_neighbor_timestamps(corpus, ctx.w_t, &cfg.scorer, &kernel));
    }
    if !cfg.temporal {
        strip_timestamps(&mut pairs);
    }
    let w_f = if ctx.uses(Mechanism::SurroundingFrames) { ctx.w_f } else { 0 };
    Ok(negative_samples(corpus, &pairs, ctx.negatives_per_positive, w_f, cfg.seed))
}

/// Write pairs as CSV with header `ref,ctx,t_ref,delta,kind` (`t_ref = -1` when absent).
pub fn write_pairs<W: Write>(pairs: &[TrainingPair], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ref", "ctx", "t_ref", "delta", "kind"])?;
    for p in pairs {
        let t = p.t_ref.map_or_else(|| "-1".to_string(), |t| t.to_string());
        w.write_record([
            p.reference.to_string(),
            p.context.to_string(),
            t,
            p.delta.to_string(),
            p.kind.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_pairs<R: Read>(input: R) -> Result<Vec<TrainingPair>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["ref", "ctx", "t_ref", "delta", "kind"] {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header ref,ctx,t_ref,delta,kind, found {:?}", headers),
        });
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let bad = |message: String| Error::Parse { line, message };
        if row.len() != 5 {
            return Err(bad(format!("expected 5 fields, found {}", row.len())));
        }
        let reference: LabelId = row[0].parse().map_err(|e| bad(format!("ref: {e}")))?;
        let context: LabelId = row[1].parse().map_err(|e| bad(format!("ctx: {e}")))?;
        let t: i64 = row[2].parse().map_err(|e| bad(format!("t_ref: {e}")))?;
        let t_ref = match t {
            -1 => None,
            t if t >= 0 => Some(t as usize),
            t => return Err(bad(format!("t_ref must be -1 or nonnegative, found {t}"))),
        };
        let delta: f64 = row[3].parse().map_err(|e| bad(format!("delta: {e}")))?;
        if !(0.0..=1.0).contains(&delta) {
            return Err(bad(format!("delta {delta} outside [0, 1]")));
        }
        let kind = match &row[4] {
            "positive" => PairKind::Positive,
            "negative" => PairKind::Negative,
            other => return Err(bad(format!("unknown kind {other:?}"))),
        };
        if kind == PairKind::Negative && delta != 1.0 {
            return Err(bad("negative pair must have delta = 1".into()));
        }
        out.push(TrainingPair { reference, context, t_ref, delta, kind, frame: None });
    }
    Ok(out)
}
