//! Seeded generators for the synthetic benchmark scenarios.
//!
//! * `grid5x5`: 12 of the 62 symbols per frame on a 5×5 grid, each of the
//!   three symbol sets (digits, upper case, lower case) filling one 2×2 block.
//! * `seq4`: frames step through a fixed cycle of 4-symbol blocks.
//! * `school-event`: one camera facing a school, with a person of interest
//!   involved in an event at timestamp 3 and reappearing at 7.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::corpus::AnnotationRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "grid5x5")]
    Grid5x5,
    #[serde(rename = "seq4")]
    Seq4,
    #[serde(rename = "school-event")]
    SchoolEvent,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Grid5x5 => "grid5x5",
            Scenario::Seq4 => "seq4",
            Scenario::SchoolEvent => "school-event",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "grid5x5" | "grid" => Ok(Scenario::Grid5x5),
            "seq4" | "seq" => Ok(Scenario::Seq4),
            "school-event" | "school" => Ok(Scenario::SchoolEvent),
            other => Err(Error::Config(format!("unknown scenario {other:?} (expected grid5x5, seq4 or school-event)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub n_frames: usize,
    pub seed: u64,
    /// Only used by the school scenario.
    pub n_timestamps: usize,
}

/// Annotation records plus the scenario's ground truth document.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub records: Vec<AnnotationRecord>,
    pub ground_truth: serde_json::Value,
}

pub fn generate(spec: &ScenarioSpec) -> Result<Generated> {
    match spec.scenario {
        Scenario::Grid5x5 => gen_grid5x5(spec.n_frames, spec.seed),
        Scenario::Seq4 => gen_seq4(spec.n_frames, spec.seed),
        Scenario::SchoolEvent => gen_school_event(spec.n_frames, spec.n_timestamps, spec.seed),
    }
}

pub const SET_NAMES: [&str; 3] = ["digits", "upper", "lower"];

/// The three symbol sets: `0-9`, `A-Z`, `a-z`.
pub fn symbol_sets() -> [Vec<String>; 3] {
    [
        ('0'..='9').map(String::from).collect(),
        ('A'..='Z').map(String::from).collect(),
        ('a'..='z').map(String::from).collect(),
    ]
}

/// Index into [`SET_NAMES`] of a single-character symbol.
pub fn symbol_set(label: &str) -> Option<usize> {
    let mut chars = label.chars();
    let c = chars.next()?;
    if chars.next().is_some() {
        return None;
    }
    if c.is_ascii_digit() {
        Some(0)
    } else if c.is_ascii_uppercase() {
        Some(1)
    } else if c.is_ascii_lowercase() {
        Some(2)
    } else {
        None
    }
}

fn check_frames(n_frames: usize) -> Result<()> {
    if n_frames == 0 {
        Err(Error::Config("a scenario needs at least one frame".into()))
    } else {
        Ok(())
    }
}

fn jitter<R: Rng>(rng: &mut R, v: f64, amount: f64) -> f64 {
    (v + rng.gen_range(-amount..=amount)).clamp(0.0, 1.0)
}

const GRID_CELL: f64 = 0.2;

/// Top-left cells of the four corner 2×2 blocks of the 5×5 grid.
const GRID_CORNERS: [(usize, usize); 4] = [(0, 0), (0, 3), (3, 0), (3, 3)];

pub fn gen_grid5x5(n_frames: usize, seed: u64) -> Result<Generated> {
    check_frames(n_frames)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sets = symbol_sets();
    let mut records = Vec::with_capacity(n_frames * 12);
    for frame in 0..n_frames {
        let mut corners = GRID_CORNERS.to_vec();
        corners.shuffle(&mut rng);
        for (set, &(row, col)) in sets.iter().zip(&corners) {
            let symbols: Vec<&String> = set.choose_multiple(&mut rng, 4).collect();
            for (i, sym) in symbols.into_iter().enumerate() {
                let (r, c) = (row + i / 2, col + i % 2);
                let cx = jitter(&mut rng, (c as f64 + 0.5) * GRID_CELL, 0.05 * GRID_CELL);
                let cy = jitter(&mut rng, (r as f64 + 0.5) * GRID_CELL, 0.05 * GRID_CELL);
                records.push(AnnotationRecord::normalized(sym.as_str(), frame, cx, cy));
            }
        }
    }
    let classes: Vec<_> =
        SET_NAMES.iter().zip(&sets).map(|(name, labels)| json!({ "name": name, "labels": labels })).collect();
    Ok(Generated {
        records,
        ground_truth: json!({
            "scenario": Scenario::Grid5x5.as_str(),
            "n_frames": n_frames,
            "seed": seed,
            "classes": classes,
        }),
    })
}

/// The seq4 block cycle: each symbol set cut into consecutive 4-blocks with a
/// shorter trailing block (digits 4+4+2, each alphabet 6×4+2), 17 blocks.
pub fn seq4_blocks() -> Vec<Vec<String>> {
    symbol_sets().iter().flat_map(|set| set.chunks(4).map(<[String]>::to_vec).collect::<Vec<_>>()).collect()
}

const SEQ_CELL: f64 = 0.1;

pub fn gen_seq4(n_frames: usize, seed: u64) -> Result<Generated> {
    check_frames(n_frames)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks = seq4_blocks();
    // 2×2 slots of width SEQ_CELL around the frame center
    let slots = [(0.45, 0.45), (0.55, 0.45), (0.45, 0.55), (0.55, 0.55)];
    let mut records = Vec::new();
    for frame in 0..n_frames {
        let block = &blocks[frame % blocks.len()];
        let mut order: Vec<usize> = (0..slots.len()).collect();
        order.shuffle(&mut rng);
        for (sym, &slot) in block.iter().zip(&order) {
            let (x, y) = slots[slot];
            let cx = jitter(&mut rng, x, 0.05 * SEQ_CELL);
            let cy = jitter(&mut rng, y, 0.05 * SEQ_CELL);
            records.push(AnnotationRecord::normalized(sym.as_str(), frame, cx, cy));
        }
    }
    Ok(Generated {
        records,
        ground_truth: json!({
            "scenario": Scenario::Seq4.as_str(),
            "n_frames": n_frames,
            "seed": seed,
            "blocks": blocks,
        }),
    })
}

pub const SCHOOL: &str = "school";
pub const STUDENT: &str = "student";
pub const PERSON_OF_INTEREST: &str = "person-of-interest";
pub const MALICIOUS_EVENT: &str = "malicious-event";
pub const POLICE: &str = "police";

/// Timestamp of the event and of the person of interest's reappearance.
pub const EVENT_TIMESTAMP: usize = 3;
pub const REAPPEAR_TIMESTAMP: usize = 7;

/// `(label, x, y, probability when busy, probability when quiet)`
type Template = &'static [(&'static str, f64, f64, f64, f64)];

/// The camera's view of the school and the street in front of it.
const SCHOOL_VIEW: Template = &[
    (SCHOOL, 0.5, 0.15, 1.0, 1.0),
    ("building", 0.85, 0.15, 1.0, 1.0),
    ("flag-pole", 0.35, 0.15, 1.0, 1.0),
    ("tree", 0.1, 0.25, 0.9, 0.9),
    ("lamp-post", 0.65, 0.3, 0.9, 0.9),
    ("bench", 0.9, 0.45, 0.8, 0.8),
    ("trash-can", 0.05, 0.5, 0.8, 0.8),
    ("traffic-light", 0.95, 0.7, 0.9, 0.9),
    ("teacher", 0.5, 0.32, 0.7, 0.5),
    (STUDENT, 0.4, 0.45, 0.9, 0.6),
    (STUDENT, 0.6, 0.45, 0.8, 0.5),
    ("bicycle", 0.25, 0.55, 0.5, 0.3),
    ("bus", 0.2, 0.72, 0.7, 0.3),
    ("crossing-guard", 0.7, 0.72, 0.7, 0.3),
    ("office-worker", 0.88, 0.33, 0.4, 0.6),
    ("pedestrian", 0.75, 0.55, 0.5, 0.7),
    ("dog", 0.7, 0.62, 0.3, 0.5),
    ("car", 0.5, 0.85, 0.6, 0.6),
    ("taxi", 0.8, 0.85, 0.4, 0.5),
    ("truck", 0.1, 0.9, 0.3, 0.4),
];

/// Where the person of interest is occasionally seen away from the school.
const POI_ELSEWHERE: (f64, f64, f64) = (0.95, 0.95, 0.15);

/// Arrival and dismissal: the first two and last two timestamps.
fn busy(t: usize, n_timestamps: usize) -> bool {
    t < 2 || t + 2 >= n_timestamps
}

const SCHOOL_JITTER: f64 = 0.03;

struct Scene<'a> {
    frame: usize,
    records: &'a mut Vec<AnnotationRecord>,
}

impl Scene<'_> {
    fn put<R: Rng>(&mut self, rng: &mut R, label: &str, x: f64, y: f64) {
        let cx = jitter(rng, x, SCHOOL_JITTER);
        let cy = jitter(rng, y, SCHOOL_JITTER);
        self.records.push(AnnotationRecord::normalized(label, self.frame, cx, cy));
    }

    fn template<R: Rng>(&mut self, rng: &mut R, template: Template, busy: bool) {
        for &(label, x, y, p_busy, p_quiet) in template {
            if rng.gen_bool(if busy { p_busy } else { p_quiet }) {
                self.put(rng, label, x, y);
            }
        }
    }
}

/// A school viewed over `n_timestamps ≥ 8` timestamps, busier at the start
/// and end, with:
/// * the person of interest occasionally at the far corner of the street,
///   never near the school, outside timestamps 3 and 7;
/// * timestamp 3: the person of interest and the event within 0.1 of each
///   other in front of the school, among students, in every frame;
/// * timestamp 4: police and a police car at the school;
/// * timestamp 7: the person of interest back at the school with a van in
///   alternate frames, never sharing a frame with a student.
pub fn gen_school_event(n_frames: usize, n_timestamps: usize, seed: u64) -> Result<Generated> {
    check_frames(n_frames)?;
    if n_timestamps < 8 {
        return Err(Error::Config(format!("the school scenario needs at least 8 timestamps, got {n_timestamps}")));
    }
    if n_timestamps > n_frames {
        return Err(Error::Config(format!("{n_timestamps} timestamps cannot be cut from {n_frames} frames")));
    }
    let n_f = n_frames.div_ceil(n_timestamps);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    for frame in 0..n_frames {
        let t = frame / n_f;
        let mut scene = Scene { frame, records: &mut records };
        let busy = busy(t, n_timestamps);
        match t {
            EVENT_TIMESTAMP => {
                scene.template(&mut rng, SCHOOL_VIEW, busy);
                scene.put(&mut rng, PERSON_OF_INTEREST, 0.3, 0.55);
                scene.put(&mut rng, MALICIOUS_EVENT, 0.36, 0.58);
            }
            4 if frame % 2 == 0 => {
                scene.template(&mut rng, SCHOOL_VIEW, busy);
                scene.put(&mut rng, POLICE, 0.3, 0.6);
                scene.put(&mut rng, "police-car", 0.2, 0.8);
            }
            REAPPEAR_TIMESTAMP if frame % 2 == 0 => {
                scene.put(&mut rng, SCHOOL, 0.5, 0.2);
                scene.put(&mut rng, PERSON_OF_INTEREST, 0.35, 0.5);
                scene.put(&mut rng, "van", 0.2, 0.7);
            }
            REAPPEAR_TIMESTAMP => scene.template(&mut rng, SCHOOL_VIEW, busy),
            _ => {
                scene.template(&mut rng, SCHOOL_VIEW, busy);
                let (x, y, p) = POI_ELSEWHERE;
                if rng.gen_bool(p) {
                    scene.put(&mut rng, PERSON_OF_INTEREST, x, y);
                }
            }
        }
    }

    let mut freq: BTreeMap<String, Vec<u32>> = BTreeMap::new();
    for r in &records {
        freq.entry(r.label.clone()).or_insert_with(|| vec![0; n_timestamps])[r.frame / n_f] += 1;
    }
    Ok(Generated {
        records,
        ground_truth: json!({
            "scenario": Scenario::SchoolEvent.as_str(),
            "n_frames": n_frames,
            "n_timestamps": n_timestamps,
            "frames_per_timestamp": n_f,
            "seed": seed,
            "event_timestamp": EVENT_TIMESTAMP,
            "reappear_timestamp": REAPPEAR_TIMESTAMP,
            "frequency": freq,
        }),
    })
}
