//! Scalar scoring: spatial distance, discrepancy normalizations, temporal
//! Gaussian weights and frequency normalization.
//!
//! Everything here is a pure function of its inputs.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, LabelId, ObjectInstance};
use crate::error::{Error, Result};

pub const DEFAULT_D_THETA: f64 = 0.3;
pub const DEFAULT_SIGMA_D: f64 = 0.25;
pub const DEFAULT_SIGMA_T: f64 = 1.0;
pub const DEFAULT_EPSILON: f64 = 0.01;

/// Largest distance between two points of the unit square.
pub const MAX_DISTANCE: f64 = SQRT_2;

/// Euclidean distance between normalized instance centers, in `[0, √2]`.
pub fn spatial_distance(a: &ObjectInstance, b: &ObjectInstance) -> f64 {
    (a.cx - b.cx).hypot(a.cy - b.cy)
}

/// 0 when closer than `d_theta`, 1 otherwise.
pub fn score_threshold(d: f64, d_theta: f64) -> f64 {
    if d < d_theta {
        0.0
    } else {
        1.0
    }
}

/// Distance scaled by the unit-square diagonal.
pub fn score_minmax(d: f64) -> Result<f64> {
    // allow rounding noise from hypot on the exact diagonal
    if !(0.0..=MAX_DISTANCE * (1.0 + 1e-12)).contains(&d) {
        return Err(Error::Domain(format!("distance {d} outside [0, sqrt(2)]")));
    }
    Ok((d / MAX_DISTANCE).min(1.0))
}

/// One minus the peak-normalized Gaussian density of `d`.
pub fn score_gaussian(d: f64, sigma_d: f64) -> f64 {
    1.0 - (-(d * d) / (2.0 * sigma_d * sigma_d)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreMethod {
    Threshold,
    MinMax,
    GaussianDecay,
}

impl ScoreMethod {
    pub const ALL: [ScoreMethod; 3] = [ScoreMethod::Threshold, ScoreMethod::MinMax, ScoreMethod::GaussianDecay];

    pub fn as_str(self) -> &'static str {
        match self {
            ScoreMethod::Threshold => "threshold",
            ScoreMethod::MinMax => "minmax",
            ScoreMethod::GaussianDecay => "gaussian",
        }
    }
}

impl fmt::Display for ScoreMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScoreMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "threshold" => Ok(ScoreMethod::Threshold),
            "minmax" | "min-max" => Ok(ScoreMethod::MinMax),
            "gaussian" | "gaussian-decay" => Ok(ScoreMethod::GaussianDecay),
            other => Err(Error::Config(format!("unknown scorer method {other:?}"))),
        }
    }
}

/// Maps a spatial distance to a contextual discrepancy score in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyScorer {
    pub method: ScoreMethod,
    pub d_theta: f64,
    pub sigma_d: f64,
}

impl DiscrepancyScorer {
    pub fn new(method: ScoreMethod, d_theta: f64, sigma_d: f64) -> Result<Self> {
        if !(d_theta > 0.0 && d_theta.is_finite()) {
            return Err(Error::Config(format!("d_theta must be positive, got {d_theta}")));
        }
        if !(sigma_d > 0.0 && sigma_d.is_finite()) {
            return Err(Error::Config(format!("sigma_d must be positive, got {sigma_d}")));
        }
        Ok(DiscrepancyScorer { method, d_theta, sigma_d })
    }

    pub fn with_method(method: ScoreMethod) -> Self {
        DiscrepancyScorer { method, ..Self::default() }
    }

    pub fn score_distance(&self, d: f64) -> f64 {
        match self.method {
            ScoreMethod::Threshold => score_threshold(d, self.d_theta),
            // distances between unit-square points never exceed the diagonal
            ScoreMethod::MinMax => (d / MAX_DISTANCE).clamp(0.0, 1.0),
            ScoreMethod::GaussianDecay => score_gaussian(d, self.sigma_d),
        }
    }

    pub fn score(&self, a: &ObjectInstance, b: &ObjectInstance) -> f64 {
        self.score_distance(spatial_distance(a, b))
    }
}

impl Default for DiscrepancyScorer {
    fn default() -> Self {
        DiscrepancyScorer { method: ScoreMethod::GaussianDecay, d_theta: DEFAULT_D_THETA, sigma_d: DEFAULT_SIGMA_D }
    }
}

/// Gaussian weights over timestamps (or frames, for frame-level diffusion).
///
/// The weight is the raw normal density, not peak-normalized, so its peak
/// value `1/√(2πσ²)` depends on `sigma_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionKernel {
    pub sigma_t: f64,
    pub n_timestamps: usize,
}

impl DiffusionKernel {
    pub fn new(sigma_t: f64, n_timestamps: usize) -> Result<Self> {
        if !(sigma_t > 0.0 && sigma_t.is_finite()) {
            return Err(Error::Config(format!("sigma_t must be positive, got {sigma_t}")));
        }
        if sigma_t < 0.4 {
            log::warn!("sigma_t = {sigma_t} < 0.4: peak temporal weight exceeds 1 and damped scores are clamped");
        }
        Ok(DiffusionKernel { sigma_t, n_timestamps })
    }

    /// Density at integer offset `t_c - t_r`.
    pub fn offset_weight(&self, offset: f64) -> f64 {
        let var = self.sigma_t * self.sigma_t;
        (-(offset * offset) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
    }

    /// `γ(t_r, t_c, σ)`.
    pub fn weight(&self, t_r: usize, t_c: usize) -> f64 {
        self.offset_weight(t_c as f64 - t_r as f64)
    }

    /// `γ(t_r, σ)`: the weight of every timestamp around `t_r`.
    pub fn weights(&self, t_r: usize) -> Vec<f64> {
        (0..self.n_timestamps).map(|t| self.weight(t_r, t)).collect()
    }

    /// Damp a base discrepancy by `(1 - γ)` and clamp into `[0, 1]`.
    pub fn damp(&self, delta: f64, t_r: usize, t_c: usize) -> f64 {
        (delta * (1.0 - self.weight(t_r, t_c))).clamp(0.0, 1.0)
    }
}

/// `γ(t_r, t_c, σ_t)` with range checks.
pub fn temporal_weight(kernel: &DiffusionKernel, t_r: usize, t_c: usize) -> Result<f64> {
    if t_r >= kernel.n_timestamps || t_c >= kernel.n_timestamps {
        return Err(Error::Index(format!(
            "timestamps ({t_r}, {t_c}) out of range for {} timestamps",
            kernel.n_timestamps
        )));
    }
    Ok(kernel.weight(t_r, t_c))
}

/// Per-object per-timestamp frequency normalization.
///
/// With `Ñ(f) = 1 - exp(-f²/(2σ_f²))`, the normalized frequency is
/// `(Ñ(f(k,t)) + ε) / (max_τ Ñ(f(k,τ)) + ε)`: near zero where the object is
/// absent and exactly 1 at its most frequent timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyNormalizer {
    pub sigma_f: f64,
    pub epsilon: f64,
}

impl FrequencyNormalizer {
    pub fn new(sigma_f: f64, epsilon: f64) -> Result<Self> {
        if !(sigma_f > 0.0 && sigma_f.is_finite()) {
            return Err(Error::Config(format!("sigma_f must be positive, got {sigma_f}")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(FrequencyNormalizer { sigma_f, epsilon })
    }

    /// `sigma_f` = half the largest per-timestamp count in the corpus.
    pub fn for_corpus(corpus: &Corpus) -> Self {
        FrequencyNormalizer { sigma_f: (corpus.max_frequency() as f64 / 2.0).max(0.5), epsilon: DEFAULT_EPSILON }
    }

    /// `Ñ(f)`, increasing in `f` with `Ñ(0) = 0`.
    pub fn transform(&self, f: f64) -> f64 {
        1.0 - (-(f * f) / (2.0 * self.sigma_f * self.sigma_f)).exp()
    }

    pub fn freq_norm(&self, corpus: &Corpus, label: LabelId, t: usize) -> Result<f64> {
        corpus.check_label(label)?;
        corpus.check_timestamp(t)?;
        let row = &corpus.freq_table()[label];
        self.normalize_row(row, label).map(|v| v[t])
    }

    fn normalize_row(&self, row: &[u32], label: LabelId) -> Result<Vec<f64>> {
        let transformed: Vec<f64> = row.iter().map(|&f| self.transform(f as f64)).collect();
        let max = transformed.iter().copied().fold(0.0, f64::max);
        if max <= 0.0 {
            return Err(Error::DegenerateFrequency(label));
        }
        Ok(transformed.into_iter().map(|n| (n + self.epsilon) / (max + self.epsilon)).collect())
    }

    /// Precompute the normalized frequency of every label at every timestamp.
    pub fn table(&self, corpus: &Corpus) -> Result<FrequencyTable> {
        let n_timestamps = corpus.n_timestamps();
        let mut values = Vec::with_capacity(corpus.n_labels() * n_timestamps);
        for (label, row) in corpus.freq_table().iter().enumerate() {
            values.extend(self.normalize_row(row, label)?);
        }
        Ok(FrequencyTable { n_timestamps, values })
    }
}

/// Dense `[label][t]` table of normalized frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTable {
    n_timestamps: usize,
    values: Vec<f64>,
}

impl FrequencyTable {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let n_timestamps = rows.first().map_or(0, Vec::len);
        FrequencyTable { n_timestamps, values: rows.into_iter().flatten().collect() }
    }

    pub fn get(&self, label: LabelId, t: usize) -> f64 {
        self.values[label * self.n_timestamps + t]
    }

    pub fn n_labels(&self) -> usize {
        self.values.len().checked_div(self.n_timestamps).unwrap_or(0)
    }

    pub fn n_timestamps(&self) -> usize {
        self.n_timestamps
    }
}

pub fn phi_avg(nr: f64, nc: f64) -> f64 {
    (nr + nc) / 2.0
}

pub fn phi_min(nr: f64, nc: f64) -> f64 {
    nr.min(nc)
}

/// Log-based frequency weight, doubled at or below an average of 0.5.
pub fn omega_ln(phi_avg: f64) -> Result<f64> {
    if phi_avg.is_nan() || phi_avg <= 0.0 {
        return Err(Error::Domain(format!("omega_ln needs phi_avg > 0, got {phi_avg}")));
    }
    let w = (1.5 / phi_avg).ln();
    Ok(if phi_avg > 0.5 { w } else { 2.0 * w })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inst(cx: f64, cy: f64) -> ObjectInstance {
        ObjectInstance { label: 0, frame: 0, cx, cy }
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn distance_examples() {
        assert_eq!(spatial_distance(&inst(0.3, 0.7), &inst(0.3, 0.7)), 0.0);
        assert!(close(spatial_distance(&inst(0.0, 0.0), &inst(1.0, 1.0)), std::f64::consts::SQRT_2, 1e-12));
        assert!(close(spatial_distance(&inst(0.0, 0.0), &inst(0.3, 0.4)), 0.5, 1e-12));
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(score_threshold(0.1, 0.3), 0.0);
        assert_eq!(score_threshold(0.3, 0.3), 1.0);
        assert_eq!(score_threshold(1.4, 0.3), 1.0);
    }

    #[test]
    fn minmax_examples() {
        assert_eq!(score_minmax(0.0).unwrap(), 0.0);
        assert!(close(score_minmax(SQRT_2).unwrap(), 1.0, 1e-15));
        assert!(close(score_minmax(SQRT_2 / 2.0).unwrap(), 0.5, 1e-15));
        assert!(matches!(score_minmax(1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn gaussian_examples() {
        assert_eq!(score_gaussian(0.0, 0.25), 0.0);
        assert!(close(score_gaussian(0.25, 0.25), 0.39347, 1e-5));
        assert!(close(score_gaussian(1.0, 0.25), 0.99966, 1e-5));
    }

    #[test]
    fn temporal_weight_examples() {
        let k = DiffusionKernel::new(1.0, 10).unwrap();
        assert!(close(k.weight(4, 4), 0.39894, 1e-5));
        assert!(close(k.weight(4, 5), 0.24197, 1e-5));
        assert_eq!(k.weight(3, 5), k.weight(3, 1));
        assert!(temporal_weight(&k, 3, 10).is_err());
    }

    #[test]
    fn damped_neighbor_timestamp() {
        let k = DiffusionKernel::new(1.0, 4).unwrap();
        assert!(close(k.damp(0.5, 1, 2), 0.37901, 1e-5));
        // tiny sigma: 1 - γ goes negative and the score clamps at 0
        let tight = DiffusionKernel::new(0.1, 4).unwrap();
        assert_eq!(tight.damp(0.5, 1, 1), 0.0);
    }

    #[test]
    fn phi_examples() {
        assert!(close(phi_avg(0.8, 0.3), 0.55, 1e-15));
        assert_eq!(phi_min(0.8, 0.3), 0.3);
        assert_eq!((phi_avg(1.0, 1.0), phi_min(1.0, 1.0)), (1.0, 1.0));
        assert_eq!((phi_avg(0.0, 1.0), phi_min(0.0, 1.0)), (0.5, 0.0));
    }

    #[test]
    fn omega_examples() {
        assert!(close(omega_ln(1.0).unwrap(), 0.40546, 1e-5));
        assert!(close(omega_ln(0.5).unwrap(), 2.19722, 1e-5));
        assert!(close(omega_ln(0.75).unwrap(), std::f64::consts::LN_2, 1e-12));
        assert!(omega_ln(0.0).is_err());
    }

    #[test]
    fn omega_jumps_at_one_half() {
        let below = omega_ln(0.5).unwrap();
        let above = omega_ln(0.5 + 1e-12).unwrap();
        assert!(close(below / above, 2.0, 1e-9));
        // continuous from the left
        assert!(close(omega_ln(0.5 - 1e-12).unwrap(), below, 1e-9));
    }

    #[test]
    fn freq_norm_zero_frequency() {
        // f = 0 with a row maximum of Ñ = 0.9 and ε = 0.01
        let n = FrequencyNormalizer::new(1.0, 0.01).unwrap();
        let f_max = (-2.0 * (0.1f64).ln()).sqrt(); // Ñ(f_max) = 0.9
        assert!(close(n.transform(f_max), 0.9, 1e-12));
        let value = (n.transform(0.0) + 0.01) / (n.transform(f_max) + 0.01);
        assert!(close(value, 0.01099, 1e-5));
    }

    fn toy_corpus(counts: &[u32]) -> Corpus {
        let mut instances = Vec::new();
        for (t, &c) in counts.iter().enumerate() {
            for _ in 0..c {
                instances.push(ObjectInstance { label: 0, frame: t, cx: 0.5, cy: 0.5 });
            }
        }
        Corpus::from_instances(vec!["a".into()], instances, counts.len(), counts.len()).unwrap()
    }

    #[test]
    fn freq_norm_max_and_constant() {
        let c = toy_corpus(&[1, 4, 2]);
        let n = FrequencyNormalizer::for_corpus(&c);
        assert_eq!(n.freq_norm(&c, 0, 1).unwrap(), 1.0);
        assert!(n.freq_norm(&c, 0, 0).unwrap() < n.freq_norm(&c, 0, 2).unwrap());
        let flat = toy_corpus(&[3, 3, 3]);
        let n = FrequencyNormalizer::for_corpus(&flat);
        for t in 0..3 {
            assert_eq!(n.freq_norm(&flat, 0, t).unwrap(), 1.0);
        }
        assert!(n.freq_norm(&flat, 1, 0).is_err());
    }

    proptest! {
        #[test]
        fn scores_are_monotone_and_bounded(d1 in 0.0f64..SQRT_2, d2 in 0.0f64..SQRT_2, sigma in 0.01f64..2.0, theta in 0.01f64..1.5) {
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            for method in ScoreMethod::ALL {
                let s = DiscrepancyScorer::new(method, theta, sigma).unwrap();
                let (a, b) = (s.score_distance(lo), s.score_distance(hi));
                prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
                prop_assert!(a <= b);
            }
        }

        #[test]
        fn gaussian_is_scale_invariant(d in 0.0f64..2.0, sigma in 0.05f64..2.0, c in 0.1f64..10.0) {
            prop_assert!((score_gaussian(d, sigma) - score_gaussian(c * d, c * sigma)).abs() < 1e-12);
        }

        #[test]
        fn temporal_weight_symmetric_and_peaked(t_r in 0usize..20, off in 0usize..10, sigma in 0.4f64..5.0) {
            let k = DiffusionKernel::new(sigma, 40).unwrap();
            let up = k.weight(t_r + 10, t_r + 10 + off);
            let down = k.weight(t_r + 10, t_r + 10 - off);
            prop_assert_eq!(up, down);
            prop_assert!(k.weight(t_r, t_r) >= up);
        }

        #[test]
        fn freq_norm_monotone(counts in proptest::collection::vec(0u32..30, 2..8)) {
            prop_assume!(counts.iter().any(|&c| c > 0));
            let c = toy_corpus(&counts);
            let n = FrequencyNormalizer::for_corpus(&c);
            let table = n.table(&c).unwrap();
            for i in 0..counts.len() {
                for j in 0..counts.len() {
                    if counts[i] <= counts[j] {
                        prop_assert!(table.get(0, i) <= table.get(0, j));
                    }
                }
                prop_assert!(table.get(0, i) > 0.0 && table.get(0, i) <= 1.0);
            }
        }
    }
}
