//! Flat `key = value` run configuration shared by every pipeline stage.
//!
//! Values are layered: defaults, then a config file, then explicit
//! overrides. The whole configuration is validated before any work starts.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::context::{ContextConfig, Mechanism, PairConfig};
use crate::embed::{Objective, Optimizer, TrainConfig};
use crate::error::{Error, Result};
use crate::scoring::{DiscrepancyScorer, ScoreMethod, DEFAULT_D_THETA, DEFAULT_SIGMA_D, DEFAULT_SIGMA_T};

/// Every key with a one-line description, in documentation order.
pub const KEYS: &[(&str, &str)] = &[
    ("mechanisms", "context windows, comma list of same-frame, surrounding-frames, neighbor-timestamps"),
    ("w_f", "surrounding-frames window radius in frames"),
    ("w_t", "neighbor-timestamps window radius in timestamps"),
    ("negatives", "negative pairs drawn per positive pair"),
    ("frame_diffusion", "damp cross-frame scores by the frame-level Gaussian weight (true/false)"),
    ("scorer", "discrepancy score: threshold, minmax or gaussian"),
    ("d_theta", "distance threshold of the threshold scorer (unit-square units)"),
    ("sigma_d", "spatial width of the gaussian scorer (unit-square units)"),
    ("sigma_t", "temporal diffusion width in timestamps"),
    ("sigma_f", "frequency normalization width; 'auto' is half the largest per-timestamp count"),
    ("objective", "t1s (static) or t1 .. t9 (temporal)"),
    ("dim", "embedding length"),
    ("timestamps", "number of timestamps the video is cut into"),
    ("learning_rate", "optimizer step size"),
    ("epochs", "passes over the pair list"),
    ("batch_size", "pairs per gradient step"),
    ("optimizer", "sgd or adam"),
    ("seed", "table initialization and shuffling seed"),
    ("pair_seed", "negative sampling seed"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mechanisms: Vec<Mechanism>,
    pub w_f: usize,
    pub w_t: usize,
    pub negatives: usize,
    pub frame_diffusion: bool,
    pub scorer: ScoreMethod,
    pub d_theta: f64,
    pub sigma_d: f64,
    pub sigma_t: f64,
    pub sigma_f: Option<f64>,
    pub objective: Objective,
    pub dim: usize,
    pub timestamps: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: Optimizer,
    pub seed: u64,
    pub pair_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let ctx = ContextConfig::default();
        let train = TrainConfig::default();
        RunConfig {
            mechanisms: ctx.mechanisms,
            w_f: ctx.w_f,
            w_t: ctx.w_t,
            negatives: ctx.negatives_per_positive,
            frame_diffusion: ctx.frame_diffusion,
            scorer: ScoreMethod::GaussianDecay,
            d_theta: DEFAULT_D_THETA,
            sigma_d: DEFAULT_SIGMA_D,
            sigma_t: DEFAULT_SIGMA_T,
            sigma_f: None,
            objective: train.objective,
            dim: train.dim,
            timestamps: 1,
            learning_rate: train.learning_rate,
            epochs: train.epochs,
            batch_size: train.batch_size,
            optimizer: train.optimizer,
            seed: train.seed,
            pair_seed: 0,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("invalid value {value:?} for key {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean {value:?} for key {key}"))),
    }
}

/// Split `key = value` lines, skipping blanks and `#` comments.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: i + 1, message: format!("expected key = value, found {line:?}") })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "mechanisms" => {
                self.mechanisms =
                    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::parse).collect::<Result<_>>()?;
            }
            "w_f" => self.w_f = parse("w_f", value)?,
            "w_t" => self.w_t = parse("w_t", value)?,
            "negatives" => self.negatives = parse("negatives", value)?,
            "frame_diffusion" => self.frame_diffusion = parse_bool("frame_diffusion", value)?,
            "scorer" => self.scorer = value.parse()?,
            "d_theta" => self.d_theta = parse("d_theta", value)?,
            "sigma_d" => self.sigma_d = parse("sigma_d", value)?,
            "sigma_t" => self.sigma_t = parse("sigma_t", value)?,
            "sigma_f" => {
                self.sigma_f = if value.eq_ignore_ascii_case("auto") { None } else { Some(parse("sigma_f", value)?) }
            }
            "objective" => self.objective = value.parse()?,
            "dim" => self.dim = parse("dim", value)?,
            "timestamps" => self.timestamps = parse("timestamps", value)?,
            "learning_rate" => self.learning_rate = parse("learning_rate", value)?,
            "epochs" => self.epochs = parse("epochs", value)?,
            "batch_size" => self.batch_size = parse("batch_size", value)?,
            "optimizer" => self.optimizer = value.parse()?,
            "seed" => self.seed = parse("seed", value)?,
            "pair_seed" => self.pair_seed = parse("pair_seed", value)?,
            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Apply every `key = value` line of `text`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (k, v) in parse_pairs(text)? {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        self.apply_text(&std::fs::read_to_string(path)?)
    }

    /// Render as a config file that [`RunConfig::apply_text`] reads back.
    pub fn to_text(&self) -> String {
        let mechanisms: Vec<&str> = self.mechanisms.iter().map(|m| m.as_str()).collect();
        let mut out = String::new();
        let mut line = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        line("mechanisms", mechanisms.join(","));
        line("w_f", self.w_f.to_string());
        line("w_t", self.w_t.to_string());
        line("negatives", self.negatives.to_string());
        line("frame_diffusion", self.frame_diffusion.to_string());
        line("scorer", self.scorer.to_string());
        line("d_theta", self.d_theta.to_string());
        line("sigma_d", self.sigma_d.to_string());
        line("sigma_t", self.sigma_t.to_string());
        line("sigma_f", self.sigma_f.map_or("auto".into(), |s| s.to_string()));
        line("objective", self.objective.to_string());
        line("dim", self.dim.to_string());
        line("timestamps", self.timestamps.to_string());
        line("learning_rate", self.learning_rate.to_string());
        line("epochs", self.epochs.to_string());
        line("batch_size", self.batch_size.to_string());
        line("optimizer", self.optimizer.to_string());
        line("seed", self.seed.to_string());
        line("pair_seed", self.pair_seed.to_string());
        out
    }

    pub fn context_config(&self) -> ContextConfig {
        ContextConfig {
            mechanisms: self.mechanisms.clone(),
            w_f: self.w_f,
            w_t: self.w_t,
            negatives_per_positive: self.negatives,
            frame_diffusion: self.frame_diffusion,
        }
    }

    pub fn scorer(&self) -> Result<DiscrepancyScorer> {
        DiscrepancyScorer::new(self.scorer, self.d_theta, self.sigma_d)
    }

    /// Pair generation settings; temporal pairs whenever the objective is
    /// temporal.
    pub fn pair_config(&self) -> Result<PairConfig> {
        Ok(PairConfig {
            context: self.context_config(),
            scorer: self.scorer()?,
            sigma_t: self.sigma_t,
            temporal: !self.objective.is_static(),
            seed: self.pair_seed,
        })
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            objective: self.objective,
            dim: self.dim,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
            sigma_t: self.sigma_t,
            sigma_f: self.sigma_f,
            optimizer: self.optimizer,
        }
    }

    /// Field and cross-field checks.
    pub fn validate(&self) -> Result<()> {
        self.context_config().validate()?;
        self.scorer()?;
        self.train_config().validate()?;
        if self.timestamps == 0 {
            return Err(Error::Config("timestamps must be at least 1".into()));
        }
        if !self.objective.is_static() && self.timestamps < 2 {
            return Err(Error::Config(format!("temporal objective {} needs timestamps >= 2", self.objective)));
        }
        if self.mechanisms.contains(&Mechanism::NeighborTimestamps) && self.objective.is_static() {
            return Err(Error::Config("neighbor-timestamps context needs a temporal objective".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.apply_text(
            "objective = t9\n# comment\ntimestamps=10\nmechanisms = same-frame, neighbor-timestamps\nsigma_f = 2.5\n",
        )
        .unwrap();
        let mut back = RunConfig::default();
        back.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        cfg.validate().unwrap();
    }

    #[test]
    fn cross_field_rules() {
        let mut cfg = RunConfig::default();
        cfg.set("objective", "t2").unwrap();
        assert!(cfg.validate().is_err());
        cfg.set("timestamps", "4").unwrap();
        cfg.validate().unwrap();
        cfg.set("objective", "t1s").unwrap();
        cfg.set("mechanisms", "neighbor-timestamps").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn bad_input_is_reported() {
        let mut cfg = RunConfig::default();
        assert!(cfg.set("nope", "1").is_err());
        assert!(cfg.set("dim", "x").is_err());
        assert!(matches!(cfg.apply_text("dim 3"), Err(Error::Parse { line: 1, .. })));
        for (k, _) in KEYS {
            let err = RunConfig::default().set(k, "?").unwrap_err().to_string();
            assert!(!err.contains("unknown config key"), "{k}: {err}");
        }
    }
}
