use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::objective::Workspace;
use super::{EmbeddingTable, Objective, ObjectiveContext};
use crate::context::TrainingPair;
use crate::corpus::Corpus;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam,
}

impl fmt::Display for Optimizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Optimizer::Sgd => "sgd",
            Optimizer::Adam => "adam",
        })
    }
}

impl FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sgd" => Ok(Optimizer::Sgd),
            "adam" => Ok(Optimizer::Adam),
            other => Err(Error::Config(format!("unknown optimizer {other:?} (expected sgd or adam)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub objective: Objective,
    pub dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub sigma_t: f64,
    /// `None` uses half the corpus's largest per-timestamp count.
    pub sigma_f: Option<f64>,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            objective: Objective::T1S,
            dim: 32,
            learning_rate: 0.05,
            epochs: 50,
            batch_size: 256,
            seed: 0,
            sigma_t: crate::scoring::DEFAULT_SIGMA_T,
            sigma_f: None,
            optimizer: Optimizer::Sgd,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("dim must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if !(self.sigma_t > 0.0 && self.sigma_t.is_finite()) {
            return Err(Error::Config(format!("sigma_t must be positive, got {}", self.sigma_t)));
        }
        if let Some(s) = self.sigma_f {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("sigma_f must be positive, got {s}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub embedding: EmbeddingTable,
    /// Mean per-pair loss before training, then after each epoch.
    pub loss_trace: Vec<f64>,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Adam { m: vec![0.0; n], v: vec![0.0; n], step: 0 }
    }

    fn apply(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.step += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.step);
        let c2 = 1.0 - Self::BETA2.powi(self.step);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * g;
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * g * g;
            params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

/// Mean loss over all pairs; per-pair terms may be computed in parallel but
/// are summed in pair order.
fn mean_loss(ctx: &ObjectiveContext, pairs: &[TrainingPair], emb: &EmbeddingTable) -> Result<f64> {
    let losses = pairs
        .par_iter()
        .map_init(Workspace::default, |ws, p| ctx.evaluate(p, emb, ws, false))
        .collect::<Result<Vec<f64>>>()?;
    Ok(losses.iter().sum::<f64>() / pairs.len() as f64)
}

/// Minimize the configured objective over `pairs` by minibatch descent on a
/// table seeded uniformly in `[0, 1)`.
///
/// Results are bit-identical for a given seed and pair order regardless of
/// the size of the rayon pool: per-pair gradients are independent and their
/// reduction is sequential.
pub fn train(pairs: &[TrainingPair], cfg: &TrainConfig, corpus: &Corpus) -> Result<TrainOutput> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(Error::Config("no training pairs".into()));
    }
    let ctx = ObjectiveContext::new(cfg.objective, corpus, cfg.sigma_t, cfg.sigma_f)?;
    let n_ts = if cfg.objective.is_static() { 1 } else { corpus.n_timestamps() };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut emb = EmbeddingTable::init(cfg.objective.table_kind(), corpus.n_labels(), n_ts, cfg.dim, &mut rng);
    for p in pairs {
        ctx.check(p, &emb)?;
    }

    let mut trace = Vec::with_capacity(cfg.epochs + 1);
    trace.push(mean_loss(&ctx, pairs, &emb)?);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut grad = vec![0.0; emb.data().len()];
    let mut adam = (cfg.optimizer == Optimizer::Adam).then(|| Adam::new(grad.len()));

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let terms = batch
                .par_iter()
                .map_init(Workspace::default, |ws, &i| {
                    ctx.evaluate(&pairs[i], &emb, ws, true)?;
                    Ok((ws.gx.clone(), ws.gy.clone()))
                })
                .collect::<Result<Vec<_>>>()
                .map_err(|e| training_error(epoch, e))?;
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            let mut ws = Workspace::default();
            for (&i, (gx, gy)) in batch.iter().zip(terms) {
                ws.gx = gx;
                ws.gy = gy;
                ctx.scatter(&pairs[i], &emb, &ws, scale, &mut grad);
            }
            if grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Training { epoch, message: "non-finite gradient".into() });
            }
            match adam.as_mut() {
                Some(a) => a.apply(emb.data_mut(), &grad, cfg.learning_rate),
                None => {
                    for (p, g) in emb.data_mut().iter_mut().zip(&grad) {
                        *p -= cfg.learning_rate * g;
                    }
                }
            }
        }
        let loss = mean_loss(&ctx, pairs, &emb).map_err(|e| training_error(epoch, e))?;
        if !loss.is_finite() {
            return Err(Error::Training { epoch, message: format!("loss became {loss}") });
        }
        log::debug!("epoch {epoch}: mean loss {loss:.6}");
        trace.push(loss);
    }
    Ok(TrainOutput { embedding: emb, loss_trace: trace })
}

fn training_error(epoch: usize, e: Error) -> Error {
    match e {
        Error::DegenerateVector(m) => Error::Training { epoch, message: format!("degenerate vector: {m}") },
        other => other,
    }
}
