//! Randomized gradient checks against the oracle loss.

#![allow(dead_code)]

use ctxembed::embed::ObjectiveContext;
use ctxembed::scoring::FrequencyTable;
use ctxembed::{DiffusionKernel, EmbeddingTable, Objective, TableKind, TrainingPair};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracle;

pub const FD_STEP: f64 = 1e-5;

pub struct Outcome {
    /// Largest relative error between analytic and central-difference gradients.
    pub max_grad_error: f64,
    /// Largest absolute gap between library and oracle loss values.
    pub max_loss_gap: f64,
}

/// `trials` random (pair, table) instances for one objective.
pub fn check(objective: Objective, trials: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = Outcome { max_grad_error: 0.0, max_loss_gap: 0.0 };
    for _ in 0..trials {
        let n_obj = rng.gen_range(2..6);
        let n_ts = if objective.is_static() { 1 } else { rng.gen_range(1..5) };
        let dim = rng.gen_range(2..7);
        let sigma_t = rng.gen_range(0.5..2.0);
        let data: Vec<f64> = (0..n_obj * n_ts * dim).map(|_| rng.gen_range(0.05..1.0)).collect();
        let freq: Vec<Vec<f64>> = (0..n_obj).map(|_| (0..n_ts).map(|_| rng.gen_range(0.02..1.0)).collect()).collect();
        let r = rng.gen_range(0..n_obj);
        let c = (r + rng.gen_range(1..n_obj)) % n_obj;
        let t_r = rng.gen_range(0..n_ts);
        let delta = rng.gen_range(0.0..1.0);

        let kind = if objective.is_static() { TableKind::Static } else { TableKind::Temporal };
        let kernel = objective.is_diffused().then(|| DiffusionKernel::new(sigma_t, n_ts).unwrap());
        let table = objective.uses_frequency().then(|| FrequencyTable::from_rows(freq.clone()));
        let ctx = ObjectiveContext::from_parts(objective, kernel, table).unwrap();
        let pair = TrainingPair::positive(r, c, (!objective.is_static()).then_some(t_r), delta);
        let emb = EmbeddingTable::from_data(kind, n_obj, n_ts, dim, data.clone()).unwrap();

        let oracle_loss =
            |p: &[f64]| oracle::loss(objective.id(), p, n_obj, n_ts, dim, r, c, t_r, delta, sigma_t, &freq);
        let gap = (ctx.loss(&pair, &emb).unwrap() - oracle_loss(&data)).abs();
        worst.max_loss_gap = worst.max_loss_gap.max(gap);

        let sparse = ctx.gradient(&pair, &emb).unwrap();
        let mut analytic = vec![0.0; data.len()];
        for (label, t, g) in sparse.iter() {
            let o = (label * n_ts + t) * dim;
            analytic[o..o + dim].copy_from_slice(g);
        }
        let numeric = oracle::finite_difference(&data, FD_STEP, oracle_loss);
        worst.max_grad_error = worst.max_grad_error.max(oracle::relative_error(&analytic, &numeric));
    }
    worst
}
