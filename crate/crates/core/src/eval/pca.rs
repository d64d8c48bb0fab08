use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::corpus::LabelId;
use crate::embed::EmbeddingTable;
use crate::error::{Error, Result};

/// Relative eigenvalue below which a component counts as absent.
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Pca2d {
    pub coords: Vec<[f64; 2]>,
    /// Variance along each axis (population covariance eigenvalues).
    pub variances: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaRow {
    pub label: LabelId,
    pub t: Option<usize>,
    pub x: f64,
    pub y: f64,
}

/// Mean-centered projection of `points` onto the top two eigenvectors of
/// their covariance. Each axis is oriented so its largest-magnitude
/// coordinate is positive.
pub fn pca_2d(points: &[Vec<f64>]) -> Result<Pca2d> {
    let n = points.len();
    if n == 0 {
        return Err(Error::Eval("no points to project".into()));
    }
    let dim = points[0].len();
    if dim < 2 {
        return Err(Error::Eval("PCA needs at least 2 dimensions".into()));
    }
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Eval("points differ in dimension".into()));
    }
    let mut x = DMatrix::from_fn(n, dim, |i, j| points[i][j]);
    for j in 0..dim {
        let mean = x.column(j).mean();
        x.column_mut(j).add_scalar_mut(-mean);
    }
    let cov = (x.transpose() * &x) / n as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let top = eig.eigenvalues[order[0]].max(0.0);
    let mut coords = vec![[0.0; 2]; n];
    let mut variances = [0.0; 2];
    for axis in 0..2 {
        let lambda = eig.eigenvalues[order[axis]].max(0.0);
        if lambda <= RANK_TOL * top.max(f64::MIN_POSITIVE) || lambda == 0.0 {
            if axis == 1 {
                log::warn!("embedding has rank < 2; second PCA axis is zero");
            }
            continue;
        }
        let v = eig.eigenvectors.column(order[axis]);
        let proj = &x * v;
        let pivot = proj.iter().copied().fold(0.0f64, |m, p| if p.abs() > m.abs() { p } else { m });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for (c, p) in coords.iter_mut().zip(proj.iter()) {
            c[axis] = sign * p;
        }
        variances[axis] = lambda;
    }
    Ok(Pca2d { coords, variances })
}

/// Project a table: a static table or one temporal slice gives one row per
/// label; a temporal table without `t` projects every `(label, t)` vector
/// jointly.
pub fn pca_table(emb: &EmbeddingTable, t: Option<usize>) -> Result<Vec<PcaRow>> {
    let keys: Vec<(LabelId, Option<usize>)> = match (emb.is_temporal(), t) {
        (false, _) => (0..emb.n_objects()).map(|l| (l, None)).collect(),
        (true, Some(t)) => {
            if t >= emb.n_timestamps() {
                return Err(Error::Index(format!("timestamp {t} out of range ({})", emb.n_timestamps())));
            }
            (0..emb.n_objects()).map(|l| (l, Some(t))).collect()
        }
        (true, None) => (0..emb.n_objects()).flat_map(|l| (0..emb.n_timestamps()).map(move |t| (l, Some(t)))).collect(),
    };
    let points: Vec<Vec<f64>> =
        keys.iter().map(|&(l, t)| emb.lookup(l, t.or(Some(0))).map(<[f64]>::to_vec)).collect::<Result<_>>()?;
    let pca = pca_2d(&points)?;
    Ok(keys.into_iter().zip(pca.coords).map(|((label, t), [x, y])| PcaRow { label, t, x, y }).collect())
}
