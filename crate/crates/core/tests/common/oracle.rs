//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library's math; only plain data is shared.

#![allow(dead_code)]

use std::f64::consts::PI;

pub fn gamma(sigma: f64, dt: f64) -> f64 {
    (-(dt * dt) / (2.0 * sigma * sigma)).exp() / (2.0 * PI * sigma * sigma).sqrt()
}

pub fn cos_sim(x: &[f64], y: &[f64]) -> f64 {
    let mut xy = 0.0;
    let mut xx = 0.0;
    let mut yy = 0.0;
    for i in 0..x.len() {
        xy += x[i] * y[i];
        xx += x[i] * x[i];
        yy += y[i] * y[i];
    }
    xy / (xx.sqrt() * yy.sqrt())
}

pub fn cos_dist(x: &[f64], y: &[f64]) -> f64 {
    1.0 - cos_sim(x, y)
}

/// `[object][timestamp][dim]` view of flat object-major data.
pub fn slices(data: &[f64], n_obj: usize, n_ts: usize, dim: usize) -> Vec<Vec<Vec<f64>>> {
    (0..n_obj)
        .map(|o| (0..n_ts).map(|t| data[(o * n_ts + t) * dim..(o * n_ts + t + 1) * dim].to_vec()).collect())
        .collect()
}

pub fn diffuse(v: &[Vec<f64>], t_r: usize, sigma: f64) -> Vec<f64> {
    let mut out = vec![0.0; v[0].len()];
    for (t, vt) in v.iter().enumerate() {
        let w = gamma(sigma, t as f64 - t_r as f64);
        for i in 0..out.len() {
            out[i] += w * vt[i];
        }
    }
    out
}

/// Per-pair loss written out case by case from the objective definitions.
/// `id` is the objective id ("t1s", "t1", ..., "t9"); `freq[label][t]` are
/// normalized frequencies.
#[allow(clippy::too_many_arguments)]
pub fn loss(
    id: &str,
    data: &[f64],
    n_obj: usize,
    n_ts: usize,
    dim: usize,
    r: usize,
    c: usize,
    t_r: usize,
    delta: f64,
    sigma_t: f64,
    freq: &[Vec<f64>],
) -> f64 {
    let e = slices(data, n_obj, n_ts, dim);
    let sq = |x: f64| x * x;
    let (nr, nc) = if freq.is_empty() { (0.0, 0.0) } else { (freq[r][t_r], freq[c][t_r]) };
    let avg = (nr + nc) / 2.0;
    let mn = nr.min(nc);
    if id == "t1s" {
        return sq(cos_dist(&e[r][0], &e[c][0]) - delta);
    }
    if id == "t1" {
        return sq(cos_dist(&e[r][t_r], &e[c][t_r]) - delta);
    }
    let d = cos_dist(&diffuse(&e[r], t_r, sigma_t), &diffuse(&e[c], t_r, sigma_t));
    match id {
        "t2" => sq(d - delta),
        "t3" => sq((nr + nc) * d - delta),
        "t4" => sq(d - (2.0 - (nr + nc)) * delta),
        "t5" => sq(d - (1.0 - avg) * delta),
        "t6" => sq(d - (1.0 - mn) * delta),
        "t7" => sq(d - (1.0 - mn / 2.0) * delta),
        "t8" => sq(d - 2.0 * (1.5 / mn).ln() * delta),
        "t9" => {
            let w = if avg > 0.5 { (1.5 / avg).ln() } else { 2.0 * (1.5 / avg).ln() };
            sq(d - w * delta)
        }
        other => panic!("unknown objective {other}"),
    }
}

/// Central differences of `f` at `x`.
pub fn finite_difference(x: &[f64], h: f64, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + h;
            let up = f(&p);
            p[i] = orig - h;
            let down = f(&p);
            p[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, zero when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale < 1e-12 {
        0.0
    } else {
        norm(&diff) / scale
    }
}

/// Neighbors of `q` by exhaustive similarity, ties toward the lower index.
pub fn brute_neighbors(vectors: &[Vec<f64>], q: usize, k: usize) -> Vec<usize> {
    let mut all: Vec<(usize, f64)> =
        (0..vectors.len()).filter(|&j| j != q).map(|j| (j, cos_sim(&vectors[q], &vectors[j]))).collect();
    // insertion sort keeps this independent of the library's sort
    for i in 1..all.len() {
        let mut j = i;
        while j > 0 && (all[j].1 > all[j - 1].1 || (all[j].1 == all[j - 1].1 && all[j].0 < all[j - 1].0)) {
            all.swap(j, j - 1);
            j -= 1;
        }
    }
    all.into_iter().take(k).map(|x| x.0).collect()
}

/// Top `m` unordered pairs by repeated maximum selection.
pub fn brute_top_pairs(vectors: &[Vec<f64>], m: usize) -> Vec<(usize, usize)> {
    let n = vectors.len();
    let mut taken = vec![vec![false; n]; n];
    let mut out = Vec::new();
    while out.len() < m {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..n {
            for b in a + 1..n {
                if taken[a][b] {
                    continue;
                }
                let s = cos_sim(&vectors[a], &vectors[b]);
                if best.map_or(true, |(_, _, bs)| s > bs) {
                    best = Some((a, b, s));
                }
            }
        }
        match best {
            Some((a, b, _)) => {
                taken[a][b] = true;
                out.push((a, b));
            }
            None => break,
        }
    }
    out
}

/// Rand index from the contingency table: agreements are pairs together in
/// both plus pairs apart in both.
pub fn rand_contingency(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    if n < 2 {
        return 1.0;
    }
    let ka = a.iter().max().unwrap() + 1;
    let kb = b.iter().max().unwrap() + 1;
    let mut table = vec![vec![0u64; kb]; ka];
    for i in 0..n {
        table[a[i]][b[i]] += 1;
    }
    let c2 = |x: u64| x * x.saturating_sub(1) / 2;
    let both: u64 = table.iter().flatten().map(|&x| c2(x)).sum();
    let rows: u64 = table.iter().map(|r| c2(r.iter().sum())).sum();
    let cols: u64 = (0..kb).map(|j| c2(table.iter().map(|r| r[j]).sum())).sum();
    let total = c2(n as u64);
    let apart_both = total + both - rows - cols;
    (both + apart_both) as f64 / total as f64
}

/// Spearman ρ with ranks from pairwise counting.
pub fn spearman_counting(a: &[f64], b: &[f64]) -> f64 {
    let rank = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|&x| {
                let less = v.iter().filter(|&&y| y < x).count() as f64;
                let equal = v.iter().filter(|&&y| y == x).count() as f64;
                less + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let (ra, rb) = (rank(a), rank(b));
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// `(label, frame, cx, cy)` instances, frames grouped `n_f` per timestamp.
/// Returns labels ranked by mean same-frame distance to `q` in timestamp `t`.
pub fn brute_base_neighbors(inst: &[(usize, usize, f64, f64)], n_f: usize, q: usize, t: usize, k: usize) -> Vec<usize> {
    let mut sums: Vec<(usize, f64, usize)> = Vec::new();
    for a in inst {
        for b in inst {
            if a.0 != q || b.0 == q || a.1 != b.1 || a.1 / n_f != t {
                continue;
            }
            let d = ((a.2 - b.2).powi(2) + (a.3 - b.3).powi(2)).sqrt();
            match sums.iter_mut().find(|s| s.0 == b.0) {
                Some(s) => {
                    s.1 += d;
                    s.2 += 1;
                }
                None => sums.push((b.0, d, 1)),
            }
        }
    }
    let mut means: Vec<(usize, f64)> = sums.into_iter().map(|(l, s, c)| (l, s / c as f64)).collect();
    means.sort_by(|x, y| x.1.partial_cmp(&y.1).unwrap().then(x.0.cmp(&y.0)));
    means.into_iter().take(k).map(|x| x.0).collect()
}

/// Top eigenvalues of `m` (symmetric) by power iteration with deflation.
pub fn power_eigenvalues(mut m: Vec<Vec<f64>>, count: usize) -> Vec<f64> {
    let n = m.len();
    let mut out = Vec::new();
    for _ in 0..count {
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * 0.37).collect();
        let mut lambda = 0.0;
        for _ in 0..5000 {
            let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| m[i][j] * v[j]).sum()).collect();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            v = w.iter().map(|x| x / norm).collect();
            lambda = norm;
        }
        for i in 0..n {
            for j in 0..n {
                m[i][j] -= lambda * v[i] * v[j];
            }
        }
        out.push(lambda);
    }
    out
}
