//! Brute-force nearest neighbours and the two local estimators.

use nalgebra::{DMatrix, DVector};

/// Indices and Euclidean distances of the `k` nearest reference rows,
/// nearest first (ties broken by index). `skip` excludes one row, for
/// leave-one-out queries.
pub(crate) fn nearest(
    refs: &[f64],
    width: usize,
    query: &[f64],
    k: usize,
    skip: Option<usize>,
) -> Vec<(f64, usize)> {
    let rows = refs.len() / width;
    let mut all: Vec<(f64, usize)> = Vec::with_capacity(rows);
    for r in 0..rows {
        if Some(r) == skip {
            continue;
        }
        let row = &refs[r * width..(r + 1) * width];
        let d2: f64 = row.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
        all.push((d2, r));
    }
    let k = k.min(all.len());
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < all.len() {
        all.select_nth_unstable_by(k, cmp);
        all.truncate(k);
    }
    all.sort_by(cmp);
    all.into_iter().map(|(d2, r)| (d2.sqrt(), r)).collect()
}

/// Inverse-distance weighted mean of the neighbours' responses. An exact
/// match returns the mean over the zero-distance neighbours.
pub(crate) fn inverse_distance(
    neighbours: &[(f64, usize)],
    responses: &[f64],
    m: usize,
    out: &mut [f64],
) {
    out.iter_mut().for_each(|v| *v = 0.0);
    let exact: Vec<usize> = neighbours
        .iter()
        .filter(|(d, _)| *d == 0.0)
        .map(|(_, r)| *r)
        .collect();
    if !exact.is_empty() {
        for r in &exact {
            for j in 0..m {
                out[j] += responses[r * m + j];
            }
        }
        out.iter_mut().for_each(|v| *v /= exact.len() as f64);
        return;
    }
    let mut total = 0.0;
    for (dist, r) in neighbours {
        let w = 1.0 / dist;
        total += w;
        for j in 0..m {
            out[j] += w * responses[r * m + j];
        }
    }
    out.iter_mut().for_each(|v| *v /= total);
}

/// Tricube-weighted local-linear regression; the fitted intercept at the
/// query is the estimate. A small ridge (relative to the squared bandwidth)
/// stabilizes the slope terms only.
pub(crate) fn local_linear(
    neighbours: &[(f64, usize)],
    refs: &[f64],
    width: usize,
    query: &[f64],
    responses: &[f64],
    m: usize,
    out: &mut [f64],
) {
    let k = neighbours.len();
    let p = width + 1;
    if k < p + 1 {
        inverse_distance(neighbours, responses, m, out);
        return;
    }
    let h = neighbours[k - 1].0 + 1e-12;
    let mut a = DMatrix::<f64>::zeros(k, p);
    let mut w = DVector::<f64>::zeros(k);
    let mut y = DMatrix::<f64>::zeros(k, m);
    for (i, (dist, r)) in neighbours.iter().enumerate() {
        a[(i, 0)] = 1.0;
        for c in 0..width {
            a[(i, c + 1)] = refs[r * width + c] - query[c];
        }
        let u = (dist / h).min(1.0);
        w[i] = (1.0 - u * u * u).powi(3) + 1e-3;
        for j in 0..m {
            y[(i, j)] = responses[r * m + j];
        }
    }
    let mut aw = a.clone();
    for i in 0..k {
        for c in 0..p {
            aw[(i, c)] *= w[i];
        }
    }
    let mut lhs = a.transpose() * &aw;
    for c in 1..p {
        lhs[(c, c)] += 1e-6 * h * h;
    }
    let rhs = aw.transpose() * y;
    match lhs.lu().solve(&rhs) {
        Some(beta) => {
            for j in 0..m {
                out[j] = beta[(0, j)];
            }
        }
        None => inverse_distance(neighbours, responses, m, out),
    }
}
