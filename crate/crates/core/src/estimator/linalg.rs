use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Normalized Cholesky pivots below this mark a column as a linear
/// combination of the preceding ones.
const COLLINEAR_TOL: f64 = 1e-10;

/// Columns of a Gram matrix that are spanned by the columns to their left,
/// found by a greedy Cholesky pass on the correlation scale. Zero and
/// non-finite columns count as dependent.
pub(crate) fn dependent_columns(gram: &DMatrix<f64>) -> Vec<usize> {
    let k = gram.nrows();
    let scale: Vec<f64> = (0..k).map(|j| gram[(j, j)].max(0.0).sqrt()).collect();
    let mut l = DMatrix::<f64>::zeros(k, k);
    let mut kept = Vec::with_capacity(k);
    let mut bad = Vec::new();
    for j in 0..k {
        if scale[j] == 0.0 || !scale[j].is_finite() {
            bad.push(j);
            continue;
        }
        let c = |a: usize, b: usize| gram[(a, b)] / (scale[a] * scale[b]);
        let mut d = c(j, j);
        for &p in &kept {
            d -= l[(j, p)] * l[(j, p)];
        }
        if d < COLLINEAR_TOL {
            bad.push(j);
            continue;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..k {
            if scale[i] == 0.0 {
                continue;
            }
            let mut s = c(i, j);
            for &p in &kept {
                s -= l[(i, p)] * l[(j, p)];
            }
            l[(i, j)] = s / djj;
        }
        kept.push(j);
    }
    bad
}

/// Cholesky factor of a Gram matrix. Collinear columns are reported by name:
/// each listed column is spanned by columns to its left.
pub(crate) fn gram_cholesky(gram: &DMatrix<f64>, names: &[String]) -> Result<Cholesky<f64, Dyn>> {
    let bad = dependent_columns(gram);
    if !bad.is_empty() {
        return Err(Error::Collinear(bad.into_iter().map(|j| names[j].clone()).collect()));
    }
    Cholesky::new(gram.clone()).ok_or_else(|| Error::Collinear(names.to_vec()))
}

pub(crate) fn gram(x: &DMatrix<f64>) -> DMatrix<f64> {
    x.tr_mul(x)
}

/// Ordinary least squares coefficients of `y` on `x`.
#[cfg(test)]
pub(crate) fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String]) -> Result<DVector<f64>> {
    let chol = gram_cholesky(&gram(x), names)?;
    Ok(chol.solve(&x.tr_mul(y)))
}

/// Residuals of every column of `m` after projection on the columns of `x`.
pub(crate) fn partial_out(x: &DMatrix<f64>, m: &DMatrix<f64>, names: &[String]) -> Result<DMatrix<f64>> {
    if x.ncols() == 0 {
        return Ok(m.clone());
    }
    let chol = gram_cholesky(&gram(x), names)?;
    let coef = chol.solve(&x.tr_mul(m));
    Ok(m - x * coef)
}

/// `A^{-1/2}` of a symmetric positive-definite matrix.
pub(crate) fn inv_sqrt_spd(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(a.clone());
    let max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    if eig.eigenvalues.iter().any(|&v| v <= max * 1e-13) {
        return Err(Error::estimation("instrument cross-product matrix is singular"));
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt()));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

/// Extreme eigenvalues of the symmetric part of `a`.
pub(crate) fn sym_eigen_range(a: &DMatrix<f64>) -> (f64, f64) {
    let s = (a + a.transpose()) * 0.5;
    let ev = SymmetricEigen::new(s).eigenvalues;
    let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Sums the rows of `scores` within clusters, in increasing cluster-id order.
pub(crate) fn cluster_sums(scores: &DMatrix<f64>, clusters: &[u64]) -> Vec<DVector<f64>> {
    let mut sums: BTreeMap<u64, DVector<f64>> = BTreeMap::new();
    for (i, c) in clusters.iter().enumerate() {
        let row = scores.row(i).transpose();
        sums.entry(*c).and_modify(|s| *s += &row).or_insert(row);
    }
    sums.into_values().collect()
}

pub(crate) fn count_clusters(clusters: &[u64]) -> usize {
    let mut c = clusters.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}
