//! Thin helpers over `faer` for the dense complex kernels used everywhere else.

use faer::linalg::solvers::DenseSolveCore;
use faer::{c64, Mat, MatRef, Side};

use crate::error::{Error, Result};

pub type CMat = Mat<c64>;

pub const EPS: f64 = f64::EPSILON;

pub fn c(re: f64, im: f64) -> c64 {
    c64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    Mat::identity(n, n)
}

pub fn frobenius(a: MatRef<'_, c64>) -> f64 {
    a.norm_l2()
}

pub fn adjoint(a: MatRef<'_, c64>) -> CMat {
    a.adjoint().to_owned()
}

pub fn scaled(a: MatRef<'_, c64>, s: f64) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

pub fn trace(a: MatRef<'_, c64>) -> c64 {
    let n = a.nrows().min(a.ncols());
    (0..n).map(|i| a[(i, i)]).sum()
}

/// Re Tr(AB) without forming the product.
pub fn re_trace_product(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            let x = a[(i, k)];
            let y = b[(k, i)];
            acc += x.re * y.re - x.im * y.im;
        }
    }
    acc
}

/// (A + A†)/2.
pub fn hermitian_part(a: MatRef<'_, c64>) -> CMat {
    let n = a.nrows();
    Mat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

/// ||A - A†||_F.
pub fn anti_hermitian_norm(a: MatRef<'_, c64>) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a[(i, j)] - a[(j, i)].conj()).norm_sqr();
        }
    }
    acc.sqrt()
}

pub fn distance_to_identity(a: MatRef<'_, c64>, scale: c64) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { scale } else { c64::new(0.0, 0.0) };
            acc += (a[(i, j)] - target).norm_sqr();
        }
    }
    acc.sqrt()
}

pub fn difference_norm(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += (a[(i, j)] - b[(i, j)]).norm_sqr();
        }
    }
    acc.sqrt()
}

/// Eigendecomposition of a Hermitian matrix; eigenvalues ascending.
pub fn eigh(a: MatRef<'_, c64>) -> Result<(Vec<f64>, CMat)> {
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::DecompositionFailed(format!("{e:?}")))?;
    let n = a.nrows();
    let s = evd.S();
    let values = (0..n).map(|i| s[i].re).collect();
    Ok((values, evd.U().to_owned()))
}

pub fn eigvalsh(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    let v = a
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::DecompositionFailed(format!("{e:?}")))?;
    Ok(v)
}

pub fn min_eigenvalue(a: MatRef<'_, c64>) -> Result<f64> {
    Ok(eigvalsh(a)?.first().copied().unwrap_or(0.0))
}

pub fn max_eigenvalue(a: MatRef<'_, c64>) -> Result<f64> {
    Ok(eigvalsh(a)?.last().copied().unwrap_or(0.0))
}

/// Cholesky factor of a Hermitian positive definite matrix, or `None` when the
/// factorization breaks down.
pub fn cholesky(a: MatRef<'_, c64>) -> Option<faer::linalg::solvers::Llt<c64>> {
    a.llt(Side::Lower).ok()
}

/// log det of a Hermitian PD matrix from its Cholesky factor.
pub fn log_det_from_llt(llt: &faer::linalg::solvers::Llt<c64>) -> f64 {
    let l = llt.L();
    (0..l.nrows()).map(|i| 2.0 * l[(i, i)].re.ln()).sum()
}

pub fn inverse_from_llt(llt: &faer::linalg::solvers::Llt<c64>) -> CMat {
    let inv = llt.inverse();
    hermitian_part(inv.as_ref())
}

/// Integer matrix power by repeated squaring.
pub fn matrix_power(a: MatRef<'_, c64>, mut k: usize) -> CMat {
    let n = a.nrows();
    let mut result = identity(n);
    let mut base = a.to_owned();
    while k > 0 {
        if k & 1 == 1 {
            result = &result * &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Numerical rank of a Hermitian matrix: eigenvalue magnitudes above
/// `rel_threshold * max |eigenvalue|`.
pub fn hermitian_rank(a: MatRef<'_, c64>, rel_threshold: f64) -> Result<usize> {
    let vals = eigvalsh(a)?;
    let max = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return Ok(0);
    }
    Ok(vals.iter().filter(|v| v.abs() > rel_threshold * max).count())
}

/// A · A† for a tall matrix of column vectors.
pub fn outer(v: MatRef<'_, c64>) -> CMat {
    v * v.adjoint()
}

pub fn all_finite(a: MatRef<'_, c64>) -> Option<(usize, usize)> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let z = a[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Some((i, j));
            }
        }
    }
    None
}

/// Modified Gram-Schmidt, applied twice, on the columns of `a`.
pub fn orthonormalize_columns(a: &mut CMat) {
    let (n, k) = (a.nrows(), a.ncols());
    for _pass in 0..2 {
        for j in 0..k {
            for p in 0..j {
                let mut dot = c64::new(0.0, 0.0);
                for i in 0..n {
                    dot += a[(i, p)].conj() * a[(i, j)];
                }
                for i in 0..n {
                    let v = a[(i, p)];
                    a[(i, j)] -= dot * v;
                }
            }
            let norm: f64 = (0..n).map(|i| a[(i, j)].norm_sqr()).sum::<f64>().sqrt();
            if norm > 0.0 {
                for i in 0..n {
                    a[(i, j)] /= norm;
                }
            }
        }
    }
}
