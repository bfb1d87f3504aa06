//! Dense and banded linear-algebra helpers on top of `faer`.

use std::sync::Once;

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, MatRef, Par, Side};
use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

static INIT: Once = Once::new();

/// Pins faer to sequential kernels. Parallelism lives at the trial level;
/// keeping every factorization single-threaded makes results independent
/// of the worker count.
pub fn init() {
    INIT.call_once(|| faer::set_global_parallelism(Par::Seq));
}

/// Hex SHA-256 of the column-major entries of a complex matrix.
pub fn fingerprint(a: MatRef<'_, Complex64>) -> String {
    let mut h = Sha256::new();
    h.update((a.nrows() as u64).to_le_bytes());
    h.update((a.ncols() as u64).to_le_bytes());
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let z = a[(i, j)];
            h.update(z.re.to_le_bytes());
            h.update(z.im.to_le_bytes());
        }
    }
    hex(&h.finalize())
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn solver_error(a: MatRef<'_, Complex64>, what: impl std::fmt::Debug) -> Error {
    Error::Solver {
        fingerprint: fingerprint(a),
        message: format!("{what:?}"),
    }
}

/// Ascending eigenvalues of a Hermitian matrix (lower triangle is read).
pub fn hermitian_eigenvalues(a: MatRef<'_, Complex64>) -> Result<Vec<f64>> {
    init();
    let mut ev = a.self_adjoint_eigenvalues(Side::Lower).map_err(|e| solver_error(a, e))?;
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Ascending eigenvalues and the matching orthonormal eigenvectors.
pub fn hermitian_eigen(a: MatRef<'_, Complex64>) -> Result<(Vec<f64>, Mat<Complex64>)> {
    init();
    let evd = a.self_adjoint_eigen(Side::Lower).map_err(|e| solver_error(a, e))?;
    let s = evd.S().column_vector();
    let mut order: Vec<usize> = (0..a.nrows()).collect();
    order.sort_by(|&i, &j| s[i].re.total_cmp(&s[j].re));
    let u = evd.U();
    let vals = order.iter().map(|&i| s[i].re).collect();
    let vecs = Mat::from_fn(a.nrows(), a.nrows(), |i, k| u[(i, order[k])]);
    Ok((vals, vecs))
}

/// Singular values, descending.
pub fn singular_values(a: MatRef<'_, Complex64>) -> Result<Vec<f64>> {
    init();
    let mut s = a.singular_values().map_err(|e| solver_error(a, e))?;
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}

/// Full SVD `A = U Σ V*` with singular values descending.
pub fn svd(a: MatRef<'_, Complex64>) -> Result<(Vec<f64>, Mat<Complex64>, Mat<Complex64>)> {
    init();
    let d = a.svd().map_err(|e| solver_error(a, e))?;
    let s = d.S().column_vector();
    let n = s.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[j].re.total_cmp(&s[i].re));
    let (u, v) = (d.U(), d.V());
    let sv = order.iter().map(|&i| s[i].re).collect();
    let uu = Mat::from_fn(u.nrows(), n, |i, k| u[(i, order[k])]);
    let vv = Mat::from_fn(v.nrows(), n, |i, k| v[(i, order[k])]);
    Ok((sv, uu, vv))
}

/// Dense inverse by partially pivoted LU. Non-finite output is reported
/// as a singular matrix.
pub fn inverse(a: MatRef<'_, Complex64>) -> Result<Mat<Complex64>> {
    init();
    let inv = a.partial_piv_lu().inverse();
    let finite = (0..inv.ncols()).all(|j| (0..inv.nrows()).all(|i| inv[(i, j)].re.is_finite() && inv[(i, j)].im.is_finite()));
    if !finite {
        return Err(Error::Singular(format!("LU inverse of matrix {} is not finite", fingerprint(a))));
    }
    Ok(inv)
}

/// Operator 2-norm.
pub fn norm2(a: MatRef<'_, Complex64>) -> Result<f64> {
    Ok(singular_values(a)?.first().copied().unwrap_or(0.0))
}

/// `max_ij |a_ij|`.
pub fn max_abs(a: MatRef<'_, Complex64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

/// Lower Cholesky factor of a symmetric positive definite real band
/// matrix with `bandwidth` sub-diagonals.
///
/// Row `i` of the factor is stored as the `bandwidth + 1` entries ending
/// at the diagonal.
#[derive(Clone, Debug)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    rows: Vec<f64>,
}

impl BandCholesky {
    /// Factors the matrix whose lower-band entries are `entry(i, j)` for
    /// `i - bandwidth ≤ j ≤ i`. A non-positive pivot reports its 1-based
    /// leading minor.
    pub fn factor(n: usize, bandwidth: usize, entry: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let bw = bandwidth;
        let stride = bw + 1;
        let mut rows = vec![0.0; n * stride];
        // L[i][j] lives at rows[i * stride + (j + bw - i)].
        let at = |i: usize, j: usize| i * stride + (j + bw - i);
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = entry(i, j);
                for k in k0..j {
                    s -= rows[at(i, k)] * rows[at(j, k)];
                }
                if j == i {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::Factorization { minor: i + 1, pivot: s });
                    }
                    rows[at(i, i)] = s.sqrt();
                } else {
                    rows[at(i, j)] = s / rows[at(j, j)];
                }
            }
        }
        Ok(Self { n, bw, rows })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `L x`.
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let stride = self.bw + 1;
        (0..self.n)
            .map(|i| {
                let j0 = i.saturating_sub(self.bw);
                (j0..=i).map(|j| self.rows[i * stride + (j + self.bw - i)] * x[j]).sum()
            })
            .collect()
    }

    /// Dense copy of `L`, for tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let stride = self.bw + 1;
        let mut out = vec![vec![0.0; self.n]; self.n];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate().take(i + 1).skip(i.saturating_sub(self.bw)) {
                *v = self.rows[i * stride + (j + self.bw - i)];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_cholesky_reproduces_matrix() {
        let n = 12;
        let a = |i: usize, j: usize| -> f64 {
            let d = i.abs_diff(j);
            match d {
                0 => 4.0 + i as f64 * 0.1,
                1 => -1.0,
                2 => 0.3,
                _ => 0.0,
            }
        };
        let l = BandCholesky::factor(n, 2, a).unwrap().to_dense();
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n).map(|k| l[i][k] * l[j][k]).sum();
                assert!((s - a(i, j)).abs() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn band_cholesky_names_failing_minor() {
        // diag(1, -1, ...) fails at the second leading minor.
        let err = BandCholesky::factor(4, 1, |i, j| if i == j { if i == 1 { -1.0 } else { 1.0 } } else { 0.0 }).unwrap_err();
        assert!(matches!(err, Error::Factorization { minor: 2, .. }));
    }

    #[test]
    fn inverse_and_norm() {
        let a = Mat::from_fn(3, 3, |i, j| if i == j { Complex64::new(2.0, 0.0) } else { Complex64::new(0.0, 0.0) });
        let inv = inverse(a.as_ref()).unwrap();
        assert!((inv[(1, 1)] - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((norm2(a.as_ref()).unwrap() - 2.0).abs() < 1e-14);
        let zero = Mat::<Complex64>::zeros(2, 2);
        assert!(matches!(inverse(zero.as_ref()), Err(Error::Singular(_))));
    }
}
