//! Spectra of Hermitizations and the resolvent-level diagnostics built on
//! them.
//!
//! Block matrices are decomposed through the SVD of their `N × N` block:
//! the eigenvalues of `[[0, B], [B*, 0]]` are `±σ_k(B)` with eigenvectors
//! `(u_k, ±v_k)/√2`. This is exact in the chiral symmetry and about four
//! times cheaper than a dense `2N × 2N` eigensolve.

use faer::{Mat, MatRef};
use num_complex::Complex64;

use crate::ensemble::HermitianBlockMatrix;
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Clone, Debug)]
pub struct Spectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `α` belongs to `eigenvalues[α]`.
    pub eigenvectors: Option<Mat<Complex64>>,
    pub source_hash: String,
    /// Shared by the `X` and `Y` spectra of one configuration.
    pub pair_key: Option<String>,
}

impl Spectrum {
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        Self {
            eigenvalues,
            eigenvectors: None,
            source_hash: String::new(),
            pair_key: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Eigenvalues (and optionally eigenvectors) of a Hermitization.
pub fn decompose(h: &HermitianBlockMatrix, want_vectors: bool) -> Result<Spectrum> {
    let n = h.n();
    let b = h.block().as_ref();
    let (eigenvalues, eigenvectors) = if want_vectors {
        let (s, u, v) = linalg::svd(b)?;
        let mut vals = Vec::with_capacity(2 * n);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut vecs = Mat::<Complex64>::zeros(2 * n, 2 * n);
        // -σ_0 ≤ ... ≤ -σ_{N-1} ≤ σ_{N-1} ≤ ... ≤ σ_0.
        for p in 0..n {
            vals.push(-s[p]);
            for i in 0..n {
                vecs[(i, p)] = u[(i, p)] * r;
                vecs[(n + i, p)] = -v[(i, p)] * r;
            }
        }
        for p in 0..n {
            let k = n - 1 - p;
            vals.push(s[k]);
            for i in 0..n {
                vecs[(i, n + p)] = u[(i, k)] * r;
                vecs[(n + i, n + p)] = v[(i, k)] * r;
            }
        }
        (vals, Some(vecs))
    } else {
        let s = linalg::singular_values(b)?;
        let vals = s.iter().map(|x| -x).chain(s.iter().rev().copied()).collect();
        (vals, None)
    };
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        source_hash: h.provenance.config_hash.clone(),
        pair_key: h.provenance.pair_key.clone(),
    })
}

/// Dense decomposition of an arbitrary Hermitian matrix.
pub fn decompose_dense(a: MatRef<'_, Complex64>, want_vectors: bool) -> Result<Spectrum> {
    let (eigenvalues, eigenvectors) = if want_vectors {
        let (v, u) = linalg::hermitian_eigen(a)?;
        (v, Some(u))
    } else {
        (linalg::hermitian_eigenvalues(a)?, None)
    };
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        source_hash: String::new(),
        pair_key: None,
    })
}

fn upper(z: Complex64) -> Result<()> {
    if z.im > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("spectral parameter {z} must have positive imaginary part")))
    }
}

/// `m(z) = (1/2N) Σ_α 1/(λ_α - z)`.
pub fn stieltjes(spec: &Spectrum, z: Complex64) -> Result<Complex64> {
    upper(z)?;
    if spec.eigenvalues.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let s: Complex64 = spec.eigenvalues.iter().map(|&l| 1.0 / (l - z)).sum();
    Ok(s / spec.dim() as f64)
}

/// `(H - z)^{-1}` by dense LU.
pub fn resolvent(h: &HermitianBlockMatrix, z: Complex64) -> Result<Mat<Complex64>> {
    upper(z)?;
    let mut a = h.to_dense();
    for i in 0..h.dim() {
        a[(i, i)] -= z;
    }
    linalg::inverse(a.as_ref())
}

#[derive(Clone, Debug)]
pub struct ResolventProbe {
    pub z: Complex64,
    pub m: Complex64,
    /// `max(1, max_ij |G_ij|)`.
    pub gamma: f64,
    pub diag: Vec<Complex64>,
}

pub fn resolvent_probe(h: &HermitianBlockMatrix, z: Complex64) -> Result<ResolventProbe> {
    let g = resolvent(h, z)?;
    let diag: Vec<Complex64> = (0..h.dim()).map(|i| g[(i, i)]).collect();
    let m = diag.iter().sum::<Complex64>() / h.dim() as f64;
    Ok(ResolventProbe {
        z,
        m,
        gamma: linalg::max_abs(g.as_ref()).max(1.0),
        diag,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WardReport {
    /// `max_i |Σ_l |G_il|² - Im G_ii/η| / (Im G_ii/η)`.
    pub deviation: f64,
    /// `max_i |S_i^top - S_i^bottom| / (Im G_ii/η)`, where the two sums
    /// run over the upper and lower halves of row `i`. The halves agree
    /// only on average, so this is a diagnostic rather than an identity.
    pub half_imbalance: f64,
}

/// Row-sum Ward identity `Σ_l |G_il|² = Im G_ii / η` for every row.
pub fn ward_check(h: &HermitianBlockMatrix, z: Complex64) -> Result<WardReport> {
    let g = resolvent(h, z)?;
    let (n, eta) = (h.n(), z.im);
    let mut report = WardReport {
        deviation: 0.0,
        half_imbalance: 0.0,
    };
    for i in 0..2 * n {
        let top: f64 = (0..n).map(|l| g[(i, l)].norm_sqr()).sum();
        let bottom: f64 = (n..2 * n).map(|l| g[(i, l)].norm_sqr()).sum();
        let target = g[(i, i)].im / eta;
        report.deviation = report.deviation.max(((top + bottom) - target).abs() / target);
        report.half_imbalance = report.half_imbalance.max((top - bottom).abs() / target);
    }
    Ok(report)
}

/// `dim · max_i |u_α(i)|²` for every eigenvector.
pub fn supnorms(spec: &Spectrum) -> Result<Vec<f64>> {
    let u = spec
        .eigenvectors
        .as_ref()
        .ok_or_else(|| Error::Domain("eigenvectors were not computed".into()))?;
    let dim = u.nrows() as f64;
    Ok((0..u.ncols())
        .map(|a| dim * (0..u.nrows()).map(|i| u[(i, a)].norm_sqr()).fold(0.0, f64::max))
        .collect())
}

/// Worst [`supnorms`] value among eigenvalues in `[lo, hi]`.
pub fn deloc_metric(spec: &Spectrum, lo: f64, hi: f64) -> Result<f64> {
    let norms = supnorms(spec)?;
    spec.eigenvalues
        .iter()
        .zip(&norms)
        .filter(|(l, _)| (lo..=hi).contains(*l))
        .map(|(_, &s)| s)
        .reduce(f64::max)
        .ok_or(Error::EmptyWindow { lo, hi })
}

/// `|Π_k Im m_X(z_k) - Π_k Im m_Y(z_k)|` for paired spectra.
pub fn gfcl_gap(x: &Spectrum, y: &Spectrum, zs: &[Complex64]) -> Result<f64> {
    match (&x.pair_key, &y.pair_key) {
        (Some(a), Some(b)) if a == b => {}
        _ => return Err(Error::Mismatch("spectra do not come from one X/Y configuration pair".into())),
    }
    if x.dim() != y.dim() {
        return Err(Error::Mismatch(format!("dimensions differ: {} vs {}", x.dim(), y.dim())));
    }
    let mut px = 1.0;
    let mut py = 1.0;
    for &z in zs {
        px *= stieltjes(x, z)?.im;
        py *= stieltjes(y, z)?.im;
    }
    Ok((px - py).abs())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandCertificate {
    pub pass: bool,
    /// `max_ij |A^{-1}_ij| / bound_ij`.
    pub worst_ratio: f64,
    pub kappa: f64,
    pub alpha: f64,
}

/// Checks `|A^{-1}_ij| ≤ 2(2L+1) κ α^{(|i-j|-L)_+}` entrywise, with
/// `κ = ‖A‖‖A^{-1}‖` and `α = ((κ-1)/(κ+1))^{2/(2L+1)}`.
///
/// The bound is stated for matrices vanishing at `|i - j| ≥ L`, so a
/// matrix with half-bandwidth `w` (nonzero up to `|i - j| = w`) is
/// certified with `L = w + 1`.
pub fn band_inverse_certificate(a: MatRef<'_, Complex64>, w: usize) -> Result<BandCertificate> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Mismatch("band certificate needs a square matrix".into()));
    }
    for j in 0..n {
        for i in 0..n {
            if i.abs_diff(j) > w && a[(i, j)] != Complex64::new(0.0, 0.0) {
                return Err(Error::Domain(format!("entry ({i}, {j}) lies outside half-bandwidth {w}")));
            }
        }
    }
    let inv = linalg::inverse(a)?;
    let kappa = linalg::norm2(a)? * linalg::norm2(inv.as_ref())?;
    let l = (w + 1) as f64;
    let alpha = ((kappa - 1.0) / (kappa + 1.0)).max(0.0).powf(2.0 / (2.0 * l + 1.0));
    let slack = 1e-12 * linalg::max_abs(inv.as_ref());
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let excess = (i.abs_diff(j) as f64 - l).max(0.0);
            let bound = 2.0 * (2.0 * l + 1.0) * kappa * alpha.powf(excess);
            worst = worst.max(inv[(i, j)].norm() / (bound + slack));
        }
    }
    Ok(BandCertificate {
        pass: worst <= 1.0,
        worst_ratio: worst,
        kappa,
        alpha,
    })
}
