//! Matrix constructions: the orbit matrix `X` and its resampled twin `Y`,
//! their Hermitizations, banded Toeplitz correlation matrices, circulant
//! surrogates, covariance-matched Gaussian blocks and the OU endpoint.

use faer::Mat;
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evalfn::{turn, CorrelationData, FourierSpec};
use crate::linalg::{self, BandCholesky};
use crate::orbit::{self, BitOrbit, MANTISSA_DIGITS};
use crate::rng::{self, Purpose};

/// Below this sup-norm the pseudo-covariance is dropped from Gaussian
/// comparison sampling.
pub const PSI_CUTOFF: f64 = 1e-12;

/// How row `i`, column `j` of `X` map to an orbit shift.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// Row `i` (1-based) covers shifts `2N(i-1)+1 ..= 2N(i-1)+N`, so `N`
    /// shifts are skipped between rows.
    #[default]
    Displayed,
    /// Shift `(2N-1)i + j` with 1-based `i, j`.
    Inline,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    /// Half-dimension: `X` is `N × N`, the Hermitization `2N × 2N`.
    pub n: usize,
    pub spec: FourierSpec,
    /// Resampling window `W`.
    pub window: usize,
    pub seed: u64,
    pub resampled: bool,
    /// Digits per evaluated orbit point (`P`).
    pub precision: usize,
    #[serde(default)]
    pub layout: Layout,
}

impl EnsembleConfig {
    /// Defaults: `W = max(53, ceil(3 log2 N))`, `P = 53`, displayed layout,
    /// no resampling.
    pub fn new(n: usize, spec: FourierSpec, seed: u64) -> Self {
        Self {
            n,
            spec,
            window: orbit::default_window(n),
            seed,
            resampled: false,
            precision: MANTISSA_DIGITS,
            layout: Layout::Displayed,
        }
    }

    pub fn with_window(mut self, w: usize) -> Self {
        self.window = w;
        self
    }

    pub fn with_resampled(mut self, resampled: bool) -> Self {
        self.resampled = resampled;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!("N must be at least 2, got {}", self.n)));
        }
        if self.window < 1 {
            return Err(Error::InvalidConfig("window W must be at least 1".into()));
        }
        if self.precision < MANTISSA_DIGITS {
            return Err(Error::InvalidConfig(format!(
                "precision P must be at least {MANTISSA_DIGITS}, got {}",
                self.precision
            )));
        }
        Ok(())
    }

    /// Orbit shift feeding `X[r][c]` (0-based `r`, `c`).
    pub fn shift_index(&self, r: usize, c: usize) -> usize {
        let n = self.n;
        match self.layout {
            Layout::Displayed => 2 * n * r + c + 1,
            Layout::Inline => (2 * n - 1) * (r + 1) + c + 1,
        }
    }

    /// Largest shift any entry uses: `2N²` bounds both layouts.
    pub fn index_count(&self) -> usize {
        2 * self.n * self.n
    }

    /// `L = 2N² + P`.
    pub fn orbit_len(&self) -> usize {
        self.index_count() + self.precision
    }

    /// SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        linalg::hex(&Sha256::digest(json))
    }

    /// Fingerprint with the resampling flag cleared, shared by an `X`/`Y`
    /// pair.
    pub fn pair_key(&self) -> String {
        self.clone().with_resampled(false).fingerprint()
    }
}

/// Where a block matrix came from.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    /// Set for orbit matrices; equal for `X` and `Y` of the same config.
    pub pair_key: Option<String>,
    pub seed: u64,
}

/// `H = [[0, B], [B*, 0]]`, stored through its `N × N` block `B`.
#[derive(Clone, Debug)]
pub struct HermitianBlockMatrix {
    block: Mat<Complex64>,
    pub provenance: Provenance,
}

impl HermitianBlockMatrix {
    pub fn from_block(block: Mat<Complex64>) -> Result<Self> {
        if block.nrows() != block.ncols() || block.nrows() == 0 {
            return Err(Error::Mismatch(format!("block must be square and nonempty, got {}x{}", block.nrows(), block.ncols())));
        }
        Ok(Self {
            block,
            provenance: Provenance::default(),
        })
    }

    /// Half-dimension `N`.
    pub fn n(&self) -> usize {
        self.block.nrows()
    }

    pub fn dim(&self) -> usize {
        2 * self.n()
    }

    pub fn block(&self) -> &Mat<Complex64> {
        &self.block
    }

    /// Entry of the full `2N × 2N` matrix.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let n = self.n();
        match (i < n, j < n) {
            (true, false) => self.block[(i, j - n)],
            (false, true) => self.block[(j, i - n)].conj(),
            _ => Complex64::new(0.0, 0.0),
        }
    }

    pub fn to_dense(&self) -> Mat<Complex64> {
        Mat::from_fn(self.dim(), self.dim(), |i, j| self.get(i, j))
    }

    pub fn fingerprint(&self) -> String {
        linalg::fingerprint(self.block.as_ref())
    }

    /// `max |H_ij|`.
    pub fn max_entry(&self) -> f64 {
        linalg::max_abs(self.block.as_ref())
    }

    /// `Σ |B_ij|²`, half the squared Frobenius norm of `H`.
    pub fn block_frobenius_sq(&self) -> f64 {
        let mut s = 0.0;
        for j in 0..self.n() {
            for i in 0..self.n() {
                s += self.block[(i, j)].norm_sqr();
            }
        }
        s
    }
}

fn orbit_block(cfg: &EnsembleConfig, value: impl Fn(usize) -> Result<f64>) -> Result<HermitianBlockMatrix> {
    let n = cfg.n;
    let scale = 1.0 / (n as f64).sqrt();
    let mut block = Mat::<Complex64>::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            block[(r, c)] = cfg.spec.evaluate(value(cfg.shift_index(r, c))?) * scale;
        }
    }
    Ok(HermitianBlockMatrix {
        block,
        provenance: Provenance {
            config_hash: cfg.fingerprint(),
            pair_key: Some(cfg.pair_key()),
            seed: cfg.seed,
        },
    })
}

/// `X_ij = f(T^{k(i,j)} x) / √N` on the orbit of `cfg.seed`.
pub fn build_x(cfg: &EnsembleConfig) -> Result<HermitianBlockMatrix> {
    cfg.validate()?;
    let orbit = orbit::sample_orbit(cfg.seed, cfg.orbit_len());
    build_x_on(cfg, &orbit)
}

/// `X` from a given orbit.
pub fn build_x_on(cfg: &EnsembleConfig, orbit: &BitOrbit) -> Result<HermitianBlockMatrix> {
    let cfg = cfg.clone().with_resampled(false);
    orbit_block(&cfg, |k| orbit.shift_value(k, cfg.precision))
}

/// `Y_ij = f(y_{k(i,j)}) / √N`, with `y_k` keeping `W` orbit digits.
pub fn build_y(cfg: &EnsembleConfig) -> Result<HermitianBlockMatrix> {
    cfg.validate()?;
    let orbit = orbit::sample_orbit(cfg.seed, cfg.orbit_len());
    build_y_on(cfg, &orbit)
}

/// `Y` from a given orbit; fresh digits are drawn from `cfg.seed`.
pub fn build_y_on(cfg: &EnsembleConfig, orbit: &BitOrbit) -> Result<HermitianBlockMatrix> {
    let cfg = cfg.clone().with_resampled(true);
    let y = orbit::resample(orbit, cfg.window, cfg.index_count(), cfg.seed)?;
    orbit_block(&cfg, |k| y.value(k, cfg.precision))
}

/// `X` or `Y` according to `cfg.resampled`.
pub fn build(cfg: &EnsembleConfig) -> Result<HermitianBlockMatrix> {
    if cfg.resampled {
        build_y(cfg)
    } else {
        build_x(cfg)
    }
}

/// `X` and `Y` over one shared orbit.
pub fn build_pair(cfg: &EnsembleConfig) -> Result<(HermitianBlockMatrix, HermitianBlockMatrix)> {
    cfg.validate()?;
    let orbit = orbit::sample_orbit(cfg.seed, cfg.orbit_len());
    Ok((build_x_on(cfg, &orbit)?, build_y_on(cfg, &orbit)?))
}

/// Toeplitz matrix `T_ij = t(i - j)` restricted to `|i - j| ≤ w`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandedToeplitz {
    n: usize,
    w: usize,
    /// `t(d)` for `d = -w ..= w`.
    values: Vec<Complex64>,
}

impl BandedToeplitz {
    pub fn new(n: usize, w: usize, t: impl Fn(i64) -> Complex64) -> Self {
        let w = w.min(n.saturating_sub(1));
        let values = (-(w as i64)..=w as i64).map(t).collect();
        Self { n, w, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.w
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let d = i as i64 - j as i64;
        if d.unsigned_abs() as usize > self.w {
            Complex64::new(0.0, 0.0)
        } else {
            self.values[(d + self.w as i64) as usize]
        }
    }

    pub fn to_dense(&self) -> Mat<Complex64> {
        Mat::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Ascending eigenvalues; only meaningful for Hermitian symbols.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::hermitian_eigenvalues(self.to_dense().as_ref())
    }
}

/// `Φ^N_ij = φ(i - j)` for `|i - j| ≤ W`.
pub fn build_phi_n(data: &CorrelationData, n: usize, w: usize) -> Result<BandedToeplitz> {
    if w > n {
        return Err(Error::Domain(format!("band width {w} exceeds matrix size {n}")));
    }
    Ok(BandedToeplitz::new(n, w, |d| data.phi(d)))
}

/// `Ψ^N_ij = ψ(i - j)` for `|i - j| ≤ W` (complex symmetric).
pub fn build_psi_n(data: &CorrelationData, n: usize, w: usize) -> Result<BandedToeplitz> {
    if w > n {
        return Err(Error::Domain(format!("band width {w} exceeds matrix size {n}")));
    }
    Ok(BandedToeplitz::new(n, w, |d| data.psi(d)))
}

/// Untruncated `A^N_ij = φ(i - j)`.
pub fn build_full_toeplitz(data: &CorrelationData, n: usize) -> BandedToeplitz {
    BandedToeplitz::new(n, n, |d| data.phi(d))
}

/// Sorted eigenvalues `ẽ_k = Σ_{|j|≤W} φ(j) e^{2πikj/N}` of the circulant
/// obtained by wrapping the band of `Φ^N` around the torus.
pub fn circulant_eigs(data: &CorrelationData, n: usize, w: usize) -> Result<Vec<f64>> {
    if 2 * w >= n {
        return Err(Error::Domain(format!("circulant wrap needs 2W < N, got W={w}, N={n}")));
    }
    let mut e: Vec<f64> = (0..n)
        .map(|k| {
            let mut s = data.phi(0).re;
            for j in 1..=w {
                s += 2.0 * (data.phi(j as i64) * turn((k * j) as f64 / n as f64)).re;
            }
            s
        })
        .collect();
    e.sort_by(f64::total_cmp);
    Ok(e)
}

/// Smallest `r` with `c_{j-r} ≤ e_j ≤ c_{j+r}` for all `j` (out-of-range
/// bounds are vacuous), up to an absolute slack `tol`.
pub fn interlacing_offset(circulant: &[f64], eigenvalues: &[f64], tol: f64) -> usize {
    let n = circulant.len().min(eigenvalues.len());
    (0..n)
        .find(|&r| {
            (0..n).all(|j| {
                let lower = j.checked_sub(r).map_or(true, |i| circulant[i] <= eigenvalues[j] + tol);
                let upper = circulant.get(j + r).map_or(true, |&c| eigenvalues[j] <= c + tol);
                lower && upper
            })
        })
        .unwrap_or(n)
}

/// Factor of the real covariance of one Gaussian comparison row.
///
/// Coordinates are interleaved `(Re b_1, Im b_1, Re b_2, ...)`; the
/// covariance is built from `C_jl = φ(l - j)` and `P_jl = ψ(l - j)`
/// truncated at `|l - j| ≤ W`.
pub fn comparison_row_factor(data: &CorrelationData, n: usize, w: usize) -> Result<BandCholesky> {
    let use_psi = data.psi_norm() > PSI_CUTOFF;
    let entry = |a: usize, b: usize| -> f64 {
        let (j, l) = (a / 2, b / 2);
        let d = l as i64 - j as i64;
        if d.unsigned_abs() as usize > w {
            return 0.0;
        }
        let c = data.phi(d);
        let p = if use_psi { data.psi(d) } else { Complex64::new(0.0, 0.0) };
        match (a % 2, b % 2) {
            (0, 0) => (c + p).re / 2.0,
            (1, 1) => (c - p).re / 2.0,
            (1, 0) => (c + p).im / 2.0,
            _ => (p - c).im / 2.0,
        }
    };
    BandCholesky::factor(2 * n, 2 * w + 1, entry)
}

/// Gaussian block with independent rows, each a stationary complex
/// Gaussian sequence with `N E[b_j conj b_l] = φ(l - j)` and
/// `N E[b_j b_l] = ψ(l - j)` up to lag `W`.
pub fn build_gaussian_comparison(data: &CorrelationData, n: usize, w: usize, seed: u64) -> Result<HermitianBlockMatrix> {
    let factor = comparison_row_factor(data, n, w.min(n - 1))?;
    let block = sample_rows(&factor, n, seed);
    Ok(HermitianBlockMatrix {
        block,
        provenance: Provenance {
            config_hash: String::new(),
            pair_key: None,
            seed,
        },
    })
}

/// One block of rows drawn through a precomputed row factor.
pub fn sample_rows(factor: &BandCholesky, n: usize, seed: u64) -> Mat<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    let mut block = Mat::<Complex64>::zeros(n, n);
    for r in 0..n {
        let mut g = rng::stream(seed, Purpose::Gaussian, r as u64);
        let xi: Vec<f64> = (0..2 * n).map(|_| StandardNormal.sample(&mut g)).collect();
        let y = factor.mul(&xi);
        for c in 0..n {
            block[(r, c)] = Complex64::new(y[2 * c], y[2 * c + 1]) * scale;
        }
    }
    block
}

/// Exact law of the OU flow at time `t`:
/// `H(t) = e^{-t/2} H(0) + √(1 - e^{-t}) G`, with `G` a fresh Gaussian
/// comparison matrix. `t = ∞` is allowed.
pub fn ou_interpolate(h0: &HermitianBlockMatrix, data: &CorrelationData, w: usize, t: f64, seed: u64) -> Result<HermitianBlockMatrix> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("flow time must be nonnegative, got {t}")));
    }
    let n = h0.n();
    let g = build_gaussian_comparison(data, n, w, seed)?;
    let a = (-t / 2.0).exp();
    let b = (-(-t).exp_m1()).sqrt();
    let block = Mat::from_fn(n, n, |i, j| h0.block[(i, j)] * a + g.block[(i, j)] * b);
    Ok(HermitianBlockMatrix {
        block,
        provenance: h0.provenance.clone(),
    })
}
