//! The scalar self-consistent equation `m = F(m)`,
//! `F(w) = -∫ dρ(x) / (w x + z)`, where `ρ` is the distribution of the
//! symbol values (limit) or of the eigenvalues of `Φ^N` (finite `N`).
//!
//! Its solution `m(z)` is the limiting normalized trace of the resolvent
//! of the Hermitization; `ρ = 1` recovers the semicircle law.

use faer::Mat;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ensemble::{build_phi_n, BandedToeplitz};
use crate::error::{Error, Result};
use crate::evalfn::{CorrelationData, FourierSpec};
use crate::linalg;
use crate::rng::{self, Purpose};

/// Residual tolerance `|m - F(m)|` for an accepted solution.
pub const TAU_SCE: f64 = 1e-12;
/// Iteration cap per solve.
pub const MAX_ITERATIONS: usize = 10_000;
/// Default imaginary part used for Stieltjes inversion.
pub const ETA_INV: f64 = 1e-5;
/// Default number of quadrature nodes for symbol measures.
pub const SYMBOL_GRID: usize = 4096;
/// Undamped iterations run after the damped step stalls.
const PLAIN_BURST: usize = 200;

/// Semicircle Stieltjes transform `(-z + √(z² - 4))/2`, branch with
/// `Im m > 0` for `Im z > 0`.
pub fn semicircle_m(z: Complex64) -> Complex64 {
    let r = (z * z - 4.0).sqrt();
    let a = (-z + r) / 2.0;
    if a.im >= 0.0 {
        a
    } else {
        (-z - r) / 2.0
    }
}

/// `√(4 - E²) / 2π` on `[-2, 2]`.
pub fn semicircle_density(e: f64) -> f64 {
    if e.abs() >= 2.0 {
        0.0
    } else {
        (4.0 - e * e).sqrt() / (2.0 * std::f64::consts::PI)
    }
}

/// Distribution function of the semicircle on `[-2, 2]`.
pub fn semicircle_cdf(e: f64) -> f64 {
    let x = e.clamp(-2.0, 2.0) / 2.0;
    0.5 + (x * (1.0 - x * x).sqrt() + x.asin()) / std::f64::consts::PI
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    SymbolIntegral,
    FiniteEigenvalues,
}

/// A probability measure on `[0, ∞)` stored as weighted atoms. Symbol
/// measures use the equispaced rule on the torus (exponentially accurate
/// for trigonometric polynomials); duplicate atoms are merged.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralMeasure {
    pub kind: MeasureKind,
    atoms: Vec<(f64, f64)>,
}

impl SpectralMeasure {
    fn from_samples(kind: MeasureKind, mut xs: Vec<f64>) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::TooFewSamples { needed: 1, got: 0 });
        }
        if let Some(bad) = xs.iter().find(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("measure atom {bad} is not finite")));
        }
        xs.sort_by(f64::total_cmp);
        let w = 1.0 / xs.len() as f64;
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        for x in xs {
            match atoms.last_mut() {
                Some(last) if last.0 == x => last.1 += w,
                _ => atoms.push((x, w)),
            }
        }
        Ok(Self { kind, atoms })
    }

    /// Law of `g_f(x)` for uniform `x`, sampled at `grid` nodes.
    pub fn from_symbol(spec: &FourierSpec, grid: usize) -> Result<Self> {
        let xs = (0..grid).map(|i| spec.symbol_g(i as f64 / grid as f64)).collect();
        Self::from_samples(MeasureKind::SymbolIntegral, xs)
    }

    /// Law of `φ(0) + 2 Re Σ φ(j) e^{2πijx}`, sampled at `grid` nodes.
    pub fn from_correlations(data: &CorrelationData, grid: usize) -> Result<Self> {
        let xs = (0..grid).map(|i| data.symbol_series(i as f64 / grid as f64)).collect();
        Self::from_samples(MeasureKind::SymbolIntegral, xs)
    }

    /// Empirical eigenvalue distribution.
    pub fn from_eigenvalues(values: Vec<f64>) -> Result<Self> {
        Self::from_samples(MeasureKind::FiniteEigenvalues, values)
    }

    /// Eigenvalue distribution of `Φ^N` with band `w`.
    pub fn from_toeplitz(data: &CorrelationData, n: usize, w: usize) -> Result<Self> {
        Self::from_eigenvalues(build_phi_n(data, n, w)?.eigenvalues()?)
    }

    /// Point mass at `s2`.
    pub fn point_mass(s2: f64) -> Result<Self> {
        Self::from_samples(MeasureKind::SymbolIntegral, vec![s2])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|(x, w)| x * w).sum()
    }

    pub fn support(&self) -> (f64, f64) {
        (self.atoms[0].0, self.atoms[self.atoms.len() - 1].0)
    }

    /// `∫ dρ(x)/(x - w)`.
    pub fn m_measure(&self, w: Complex64) -> Result<Complex64> {
        if w.im == 0.0 {
            return Err(Error::Domain(format!("m_measure needs a non-real argument, got {w}")));
        }
        Ok(self.atoms.iter().map(|&(x, wt)| wt / (x - w)).sum())
    }

    /// `(F(m), F'(m))`.
    fn map(&self, m: Complex64, z: Complex64) -> (Complex64, Complex64) {
        let mut f = Complex64::new(0.0, 0.0);
        let mut fp = Complex64::new(0.0, 0.0);
        for &(x, wt) in &self.atoms {
            let d = 1.0 / (m * x + z);
            f -= wt * d;
            fp += wt * x * d * d;
        }
        (f, fp)
    }

    /// `(∫ x dρ/|mx+z|², ∫ dρ/|mx+z|²)`.
    pub fn imaginary_part_weights(&self, m: Complex64, z: Complex64) -> (f64, f64) {
        let mut a = 0.0;
        let mut b = 0.0;
        for &(x, wt) in &self.atoms {
            let d = (m * x + z).norm_sqr();
            a += wt * x / d;
            b += wt / d;
        }
        (a, b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub m: Complex64,
    pub residual: f64,
    pub iterations: usize,
}

/// Iterates `m = F(m) + eps` from `m0`.
///
/// Each step first tries the Newton update for `m - F(m) - eps`; if that
/// leaves the upper half plane or fails to lower the residual, it falls
/// back to a damped step `m + β(F(m) + eps - m)` with `β` starting at the
/// derivative-informed relaxation `Re a / |a|²`, `a = 1 - F'(m)`, clipped
/// to `(0, 1]` and halved until the residual drops. If no step lowers the
/// residual, it runs `PLAIN_BURST` undamped iterations first.
fn iterate(meas: &SpectralMeasure, z: Complex64, m0: Complex64, eps: Complex64, cap: usize) -> Result<FixedPoint> {
    let mut m = if m0.im > 0.0 && m0.is_finite() { m0 } else { Complex64::new(m0.re, z.im.max(1e-3)) };
    let residual = |m: Complex64| {
        let (f, _) = meas.map(m, z);
        (m - f - eps).norm()
    };
    let mut best = (m, f64::INFINITY);
    let mut plain = 0usize;
    for it in 0..=cap {
        let (f, fp) = meas.map(m, z);
        let r = m - f - eps;
        let res = r.norm();
        if res < best.1 {
            best = (m, res);
        }
        if res <= TAU_SCE {
            return Ok(FixedPoint {
                m,
                residual: res,
                iterations: it,
            });
        }
        if it == cap {
            break;
        }
        let target = f + eps;
        if plain > 0 && target.im > 0.0 {
            plain -= 1;
            m = target;
            continue;
        }
        let a = 1.0 - fp;
        let newton = m - r / a;
        if newton.im > 0.0 && newton.is_finite() && residual(newton) < res {
            m = newton;
            continue;
        }
        let mut beta = if a.re > 0.0 { (a.re / a.norm_sqr()).min(1.0) } else { 1.0 };
        let mut next = None;
        for _ in 0..60 {
            let cand = m + (target - m) * beta;
            if cand.im > 0.0 && residual(cand) < res {
                next = Some(cand);
                break;
            }
            beta *= 0.5;
        }
        match next {
            Some(c) => m = c,
            // Stuck at a local minimum of |m - F(m)|: the undamped map
            // contracts in the hyperbolic metric, so run it for a while.
            None if target.im > 0.0 => {
                m = target;
                plain = PLAIN_BURST;
            }
            None => break,
        }
    }
    Err(Error::NonConvergence {
        z,
        best: best.0,
        residual: best.1,
        iterations: cap,
    })
}

/// Starting point: the semicircle transform rescaled to the measure's
/// mean for moderate `|z|`, `-1/z` far out.
fn initial_guess(meas: &SpectralMeasure, z: Complex64) -> Complex64 {
    let s2 = meas.mean().max(1e-12);
    if z.norm() > 10.0 * (1.0 + s2.sqrt()) {
        -1.0 / z
    } else {
        let s = s2.sqrt();
        semicircle_m(z / s) / s
    }
}

/// Solves `m = F(m)` at `z`, by continuation in `Im z` from `η = √mean`
/// down in factors of 4 when `Im z` is smaller.
pub fn solve_fixed_point(meas: &SpectralMeasure, z: Complex64) -> Result<FixedPoint> {
    if !(z.im > 0.0) {
        return Err(Error::Domain(format!("solve_fixed_point needs Im z > 0, got {z}")));
    }
    let scale = meas.mean().sqrt().max(1e-6);
    let mut eta_stages = Vec::new();
    let mut eta = scale;
    while eta > z.im {
        eta_stages.push(eta);
        eta *= 0.25;
    }
    eta_stages.push(z.im);
    let mut m = initial_guess(meas, Complex64::new(z.re, eta_stages[0]));
    let mut total = 0;
    for &eta in &eta_stages {
        let stage = iterate(meas, Complex64::new(z.re, eta), m, Complex64::new(0.0, 0.0), MAX_ITERATIONS - total.min(MAX_ITERATIONS - 1))
            .map_err(|e| match e {
                Error::NonConvergence { best, residual, .. } => Error::NonConvergence {
                    z,
                    best,
                    residual,
                    iterations: MAX_ITERATIONS,
                },
                other => other,
            })?;
        total += stage.iterations;
        m = stage.m;
    }
    let residual = {
        let (f, _) = meas.map(m, z);
        (m - f).norm()
    };
    Ok(FixedPoint {
        m,
        residual,
        iterations: total,
    })
}

/// Solves from a warm start, without continuation.
pub fn solve_from(meas: &SpectralMeasure, z: Complex64, start: Complex64) -> Result<FixedPoint> {
    if !(z.im > 0.0) {
        return Err(Error::Domain(format!("solve_from needs Im z > 0, got {z}")));
    }
    iterate(meas, z, start, Complex64::new(0.0, 0.0), MAX_ITERATIONS)
}

/// Solutions on a grid of `z`, in order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceSolution {
    pub z: Vec<Complex64>,
    pub m: Vec<Complex64>,
    pub residual: Vec<f64>,
    pub iterations: Vec<usize>,
}

#[derive(Serialize)]
pub struct SceRecord {
    pub z: [f64; 2],
    pub m: [f64; 2],
    pub residual: f64,
    pub iterations: usize,
}

impl SceSolution {
    pub fn records(&self) -> Vec<SceRecord> {
        (0..self.z.len())
            .map(|i| SceRecord {
                z: [self.z[i].re, self.z[i].im],
                m: [self.m[i].re, self.m[i].im],
                residual: self.residual[i],
                iterations: self.iterations[i],
            })
            .collect()
    }
}

/// Solves along a path of `z` values, warm-starting each point from its
/// predecessor and falling back to a cold continuation solve.
pub fn solve_path(meas: &SpectralMeasure, zs: &[Complex64]) -> Result<SceSolution> {
    let mut out = SceSolution {
        z: Vec::with_capacity(zs.len()),
        m: Vec::with_capacity(zs.len()),
        residual: Vec::with_capacity(zs.len()),
        iterations: Vec::with_capacity(zs.len()),
    };
    let mut prev: Option<Complex64> = None;
    for &z in zs {
        let fp = match prev.map(|m| solve_from(meas, z, m)) {
            Some(Ok(fp)) => fp,
            _ => solve_fixed_point(meas, z)?,
        };
        prev = Some(fp.m);
        out.z.push(z);
        out.m.push(fp.m);
        out.residual.push(fp.residual);
        out.iterations.push(fp.iterations);
    }
    Ok(out)
}

/// `ρ(E) = Im m(E + iη)/π`, clipped at zero.
pub fn density(meas: &SpectralMeasure, energies: &[f64], eta: f64) -> Result<Vec<f64>> {
    Ok(density_solution(meas, energies, eta)?
        .m
        .iter()
        .map(|m| (m.im / std::f64::consts::PI).max(0.0))
        .collect())
}

/// The path solution behind [`density`].
pub fn density_solution(meas: &SpectralMeasure, energies: &[f64], eta: f64) -> Result<SceSolution> {
    if !(eta > 0.0) {
        return Err(Error::Domain(format!("inversion height must be positive, got {eta}")));
    }
    let zs: Vec<Complex64> = energies.iter().map(|&e| Complex64::new(e, eta)).collect();
    solve_path(meas, &zs)
}

/// Draws a point of the a-priori domain
/// `|w| ≤ 1/Im z`, `Im w ≥ Im z / (C/Im z + |z|)²`, with `C` the top of
/// the support.
pub fn random_start<R: Rng>(meas: &SpectralMeasure, z: Complex64, rng: &mut R) -> Complex64 {
    let r = 1.0 / z.im;
    let c = meas.support().1.max(1e-12);
    let lo = z.im / (c / z.im + z.norm()).powi(2);
    let im = rng.gen_range(lo..r.max(lo * (1.0 + 1e-9)));
    let span = (r * r - im * im).max(0.0).sqrt();
    let re = if span > 0.0 { rng.gen_range(-span..span) } else { 0.0 };
    Complex64::new(re, im)
}

/// Largest distance between the continuation solution and solutions
/// started from `restarts` random points of the a-priori domain.
pub fn uniqueness_spread(meas: &SpectralMeasure, z: Complex64, restarts: usize, seed: u64) -> Result<f64> {
    let base = solve_fixed_point(meas, z)?;
    let mut rng = rng::stream(seed, Purpose::Restart, 0);
    let mut spread = 0.0f64;
    for _ in 0..restarts {
        let start = random_start(meas, z, &mut rng);
        let sol = solve_from(meas, z, start)?;
        spread = spread.max((sol.m - base.m).norm());
    }
    Ok(spread)
}

/// `|T - T₀|/|ε|` for the perturbed equation `T = F(T) + ε`, warm-started
/// at the unperturbed solution `T₀`. `ε = 0` reports 0.
pub fn stability_probe(meas: &SpectralMeasure, z: Complex64, eps: &[Complex64]) -> Result<Vec<f64>> {
    let base = solve_fixed_point(meas, z)?;
    eps.iter()
        .map(|&e| {
            if e == Complex64::new(0.0, 0.0) {
                return Ok(0.0);
            }
            let t = iterate(meas, z, base.m, e, MAX_ITERATIONS)?;
            Ok((t.m - base.m).norm() / e.norm())
        })
        .collect()
}

/// `|M_N(z) - m(z)|` per `N`, where `M_N` solves the equation for the
/// eigenvalue law of `Φ^N` and `m` for the symbol law. `Φ^N` is built
/// with band `J_max`, so it equals the untruncated Toeplitz matrix.
pub fn toeplitz_limit_gap(data: &CorrelationData, ns: &[usize], z: Complex64, grid: usize) -> Result<Vec<f64>> {
    let limit = solve_fixed_point(&SpectralMeasure::from_correlations(data, grid)?, z)?.m;
    ns.iter()
        .map(|&n| {
            let w = data.j_max().min(n - 1);
            let m_n = solve_fixed_point(&SpectralMeasure::from_toeplitz(data, n, w)?, z)?.m;
            Ok((m_n - limit).norm())
        })
        .collect()
}

/// `Φ^N m + z`.
pub fn block_system(phi: &BandedToeplitz, z: Complex64, m: Complex64) -> Mat<Complex64> {
    let mut a = phi.to_dense();
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            a[(i, j)] *= m;
        }
        a[(j, j)] += z;
    }
    a
}

/// `-(Φ^N m + z)^{-1}`, the deterministic approximation of the lower
/// block of the resolvent. The upper block is approximated by `m · I`.
pub fn deterministic_block(data: &CorrelationData, n: usize, w: usize, z: Complex64, m: Complex64) -> Result<Mat<Complex64>> {
    if !(m.im > 0.0 && z.im > 0.0) {
        return Err(Error::Domain(format!("deterministic block needs Im m, Im z > 0 (m = {m}, z = {z})")));
    }
    let a = block_system(&build_phi_n(data, n, w)?, z, m);
    let mut inv = linalg::inverse(a.as_ref())?;
    for j in 0..n {
        for i in 0..n {
            inv[(i, j)] = -inv[(i, j)];
        }
    }
    Ok(inv)
}
