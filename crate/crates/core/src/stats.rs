//! Local spectral statistics: unfolding, nearest-neighbour spacings, gap
//! ratios, Kolmogorov–Smirnov distances and the GUE reference sampler.

use faer::Mat;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::spectral::{decompose_dense, Spectrum};

/// Minimum limiting density accepted inside an unfolding window.
pub const EPS_BULK: f64 = 0.05;
/// Minimum pooled gap count for ratio and histogram statistics.
pub const MIN_GAPS: usize = 1000;
/// Mean gap ratio of independent points, `2 ln 2 - 1`.
pub const POISSON_MEAN_RATIO: f64 = 0.386_294_361_119_890_6;

/// A density tabulated on an ascending grid, linearly interpolated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityTable {
    pub energies: Vec<f64>,
    pub rho: Vec<f64>,
    cumulative: Vec<f64>,
}

impl DensityTable {
    pub fn new(energies: Vec<f64>, rho: Vec<f64>) -> Result<Self> {
        if energies.len() != rho.len() || energies.len() < 2 {
            return Err(Error::Mismatch(format!("density grid has {} points and {} values", energies.len(), rho.len())));
        }
        if energies.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::Domain("density grid must be strictly increasing".into()));
        }
        let mut cumulative = vec![0.0; energies.len()];
        for i in 1..energies.len() {
            cumulative[i] = cumulative[i - 1] + 0.5 * (rho[i] + rho[i - 1]) * (energies[i] - energies[i - 1]);
        }
        Ok(Self { energies, rho, cumulative })
    }

    /// Tabulates `f` on `n` equispaced points of `[lo, hi]`.
    pub fn from_fn(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = (hi - lo) / (n.max(2) - 1) as f64;
        let es: Vec<f64> = (0..n.max(2)).map(|i| lo + i as f64 * h).collect();
        let rho = es.iter().map(|&e| f(e)).collect();
        Self::new(es, rho)
    }

    fn locate(&self, e: f64) -> Option<(usize, f64)> {
        let n = self.energies.len();
        if e < self.energies[0] || e > self.energies[n - 1] {
            return None;
        }
        let i = self.energies.partition_point(|&x| x <= e).clamp(1, n - 1) - 1;
        Some((i, e - self.energies[i]))
    }

    /// Interpolated density, zero off the grid.
    pub fn at(&self, e: f64) -> f64 {
        match self.locate(e) {
            Some((i, t)) => {
                let h = self.energies[i + 1] - self.energies[i];
                self.rho[i] + (self.rho[i + 1] - self.rho[i]) * t / h
            }
            None => 0.0,
        }
    }

    /// `∫_{E_0}^{e} ρ` of the interpolant.
    pub fn cdf(&self, e: f64) -> f64 {
        match self.locate(e) {
            Some((i, t)) => {
                let h = self.energies[i + 1] - self.energies[i];
                self.cumulative[i] + self.rho[i] * t + (self.rho[i + 1] - self.rho[i]) * t * t / (2.0 * h)
            }
            None if e < self.energies[0] => 0.0,
            None => *self.cumulative.last().unwrap(),
        }
    }

    pub fn total_mass(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Smallest grid-resolved `e` with `cdf(e) ≥ p · total_mass`.
    pub fn quantile(&self, p: f64) -> f64 {
        let target = p * self.total_mass();
        let (mut lo, mut hi) = (self.energies[0], *self.energies.last().unwrap());
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// Smallest density on `[lo, hi]` (grid points and endpoints) and
    /// where it occurs.
    pub fn min_on(&self, lo: f64, hi: f64) -> (f64, f64) {
        let mut best = (self.at(lo), lo);
        let hi_val = self.at(hi);
        if hi_val < best.0 {
            best = (hi_val, hi);
        }
        for (&e, &r) in self.energies.iter().zip(&self.rho) {
            if e > lo && e < hi && r < best.0 {
                best = (r, e);
            }
        }
        best
    }
}

/// Central 40% of the mass, shrunk until the density is at least
/// `EPS_BULK` throughout.
pub fn bulk_window(density: &DensityTable) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (density.quantile(0.3), density.quantile(0.7));
    for _ in 0..10_000 {
        let (r, at) = density.min_on(lo, hi);
        if r >= EPS_BULK {
            return Ok((lo, hi));
        }
        let step = 1e-3 * (hi - lo);
        if at - lo < hi - at {
            lo += step;
        } else {
            hi -= step;
        }
        if hi <= lo {
            break;
        }
    }
    Err(Error::OutsideBulk {
        energy: 0.5 * (lo + hi),
        density: density.at(0.5 * (lo + hi)),
        threshold: EPS_BULK,
    })
}

/// Bulk eigenvalues of several spectra mapped to unit mean spacing,
/// kept per trial so spacings never straddle two spectra.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnfoldedSample {
    pub window: (f64, f64),
    pub energies: Vec<Vec<f64>>,
    pub unfolded: Vec<Vec<f64>>,
}

impl UnfoldedSample {
    pub fn trials(&self) -> usize {
        self.unfolded.len()
    }

    pub fn spacings(&self) -> Vec<f64> {
        self.unfolded.iter().flat_map(|u| u.windows(2).map(|p| p[1] - p[0])).collect()
    }

    pub fn mean_spacing(&self) -> f64 {
        let s = self.spacings();
        s.iter().sum::<f64>() / s.len().max(1) as f64
    }

    /// One unfolded sequence per trial, for samples built elsewhere.
    pub fn from_sequences(window: (f64, f64), unfolded: Vec<Vec<f64>>) -> Self {
        Self {
            window,
            energies: unfolded.clone(),
            unfolded,
        }
    }
}

/// `λ ↦ dim · ∫_{E_lo}^{λ} ρ` for every eigenvalue in the window.
pub fn unfold(spectra: &[Spectrum], window: (f64, f64), density: &DensityTable) -> Result<UnfoldedSample> {
    let (lo, hi) = window;
    if !(hi > lo) {
        return Err(Error::Domain(format!("empty unfolding window [{lo}, {hi}]")));
    }
    let (r, at) = density.min_on(lo, hi);
    if r < EPS_BULK {
        return Err(Error::OutsideBulk {
            energy: at,
            density: r,
            threshold: EPS_BULK,
        });
    }
    let base = density.cdf(lo);
    let mut energies = Vec::with_capacity(spectra.len());
    let mut unfolded = Vec::with_capacity(spectra.len());
    for s in spectra {
        let dim = s.dim() as f64;
        let e: Vec<f64> = s.eigenvalues.iter().copied().filter(|l| (lo..=hi).contains(l)).collect();
        unfolded.push(e.iter().map(|&l| dim * (density.cdf(l) - base)).collect());
        energies.push(e);
    }
    Ok(UnfoldedSample {
        window,
        energies,
        unfolded,
    })
}

/// `r̃ = min(s_α, s_{α+1}) / max(s_α, s_{α+1})` over consecutive spacings
/// within each trial.
pub fn gap_ratios(sample: &UnfoldedSample) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for u in &sample.unfolded {
        let s: Vec<f64> = u.windows(2).map(|p| p[1] - p[0]).collect();
        out.extend(s.windows(2).map(|p| {
            let (a, b) = (p[0].min(p[1]), p[0].max(p[1]));
            if b > 0.0 {
                a / b
            } else {
                1.0
            }
        }));
    }
    if out.len() < MIN_GAPS {
        return Err(Error::TooFewSamples {
            needed: MIN_GAPS,
            got: out.len(),
        });
    }
    Ok(out)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
    pub count: usize,
}

impl Histogram {
    /// Equal-width bins on `[lo, hi]`; values outside are clamped into the
    /// end bins so the mass is 1.
    pub fn new(values: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Self> {
        if bins == 0 || !(hi > lo) {
            return Err(Error::Domain(format!("bad histogram range [{lo}, {hi}] with {bins} bins")));
        }
        if values.is_empty() {
            return Err(Error::TooFewSamples { needed: 1, got: 0 });
        }
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        for &v in values {
            let b = ((v - lo) / width).floor();
            counts[(b.max(0.0) as usize).min(bins - 1)] += 1;
        }
        let n = values.len() as f64;
        Ok(Self {
            edges: (0..=bins).map(|i| lo + i as f64 * width).collect(),
            density: counts.iter().map(|&c| c as f64 / (n * width)).collect(),
            count: values.len(),
        })
    }

    pub fn mass(&self) -> f64 {
        self.density.iter().zip(self.edges.windows(2)).map(|(d, e)| d * (e[1] - e[0])).sum()
    }

    /// CSV rows `bin_lo, bin_hi, density`.
    pub fn rows(&self) -> Vec<[f64; 3]> {
        self.edges.windows(2).zip(&self.density).map(|(e, &d)| [e[0], e[1], d]).collect()
    }
}

/// Normalized histogram of consecutive unfolded spacings on `[0, s_max]`.
pub fn spacing_histogram(sample: &UnfoldedSample, bins: usize, s_max: f64) -> Result<Histogram> {
    let s = sample.spacings();
    if s.len() < MIN_GAPS {
        return Err(Error::TooFewSamples {
            needed: MIN_GAPS,
            got: s.len(),
        });
    }
    Histogram::new(&s, bins, 0.0, s_max)
}

/// `sup_x |F_n(x) - F(x)|` against a continuous reference CDF.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    Ok(v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (((i + 1) as f64 / n) - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max))
}

/// Two-sample `sup_x |F_a(x) - F_b(x)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (na, nb) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < x.len() && j < y.len() {
        let t = x[i].min(y[j]);
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Spectra of `trials` GUE matrices of dimension `n`, normalized so the
/// limiting law is the semicircle on `[-2, 2]`.
pub fn gue_oracle(n: usize, trials: usize, seed: u64) -> Result<Vec<Spectrum>> {
    if n < 32 {
        return Err(Error::Domain(format!("GUE oracle needs N ≥ 32, got {n}")));
    }
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut g = rng::stream(rng::trial_seed(seed, t as u64), Purpose::Oracle, 0);
            let off = (0.5 / n as f64).sqrt();
            let diag = (1.0 / n as f64).sqrt();
            let mut a = Mat::<Complex64>::zeros(n, n);
            for j in 0..n {
                let x: f64 = StandardNormal.sample(&mut g);
                a[(j, j)] = Complex64::new(x * diag, 0.0);
                for i in j + 1..n {
                    let re: f64 = StandardNormal.sample(&mut g);
                    let im: f64 = StandardNormal.sample(&mut g);
                    let z = Complex64::new(re, im) * off;
                    a[(i, j)] = z;
                    a[(j, i)] = z.conj();
                }
            }
            decompose_dense(a.as_ref(), false)
        })
        .collect()
}

/// Diagonal matrix with i.i.d. semicircle entries: independent
/// eigenvalues (Poisson local statistics) and standard-basis
/// eigenvectors (complete localization).
pub fn diagonal_control(dim: usize, seed: u64, want_vectors: bool) -> Spectrum {
    let mut g = rng::stream(seed, Purpose::Control, 0);
    let vals: Vec<f64> = (0..dim)
        .map(|_| {
            let (u, v): (f64, f64) = (g.gen(), g.gen());
            2.0 * u.sqrt() * (std::f64::consts::TAU * v).cos()
        })
        .collect();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let eigenvectors = want_vectors.then(|| Mat::from_fn(dim, dim, |i, k| if i == order[k] { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }));
    Spectrum {
        eigenvalues: order.iter().map(|&i| vals[i]).collect(),
        eigenvectors,
        source_hash: String::new(),
        pair_key: None,
    }
}

/// Summary statistics of one unfolded ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub trials: usize,
    pub window: (f64, f64),
    pub eigenvalue_count: usize,
    pub gap_count: usize,
    pub mean_gap_ratio: f64,
    pub mean_spacing: f64,
    pub histogram: Histogram,
    /// Two-sample KS distance of the spacings to a reference sample.
    pub ks_vs_reference: Option<f64>,
}

pub fn report(sample: &UnfoldedSample, bins: usize, s_max: f64, reference_spacings: Option<&[f64]>) -> Result<StatReport> {
    let ratios = gap_ratios(sample)?;
    let spacings = sample.spacings();
    Ok(StatReport {
        trials: sample.trials(),
        window: sample.window,
        eigenvalue_count: sample.unfolded.iter().map(Vec::len).sum(),
        gap_count: ratios.len(),
        mean_gap_ratio: mean(&ratios),
        mean_spacing: mean(&spacings),
        histogram: spacing_histogram(sample, bins, s_max)?,
        ks_vs_reference: reference_spacings.map(|r| ks_two_sample(&spacings, r)).transpose()?,
    })
}
