//! The experiments behind each subcommand, as plain functions returning
//! data. Trials run on the current rayon pool; results are collected in
//! trial order, so output never depends on the pool width.

use dynrmt::ensemble::{self, HermitianBlockMatrix};
use dynrmt::rng::trial_seed;
use dynrmt::sce::{self, semicircle_density, SceSolution, SpectralMeasure, SYMBOL_GRID};
use dynrmt::spectral::{self, Spectrum};
use dynrmt::stats::{self, DensityTable, StatReport, UnfoldedSample};
use dynrmt::{Complex64, CorrelationData, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{FlowTime, RunConfig};

/// Runs `f(0), ..., f(count-1)` in parallel and returns them in order.
pub fn map_trials<T: Send>(count: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..count).into_par_iter().map(f).collect()
}

pub fn correlations(cfg: &RunConfig) -> Result<CorrelationData> {
    cfg.spec.correlations(cfg.spec.natural_lag())
}

/// Orbit matrix `X` of trial `t` at size `n`.
pub fn trial_matrix(cfg: &RunConfig, n: usize, t: usize) -> Result<HermitianBlockMatrix> {
    ensemble::build_x(&cfg.ensemble(n, trial_seed(cfg.seed, t as u64)))
}

pub fn limit_measure(cfg: &RunConfig) -> Result<SpectralMeasure> {
    SpectralMeasure::from_symbol(&cfg.spec, SYMBOL_GRID)
}

/// `ρ_∞` tabulated by Stieltjes inversion on a grid covering its support.
pub fn limit_density(cfg: &RunConfig) -> Result<DensityTable> {
    let meas = limit_measure(cfg)?;
    let edge = 2.0 * meas.support().1.sqrt() * 1.05 + 0.05;
    let n = 2001;
    let es: Vec<f64> = (0..n).map(|i| -edge + 2.0 * edge * i as f64 / (n - 1) as f64).collect();
    let rho = sce::density(&meas, &es, cfg.density.eta)?;
    DensityTable::new(es, rho)
}

pub fn semicircle_table() -> DensityTable {
    DensityTable::from_fn(-2.0, 2.0, 4001, semicircle_density).expect("valid grid")
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityOutput {
    /// `(E, ρ_limit(E), ρ_empirical(E))` at bin centres.
    pub rows: Vec<[f64; 3]>,
    pub bin_width: f64,
    pub sce: SceSolution,
    pub eigenvalue_count: usize,
}

/// Limiting density against the pooled eigenvalue histogram of `X`.
pub fn density(cfg: &RunConfig) -> Result<DensityOutput> {
    let p = &cfg.density;
    let meas = limit_measure(cfg)?;
    let width = 2.0 * p.e_max / p.grid as f64;
    let centres: Vec<f64> = (0..p.grid).map(|i| -p.e_max + (i as f64 + 0.5) * width).collect();
    let sol = sce::density_solution(&meas, &centres, p.eta)?;
    let spectra = map_trials(cfg.trials, |t| spectral::decompose(&trial_matrix(cfg, cfg.n, t)?, false))?;
    let pooled: Vec<f64> = spectra.iter().flat_map(|s| s.eigenvalues.iter().copied()).collect();
    let hist = stats::Histogram::new(&pooled, p.grid, -p.e_max, p.e_max)?;
    let rows = centres
        .iter()
        .zip(&sol.m)
        .zip(&hist.density)
        .map(|((&e, m), &h)| [e, (m.im / std::f64::consts::PI).max(0.0), h])
        .collect();
    Ok(DensityOutput {
        rows,
        bin_width: width,
        sce: sol,
        eigenvalue_count: pooled.len(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalLawRow {
    pub n: usize,
    pub a: f64,
    pub eta: f64,
    /// Median over trials of `sup_E |m_N - m_∞|`.
    pub median_error: f64,
    pub max_error: f64,
    /// Bound shape `1/(Nη)`.
    pub inv_n_eta: f64,
}

/// Bulk energies used by the local-law scan.
pub fn locallaw_energies(cfg: &RunConfig) -> Result<Vec<f64>> {
    let (lo, hi) = stats::bulk_window(&limit_density(cfg)?)?;
    let k = cfg.locallaw.energies.max(2);
    Ok((0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect())
}

/// `sup_E |m_N(E + iη) - m_∞(E + iη)|` per trial and `η = N^{-a}`, at
/// size `n`.
pub fn locallaw(cfg: &RunConfig, n: usize) -> Result<Vec<LocalLawRow>> {
    let meas = limit_measure(cfg)?;
    let energies = locallaw_energies(cfg)?;
    let spectra = map_trials(cfg.trials, |t| spectral::decompose(&trial_matrix(cfg, n, t)?, false))?;
    cfg.locallaw
        .eta_exponents
        .iter()
        .map(|&a| {
            let eta = (n as f64).powf(-a);
            let zs: Vec<Complex64> = energies.iter().map(|&e| Complex64::new(e, eta)).collect();
            let limit = sce::solve_path(&meas, &zs)?.m;
            let errors = spectra
                .iter()
                .map(|s| {
                    zs.iter().zip(&limit).try_fold(0.0f64, |acc, (&z, &m)| Ok(acc.max((spectral::stieltjes(s, z)? - m).norm())))
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(LocalLawRow {
                n,
                a,
                eta,
                median_error: stats::median(&errors),
                max_error: errors.iter().copied().fold(0.0, f64::max),
                inv_n_eta: 1.0 / (n as f64 * eta),
            })
        })
        .collect()
}

/// Spacings of the GUE reference: `2N`-dimensional GUE spectra unfolded
/// by the semicircle over its own bulk window.
pub fn gue_reference(cfg: &RunConfig, n: usize) -> Result<UnfoldedSample> {
    let table = semicircle_table();
    let spectra = stats::gue_oracle(2 * n, cfg.universality.reference_trials, cfg.seed)?;
    stats::unfold(&spectra, stats::bulk_window(&table)?, &table)
}

/// Independent-eigenvalue control unfolded like the GUE reference.
pub fn poisson_control(cfg: &RunConfig, n: usize) -> Result<UnfoldedSample> {
    let table = semicircle_table();
    let spectra: Vec<Spectrum> = (0..cfg.universality.control_trials)
        .map(|t| stats::diagonal_control(2 * n, trial_seed(cfg.seed, t as u64), false))
        .collect();
    stats::unfold(&spectra, stats::bulk_window(&table)?, &table)
}

fn ensemble_window(cfg: &RunConfig, table: &DensityTable) -> Result<(f64, f64)> {
    match cfg.universality.window {
        Some(w) => Ok(w),
        None => stats::bulk_window(table),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UniversalityOutput {
    pub window: (f64, f64),
    pub hx: StatReport,
    pub hy: StatReport,
    pub gue: StatReport,
    pub poisson: StatReport,
}

pub fn universality(cfg: &RunConfig) -> Result<UniversalityOutput> {
    let u = &cfg.universality;
    let table = limit_density(cfg)?;
    let window = ensemble_window(cfg, &table)?;
    let pairs = map_trials(cfg.trials, |t| {
        let (x, y) = ensemble::build_pair(&cfg.ensemble(cfg.n, trial_seed(cfg.seed, t as u64)))?;
        Ok((spectral::decompose(&x, false)?, spectral::decompose(&y, false)?))
    })?;
    let (sx, sy): (Vec<Spectrum>, Vec<Spectrum>) = pairs.into_iter().unzip();
    let gue = gue_reference(cfg, cfg.n)?;
    let reference = gue.spacings();
    let poisson = poisson_control(cfg, cfg.n)?;
    let rep = |s: &UnfoldedSample| stats::report(s, u.bins, u.s_max, Some(&reference));
    Ok(UniversalityOutput {
        window,
        hx: rep(&stats::unfold(&sx, window, &table)?)?,
        hy: rep(&stats::unfold(&sy, window, &table)?)?,
        gue: stats::report(&gue, u.bins, u.s_max, None)?,
        poisson: rep(&poisson)?,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowRow {
    pub t: FlowTime,
    pub report: StatReport,
    /// Mean of `N |B_ij|²` over all entries and trials.
    pub entry_second_moment: f64,
}

/// Statistics of the OU endpoint `H(t)` started from `X`, per `t`.
pub fn flow(cfg: &RunConfig) -> Result<Vec<FlowRow>> {
    let u = &cfg.universality;
    let data = correlations(cfg)?;
    let table = limit_density(cfg)?;
    let window = ensemble_window(cfg, &table)?;
    let reference = gue_reference(cfg, cfg.n)?.spacings();
    let w = cfg.resample_window().min(cfg.n - 1);
    cfg.flow
        .t_list
        .iter()
        .map(|&t| {
            let trials = map_trials(cfg.trials, |k| {
                let seed = trial_seed(cfg.seed, k as u64);
                let h = ensemble::ou_interpolate(&trial_matrix(cfg, cfg.n, k)?, &data, w, t.0, seed)?;
                let moment = h.block_frobenius_sq() / cfg.n as f64;
                Ok((spectral::decompose(&h, false)?, moment))
            })?;
            let moment = trials.iter().map(|(_, m)| m).sum::<f64>() / trials.len() as f64;
            let spectra: Vec<Spectrum> = trials.into_iter().map(|(s, _)| s).collect();
            let sample = stats::unfold(&spectra, window, &table)?;
            Ok(FlowRow {
                t,
                report: stats::report(&sample, u.bins, u.s_max, Some(&reference))?,
                entry_second_moment: moment,
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct DelocRow {
    pub n: usize,
    pub trial: usize,
    pub metric: f64,
    pub control: f64,
}

#[derive(Clone, Debug)]
pub struct DelocOutput {
    pub rows: Vec<DelocRow>,
    /// Eigenvector sup-norms of the first trial at the largest size.
    pub supnorms: Vec<[f64; 3]>,
}

impl DelocOutput {
    pub fn mean_metric(&self, n: usize) -> f64 {
        let v: Vec<f64> = self.rows.iter().filter(|r| r.n == n).map(|r| r.metric).collect();
        stats::mean(&v)
    }
}

/// Bulk eigenvector sup-norm metric of `X` per size and trial, next to a
/// completely localized control.
pub fn deloc(cfg: &RunConfig) -> Result<DelocOutput> {
    let (lo, hi) = cfg.deloc.window;
    let mut rows = Vec::new();
    let mut supnorms = Vec::new();
    let largest = cfg.deloc.n_list.iter().copied().max().unwrap_or(cfg.n);
    for &n in &cfg.deloc.n_list {
        let spectra = map_trials(cfg.trials, |t| spectral::decompose(&trial_matrix(cfg, n, t)?, true))?;
        for (t, s) in spectra.iter().enumerate() {
            let control = stats::diagonal_control(2 * n, trial_seed(cfg.seed, t as u64), true);
            rows.push(DelocRow {
                n,
                trial: t,
                metric: spectral::deloc_metric(s, lo, hi)?,
                control: spectral::deloc_metric(&control, lo, hi)?,
            });
        }
        if n == largest && supnorms.is_empty() {
            supnorms = dynrmt::export::supnorm_rows(&spectra[0])?;
        }
    }
    Ok(DelocOutput { rows, supnorms })
}
