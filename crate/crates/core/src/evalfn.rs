//! Evaluation functions `f(x) = Σ c_k e^{2πikx}` with finitely many terms.
//!
//! Besides point evaluation this module computes the symbol
//! `g_f(x) = Σ_{n odd} |Σ_{k≥0} c_{n2^k} e^{2πikx}|²`, the correlation
//! sequence `φ(j) = Σ_{k≥1} conj(c_k) c_{k2^j}` whose Fourier series is
//! `g_f`, the pseudo-correlation `ψ(j) = E[f(x) f(T^j x)]`, and the
//! admissibility test `inf g_f > 0`.
//!
//! `g_f` and `φ` follow the one-sided formulas above: only positive
//! frequencies enter. For a real `f` this differs from the two-sided moment
//! `E[f(x) conj f(T^j x)]`; [`quadrature_phi`] and [`quadrature_psi`]
//! compute the two-sided moments exactly so the difference is visible.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid-minimum threshold for admissibility.
pub const ADMISSIBILITY_TOL: f64 = 1e-8;

/// `e^{2πi t}` with the argument reduced mod 1 first.
pub(crate) fn turn(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * t.rem_euclid(1.0))
}

/// A finitely supported Fourier series.
///
/// Serialized as `{"coeffs": [[k, re, im], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct FourierSpec {
    coeffs: BTreeMap<i64, Complex64>,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    coeffs: Vec<(i64, f64, f64)>,
}

impl TryFrom<RawSpec> for FourierSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        let mut coeffs = BTreeMap::new();
        for (k, re, im) in raw.coeffs {
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::InvalidConfig(format!("coefficient c_{k} is not finite")));
            }
            if coeffs.insert(k, Complex64::new(re, im)).is_some() {
                return Err(Error::InvalidConfig(format!("frequency {k} listed twice")));
            }
        }
        Self::new(coeffs)
    }
}

impl From<FourierSpec> for RawSpec {
    fn from(spec: FourierSpec) -> Self {
        RawSpec {
            coeffs: spec.coeffs.iter().map(|(&k, c)| (k, c.re, c.im)).collect(),
        }
    }
}

impl FourierSpec {
    /// Builds a spec, dropping exact zeros. A nonzero `c_0` is kept so that
    /// [`FourierSpec::is_admissible`] can report it.
    pub fn new(coeffs: impl IntoIterator<Item = (i64, Complex64)>) -> Result<Self> {
        let coeffs: BTreeMap<_, _> = coeffs.into_iter().filter(|(_, c)| *c != Complex64::new(0.0, 0.0)).collect();
        if coeffs.is_empty() {
            return Err(Error::InvalidConfig("evaluation function has no nonzero coefficients".into()));
        }
        Ok(Self { coeffs })
    }

    /// `[(k, re, im)]` shorthand.
    pub fn from_triples(triples: &[(i64, f64, f64)]) -> Result<Self> {
        Self::new(triples.iter().map(|&(k, re, im)| (k, Complex64::new(re, im))))
    }

    /// `f(x) = e^{2πix}`.
    pub fn exponential() -> Self {
        Self::from_triples(&[(1, 1.0, 0.0)]).unwrap()
    }

    /// `f(x) = cos 2πx`.
    pub fn cosine() -> Self {
        Self::from_triples(&[(1, 0.5, 0.0), (-1, 0.5, 0.0)]).unwrap()
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        self.coeffs.get(&k).copied().unwrap_or_default()
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs.iter().map(|(&k, &c)| (k, c))
    }

    /// Largest `|k|` with `c_k ≠ 0`.
    pub fn max_frequency(&self) -> u64 {
        self.coeffs.keys().map(|k| k.unsigned_abs()).max().unwrap_or(0)
    }

    /// `Σ|c_k|`, a bound for `sup |f|`.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    /// `2π Σ |k||c_k|`, a bound for `sup |f'|`.
    pub fn derivative_bound(&self) -> f64 {
        TAU * self.coeffs.iter().map(|(k, c)| k.unsigned_abs() as f64 * c.norm()).sum::<f64>()
    }

    /// True when `c_{-k} = conj(c_k)` for all `k`, i.e. `f` is real valued.
    pub fn is_real(&self) -> bool {
        self.coeffs.iter().all(|(&k, c)| (self.coeff(-k) - c.conj()).norm() <= 1e-15 * (1.0 + c.norm()))
    }

    /// Fails with the mean-zero rule if `c_0 ≠ 0`.
    pub fn check_mean_zero(&self) -> Result<()> {
        match self.coeffs.get(&0) {
            Some(&c0) => Err(Error::MeanNonzero(c0)),
            None => Ok(()),
        }
    }

    /// `f(x) = Σ c_k e^{2πikx}`.
    pub fn evaluate(&self, x: f64) -> Complex64 {
        self.coeffs.iter().map(|(&k, &c)| c * turn(k as f64 * x)).sum()
    }

    /// The symbol `g_f(x)`, summed over odd `n ≥ 1` and `k ≥ 0` with
    /// `n 2^k ≤ K`.
    pub fn symbol_g(&self, x: f64) -> f64 {
        let kmax = self.max_frequency();
        let mut total = 0.0;
        let mut n = 1u64;
        while n <= kmax {
            let mut chain = Complex64::new(0.0, 0.0);
            let (mut freq, mut k) = (n, 0u32);
            while freq <= kmax {
                chain += self.coeff(freq as i64) * turn(k as f64 * x);
                freq <<= 1;
                k += 1;
            }
            total += chain.norm_sqr();
            n += 2;
        }
        total
    }

    /// Smallest lag beyond which `φ` and `ψ` vanish identically:
    /// `max(1, floor(log2 K))`.
    pub fn natural_lag(&self) -> usize {
        let k = self.max_frequency().max(1);
        (63 - k.leading_zeros() as usize).max(1)
    }

    /// `φ(j)`, `ψ(j)` for `0 ≤ j ≤ j_max`, plus grid bounds of `g_f`.
    pub fn correlations(&self, j_max: usize) -> Result<CorrelationData> {
        if j_max == 0 {
            return Err(Error::Domain("correlation lag J_max must be at least 1".into()));
        }
        let kmax = self.max_frequency();
        let phi = (0..=j_max)
            .map(|j| {
                if j >= 64 {
                    return Complex64::new(0.0, 0.0);
                }
                self.coeffs
                    .range(1..)
                    .filter_map(|(&k, &c)| {
                        let target = (k as u64).checked_mul(1u64 << j).filter(|t| *t <= kmax)?;
                        Some(c.conj() * self.coeff(target as i64))
                    })
                    .sum()
            })
            .collect();
        // E[f(x) f(T^j x)] = Σ_k c_k c_{-k 2^j}, over every nonzero k.
        let psi = (0..=j_max)
            .map(|j| {
                if j >= 64 {
                    return Complex64::new(0.0, 0.0);
                }
                self.coeffs
                    .iter()
                    .filter(|(&k, _)| k != 0)
                    .filter_map(|(&k, &c)| {
                        let target = k.unsigned_abs().checked_mul(1u64 << j).filter(|t| *t <= kmax)? as i64;
                        Some(c * self.coeff(-k.signum() * target))
                    })
                    .sum()
            })
            .collect();
        let (g_min, g_max, _) = self.symbol_extremes();
        Ok(CorrelationData {
            phi,
            psi,
            g_min,
            g_max,
        })
    }

    /// Grid used for symbol minimization: `max(4K, 256)` points.
    pub fn symbol_grid_len(&self) -> usize {
        (4 * self.max_frequency() as usize).max(256)
    }

    /// `(min, max, argmin)` of `g_f` over the symbol grid.
    fn symbol_extremes(&self) -> (f64, f64, f64) {
        let m = self.symbol_grid_len();
        let mut lo = (f64::INFINITY, 0.0);
        let mut hi = f64::NEG_INFINITY;
        for i in 0..m {
            let x = i as f64 / m as f64;
            let g = self.symbol_g(x);
            if g < lo.0 {
                lo = (g, x);
            }
            hi = hi.max(g);
        }
        (lo.0, hi, lo.1)
    }

    /// Admissibility: mean zero and grid minimum of `g_f` above
    /// [`ADMISSIBILITY_TOL`].
    pub fn is_admissible(&self) -> Admissibility {
        if let Some(&c0) = self.coeffs.get(&0) {
            return Admissibility::NotAdmissible(Inadmissible::MeanNonzero(c0));
        }
        let (g_min, _, x) = self.symbol_extremes();
        if g_min > ADMISSIBILITY_TOL {
            Admissibility::Admissible { g_min }
        } else {
            Admissibility::NotAdmissible(Inadmissible::SymbolVanishes { witness: x, value: g_min })
        }
    }
}

impl std::fmt::Display for FourierSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let terms: Vec<_> = self.coeffs.iter().map(|(k, c)| format!("c_{k}={c}")).collect();
        write!(f, "{{{}}}", terms.join(", "))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Admissibility {
    Admissible { g_min: f64 },
    NotAdmissible(Inadmissible),
}

impl Admissibility {
    pub fn is_admissible(&self) -> bool {
        matches!(self, Admissibility::Admissible { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Inadmissible {
    MeanNonzero(Complex64),
    /// `g_f(witness) = value ≤ τ`.
    SymbolVanishes { witness: f64, value: f64 },
}

/// Correlation sequences of an evaluation function.
///
/// Lags beyond the stored range are zero, which is exact for finite specs
/// once `j_max ≥ floor(log2 K)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationData {
    /// `φ(j)` for `0 ≤ j ≤ j_max`.
    pub phi: Vec<Complex64>,
    /// `ψ(j)` for `0 ≤ j ≤ j_max`.
    pub psi: Vec<Complex64>,
    pub g_min: f64,
    pub g_max: f64,
}

impl CorrelationData {
    pub fn j_max(&self) -> usize {
        self.phi.len() - 1
    }

    /// `φ(j)` for any integer lag, with `φ(-j) = conj φ(j)`.
    pub fn phi(&self, j: i64) -> Complex64 {
        match self.phi.get(j.unsigned_abs() as usize) {
            Some(v) if j >= 0 => *v,
            Some(v) => v.conj(),
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// `ψ(j)` for any integer lag; the pseudo-correlation of a stationary
    /// sequence is even in the lag.
    pub fn psi(&self, j: i64) -> Complex64 {
        self.psi.get(j.unsigned_abs() as usize).copied().unwrap_or_default()
    }

    /// `Σ_{|j|>w} |φ(j)|`.
    pub fn tail(&self, w: usize) -> f64 {
        2.0 * self.phi.iter().skip(w + 1).map(|c| c.norm()).sum::<f64>()
    }

    /// `sup_j |ψ(j)|`.
    pub fn psi_norm(&self) -> f64 {
        self.psi.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `φ(0) + 2 Re Σ_{j≥1} φ(j) e^{2πijx}`.
    pub fn symbol_series(&self, x: f64) -> f64 {
        self.phi[0].re
            + 2.0
                * self.phi[1..]
                    .iter()
                    .enumerate()
                    .map(|(j, p)| (p * turn((j + 1) as f64 * x)).re)
                    .sum::<f64>()
    }
}

/// `E_x[f(x) conj f(T^j x)]` over uniform `x`, computed exactly.
///
/// The integrand is a trigonometric polynomial of degree at most
/// `K(2^j + 1)`, so an equispaced rule with one more node is exact. Node
/// images under `T^j` are taken in integer arithmetic.
pub fn quadrature_phi(spec: &FourierSpec, j: u32) -> Complex64 {
    quadrature_moment(spec, j, true)
}

/// `E_x[f(x) f(T^j x)]`, exact as for [`quadrature_phi`].
pub fn quadrature_psi(spec: &FourierSpec, j: u32) -> Complex64 {
    quadrature_moment(spec, j, false)
}

fn quadrature_moment(spec: &FourierSpec, j: u32, conjugate: bool) -> Complex64 {
    let k = spec.max_frequency();
    let m = k * ((1u64 << j) + 1) + 1;
    let sum: Complex64 = (0..m)
        .map(|i| {
            let a = spec.evaluate(i as f64 / m as f64);
            let shifted = ((i as u128 * (1u128 << j)) % m as u128) as f64 / m as f64;
            let b = spec.evaluate(shifted);
            a * if conjugate { b.conj() } else { b }
        })
        .sum();
    sum / m as f64
}
