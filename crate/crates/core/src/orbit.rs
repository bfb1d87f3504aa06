//! Exact doubling-map dynamics on stored binary digits.
//!
//! A starting point `x = Σ d_n 2^{-n}` is kept as its digit string, and
//! `T^k x` is read off as the digit string shifted by `k`. Nothing here
//! iterates `x -> 2x mod 1` in floating point: after about 53 steps that
//! iteration has consumed every mantissa bit and returns garbage.
//! Conversion to `f64` happens only when a shifted value is evaluated, and
//! then only the leading [`MANTISSA_DIGITS`] digits contribute.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

/// Digits that fit exactly into an `f64` mantissa.
pub const MANTISSA_DIGITS: usize = 53;

/// Default dependence window `max(53, ceil(3 log2 N))`.
pub fn default_window(n: usize) -> usize {
    let bits = (n.max(2) as f64).log2();
    MANTISSA_DIGITS.max((3.0 * bits).ceil() as usize)
}

/// Binary digits `d_1, d_2, ..., d_L` of a starting point.
///
/// Digits are packed most-significant first: `d_1` is the top bit of the
/// first word. One trailing zero word keeps window reads branch-free.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitOrbit {
    words: Vec<u64>,
    len: usize,
    seed: u64,
}

impl BitOrbit {
    /// Builds an orbit from explicit digits (each must be 0 or 1).
    pub fn from_digits(digits: &[u8]) -> Result<Self> {
        let mut words = vec![0u64; digits.len() / 64 + 2];
        for (i, &d) in digits.iter().enumerate() {
            match d {
                0 => {}
                1 => words[i / 64] |= 1 << (63 - i % 64),
                _ => return Err(Error::Domain(format!("digit {} at position {} is not binary", d, i + 1))),
            }
        }
        Ok(Self { words, len: digits.len(), seed: 0 })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Seed the digits were drawn with (0 for hand-built orbits).
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Digit `d_n`, 1-based.
    pub fn digit(&self, n: usize) -> u8 {
        assert!(n >= 1 && n <= self.len, "digit index {} outside 1..={}", n, self.len);
        let i = n - 1;
        ((self.words[i / 64] >> (63 - i % 64)) & 1) as u8
    }

    pub fn digits(&self) -> impl Iterator<Item = u8> + '_ {
        (1..=self.len).map(move |n| self.digit(n))
    }

    /// Digits `d_{k+1} .. d_{k+64}` as one word, `d_{k+1}` in the top bit.
    /// Positions past the end read as zero.
    fn window(&self, k: usize) -> u64 {
        let (w, o) = (k / 64, k % 64);
        let hi = self.words.get(w).copied().unwrap_or(0);
        if o == 0 {
            hi
        } else {
            let lo = self.words.get(w + 1).copied().unwrap_or(0);
            (hi << o) | (lo >> (64 - o))
        }
    }

    /// `Σ_{n=1..P} d_{n+k} 2^{-n}`, the value of `T^k x` truncated to `P`
    /// digits. For `P > 53` only the first 53 digits enter the result.
    pub fn shift_value(&self, k: usize, precision: usize) -> Result<f64> {
        if precision == 0 {
            return Err(Error::Domain("precision must be positive".into()));
        }
        if k + precision > self.len {
            return Err(Error::IndexOutOfRange {
                what: "shift_value",
                needed: k + precision,
                available: self.len,
            });
        }
        let p = precision.min(MANTISSA_DIGITS);
        Ok(digits_to_f64(self.window(k), p))
    }
}

/// Interprets the top `p` bits of `word` as `0.b_1 b_2 ... b_p` in base 2.
fn digits_to_f64(word: u64, p: usize) -> f64 {
    debug_assert!((1..=MANTISSA_DIGITS).contains(&p));
    let top = word >> (64 - p);
    top as f64 * (-(p as f64)).exp2()
}

/// Draws `len` i.i.d. fair digits from the counter-based stream of `seed`.
/// A longer orbit under the same seed extends a shorter one.
pub fn sample_orbit(seed: u64, len: usize) -> BitOrbit {
    let n_words = len.div_ceil(64);
    let mut rng = rng::stream(seed, Purpose::OrbitDigits, 0);
    let mut words: Vec<u64> = (0..n_words).map(|_| rng.next_u64()).collect();
    let tail = len % 64;
    if tail != 0 {
        if let Some(last) = words.last_mut() {
            *last &= !0u64 << (64 - tail);
        }
    }
    words.push(0);
    words.push(0);
    BitOrbit { words, len, seed }
}

/// An orbit whose digits beyond a window `W` have been replaced by fresh
/// coin flips, independently for every index:
///
/// `y_k = Σ_{n≤W} d_{n+k} 2^{-n} + Σ_{n>W} b^k_n 2^{-n}`.
#[derive(Clone, Debug)]
pub struct ResampledOrbit<'a> {
    base: &'a BitOrbit,
    window: usize,
    /// `fresh[k]` holds `b^k_{W+1} .. b^k_{W+64}`, top bit first.
    fresh: Vec<u64>,
    seed: u64,
}

impl<'a> ResampledOrbit<'a> {
    pub fn base(&self) -> &BitOrbit {
        self.base
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Largest index `k` for which `y_k` is defined.
    pub fn index_count(&self) -> usize {
        self.fresh.len() - 1
    }

    /// Fresh digit `b^k_n` for `n > W` (1-based `n`, at most `W + 64`).
    pub fn fresh_digit(&self, k: usize, n: usize) -> u8 {
        assert!(n > self.window && n <= self.window + 64);
        ((self.fresh[k] >> (63 - (n - self.window - 1))) & 1) as u8
    }

    /// `y_k` truncated to `precision` digits (at most 53 contribute).
    pub fn value(&self, k: usize, precision: usize) -> Result<f64> {
        if k > self.index_count() {
            return Err(Error::IndexOutOfRange {
                what: "resampled index",
                needed: k,
                available: self.index_count(),
            });
        }
        if precision == 0 {
            return Err(Error::Domain("precision must be positive".into()));
        }
        let p = precision.min(MANTISSA_DIGITS);
        if self.window >= p {
            return self.base.shift_value(k, p);
        }
        let kept = self.base.window(k) & (!0u64 << (64 - self.window));
        let word = kept | (self.fresh[k] >> self.window);
        Ok(digits_to_f64(word, p))
    }
}

/// Resamples every index `0..=index_count` of `orbit` beyond window `W`.
///
/// Only `min(W, 53)` retained digits are ever read, so the orbit must hold
/// at least `index_count + min(W, 53)` digits.
pub fn resample(orbit: &BitOrbit, window: usize, index_count: usize, seed: u64) -> Result<ResampledOrbit<'_>> {
    if window == 0 {
        return Err(Error::InvalidConfig("resampling window must be positive".into()));
    }
    let needed = index_count + window.min(MANTISSA_DIGITS);
    if needed > orbit.len() {
        return Err(Error::IndexOutOfRange {
            what: "resample",
            needed,
            available: orbit.len(),
        });
    }
    let mut rng = rng::stream(seed, Purpose::FreshDigits, 0);
    let fresh = (0..=index_count).map(|_| rng.next_u64()).collect();
    Ok(ResampledOrbit {
        base: orbit,
        window,
        fresh,
        seed,
    })
}
