//! Run configuration: one JSON document, with command-line overrides.

use std::fmt;
use std::path::Path;

use dynrmt::ensemble::{EnsembleConfig, Layout};
use dynrmt::orbit::{default_window, MANTISSA_DIGITS};
use dynrmt::FourierSpec;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Environment variable that replaces the configured seed.
pub const SEED_ENV: &str = "DYNRMT_SEED";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub spec: FourierSpec,
    pub n: usize,
    /// Resampling window; `None` selects `max(53, ceil(3 log2 N))`.
    pub window: Option<usize>,
    pub precision: usize,
    pub layout: Layout,
    pub seed: u64,
    pub trials: usize,
    pub density: DensityParams,
    pub locallaw: LocalLawParams,
    pub universality: UniversalityParams,
    pub flow: FlowParams,
    pub deloc: DelocParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            spec: FourierSpec::exponential(),
            n: 512,
            window: None,
            precision: MANTISSA_DIGITS,
            layout: Layout::Displayed,
            seed: 1,
            trials: 20,
            density: DensityParams::default(),
            locallaw: LocalLawParams::default(),
            universality: UniversalityParams::default(),
            flow: FlowParams::default(),
            deloc: DelocParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityParams {
    /// Histogram bins on `[-e_max, e_max]`.
    pub grid: usize,
    pub e_max: f64,
    /// Stieltjes inversion height.
    pub eta: f64,
}

impl Default for DensityParams {
    fn default() -> Self {
        Self {
            grid: 60,
            e_max: 3.0,
            eta: dynrmt::sce::ETA_INV,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalLawParams {
    /// `η = N^{-a}` for each `a`.
    pub eta_exponents: Vec<f64>,
    /// Energies sampled across the bulk window.
    pub energies: usize,
    /// Sizes to scan; empty means just `n`.
    pub n_list: Vec<usize>,
}

impl Default for LocalLawParams {
    fn default() -> Self {
        Self {
            eta_exponents: vec![0.3, 0.5, 0.8],
            energies: 41,
            n_list: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UniversalityParams {
    /// Energy window; `None` selects the default bulk window.
    pub window: Option<(f64, f64)>,
    pub bins: usize,
    pub s_max: f64,
    /// GUE reference matrices; their dimension matches `2N`.
    pub reference_trials: usize,
    /// Diagonal (Poisson) control matrices.
    pub control_trials: usize,
}

impl Default for UniversalityParams {
    fn default() -> Self {
        Self {
            window: None,
            bins: 40,
            s_max: 4.0,
            reference_trials: 50,
            control_trials: 50,
        }
    }
}

/// A flow time, finite or infinite. Serialized as a number or `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowTime(pub f64);

impl fmt::Display for FlowTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl std::str::FromStr for FlowTime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(Self(f64::INFINITY));
        }
        match s.parse::<f64>() {
            Ok(t) if t >= 0.0 => Ok(Self(t)),
            _ => Err(format!("flow time must be a nonnegative number or \"inf\", got {s:?}")),
        }
    }
}

impl Serialize for FlowTime {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for FlowTime {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(t) => format!("{t}").parse(),
            Raw::Str(s) => s.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowParams {
    pub t_list: Vec<FlowTime>,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            t_list: vec![FlowTime(0.0), FlowTime(0.5), FlowTime(f64::INFINITY)],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DelocParams {
    pub n_list: Vec<usize>,
    pub window: (f64, f64),
}

impl Default for DelocParams {
    fn default() -> Self {
        Self {
            n_list: vec![128, 256, 512],
            window: (-0.5, 0.5),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid configuration: {e}")))
    }

    /// Applies `DYNRMT_SEED` if set.
    pub fn apply_env(&mut self) -> Result<(), CliError> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("{SEED_ENV}={v:?} is not an unsigned 64-bit integer")))?;
        }
        Ok(())
    }

    pub fn resample_window(&self) -> usize {
        self.window.unwrap_or_else(|| default_window(self.n))
    }

    /// Checks everything a command needs before spending time on it.
    pub fn validate(&self) -> Result<(), CliError> {
        self.spec.check_mean_zero()?;
        self.ensemble(self.n, 0).validate()?;
        if self.trials == 0 {
            return Err(CliError::Config("trials must be positive".into()));
        }
        if !(self.density.eta > 0.0) || self.density.grid == 0 || !(self.density.e_max > 0.0) {
            return Err(CliError::Config("density needs eta > 0, grid > 0 and e_max > 0".into()));
        }
        if self.locallaw.eta_exponents.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(CliError::Config("eta exponents must lie in (0, 1)".into()));
        }
        if let Some((lo, hi)) = self.universality.window {
            if !(hi > lo) {
                return Err(CliError::Config(format!("empty energy window [{lo}, {hi}]")));
            }
        }
        if self.deloc.n_list.iter().chain(&self.locallaw.n_list).any(|&n| n < 2) {
            return Err(CliError::Config("sizes must be at least 2".into()));
        }
        Ok(())
    }

    /// Ensemble configuration of one trial at size `n`.
    pub fn ensemble(&self, n: usize, seed: u64) -> EnsembleConfig {
        EnsembleConfig {
            n,
            spec: self.spec.clone(),
            window: self.window.unwrap_or_else(|| default_window(n)),
            seed,
            resampled: false,
            precision: self.precision,
            layout: self.layout,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
        assert!(text.contains("\"inf\""));
    }

    #[test]
    fn partial_documents_fill_defaults() {
        let cfg = RunConfig::from_json(r#"{"n": 64, "flow": {"t_list": [0, "inf"]}}"#).unwrap();
        assert_eq!(cfg.n, 64);
        assert_eq!(cfg.flow.t_list, vec![FlowTime(0.0), FlowTime(f64::INFINITY)]);
        assert!(RunConfig::from_json(r#"{"nn": 64}"#).is_err());
    }

    #[test]
    fn mean_nonzero_is_a_config_error() {
        let cfg = RunConfig::from_json(r#"{"spec": {"coeffs": [[0, 0.2, 0.0], [1, 1.0, 0.0]]}}"#).unwrap();
        let err = cfg.validate().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("mean-zero"));
    }
}
