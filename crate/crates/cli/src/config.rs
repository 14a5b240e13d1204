//! Run configuration shared by every subcommand. A JSON file supplies
//! defaults; command-line flags override it field by field.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mgstd_core::{ArrowSet, Interpolation};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_H: f64 = 0.25;
pub const DEFAULT_RHO: f64 = 1.1;
pub const DEFAULT_RATIO_BOUND: f64 = 5.0;
pub const DEFAULT_MU_MAX: u64 = 1000;
pub const DEFAULT_SHIFT_INCREMENT: f64 = 0.01;

/// A fixed threshold or automatic selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MuStarRepr", into = "MuStarRepr")]
pub enum MuStar {
    Fixed(u64),
    Auto,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MuStarRepr {
    Number(u64),
    Text(String),
}

impl TryFrom<MuStarRepr> for MuStar {
    type Error = String;

    fn try_from(r: MuStarRepr) -> Result<Self, String> {
        match r {
            MuStarRepr::Number(n) => MuStar::fixed(n),
            MuStarRepr::Text(s) => s.parse(),
        }
    }
}

impl From<MuStar> for MuStarRepr {
    fn from(m: MuStar) -> Self {
        match m {
            MuStar::Fixed(n) => MuStarRepr::Number(n),
            MuStar::Auto => MuStarRepr::Text("auto".into()),
        }
    }
}

impl MuStar {
    fn fixed(n: u64) -> Result<Self, String> {
        if n == 0 {
            Err("mu_star must be at least 1".into())
        } else {
            Ok(MuStar::Fixed(n))
        }
    }
}

impl FromStr for MuStar {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(MuStar::Auto);
        }
        let n: u64 = s
            .parse()
            .map_err(|_| format!("expected a positive integer or \"auto\", got {s:?}"))?;
        MuStar::fixed(n)
    }
}

impl fmt::Display for MuStar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MuStar::Fixed(n) => write!(f, "{n}"),
            MuStar::Auto => f.write_str("auto"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub model: Option<String>,
    pub preset: Option<String>,
    pub n_series: Option<usize>,
    pub h: Option<f64>,
    pub rho: Option<f64>,
    pub mu_star: Option<MuStar>,
    pub ratio_bound: Option<f64>,
    pub mu_max: Option<u64>,
    /// Single grid shift; ignored when sweeping.
    pub delta: Option<Vec<f64>>,
    /// Shift increment of the sweep; presence selects sweep mode for `select`.
    pub sweep_increment: Option<f64>,
    pub interp: Option<Interpolation>,
    pub arrows: Option<ArrowSet>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overlay(self, other: RunConfig) -> RunConfig {
        RunConfig {
            input: other.input.or(self.input),
            model: other.model.or(self.model),
            preset: other.preset.or(self.preset),
            n_series: other.n_series.or(self.n_series),
            h: other.h.or(self.h),
            rho: other.rho.or(self.rho),
            mu_star: other.mu_star.or(self.mu_star),
            ratio_bound: other.ratio_bound.or(self.ratio_bound),
            mu_max: other.mu_max.or(self.mu_max),
            delta: other.delta.or(self.delta),
            sweep_increment: other.sweep_increment.or(self.sweep_increment),
            interp: other.interp.or(self.interp),
            arrows: other.arrows.or(self.arrows),
            out: other.out.or(self.out),
            seed: other.seed.or(self.seed),
            jobs: other.jobs.or(self.jobs),
        }
    }

    pub fn h(&self) -> f64 {
        self.h.unwrap_or(DEFAULT_H)
    }

    pub fn rho(&self) -> f64 {
        self.rho.unwrap_or(DEFAULT_RHO)
    }

    pub fn ratio_bound(&self) -> f64 {
        self.ratio_bound.unwrap_or(DEFAULT_RATIO_BOUND)
    }

    pub fn mu_max(&self) -> u64 {
        self.mu_max.unwrap_or(DEFAULT_MU_MAX)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn shift_increment(&self) -> f64 {
        self.sweep_increment.unwrap_or(DEFAULT_SHIFT_INCREMENT)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.input.is_some() && self.model.is_some() {
            return Err(CliError::Usage(
                "--input and --model are mutually exclusive".into(),
            ));
        }
        if self.input.is_none() && self.model.is_none() {
            return Err(CliError::Usage("no data source: pass --input or --model".into()));
        }
        if self.model.is_some() && self.preset.is_none() {
            return Err(CliError::Usage("--model needs --preset (D1 or D2)".into()));
        }
        if self.jobs == Some(0) {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        Ok(())
    }
}
