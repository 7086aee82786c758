//! Versioned JSON experiment configuration. Command-line flags are parsed
//! into the same structure and override file values field by field.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub version: Option<u32>,
    pub seed: Option<u64>,
    pub metric: Option<String>,
    pub dist: Option<String>,
    /// `lo:hi:step` in dB.
    pub psnr_grid: Option<String>,
    pub psnr: Option<f64>,
    /// `lo:hi:step` attenuation grid in dB.
    pub att_grid: Option<String>,
    pub psnr_ref: Option<f64>,
    pub n: Option<usize>,
    pub counts: Option<[usize; 2]>,
    pub packed: Option<bool>,
    pub system: Option<String>,
    pub blocklength: Option<usize>,
    pub code_rate: Option<f64>,
    pub code_seed: Option<u64>,
    pub matrix: Option<String>,
    pub min_errors: Option<usize>,
    pub max_frames: Option<usize>,
    pub max_iter: Option<usize>,
    pub samples: Option<usize>,
    pub taps: Option<usize>,
    pub bins: Option<usize>,
    pub binary: Option<bool>,
    pub baudrate: Option<String>,
    pub input: Option<String>,
    pub output: Option<String>,
    pub hist_output: Option<String>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        match cfg.version {
            Some(CONFIG_VERSION) => Ok(cfg),
            Some(v) => Err(CliError::Config(format!(
                "unsupported config version {v}, expected {CONFIG_VERSION}"
            ))),
            None => Err(CliError::Config("config file lacks \"version\"".into())),
        }
    }

    /// `self` with every field set in `flags` replaced.
    pub fn overlay(mut self, flags: &Self) -> Self {
        overlay!(
            self,
            flags,
            seed,
            metric,
            dist,
            psnr_grid,
            psnr,
            att_grid,
            psnr_ref,
            n,
            counts,
            packed,
            system,
            blocklength,
            code_rate,
            code_seed,
            matrix,
            min_errors,
            max_frames,
            max_iter,
            samples,
            taps,
            bins,
            binary,
            baudrate,
            input,
            output,
            hist_output
        );
        self.version = Some(CONFIG_VERSION);
        self
    }

    /// Canonical JSON of the resolved configuration.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of [`ExperimentConfig::to_json`],
    /// ignoring output destinations.
    pub fn hash(&self) -> String {
        let inputs = Self {
            output: None,
            hist_output: None,
            ..self.clone()
        };
        let digest = Sha256::digest(inputs.to_json().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

/// Parses `lo:hi:step`.
pub fn parse_grid(text: &str) -> CliResult<(f64, f64, f64)> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Parse(format!("grid {text:?} is not lo:hi:step")));
    }
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| CliError::Parse(format!("grid {text:?}: {e}")))
    };
    Ok((num(parts[0])?, num(parts[1])?, num(parts[2])?))
}

/// Parses `a,b`.
pub fn parse_counts(text: &str) -> CliResult<[usize; 2]> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::Parse(format!("counts {text:?} are not a,b")));
    }
    let num = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|e| CliError::Parse(format!("counts {text:?}: {e}")))
    };
    Ok([num(parts[0])?, num(parts[1])?])
}
