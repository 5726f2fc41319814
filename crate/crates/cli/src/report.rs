//! Report types. Every report is deterministic given the config and seed;
//! the wall-clock timestamp lives only in `manifest.json`.

use std::path::Path;

use anyhow::Result;
use serde::Serialize;

use crate::config::{DirectionName, Engine};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Default)]
pub struct ModelInfo {
    pub name: String,
    pub beta: f64,
    /// Absent for sweeps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub sigma_c: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RootInfo {
    pub m: f64,
    pub s0: f64,
    pub fold: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StationaryReport {
    pub schema_version: u32,
    pub command: String,
    pub model: ModelInfo,
    pub branch_count: usize,
    pub roots: Vec<RootInfo>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RootSpectrum {
    pub m: f64,
    pub s0: f64,
    pub half_width: f64,
    pub degree: usize,
    /// Smallest eigenvalues of the uncoupled generator.
    pub lambda_i: Vec<f64>,
    pub lambda_star: Option<f64>,
    pub lambda0: Complex,
    pub k0: usize,
    pub multiplicity_warning: bool,
    pub verdict: String,
    /// Coefficients of `f*` in the eigenbasis.
    pub f_star: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub schema_version: u32,
    pub command: String,
    pub model: ModelInfo,
    pub roots: Vec<RootSpectrum>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub seed: Option<u64>,
    pub initial_pairing: f64,
    pub fitted_rate: Option<f64>,
    pub fit_window: Option<[f64; 2]>,
    pub escape_time: Option<f64>,
    pub final_m: f64,
    pub final_branch: Option<f64>,
    pub sign_match: Option<bool>,
    pub w1_initial: f64,
    pub w1_final: f64,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct InstabilityReport {
    pub schema_version: u32,
    pub command: String,
    pub model: ModelInfo,
    /// `ok`, `inconclusive`, `no-unstable-mode` or `skipped`.
    pub status: String,
    pub note: String,
    pub root: Option<f64>,
    pub engine: Option<Engine>,
    pub direction: Option<DirectionName>,
    pub delta: Option<f64>,
    pub truncation_level: Option<f64>,
    pub gamma: Option<f64>,
    pub lambda_star: Option<f64>,
    /// Median over runs.
    pub fitted_rate: Option<f64>,
    pub relative_error: Option<f64>,
    /// Earliest exit from the `10δ` band.
    pub escape_time: Option<f64>,
    pub final_m: Option<f64>,
    pub final_branch: Option<f64>,
    pub sign_matches: Option<usize>,
    pub weighted_norm_lb_initial: Option<f64>,
    pub runs: Vec<RunSummary>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepBranch {
    pub m: f64,
    pub s0: f64,
    pub lambda_star: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub sigma: f64,
    pub branch_count: usize,
    pub branches: Vec<SweepBranch>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub command: String,
    pub model: ModelInfo,
    pub points: Vec<SweepPoint>,
    pub files: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    created: String,
    tool_version: &'a str,
    files: &'a [String],
}

pub fn write_manifest(dir: &Path, command: &str, files: &[String]) -> Result<()> {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let manifest = Manifest {
        command,
        created: format!("{secs}"),
        tool_version: env!("CARGO_PKG_VERSION"),
        files,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(dir.join("manifest.json"), text)?;
    Ok(())
}
