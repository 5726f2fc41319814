//! Experiment configuration: one TOML file with flat sections.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use mvstab::metrics::Gauge;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub model: ModelSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub stationary: StationarySection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub perturbation: PerturbationSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub metric: MetricSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// `dawson`, `cosine` or `rescaled_double_well`.
    pub name: String,
    #[serde(default = "one")]
    pub beta: f64,
    pub sigma: Option<f64>,
    /// `σ = sigma_factor · σ_c`, with `σ_c` located first.
    pub sigma_factor: Option<f64>,
}

fn one() -> f64 {
    1.0
}

/// `"auto"` or a number.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize, Default)]
#[serde(untagged)]
pub enum AutoOr {
    #[default]
    #[serde(with = "auto")]
    Auto,
    Value(f64),
}

mod auto {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("auto")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s == "auto" {
            Ok(())
        } else {
            Err(D::Error::custom(format!("expected \"auto\" or a number, found \"{s}\"")))
        }
    }
}

impl AutoOr {
    pub fn value(self) -> Option<f64> {
        match self {
            AutoOr::Auto => None,
            AutoOr::Value(v) => Some(v),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(rename = "L", default)]
    pub half_width: AutoOr,
    /// Total quadrature nodes; rounded up to whole panels.
    pub n_nodes: Option<usize>,
    #[serde(default = "default_order")]
    pub order: usize,
}

fn default_order() -> usize {
    16
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            half_width: AutoOr::Auto,
            n_nodes: None,
            order: default_order(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StationarySection {
    /// Scan interval for `m`; the model default when absent.
    pub scan: Option<[f64; 2]>,
    #[serde(default = "default_scan_points")]
    pub n_scan: usize,
    /// Also locate `σ_c` on `sigma_range`.
    #[serde(default)]
    pub critical: bool,
    #[serde(default = "default_sigma_range")]
    pub sigma_range: [f64; 2],
    #[serde(default = "default_sigma_points")]
    pub n_sigma: usize,
}

fn default_scan_points() -> usize {
    mvstab::stationary::DEFAULT_ROOT_SCAN
}

fn default_sigma_range() -> [f64; 2] {
    [0.1, 3.0]
}

fn default_sigma_points() -> usize {
    146
}

impl Default for StationarySection {
    fn default() -> Self {
        Self {
            scan: None,
            n_scan: default_scan_points(),
            critical: false,
            sigma_range: default_sigma_range(),
            n_sigma: default_sigma_points(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    #[serde(default = "default_degree")]
    pub degree: usize,
    /// Analyse only the stationary root nearest this value.
    pub root: Option<f64>,
    /// Eigenvalues listed in the report.
    #[serde(default = "default_listed")]
    pub n_listed: usize,
    /// `S(λ)` is sampled on `[0, secular_max]`.
    #[serde(default = "default_secular_max")]
    pub secular_max: f64,
    #[serde(default = "default_secular_points")]
    pub secular_points: usize,
}

fn default_degree() -> usize {
    mvstab::spectrum::DEFAULT_DEGREE
}

fn default_listed() -> usize {
    12
}

fn default_secular_max() -> f64 {
    2.0
}

fn default_secular_points() -> usize {
    201
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            degree: default_degree(),
            root: None,
            n_listed: default_listed(),
            secular_max: default_secular_max(),
            secular_points: default_secular_points(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionName {
    AdjointRe,
    AdjointIm,
    CustomFile,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSection {
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Truncation level; `auto` doubles from `8‖h‖` until `γ < 0.01‖h‖`.
    #[serde(rename = "M", default)]
    pub level: AutoOr,
    #[serde(default = "default_direction")]
    pub direction: DirectionName,
    /// CSV with header `x,h`, for `direction = "custom-file"`; relative to
    /// the config file.
    pub file: Option<PathBuf>,
}

fn default_delta() -> f64 {
    1e-3
}

fn default_direction() -> DirectionName {
    DirectionName::AdjointRe
}

impl Default for PerturbationSection {
    fn default() -> Self {
        Self {
            delta: default_delta(),
            level: AutoOr::Auto,
            direction: default_direction(),
            file: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Fp,
    Particles,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dump {
    None,
    Binary,
    Csv,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    #[serde(default = "default_engine")]
    pub engine: Engine,
    #[serde(rename = "N", default = "default_particles")]
    pub n_particles: usize,
    /// Independent particle runs, seeds `seed, seed + 1, …`.
    #[serde(default = "one_usize")]
    pub runs: usize,
    #[serde(default)]
    pub dt: AutoOr,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default)]
    pub seed: u64,
    /// Time between recorded rows.
    #[serde(default = "default_record")]
    pub record_every: f64,
    #[serde(default = "default_cells")]
    pub fp_cells: usize,
    /// Stop early once `|m_t − m*|` reaches this; runs to `t_end` when absent.
    pub stop_band: Option<f64>,
    #[serde(default = "default_dump")]
    pub dump_positions: Dump,
    /// Fokker–Planck engine: write every recorded density to `frames.csv`.
    #[serde(default)]
    pub dump_frames: bool,
}

fn default_engine() -> Engine {
    Engine::Fp
}

fn default_particles() -> usize {
    100_000
}

fn one_usize() -> usize {
    1
}

fn default_t_end() -> f64 {
    40.0
}

fn default_record() -> f64 {
    0.05
}

fn default_cells() -> usize {
    2000
}

fn default_dump() -> Dump {
    Dump::None
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            engine: default_engine(),
            n_particles: default_particles(),
            runs: 1,
            dt: AutoOr::Auto,
            t_end: default_t_end(),
            seed: 0,
            record_every: default_record(),
            fp_cells: default_cells(),
            stop_band: None,
            dump_positions: default_dump(),
            dump_frames: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSection {
    #[serde(default)]
    pub p0: f64,
    #[serde(default = "default_gauge")]
    pub phi0: Gauge,
    #[serde(default = "default_knots")]
    pub knots: usize,
}

fn default_gauge() -> Gauge {
    Gauge::MinOne
}

fn default_knots() -> usize {
    32
}

impl Default for MetricSection {
    fn default() -> Self {
        Self {
            p0: 0.0,
            phi0: default_gauge(),
            knots: default_knots(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "default_sweep_range")]
    pub sigma_range: [f64; 2],
    #[serde(default = "default_sweep_points")]
    pub n_sigma: usize,
    /// Basis degree for the per-root `λ*`.
    #[serde(default = "default_sweep_degree")]
    pub degree: usize,
}

fn default_sweep_range() -> [f64; 2] {
    [0.5, 1.5]
}

fn default_sweep_points() -> usize {
    21
}

fn default_sweep_degree() -> usize {
    40
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            sigma_range: default_sweep_range(),
            n_sigma: default_sweep_points(),
            degree: default_sweep_degree(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_out() }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).context("invalid config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates `path`; a relative custom-direction file is
    /// resolved against the config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let mut cfg = Self::parse(&text).with_context(|| format!("in {}", path.display()))?;
        if let (Some(file), Some(dir)) = (&cfg.perturbation.file, path.parent()) {
            if file.is_relative() {
                cfg.perturbation.file = Some(dir.join(file));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            bail!("unsupported config version {} (expected {CONFIG_VERSION})", self.version);
        }
        let m = &self.model;
        if m.sigma.is_some() && m.sigma_factor.is_some() {
            bail!("model: give either sigma or sigma_factor, not both");
        }
        if let Some(f) = m.sigma_factor {
            if !(f > 0.0) {
                bail!("model: sigma_factor must be positive");
            }
        }
        if let AutoOr::Value(l) = self.grid.half_width {
            if !(l > 0.0) {
                bail!("grid: L must be positive");
            }
        }
        if self.grid.order < 2 || self.grid.n_nodes == Some(0) {
            bail!("grid: order must be at least 2 and n_nodes positive");
        }
        if let Some([a, b]) = self.stationary.scan {
            if !(b > a) {
                bail!("stationary: scan must be increasing");
            }
        }
        let [a, b] = self.stationary.sigma_range;
        if !(a > 0.0 && b > a) {
            bail!("stationary: sigma_range must be positive and increasing");
        }
        if self.spectrum.degree < 2 {
            bail!("spectrum: degree must be at least 2");
        }
        if !(self.spectrum.secular_max > 0.0) || self.spectrum.secular_points < 2 {
            bail!("spectrum: secular_max must be positive with at least 2 points");
        }
        let p = &self.perturbation;
        if !(p.delta >= 0.0) {
            bail!("perturbation: delta must be non-negative");
        }
        if let AutoOr::Value(level) = p.level {
            if !(level > 0.0) {
                bail!("perturbation: M must be positive");
            }
        }
        if (p.direction == DirectionName::CustomFile) != p.file.is_some() {
            bail!("perturbation: file is required exactly when direction = \"custom-file\"");
        }
        let s = &self.simulation;
        if s.n_particles == 0 || s.runs == 0 || s.fp_cells < 10 {
            bail!("simulation: N, runs and fp_cells must be positive (fp_cells at least 10)");
        }
        if !(s.t_end > 0.0) || !(s.record_every > 0.0) || s.stop_band.is_some_and(|b| !(b > 0.0)) {
            bail!("simulation: t_end, record_every and stop_band must be positive");
        }
        if let AutoOr::Value(dt) = s.dt {
            if !(dt > 0.0) {
                bail!("simulation: dt must be positive");
            }
        }
        if !(self.metric.p0 >= 0.0) || self.metric.knots == 0 {
            bail!("metric: p0 must be non-negative and knots positive");
        }
        let [a, b] = self.sweep.sigma_range;
        if !(a > 0.0 && b >= a) || self.sweep.n_sigma == 0 {
            bail!("sweep: sigma_range must be positive and ordered, n_sigma positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "version = 1\n[model]\nname = \"dawson\"\nsigma = 0.7\n";

    #[test]
    fn defaults_fill_missing_sections() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.spectrum.degree, 120);
        assert_eq!(cfg.grid.half_width, AutoOr::Auto);
        assert_eq!(cfg.simulation.engine, Engine::Fp);
        assert_eq!(cfg.perturbation.direction, DirectionName::AdjointRe);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}colour = 3\n");
        assert!(ExperimentConfig::parse(&text).is_err());
        let text = "version = 1\n[model]\nname = \"dawson\"\nsigma = 0.7\n[grid]\nnodes = 3\n";
        assert!(ExperimentConfig::parse(text).is_err());
    }

    #[test]
    fn version_is_checked() {
        assert!(ExperimentConfig::parse(&MINIMAL.replace("version = 1", "version = 2")).is_err());
        assert!(ExperimentConfig::parse("[model]\nname = \"dawson\"\n").is_err());
    }

    #[test]
    fn auto_or_number() {
        let text = format!("{MINIMAL}[grid]\nL = 4.5\n[perturbation]\nM = \"auto\"\n");
        let cfg = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(cfg.grid.half_width, AutoOr::Value(4.5));
        assert_eq!(cfg.perturbation.level, AutoOr::Auto);
        let bad = format!("{MINIMAL}[grid]\nL = \"wide\"\n");
        assert!(ExperimentConfig::parse(&bad).is_err());
    }

    #[test]
    fn custom_direction_needs_a_file() {
        let text = format!("{MINIMAL}[perturbation]\ndirection = \"custom-file\"\n");
        assert!(ExperimentConfig::parse(&text).is_err());
    }
}
