//! Configuration file format and flag merging.
//!
//! One TOML file holds a section per command; command-line flags override
//! file values. Unknown keys are rejected so a typo cannot silently fall
//! back to a default. The effective merged config is serialized and hashed
//! (FNV-1a) into every artifact the run produces.

use std::path::Path;

use serde::{Deserialize, Serialize};
use spinenc::error::{Error, Result};

/// Whole config file: one optional section per command.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub encode: Option<EncodeConfig>,
    pub sweep: Option<SweepConfig>,
    pub optimize: Option<OptimizeConfig>,
    pub squeeze_scan: Option<SqueezeScanConfig>,
    pub husimi: Option<HusimiConfig>,
    pub disorder: Option<DisorderConfig>,
    pub baseline: Option<BaselineConfig>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)?;
        toml::from_str(&raw).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

fn default_mode() -> String {
    "reduced".into()
}

fn default_resolution_polar() -> usize {
    128
}

fn default_resolution_azimuth() -> usize {
    256
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodeConfig {
    pub n: u32,
    pub theta: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    /// "reduced" or "two-branch"
    #[serde(default = "default_mode")]
    pub mode: String,
    /// Also write per-stage Husimi CSVs.
    #[serde(default)]
    pub husimi: bool,
    #[serde(default = "default_resolution_polar")]
    pub husimi_polar: usize,
    #[serde(default = "default_resolution_azimuth")]
    pub husimi_azimuth: usize,
}

/// Linear grid `start..=stop` with `count` points, or an explicit list.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridConfig {
    List(Vec<f64>),
    Linear { start: f64, stop: f64, count: usize },
}

impl GridConfig {
    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            GridConfig::List(v) => Ok(v.clone()),
            GridConfig::Linear { start, stop, count } => {
                if *count < 1 || stop < start {
                    return Err(Error::Config(format!(
                        "bad grid: start={start} stop={stop} count={count}"
                    )));
                }
                if *count == 1 {
                    return Ok(vec![*start]);
                }
                let step = (stop - start) / (*count as f64 - 1.0);
                Ok((0..*count).map(|i| start + i as f64 * step).collect())
            }
        }
    }
}

/// `tau2` axis: explicit grid or a window around the predictor.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Tau2Config {
    Window {
        predictor_half_width: f64,
        predictor_step: f64,
        #[serde(default = "default_predictor_c")]
        predictor_c: f64,
    },
    Grid(GridConfig),
}

fn default_predictor_c() -> f64 {
    2.0
}

fn default_tau3_max() -> f64 {
    0.15
}

fn default_sweep_output() -> String {
    "sweep.csv".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n: Vec<u32>,
    pub theta: GridConfig,
    pub tau1: GridConfig,
    pub tau2: Tau2Config,
    #[serde(default = "default_tau3_max")]
    pub tau3_max: f64,
    #[serde(default)]
    pub resume: bool,
    #[serde(default)]
    pub allow_extended_ranges: bool,
    #[serde(default = "default_sweep_output")]
    pub output: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeConfig {
    pub n: u32,
    pub theta: f64,
    #[serde(default = "default_tau1_step")]
    pub tau1_step: f64,
    #[serde(default = "default_tau2_window")]
    pub tau2_window: f64,
    #[serde(default = "default_tau2_step")]
    pub tau2_step: f64,
    #[serde(default = "default_predictor_c")]
    pub predictor_c: f64,
}

fn default_tau1_step() -> f64 {
    0.005
}

fn default_tau2_window() -> f64 {
    0.02
}

fn default_tau2_step() -> f64 {
    0.002
}

fn default_scan_start() -> f64 {
    0.0
}

fn default_scan_stop() -> f64 {
    0.2
}

fn default_scan_count() -> usize {
    101
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqueezeScanConfig {
    pub n: Vec<u32>,
    #[serde(default = "default_scan_start")]
    pub tau_start: f64,
    #[serde(default = "default_scan_stop")]
    pub tau_stop: f64,
    #[serde(default = "default_scan_count")]
    pub count: usize,
    /// Also emit the rescaled collapse data.
    #[serde(default)]
    pub collapse: bool,
}

fn default_stage() -> String {
    "all".into()
}

fn default_format() -> String {
    "csv".into()
}

fn default_husimi_mode() -> String {
    "two-branch".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HusimiConfig {
    pub n: u32,
    pub theta: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    /// "all" or a stage index 1..=7.
    #[serde(default = "default_stage")]
    pub stage: String,
    #[serde(default = "default_resolution_polar")]
    pub polar: usize,
    #[serde(default = "default_resolution_azimuth")]
    pub azimuth: usize,
    /// "csv" or "binary"
    #[serde(default = "default_format")]
    pub format: String,
    /// "two-branch" (signed difference field) or "reduced" (plain Q).
    #[serde(default = "default_husimi_mode")]
    pub mode: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderConfig {
    pub n: u32,
    pub theta: f64,
    pub delta: f64,
    /// Explicit seeds; when absent, `seed_count` seeds from the global seed.
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default = "default_seed_count")]
    pub seed_count: usize,
    /// Explicit times; when absent they are optimized on the clean backend.
    #[serde(default)]
    pub tau1: Option<f64>,
    #[serde(default)]
    pub tau2: Option<f64>,
    #[serde(default)]
    pub tau3: Option<f64>,
    /// Re-optimize tau3 on the disordered dynamics per realization.
    #[serde(default)]
    pub reoptimize_tau3: bool,
}

fn default_seed_count() -> usize {
    5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    pub n: Vec<u32>,
}

/// FNV-1a hex digest of the effective (merged) config for one command.
pub fn config_hash<T: Serialize>(label: &str, effective: &T) -> String {
    let body = serde_json::to_string(effective).expect("config is serializable");
    spinenc::util::fnv1a64_hex(format!("{label}:{body}").as_bytes())
}
