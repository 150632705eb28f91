//! Optional TOML configuration. Every key mirrors a command-line flag, and
//! flags win when both are given.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};

/// Seed used when neither a flag nor the configuration sets one.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub fit: FitSection,
    pub tail: TailSection,
    pub utest: UTestSection,
    pub report: ReportSection,
    pub ingest_hp: IngestHpSection,
    pub ingest_hpi: IngestHpiSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    pub families: Option<Vec<String>>,
    pub max_iterations: Option<usize>,
    pub tolerance: Option<f64>,
    pub restarts: Option<usize>,
    pub screening_size: Option<usize>,
    pub alpha_starts: Option<Vec<f64>>,
    pub beta2_start_factors: Option<Vec<f64>>,
    pub prior_lower: Option<f64>,
    pub prior_upper: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TailSection {
    pub start_rank: Option<usize>,
    pub manual_exclude: Option<usize>,
    pub fraction_of_max: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UTestSection {
    pub window: Option<usize>,
    pub low: Option<f64>,
    pub high: Option<f64>,
    pub tail_start_rank: Option<usize>,
    pub ci_level: Option<f64>,
    pub band_center: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub bins_per_decade: Option<u32>,
    pub ci_level: Option<f64>,
    pub band_center: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestHpSection {
    pub price_column: Option<String>,
    pub year_column: Option<String>,
    pub class_column: Option<String>,
    pub class_value: Option<String>,
    pub deflator: Option<PathBuf>,
    pub base_year: Option<i32>,
    pub year_min: Option<i32>,
    pub year_max: Option<i32>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestHpiSection {
    pub zip_column: Option<String>,
    pub year_column: Option<String>,
    pub hpi_column: Option<String>,
    pub years: Option<String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
    }
}
