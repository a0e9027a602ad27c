//! Declarative run configuration: one JSON file describes the data source,
//! split, branches, and grid axes for a whole run.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{load_capacity_csv, synthetic_series, CapacitySeries, CsvSchema, SyntheticModel};
use crate::error::{Error, Result};
use crate::pipeline::{BranchConfig, GridAxes, GridBase, DEFAULT_EOL_THRESHOLD};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    Csv {
        path: PathBuf,
        battery_id: String,
        rated_capacity_ah: f64,
        #[serde(default)]
        schema: Option<CsvSchema>,
    },
    Synthetic {
        battery_id: String,
        n_cycles: usize,
        rated_capacity_ah: f64,
        model: SyntheticModel,
        #[serde(default)]
        seed: u64,
    },
}

impl DataSource {
    pub fn load(&self) -> Result<CapacitySeries> {
        match self {
            DataSource::Csv { path, battery_id, rated_capacity_ah, schema } => {
                let schema = schema.clone().unwrap_or_default();
                load_capacity_csv(path, battery_id, *rated_capacity_ah, &schema)
            }
            DataSource::Synthetic { battery_id, n_cycles, rated_capacity_ah, model, seed } => {
                let mut s = synthetic_series(model, *n_cycles, *rated_capacity_ah, *seed)?;
                s.battery_id = battery_id.clone();
                Ok(s)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridConfig {
    pub base: GridBase,
    #[serde(default)]
    pub axes: GridAxes,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: DataSource,
    /// Fraction of cycles used for training (temporal split).
    #[serde(default = "default_split")]
    pub split_fraction: f64,
    #[serde(default)]
    pub branches: Vec<BranchConfig>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_eol")]
    pub eol_threshold: f64,
}

fn default_split() -> f64 {
    0.5
}
fn default_eol() -> f64 {
    DEFAULT_EOL_THRESHOLD
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.split_fraction && self.split_fraction < 1.0) {
            return Err(Error::config(format!(
                "split_fraction must be in (0,1), got {}",
                self.split_fraction
            )));
        }
        if !(0.0 < self.eol_threshold && self.eol_threshold < 1.0) {
            return Err(Error::config(format!(
                "eol_threshold must be in (0,1), got {}",
                self.eol_threshold
            )));
        }
        if let DataSource::Csv { path, .. } = &self.data {
            if !path.exists() {
                return Err(Error::config(format!("data file not found: {}", path.display())));
            }
        }
        let mut ids = BTreeSet::new();
        for b in &self.branches {
            b.validate()?;
            if !ids.insert(&b.id) {
                return Err(Error::config(format!("duplicate branch id {}", b.id)));
            }
        }
        if let Some(grid) = &self.grid {
            grid.axes.validate()?;
            grid.base.denoiser.validate()?;
        }
        Ok(())
    }

    /// Stable content hash of the configuration, used to address run outputs.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config is serializable");
        let digest = Sha256::digest(&json);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        hex[..12].to_string()
    }

    /// Temporal train/test split of a normalized series.
    pub fn split<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        let cut = ((x.len() as f64) * self.split_fraction).floor() as usize;
        let cut = cut.clamp(1, x.len() - 1);
        x.split_at(cut)
    }
}

pub fn load_run_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
    let cfg: RunConfig = serde_json::from_str(&text)
        .map_err(|e| Error::config(format!("invalid config {}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}
