use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use vexpand::cotangent::GridSpec;
use vexpand::dynamics::TorusMap;
use vexpand::{Error, Result};

fn default_mu() -> f64 {
    1.0
}
fn default_n_max() -> usize {
    1
}
fn default_seed() -> u64 {
    42
}
fn default_samples() -> usize {
    100_000
}
fn default_orbits() -> usize {
    10_000
}
fn default_iterations() -> usize {
    1_000
}
fn default_burn_in() -> usize {
    100
}
fn default_bins() -> usize {
    64
}
fn default_density_grid() -> usize {
    256
}

/// Spectral-stage settings: Galerkin cutoffs and quadrature override.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralSpec {
    pub k_list: Vec<usize>,
    /// Quadrature size per axis; defaults to the oversampling rule.
    #[serde(default)]
    pub n_quad: Option<usize>,
    /// Evaluation points per axis for density.csv.
    #[serde(default = "default_density_grid")]
    pub density_grid: usize,
}

/// Oracle-stage settings: sampling sizes and the seed.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_orbits")]
    pub orbits: usize,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
}

impl Default for OracleSpec {
    fn default() -> Self {
        OracleSpec {
            seed: default_seed(),
            samples: default_samples(),
            orbits: default_orbits(),
            iterations: default_iterations(),
            burn_in: default_burn_in(),
            bins: default_bins(),
        }
    }
}

/// Cesàro-averaging settings.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CesaroSpec {
    /// Number of averaged powers.
    pub m_steps: usize,
    /// Initial condition: the Fourier mode of cos(2 pi k . x).
    pub mode: [i64; 2],
    pub cutoff: usize,
}

/// One experiment: a map, the weight exponent, and per-stage settings.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub map: TorusMap,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub spectral: Option<SpectralSpec>,
    #[serde(default)]
    pub oracle: Option<OracleSpec>,
    #[serde(default)]
    pub cesaro: Option<CesaroSpec>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl Config {
    pub fn load(path: &std::path::Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidParameter(format!("cannot read config {path:?}: {e}")))?;
        let cfg: Config = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidParameter(format!("invalid config {path:?}: {e}")))?;
        cfg.map.validate()?;
        if !(cfg.mu.is_finite()) {
            return Err(Error::InvalidParameter("mu must be finite".into()));
        }
        if cfg.n_max < 1 {
            return Err(Error::InvalidParameter("n_max must be >= 1".into()));
        }
        Ok(cfg)
    }

    pub fn grid(&self) -> Result<&GridSpec> {
        self.grid
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("missing required field: grid".into()))
    }

    pub fn spectral(&self) -> Result<&SpectralSpec> {
        self.spectral
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("missing required field: spectral".into()))
    }

    pub fn cesaro(&self) -> Result<&CesaroSpec> {
        self.cesaro
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("missing required field: cesaro".into()))
    }

    pub fn oracle(&self) -> OracleSpec {
        self.oracle.clone().unwrap_or_default()
    }
}
