//! JSON config schemas consumed by the subcommands.

use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use polyscan_core::geometry::{AcquisitionSpec, PolylineSpec};
use polyscan_core::recon::ImageGrid;

/// Input to `polyscan design`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignConfig {
    pub polyline: PolylineSpec,
    pub acquisition: AcquisitionSpec,
    /// Maximal horizontal target extent for the sampling check (m).
    /// Defaults to 0.5.
    #[serde(default)]
    pub target_dimension_d: Option<f64>,
    /// Vertical view angle (rad). Defaults to the angle the scan extent
    /// subtends from the scene center.
    #[serde(default)]
    pub theta_z: Option<f64>,
}

/// Input to `polyscan bench`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchConfig {
    pub design: DesignConfig,
    /// Scene file; the built-in five-point cross when omitted.
    #[serde(default)]
    pub scene: Option<PathBuf>,
    pub grid: ImageGrid,
    /// Algorithms to time; all three when omitted.
    #[serde(default)]
    pub algorithms: Option<Vec<String>>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

fn default_repeats() -> usize {
    3
}
