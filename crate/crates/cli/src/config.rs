//! Run configuration: one JSON file drives every subcommand.
//!
//! Angles are radians, the gain/loss strength is dimensionless, and unknown
//! keys are rejected everywhere so a typo cannot silently fall back to a
//! default.

use blochtomo::image::FrameGeometry;
use blochtomo::polarimetry::NoiseConfig;
use blochtomo::spectral::{ModelParams, SpectralError};
use blochtomo::tomography::SolverConfig;
use blochtomo::topology::PhaseDiagramSpec;
use serde::{Deserialize, Serialize};

/// Walk parameters, given either directly or as a two-element cascade
/// whose splitting angles and gain/loss exponents add.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    /// Two cascaded elements; the walk sees the summed settings.
    Cascade {
        delta1: f64,
        eta1: f64,
        delta2: f64,
        eta2: f64,
    },
    /// Direct walk parameters.
    Single { delta: f64, eta: f64 },
}

impl ModelSpec {
    /// Validated walk parameters (cascade settings summed).
    pub fn params(&self) -> Result<ModelParams, SpectralError> {
        match *self {
            ModelSpec::Cascade {
                delta1,
                eta1,
                delta2,
                eta2,
            } => ModelParams::cascade(delta1, eta1, delta2, eta2),
            ModelSpec::Single { delta, eta } => ModelParams::new(delta, eta),
        }
    }
}

/// Raw intensities for the `calibrate` subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationInput {
    /// Like-circular output power for a left-circular probe.
    pub i_ll: f64,
    /// Cross-circular output power for a left-circular probe.
    pub i_lr: f64,
    /// Transmitted power along the ordinary (gain) axis.
    pub i_ord: f64,
    /// Transmitted power along the extraordinary (loss) axis.
    pub i_ext: f64,
}

fn default_grid() -> usize {
    90
}

fn default_noise() -> NoiseConfig {
    NoiseConfig::noiseless(0)
}

fn default_pt_scan() -> Vec<f64> {
    vec![0.3, 0.6, 1.4]
}

/// Everything a run needs beyond the subcommand name.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Walk parameters; required by every subcommand except `calibrate`
    /// and `phase-diagram`.
    #[serde(default)]
    pub model: Option<ModelSpec>,
    /// Momentum pixels per zone sweep.
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Detector noise model for synthesis.
    #[serde(default = "default_noise")]
    pub noise: NoiseConfig,
    /// Per-pixel solver controls.
    #[serde(default)]
    pub solver: SolverConfig,
    /// When present, `simulate` also renders camera frames with this
    /// geometry.
    #[serde(default)]
    pub images: Option<FrameGeometry>,
    /// Input dataset for `reconstruct` (default: `dataset.json` in the
    /// output directory, the `simulate` layout).
    #[serde(default)]
    pub dataset_path: Option<String>,
    /// Input reconstruction for `analyze` (default: `reconstruction.json`
    /// in the output directory).
    #[serde(default)]
    pub reconstruction_path: Option<String>,
    /// Gain/loss strengths scanned by the symmetry report at the critical
    /// momentum.
    #[serde(default = "default_pt_scan")]
    pub pt_scan_etas: Vec<f64>,
    /// Grid for the `phase-diagram` subcommand (default: the built-in
    /// 12x8 sweep).
    #[serde(default)]
    pub phase_grid: Option<PhaseDiagramSpec>,
    /// Readings for the `calibrate` subcommand.
    #[serde(default)]
    pub calibration: Option<CalibrationInput>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: None,
            grid: default_grid(),
            noise: default_noise(),
            solver: SolverConfig::default(),
            images: None,
            dataset_path: None,
            reconstruction_path: None,
            pt_scan_etas: default_pt_scan(),
            phase_grid: None,
            calibration: None,
        }
    }
}
