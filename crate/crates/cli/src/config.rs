use std::path::Path;

use serde::{Deserialize, Serialize};

use arcpose::frames::CameraIntrinsics;
use arcpose::harness::ExperimentConfig;
use arcpose::sim::{CaptureConfig, PoseConstraint, Scenario, Scene};
use arcpose::solver::{Algorithm, Observation};

use crate::CliError;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Experiment file. Angles in degrees, lengths in m, camera in cm and px.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunFile {
    pub schema_version: u32,
    pub scene: Scene,
    pub camera: CameraIntrinsics,
    pub sigma_px: f64,
    /// Overrides every luminaire radius.
    pub radius_m: Option<f64>,
    pub arc_mode: Scenario,
    pub capture: CaptureConfig,
    pub pose: PoseFile,
    pub samples: usize,
    pub algorithms: Vec<Algorithm>,
    pub seed: u64,
    pub sweep: SweepFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoseFile {
    pub height_m: [f64; 2],
    pub max_tilt_deg: f64,
    pub min_visible: usize,
    pub visible_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepFile {
    pub sigma_px: Vec<f64>,
    pub radius_m: Vec<f64>,
}

impl Default for PoseFile {
    fn default() -> Self {
        let c = PoseConstraint::default();
        Self {
            height_m: c.height,
            max_tilt_deg: c.max_tilt.to_degrees(),
            min_visible: c.min_visible,
            visible_fraction: c.visible_fraction,
        }
    }
}

impl Default for SweepFile {
    fn default() -> Self {
        Self {
            sigma_px: vec![0.0, 1.0, 2.0, 3.0, 4.0],
            radius_m: vec![0.06, 0.08, 0.10, 0.12, 0.14, 0.16],
        }
    }
}

impl Default for RunFile {
    fn default() -> Self {
        let e = ExperimentConfig::default();
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            scene: e.scene,
            camera: e.intrinsics,
            sigma_px: e.sigma,
            radius_m: e.radius,
            arc_mode: e.scenario,
            capture: e.capture,
            pose: PoseFile::default(),
            samples: e.samples,
            algorithms: e.algorithms,
            seed: e.seed,
            sweep: SweepFile::default(),
        }
    }
}

impl RunFile {
    pub fn experiment(&self) -> Result<ExperimentConfig, CliError> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version: expected {CONFIG_SCHEMA_VERSION}, got {}",
                self.schema_version
            )));
        }
        let cfg = ExperimentConfig {
            scene: self.scene.clone(),
            intrinsics: self.camera,
            sigma: self.sigma_px,
            radius: self.radius_m,
            scenario: self.arc_mode,
            capture: self.capture,
            constraint: PoseConstraint {
                height: self.pose.height_m,
                max_tilt: self.pose.max_tilt_deg.to_radians(),
                min_visible: self.pose.min_visible,
                visible_fraction: self.pose.visible_fraction,
            },
            samples: self.samples,
            algorithms: self.algorithms.clone(),
            seed: self.seed,
        };
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }
}

/// What `solve` reads besides the scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationFile {
    pub schema_version: u32,
    #[serde(default = "CameraIntrinsics::simulation_default")]
    pub camera: CameraIntrinsics,
    pub observations: Vec<Observation>,
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::from_io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
