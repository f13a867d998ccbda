//! Monte Carlo runs, sweeps and result files.
//!
//! Every sample is generated from its own random stream (see
//! [`crate::sim::sample_rng`]) and solved independently, so a run gives the
//! same records on any number of threads. Sweeps reuse the run seed for
//! every value: each point of a noise sweep sees the same poses and the
//! same standard-normal draws, scaled differently.

mod output;
mod stats;

pub use output::{read_records_csv, write_results, write_sweep, WrittenFiles, RECORD_COLUMNS};
pub use stats::{cdf, cdf_grid, e_loc, e_pos, percentile_sorted, summarize, SummaryStats, PERCENTILES};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::frames::{CameraIntrinsics, Pose};
use crate::sim::{generate_sample, CaptureConfig, NoiseModel, PoseConstraint, Sample, SampleConfig, Scenario, Scene};
use crate::solver::{
    oavpa_pair, pnp_baseline, pnp_initial_pose, solve_oavpa, solve_vpa, solve_vpca, vpca_pair, Algorithm, LuminaireMap,
    PoseEstimate, SolveError,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("no successful records ({failures} failures)")]
    NoSuccessfulRecords { failures: usize },
    #[error("cannot write {path}: {message}")]
    IoFailure { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scene: Scene,
    pub intrinsics: CameraIntrinsics,
    /// Pixel noise standard deviation.
    pub sigma: f64,
    /// Overrides every luminaire radius in the scene (m).
    pub radius: Option<f64>,
    pub scenario: Scenario,
    pub capture: CaptureConfig,
    pub constraint: PoseConstraint,
    pub samples: usize,
    pub algorithms: Vec<Algorithm>,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    /// Four-luminaire room, 15 cm luminaires, 2 px noise, 20 images per location,
    /// 10 000 samples.
    fn default() -> Self {
        Self {
            scene: Scene::table_iii(0.15),
            intrinsics: CameraIntrinsics::simulation_default(),
            sigma: 2.0,
            radius: None,
            scenario: Scenario::Mixed,
            capture: CaptureConfig::default(),
            constraint: PoseConstraint::default(),
            samples: 10_000,
            algorithms: vec![Algorithm::Vpa, Algorithm::Pnp],
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn sample_config(&self) -> SampleConfig {
        SampleConfig {
            scene: match self.radius {
                Some(r) => self.scene.with_radius(r),
                None => self.scene.clone(),
            },
            intrinsics: self.intrinsics,
            noise: NoiseModel { sigma: self.sigma },
            capture: self.capture,
            constraint: self.constraint,
            scenario: self.scenario,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.samples < 1 {
            return Err(HarnessError::ConfigInvalid("samples must be >= 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(HarnessError::ConfigInvalid("algorithms must not be empty".into()));
        }
        if let Some(r) = self.radius {
            if !(r > 0.0) || !r.is_finite() {
                return Err(HarnessError::ConfigInvalid(format!("radius must be > 0, got {r}")));
            }
        }
        self.sample_config()
            .validate()
            .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))
    }
}

/// One algorithm applied to one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub sample: u64,
    /// Requested algorithm.
    pub algorithm: Algorithm,
    /// The solver that produced the estimate; differs from `algorithm` only
    /// for the V-PA dispatcher.
    pub solved_by: Option<Algorithm>,
    /// Number of luminaires observed.
    pub visible: usize,
    pub truth: Pose,
    pub estimate: Option<Pose>,
    pub e_loc: Option<f64>,
    pub e_pos: Option<f64>,
    /// Error kind when no estimate was produced.
    pub failure: Option<String>,
}

/// Runs one algorithm on an already generated sample.
pub fn solve_sample(
    sample: &Sample,
    algorithm: Algorithm,
    lums: &LuminaireMap,
    k: &CameraIntrinsics,
) -> Result<PoseEstimate, SolveError> {
    let obs = &sample.observations;
    match algorithm {
        Algorithm::Vpa => solve_vpa(obs, lums, k),
        Algorithm::Vpca => {
            let (a, b) = vpca_pair(obs)?;
            solve_vpca(&a, &b, lums, k)
        }
        Algorithm::Oavpa => {
            let (a, b) = oavpa_pair(obs)?;
            solve_oavpa(&a, &b, lums, k)
        }
        Algorithm::Pnp => {
            let world: Vec<_> = sample.pnp_points.iter().map(|p| p.0).collect();
            pnp_baseline(&sample.pnp_points, k, &pnp_initial_pose(&world))
        }
    }
}

fn record(sample: &Sample, algorithm: Algorithm, result: Result<PoseEstimate, SolveError>) -> ResultRecord {
    let truth = sample.truth.pose;
    let (estimate, failure) = match result {
        Ok(est) => (Some(est), None),
        Err(e) => (None, Some(e.kind().to_string())),
    };
    ResultRecord {
        sample: sample.index,
        algorithm,
        solved_by: estimate.as_ref().map(|e| e.algorithm),
        visible: sample.observations.len(),
        truth,
        estimate: estimate.as_ref().map(|e| e.pose),
        e_loc: estimate.as_ref().map(|e| e_loc(&truth.location(), &e.pose.location())),
        e_pos: estimate.as_ref().map(|e| e_pos(&truth.rotation, &e.pose.rotation)),
        failure,
    }
}

fn run_one(cfg: &ExperimentConfig, sim: &SampleConfig, lums: &LuminaireMap, index: u64) -> Vec<ResultRecord> {
    match generate_sample(sim, cfg.seed, index) {
        Ok(sample) => cfg
            .algorithms
            .iter()
            .map(|&a| record(&sample, a, solve_sample(&sample, a, lums, &cfg.intrinsics)))
            .collect(),
        Err(e) => cfg
            .algorithms
            .iter()
            .map(|&a| ResultRecord {
                sample: index,
                algorithm: a,
                solved_by: None,
                visible: 0,
                truth: Pose::identity(),
                estimate: None,
                e_loc: None,
                e_pos: None,
                failure: Some(e.kind().to_string()),
            })
            .collect(),
    }
}

/// Generates and solves `cfg.samples` samples. Records come back ordered by
/// sample index, then by the order of `cfg.algorithms`. Failures of a
/// sample or a solver are recorded, never fatal.
pub fn run_monte_carlo(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>, HarnessError> {
    cfg.validate()?;
    let sim = cfg.sample_config();
    let lums = sim.scene.luminaire_map();
    let per_sample: Vec<Vec<ResultRecord>> = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|i| run_one(cfg, &sim, &lums, i))
        .collect();
    Ok(per_sample.into_iter().flatten().collect())
}

/// Records of one algorithm.
pub fn records_for(records: &[ResultRecord], algorithm: Algorithm) -> Vec<ResultRecord> {
    records.iter().filter(|r| r.algorithm == algorithm).cloned().collect()
}

/// Summary for each requested algorithm, in request order. Algorithms with
/// no successful record get `None`.
pub fn summarize_by_algorithm(
    records: &[ResultRecord],
    algorithms: &[Algorithm],
) -> Vec<(Algorithm, Option<SummaryStats>)> {
    algorithms
        .iter()
        .map(|&a| (a, summarize(&records_for(records, a)).ok()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Pixel noise standard deviation.
    Noise,
    /// Luminaire radius (m).
    Radius,
}

impl SweepParam {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepParam::Noise => "sigma_px",
            SweepParam::Radius => "radius_m",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub algorithm: Algorithm,
    pub stats: Option<SummaryStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub param: SweepParam,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// Mean E_loc per value for one algorithm; `None` where nothing
    /// succeeded.
    pub fn means(&self, algorithm: Algorithm) -> Vec<(f64, Option<f64>)> {
        self.points
            .iter()
            .filter(|p| p.algorithm == algorithm)
            .map(|p| (p.value, p.stats.as_ref().map(|s| s.mean_e_loc)))
            .collect()
    }

    pub fn stats(&self, algorithm: Algorithm) -> Vec<(f64, Option<&SummaryStats>)> {
        self.points
            .iter()
            .filter(|p| p.algorithm == algorithm)
            .map(|p| (p.value, p.stats.as_ref()))
            .collect()
    }
}

/// The configuration for one sweep value.
pub fn sweep_config(cfg: &ExperimentConfig, param: SweepParam, value: f64) -> ExperimentConfig {
    let mut c = cfg.clone();
    match param {
        SweepParam::Noise => c.sigma = value,
        SweepParam::Radius => c.radius = Some(value),
    }
    c
}

/// Runs `cfg` once per value with the same seed and summarises each
/// algorithm.
pub fn sweep(cfg: &ExperimentConfig, param: SweepParam, values: &[f64]) -> Result<SweepResult, HarnessError> {
    if values.is_empty() {
        return Err(HarnessError::ConfigInvalid("sweep values must not be empty".into()));
    }
    if values.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(HarnessError::ConfigInvalid("sweep values must be sorted".into()));
    }
    let mut points = Vec::new();
    for &v in values {
        let c = sweep_config(cfg, param, v);
        let records = run_monte_carlo(&c)?;
        for (algorithm, stats) in summarize_by_algorithm(&records, &c.algorithms) {
            points.push(SweepPoint {
                value: v,
                algorithm,
                stats,
            });
        }
    }
    Ok(SweepResult { param, points })
}
