//! Pose solvers.
//!
//! Both closed-form solvers share the same front end: fit the viewing cone
//! of each observed luminaire, take the two candidate normals of each, and
//! keep the pair that agrees (all luminaires hang from parallel planes). The
//! chosen normal gives roll and pitch directly. Yaw needs one horizontal
//! direction known in both frames:
//!
//! - [`solve_vpca`] uses a completely visible luminaire whose centre and mark
//!   point projections are known; the mark lies along world +y from the
//!   centre.
//! - [`solve_oavpa`] works from two arcs only, approximating each centre's
//!   projection by the centre of its fitted ellipse and using the direction
//!   between the two luminaire centres.
//!
//! [`solve_vpa`] picks between the two. [`pnp_baseline`] is an unrelated
//! reprojection-error minimiser used for comparison.

mod pipeline;
mod pnp;

pub use pipeline::{oavpa_pair, solve_oavpa, solve_vpa, solve_vpca, vpca_pair};
pub use pnp::{pnp_baseline, pnp_initial_pose, PNP_MAX_ITERATIONS, PNP_MAX_RMS_PX};

use std::collections::BTreeMap;

use nalgebra::{Matrix3x2, Rotation3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::conic::{CandidateNormal, ConicError, EllipseCoeffs};
use crate::frames::{rot_x, rot_y, wrap_angle, FramesError, PixelPoint, Pose, WorldPoint, GIMBAL_TOL};

pub type LuminaireId = u32;
pub type LuminaireMap = BTreeMap<LuminaireId, LuminaireInfo>;

/// Candidate pairs closer than this are treated as tied.
pub const DISAMBIGUATION_TIE: f64 = 1e-6;
/// Yaw residual above which the observation is rejected.
pub const PSI_INCONSISTENT: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Frames(#[from] FramesError),
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error("ambiguous normal disambiguation (gap {gap:e})")]
    AmbiguousDisambiguation { gap: f64 },
    #[error("yaw equations are inconsistent (residual {residual:e})")]
    InconsistentInput { residual: f64 },
    #[error("reference direction is vertical; yaw is unobservable")]
    DegenerateDirection,
    #[error("unknown luminaire {0}")]
    UnknownLuminaire(LuminaireId),
    #[error("precondition violated: {0}")]
    Precondition(&'static str),
    #[error("too few usable luminaires: need 2, got {got}")]
    TooFewLuminaires { got: usize },
    #[error("reprojection minimisation did not converge (rms {rms_px} px)")]
    NonConvergence { rms_px: f64 },
}

impl SolveError {
    /// Short machine-friendly name for result files.
    pub fn kind(&self) -> &'static str {
        match self {
            SolveError::Frames(FramesError::GimbalLock { .. }) => "GimbalLock",
            SolveError::Frames(_) => "Frames",
            SolveError::Conic(ConicError::TooFewPoints { .. }) => "TooFewPoints",
            SolveError::Conic(ConicError::DegenerateConic(_)) => "DegenerateConic",
            SolveError::Conic(ConicError::NotACone { .. }) => "NotACone",
            SolveError::Conic(ConicError::ParallelLine { .. }) => "ParallelLine",
            SolveError::Conic(ConicError::InvalidRadius(_)) => "InvalidRadius",
            SolveError::Conic(ConicError::LineParallelToPlane) => "LineParallelToPlane",
            SolveError::Conic(ConicError::BehindCamera) => "BehindCamera",
            SolveError::AmbiguousDisambiguation { .. } => "AmbiguousDisambiguation",
            SolveError::InconsistentInput { .. } => "InconsistentInput",
            SolveError::DegenerateDirection => "DegenerateDirection",
            SolveError::UnknownLuminaire(_) => "UnknownLuminaire",
            SolveError::Precondition(_) => "Precondition",
            SolveError::TooFewLuminaires { .. } => "TooFewLuminaires",
            SolveError::NonConvergence { .. } => "NonConvergence",
        }
    }
}

/// A ceiling luminaire as broadcast over its own light: centre `G`, mark
/// point `M` on the rim along world +y, radius, and the downward normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LuminaireInfo {
    pub id: LuminaireId,
    pub center_w: WorldPoint,
    pub mark_w: WorldPoint,
    pub radius: f64,
    pub normal_w: Vector3<f64>,
}

impl LuminaireInfo {
    pub fn new(id: LuminaireId, center_w: WorldPoint, radius: f64) -> Self {
        Self {
            id,
            center_w,
            mark_w: center_w + Vector3::y() * radius,
            radius,
            normal_w: -Vector3::z(),
        }
    }

    /// World position of the rim point at angle `alpha` from +x towards +y.
    pub fn rim_point(&self, alpha: f64) -> WorldPoint {
        self.center_w + Vector3::new(alpha.cos(), alpha.sin(), 0.0) * self.radius
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.radius > 0.0) {
            return Err(SolveError::Conic(ConicError::InvalidRadius(self.radius)));
        }
        let gm = self.mark_w - self.center_w;
        if (gm.norm() - self.radius).abs() > 1e-9 || (gm / gm.norm() - Vector3::y()).norm() > 1e-9 {
            return Err(SolveError::Precondition("mark point must sit at +y on the rim"));
        }
        Ok(())
    }
}

/// What the camera extracted for one luminaire.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub luminaire_id: LuminaireId,
    pub ellipse: EllipseCoeffs,
    /// The whole rim was captured and the centre and mark projections are
    /// available.
    pub complete: bool,
    pub center_proj: Option<PixelPoint>,
    pub mark_proj: Option<PixelPoint>,
    /// Number of contour points behind the ellipse fit.
    pub arc_points: usize,
}

impl Observation {
    pub fn has_markers(&self) -> bool {
        self.complete && self.center_proj.is_some() && self.mark_proj.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Dispatch between V-PCA and OA-V-PA.
    Vpa,
    Vpca,
    Oavpa,
    Pnp,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Vpa => "vpa",
            Algorithm::Vpca => "vpca",
            Algorithm::Oavpa => "oavpa",
            Algorithm::Pnp => "pnp",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "vpa" => Ok(Algorithm::Vpa),
            "vpca" => Ok(Algorithm::Vpca),
            "oavpa" => Ok(Algorithm::Oavpa),
            "pnp" => Ok(Algorithm::Pnp),
            other => Err(format!("unknown algorithm '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Chosen section slope per luminaire.
    pub chosen_k: Vec<(LuminaireId, f64)>,
    pub disambiguation_gap: Option<f64>,
    pub psi_residual: Option<f64>,
    pub reprojection_rms_px: Option<f64>,
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseEstimate {
    pub pose: Pose,
    /// The algorithm that actually produced the pose.
    pub algorithm: Algorithm,
    pub diagnostics: Diagnostics,
}

/// Outcome of matching the candidate normals of two luminaires.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disambiguation {
    pub first: CandidateNormal,
    pub second: CandidateNormal,
    /// Distance of the best pair.
    pub distance: f64,
    /// Second-best distance minus best.
    pub gap: f64,
}

/// Picks the candidate of each luminaire such that the two normals agree
/// best.
pub fn disambiguate_normal(
    first: &[CandidateNormal; 2],
    second: &[CandidateNormal; 2],
) -> Result<Disambiguation, SolveError> {
    let mut pairs: Vec<(f64, usize, usize)> = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| ((first[i].normal_ccs - second[j].normal_ccs).norm(), i, j))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (best, bi, bj) = pairs[0];
    let (next, ni, nj) = pairs[1];
    let gap = next - best;
    if gap < DISAMBIGUATION_TIE {
        let differs =
            |a: &CandidateNormal, b: &CandidateNormal| (a.normal_ccs - b.normal_ccs).norm() > DISAMBIGUATION_TIE;
        if differs(&first[bi], &first[ni]) || differs(&second[bj], &second[nj]) {
            return Err(SolveError::AmbiguousDisambiguation { gap });
        }
    }
    Ok(Disambiguation {
        first: first[bi],
        second: second[bj],
        distance: best,
        gap,
    })
}

/// Roll and pitch from the luminaire normal seen in the camera frame,
/// `n = (sin θ, -cos θ sin φ, -cos θ cos φ)`.
pub fn euler_from_normal(n: &Vector3<f64>) -> Result<(f64, f64), SolveError> {
    let norm = n.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(SolveError::Precondition("normal must be a finite nonzero vector"));
    }
    let t = n / norm;
    if t.x.abs() >= 1.0 - 1e-9 {
        return Err(FramesError::GimbalLock {
            cos_theta: (1.0 - t.x * t.x).max(0.0).sqrt(),
        }
        .into());
    }
    let theta = t.x.asin();
    let phi = (-t.y).atan2(-t.z);
    Ok((phi, theta))
}

/// Yaw together with the least-squares residual of its three equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YawSolution {
    pub psi: f64,
    pub residual: f64,
}

fn check_gimbal(theta: f64) -> Result<(), SolveError> {
    let cos_theta = theta.cos();
    if cos_theta.abs() <= GIMBAL_TOL {
        return Err(FramesError::GimbalLock { cos_theta }.into());
    }
    Ok(())
}

fn yaw_from_system(a: &Matrix3x2<f64>, rhs: &Vector3<f64>) -> Option<YawSolution> {
    let ata = a.transpose() * a;
    let sol = ata.try_inverse()? * a.transpose() * rhs;
    let norm = sol.norm();
    if !(norm > 0.0) {
        return None;
    }
    let unit = sol / norm;
    Some(YawSolution {
        // unit = (cos ψ, sin ψ)
        psi: wrap_angle(unit[1].atan2(unit[0])),
        residual: (a * unit - rhs).norm(),
    })
}

/// Yaw from the centre-to-mark direction `s` in the camera frame, given roll
/// and pitch. The world direction is +y, so `s = Rᵀ (0, 1, 0)`:
///
/// ```text
/// sin ψ cos θ                         = s₁
/// cos ψ cos φ + sin ψ sin θ sin φ     = s₂
/// -cos ψ sin φ + sin ψ sin θ cos φ    = s₃
/// ```
///
/// solved for `(sin ψ, cos ψ)` in the least-squares sense.
pub fn psi_vpca(s: &Vector3<f64>, phi: f64, theta: f64) -> Result<YawSolution, SolveError> {
    check_gimbal(theta)?;
    let (sp, cp) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    // columns multiply (cos ψ, sin ψ)
    let a = Matrix3x2::new(0.0, ct, cp, st * sp, -sp, st * cp);
    let sol = yaw_from_system(&a, s).ok_or(SolveError::DegenerateDirection)?;
    if sol.residual > PSI_INCONSISTENT {
        return Err(SolveError::InconsistentInput { residual: sol.residual });
    }
    Ok(sol)
}

/// Yaw from a direction known as `g` in the world and `h` in the camera
/// frame, `h = Rᵀ g` with `R = R_Z(ψ) R_Y(θ) R_X(φ)`. Writing
/// `B = R_Y(θ) R_X(φ)`, the relation is linear in `(cos ψ, sin ψ)`:
/// `h = Bᵀ ([g₁ g₂; g₂ -g₁; 0 0] (cos ψ, sin ψ)ᵀ + g₃ e_z)`.
pub fn psi_oavpa(g: &Vector3<f64>, h: &Vector3<f64>, phi: f64, theta: f64) -> Result<YawSolution, SolveError> {
    check_gimbal(theta)?;
    let horizontal = Vector2::new(g.x, g.y).norm();
    if horizontal <= 1e-9 * g.norm() || !horizontal.is_finite() {
        return Err(SolveError::DegenerateDirection);
    }
    let bt = (rot_y(theta) * rot_x(phi)).transpose();
    let m = Matrix3x2::new(g.x, g.y, g.y, -g.x, 0.0, 0.0);
    let a = bt * m;
    let rhs = h - bt * Vector3::z() * g.z;
    yaw_from_system(&a, &rhs).ok_or(SolveError::DegenerateDirection)
}

/// `t = ½ [(p_w1 - R p_c1) + (p_w2 - R p_c2)]`.
pub fn translation_two_points(
    pw1: &WorldPoint,
    pc1: &WorldPoint,
    pw2: &WorldPoint,
    pc2: &WorldPoint,
    r: &Rotation3<f64>,
) -> Vector3<f64> {
    ((pw1 - r * pc1) + (pw2 - r * pc2)) * 0.5
}
