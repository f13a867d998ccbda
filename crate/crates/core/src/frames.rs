//! Coordinate systems and the pinhole camera.
//!
//! Four frames are involved:
//!
//! - PCS: pixel coordinates `(u, v)` on the sensor.
//! - ICS: metric image-plane coordinates `(x, y)` in centimetres, origin at
//!   the principal point.
//! - CCS: camera frame in metres; `z` is the optical axis, the image plane
//!   sits at `z = f`.
//! - WCS: world frame in metres, `z` pointing up to the ceiling.
//!
//! Intrinsics are kept in centimetres as calibration tables usually give them.
//! The pinhole only ever uses ratios `x / z`, so the centimetre/metre
//! boundary is crossed exactly once, in [`project_to_image`] and
//! [`backproject_with_depth`], where the unit cancels.

use nalgebra::{Matrix3, Point3, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Point in the camera frame (m).
pub type CameraPoint = Point3<f64>;
/// Point in the world frame (m).
pub type WorldPoint = Point3<f64>;
/// Point in the auxiliary (cone-canonical) frame.
pub type AcsPoint = Point3<f64>;

/// Orthonormality and determinant tolerance for [`Rotation`] validation.
pub const ROTATION_TOL: f64 = 1e-10;
/// `|cos θ|` below this is treated as gimbal lock.
pub const GIMBAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FramesError {
    #[error("point is not in front of the camera (z = {z})")]
    NotInFrontOfCamera { z: f64 },
    #[error("depth must be positive (z = {z})")]
    NonPositiveDepth { z: f64 },
    #[error("gimbal lock: |cos(theta)| = {cos_theta:e}")]
    GimbalLock { cos_theta: f64 },
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("matrix is not a rotation (orthonormality error {ortho_error:e}, det {det})")]
    InvalidRotation { ortho_error: f64, det: f64 },
}

/// Pinhole intrinsics. Focal length and pixel pitch in cm, principal point
/// and image size in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraIntrinsics {
    pub f: f64,
    pub dx: f64,
    pub dy: f64,
    pub u0: f64,
    pub v0: f64,
    pub width: f64,
    pub height: f64,
}

impl CameraIntrinsics {
    pub fn new(f: f64, dx: f64, dy: f64, u0: f64, v0: f64, width: f64, height: f64) -> Result<Self, FramesError> {
        let k = Self {
            f,
            dx,
            dy,
            u0,
            v0,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    /// 640x480 sensor, 1.25e-3 cm pitch, principal point at the image
    /// centre and f = 0.4 cm (about 90 degrees horizontal field of view).
    pub fn simulation_default() -> Self {
        Self {
            f: 0.4,
            dx: 1.25e-3,
            dy: 1.25e-3,
            u0: 320.0,
            v0: 240.0,
            width: 640.0,
            height: 480.0,
        }
    }

    pub fn validate(&self) -> Result<(), FramesError> {
        let all = [self.f, self.dx, self.dy, self.u0, self.v0, self.width, self.height];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(FramesError::InvalidIntrinsics("non-finite field".into()));
        }
        if self.f <= 0.0 {
            return Err(FramesError::InvalidIntrinsics("f must be > 0".into()));
        }
        if self.dx <= 0.0 || self.dy <= 0.0 {
            return Err(FramesError::InvalidIntrinsics("dx and dy must be > 0".into()));
        }
        if !(self.u0 > 0.0 && self.u0 < self.width) {
            return Err(FramesError::InvalidIntrinsics("u0 must lie inside (0, width)".into()));
        }
        if !(self.v0 > 0.0 && self.v0 < self.height) {
            return Err(FramesError::InvalidIntrinsics("v0 must lie inside (0, height)".into()));
        }
        Ok(())
    }

    /// Focal length expressed in pixels along u.
    pub fn focal_px(&self) -> f64 {
        self.f / self.dx
    }

    pub fn contains(&self, p: PixelPoint) -> bool {
        p.u >= 0.0 && p.u <= self.width && p.v >= 0.0 && p.v <= self.height
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
}

impl PixelPoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }
}

/// Image-plane point in cm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImagePoint {
    pub x: f64,
    pub y: f64,
}

impl ImagePoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

pub fn pixel_to_image(p: PixelPoint, k: &CameraIntrinsics) -> ImagePoint {
    ImagePoint {
        x: k.dx * (p.u - k.u0),
        y: k.dy * (p.v - k.v0),
    }
}

pub fn image_to_pixel(q: ImagePoint, k: &CameraIntrinsics) -> PixelPoint {
    PixelPoint {
        u: q.x / k.dx + k.u0,
        v: q.y / k.dy + k.v0,
    }
}

pub fn project_to_image(p: &CameraPoint, k: &CameraIntrinsics) -> Result<ImagePoint, FramesError> {
    if !(p.z > 0.0) {
        return Err(FramesError::NotInFrontOfCamera { z: p.z });
    }
    Ok(ImagePoint {
        x: k.f * p.x / p.z,
        y: k.f * p.y / p.z,
    })
}

pub fn project_to_pixel(p: &CameraPoint, k: &CameraIntrinsics) -> Result<PixelPoint, FramesError> {
    project_to_image(p, k).map(|q| image_to_pixel(q, k))
}

pub fn backproject_with_depth(q: ImagePoint, z: f64, k: &CameraIntrinsics) -> Result<CameraPoint, FramesError> {
    if !(z > 0.0) {
        return Err(FramesError::NonPositiveDepth { z });
    }
    Ok(CameraPoint::new(z * q.x / k.f, z * q.y / k.f, z))
}

/// The image point as a CCS vector `(x, y, f)`, in cm. Used as a ray
/// direction; its length carries no meaning.
pub fn image_plane_embedding(q: ImagePoint, k: &CameraIntrinsics) -> Vector3<f64> {
    Vector3::new(q.x, q.y, k.f)
}

/// Camera pose in the world: `P_w = R * P_c + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub rotation: Rotation3<f64>,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn new(rotation: Rotation3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    pub fn identity() -> Self {
        Self::new(Rotation3::identity(), Vector3::zeros())
    }

    pub fn from_euler(e: EulerAngles, translation: Vector3<f64>) -> Self {
        Self::new(euler_to_rotation(e), translation)
    }

    pub fn location(&self) -> WorldPoint {
        WorldPoint::from(self.translation)
    }
}

pub fn camera_to_world(p: &CameraPoint, pose: &Pose) -> WorldPoint {
    pose.rotation * p + pose.translation
}

pub fn world_to_camera(p: &WorldPoint, pose: &Pose) -> CameraPoint {
    pose.rotation.inverse() * (p - pose.translation)
}

/// Checks `RᵀR = I` and `det R = +1` to [`ROTATION_TOL`].
pub fn validate_rotation(m: &Matrix3<f64>) -> Result<Rotation3<f64>, FramesError> {
    let ortho_error = (m.transpose() * m - Matrix3::identity()).abs().max();
    let det = m.determinant();
    if !(ortho_error <= ROTATION_TOL) || !((det - 1.0).abs() <= ROTATION_TOL) {
        return Err(FramesError::InvalidRotation { ortho_error, det });
    }
    Ok(Rotation3::from_matrix_unchecked(*m))
}

/// Euler angles in radians about the camera x, y and z axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles {
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
}

impl EulerAngles {
    pub fn new(phi: f64, theta: f64, psi: f64) -> Self {
        Self { phi, theta, psi }
    }

    pub fn to_degrees(self) -> [f64; 3] {
        [self.phi.to_degrees(), self.theta.to_degrees(), self.psi.to_degrees()]
    }
}

pub fn rot_x(phi: f64) -> Matrix3<f64> {
    let (s, c) = phi.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(psi: f64) -> Matrix3<f64> {
    let (s, c) = psi.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// `R = R_Z(ψ) · R_Y(θ) · R_X(φ)`.
///
/// This composition is the one under which the luminaire normal seen from
/// the camera, `Rᵀ (0, 0, -1)`, is `(sin θ, -cos θ sin φ, -cos θ cos φ)` and
/// does not depend on ψ. The pose solvers rely on that separation.
pub fn euler_to_rotation(e: EulerAngles) -> Rotation3<f64> {
    Rotation3::from_matrix_unchecked(rot_z(e.psi) * rot_y(e.theta) * rot_x(e.phi))
}

/// Inverse of [`euler_to_rotation`] with θ on the principal branch
/// `[-π/2, π/2]`.
pub fn rotation_to_euler(r: &Rotation3<f64>) -> Result<EulerAngles, FramesError> {
    let m = r.matrix();
    let sin_theta = (-m[(2, 0)]).clamp(-1.0, 1.0);
    let cos_theta = m[(2, 1)].hypot(m[(2, 2)]);
    if cos_theta < GIMBAL_TOL {
        return Err(FramesError::GimbalLock { cos_theta });
    }
    let theta = sin_theta.atan2(cos_theta);
    let phi = m[(2, 1)].atan2(m[(2, 2)]);
    let psi = m[(1, 0)].atan2(m[(0, 0)]);
    Ok(EulerAngles {
        phi: wrap_angle(phi),
        theta,
        psi: wrap_angle(psi),
    })
}

/// Maps an angle onto `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Unit quaternion on the canonical hemisphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub fn as_array(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn norm(&self) -> f64 {
        self.as_array().iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Flips the sign so that `w >= 0`; when `w` vanishes the first nonzero
    /// component is made positive instead.
    pub fn canonical(self) -> Self {
        const EPS: f64 = 1e-12;
        let comps = self.as_array();
        let lead = comps.iter().copied().find(|c| c.abs() > EPS).unwrap_or(0.0);
        if lead < 0.0 {
            Self {
                w: -self.w,
                x: -self.x,
                y: -self.y,
                z: -self.z,
            }
        } else {
            self
        }
    }
}

pub fn rotation_to_quaternion(r: &Rotation3<f64>) -> Quaternion {
    let q = UnitQuaternion::from_rotation_matrix(r);
    let q = q.quaternion();
    Quaternion {
        w: q.w,
        x: q.i,
        y: q.j,
        z: q.k,
    }
    .canonical()
}
