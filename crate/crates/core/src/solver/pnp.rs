use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, Rotation3, Vector3, Vector6};

use super::{Algorithm, Diagnostics, PoseEstimate, SolveError};
use crate::frames::{
    euler_to_rotation, pixel_to_image, project_to_pixel, rotation_to_euler, world_to_camera, CameraIntrinsics,
    EulerAngles, PixelPoint, Pose, WorldPoint,
};

pub const PNP_MAX_ITERATIONS: usize = 100;
/// Converged solutions with a larger RMS reprojection error are rejected.
pub const PNP_MAX_RMS_PX: f64 = 5.0;

const STEP_TOL: f64 = 1e-10;
const JACOBIAN_STEP: f64 = 1e-6;

fn pose_of(x: &Vector6<f64>) -> Pose {
    Pose::from_euler(EulerAngles::new(x[0], x[1], x[2]), Vector3::new(x[3], x[4], x[5]))
}

fn residuals(x: &Vector6<f64>, corrs: &[(WorldPoint, PixelPoint)], k: &CameraIntrinsics) -> Option<DVector<f64>> {
    let pose = pose_of(x);
    let mut r = DVector::zeros(2 * corrs.len());
    for (i, (w, px)) in corrs.iter().enumerate() {
        let p = project_to_pixel(&world_to_camera(w, &pose), k).ok()?;
        r[2 * i] = p.u - px.u;
        r[2 * i + 1] = p.v - px.v;
    }
    Some(r)
}

fn cost(x: &Vector6<f64>, corrs: &[(WorldPoint, PixelPoint)], k: &CameraIntrinsics) -> f64 {
    residuals(x, corrs, k).map_or(f64::INFINITY, |r| r.norm_squared())
}

struct Run {
    x: Vector6<f64>,
    cost: f64,
    iterations: usize,
}

fn gauss_newton(mut x: Vector6<f64>, corrs: &[(WorldPoint, PixelPoint)], k: &CameraIntrinsics) -> Run {
    let mut c = cost(&x, corrs, k);
    let mut iterations = 0;
    while iterations < PNP_MAX_ITERATIONS && c.is_finite() {
        iterations += 1;
        let Some(r) = residuals(&x, corrs, k) else { break };
        let mut jac = DMatrix::zeros(r.len(), 6);
        let mut ok = true;
        for j in 0..6 {
            let mut hi = x;
            let mut lo = x;
            hi[j] += JACOBIAN_STEP;
            lo[j] -= JACOBIAN_STEP;
            match (residuals(&hi, corrs, k), residuals(&lo, corrs, k)) {
                (Some(a), Some(b)) => jac.set_column(j, &((a - b) / (2.0 * JACOBIAN_STEP))),
                _ => ok = false,
            }
        }
        if !ok {
            break;
        }
        let jtj: Matrix6<f64> = (jac.transpose() * &jac).fixed_view::<6, 6>(0, 0).into();
        let jtr: Vector6<f64> = (jac.transpose() * &r).fixed_rows::<6>(0).into();
        let damped = jtj + Matrix6::identity() * (1e-12 * jtj.trace().max(1e-300));
        let Some(step) = damped.cholesky().map(|ch| -ch.solve(&jtr)) else {
            break;
        };

        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand = x + step * scale;
            let cc = cost(&cand, corrs, k);
            if cc <= c {
                x = cand;
                c = cc;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted || (step * scale).norm() < STEP_TOL {
            break;
        }
    }
    Run { x, cost: c, iterations }
}

/// Minimises pixel reprojection error over roll, pitch, yaw and translation
/// by Gauss-Newton. Starts from `init` with four yaws a quarter turn apart
/// and, when the world points share a height, from the plane homography
/// pose. The lowest cost wins.
pub fn pnp_baseline(
    corrs: &[(WorldPoint, PixelPoint)],
    k: &CameraIntrinsics,
    init: &Pose,
) -> Result<PoseEstimate, SolveError> {
    if corrs.len() < 4 {
        return Err(SolveError::Precondition("PnP needs at least four correspondences"));
    }
    if !spans_plane(corrs.iter().map(|c| c.0)) {
        return Err(SolveError::Precondition("PnP world points are collinear"));
    }
    let e = rotation_to_euler(&init.rotation)?;
    let t = init.translation;
    let mut starts: Vec<Vector6<f64>> = [0.0, FRAC_PI_2, PI, -FRAC_PI_2]
        .into_iter()
        .map(|dpsi| Vector6::new(e.phi, e.theta, e.psi + dpsi, t.x, t.y, t.z))
        .collect();
    if let Some(p) = homography_pose(corrs, k) {
        if let Ok(h) = rotation_to_euler(&p.rotation) {
            let t = p.translation;
            starts.push(Vector6::new(h.phi, h.theta, h.psi, t.x, t.y, t.z));
        }
    }
    let best = starts
        .into_iter()
        .map(|x| gauss_newton(x, corrs, k))
        .min_by(|a, b| a.cost.total_cmp(&b.cost))
        .expect("at least four starts");
    let rms_px = (best.cost / corrs.len() as f64).sqrt();
    if !rms_px.is_finite() || rms_px > PNP_MAX_RMS_PX {
        return Err(SolveError::NonConvergence { rms_px });
    }
    let rotation = euler_to_rotation(EulerAngles::new(best.x[0], best.x[1], best.x[2]));
    Ok(PoseEstimate {
        pose: Pose::new(rotation, Vector3::new(best.x[3], best.x[4], best.x[5])),
        algorithm: Algorithm::Pnp,
        diagnostics: Diagnostics {
            reprojection_rms_px: Some(rms_px),
            iterations: Some(best.iterations),
            ..Diagnostics::default()
        },
    })
}

/// Closed-form pose from the homography between a horizontal world plane
/// and the normalised image. `None` unless every world point has the same
/// height.
fn homography_pose(corrs: &[(WorldPoint, PixelPoint)], k: &CameraIntrinsics) -> Option<Pose> {
    let z0 = corrs[0].0.z;
    if corrs.iter().any(|(w, _)| (w.z - z0).abs() > 1e-9) {
        return None;
    }
    // plane coordinates relative to the centroid keep the system well scaled
    let n = corrs.len();
    let c = corrs.iter().fold(Vector3::zeros(), |acc, (w, _)| acc + w.coords) / n as f64;
    // h33 = 1; two rows per correspondence
    let mut a = DMatrix::zeros(2 * n, 8);
    let mut b = DVector::zeros(2 * n);
    for (i, (w, px)) in corrs.iter().enumerate() {
        let q = pixel_to_image(*px, k);
        let (x, y) = (q.x / k.f, q.y / k.f);
        let (wx, wy) = (w.x - c.x, w.y - c.y);
        a.row_mut(2 * i)
            .copy_from_slice(&[wx, wy, 1.0, 0.0, 0.0, 0.0, -x * wx, -x * wy]);
        a.row_mut(2 * i + 1)
            .copy_from_slice(&[0.0, 0.0, 0.0, wx, wy, 1.0, -y * wx, -y * wy]);
        b[2 * i] = x;
        b[2 * i + 1] = y;
    }
    let h = a.svd(true, true).solve(&b, 1e-12).ok()?;
    let hm = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0);
    let (h1, h2, h3) = (
        hm.column(0).into_owned(),
        hm.column(1).into_owned(),
        hm.column(2).into_owned(),
    );
    let mut scale = 2.0 / (h1.norm() + h2.norm());
    // points must have positive depth
    let w0 = corrs[0].0;
    if (hm * Vector3::new(w0.x - c.x, w0.y - c.y, 1.0)).z < 0.0 {
        scale = -scale;
    }
    let (a1, a2, off) = (h1 * scale, h2 * scale, h3 * scale);
    let m = Matrix3::from_columns(&[a1, a2, a1.cross(&a2)]);
    let svd = m.svd(true, true);
    let rt = svd.u? * svd.v_t?;
    if !rt.iter().all(|v| v.is_finite()) || rt.determinant() < 0.0 {
        return None;
    }
    // camera frame point = Rᵀ (world - t), so R = rtᵀ and t = c - R off
    let r = Rotation3::from_matrix_unchecked(rt.transpose());
    let t = Vector3::new(c.x, c.y, z0) - r * off;
    Some(Pose::new(r, t))
}

fn spans_plane(points: impl Iterator<Item = WorldPoint>) -> bool {
    let pts: Vec<_> = points.collect();
    let origin = pts[0];
    let Some(dir) = pts.iter().map(|p| p - origin).find(|d| d.norm() > 1e-9) else {
        return false;
    };
    pts.iter().any(|p| (p - origin).cross(&dir).norm() > 1e-9 * dir.norm())
}

/// Upright camera two metres below the mean height of `world`, under its
/// horizontal centroid.
pub fn pnp_initial_pose(world: &[WorldPoint]) -> Pose {
    let n = world.len().max(1) as f64;
    let c = world.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords) / n;
    Pose::from_euler(EulerAngles::new(0.0, 0.0, 0.0), Vector3::new(c.x, c.y, c.z - 2.0))
}
