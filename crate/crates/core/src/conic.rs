//! Ellipse fitting and the elliptical viewing cone of a circular luminaire.
//!
//! The contour of a luminaire projects to an ellipse
//! `a x² + b xy + c y² + d x + e y + 1 = 0` on the image plane. Joining that
//! ellipse to the camera centre gives a cone `vᵀ Q v = 0`. Rotating into the
//! cone's eigenframe (the auxiliary frame, ACS) diagonalises it to
//! `λ₁x² + λ₂y² + λ₃z² = 0` with `λ₃ < 0 < λ₂ ≤ λ₁`. Two plane families
//! `z = ±k x + b` cut that cone in circles; one of them is parallel to the
//! luminaire. Knowing the luminaire radius fixes `b`, which places the
//! luminaire plane in space.

use nalgebra::{DMatrix, DVector, Matrix3, Rotation3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::frames::{image_plane_embedding, pixel_to_image, CameraIntrinsics, CameraPoint, ImagePoint, PixelPoint};

pub const MIN_FIT_POINTS: usize = 5;
/// Slack on the strict ellipse discriminant, in the conditioned frame.
const DISCRIMINANT_SLACK: f64 = 1e-12;
/// Relative size below which an eigenvalue counts as zero.
const EIGEN_ZERO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConicError {
    #[error("too few points for an ellipse fit: need {MIN_FIT_POINTS}, got {got}")]
    TooFewPoints { got: usize },
    #[error("degenerate conic: {0}")]
    DegenerateConic(&'static str),
    #[error("matrix is not an elliptical cone (eigenvalues {lambdas:?})")]
    NotACone { lambdas: [f64; 3] },
    #[error("probe plane slope {k} is parallel to a cone generator (slope {generator})")]
    ParallelLine { k: f64, generator: f64 },
    #[error("luminaire radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error("viewing ray is parallel to the luminaire plane")]
    LineParallelToPlane,
    #[error("ray meets the luminaire plane behind the camera")]
    BehindCamera,
}

/// Conic coefficients with the constant term normalised to 1, in ICS units
/// (cm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipseCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

impl EllipseCoeffs {
    pub fn new(a: f64, b: f64, c: f64, d: f64, e: f64) -> Self {
        Self { a, b, c, d, e }
    }

    /// Algebraic residual of the conic equation at `p`.
    pub fn residual(&self, p: ImagePoint) -> f64 {
        self.a * p.x * p.x + self.b * p.x * p.y + self.c * p.y * p.y + self.d * p.x + self.e * p.y + 1.0
    }

    pub fn discriminant(&self) -> f64 {
        self.b * self.b - 4.0 * self.a * self.c
    }

    /// Symmetric 3x3 matrix of the conic in homogeneous image coordinates.
    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.a,
            self.b / 2.0,
            self.d / 2.0,
            self.b / 2.0,
            self.c,
            self.e / 2.0,
            self.d / 2.0,
            self.e / 2.0,
            1.0,
        )
    }

    /// Area enclosed by the ellipse (cm²); NaN for anything else.
    pub fn area(&self) -> f64 {
        let m = self.matrix();
        let minor = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(0, 1)];
        if !(minor > 0.0) {
            return f64::NAN;
        }
        std::f64::consts::PI * m.determinant().abs() / minor.powf(1.5)
    }

    pub fn is_finite(&self) -> bool {
        [self.a, self.b, self.c, self.d, self.e].iter().all(|v| v.is_finite())
    }

    /// Checks that the coefficients describe a real, non-degenerate ellipse.
    pub fn validate(&self) -> Result<(), ConicError> {
        if !self.is_finite() {
            return Err(ConicError::DegenerateConic("non-finite coefficients"));
        }
        check_real_ellipse(&self.matrix())
    }
}

fn check_real_ellipse(m: &Matrix3<f64>) -> Result<(), ConicError> {
    let scale = m.fixed_view::<2, 2>(0, 0).norm_squared();
    let disc_neg = 4.0 * (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]);
    if !(disc_neg > DISCRIMINANT_SLACK * scale) || scale == 0.0 {
        return Err(ConicError::DegenerateConic("not an ellipse (b² - 4ac >= 0)"));
    }
    // Real (non-empty) ellipse: det and trace of the quadratic part differ in sign.
    if !(m.determinant() * (m[(0, 0)] + m[(1, 1)]) < 0.0) {
        return Err(ConicError::DegenerateConic("imaginary or point ellipse"));
    }
    Ok(())
}

/// Least-squares ellipse through image points with the constant term fixed
/// to 1.
///
/// The points are centred on their mean and scaled to unit RMS radius before
/// solving; the coefficients are mapped back afterwards. The centroid of any
/// arc lies strictly inside the ellipse, so the constant term never vanishes
/// in the conditioned frame.
pub fn fit_ellipse(points: &[ImagePoint]) -> Result<EllipseCoeffs, ConicError> {
    let n = points.len();
    if n < MIN_FIT_POINTS {
        return Err(ConicError::TooFewPoints { got: n });
    }
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    let (mx, my) = (sx / n as f64, sy / n as f64);
    let rms = (points
        .iter()
        .map(|p| (p.x - mx).powi(2) + (p.y - my).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt();
    if !(rms > 0.0) || !rms.is_finite() {
        return Err(ConicError::DegenerateConic("points coincide"));
    }
    let s = rms / std::f64::consts::SQRT_2;

    let mut design = DMatrix::<f64>::zeros(n, 5);
    for (i, p) in points.iter().enumerate() {
        let x = (p.x - mx) / s;
        let y = (p.y - my) / s;
        design[(i, 0)] = x * x;
        design[(i, 1)] = x * y;
        design[(i, 2)] = y * y;
        design[(i, 3)] = x;
        design[(i, 4)] = y;
    }
    let rhs = DVector::<f64>::from_element(n, -1.0);
    let svd = design.svd(true, true);
    let sv_max = svd.singular_values.max();
    let sv_min = svd.singular_values.min();
    if !(sv_min > 1e-12 * sv_max) {
        return Err(ConicError::DegenerateConic("rank-deficient fit (collinear points?)"));
    }
    let sol = svd
        .solve(&rhs, 0.0)
        .map_err(|_| ConicError::DegenerateConic("least-squares solve failed"))?;
    let conditioned = EllipseCoeffs::new(sol[0], sol[1], sol[2], sol[3], sol[4]).matrix();
    check_real_ellipse(&conditioned)?;

    // x̃ = T x in homogeneous coordinates.
    let t = Matrix3::new(1.0 / s, 0.0, -mx / s, 0.0, 1.0 / s, -my / s, 0.0, 0.0, 1.0);
    let m = t.transpose() * conditioned * t;
    let f = m[(2, 2)];
    if !(f.abs() > 1e-14 * m.norm()) {
        return Err(ConicError::DegenerateConic(
            "ellipse passes through the image origin; constant term cannot be normalised",
        ));
    }
    let out = EllipseCoeffs::new(
        m[(0, 0)] / f,
        2.0 * m[(0, 1)] / f,
        m[(1, 1)] / f,
        2.0 * m[(0, 2)] / f,
        2.0 * m[(1, 2)] / f,
    );
    out.validate()?;
    Ok(out)
}

pub fn fit_ellipse_pixels(points: &[PixelPoint], k: &CameraIntrinsics) -> Result<EllipseCoeffs, ConicError> {
    let pts: Vec<ImagePoint> = points.iter().map(|p| pixel_to_image(*p, k)).collect();
    fit_ellipse(&pts)
}

pub fn ellipse_center(e: &EllipseCoeffs) -> Result<ImagePoint, ConicError> {
    let den = 4.0 * e.a * e.c - e.b * e.b;
    let scale = e.a * e.a + e.b * e.b + e.c * e.c;
    if !(den.abs() > DISCRIMINANT_SLACK * scale) {
        return Err(ConicError::DegenerateConic("4ac - b² vanishes"));
    }
    Ok(ImagePoint::new(
        (e.b * e.e - 2.0 * e.c * e.d) / den,
        (e.b * e.d - 2.0 * e.a * e.e) / den,
    ))
}

/// Cone through the camera centre and the image ellipse, with `f` in the
/// same unit as the ellipse (cm). Scaled by -1 when needed so that exactly
/// one eigenvalue is negative.
pub fn cone_from_ellipse(e: &EllipseCoeffs, f: f64) -> Matrix3<f64> {
    cone_from_conic(&e.matrix(), f)
}

/// Same as [`cone_from_ellipse`] for a conic matrix of arbitrary scale and
/// sign, `[x y 1] M [x y 1]ᵀ = 0`.
pub fn cone_from_conic(m: &Matrix3<f64>, f: f64) -> Matrix3<f64> {
    // v = (x, y, f) maps to (x, y, 1) by diag(1, 1, 1/f)
    let s = Matrix3::from_diagonal(&Vector3::new(f, f, 1.0));
    let q = s * m * s;
    // (+,+,-) has negative determinant, (-,-,+) positive.
    if q.determinant() > 0.0 {
        -q
    } else {
        q
    }
}

/// Eigenframe of a viewing cone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeDecomposition {
    pub q: Matrix3<f64>,
    /// `(λ₁, λ₂, λ₃)` with `λ₃ < 0 < λ₂ ≤ λ₁`.
    pub lambdas: [f64; 3],
    /// Rotation from ACS to CCS; its columns are the eigenvectors.
    pub r_a_c: Rotation3<f64>,
}

impl ConeDecomposition {
    /// Slope of the cone generators in the ACS xz-plane, `√(-λ₁/λ₃)`.
    pub fn generator_slope(&self) -> f64 {
        (-self.lambdas[0] / self.lambdas[2]).sqrt()
    }

    pub fn ccs_to_acs(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.r_a_c.inverse() * v
    }

    pub fn acs_to_ccs(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.r_a_c * v
    }
}

/// Diagonalises `q`, ordering eigenpairs as `λ₃ < 0 < λ₂ ≤ λ₁`.
///
/// The third eigenvector (the cone axis) is oriented towards positive camera
/// z, the first so that its largest component is positive, and the second
/// completes a right-handed frame.
pub fn decompose_cone(q: &Matrix3<f64>) -> Result<ConeDecomposition, ConicError> {
    let eig = SymmetricEigen::new(*q);
    let vals: [f64; 3] = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
    let magnitude: f64 = vals.iter().map(|v| v.abs()).sum();
    if !magnitude.is_finite() || magnitude == 0.0 || vals.iter().any(|v| v.abs() <= EIGEN_ZERO_TOL * magnitude) {
        return Err(ConicError::NotACone { lambdas: vals });
    }
    let negatives: Vec<usize> = (0..3).filter(|&i| vals[i] < 0.0).collect();
    if negatives.len() != 1 {
        return Err(ConicError::NotACone { lambdas: vals });
    }
    let neg = negatives[0];
    let mut pos: Vec<usize> = (0..3).filter(|&i| i != neg).collect();
    pos.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]));

    let mut axis = eig.eigenvectors.column(neg).into_owned();
    let mut e1 = eig.eigenvectors.column(pos[0]).into_owned();
    orient(&mut axis, Some(2));
    orient(&mut e1, None);
    let e2 = axis.cross(&e1);
    let m = Matrix3::from_columns(&[e1, e2, axis]);
    Ok(ConeDecomposition {
        q: *q,
        lambdas: [vals[pos[0]], vals[pos[1]], vals[neg]],
        r_a_c: Rotation3::from_matrix_unchecked(m),
    })
}

/// Sign convention: the given component positive, else the largest.
fn orient(v: &mut Vector3<f64>, component: Option<usize>) {
    let idx = match component {
        Some(i) if v[i].abs() > 1e-12 => i,
        _ => v.iamax(),
    };
    if v[idx] < 0.0 {
        *v = -*v;
    }
}

/// One of the two circular-section orientations of a cone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateNormal {
    /// Slope of the section plane `z = k x + b` in ACS.
    pub k: f64,
    /// Unit plane normal in CCS, facing the camera.
    pub normal_ccs: Vector3<f64>,
}

/// The two candidate luminaire normals `R_a^c (k, 0, -1)ᵀ / √(k² + 1)` for
/// `k = ±√((λ₁ - λ₂)/(λ₂ - λ₃))`. A circular image (λ₁ = λ₂) gives `k = 0`
/// twice.
pub fn candidate_normals(d: &ConeDecomposition) -> [CandidateNormal; 2] {
    let [l1, l2, l3] = d.lambdas;
    let k = ((l1 - l2) / (l2 - l3)).max(0.0).sqrt();
    [k, -k].map(|k| CandidateNormal {
        k,
        normal_ccs: d.acs_to_ccs(&(Vector3::new(k, 0.0, -1.0) / (k * k + 1.0).sqrt())),
    })
}

/// Luminaire plane `z = k x + b_led` in ACS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneAcs {
    pub k: f64,
    pub b_led: f64,
}

/// Scales the circular section of slope `k` so that its diameter matches the
/// luminaire, using a unit probe intercept.
pub fn luminaire_plane(d: &ConeDecomposition, k: f64, radius: f64) -> Result<PlaneAcs, ConicError> {
    luminaire_plane_with_probe(d, k, radius, 1.0)
}

/// As [`luminaire_plane`] with an explicit probe intercept. The probe plane
/// `z = k x + b` meets the generators `z = ±m x` at `L₁'` and `L₂'`; the
/// chord between them is a diameter of the section circle, so the true plane
/// sits at `b_led = 2 R b / |L₁' L₂'|`.
pub fn luminaire_plane_with_probe(
    d: &ConeDecomposition,
    k: f64,
    radius: f64,
    probe_b: f64,
) -> Result<PlaneAcs, ConicError> {
    if !(radius > 0.0) {
        return Err(ConicError::InvalidRadius(radius));
    }
    let m = d.generator_slope();
    // The section is bounded only while |k| < m.
    if !(m - k.abs() > 1e-12 * m) {
        return Err(ConicError::ParallelLine { k, generator: m });
    }
    let l1 = Vector3::new(probe_b / (m - k), 0.0, m * probe_b / (m - k));
    let l2 = Vector3::new(-probe_b / (m + k), 0.0, m * probe_b / (m + k));
    let chord = (l1 - l2).norm();
    Ok(PlaneAcs {
        k,
        b_led: 2.0 * radius * probe_b / chord,
    })
}

/// Intersects the viewing ray of an image point with the luminaire plane.
pub fn backproject_image_to_plane(
    q: ImagePoint,
    plane: &PlaneAcs,
    d: &ConeDecomposition,
    k: &CameraIntrinsics,
) -> Result<CameraPoint, ConicError> {
    let ray_c = image_plane_embedding(q, k);
    let ray_a = d.ccs_to_acs(&ray_c);
    let denom = ray_a.z - plane.k * ray_a.x;
    if !(denom.abs() > 1e-12 * ray_a.norm()) {
        return Err(ConicError::LineParallelToPlane);
    }
    let t = plane.b_led / denom;
    let p_c = CameraPoint::from(d.acs_to_ccs(&(ray_a * t)));
    if !(t > 0.0) || !(p_c.z > 0.0) {
        return Err(ConicError::BehindCamera);
    }
    Ok(p_c)
}

pub fn backproject_to_plane(
    p: PixelPoint,
    plane: &PlaneAcs,
    d: &ConeDecomposition,
    k: &CameraIntrinsics,
) -> Result<CameraPoint, ConicError> {
    backproject_image_to_plane(pixel_to_image(p, k), plane, d, k)
}
