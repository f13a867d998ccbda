use rand::Rng;
use rand_distr::StandardNormal;

use super::{ArcMode, CaptureConfig, GroundTruth, NoiseModel, SimError, MIN_ARC_POINTS};
use crate::conic::fit_ellipse_pixels;
use crate::frames::{project_to_pixel, world_to_camera, CameraIntrinsics, PixelPoint, WorldPoint};
use crate::solver::{LuminaireId, LuminaireInfo, Observation};

/// Contour of one luminaire in one image.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCapture {
    pub luminaire_id: LuminaireId,
    /// Contour sample index of each point; the rim angle is
    /// `2 pi index / contour_samples`.
    pub indices: Vec<usize>,
    pub points: Vec<PixelPoint>,
    /// Projection of the centre `G`.
    pub center: Option<PixelPoint>,
    /// Projection of the mark point `M`.
    pub mark: Option<PixelPoint>,
    pub mode: ArcMode,
}

fn project_if_in_front(p: &WorldPoint, truth: &GroundTruth, k: &CameraIntrinsics) -> Option<PixelPoint> {
    let c = world_to_camera(p, &truth.pose);
    if c.z > 0.0 {
        project_to_pixel(&c, k).ok()
    } else {
        None
    }
}

/// Noise-free capture. Points behind the camera are left out.
pub fn clean_capture(
    lum: &LuminaireInfo,
    truth: &GroundTruth,
    k: &CameraIntrinsics,
    cap: &CaptureConfig,
) -> Result<RawCapture, SimError> {
    let mut indices = Vec::with_capacity(cap.contour_samples);
    let mut points = Vec::with_capacity(cap.contour_samples);
    for i in 0..cap.contour_samples {
        if let Some(px) = project_if_in_front(&lum.rim_point(cap.angle(i)), truth, k) {
            indices.push(i);
            points.push(px);
        }
    }
    if !points.iter().any(|p| k.contains(*p)) {
        return Err(SimError::NotVisible(lum.id));
    }
    Ok(RawCapture {
        luminaire_id: lum.id,
        indices,
        points,
        center: project_if_in_front(&lum.center_w, truth, k),
        mark: project_if_in_front(&lum.mark_w, truth, k),
        mode: ArcMode::Complete,
    })
}

/// One noisy image of a luminaire's rim, centre and mark.
///
/// Noise is drawn for every contour sample, even ones that are dropped, so
/// the random stream does not depend on the geometry or on `sigma`.
pub fn project_luminaire<R: Rng>(
    lum: &LuminaireInfo,
    truth: &GroundTruth,
    k: &CameraIntrinsics,
    noise: NoiseModel,
    cap: &CaptureConfig,
    rng: &mut R,
) -> Result<RawCapture, SimError> {
    let mut c = clean_capture(lum, truth, k, cap)?;
    let draw = |rng: &mut R| -> (f64, f64) {
        let du: f64 = rng.sample(StandardNormal);
        let dv: f64 = rng.sample(StandardNormal);
        (noise.sigma * du, noise.sigma * dv)
    };
    let mut next = 0;
    for i in 0..cap.contour_samples {
        let (du, dv) = draw(rng);
        if c.indices.get(next) == Some(&i) {
            c.points[next].u += du;
            c.points[next].v += dv;
            next += 1;
        }
    }
    for p in [&mut c.center, &mut c.mark] {
        let (du, dv) = draw(rng);
        if let Some(p) = p {
            p.u += du;
            p.v += dv;
        }
    }
    Ok(c)
}

/// Which contour samples survive, in order along the rim. Drawn once per
/// luminaire and location and applied to every image of it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncationPlan {
    pub mode: ArcMode,
    pub kept: Vec<usize>,
}

/// Draws the surviving span for `mode`. Arcs start at a uniformly random
/// contour sample; `image_bounds` keeps the samples whose clean projection
/// lies in the image.
pub fn plan_truncation<R: Rng>(
    clean: &RawCapture,
    mode: ArcMode,
    cap: &CaptureConfig,
    k: &CameraIntrinsics,
    rng: &mut R,
) -> Result<TruncationPlan, SimError> {
    let n = cap.contour_samples;
    let start = rng.random_range(0..n);
    let present = |i: usize| clean.indices.binary_search(&i).is_ok();
    let span = |len: usize| -> Vec<usize> { (0..len).map(|j| (start + j) % n).filter(|&i| present(i)).collect() };
    let kept = match mode {
        ArcMode::Complete => clean.indices.clone(),
        ArcMode::Semicircle => span(n / 2),
        ArcMode::SuperiorArc => span(((cap.arc_fraction * n as f64).round() as usize).clamp(1, n)),
        ArcMode::ImageBounds => clean
            .indices
            .iter()
            .zip(&clean.points)
            .filter(|(_, p)| k.contains(**p))
            .map(|(i, _)| *i)
            .collect(),
    };
    if kept.len() < MIN_ARC_POINTS {
        return Err(SimError::ArcTooShort { got: kept.len() });
    }
    Ok(TruncationPlan { mode, kept })
}

pub fn apply_truncation(capture: &RawCapture, plan: &TruncationPlan) -> Result<RawCapture, SimError> {
    let mut points = Vec::with_capacity(plan.kept.len());
    for i in &plan.kept {
        let j = capture
            .indices
            .binary_search(i)
            .map_err(|_| SimError::MismatchedCaptures("plan keeps a sample the capture lacks"))?;
        points.push(capture.points[j]);
    }
    let whole = plan.mode == ArcMode::Complete;
    Ok(RawCapture {
        luminaire_id: capture.luminaire_id,
        indices: plan.kept.clone(),
        points,
        center: capture.center.filter(|_| whole),
        mark: capture.mark.filter(|_| whole),
        mode: plan.mode,
    })
}

/// Plans and applies a truncation to a single capture. Partial modes drop
/// the centre and mark projections: the coded light is not readable from a
/// partial rim.
pub fn truncate_arc<R: Rng>(
    capture: &RawCapture,
    mode: ArcMode,
    cap: &CaptureConfig,
    k: &CameraIntrinsics,
    rng: &mut R,
) -> Result<RawCapture, SimError> {
    apply_truncation(capture, &plan_truncation(capture, mode, cap, k, rng)?)
}

/// Averaged contour together with the observation fitted to it.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedCapture {
    pub observation: Observation,
    pub indices: Vec<usize>,
    pub points: Vec<PixelPoint>,
}

/// Mean taken as offsets from the first point, so identical inputs average
/// to themselves bit for bit.
fn mean(mut points: impl Iterator<Item = PixelPoint>, n: usize) -> PixelPoint {
    let Some(first) = points.next() else {
        return PixelPoint::new(f64::NAN, f64::NAN);
    };
    let (u, v) = points.fold((0.0, 0.0), |(u, v), p| (u + (p.u - first.u), v + (p.v - first.v)));
    PixelPoint::new(first.u + u / n as f64, first.v + v / n as f64)
}

/// Averages corresponding points over the images of one location and fits
/// the ellipse to the result.
pub fn average_captures(captures: &[RawCapture], k: &CameraIntrinsics) -> Result<AveragedCapture, SimError> {
    let first = captures.first().ok_or(SimError::MismatchedCaptures("no captures"))?;
    for c in &captures[1..] {
        if c.luminaire_id != first.luminaire_id {
            return Err(SimError::MismatchedCaptures("different luminaires"));
        }
        if c.mode != first.mode {
            return Err(SimError::MismatchedCaptures("different truncation modes"));
        }
        if c.indices != first.indices || c.points.len() != first.points.len() {
            return Err(SimError::MismatchedCaptures("different contour samples"));
        }
        if c.center.is_some() != first.center.is_some() || c.mark.is_some() != first.mark.is_some() {
            return Err(SimError::MismatchedCaptures("different marker availability"));
        }
    }
    if first.indices.len() < MIN_ARC_POINTS {
        return Err(SimError::ArcTooShort {
            got: first.indices.len(),
        });
    }
    let m = captures.len();
    let points: Vec<PixelPoint> = (0..first.points.len())
        .map(|j| mean(captures.iter().map(|c| c.points[j]), m))
        .collect();
    let center = first.center.map(|_| mean(captures.iter().filter_map(|c| c.center), m));
    let mark = first.mark.map(|_| mean(captures.iter().filter_map(|c| c.mark), m));
    let ellipse = fit_ellipse_pixels(&points, k)?;
    let complete = first.mode == ArcMode::Complete && center.is_some() && mark.is_some();
    Ok(AveragedCapture {
        observation: Observation {
            luminaire_id: first.luminaire_id,
            ellipse,
            complete,
            center_proj: center.filter(|_| complete),
            mark_proj: mark.filter(|_| complete),
            arc_points: points.len(),
        },
        indices: first.indices.clone(),
        points,
    })
}

pub fn average_observations(captures: &[RawCapture], k: &CameraIntrinsics) -> Result<Observation, SimError> {
    average_captures(captures, k).map(|a| a.observation)
}
