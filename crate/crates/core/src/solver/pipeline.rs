use nalgebra::Vector3;

use super::{
    disambiguate_normal, euler_from_normal, psi_oavpa, psi_vpca, translation_two_points, Algorithm, Diagnostics,
    LuminaireInfo, LuminaireMap, Observation, PoseEstimate, SolveError,
};
use crate::conic::{
    backproject_image_to_plane, backproject_to_plane, candidate_normals, cone_from_ellipse, decompose_cone,
    ellipse_center, luminaire_plane, CandidateNormal, ConeDecomposition,
};
use crate::frames::{euler_to_rotation, CameraIntrinsics, EulerAngles, Pose};

struct Prepared<'a> {
    lum: &'a LuminaireInfo,
    cone: ConeDecomposition,
    candidates: [CandidateNormal; 2],
}

fn prepare<'a>(obs: &Observation, lums: &'a LuminaireMap, k: &CameraIntrinsics) -> Result<Prepared<'a>, SolveError> {
    let lum = lums
        .get(&obs.luminaire_id)
        .ok_or(SolveError::UnknownLuminaire(obs.luminaire_id))?;
    obs.ellipse.validate()?;
    let cone = decompose_cone(&cone_from_ellipse(&obs.ellipse, k.f))?;
    let candidates = candidate_normals(&cone);
    Ok(Prepared { lum, cone, candidates })
}

fn unit(v: Vector3<f64>) -> Result<Vector3<f64>, SolveError> {
    let n = v.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(SolveError::DegenerateDirection);
    }
    Ok(v / n)
}

/// Pose from one complete luminaire (centre and mark projections known)
/// plus any other luminaire, used only to pick the right normal.
pub fn solve_vpca(
    complete: &Observation,
    other: &Observation,
    lums: &LuminaireMap,
    k: &CameraIntrinsics,
) -> Result<PoseEstimate, SolveError> {
    if !complete.complete {
        return Err(SolveError::Precondition("first observation must be complete"));
    }
    let (Some(g_px), Some(m_px)) = (complete.center_proj, complete.mark_proj) else {
        return Err(SolveError::Precondition(
            "complete observation lacks centre or mark projection",
        ));
    };
    if complete.luminaire_id == other.luminaire_id {
        return Err(SolveError::Precondition(
            "observations must come from distinct luminaires",
        ));
    }
    let main = prepare(complete, lums, k)?;
    let aux = prepare(other, lums, k)?;
    let choice = disambiguate_normal(&main.candidates, &aux.candidates)?;

    let plane = luminaire_plane(&main.cone, choice.first.k, main.lum.radius)?;
    let g_c = backproject_to_plane(g_px, &plane, &main.cone, k)?;
    let m_c = backproject_to_plane(m_px, &plane, &main.cone, k)?;

    let (phi, theta) = euler_from_normal(&choice.first.normal_ccs)?;
    let s = unit(m_c - g_c)?;
    let yaw = psi_vpca(&s, phi, theta)?;
    let rotation = euler_to_rotation(EulerAngles::new(phi, theta, yaw.psi));
    let translation = translation_two_points(&main.lum.center_w, &g_c, &main.lum.mark_w, &m_c, &rotation);

    Ok(PoseEstimate {
        pose: Pose::new(rotation, translation),
        algorithm: Algorithm::Vpca,
        diagnostics: Diagnostics {
            chosen_k: vec![
                (complete.luminaire_id, choice.first.k),
                (other.luminaire_id, choice.second.k),
            ],
            disambiguation_gap: Some(choice.gap),
            psi_residual: Some(yaw.residual),
            ..Diagnostics::default()
        },
    })
}

/// Pose from two arcs. Each luminaire centre's projection is approximated
/// by the centre of its fitted ellipse; the luminaires may sit at different
/// heights as long as their planes are parallel.
pub fn solve_oavpa(
    first: &Observation,
    second: &Observation,
    lums: &LuminaireMap,
    k: &CameraIntrinsics,
) -> Result<PoseEstimate, SolveError> {
    if first.luminaire_id == second.luminaire_id {
        return Err(SolveError::Precondition(
            "observations must come from distinct luminaires",
        ));
    }
    let e = prepare(first, lums, k)?;
    let f = prepare(second, lums, k)?;
    let choice = disambiguate_normal(&e.candidates, &f.candidates)?;

    let plane_e = luminaire_plane(&e.cone, choice.first.k, e.lum.radius)?;
    let plane_f = luminaire_plane(&f.cone, choice.second.k, f.lum.radius)?;
    let ge_c = backproject_image_to_plane(ellipse_center(&first.ellipse)?, &plane_e, &e.cone, k)?;
    let gf_c = backproject_image_to_plane(ellipse_center(&second.ellipse)?, &plane_f, &f.cone, k)?;

    let (phi, theta) = euler_from_normal(&choice.first.normal_ccs)?;
    let g = unit(f.lum.center_w - e.lum.center_w)?;
    let h = unit(gf_c - ge_c)?;
    let yaw = psi_oavpa(&g, &h, phi, theta)?;
    let rotation = euler_to_rotation(EulerAngles::new(phi, theta, yaw.psi));
    let translation = translation_two_points(&e.lum.center_w, &ge_c, &f.lum.center_w, &gf_c, &rotation);

    Ok(PoseEstimate {
        pose: Pose::new(rotation, translation),
        algorithm: Algorithm::Oavpa,
        diagnostics: Diagnostics {
            chosen_k: vec![
                (first.luminaire_id, choice.first.k),
                (second.luminaire_id, choice.second.k),
            ],
            disambiguation_gap: Some(choice.gap),
            psi_residual: Some(yaw.residual),
            ..Diagnostics::default()
        },
    })
}

/// Longest contour first, then the larger image (the nearer luminaire),
/// then ascending id.
fn rank(obs: &[&Observation]) -> Vec<Observation> {
    let mut v: Vec<Observation> = obs.iter().map(|o| **o).collect();
    v.sort_by(|a, b| {
        b.arc_points
            .cmp(&a.arc_points)
            .then(b.ellipse.area().total_cmp(&a.ellipse.area()))
            .then(a.luminaire_id.cmp(&b.luminaire_id))
    });
    v
}

fn usable(observations: &[Observation]) -> Result<Vec<&Observation>, SolveError> {
    let usable: Vec<&Observation> = observations.iter().filter(|o| o.ellipse.validate().is_ok()).collect();
    let distinct: std::collections::BTreeSet<_> = usable.iter().map(|o| o.luminaire_id).collect();
    if distinct.len() < 2 {
        return Err(SolveError::TooFewLuminaires { got: distinct.len() });
    }
    Ok(usable)
}

/// The complete observation with the longest contour and the longest other
/// observation, as used by V-PCA.
pub fn vpca_pair(observations: &[Observation]) -> Result<(Observation, Observation), SolveError> {
    let usable = usable(observations)?;
    let complete = rank(&usable.iter().copied().filter(|o| o.has_markers()).collect::<Vec<_>>());
    let main = *complete.first().ok_or(SolveError::Precondition(
        "no complete luminaire with centre and mark projections",
    ))?;
    let others = rank(
        &usable
            .into_iter()
            .filter(|o| o.luminaire_id != main.luminaire_id)
            .collect::<Vec<_>>(),
    );
    Ok((main, others[0]))
}

/// The two longest contours of distinct luminaires, as used by OA-V-PA.
pub fn oavpa_pair(observations: &[Observation]) -> Result<(Observation, Observation), SolveError> {
    let ranked = rank(&usable(observations)?);
    let first = ranked[0];
    let second = *ranked
        .iter()
        .find(|o| o.luminaire_id != first.luminaire_id)
        .expect("two distinct luminaires");
    Ok((first, second))
}

/// Runs V-PCA when some observation is complete, otherwise OA-V-PA on the
/// two longest arcs.
pub fn solve_vpa(
    observations: &[Observation],
    lums: &LuminaireMap,
    k: &CameraIntrinsics,
) -> Result<PoseEstimate, SolveError> {
    if usable(observations)?.iter().any(|o| o.has_markers()) {
        let (main, other) = vpca_pair(observations)?;
        return solve_vpca(&main, &other, lums, k);
    }
    let (first, second) = oavpa_pair(observations)?;
    solve_oavpa(&first, &second, lums, k)
}
