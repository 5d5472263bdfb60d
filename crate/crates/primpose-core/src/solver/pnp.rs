//! PnP rotation recovery: DLT initialization, LM refinement, RANSAC loop.

use nalgebra::{
    DMatrix, DVector, Matrix3, Matrix3x4, Matrix4, Rotation3, UnitQuaternion, Vector2, Vector3,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Pose};
use crate::primitive::{primitive_corners_3d, project_keypoints, PrimitiveSpec};

/// Minimal correspondence count for the direct linear transform.
pub const PNP_MIN_CORRESPONDENCES: usize = 6;

/// Relative singular-value cutoff below which the DLT design matrix is
/// treated as rank deficient.
const DLT_RANK_TOL: f64 = 1e-9;

const RANSAC_REFINE_ITERS: usize = 100;
const RANSAC_REFINE_TOL: f64 = 1e-12;

// Refit/regate rounds after consensus selection. A hypothesis fitted to a
// contaminated minimal draw can outvote the exact pose whenever some true
// points are missing from the correspondence set, and a single refit on its
// inlier mask bakes that bias in. The masks stabilize in one or two rounds.
const RANSAC_REGATE_ROUNDS: usize = 5;

// Short LM pass applied to each minimal-sample hypothesis. A raw DLT pose
// from 6 noisy points carries the projective fit's noise amplification and
// rarely reprojects even its own sample within a few pixels.
const HYPOTHESIS_POLISH_ITERS: usize = 10;
const HYPOTHESIS_POLISH_TOL: f64 = 1e-10;

/// One 3D model point paired with its observed pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    /// Point in the object frame, meters.
    pub p3: Vector3<f64>,
    /// Observed projection, pixels.
    pub p2: Vector2<f64>,
}

/// Result of an iterative PnP solve.
#[derive(Debug, Clone, PartialEq)]
pub struct PnPResult {
    pub pose: Pose,
    /// Root mean square reprojection error in pixels over the
    /// correspondences the pose was fit to.
    pub reprojection_rmse: f64,
    /// Per-correspondence inlier mask. All true outside RANSAC.
    pub inliers: Vec<bool>,
    pub converged: bool,
}

/// Pairs the 21 projected primitive keypoints with their object-frame
/// positions, ready for the PnP solvers.
pub fn keypoint_correspondences(
    spec: &PrimitiveSpec,
    pose: &Pose,
    k: &CameraIntrinsics,
) -> Result<Vec<Correspondence>> {
    let p3 = primitive_corners_3d(spec);
    let p2 = project_keypoints(pose, k, spec)?;
    Ok(p3
        .iter()
        .zip(p2.iter())
        .map(|(a, b)| Correspondence { p3: *a, p2: *b })
        .collect())
}

fn validate_corrs(corrs: &[Correspondence]) -> Result<()> {
    for c in corrs {
        let ok = c.p3.iter().all(|v| v.is_finite()) && c.p2.iter().all(|v| v.is_finite());
        if !ok {
            return Err(Error::InvalidInput("non-finite correspondence".into()));
        }
    }
    Ok(())
}

/// Nearest rotation to `m` by singular value projection, plus the mean
/// singular value as the projective scale of `m`.
fn nearest_rotation(m: &Matrix3<f64>) -> (Matrix3<f64>, f64) {
    let svd = m.svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let mut d = Matrix3::identity();
    if (u * vt).determinant() < 0.0 {
        // flip along the weakest direction only
        let mut k = 0;
        for i in 1..3 {
            if svd.singular_values[i] < svd.singular_values[k] {
                k = i;
            }
        }
        d[(k, k)] = -1.0;
    }
    (u * d * vt, svd.singular_values.sum() / 3.0)
}

/// Linear pose estimate from 2D-3D correspondences.
///
/// Solves for the 3x4 projection matrix in intrinsics-normalized
/// coordinates with Hartley-normalized data, projects the rotation block to
/// SO(3), and fixes the sign so the points sit in front of the camera.
pub fn solve_pnp_dlt(corrs: &[Correspondence], k: &CameraIntrinsics) -> Result<Pose> {
    let n = corrs.len();
    if n < PNP_MIN_CORRESPONDENCES {
        return Err(Error::DegenerateInput(format!(
            "PnP needs at least {PNP_MIN_CORRESPONDENCES} correspondences, got {n}"
        )));
    }
    validate_corrs(corrs)?;

    let ideal: Vec<Vector2<f64>> = corrs
        .iter()
        .map(|c| Vector2::new((c.p2.x - k.u_p) / k.f_u, (c.p2.y - k.v_p) / k.f_v))
        .collect();
    let pts: Vec<Vector3<f64>> = corrs.iter().map(|c| c.p3).collect();

    let c2 = ideal.iter().sum::<Vector2<f64>>() / n as f64;
    let c3 = pts.iter().sum::<Vector3<f64>>() / n as f64;
    let mean2 = ideal.iter().map(|p| (p - c2).norm()).sum::<f64>() / n as f64;
    let mean3 = pts.iter().map(|p| (p - c3).norm()).sum::<f64>() / n as f64;
    if mean2 < 1e-12 || mean3 < 1e-12 {
        return Err(Error::DegenerateInput(
            "correspondences are coincident".into(),
        ));
    }
    let s2 = std::f64::consts::SQRT_2 / mean2;
    let s3 = 3f64.sqrt() / mean3;

    let mut a = DMatrix::zeros(2 * n, 12);
    for (i, (x, p)) in ideal.iter().zip(&pts).enumerate() {
        let xn = (x - c2) * s2;
        let pn = (p - c3) * s3;
        let hom = [pn.x, pn.y, pn.z, 1.0];
        for (j, h) in hom.iter().enumerate() {
            a[(2 * i, j)] = *h;
            a[(2 * i, 8 + j)] = -xn.x * h;
            a[(2 * i + 1, 4 + j)] = *h;
            a[(2 * i + 1, 8 + j)] = -xn.y * h;
        }
    }

    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let sv = &svd.singular_values;
    // nalgebra does not promise an ordering, sort indices ourselves
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].partial_cmp(&sv[i]).expect("finite singular values"));
    let s_max = sv[order[0]];
    let s_second_min = sv[order[sv.len() - 2]];
    if !(s_max > 0.0) || s_second_min <= s_max * DLT_RANK_TOL {
        return Err(Error::DegenerateInput(
            "rank-deficient design matrix".into(),
        ));
    }
    let p_vec = vt.row(order[sv.len() - 1]);

    let p_norm = Matrix3x4::from_fn(|r, c| p_vec[4 * r + c]);
    #[rustfmt::skip]
    let t3 = Matrix4::new(
        s3,  0.0, 0.0, -s3 * c3.x,
        0.0, s3,  0.0, -s3 * c3.y,
        0.0, 0.0, s3,  -s3 * c3.z,
        0.0, 0.0, 0.0, 1.0,
    );
    #[rustfmt::skip]
    let t2_inv = Matrix3::new(
        1.0 / s2, 0.0,      c2.x,
        0.0,      1.0 / s2, c2.y,
        0.0,      0.0,      1.0,
    );
    let mut proj = t2_inv * p_norm * t3;

    let front = pts
        .iter()
        .filter(|p| {
            proj[(2, 0)] * p.x + proj[(2, 1)] * p.y + proj[(2, 2)] * p.z + proj[(2, 3)] > 0.0
        })
        .count();
    if 2 * front < n {
        proj = -proj;
    }

    let (r, scale) = nearest_rotation(&proj.fixed_view::<3, 3>(0, 0).into_owned());
    if !(scale > 1e-300 && scale.is_finite()) {
        return Err(Error::DegenerateInput("degenerate projection scale".into()));
    }
    let t = Vector3::new(proj[(0, 3)], proj[(1, 3)], proj[(2, 3)]) / scale;
    if t.z <= 0.0 {
        return Err(Error::DegenerateInput("cheirality check failed".into()));
    }
    let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(r));
    Ok(Pose::new(q, t))
}

/// Signed residual vector (projected minus observed) and its squared norm.
/// None when any point fails to project.
fn residuals(
    corrs: &[Correspondence],
    k: &CameraIntrinsics,
    pose: &Pose,
) -> Option<(DVector<f64>, f64)> {
    let mut r = DVector::zeros(2 * corrs.len());
    for (i, c) in corrs.iter().enumerate() {
        let uv = k.project(&pose.transform_point(&c.p3)).ok()?;
        r[2 * i] = uv.x - c.p2.x;
        r[2 * i + 1] = uv.y - c.p2.y;
    }
    let cost = r.norm_squared();
    cost.is_finite().then_some((r, cost))
}

/// Residual jacobian with respect to (rotation increment, translation).
/// The rotation perturbation is a left-applied axis-angle increment.
fn reprojection_jacobian(
    corrs: &[Correspondence],
    k: &CameraIntrinsics,
    pose: &Pose,
) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * corrs.len(), 6);
    for (i, c) in corrs.iter().enumerate() {
        let v = pose.rotation * c.p3;
        let p = v + pose.translation;
        let iz = 1.0 / p.z;
        let du = Vector3::new(k.f_u * iz, 0.0, -k.f_u * p.x * iz * iz);
        let dv = Vector3::new(0.0, k.f_v * iz, -k.f_v * p.y * iz * iz);
        // d(exp(w) v)/dw at w = 0 is -[v]x
        let dp_dw = Matrix3::new(0.0, v.z, -v.y, -v.z, 0.0, v.x, v.y, -v.x, 0.0);
        let ju_w = du.transpose() * dp_dw;
        let jv_w = dv.transpose() * dp_dw;
        for col in 0..3 {
            j[(2 * i, col)] = ju_w[col];
            j[(2 * i, 3 + col)] = du[col];
            j[(2 * i + 1, col)] = jv_w[col];
            j[(2 * i + 1, 3 + col)] = dv[col];
        }
    }
    j
}

/// Levenberg-Marquardt refinement of a pose over total squared
/// reprojection error.
///
/// Six parameters: a left-applied axis-angle increment on the rotation and
/// an additive increment on the translation. Accepted steps never increase
/// the cost. Stops when the accepted step norm drops below `tol`, the
/// gradient vanishes, or `max_iters` is exhausted.
pub fn refine_pnp_lm(
    corrs: &[Correspondence],
    k: &CameraIntrinsics,
    init: &Pose,
    max_iters: usize,
    tol: f64,
) -> Result<PnPResult> {
    let n = corrs.len();
    if n < 3 {
        return Err(Error::DegenerateInput(format!(
            "LM refinement needs at least 3 correspondences, got {n}"
        )));
    }
    validate_corrs(corrs)?;
    if init.translation.z <= 0.0 {
        return Err(Error::InvalidDepth(init.translation.z));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParam(
            "tol must be positive and finite".into(),
        ));
    }

    let mut pose = *init;
    let (mut res, mut cost) = residuals(corrs, k, &pose)
        .ok_or_else(|| Error::Numerical("residuals not finite at the initial pose".into()))?;
    let mut lambda = 1e-3;
    let mut converged = false;

    'outer: for _ in 0..max_iters {
        let j = reprojection_jacobian(corrs, k, &pose);
        let g = j.transpose() * &res;
        if g.amax() < 1e-14 {
            converged = true;
            break;
        }
        let h = j.transpose() * &j;
        loop {
            let mut damped = h.clone();
            for d in 0..6 {
                damped[(d, d)] += lambda * h[(d, d)].max(1e-12);
            }
            if let Some(chol) = damped.cholesky() {
                let delta = chol.solve(&(-&g));
                let dw = Vector3::new(delta[0], delta[1], delta[2]);
                let dt = Vector3::new(delta[3], delta[4], delta[5]);
                let cand = Pose::new(
                    UnitQuaternion::from_scaled_axis(dw) * pose.rotation,
                    pose.translation + dt,
                );
                if let Some((new_res, new_cost)) = residuals(corrs, k, &cand) {
                    if new_cost < cost {
                        pose = cand;
                        res = new_res;
                        cost = new_cost;
                        lambda = (lambda / 10.0).max(1e-12);
                        if delta.norm() < tol {
                            converged = true;
                            break 'outer;
                        }
                        break;
                    }
                }
            }
            lambda *= 10.0;
            if lambda > 1e12 {
                // damping exhausted, no further progress possible
                break 'outer;
            }
        }
    }

    Ok(PnPResult {
        pose,
        reprojection_rmse: (cost / n as f64).sqrt(),
        inliers: vec![true; n],
        converged,
    })
}

/// RANSAC over minimal DLT hypotheses, then LM refit on the best inlier
/// set. Deterministic for a given seed.
///
/// Each hypothesis is polished by a short LM pass on its own sample before
/// counting inliers. Inliers are correspondences whose reprojection error
/// under a hypothesis is strictly below `inlier_threshold` pixels.
/// Hypotheses are ranked by inlier count, ties by inlier RMSE.
pub fn solve_pnp_ransac(
    corrs: &[Correspondence],
    k: &CameraIntrinsics,
    iterations: usize,
    inlier_threshold: f64,
    seed: u64,
) -> Result<PnPResult> {
    let n = corrs.len();
    if n < PNP_MIN_CORRESPONDENCES {
        return Err(Error::DegenerateInput(format!(
            "RANSAC needs at least {PNP_MIN_CORRESPONDENCES} correspondences, got {n}"
        )));
    }
    validate_corrs(corrs)?;
    if !(inlier_threshold > 0.0 && inlier_threshold.is_finite()) {
        return Err(Error::InvalidParam(
            "inlier threshold must be positive and finite".into(),
        ));
    }
    if iterations == 0 {
        return Err(Error::InvalidParam("iterations must be at least 1".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(usize, f64, Vec<bool>, Pose)> = None;
    let mut best_any = 0usize;

    for _ in 0..iterations {
        let idx = rand::seq::index::sample(&mut rng, n, PNP_MIN_CORRESPONDENCES);
        let sample: Vec<Correspondence> = idx.iter().map(|i| corrs[i]).collect();
        let Ok(rough) = solve_pnp_dlt(&sample, k) else {
            continue;
        };
        let Ok(polished) = refine_pnp_lm(
            &sample,
            k,
            &rough,
            HYPOTHESIS_POLISH_ITERS,
            HYPOTHESIS_POLISH_TOL,
        ) else {
            continue;
        };
        let pose = polished.pose;
        let (mask, count, sq) = gate_inliers(corrs, k, &pose, inlier_threshold);
        best_any = best_any.max(count);
        if count < PNP_MIN_CORRESPONDENCES {
            continue;
        }
        let rmse = (sq / count as f64).sqrt();
        let better = match &best {
            None => true,
            Some((bc, br, _, _)) => count > *bc || (count == *bc && rmse < *br),
        };
        if better {
            best = Some((count, rmse, mask, pose));
        }
    }

    let Some((_, _, mut mask, pose)) = best else {
        return Err(Error::NoConsensus {
            best: best_any,
            need: PNP_MIN_CORRESPONDENCES,
        });
    };
    let mut refined = refine_pnp_lm(
        &select_inliers(corrs, &mask),
        k,
        &pose,
        RANSAC_REFINE_ITERS,
        RANSAC_REFINE_TOL,
    )?;
    // regate against the refined pose and refit until the mask stabilizes
    for _ in 0..RANSAC_REGATE_ROUNDS {
        let (new_mask, count, _) = gate_inliers(corrs, k, &refined.pose, inlier_threshold);
        if count < PNP_MIN_CORRESPONDENCES || new_mask == mask {
            break;
        }
        mask = new_mask;
        refined = refine_pnp_lm(
            &select_inliers(corrs, &mask),
            k,
            &refined.pose,
            RANSAC_REFINE_ITERS,
            RANSAC_REFINE_TOL,
        )?;
    }
    Ok(PnPResult {
        pose: refined.pose,
        reprojection_rmse: refined.reprojection_rmse,
        inliers: mask,
        converged: refined.converged,
    })
}

/// Marks the correspondences whose reprojection under `pose` falls strictly
/// inside `threshold`, returning the mask, its count, and the summed squared
/// inlier error.
fn gate_inliers(
    corrs: &[Correspondence],
    k: &CameraIntrinsics,
    pose: &Pose,
    threshold: f64,
) -> (Vec<bool>, usize, f64) {
    let mut mask = vec![false; corrs.len()];
    let mut count = 0usize;
    let mut sq = 0.0;
    for (i, c) in corrs.iter().enumerate() {
        let Ok(uv) = k.project(&pose.transform_point(&c.p3)) else {
            continue;
        };
        let e2 = (uv - c.p2).norm_squared();
        if e2.is_finite() && e2.sqrt() < threshold {
            mask[i] = true;
            count += 1;
            sq += e2;
        }
    }
    (mask, count, sq)
}

fn select_inliers(corrs: &[Correspondence], mask: &[bool]) -> Vec<Correspondence> {
    corrs
        .iter()
        .zip(mask)
        .filter_map(|(c, m)| m.then_some(*c))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rotation_geodesic_deg;

    fn camera() -> CameraIntrinsics {
        CameraIntrinsics::new(610.0, 590.0, 324.5, 238.5, 640, 480).unwrap()
    }

    fn corrs_for(pose: &Pose) -> Vec<Correspondence> {
        keypoint_correspondences(&PrimitiveSpec::default(), pose, &camera()).unwrap()
    }

    fn sample_pose(seed: u64) -> Pose {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = crate::geometry::uniform_unit_quaternion(&mut rng);
        use rand::Rng;
        let t_z = rng.random_range(0.5..3.0);
        let t = Vector3::new(
            rng.random_range(-0.25..0.25) * t_z,
            rng.random_range(-0.25..0.25) * t_z,
            t_z,
        );
        Pose::new(q, t)
    }

    #[test]
    fn dlt_recovers_identity_pose_exactly() {
        let pose = Pose::new(UnitQuaternion::identity(), Vector3::new(0.0, 0.0, 1.0));
        let est = solve_pnp_dlt(&corrs_for(&pose), &camera()).unwrap();
        assert!(rotation_geodesic_deg(&est.rotation, &pose.rotation) < 1e-6);
        assert!((est.translation - pose.translation).norm() < 1e-8);
    }

    #[test]
    fn dlt_rejects_five_correspondences() {
        let pose = sample_pose(1);
        let corrs = &corrs_for(&pose)[..5];
        assert!(matches!(
            solve_pnp_dlt(corrs, &camera()),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn dlt_rejects_coplanar_points() {
        let pose = sample_pose(2);
        let k = camera();
        let corrs: Vec<Correspondence> = (0..9)
            .map(|i| {
                let p3 = Vector3::new(
                    0.05 * (i % 3) as f64 - 0.05,
                    0.05 * (i / 3) as f64 - 0.05,
                    0.0,
                );
                let p2 = k.project(&pose.transform_point(&p3)).unwrap();
                Correspondence { p3, p2 }
            })
            .collect();
        assert!(matches!(
            solve_pnp_dlt(&corrs, &k),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn lm_at_ground_truth_is_already_optimal() {
        let pose = sample_pose(3);
        let corrs = corrs_for(&pose);
        let out = refine_pnp_lm(&corrs, &camera(), &pose, 50, 1e-12).unwrap();
        assert!(out.converged);
        assert!(out.reprojection_rmse < 1e-9, "rmse {}", out.reprojection_rmse);
        assert!(out.inliers.iter().all(|&b| b) && out.inliers.len() == 21);
    }

    #[test]
    fn lm_recovers_from_perturbed_init() {
        let pose = sample_pose(4);
        let corrs = corrs_for(&pose);
        let nudge = UnitQuaternion::from_scaled_axis(
            Vector3::new(1.0, -2.0, 0.5).normalize() * 5f64.to_radians(),
        );
        let init = Pose::new(
            nudge * pose.rotation,
            pose.translation + Vector3::new(0.03, -0.02, 0.03),
        );
        let out = refine_pnp_lm(&corrs, &camera(), &init, 100, 1e-12).unwrap();
        assert!(rotation_geodesic_deg(&out.pose.rotation, &pose.rotation) < 1e-4);
        assert!((out.pose.translation - pose.translation).norm() < 1e-5);
    }

    #[test]
    fn lm_validates_inputs() {
        let pose = sample_pose(5);
        let corrs = corrs_for(&pose);
        let bad_depth = Pose::new(pose.rotation, Vector3::new(0.0, 0.0, -1.0));
        assert!(matches!(
            refine_pnp_lm(&corrs, &camera(), &bad_depth, 10, 1e-9),
            Err(Error::InvalidDepth(_))
        ));
        assert!(matches!(
            refine_pnp_lm(&corrs[..2], &camera(), &pose, 10, 1e-9),
            Err(Error::DegenerateInput(_))
        ));
        assert!(matches!(
            refine_pnp_lm(&corrs, &camera(), &pose, 10, 0.0),
            Err(Error::InvalidParam(_))
        ));
    }

    #[test]
    fn ransac_with_clean_data_keeps_everything() {
        let pose = sample_pose(6);
        let corrs = corrs_for(&pose);
        let k = camera();
        let out = solve_pnp_ransac(&corrs, &k, 20, 3.0, 7).unwrap();
        assert!(out.inliers.iter().all(|&b| b));
        assert!(rotation_geodesic_deg(&out.pose.rotation, &pose.rotation) < 1e-4);
        assert!((out.pose.translation - pose.translation).norm() < 1e-5);
        let direct = refine_pnp_lm(&corrs, &k, &solve_pnp_dlt(&corrs, &k).unwrap(), 100, 1e-12)
            .unwrap();
        assert!(rotation_geodesic_deg(&out.pose.rotation, &direct.pose.rotation) < 1e-4);
        assert!((out.pose.translation - direct.pose.translation).norm() < 1e-5);
    }

    #[test]
    fn ransac_is_deterministic_per_seed() {
        let pose = sample_pose(8);
        let mut corrs = corrs_for(&pose);
        // plant outliers so the sampling order actually matters
        corrs[2].p2 = Vector2::new(12.0, 400.0);
        corrs[9].p2 = Vector2::new(600.0, 13.0);
        corrs[17].p2 = Vector2::new(333.0, 222.0);
        let a = solve_pnp_ransac(&corrs, &camera(), 60, 3.0, 42).unwrap();
        let b = solve_pnp_ransac(&corrs, &camera(), 60, 3.0, 42).unwrap();
        assert_eq!(a.inliers, b.inliers);
        assert_eq!(a.pose.quat_wxyz(), b.pose.quat_wxyz());
        assert_eq!(a.pose.translation, b.pose.translation);
        let c = solve_pnp_ransac(&corrs, &camera(), 60, 3.0, 43).unwrap();
        assert!(rotation_geodesic_deg(&a.pose.rotation, &c.pose.rotation) < 0.5);
    }

    #[test]
    fn ransac_validates_inputs() {
        let pose = sample_pose(9);
        let corrs = corrs_for(&pose);
        assert!(matches!(
            solve_pnp_ransac(&corrs[..5], &camera(), 10, 3.0, 0),
            Err(Error::DegenerateInput(_))
        ));
        assert!(matches!(
            solve_pnp_ransac(&corrs, &camera(), 0, 3.0, 0),
            Err(Error::InvalidParam(_))
        ));
        assert!(matches!(
            solve_pnp_ransac(&corrs, &camera(), 10, -1.0, 0),
            Err(Error::InvalidParam(_))
        ));
    }

    #[test]
    fn solution_is_invariant_to_uniform_pixel_rescale() {
        let pose = sample_pose(10);
        let k = camera();
        let corrs = corrs_for(&pose);
        let s = 3.7;
        let k_s = CameraIntrinsics::new(
            k.f_u * s,
            k.f_v * s,
            k.u_p * s,
            k.v_p * s,
            (k.width as f64 * s).ceil() as usize,
            (k.height as f64 * s).ceil() as usize,
        )
        .unwrap();
        let corrs_s: Vec<Correspondence> = corrs
            .iter()
            .map(|c| Correspondence { p3: c.p3, p2: c.p2 * s })
            .collect();
        let a = refine_pnp_lm(&corrs, &k, &solve_pnp_dlt(&corrs, &k).unwrap(), 100, 1e-12)
            .unwrap();
        let b = refine_pnp_lm(
            &corrs_s,
            &k_s,
            &solve_pnp_dlt(&corrs_s, &k_s).unwrap(),
            100,
            1e-12,
        )
        .unwrap();
        assert!(rotation_geodesic_deg(&a.pose.rotation, &b.pose.rotation) < 1e-7);
        assert!((a.pose.translation - b.pose.translation).norm() < 1e-9);
    }
}
