//! Pose-evaluation metrics: ADD(-S), the 2D projection metric, and
//! rotation/translation MAE, plus their aggregation into a report.

mod hull;

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{rotation_geodesic_deg, CameraIntrinsics, Pose};
use crate::jsonio::fmt_f64;
use crate::mesh::{MeshModel, SymmetryClass};

/// A pose is ADD-correct when its distance is under this fraction of the
/// model diameter (strict inequality).
pub const ADD_THRESHOLD_FRAC: f64 = 0.1;

/// A pose is projection-correct when the mean pixel error is under this
/// (strict inequality).
pub const PROJ2D_THRESHOLD_PX: f64 = 5.0;

/// Largest vertex count for which the diameter uses the O(n²) scan.
const DIAMETER_BRUTE_FORCE_MAX: usize = 5000;

/// ADD-S subsample cap (uniform stride) unless the exact mode is requested.
pub const ADDS_SUBSAMPLE_CAP: usize = 2000;

/// Max pairwise vertex distance. Exact O(n²) up to
/// [`DIAMETER_BRUTE_FORCE_MAX`] vertices; larger sets are pruned to their
/// convex hull first (same result, asserted in tests), falling back to the
/// full scan on degenerate geometry.
pub fn model_diameter(vertices: &[Vector3<f64>]) -> Result<f64> {
    if vertices.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "diameter needs at least 2 vertices, got {}",
            vertices.len()
        )));
    }
    if vertices.len() <= DIAMETER_BRUTE_FORCE_MAX {
        return Ok(max_pairwise(vertices));
    }
    match hull::hull_vertex_indices(vertices) {
        Some(idx) => {
            let pruned: Vec<Vector3<f64>> = idx.into_iter().map(|i| vertices[i]).collect();
            Ok(max_pairwise(&pruned))
        }
        None => Ok(max_pairwise(vertices)),
    }
}

fn max_pairwise(pts: &[Vector3<f64>]) -> f64 {
    let mut best = 0.0f64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            best = best.max((pts[i] - pts[j]).norm_squared());
        }
    }
    best.sqrt()
}

/// Mean distance between correspondingly transformed model points.
pub fn add_metric(pose_gt: &Pose, pose_est: &Pose, vertices: &[Vector3<f64>]) -> Result<f64> {
    if vertices.is_empty() {
        return Err(Error::InvalidInput("add_metric needs at least one vertex".into()));
    }
    let sum: f64 = vertices
        .iter()
        .map(|v| (pose_gt.transform_point(v) - pose_est.transform_point(v)).norm())
        .sum();
    Ok(sum / vertices.len() as f64)
}

/// Symmetric variant: mean nearest-point distance between the two transformed
/// vertex sets. Sets larger than [`ADDS_SUBSAMPLE_CAP`] are stride-subsampled;
/// use [`adds_metric_exact`] to force the full quadratic scan.
pub fn adds_metric(pose_gt: &Pose, pose_est: &Pose, vertices: &[Vector3<f64>]) -> Result<f64> {
    if vertices.len() > ADDS_SUBSAMPLE_CAP {
        let stride = vertices.len().div_ceil(ADDS_SUBSAMPLE_CAP);
        let sub: Vec<Vector3<f64>> = vertices.iter().step_by(stride).copied().collect();
        adds_metric_exact(pose_gt, pose_est, &sub)
    } else {
        adds_metric_exact(pose_gt, pose_est, vertices)
    }
}

/// ADD-S over every vertex, no subsampling.
pub fn adds_metric_exact(pose_gt: &Pose, pose_est: &Pose, vertices: &[Vector3<f64>]) -> Result<f64> {
    if vertices.is_empty() {
        return Err(Error::InvalidInput("adds_metric needs at least one vertex".into()));
    }
    let gt: Vec<Vector3<f64>> = vertices.iter().map(|v| pose_gt.transform_point(v)).collect();
    let est: Vec<Vector3<f64>> = vertices.iter().map(|v| pose_est.transform_point(v)).collect();
    let sum: f64 = gt
        .iter()
        .map(|g| {
            est.iter()
                .map(|e| (g - e).norm_squared())
                .min_by(f64::total_cmp)
                .expect("nonempty")
                .sqrt()
        })
        .sum();
    Ok(sum / vertices.len() as f64)
}

/// Strict 10%-of-diameter decision.
pub fn pose_correct_add(dist: f64, diameter: f64, threshold_frac: f64) -> bool {
    dist < threshold_frac * diameter
}

/// Mean pixel distance between projections of the model under both poses,
/// and the strict 5 px correctness decision.
pub fn projection2d_error(
    pose_gt: &Pose,
    pose_est: &Pose,
    vertices: &[Vector3<f64>],
    k: &CameraIntrinsics,
) -> Result<(f64, bool)> {
    if vertices.is_empty() {
        return Err(Error::InvalidInput("projection2d_error needs at least one vertex".into()));
    }
    let mut sum = 0.0;
    for v in vertices {
        let a = k.project(&pose_gt.transform_point(v))?;
        let b = k.project(&pose_est.transform_point(v))?;
        sum += (a - b).norm();
    }
    let mean = sum / vertices.len() as f64;
    Ok((mean, mean < PROJ2D_THRESHOLD_PX))
}

/// Mean geodesic rotation error (degrees) and mean translation error
/// (millimeters) over the non-excluded pairs.
pub fn pose_mae(pairs: &[(Pose, Pose)], exclude_symmetric: &[bool]) -> Result<(f64, f64)> {
    if pairs.len() != exclude_symmetric.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} pairs but {} exclusion flags",
            pairs.len(),
            exclude_symmetric.len()
        )));
    }
    let mut n = 0usize;
    let (mut rot_sum, mut trans_sum) = (0.0, 0.0);
    for ((gt, est), &skip) in pairs.iter().zip(exclude_symmetric) {
        if skip {
            continue;
        }
        rot_sum += rotation_geodesic_deg(&gt.rotation, &est.rotation);
        trans_sum += (gt.translation - est.translation).norm() * 1000.0;
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyAfterExclusion);
    }
    Ok((rot_sum / n as f64, trans_sum / n as f64))
}

/// Aggregated evaluation over (ground truth, estimate) pose pairs.
#[derive(Debug, Clone, PartialEq, serde::Deserialize)]
pub struct MetricReport {
    pub add_mean: f64,
    pub add_accuracy: f64,
    pub proj2d_mean: f64,
    pub proj2d_accuracy: f64,
    pub rot_mae: f64,
    pub trans_mae: f64,
    pub n_samples: usize,
}

impl MetricReport {
    /// Evaluates every pair against the model. Symmetric models use ADD-S for
    /// the distance/accuracy columns and are excluded from MAE per the
    /// symmetric-object protocol, so MAE errors out for them.
    pub fn evaluate(model: &MeshModel, k: &CameraIntrinsics, pairs: &[(Pose, Pose)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidInput("no pose pairs to evaluate".into()));
        }
        let symmetric = model.symmetry != SymmetryClass::None;
        let per_sample: Vec<(f64, f64)> = pairs
            .par_iter()
            .map(|(gt, est)| {
                let dist = if symmetric {
                    adds_metric(gt, est, &model.vertices)?
                } else {
                    add_metric(gt, est, &model.vertices)?
                };
                let (proj, _) = projection2d_error(gt, est, &model.vertices, k)?;
                Ok((dist, proj))
            })
            .collect::<Result<_>>()?;

        let n = pairs.len() as f64;
        let add_mean = per_sample.iter().map(|s| s.0).sum::<f64>() / n;
        let add_accuracy = per_sample
            .iter()
            .filter(|s| pose_correct_add(s.0, model.diameter, ADD_THRESHOLD_FRAC))
            .count() as f64
            / n;
        let proj2d_mean = per_sample.iter().map(|s| s.1).sum::<f64>() / n;
        let proj2d_accuracy =
            per_sample.iter().filter(|s| s.1 < PROJ2D_THRESHOLD_PX).count() as f64 / n;
        let (rot_mae, trans_mae) = pose_mae(pairs, &vec![symmetric; pairs.len()])?;
        Ok(MetricReport {
            add_mean,
            add_accuracy,
            proj2d_mean,
            proj2d_accuracy,
            rot_mae,
            trans_mae,
            n_samples: pairs.len(),
        })
    }

    /// Flat `key = value` record, one field per line, declaration order.
    pub fn to_text(&self) -> String {
        format!(
            "add_mean = {}\nadd_accuracy = {}\nproj2d_mean = {}\nproj2d_accuracy = {}\nrot_mae = {}\ntrans_mae = {}\nn_samples = {}\n",
            fmt_f64(self.add_mean),
            fmt_f64(self.add_accuracy),
            fmt_f64(self.proj2d_mean),
            fmt_f64(self.proj2d_accuracy),
            fmt_f64(self.rot_mae),
            fmt_f64(self.trans_mae),
            self.n_samples
        )
    }

    /// JSON document with the same field order; floats carry 17 significant
    /// digits so identical reports are byte-identical.
    pub fn to_json(&self) -> String {
        format!(
            "{{\"add_mean\":{},\"add_accuracy\":{},\"proj2d_mean\":{},\"proj2d_accuracy\":{},\"rot_mae\":{},\"trans_mae\":{},\"n_samples\":{}}}",
            fmt_f64(self.add_mean),
            fmt_f64(self.add_accuracy),
            fmt_f64(self.proj2d_mean),
            fmt_f64(self.proj2d_accuracy),
            fmt_f64(self.rot_mae),
            fmt_f64(self.trans_mae),
            self.n_samples
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::uniform_unit_quaternion;
    use approx::assert_relative_eq;
    use nalgebra::UnitQuaternion;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pose(rng: &mut ChaCha8Rng) -> Pose {
        Pose::new(
            uniform_unit_quaternion(rng),
            Vector3::new(
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
                1.0 + rng.random::<f64>(),
            ),
        )
    }

    #[test]
    fn diameter_hand_cases() {
        let cube: Vec<Vector3<f64>> = (0..8)
            .map(|i| {
                Vector3::new(
                    (i & 4 != 0) as i32 as f64,
                    (i & 2 != 0) as i32 as f64,
                    (i & 1 != 0) as i32 as f64,
                )
            })
            .collect();
        assert_relative_eq!(model_diameter(&cube).unwrap(), 3f64.sqrt(), epsilon = 1e-12);

        let two = vec![Vector3::zeros(), Vector3::new(0.2, 0.0, 0.0)];
        assert_eq!(model_diameter(&two).unwrap(), 0.2);

        let mut dup = cube.clone();
        dup.extend_from_slice(&cube);
        assert_eq!(model_diameter(&dup).unwrap(), model_diameter(&cube).unwrap());

        assert!(model_diameter(&[Vector3::zeros()]).is_err());
    }

    #[test]
    fn diameter_hull_path_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        // Sphere shell: every point is a hull vertex.
        let shell: Vec<Vector3<f64>> = (0..6000)
            .map(|_| {
                let q = uniform_unit_quaternion(&mut rng);
                q * Vector3::new(0.1, 0.0, 0.0)
            })
            .collect();
        // Gaussian blob: hull is a thin crust.
        let blob: Vec<Vector3<f64>> = (0..6000)
            .map(|_| {
                Vector3::new(
                    rng.random::<f64>() - 0.5,
                    2.0 * rng.random::<f64>() - 1.0,
                    0.3 * rng.random::<f64>(),
                )
            })
            .collect();
        // Known extremes: cube corners plus interior fill.
        let mut spiked: Vec<Vector3<f64>> = (0..6000)
            .map(|_| Vector3::new(rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()) * 0.5)
            .collect();
        for i in 0..8 {
            spiked.push(Vector3::new(
                (i & 4 != 0) as i32 as f64,
                (i & 2 != 0) as i32 as f64,
                (i & 1 != 0) as i32 as f64,
            ));
        }
        for cloud in [&shell, &blob, &spiked] {
            let fast = model_diameter(cloud).unwrap();
            let brute = max_pairwise(cloud);
            assert_relative_eq!(fast, brute, epsilon = 1e-9);
        }
    }

    #[test]
    fn diameter_degenerate_cloud_falls_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        // Coplanar: hull construction refuses, brute force answers.
        let flat: Vec<Vector3<f64>> = (0..5500)
            .map(|_| Vector3::new(rng.random::<f64>(), rng.random::<f64>(), 0.25))
            .collect();
        let fast = model_diameter(&flat).unwrap();
        assert_relative_eq!(fast, max_pairwise(&flat), epsilon = 1e-12);
    }

    #[test]
    fn add_pure_translation_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let verts: Vec<Vector3<f64>> = (0..50)
            .map(|_| Vector3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let gt = random_pose(&mut rng);
        let est = Pose::new(gt.rotation, gt.translation + Vector3::new(0.01, 0.0, 0.0));
        assert_relative_eq!(add_metric(&gt, &est, &verts).unwrap(), 0.01, epsilon = 1e-15);
        assert_eq!(add_metric(&gt, &gt, &verts).unwrap(), 0.0);
    }

    #[test]
    fn add_invariant_under_common_rigid_motion() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let verts: Vec<Vector3<f64>> = (0..20)
            .map(|_| Vector3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        for _ in 0..50 {
            let gt = random_pose(&mut rng);
            let est = random_pose(&mut rng);
            let outer = random_pose(&mut rng);
            let a = add_metric(&gt, &est, &verts).unwrap();
            let b = add_metric(&outer.compose(&gt), &outer.compose(&est), &verts).unwrap();
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn adds_square_symmetry_is_zero_while_add_is_not() {
        let s = 0.05;
        let square = vec![
            Vector3::new(-s, -s, 0.0),
            Vector3::new(s, -s, 0.0),
            Vector3::new(s, s, 0.0),
            Vector3::new(-s, s, 0.0),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let gt = random_pose(&mut rng);
        let quarter = Pose::new(
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), std::f64::consts::FRAC_PI_2),
            Vector3::zeros(),
        );
        let est = gt.compose(&quarter);
        assert!(adds_metric(&gt, &est, &square).unwrap() <= 1e-12);
        assert!(add_metric(&gt, &est, &square).unwrap() > 1e-3);
    }

    #[test]
    fn adds_never_exceeds_add() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let verts: Vec<Vector3<f64>> = (0..30)
            .map(|_| Vector3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        for _ in 0..1000 {
            let gt = random_pose(&mut rng);
            let est = random_pose(&mut rng);
            let add = add_metric(&gt, &est, &verts).unwrap();
            let adds = adds_metric(&gt, &est, &verts).unwrap();
            assert!(adds <= add + 1e-12, "adds {adds} > add {add}");
        }
    }

    #[test]
    fn adds_subsampling_matches_exact_under_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let verts: Vec<Vector3<f64>> = (0..100)
            .map(|_| Vector3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let gt = random_pose(&mut rng);
        let est = random_pose(&mut rng);
        assert_eq!(
            adds_metric(&gt, &est, &verts).unwrap(),
            adds_metric_exact(&gt, &est, &verts).unwrap()
        );
    }

    #[test]
    fn threshold_is_strict() {
        assert!(pose_correct_add(0.0, 1.0, ADD_THRESHOLD_FRAC));
        assert!(!pose_correct_add(0.1, 1.0, ADD_THRESHOLD_FRAC));
        assert!(pose_correct_add(0.1 - 1e-12, 1.0, ADD_THRESHOLD_FRAC));
    }

    #[test]
    fn projection_error_closed_form_for_planar_shift() {
        let k = CameraIntrinsics::new(600.0, 600.0, 320.0, 240.0, 640, 480).unwrap();
        // Fronto-parallel plane at fixed depth.
        let verts: Vec<Vector3<f64>> = (0..25)
            .map(|i| Vector3::new((i % 5) as f64 * 0.01, (i / 5) as f64 * 0.01, 0.0))
            .collect();
        let z = 2.0;
        let gt = Pose::new(UnitQuaternion::identity(), Vector3::new(0.0, 0.0, z));
        let delta = 0.03;
        let est = Pose::new(UnitQuaternion::identity(), Vector3::new(delta, 0.0, z));
        let (err, correct) = projection2d_error(&gt, &est, &verts, &k).unwrap();
        assert_relative_eq!(err, 600.0 * delta / z, epsilon = 1e-12);
        assert!(!correct); // 9 px, strictly over the 5 px bar
        let (zero, ok) = projection2d_error(&gt, &gt, &verts, &k).unwrap();
        assert_eq!(zero, 0.0);
        assert!(ok);
    }

    #[test]
    fn projection_error_invariant_under_optical_axis_rotation() {
        // Principal point at the frame center acts as the rotation center.
        let k = CameraIntrinsics::new(500.0, 500.0, 200.0, 200.0, 400, 400).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let verts: Vec<Vector3<f64>> = (0..10)
            .map(|_| Vector3::new(rng.random::<f64>() * 0.1, rng.random::<f64>() * 0.1, rng.random::<f64>() * 0.1))
            .collect();
        let spin = Pose::new(
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), 1.1),
            Vector3::zeros(),
        );
        for _ in 0..20 {
            let gt = random_pose(&mut rng);
            let est = random_pose(&mut rng);
            let (a, _) = projection2d_error(&gt, &est, &verts, &k).unwrap();
            let (b, _) =
                projection2d_error(&spin.compose(&gt), &spin.compose(&est), &verts, &k).unwrap();
            assert_relative_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn mae_hand_values_and_exclusion() {
        let gt = Pose::identity();
        let est = Pose::new(
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), 10f64.to_radians()),
            Vector3::new(0.005, 0.0, 0.0),
        );
        let (rot, trans) = pose_mae(&[(gt, est)], &[false]).unwrap();
        assert_relative_eq!(rot, 10.0, epsilon = 1e-9);
        assert_relative_eq!(trans, 5.0, epsilon = 1e-9);

        let (rot, trans) = pose_mae(&[(gt, gt)], &[false]).unwrap();
        assert_eq!((rot, trans), (0.0, 0.0));

        assert!(matches!(
            pose_mae(&[(gt, est)], &[true]),
            Err(Error::EmptyAfterExclusion)
        ));
        assert!(pose_mae(&[(gt, est)], &[true, false]).is_err());
    }

    #[test]
    fn report_accuracy_equals_mean_of_decisions() {
        let model = MeshModel::cube(0.1);
        let k = CameraIntrinsics::new(600.0, 600.0, 320.0, 240.0, 640, 480).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pairs: Vec<(Pose, Pose)> = (0..40)
            .map(|i| {
                let gt = Pose::new(uniform_unit_quaternion(&mut rng), Vector3::new(0.0, 0.0, 1.5));
                // Half small offsets, half gross ones.
                let off = if i % 2 == 0 { 0.001 } else { 0.08 };
                let est = Pose::new(gt.rotation, gt.translation + Vector3::new(off, 0.0, 0.0));
                (gt, est)
            })
            .collect();
        let report = MetricReport::evaluate(&model, &k, &pairs).unwrap();
        let mut correct = 0usize;
        for (gt, est) in &pairs {
            let d = add_metric(gt, est, &model.vertices).unwrap();
            if pose_correct_add(d, model.diameter, ADD_THRESHOLD_FRAC) {
                correct += 1;
            }
        }
        assert_relative_eq!(report.add_accuracy, correct as f64 / 40.0, epsilon = 1e-12);
        assert_eq!(report.n_samples, 40);
    }

    #[test]
    fn report_serializes_in_declared_order_and_parses_back() {
        let r = MetricReport {
            add_mean: 0.001,
            add_accuracy: 1.0,
            proj2d_mean: 0.5,
            proj2d_accuracy: 1.0,
            rot_mae: 0.01,
            trans_mae: 0.2,
            n_samples: 7,
        };
        let json = r.to_json();
        let back: MetricReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        let text = r.to_text();
        let keys: Vec<&str> = text.lines().map(|l| l.split(" = ").next().unwrap()).collect();
        assert_eq!(
            keys,
            ["add_mean", "add_accuracy", "proj2d_mean", "proj2d_accuracy", "rot_mae", "trans_mae", "n_samples"]
        );
    }
}
