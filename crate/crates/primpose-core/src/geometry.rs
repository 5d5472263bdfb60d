//! Rigid poses, pinhole projection/back-projection, and bounding-box geometry.
//!
//! Conventions, used by every module in the crate:
//! - quaternions are Hamilton (w, x, y, z) and kept unit to 1e-9;
//! - camera frame: x right, y down, z forward; visible points have z > 0;
//! - pixels: u right, v down, pixel centers at integer coordinates;
//! - bounding boxes are real-valued and half-open on their max side.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector2, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::buffer::ImageBuffer;
use crate::error::{Error, Result};

/// Points this close to (or behind) the image plane cannot be projected.
pub const MIN_PROJECT_Z: f64 = 1e-9;

/// Accepted deviation from unit norm for quaternion inputs.
pub const QUAT_NORM_TOL: f64 = 1e-6;

/// Rigid transform from object frame to camera frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: UnitQuaternion<f64>,
    /// (T_x, T_y, T_z) in meters.
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn new(rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        Pose { rotation, translation }
    }

    pub fn identity() -> Self {
        Pose::new(UnitQuaternion::identity(), Vector3::zeros())
    }

    /// Builds from raw (w,x,y,z) + translation, renormalizing; the quaternion
    /// must already be unit within [`QUAT_NORM_TOL`].
    pub fn from_wxyz(q: [f64; 4], t: [f64; 3]) -> Result<Self> {
        let raw = Quaternion::new(q[0], q[1], q[2], q[3]);
        let norm = raw.norm();
        if (norm - 1.0).abs() > QUAT_NORM_TOL {
            return Err(Error::InvalidInput(format!("quaternion norm {norm} not within 1e-6 of 1")));
        }
        Ok(Pose::new(UnitQuaternion::new_normalize(raw), Vector3::from(t)))
    }

    /// Quaternion components in storage order (w, x, y, z).
    pub fn quat_wxyz(&self) -> [f64; 4] {
        let q = self.rotation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.rotation.to_rotation_matrix().into_inner()
    }

    /// R*p + t.
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// self applied after rhs: (self ∘ rhs)(p) = self(rhs(p)).
    pub fn compose(&self, rhs: &Pose) -> Pose {
        let rotation =
            UnitQuaternion::new_normalize((self.rotation * rhs.rotation).into_inner());
        Pose::new(rotation, self.rotation * rhs.translation + self.translation)
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.rotation.inverse();
        Pose::new(inv, -(inv * self.translation))
    }
}

/// Rotation matrix for a quaternion given in (w,x,y,z) order.
///
/// Accepts any quaternion unit within [`QUAT_NORM_TOL`] and normalizes before
/// conversion, so the result is orthonormal with det +1 to machine precision.
pub fn quat_to_matrix(q: &Quaternion<f64>) -> Result<Matrix3<f64>> {
    let norm = q.norm();
    if (norm - 1.0).abs() > QUAT_NORM_TOL {
        return Err(Error::InvalidInput(format!("quaternion norm {norm} not within 1e-6 of 1")));
    }
    let (w, x, y, z) = (q.w / norm, q.i / norm, q.j / norm, q.k / norm);
    Ok(Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    ))
}

/// Geodesic distance on SO(3) in degrees: 2*acos(|<q1,q2>|), in [0, 180].
///
/// Sign-insensitive, so q and -q are the same rotation.
pub fn rotation_geodesic_deg(q1: &UnitQuaternion<f64>, q2: &UnitQuaternion<f64>) -> f64 {
    let dot = q1.coords.dot(&q2.coords).abs().clamp(0.0, 1.0);
    2.0 * dot.acos().to_degrees()
}

/// Uniform random rotation: four independent N(0,1) draws, normalized.
pub fn uniform_unit_quaternion<R: Rng + ?Sized>(rng: &mut R) -> UnitQuaternion<f64> {
    loop {
        let w: f64 = rng.sample(StandardNormal);
        let x: f64 = rng.sample(StandardNormal);
        let y: f64 = rng.sample(StandardNormal);
        let z: f64 = rng.sample(StandardNormal);
        let q = Quaternion::new(w, x, y, z);
        if q.norm() > 1e-12 {
            return UnitQuaternion::new_normalize(q);
        }
    }
}

/// Pinhole camera: focal lengths and principal point in pixels, plus the
/// frame size every render and sampling operation works against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub f_u: f64,
    pub f_v: f64,
    pub u_p: f64,
    pub v_p: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(f_u: f64, f_v: f64, u_p: f64, v_p: f64, width: usize, height: usize) -> Result<Self> {
        if !(f_u > 0.0 && f_v > 0.0) {
            return Err(Error::InvalidParam(format!("focal lengths must be > 0, got ({f_u}, {f_v})")));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidParam("frame must be at least 1x1".into()));
        }
        if !(0.0..width as f64).contains(&u_p) || !(0.0..height as f64).contains(&v_p) {
            return Err(Error::InvalidParam(format!(
                "principal point ({u_p}, {v_p}) outside {width}x{height} frame"
            )));
        }
        Ok(CameraIntrinsics { f_u, f_v, u_p, v_p, width, height })
    }

    /// u = f_u*x/z + u_p, v = f_v*y/z + v_p.
    pub fn project(&self, p_cam: &Vector3<f64>) -> Result<Vector2<f64>> {
        if p_cam.z <= MIN_PROJECT_Z {
            return Err(Error::BehindCamera { z: p_cam.z });
        }
        Ok(Vector2::new(
            self.f_u * p_cam.x / p_cam.z + self.u_p,
            self.f_v * p_cam.y / p_cam.z + self.v_p,
        ))
    }

    /// Inverts projection at a known depth:
    /// T_x = (u_c - u_p)*T_z/f_u, T_y = (v_c - v_p)*T_z/f_v.
    pub fn backproject_translation(&self, u_c: f64, v_c: f64, t_z: f64) -> Result<Vector3<f64>> {
        if t_z <= 0.0 {
            return Err(Error::InvalidDepth(t_z));
        }
        Ok(Vector3::new(
            (u_c - self.u_p) * t_z / self.f_u,
            (v_c - self.v_p) * t_z / self.f_v,
            t_z,
        ))
    }
}

/// Axis-aligned pixel box, real-valued, half-open on the max side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub u_min: f64,
    pub v_min: f64,
    pub u_max: f64,
    pub v_max: f64,
}

impl BoundingBox {
    pub fn new(u_min: f64, v_min: f64, u_max: f64, v_max: f64) -> Result<Self> {
        if !(u_min < u_max && v_min < v_max) {
            return Err(Error::InvalidInput(format!(
                "degenerate bbox [{u_min}, {u_max}) x [{v_min}, {v_max})"
            )));
        }
        Ok(BoundingBox { u_min, v_min, u_max, v_max })
    }

    pub fn width(&self) -> f64 {
        self.u_max - self.u_min
    }

    pub fn height(&self) -> f64 {
        self.v_max - self.v_min
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.u_min + self.u_max), 0.5 * (self.v_min + self.v_max))
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Half-open membership test.
    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= self.u_min && u < self.u_max && v >= self.v_min && v < self.v_max
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> f64 {
        let w = (self.u_max.min(other.u_max) - self.u_min.max(other.u_min)).max(0.0);
        let h = (self.v_max.min(other.v_max) - self.v_min.max(other.v_min)).max(0.0);
        w * h
    }

    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let inter = self.intersection_area(other);
        inter / (self.area() + other.area() - inter)
    }

    /// Scales both sides by kappa about the center, then clips to the frame.
    pub fn inflate(&self, kappa: f64, frame_width: usize, frame_height: usize) -> Result<BoundingBox> {
        if kappa < 1.0 {
            return Err(Error::InvalidParam(format!("inflation factor {kappa} must be >= 1")));
        }
        let (cu, cv) = self.center();
        let hw = 0.5 * kappa * self.width();
        let hh = 0.5 * kappa * self.height();
        let u_min = (cu - hw).max(0.0);
        let v_min = (cv - hh).max(0.0);
        let u_max = (cu + hw).min(frame_width as f64);
        let v_max = (cv + hh).min(frame_height as f64);
        BoundingBox::new(u_min, v_min, u_max, v_max)
            .map_err(|_| Error::InvalidInput("inflated bbox does not intersect the frame".into()))
    }
}

/// Pastes a crop back into full-frame coordinates through its bounding box.
///
/// Resampling rule: an output pixel with integer center (u,v) inside
/// bbox ∩ frame samples the crop bilinearly (edge-clamped) at
///   x = (u - u_min + 0.5) * crop_w / bbox_w - 0.5,
///   y = (v - v_min + 0.5) * crop_h / bbox_h - 0.5,
/// i.e. the crop is treated as an area map of the bbox region. Every other
/// pixel takes the fill color. When the crop resolution equals an
/// integer-aligned bbox the mapping is the identity on pixel centers.
pub fn relocalize_object(
    crop: &ImageBuffer,
    bbox: &BoundingBox,
    frame_width: usize,
    frame_height: usize,
    fill: [f64; 3],
) -> Result<ImageBuffer> {
    if !(bbox.u_min < bbox.u_max && bbox.v_min < bbox.v_max) {
        return Err(Error::InvalidInput("degenerate bbox".into()));
    }
    let mut out = ImageBuffer::filled(frame_width, frame_height, fill);
    let sx = crop.width() as f64 / bbox.width();
    let sy = crop.height() as f64 / bbox.height();
    let v_lo = bbox.v_min.ceil().max(0.0) as usize;
    let v_hi = bbox.v_max.min(frame_height as f64);
    let u_lo = bbox.u_min.ceil().max(0.0) as usize;
    let u_hi = bbox.u_max.min(frame_width as f64);
    for v in v_lo..frame_height.min(v_hi.ceil() as usize) {
        if (v as f64) >= v_hi {
            break;
        }
        for u in u_lo..frame_width.min(u_hi.ceil() as usize) {
            if (u as f64) >= u_hi {
                break;
            }
            let x = (u as f64 - bbox.u_min + 0.5) * sx - 0.5;
            let y = (v as f64 - bbox.v_min + 0.5) * sy - 0.5;
            out.set(u, v, crop.sample_bilinear(x, y));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quat_deg_about_z(deg: f64) -> UnitQuaternion<f64> {
        UnitQuaternion::from_axis_angle(&Vector3::z_axis(), deg.to_radians())
    }

    #[test]
    fn quat_to_matrix_identity_and_quarter_turn() {
        let id = quat_to_matrix(&Quaternion::new(1.0, 0.0, 0.0, 0.0)).unwrap();
        assert_relative_eq!(id, Matrix3::identity(), epsilon = 1e-15);

        let h = std::f64::consts::FRAC_PI_4; // half-angle of 90 degrees
        let m = quat_to_matrix(&Quaternion::new(h.cos(), 0.0, 0.0, h.sin())).unwrap();
        let expected = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert_relative_eq!(m, expected, epsilon = 1e-12);
    }

    #[test]
    fn quat_to_matrix_sign_insensitive_exactly() {
        let q = Quaternion::new(0.5, -0.5, 0.5, 0.5);
        let m1 = quat_to_matrix(&q).unwrap();
        let m2 = quat_to_matrix(&-q).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn quat_to_matrix_rejects_far_from_unit() {
        let q = Quaternion::new(1.01, 0.0, 0.0, 0.0);
        assert!(matches!(quat_to_matrix(&q), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn quat_to_matrix_output_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let q = uniform_unit_quaternion(&mut rng);
            let m = quat_to_matrix(q.quaternion()).unwrap();
            assert_relative_eq!(m * m.transpose(), Matrix3::identity(), epsilon = 1e-9);
            assert_relative_eq!(m.determinant(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn geodesic_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = uniform_unit_quaternion(&mut rng);
        assert_eq!(rotation_geodesic_deg(&q, &q), 0.0);
        let neg = UnitQuaternion::new_unchecked(-q.into_inner());
        assert!(rotation_geodesic_deg(&q, &neg) < 1e-6);
        assert_relative_eq!(
            rotation_geodesic_deg(&UnitQuaternion::identity(), &quat_deg_about_z(10.0)),
            10.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn geodesic_is_symmetric_and_triangle_on_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let a = uniform_unit_quaternion(&mut rng);
            let b = uniform_unit_quaternion(&mut rng);
            let c = uniform_unit_quaternion(&mut rng);
            assert_relative_eq!(rotation_geodesic_deg(&a, &b), rotation_geodesic_deg(&b, &a), epsilon = 1e-12);
            assert!(
                rotation_geodesic_deg(&a, &c)
                    <= rotation_geodesic_deg(&a, &b) + rotation_geodesic_deg(&b, &c) + 1e-9
            );
        }
    }

    #[test]
    fn transform_point_cases() {
        let p = Vector3::new(1.0, 0.0, 0.0);
        assert_eq!(Pose::identity().transform_point(&p), p);

        let t = Pose::new(UnitQuaternion::identity(), Vector3::new(0.1, 0.2, 0.3));
        assert_eq!(t.transform_point(&Vector3::zeros()), Vector3::new(0.1, 0.2, 0.3));

        let r = Pose::new(quat_deg_about_z(90.0), Vector3::zeros());
        assert_relative_eq!(r.transform_point(&p), Vector3::new(0.0, 1.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn compose_and_inverse_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let a = Pose::new(
                uniform_unit_quaternion(&mut rng),
                Vector3::new(rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>() + 1.0),
            );
            let p = Vector3::new(rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>());
            let roundtrip = a.inverse().compose(&a).transform_point(&p);
            assert_relative_eq!(roundtrip, p, epsilon = 1e-12);
            // Composition behaves like sequential application.
            let b = Pose::new(uniform_unit_quaternion(&mut rng), Vector3::new(0.3, -0.2, 0.1));
            assert_relative_eq!(
                a.compose(&b).transform_point(&p),
                a.transform_point(&b.transform_point(&p)),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn projection_hand_values() {
        let k = CameraIntrinsics::new(600.0, 600.0, 320.0, 240.0, 640, 480).unwrap();
        let on_axis = k.project(&Vector3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!((on_axis.x, on_axis.y), (320.0, 240.0));

        let p = k.project(&Vector3::new(0.1, -0.2, 2.0)).unwrap();
        assert_relative_eq!(p.x, 350.0, epsilon = 1e-12);
        assert_relative_eq!(p.y, 180.0, epsilon = 1e-12);

        assert!(matches!(
            k.project(&Vector3::new(0.0, 0.0, 0.0)),
            Err(Error::BehindCamera { .. })
        ));
    }

    #[test]
    fn backprojection_hand_values() {
        let k = CameraIntrinsics::new(600.0, 600.0, 320.0, 240.0, 640, 480).unwrap();
        let t = k.backproject_translation(320.0, 240.0, 3.7).unwrap();
        assert_eq!(t, Vector3::new(0.0, 0.0, 3.7));

        let t = k.backproject_translation(350.0, 180.0, 2.0).unwrap();
        assert_relative_eq!(t, Vector3::new(0.1, -0.2, 2.0), epsilon = 1e-12);

        assert!(matches!(k.backproject_translation(1.0, 1.0, 0.0), Err(Error::InvalidDepth(_))));
    }

    #[test]
    fn project_backproject_inverse_pair() {
        let k = CameraIntrinsics::new(500.0, 550.0, 310.0, 250.0, 640, 480).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..1000 {
            let t = Vector3::new(
                rng.random::<f64>() * 2.0 - 1.0,
                rng.random::<f64>() * 2.0 - 1.0,
                0.3 + rng.random::<f64>() * 2.7,
            );
            let uv = k.project(&t).unwrap();
            let back = k.backproject_translation(uv.x, uv.y, t.z).unwrap();
            assert_relative_eq!(back, t, max_relative = 1e-12);
        }
    }

    #[test]
    fn intrinsics_validation() {
        assert!(CameraIntrinsics::new(-1.0, 600.0, 320.0, 240.0, 640, 480).is_err());
        assert!(CameraIntrinsics::new(600.0, 600.0, 640.0, 240.0, 640, 480).is_err());
        assert!(CameraIntrinsics::new(600.0, 600.0, 320.0, 240.0, 0, 480).is_err());
    }

    #[test]
    fn inflate_identity_and_ratio() {
        let b = BoundingBox::new(100.0, 150.0, 200.0, 250.0).unwrap();
        let same = b.inflate(1.0, 10_000, 10_000).unwrap();
        assert_eq!(b, same);

        let big = b.inflate(1.3, 10_000, 10_000).unwrap();
        assert_relative_eq!(big.width(), 130.0, epsilon = 1e-12);
        assert_relative_eq!(big.height(), 130.0, epsilon = 1e-12);
        let (cu, cv) = b.center();
        let (cu2, cv2) = big.center();
        assert_relative_eq!(cu, cu2, epsilon = 1e-12);
        assert_relative_eq!(cv, cv2, epsilon = 1e-12);
        // Nested boxes: IoU = area ratio = 1/1.69.
        assert_relative_eq!(b.iou(&big), 1.0 / 1.69, epsilon = 1e-12);
    }

    #[test]
    fn inflate_clips_to_frame() {
        let b = BoundingBox::new(0.0, 0.0, 100.0, 100.0).unwrap();
        let clipped = b.inflate(1.3, 110, 110).unwrap();
        assert_eq!((clipped.u_min, clipped.v_min), (0.0, 0.0));
        assert_eq!((clipped.u_max, clipped.v_max), (110.0, 110.0));
        assert!(b.inflate(0.9, 110, 110).is_err());
    }

    #[test]
    fn relocalize_full_frame_is_identity() {
        let mut crop = ImageBuffer::new(6, 4);
        for v in 0..4 {
            for u in 0..6 {
                crop.set(u, v, [u as f64 / 10.0, v as f64 / 10.0, 0.5]);
            }
        }
        let bbox = BoundingBox::new(0.0, 0.0, 6.0, 4.0).unwrap();
        let out = relocalize_object(&crop, &bbox, 6, 4, [0.0; 3]).unwrap();
        assert_eq!(out, crop);
    }

    #[test]
    fn relocalize_single_pixel_crop() {
        let mut crop = ImageBuffer::new(1, 1);
        crop.set(0, 0, [1.0, 0.5, 0.25]);
        let bbox = BoundingBox::new(10.0, 20.0, 11.0, 21.0).unwrap();
        let out = relocalize_object(&crop, &bbox, 32, 32, [0.0; 3]).unwrap();
        for v in 0..32 {
            for u in 0..32 {
                if (u, v) == (10, 20) {
                    assert_eq!(out.get(u, v), [1.0, 0.5, 0.25]);
                } else {
                    assert_eq!(out.get(u, v), [0.0; 3]);
                }
            }
        }
    }

    #[test]
    fn relocalize_fills_background_and_clips() {
        let crop = ImageBuffer::filled(4, 4, [1.0, 1.0, 1.0]);
        let bbox = BoundingBox::new(-2.0, -2.0, 2.0, 2.0).unwrap();
        let out = relocalize_object(&crop, &bbox, 8, 8, [0.25, 0.25, 0.25]).unwrap();
        assert_eq!(out.get(0, 0), [1.0, 1.0, 1.0]);
        assert_eq!(out.get(2, 2), [0.25, 0.25, 0.25]);
        assert_eq!(out.get(7, 7), [0.25, 0.25, 0.25]);
    }
}
