//! The rotational primitive: a colored cube-plus-axis-arms solid whose 20
//! corners and center serve as pose keypoints.

use nalgebra::{Vector2, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Pose};
use crate::mesh::{push_cuboid, MeshModel};

pub const KEYPOINT_COUNT: usize = 21;

/// Index of the center keypoint (the object origin).
pub const CENTER_KEYPOINT: usize = 20;

/// Dimensions and colors of the primitive solid.
///
/// The solid is a central cube of half-extent `cube_half` with one square arm
/// along each of +X, +Y, +Z; arms run from the cube face to
/// `cube_half + arm_length` with cross-section half-extent `arm_half`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveSpec {
    pub cube_half: f64,
    pub arm_length: f64,
    pub arm_half: f64,
    /// +X, +Y, +Z arm colors; color i must have channel i strictly dominant.
    pub axis_colors: [[f64; 3]; 3],
    pub cube_color: [f64; 3],
}

impl PrimitiveSpec {
    pub fn new(
        cube_half: f64,
        arm_length: f64,
        arm_half: f64,
        axis_colors: [[f64; 3]; 3],
        cube_color: [f64; 3],
    ) -> Result<Self> {
        if !(cube_half > 0.0 && arm_length > 0.0 && arm_half > 0.0) {
            return Err(Error::InvalidParam("primitive lengths must be > 0".into()));
        }
        if arm_half > cube_half {
            return Err(Error::InvalidParam(format!(
                "arm_half {arm_half} exceeds cube_half {cube_half}"
            )));
        }
        for (i, c) in axis_colors.iter().chain(std::iter::once(&cube_color)).enumerate() {
            if c.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidParam(format!("color {i} outside [0,1]: {c:?}")));
            }
        }
        for (i, c) in axis_colors.iter().enumerate() {
            for (j, other) in c.iter().enumerate() {
                if j != i && *other >= c[i] {
                    return Err(Error::InvalidParam(format!(
                        "axis color {i} must have channel {i} strictly dominant, got {c:?}"
                    )));
                }
            }
        }
        Ok(PrimitiveSpec { cube_half, arm_length, arm_half, axis_colors, cube_color })
    }

    /// Dimensions scaled from a model diameter: cube_half = arm_half = 0.05 d,
    /// arm_length = 0.6 d, with pure red/green/blue arms and a gray cube.
    pub fn from_diameter(diameter: f64) -> Result<Self> {
        PrimitiveSpec::new(
            0.05 * diameter,
            0.6 * diameter,
            0.05 * diameter,
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            [0.5, 0.5, 0.5],
        )
    }

    /// Distance from origin to an arm's tip face.
    pub fn tip_distance(&self) -> f64 {
        self.cube_half + self.arm_length
    }

    /// Center of the tip face of arm `axis` (0 = +X, 1 = +Y, 2 = +Z).
    pub fn tip_face_center(&self, axis: usize) -> Vector3<f64> {
        let mut p = Vector3::zeros();
        p[axis] = self.tip_distance();
        p
    }

    /// Radius of the smallest origin-centered sphere containing the solid.
    pub fn bounding_radius(&self) -> f64 {
        let tip = (self.tip_distance().powi(2) + 2.0 * self.arm_half.powi(2)).sqrt();
        tip.max(self.cube_half * 3f64.sqrt())
    }
}

impl Default for PrimitiveSpec {
    fn default() -> Self {
        PrimitiveSpec::from_diameter(0.15).expect("default dimensions are valid")
    }
}

/// Fixed-order set of the primitive's 21 keypoints (2D or 3D).
///
/// Index order: 0-7 cube corners in binary (±x,±y,±z) order (bit 2 -> x,
/// bit 1 -> y, bit 0 -> z, 0 = minus); 8-11 +X tip-face corners in binary
/// (±y,±z) order; 12-15 +Y tips in (±x,±z) order; 16-19 +Z tips in (±x,±y)
/// order; 20 the center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeypointSet21<T> {
    pub points: [T; 21],
}

pub type Keypoints2 = KeypointSet21<Vector2<f64>>;
pub type Keypoints3 = KeypointSet21<Vector3<f64>>;

impl<T> KeypointSet21<T> {
    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.points.iter()
    }
}

impl<T> std::ops::Index<usize> for KeypointSet21<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.points[i]
    }
}

/// The 21 keypoints in the object frame.
pub fn primitive_corners_3d(spec: &PrimitiveSpec) -> Keypoints3 {
    let ch = spec.cube_half;
    let ah = spec.arm_half;
    let tip = spec.tip_distance();
    let sign = |bit: bool, half: f64| if bit { half } else { -half };

    let mut points = [Vector3::zeros(); 21];
    for i in 0..8 {
        points[i] = Vector3::new(
            sign(i & 4 != 0, ch),
            sign(i & 2 != 0, ch),
            sign(i & 1 != 0, ch),
        );
    }
    for i in 0..4 {
        let (a, b) = (sign(i & 2 != 0, ah), sign(i & 1 != 0, ah));
        points[8 + i] = Vector3::new(tip, a, b); // (±y, ±z)
        points[12 + i] = Vector3::new(a, tip, b); // (±x, ±z)
        points[16 + i] = Vector3::new(a, b, tip); // (±x, ±y)
    }
    // points[20] stays at the origin: the center keypoint.
    KeypointSet21 { points }
}

/// Projects all 21 keypoints; errors if any lands behind the camera.
pub fn project_keypoints(
    pose: &Pose,
    k: &CameraIntrinsics,
    spec: &PrimitiveSpec,
) -> Result<Keypoints2> {
    let corners = primitive_corners_3d(spec);
    let mut points = [Vector2::zeros(); 21];
    for (out, p) in points.iter_mut().zip(corners.iter()) {
        *out = k.project(&pose.transform_point(p))?;
    }
    Ok(KeypointSet21 { points })
}

/// Triangle-mesh realization: 4 cuboids (cube + 3 arms), 12 triangles each,
/// flat-colored per cuboid. Overlapping interior faces are kept; the z-buffer
/// resolves them deterministically by draw order.
pub fn primitive_mesh(spec: &PrimitiveSpec) -> MeshModel {
    let ch = spec.cube_half;
    let ah = spec.arm_half;
    let tip = spec.tip_distance();
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut colors = Vec::new();
    push_cuboid(
        Vector3::new(-ch, -ch, -ch),
        Vector3::new(ch, ch, ch),
        spec.cube_color,
        &mut vertices,
        &mut triangles,
        &mut colors,
    );
    push_cuboid(
        Vector3::new(ch, -ah, -ah),
        Vector3::new(tip, ah, ah),
        spec.axis_colors[0],
        &mut vertices,
        &mut triangles,
        &mut colors,
    );
    push_cuboid(
        Vector3::new(-ah, ch, -ah),
        Vector3::new(ah, tip, ah),
        spec.axis_colors[1],
        &mut vertices,
        &mut triangles,
        &mut colors,
    );
    push_cuboid(
        Vector3::new(-ah, -ah, ch),
        Vector3::new(ah, ah, tip),
        spec.axis_colors[2],
        &mut vertices,
        &mut triangles,
        &mut colors,
    );
    MeshModel::new(vertices, triangles, colors).expect("primitive mesh construction is valid")
}
