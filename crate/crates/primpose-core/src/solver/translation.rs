//! Translation recovery from the primitive's image footprint.

use nalgebra::{Matrix3, UnitQuaternion, Vector2, Vector3};

use crate::buffer::ImageBuffer;
use crate::error::{Error, Result};
use crate::geometry::CameraIntrinsics;
use crate::primitive::PrimitiveSpec;
use crate::render::RenderOutput;

/// Any channel farther than this from the background counts as foreground.
pub const FOREGROUND_EPS: f64 = 0.02;

/// Margin by which an axis channel must beat both others for a pixel to
/// vote for that axis tip.
pub const CHANNEL_DOMINANCE: f64 = 0.2;

/// Centroid of the rendered object's coverage mask.
pub fn estimate_center(render: &RenderOutput) -> Result<(f64, f64)> {
    render.mask.centroid().ok_or(Error::EmptyObject)
}

/// Centroid of the pixels that deviate from the background color by more
/// than `FOREGROUND_EPS` in any channel. For a black background this is
/// simply any channel above the threshold.
pub fn estimate_center_image(img: &ImageBuffer, background: [f64; 3]) -> Result<(f64, f64)> {
    let mut sum_u = 0.0;
    let mut sum_v = 0.0;
    let mut count = 0usize;
    for v in 0..img.height() {
        for u in 0..img.width() {
            let px = img.get(u, v);
            if (0..3).any(|c| (px[c] - background[c]).abs() > FOREGROUND_EPS) {
                sum_u += u as f64;
                sum_v += v as f64;
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::EmptyObject);
    }
    Ok((sum_u / count as f64, sum_v / count as f64))
}

/// Farthest pixel from `center` voting for each axis arm, or None for arms
/// with no votes (occluded, cropped out, or absent).
///
/// An axis votes through the strongest channel of its color. A pixel votes
/// when that channel beats both others by more than `CHANNEL_DOMINANCE`,
/// which flat-shaded arm colors do and blends with the gray cube or
/// background do not. Distance ties keep the first pixel in row-major
/// order.
pub fn detect_axis_tips(
    img: &ImageBuffer,
    center: (f64, f64),
    spec: &PrimitiveSpec,
) -> [Option<(f64, f64)>; 3] {
    let mut out = [None; 3];
    for (axis, slot) in out.iter_mut().enumerate() {
        let color = spec.axis_colors[axis];
        let ch = if color[0] >= color[1] && color[0] >= color[2] {
            0
        } else if color[1] >= color[2] {
            1
        } else {
            2
        };
        let mut best: Option<(f64, (f64, f64))> = None;
        for v in 0..img.height() {
            for u in 0..img.width() {
                let px = img.get(u, v);
                let rival = px[(ch + 1) % 3].max(px[(ch + 2) % 3]);
                if px[ch] > rival + CHANNEL_DOMINANCE {
                    let du = u as f64 - center.0;
                    let dv = v as f64 - center.1;
                    let d2 = du * du + dv * dv;
                    if best.is_none_or(|(bd, _)| d2 > bd) {
                        best = Some((d2, (u as f64, v as f64)));
                    }
                }
            }
        }
        *slot = best.map(|(_, p)| p);
    }
    out
}

/// A pixel observation tied to a known anchor point on the primitive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TranslationObservation {
    /// Projection of the primitive origin.
    Center { pixel: Vector2<f64> },
    /// Projection of the tip face center of one arm (0 = +X, 1 = +Y, 2 = +Z).
    AxisTip { axis: usize, pixel: Vector2<f64> },
}

impl TranslationObservation {
    fn anchor(&self, spec: &PrimitiveSpec) -> Result<Vector3<f64>> {
        match self {
            Self::Center { .. } => Ok(Vector3::zeros()),
            Self::AxisTip { axis, .. } => {
                if *axis >= 3 {
                    return Err(Error::InvalidParam(format!("axis {axis} out of range")));
                }
                Ok(spec.tip_face_center(*axis))
            }
        }
    }

    fn pixel(&self) -> Vector2<f64> {
        match self {
            Self::Center { pixel } | Self::AxisTip { pixel, .. } => *pixel,
        }
    }
}

/// Gauss-Newton fit of the translation with the rotation held fixed.
///
/// Minimizes squared reprojection error of the primitive origin and the
/// observed tip face centers. The center alone only fixes the viewing ray,
/// so at least two observations are required. Steps that overshoot are
/// halved; a step that cannot reduce the error at all is treated as
/// divergence.
pub fn refine_translation_fixed_rotation(
    rotation: &UnitQuaternion<f64>,
    obs: &[TranslationObservation],
    spec: &PrimitiveSpec,
    k: &CameraIntrinsics,
    t_init: &Vector3<f64>,
) -> Result<Vector3<f64>> {
    if obs.len() < 2 {
        return Err(Error::DegenerateInput(format!(
            "translation fit needs at least 2 observations, got {}",
            obs.len()
        )));
    }
    if !(t_init.z > 0.0) {
        return Err(Error::InvalidDepth(t_init.z));
    }
    let anchors: Vec<(Vector3<f64>, Vector2<f64>)> = obs
        .iter()
        .map(|o| {
            let px = o.pixel();
            if !(px.x.is_finite() && px.y.is_finite()) {
                return Err(Error::InvalidInput("non-finite observation pixel".into()));
            }
            Ok((rotation * o.anchor(spec)?, px))
        })
        .collect::<Result<_>>()?;

    let cost_of = |t: &Vector3<f64>| -> Option<f64> {
        let mut c = 0.0;
        for (va, px) in &anchors {
            let uv = k.project(&(va + t)).ok()?;
            c += (uv - px).norm_squared();
        }
        c.is_finite().then_some(c)
    };

    let mut t = *t_init;
    let mut cost = cost_of(&t).ok_or_else(|| {
        Error::NoSolution("initial translation puts an anchor behind the camera".into())
    })?;

    for _ in 0..100 {
        let mut h = Matrix3::zeros();
        let mut g = Vector3::zeros();
        for (va, px) in &anchors {
            let p = va + t;
            let iz = 1.0 / p.z;
            let ju = Vector3::new(k.f_u * iz, 0.0, -k.f_u * p.x * iz * iz);
            let jv = Vector3::new(0.0, k.f_v * iz, -k.f_v * p.y * iz * iz);
            let ru = k.f_u * p.x * iz + k.u_p - px.x;
            let rv = k.f_v * p.y * iz + k.v_p - px.y;
            h += ju * ju.transpose() + jv * jv.transpose();
            g += ju * ru + jv * rv;
        }
        let Some(chol) = h.cholesky() else {
            return Err(Error::NoSolution("normal equations are singular".into()));
        };
        let mut delta = chol.solve(&-g);
        if delta.norm() < 1e-12 {
            break;
        }
        let mut stepped = false;
        for _ in 0..30 {
            let cand = t + delta;
            if cand.z > 0.0 {
                if let Some(new_cost) = cost_of(&cand) {
                    if new_cost <= cost {
                        t = cand;
                        cost = new_cost;
                        stepped = true;
                        break;
                    }
                }
            }
            delta *= 0.5;
        }
        if !stepped {
            return Err(Error::NoSolution(
                "step failed to reduce reprojection error".into(),
            ));
        }
        if delta.norm() < 1e-12 {
            break;
        }
    }

    if !(t.z > 0.0) {
        return Err(Error::NoSolution(format!(
            "recovered depth {} is not positive",
            t.z
        )));
    }
    Ok(t)
}
