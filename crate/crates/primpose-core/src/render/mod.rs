//! Deterministic software rasterizer producing color, mask, and depth.

mod raster;

use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::buffer::{DepthBuffer, ImageBuffer, MaskBuffer};
use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Pose};
use crate::mesh::MeshModel;
use crate::primitive::{primitive_mesh, PrimitiveSpec};

use raster::{for_each_covered_pixel, ScreenTriangle};

/// Vertices at or below this camera z are an error; there is no clipping.
pub const MIN_RENDER_Z: f64 = 1e-6;

/// Ambient floor for lambertian shading.
pub const AMBIENT_LIGHT: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub enum Shading {
    /// Face base color written unmodified.
    Flat,
    /// Base color scaled by max(AMBIENT_LIGHT, n·l). `light_dir` points from
    /// the surface toward the light; it need not be normalized.
    Lambertian { light_dir: Vector3<f64> },
}

/// One render's buffers. Mask is true exactly where depth is finite, and
/// color equals `background` exactly where mask is false.
#[derive(Debug, Clone)]
pub struct RenderOutput {
    pub color: ImageBuffer,
    pub mask: MaskBuffer,
    pub depth: DepthBuffer,
    pub background: [f64; 3],
}

/// Z-buffered rasterization of `mesh` posed in front of camera `k`.
///
/// Coverage uses pixel centers at integer coordinates with a top-left fill
/// rule, so triangles sharing an edge never double-draw or leave seams.
/// Depth is perspective-correct (1/z interpolation). No anti-aliasing.
pub fn render_mesh(
    mesh: &MeshModel,
    pose: &Pose,
    k: &CameraIntrinsics,
    shading: &Shading,
) -> Result<RenderOutput> {
    let light = match shading {
        Shading::Flat => None,
        Shading::Lambertian { light_dir } => Some(
            light_dir
                .try_normalize(1e-12)
                .ok_or_else(|| Error::InvalidParam("lambertian light_dir is zero".into()))?,
        ),
    };

    let cam: Vec<Vector3<f64>> = mesh.vertices.iter().map(|v| pose.transform_point(v)).collect();
    if let Some(p) = cam.iter().find(|p| p.z <= MIN_RENDER_Z) {
        return Err(Error::BehindCamera { z: p.z });
    }
    let screen: Vec<Vector2<f64>> =
        cam.iter().map(|p| k.project(p)).collect::<Result<_>>()?;

    let background = [0.0, 0.0, 0.0];
    let mut color = ImageBuffer::filled(k.width, k.height, background);
    let mut mask = MaskBuffer::new(k.width, k.height);
    let mut depth = DepthBuffer::new(k.width, k.height);

    for (ti, t) in mesh.triangles.iter().enumerate() {
        let shade = match light {
            None => mesh.face_colors[ti],
            Some(l) => {
                let (a, b, c) = (cam[t[0]], cam[t[1]], cam[t[2]]);
                let mut n = (b - a).cross(&(c - a));
                // Faces are shaded as seen by the camera: flip the geometric
                // normal toward the viewpoint at the origin.
                if n.dot(&(a + b + c)) > 0.0 {
                    n = -n;
                }
                let intensity = match n.try_normalize(0.0) {
                    Some(n) => AMBIENT_LIGHT.max(n.dot(&l)),
                    None => AMBIENT_LIGHT,
                };
                let base = mesh.face_colors[ti];
                [base[0] * intensity, base[1] * intensity, base[2] * intensity]
            }
        };
        let tri = ScreenTriangle {
            v: [screen[t[0]], screen[t[1]], screen[t[2]]],
            z: [cam[t[0]].z, cam[t[1]].z, cam[t[2]].z],
        };
        for_each_covered_pixel(&tri, k.width, k.height, |u, v, z| {
            if z < depth.get(u, v) {
                depth.set(u, v, z);
                mask.set(u, v, true);
                color.set(u, v, shade);
            }
        });
    }
    Ok(RenderOutput { color, mask, depth, background })
}

/// Flat-shaded render of the axis primitive (pure per-face colors).
pub fn render_primitive(
    spec: &PrimitiveSpec,
    pose: &Pose,
    k: &CameraIntrinsics,
) -> Result<RenderOutput> {
    render_mesh(&primitive_mesh(spec), pose, k, &Shading::Flat)
}

/// Paints `count` axis-aligned rectangles of random uniform color over the
/// render's color image and returns the result; mask and depth are untouched.
///
/// Each rectangle's side lengths are a fraction of the frame drawn uniformly
/// from `size_range` (clamped to [0, 1]); its placement is uniform among
/// positions fully inside the frame, so a size fraction of 1 covers the
/// whole frame. Deterministic for a fixed seed.
pub fn composite_occlusion(
    render: &RenderOutput,
    count: usize,
    size_range: (f64, f64),
    seed: u64,
) -> ImageBuffer {
    occlude_image(&render.color, count, size_range, seed)
}

/// [`composite_occlusion`] for a bare image, e.g. one loaded from disk.
pub fn occlude_image(
    img: &ImageBuffer,
    count: usize,
    size_range: (f64, f64),
    seed: u64,
) -> ImageBuffer {
    let mut out = img.clone();
    occlude_in_place(&mut out, count, size_range, &mut ChaCha8Rng::seed_from_u64(seed));
    out
}

/// Occluder painting shared with dataset augmentation.
pub(crate) fn occlude_in_place(
    img: &mut ImageBuffer,
    count: usize,
    size_range: (f64, f64),
    rng: &mut impl Rng,
) {
    let (mut lo, mut hi) = size_range;
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let (lo, hi) = (lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0));
    let (w, h) = (img.width() as f64, img.height() as f64);
    for _ in 0..count {
        let rw = w * rng.random_range(lo..=hi);
        let rh = h * rng.random_range(lo..=hi);
        let u0 = rng.random_range(0.0..=(w - rw));
        let v0 = rng.random_range(0.0..=(h - rh));
        let color = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
        // A pixel is painted when its integer-coordinate center falls inside
        // the half-open rectangle [u0, u0+rw) x [v0, v0+rh).
        let u_end = ((u0 + rw).ceil() as usize).min(img.width());
        let v_end = ((v0 + rh).ceil() as usize).min(img.height());
        for v in (v0.ceil() as usize)..v_end {
            for u in (u0.ceil() as usize)..u_end {
                if (u as f64) < u0 + rw && (v as f64) < v0 + rh {
                    img.set(u, v, color);
                }
            }
        }
    }
}
