//! Scanline-free triangle coverage with a top-left fill rule.

use nalgebra::Vector2;

/// Twice the signed area of (a, b, c) in pixel coordinates (y down).
pub(crate) fn orient2d(a: Vector2<f64>, b: Vector2<f64>, c: Vector2<f64>) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Whether edge a->b of a positively wound triangle owns its boundary pixels.
/// With y down and positive winding, owning edges run rightward (top) or
/// upward in screen space (left).
fn edge_owns_boundary(a: Vector2<f64>, b: Vector2<f64>) -> bool {
    (a.y == b.y && b.x > a.x) || b.y < a.y
}

/// One triangle after projection: screen positions plus camera-space depths.
pub(crate) struct ScreenTriangle {
    pub v: [Vector2<f64>; 3],
    pub z: [f64; 3],
}

/// Visits every pixel center covered by `tri` with its perspective-correct
/// depth. Pixel centers sit at integer coordinates. Degenerate (zero-area)
/// triangles cover nothing.
pub(crate) fn for_each_covered_pixel(
    tri: &ScreenTriangle,
    width: usize,
    height: usize,
    mut visit: impl FnMut(usize, usize, f64),
) {
    let mut v = tri.v;
    let mut z = tri.z;
    let mut area2 = orient2d(v[0], v[1], v[2]);
    if area2 == 0.0 {
        return;
    }
    if area2 < 0.0 {
        v.swap(1, 2);
        z.swap(1, 2);
        area2 = -area2;
    }

    let min_x = v[0].x.min(v[1].x).min(v[2].x);
    let max_x = v[0].x.max(v[1].x).max(v[2].x);
    let min_y = v[0].y.min(v[1].y).min(v[2].y);
    let max_y = v[0].y.max(v[1].y).max(v[2].y);
    let u_lo = (min_x.ceil().max(0.0)) as i64;
    let u_hi = (max_x.floor()).min(width as f64 - 1.0) as i64;
    let v_lo = (min_y.ceil().max(0.0)) as i64;
    let v_hi = (max_y.floor()).min(height as f64 - 1.0) as i64;
    if u_lo > u_hi || v_lo > v_hi {
        return;
    }

    let own = [
        edge_owns_boundary(v[1], v[2]),
        edge_owns_boundary(v[2], v[0]),
        edge_owns_boundary(v[0], v[1]),
    ];
    let inv_z = [1.0 / z[0], 1.0 / z[1], 1.0 / z[2]];

    for py in v_lo..=v_hi {
        for px in u_lo..=u_hi {
            let p = Vector2::new(px as f64, py as f64);
            let w = [
                orient2d(v[1], v[2], p),
                orient2d(v[2], v[0], p),
                orient2d(v[0], v[1], p),
            ];
            let covered =
                (0..3).all(|i| w[i] > 0.0 || (w[i] == 0.0 && own[i]));
            if !covered {
                continue;
            }
            let interp_inv_z =
                (w[0] * inv_z[0] + w[1] * inv_z[1] + w[2] * inv_z[2]) / area2;
            visit(px as usize, py as usize, 1.0 / interp_inv_z);
        }
    }
}
