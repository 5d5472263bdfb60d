//! Quickhull in 3D, used only to prune vertices for diameter queries.
//!
//! Returns the indices of the hull vertices (diameter endpoints are always
//! extreme points, so the max pairwise distance over these equals the max
//! over the full set). Degenerate inputs (collinear/coplanar within
//! tolerance) return None and the caller falls back to brute force.

use std::collections::HashMap;

use nalgebra::Vector3;

struct Face {
    verts: [usize; 3],
    normal: Vector3<f64>,
    offset: f64,
    outside: Vec<usize>,
    alive: bool,
}

impl Face {
    fn dist(&self, p: &Vector3<f64>) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

pub fn hull_vertex_indices(points: &[Vector3<f64>]) -> Option<Vec<usize>> {
    if points.len() < 4 {
        return None;
    }
    let (lo, hi) = bounds(points);
    let eps = 1e-9 * (hi - lo).norm().max(f64::MIN_POSITIVE);

    let seed = initial_simplex(points, eps)?;
    let interior: Vector3<f64> =
        seed.iter().map(|&i| points[i]).sum::<Vector3<f64>>() / 4.0;

    let mut faces: Vec<Face> = Vec::new();
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();

    let add_face = |faces: &mut Vec<Face>,
                        edges: &mut HashMap<(usize, usize), usize>,
                        a: usize,
                        b: usize,
                        c: usize|
     -> usize {
        let (pa, pb, pc) = (points[a], points[b], points[c]);
        let mut normal = (pb - pa).cross(&(pc - pa));
        let mut verts = [a, b, c];
        // Orient away from the interior reference point.
        if normal.dot(&(pa - interior)) < 0.0 {
            normal = -normal;
            verts.swap(1, 2);
        }
        let offset = normal.dot(&pa);
        let id = faces.len();
        faces.push(Face { verts, normal, offset, outside: Vec::new(), alive: true });
        edges.insert((verts[0], verts[1]), id);
        edges.insert((verts[1], verts[2]), id);
        edges.insert((verts[2], verts[0]), id);
        id
    };

    let [i0, i1, i2, i3] = seed;
    add_face(&mut faces, &mut edges, i0, i1, i2);
    add_face(&mut faces, &mut edges, i0, i1, i3);
    add_face(&mut faces, &mut edges, i0, i2, i3);
    add_face(&mut faces, &mut edges, i1, i2, i3);

    // Initial point assignment.
    for (i, p) in points.iter().enumerate() {
        if seed.contains(&i) {
            continue;
        }
        for f in 0..faces.len() {
            let scaled = eps * faces[f].normal.norm();
            if faces[f].dist(p) > scaled {
                faces[f].outside.push(i);
                break;
            }
        }
    }

    let mut pending: Vec<usize> = (0..faces.len()).collect();
    while let Some(fid) = pending.pop() {
        if !faces[fid].alive || faces[fid].outside.is_empty() {
            continue;
        }
        // Farthest outside point of this face.
        let p_idx = *faces[fid]
            .outside
            .iter()
            .max_by(|&&a, &&b| {
                faces[fid].dist(&points[a]).total_cmp(&faces[fid].dist(&points[b]))
            })
            .expect("nonempty outside set");
        let p = points[p_idx];

        // Visible region (BFS over adjacency) and its horizon.
        let mut visible = vec![fid];
        let mut seen = vec![false; faces.len()];
        seen[fid] = true;
        let mut horizon: Vec<(usize, usize)> = Vec::new();
        let mut stack = vec![fid];
        while let Some(f) = stack.pop() {
            let verts = faces[f].verts;
            for k in 0..3 {
                let (u, v) = (verts[k], verts[(k + 1) % 3]);
                let Some(&nb) = edges.get(&(v, u)) else { continue };
                if seen.get(nb).copied().unwrap_or(false) {
                    continue;
                }
                let scaled = eps * faces[nb].normal.norm();
                if faces[nb].dist(&p) > scaled {
                    seen[nb] = true;
                    visible.push(nb);
                    stack.push(nb);
                } else {
                    horizon.push((u, v));
                }
            }
        }

        // Gather orphaned candidate points, retire the visible faces.
        let mut orphans: Vec<usize> = Vec::new();
        for &f in &visible {
            orphans.extend(faces[f].outside.drain(..));
            faces[f].alive = false;
            let verts = faces[f].verts;
            for k in 0..3 {
                edges.remove(&(verts[k], verts[(k + 1) % 3]));
            }
        }

        // Cone of new faces over the horizon.
        let mut new_faces = Vec::with_capacity(horizon.len());
        for (u, v) in horizon {
            new_faces.push(add_face(&mut faces, &mut edges, u, v, p_idx));
        }
        for i in orphans {
            if i == p_idx {
                continue;
            }
            for &f in &new_faces {
                let scaled = eps * faces[f].normal.norm();
                if faces[f].dist(&points[i]) > scaled {
                    faces[f].outside.push(i);
                    break;
                }
            }
        }
        pending.extend(new_faces);
    }

    let mut on_hull: Vec<usize> = faces
        .iter()
        .filter(|f| f.alive)
        .flat_map(|f| f.verts.into_iter())
        .collect();
    on_hull.sort_unstable();
    on_hull.dedup();
    Some(on_hull)
}

fn bounds(points: &[Vector3<f64>]) -> (Vector3<f64>, Vector3<f64>) {
    let mut lo = points[0];
    let mut hi = points[0];
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

/// Four affinely independent seed points, or None if the set is degenerate.
fn initial_simplex(points: &[Vector3<f64>], eps: f64) -> Option<[usize; 4]> {
    // Extreme pair along the widest axis.
    let (lo, hi) = bounds(points);
    let extent = hi - lo;
    let axis = if extent.x >= extent.y && extent.x >= extent.z {
        0
    } else if extent.y >= extent.z {
        1
    } else {
        2
    };
    let i0 = (0..points.len()).min_by(|&a, &b| points[a][axis].total_cmp(&points[b][axis]))?;
    let i1 = (0..points.len()).max_by(|&a, &b| points[a][axis].total_cmp(&points[b][axis]))?;
    let dir = points[i1] - points[i0];
    if dir.norm() <= eps {
        return None;
    }

    let line_dist = |p: &Vector3<f64>| {
        let d = p - points[i0];
        (d - dir * (d.dot(&dir) / dir.norm_squared())).norm()
    };
    let i2 = (0..points.len()).max_by(|&a, &b| line_dist(&points[a]).total_cmp(&line_dist(&points[b])))?;
    if line_dist(&points[i2]) <= eps {
        return None;
    }

    let normal = dir.cross(&(points[i2] - points[i0]));
    let plane_dist = |p: &Vector3<f64>| (normal.dot(&(p - points[i0]))).abs() / normal.norm();
    let i3 = (0..points.len()).max_by(|&a, &b| plane_dist(&points[a]).total_cmp(&plane_dist(&points[b])))?;
    if plane_dist(&points[i3]) <= eps {
        return None;
    }
    Some([i0, i1, i2, i3])
}
