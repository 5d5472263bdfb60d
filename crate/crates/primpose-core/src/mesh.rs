//! Triangle meshes with per-face base colors.

use std::path::Path;

use nalgebra::{UnitQuaternion, Vector3};

use crate::error::{Error, Result};

/// Symmetry annotation used by metric aggregation.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum SymmetryClass {
    #[default]
    None,
    /// Finite symmetry group given as quaternions mapping the model onto itself.
    Discrete(Vec<UnitQuaternion<f64>>),
    /// Continuous symmetry about an axis.
    AxisContinuous,
}

/// Indexed triangle mesh in the object frame, meters.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshModel {
    pub vertices: Vec<Vector3<f64>>,
    pub triangles: Vec<[usize; 3]>,
    /// One RGB base color per triangle.
    pub face_colors: Vec<[f64; 3]>,
    /// Max pairwise vertex distance, cached at construction.
    pub diameter: f64,
    pub symmetry: SymmetryClass,
}

impl MeshModel {
    pub fn new(
        vertices: Vec<Vector3<f64>>,
        triangles: Vec<[usize; 3]>,
        face_colors: Vec<[f64; 3]>,
    ) -> Result<Self> {
        if face_colors.len() != triangles.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} face colors for {} triangles",
                face_colors.len(),
                triangles.len()
            )));
        }
        for t in &triangles {
            if t.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::InvalidInput(format!("triangle index {t:?} out of range")));
            }
        }
        let diameter = crate::metrics::model_diameter(&vertices)?;
        Ok(MeshModel { vertices, triangles, face_colors, diameter, symmetry: SymmetryClass::None })
    }

    pub fn with_symmetry(mut self, symmetry: SymmetryClass) -> Self {
        self.symmetry = symmetry;
        self
    }

    /// Axis-aligned cube of the given edge length, centered at the origin.
    pub fn cube(edge: f64) -> Self {
        let h = 0.5 * edge;
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        let mut colors = Vec::new();
        push_cuboid(
            Vector3::new(-h, -h, -h),
            Vector3::new(h, h, h),
            [0.8, 0.8, 0.8],
            &mut vertices,
            &mut triangles,
            &mut colors,
        );
        MeshModel::new(vertices, triangles, colors).expect("cube construction is valid")
    }

    /// Parses a minimal OBJ-style text mesh: `v x y z` vertices and
    /// `f i j k` triangles with 1-based indices ("i/..." attributes allowed).
    /// Unknown directives are skipped; malformed known lines are errors.
    pub fn from_text(text: &str, origin: &Path) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("v") => {
                    let mut coord = |name: &str| -> Result<f64> {
                        parts
                            .next()
                            .ok_or_else(|| {
                                Error::parse(origin, format!("line {}: v missing {name}", lineno + 1))
                            })?
                            .parse()
                            .map_err(|e| {
                                Error::parse(origin, format!("line {}: bad {name}: {e}", lineno + 1))
                            })
                    };
                    let (x, y, z) = (coord("x")?, coord("y")?, coord("z")?);
                    vertices.push(Vector3::new(x, y, z));
                }
                Some("f") => {
                    let idx: Vec<usize> = parts
                        .map(|tok| {
                            let first = tok.split('/').next().unwrap_or(tok);
                            first.parse::<usize>().map_err(|e| {
                                Error::parse(origin, format!("line {}: bad face index: {e}", lineno + 1))
                            })
                        })
                        .collect::<Result<_>>()?;
                    if idx.len() != 3 {
                        return Err(Error::parse(
                            origin,
                            format!("line {}: faces must be triangles, got {} indices", lineno + 1, idx.len()),
                        ));
                    }
                    if idx.contains(&0) {
                        return Err(Error::parse(
                            origin,
                            format!("line {}: face indices are 1-based, got 0", lineno + 1),
                        ));
                    }
                    triangles.push([idx[0] - 1, idx[1] - 1, idx[2] - 1]);
                }
                _ => {}
            }
        }
        let colors = vec![[0.8, 0.8, 0.8]; triangles.len()];
        MeshModel::new(vertices, triangles, colors)
            .map_err(|e| Error::parse(origin, format!("{e}")))
    }

    pub fn from_text_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, path)
    }
}

/// Appends the 12 outward-wound triangles of an axis-aligned cuboid.
pub(crate) fn push_cuboid(
    lo: Vector3<f64>,
    hi: Vector3<f64>,
    color: [f64; 3],
    vertices: &mut Vec<Vector3<f64>>,
    triangles: &mut Vec<[usize; 3]>,
    colors: &mut Vec<[f64; 3]>,
) {
    let base = vertices.len();
    // Corner i: bit 2 -> x, bit 1 -> y, bit 0 -> z; 0 = lo, 1 = hi.
    for i in 0..8 {
        vertices.push(Vector3::new(
            if i & 4 != 0 { hi.x } else { lo.x },
            if i & 2 != 0 { hi.y } else { lo.y },
            if i & 1 != 0 { hi.z } else { lo.z },
        ));
    }
    // Quads as seen from outside (counter-clockwise, right-handed frame).
    const QUADS: [[usize; 4]; 6] = [
        [0, 2, 6, 4], // -z
        [1, 5, 7, 3], // +z
        [0, 1, 3, 2], // -x
        [4, 6, 7, 5], // +x
        [0, 4, 5, 1], // -y
        [2, 3, 7, 6], // +y
    ];
    for q in QUADS {
        triangles.push([base + q[0], base + q[1], base + q[2]]);
        triangles.push([base + q[0], base + q[2], base + q[3]]);
        colors.push(color);
        colors.push(color);
    }
}
