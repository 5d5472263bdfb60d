//! Synthetic dataset generation, persistence, and loading.
//!
//! Each sample pairs a domain-randomized object render with the clean
//! primitive render, the pose, the 21 projected keypoints, the object mask,
//! and its tight bounding box. Generation is deterministic: every sample
//! derives its own RNG stream from `seed ^ sample_id`, so any subset
//! regenerates identically and parallel generation matches serial.

mod augment;

pub use augment::augment_domain_randomization;

use std::path::{Path, PathBuf};

use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::buffer::{ImageBuffer, MaskBuffer};
use crate::error::{Error, Result};
use crate::geometry::{uniform_unit_quaternion, BoundingBox, CameraIntrinsics, Pose};
use crate::jsonio::{fmt_f64, fmt_f64_slice, fmt_point_list};
use crate::mesh::MeshModel;
use crate::primitive::{project_keypoints, KeypointSet21, Keypoints2, PrimitiveSpec};
use crate::render::{render_mesh, render_primitive, Shading};

/// On-disk layout version, stored in the manifest.
pub const DATASET_FORMAT_VERSION: &str = "1";

/// Light direction for the lambertian object renders. Fixed so lighting is
/// part of the format, not the randomization.
const OBJECT_LIGHT: [f64; 3] = [0.3, -0.4, 0.85];

/// Everything persisted for one sample.
#[derive(Debug, Clone)]
pub struct DatasetSample {
    pub rgb: ImageBuffer,
    pub primitive: ImageBuffer,
    pub mask: MaskBuffer,
    pub pose: Pose,
    pub keypoints2d: Keypoints2,
    /// Tight axis-aligned bound of `mask`.
    pub bbox: BoundingBox,
    pub sample_id: usize,
}

/// Generation parameters. `validate` is the single source of truth for
/// what counts as well-formed.
#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub t_z_min: f64,
    pub t_z_max: f64,
    /// Minimum distance from the projected model bound to the frame edge.
    pub margin_px: f64,
    pub background: bool,
    /// Color jitter amplitude: per-channel gain in 1 +- amp, bias in +- amp.
    pub color_jitter: f64,
    pub occluder_count: usize,
    /// Occluder side lengths as fractions of the frame.
    pub occluder_size: (f64, f64),
    pub noise_sigma: f64,
    /// Bounding-box inflation used by downstream cropping.
    pub kappa: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_samples: 100,
            seed: 0,
            t_z_min: 0.6,
            t_z_max: 1.4,
            margin_px: 8.0,
            background: true,
            color_jitter: 0.1,
            occluder_count: 2,
            occluder_size: (0.08, 0.25),
            noise_sigma: 0.02,
            kappa: 1.3,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_samples == 0 {
            return bad("n_samples must be at least 1".into());
        }
        if !(self.t_z_min > 0.0 && self.t_z_max >= self.t_z_min && self.t_z_max.is_finite()) {
            return bad(format!(
                "T_z range [{}, {}] must be positive and ordered",
                self.t_z_min, self.t_z_max
            ));
        }
        if !(self.margin_px >= 0.0 && self.margin_px.is_finite()) {
            return bad(format!("margin {} must be nonnegative", self.margin_px));
        }
        if !(0.0..=1.0).contains(&self.color_jitter) {
            return bad(format!("color jitter {} outside [0, 1]", self.color_jitter));
        }
        let (lo, hi) = self.occluder_size;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return bad(format!("occluder size range [{lo}, {hi}] outside [0, 1]"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise sigma {} must be nonnegative", self.noise_sigma));
        }
        if !(self.kappa >= 1.0 && self.kappa.is_finite()) {
            return bad(format!("kappa {} must be at least 1", self.kappa));
        }
        Ok(())
    }
}

/// Feasible range for one lateral translation component so a sphere of
/// `radius` around the object origin projects at least `margin` px inside
/// the frame along this axis. `clear` is T_z minus the radius.
fn lateral_range(
    focal: f64,
    principal: f64,
    extent_px: f64,
    margin: f64,
    radius: f64,
    clear: f64,
) -> (f64, f64) {
    let lo = (margin - principal) * clear / focal + radius;
    let hi = (extent_px - 1.0 - margin - principal) * clear / focal - radius;
    (lo, hi)
}

/// Draws a pose: rotation uniform on SO(3), T_z uniform in the configured
/// range, T_x and T_y uniform over the frame-margin-feasible box.
///
/// `radius_m` is the model's bounding radius about its origin; the sampled
/// translation keeps that sphere's projection `margin_px` inside the frame.
pub fn sample_pose<R: Rng + ?Sized>(
    rng: &mut R,
    config: &GenConfig,
    k: &CameraIntrinsics,
    radius_m: f64,
) -> Result<Pose> {
    config.validate()?;
    if !(radius_m > 0.0 && radius_m.is_finite()) {
        return Err(Error::Config(format!(
            "model radius {radius_m} must be positive"
        )));
    }
    if config.t_z_min <= radius_m {
        return Err(Error::Config(format!(
            "min T_z {} does not clear the model radius {radius_m}",
            config.t_z_min
        )));
    }
    // feasibility is tightest at the closest depth
    let clear_min = config.t_z_min - radius_m;
    let (xl, xh) = lateral_range(
        k.f_u,
        k.u_p,
        k.width as f64,
        config.margin_px,
        radius_m,
        clear_min,
    );
    let (yl, yh) = lateral_range(
        k.f_v,
        k.v_p,
        k.height as f64,
        config.margin_px,
        radius_m,
        clear_min,
    );
    if xl > xh || yl > yh {
        return Err(Error::Config(format!(
            "margin {} px infeasible at T_z {}",
            config.margin_px, config.t_z_min
        )));
    }

    let rotation = uniform_unit_quaternion(rng);
    let t_z = rng.random_range(config.t_z_min..=config.t_z_max);
    let clear = t_z - radius_m;
    let (xl, xh) = lateral_range(
        k.f_u,
        k.u_p,
        k.width as f64,
        config.margin_px,
        radius_m,
        clear,
    );
    let (yl, yh) = lateral_range(
        k.f_v,
        k.v_p,
        k.height as f64,
        config.margin_px,
        radius_m,
        clear,
    );
    let t_x = rng.random_range(xl..=xh);
    let t_y = rng.random_range(yl..=yh);
    Ok(Pose::new(rotation, Vector3::new(t_x, t_y, t_z)))
}

/// Relative path and SHA-256 of one written file.
#[derive(Debug, Clone, PartialEq)]
pub struct FileChecksum {
    pub path: String,
    pub sha256: String,
}

/// Summary returned by `generate_dataset`.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub n_samples: usize,
    pub files: Vec<FileChecksum>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

fn write_file(out_dir: &Path, rel: &str, bytes: &[u8]) -> Result<FileChecksum> {
    let path = out_dir.join(rel);
    std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    Ok(FileChecksum {
        path: rel.to_string(),
        sha256: sha256_hex(bytes),
    })
}

fn intrinsics_json(k: &CameraIntrinsics) -> String {
    format!(
        "{{\"f_u\":{},\"f_v\":{},\"u_p\":{},\"v_p\":{},\"width\":{},\"height\":{}}}",
        fmt_f64(k.f_u),
        fmt_f64(k.f_v),
        fmt_f64(k.u_p),
        fmt_f64(k.v_p),
        k.width,
        k.height
    )
}

fn spec_json(spec: &PrimitiveSpec) -> String {
    let colors: Vec<String> = spec
        .axis_colors
        .iter()
        .map(|c| fmt_f64_slice(c))
        .collect();
    format!(
        "{{\"cube_half\":{},\"arm_length\":{},\"arm_half\":{},\"axis_colors\":[{}],\"cube_color\":{}}}",
        fmt_f64(spec.cube_half),
        fmt_f64(spec.arm_length),
        fmt_f64(spec.arm_half),
        colors.join(","),
        fmt_f64_slice(&spec.cube_color)
    )
}

fn config_json(c: &GenConfig) -> String {
    format!(
        "{{\"n_samples\":{},\"seed\":{},\"t_z_min\":{},\"t_z_max\":{},\"margin_px\":{},\"background\":{},\"color_jitter\":{},\"occluder_count\":{},\"occluder_size_min\":{},\"occluder_size_max\":{},\"noise_sigma\":{},\"kappa\":{}}}",
        c.n_samples,
        c.seed,
        fmt_f64(c.t_z_min),
        fmt_f64(c.t_z_max),
        fmt_f64(c.margin_px),
        c.background,
        fmt_f64(c.color_jitter),
        c.occluder_count,
        fmt_f64(c.occluder_size.0),
        fmt_f64(c.occluder_size.1),
        fmt_f64(c.noise_sigma),
        fmt_f64(c.kappa)
    )
}

fn sample_meta_json(
    id: usize,
    pose: &Pose,
    bbox: &BoundingBox,
    keypoints: &Keypoints2,
) -> String {
    format!(
        "{{\"sample_id\":{id},\"pose\":{{\"quat_wxyz\":{},\"t_m\":{}}},\"bbox\":{},\"keypoints_px\":{}}}",
        fmt_f64_slice(&pose.quat_wxyz()),
        fmt_f64_slice(pose.translation.as_slice()),
        fmt_f64_slice(&[bbox.u_min, bbox.v_min, bbox.u_max, bbox.v_max]),
        fmt_point_list(keypoints.iter().map(|p| [p.x, p.y]))
    )
}

fn bounding_radius(model: &MeshModel) -> f64 {
    model
        .vertices
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max)
}

fn wrap_sample(id: usize) -> impl Fn(Error) -> Error {
    move |e| Error::Sample {
        id,
        source: Box::new(e),
    }
}

fn generate_one(
    model: &MeshModel,
    spec: &PrimitiveSpec,
    k: &CameraIntrinsics,
    config: &GenConfig,
    radius: f64,
    out_dir: &Path,
    id: usize,
) -> Result<Vec<FileChecksum>> {
    let wrap = wrap_sample(id);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ id as u64);
    let pose = sample_pose(&mut rng, config, k, radius).map_err(&wrap)?;
    let light = Vector3::from_column_slice(&OBJECT_LIGHT);
    let object = render_mesh(model, &pose, k, &Shading::Lambertian { light_dir: light })
        .map_err(&wrap)?;
    let prim = render_primitive(spec, &pose, k).map_err(&wrap)?;
    let rgb = augment_domain_randomization(&object.color, &object.mask, &mut rng, config);
    let keypoints = project_keypoints(&pose, k, spec).map_err(&wrap)?;
    let bbox = object
        .mask
        .tight_bbox()
        .ok_or_else(|| wrap(Error::EmptyObject))?;

    let mut files = Vec::with_capacity(4);
    files.push(write_file(
        out_dir,
        &format!("samples/{id:06}_rgb.png"),
        &rgb.encode_png(),
    )?);
    files.push(write_file(
        out_dir,
        &format!("samples/{id:06}_prim.png"),
        &prim.color.encode_png(),
    )?);
    files.push(write_file(
        out_dir,
        &format!("samples/{id:06}_mask.png"),
        &object.mask.encode_png(),
    )?);
    files.push(write_file(
        out_dir,
        &format!("samples/{id:06}_meta.json"),
        sample_meta_json(id, &pose, &bbox, &keypoints).as_bytes(),
    )?);
    Ok(files)
}

/// Renders and writes `config.n_samples` samples under `out_dir`.
///
/// Layout: `meta.json` plus `samples/{id:06}_{rgb,prim,mask}.png` and
/// `samples/{id:06}_meta.json`. Samples are generated in parallel; the
/// result is byte-identical to serial generation because each sample owns
/// its derived seed.
pub fn generate_dataset(
    model: &MeshModel,
    spec: &PrimitiveSpec,
    k: &CameraIntrinsics,
    config: &GenConfig,
    out_dir: &Path,
) -> Result<DatasetManifest> {
    config.validate()?;
    let radius = bounding_radius(model);
    // keypoints must stay projectable at the closest depth
    if config.t_z_min <= spec.bounding_radius() {
        return Err(Error::Config(format!(
            "min T_z {} does not clear the primitive radius {}",
            config.t_z_min,
            spec.bounding_radius()
        )));
    }
    let samples_dir = out_dir.join("samples");
    std::fs::create_dir_all(&samples_dir).map_err(|e| Error::io(&samples_dir, e))?;

    let per_sample: Vec<Vec<FileChecksum>> = (0..config.n_samples)
        .into_par_iter()
        .map(|id| generate_one(model, spec, k, config, radius, out_dir, id))
        .collect::<Result<_>>()?;

    let meta = format!(
        "{{\"format_version\":\"{DATASET_FORMAT_VERSION}\",\"intrinsics\":{},\"spec\":{},\"config\":{}}}",
        intrinsics_json(k),
        spec_json(spec),
        config_json(config)
    );
    let mut files = vec![write_file(out_dir, "meta.json", meta.as_bytes())?];
    files.extend(per_sample.into_iter().flatten());
    Ok(DatasetManifest {
        n_samples: config.n_samples,
        files,
    })
}

/// Manifest contents of a stored dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMeta {
    pub intrinsics: CameraIntrinsics,
    pub spec: PrimitiveSpec,
    pub config: GenConfig,
}

/// Lazy reader over a stored dataset, ordered by sample id. Each sample is
/// validated against the format invariants as it is read.
pub struct DatasetReader {
    /// None only for a directory holding no dataset at all.
    pub meta: Option<DatasetMeta>,
    dir: PathBuf,
    next_id: usize,
    n_samples: usize,
}

impl DatasetReader {
    pub fn len(&self) -> usize {
        self.n_samples
    }

    pub fn is_empty(&self) -> bool {
        self.n_samples == 0
    }
}

impl Iterator for DatasetReader {
    type Item = Result<DatasetSample>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next_id >= self.n_samples {
            return None;
        }
        let id = self.next_id;
        self.next_id += 1;
        let meta = self.meta.as_ref().expect("samples imply a manifest");
        Some(load_sample(&self.dir, meta, id))
    }
}

fn parse_err(file: &Path, msg: impl Into<String>) -> Error {
    Error::parse(file, msg)
}

fn json_field<'a>(v: &'a Value, file: &Path, name: &str) -> Result<&'a Value> {
    v.get(name)
        .ok_or_else(|| parse_err(file, format!("missing field {name}")))
}

fn json_f64(v: &Value, file: &Path, name: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| parse_err(file, format!("field {name} is not a number")))
}

fn json_usize(v: &Value, file: &Path, name: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| parse_err(file, format!("field {name} is not a nonnegative integer")))
}

fn json_f64_array<const N: usize>(v: &Value, file: &Path, name: &str) -> Result<[f64; N]> {
    let arr = v
        .as_array()
        .ok_or_else(|| parse_err(file, format!("field {name} is not an array")))?;
    if arr.len() != N {
        return Err(parse_err(
            file,
            format!("field {name} has {} elements, expected {N}", arr.len()),
        ));
    }
    let mut out = [0.0; N];
    for (i, x) in arr.iter().enumerate() {
        out[i] = json_f64(x, file, &format!("{name}[{i}]"))?;
    }
    Ok(out)
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, format!("invalid JSON: {e}")))
}

fn parse_meta(path: &Path) -> Result<DatasetMeta> {
    let v = read_json(path)?;
    let version = json_field(&v, path, "format_version")?
        .as_str()
        .ok_or_else(|| parse_err(path, "field format_version is not a string"))?
        .to_string();
    if version != DATASET_FORMAT_VERSION {
        return Err(parse_err(
            path,
            format!("unsupported format_version {version}"),
        ));
    }

    let ki = json_field(&v, path, "intrinsics")?;
    let intrinsics = CameraIntrinsics::new(
        json_f64(json_field(ki, path, "f_u")?, path, "intrinsics.f_u")?,
        json_f64(json_field(ki, path, "f_v")?, path, "intrinsics.f_v")?,
        json_f64(json_field(ki, path, "u_p")?, path, "intrinsics.u_p")?,
        json_f64(json_field(ki, path, "v_p")?, path, "intrinsics.v_p")?,
        json_usize(json_field(ki, path, "width")?, path, "intrinsics.width")?,
        json_usize(json_field(ki, path, "height")?, path, "intrinsics.height")?,
    )?;

    let sp = json_field(&v, path, "spec")?;
    let colors_v = json_field(sp, path, "axis_colors")?
        .as_array()
        .ok_or_else(|| parse_err(path, "field spec.axis_colors is not an array"))?;
    if colors_v.len() != 3 {
        return Err(parse_err(path, "field spec.axis_colors needs 3 entries"));
    }
    let mut axis_colors = [[0.0; 3]; 3];
    for (i, c) in colors_v.iter().enumerate() {
        axis_colors[i] = json_f64_array::<3>(c, path, &format!("spec.axis_colors[{i}]"))?;
    }
    let spec = PrimitiveSpec::new(
        json_f64(json_field(sp, path, "cube_half")?, path, "spec.cube_half")?,
        json_f64(json_field(sp, path, "arm_length")?, path, "spec.arm_length")?,
        json_f64(json_field(sp, path, "arm_half")?, path, "spec.arm_half")?,
        axis_colors,
        json_f64_array::<3>(json_field(sp, path, "cube_color")?, path, "spec.cube_color")?,
    )?;

    let cf = json_field(&v, path, "config")?;
    let config = GenConfig {
        n_samples: json_usize(json_field(cf, path, "n_samples")?, path, "config.n_samples")?,
        seed: json_field(cf, path, "seed")?
            .as_u64()
            .ok_or_else(|| parse_err(path, "field config.seed is not a nonnegative integer"))?,
        t_z_min: json_f64(json_field(cf, path, "t_z_min")?, path, "config.t_z_min")?,
        t_z_max: json_f64(json_field(cf, path, "t_z_max")?, path, "config.t_z_max")?,
        margin_px: json_f64(json_field(cf, path, "margin_px")?, path, "config.margin_px")?,
        background: json_field(cf, path, "background")?
            .as_bool()
            .ok_or_else(|| parse_err(path, "field config.background is not a boolean"))?,
        color_jitter: json_f64(
            json_field(cf, path, "color_jitter")?,
            path,
            "config.color_jitter",
        )?,
        occluder_count: json_usize(
            json_field(cf, path, "occluder_count")?,
            path,
            "config.occluder_count",
        )?,
        occluder_size: (
            json_f64(
                json_field(cf, path, "occluder_size_min")?,
                path,
                "config.occluder_size_min",
            )?,
            json_f64(
                json_field(cf, path, "occluder_size_max")?,
                path,
                "config.occluder_size_max",
            )?,
        ),
        noise_sigma: json_f64(
            json_field(cf, path, "noise_sigma")?,
            path,
            "config.noise_sigma",
        )?,
        kappa: json_f64(json_field(cf, path, "kappa")?, path, "config.kappa")?,
    };
    config.validate()?;

    Ok(DatasetMeta {
        intrinsics,
        spec,
        config,
    })
}

/// Pose, projected keypoints, and bbox of one sample, without its images.
#[derive(Debug, Clone)]
pub struct SampleAnnotation {
    pub sample_id: usize,
    pub pose: Pose,
    pub keypoints2d: Keypoints2,
    pub bbox: BoundingBox,
}

fn parse_sample_meta(dir: &Path, meta: &DatasetMeta, id: usize) -> Result<SampleAnnotation> {
    let meta_path = dir.join(format!("samples/{id:06}_meta.json"));
    let v = read_json(&meta_path)?;
    let stored_id = json_usize(json_field(&v, &meta_path, "sample_id")?, &meta_path, "sample_id")?;
    if stored_id != id {
        return Err(parse_err(
            &meta_path,
            format!("sample_id {stored_id} does not match file name {id}"),
        ));
    }
    let pose_v = json_field(&v, &meta_path, "pose")?;
    let quat = json_f64_array::<4>(
        json_field(pose_v, &meta_path, "quat_wxyz")?,
        &meta_path,
        "pose.quat_wxyz",
    )?;
    let t = json_f64_array::<3>(
        json_field(pose_v, &meta_path, "t_m")?,
        &meta_path,
        "pose.t_m",
    )?;
    let pose = Pose::from_wxyz(quat, t)?;
    let bb = json_f64_array::<4>(json_field(&v, &meta_path, "bbox")?, &meta_path, "bbox")?;
    let bbox = BoundingBox::new(bb[0], bb[1], bb[2], bb[3])?;

    let kp_v = json_field(&v, &meta_path, "keypoints_px")?
        .as_array()
        .ok_or_else(|| parse_err(&meta_path, "field keypoints_px is not an array"))?;
    if kp_v.len() != 21 {
        return Err(parse_err(
            &meta_path,
            format!("field keypoints_px has {} points, expected 21", kp_v.len()),
        ));
    }
    let mut points = [Vector2::zeros(); 21];
    for (i, p) in kp_v.iter().enumerate() {
        let xy = json_f64_array::<2>(p, &meta_path, &format!("keypoints_px[{i}]"))?;
        points[i] = Vector2::new(xy[0], xy[1]);
    }
    let keypoints2d = KeypointSet21 { points };

    // format invariant: stored keypoints re-derive from the stored pose
    let expect = project_keypoints(&pose, &meta.intrinsics, &meta.spec)?;
    for i in 0..21 {
        let d = (keypoints2d[i] - expect[i]).norm();
        if d > 1e-6 {
            return Err(parse_err(
                &meta_path,
                format!("field keypoints_px[{i}] deviates {d} px from the stored pose"),
            ));
        }
    }

    Ok(SampleAnnotation {
        sample_id: id,
        pose,
        keypoints2d,
        bbox,
    })
}

/// Reads every sample's pose, keypoints, and bbox without decoding any
/// image, validating the keypoint invariant. For pose-level work over large
/// datasets this skips the dominant PNG cost.
pub fn load_annotations(dir: &Path) -> Result<(DatasetMeta, Vec<SampleAnnotation>)> {
    let meta = parse_meta(&dir.join("meta.json"))?;
    let annotations = (0..meta.config.n_samples)
        .map(|id| parse_sample_meta(dir, &meta, id))
        .collect::<Result<_>>()?;
    Ok((meta, annotations))
}

fn load_sample(dir: &Path, meta: &DatasetMeta, id: usize) -> Result<DatasetSample> {
    let ann = parse_sample_meta(dir, meta, id)?;
    let meta_path = dir.join(format!("samples/{id:06}_meta.json"));

    let rgb_path = dir.join(format!("samples/{id:06}_rgb.png"));
    let prim_path = dir.join(format!("samples/{id:06}_prim.png"));
    let mask_path = dir.join(format!("samples/{id:06}_mask.png"));
    let rgb = ImageBuffer::load_png(&rgb_path)?;
    let primitive = ImageBuffer::load_png(&prim_path)?;
    let mask = MaskBuffer::load_png(&mask_path)?;

    // format invariant: bbox is the exact tight bound of the mask
    let bbox = ann.bbox;
    match mask.tight_bbox() {
        Some(tight)
            if tight.u_min == bbox.u_min
                && tight.v_min == bbox.v_min
                && tight.u_max == bbox.u_max
                && tight.v_max == bbox.v_max => {}
        _ => {
            return Err(parse_err(
                &meta_path,
                "field bbox is not the tight bound of the stored mask",
            ))
        }
    }

    Ok(DatasetSample {
        rgb,
        primitive,
        mask,
        pose: ann.pose,
        keypoints2d: ann.keypoints2d,
        bbox,
        sample_id: id,
    })
}

/// Opens a stored dataset for iteration. A directory containing no
/// manifest and no samples yields an empty reader; a manifest is required
/// once samples exist.
pub fn load_dataset(dir: &Path) -> Result<DatasetReader> {
    let meta_path = dir.join("meta.json");
    if !meta_path.exists() {
        if dir.join("samples").exists() {
            return Err(parse_err(
                &meta_path,
                "missing manifest for an existing samples directory",
            ));
        }
        return Ok(DatasetReader {
            meta: None,
            dir: dir.to_path_buf(),
            next_id: 0,
            n_samples: 0,
        });
    }
    let meta = parse_meta(&meta_path)?;
    let n_samples = meta.config.n_samples;
    Ok(DatasetReader {
        meta: Some(meta),
        dir: dir.to_path_buf(),
        next_id: 0,
        n_samples,
    })
}
