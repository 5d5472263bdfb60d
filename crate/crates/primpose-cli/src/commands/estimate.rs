//! `estimate`: oracle pose estimation over a generated dataset.
//!
//! Keypoint "prediction" is simulated: stored ground-truth keypoints plus
//! Gaussian noise plus optional outliers, restricted to an optionally
//! degraded detection window. Rotation comes from PnP/RANSAC on those
//! keypoints; translation starts from back-projecting the observed center
//! at the PnP depth and is refined against the center/tip observations.
//! With `--centers-from-images` the center and tips are measured from the
//! stored primitive image instead of synthesized.

use std::path::{Path, PathBuf};

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use primpose_core::{
    detect_axis_tips, estimate_center_image, load_annotations, occlude_image, primitive_corners_3d,
    primitive_mesh, refine_pnp_lm, refine_translation_fixed_rotation, render_primitive,
    solve_pnp_dlt, solve_pnp_ransac, BoundingBox, CameraIntrinsics, Correspondence, DatasetMeta,
    ImageBuffer, MeshModel, MetricReport, PnPResult, Pose, PrimitiveSpec, SampleAnnotation,
    TranslationObservation,
};

use crate::config::{self, log_resolved};
use crate::estimates::{EstimateRecord, EstimateRun};
use crate::CliError;

/// Rendered primitive images have a black background.
const PRIM_BACKGROUND: [f64; 3] = [0.0, 0.0, 0.0];

#[derive(clap::Args)]
pub struct EstimateArgs {
    /// Dataset directory produced by `gen`
    #[arg(long)]
    data: PathBuf,
    /// Output estimates JSON path
    #[arg(long)]
    out: PathBuf,
    /// Mesh for the metric report; defaults to the dataset's primitive
    #[arg(long)]
    model: Option<PathBuf>,
    /// Also write the metric report JSON to this path
    #[arg(long)]
    report: Option<PathBuf>,
    /// Flat key = value config file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Gaussian keypoint noise sigma, px
    #[arg(long)]
    kp_sigma: Option<f64>,
    /// Fraction of the 21 keypoints replaced by uniform outliers
    #[arg(long)]
    outlier_frac: Option<f64>,
    /// Occluder rectangles painted on the primitive image (image mode)
    #[arg(long)]
    occluders: Option<usize>,
    /// Detection-box IoU with the true box; 1 leaves it untouched
    #[arg(long)]
    iou: Option<f64>,
    /// Crop inflation factor; defaults to the dataset's kappa
    #[arg(long)]
    kappa: Option<f64>,
    /// Measure center and tips from the primitive image
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    centers_from_images: Option<bool>,
    #[arg(long)]
    ransac_iters: Option<usize>,
    /// RANSAC inlier threshold, px
    #[arg(long)]
    inlier_threshold: Option<f64>,
    /// Print the metric report as JSON instead of text
    #[arg(long)]
    json: bool,
}

struct Settings {
    seed: u64,
    kp_sigma: f64,
    outlier_frac: f64,
    occluders: usize,
    /// Estimate-time occluders reuse the dataset's size range.
    occluder_size: (f64, f64),
    iou: f64,
    kappa: f64,
    centers_from_images: bool,
    ransac_iters: usize,
    inlier_threshold: f64,
}

pub fn run(args: EstimateArgs) -> Result<(), CliError> {
    let mut map = config::load(args.config.as_deref())?;
    log_resolved("data", &args.data.display());
    log_resolved("out", &args.out.display());

    let (meta, annotations) = load_annotations(&args.data)?;
    let s = Settings {
        seed: map.resolve("seed", args.seed, 0)?,
        kp_sigma: map.resolve("kp-sigma", args.kp_sigma, 0.0)?,
        outlier_frac: map.resolve("outlier-frac", args.outlier_frac, 0.0)?,
        occluders: map.resolve("occluders", args.occluders, 0)?,
        occluder_size: meta.config.occluder_size,
        iou: map.resolve("iou", args.iou, 1.0)?,
        kappa: map.resolve("kappa", args.kappa, meta.config.kappa)?,
        centers_from_images: map.resolve(
            "centers-from-images",
            args.centers_from_images,
            false,
        )?,
        ransac_iters: map.resolve("ransac-iters", args.ransac_iters, 100)?,
        inlier_threshold: map.resolve("inlier-threshold", args.inlier_threshold, 3.0)?,
    };
    map.finish()?;
    validate_settings(&s)?;

    // mesh for the metric report: the object mesh when given, else the
    // primitive itself
    let mesh = match &args.model {
        Some(path) => {
            log_resolved("model", &path.display());
            MeshModel::from_text_file(path)?
        }
        None => primitive_mesh(&meta.spec),
    };

    let mut records = Vec::with_capacity(annotations.len());
    for ann in &annotations {
        let record = estimate_sample(&args.data, &meta, ann, &s)
            .map_err(|e| prefix_sample(ann.sample_id, e))?;
        records.push(record);
    }

    let run = EstimateRun {
        seed: s.seed,
        kp_sigma: s.kp_sigma,
        outlier_frac: s.outlier_frac,
        occluders: s.occluders,
        iou: s.iou,
        kappa: s.kappa,
        centers_from_images: s.centers_from_images,
        ransac_iters: s.ransac_iters,
        inlier_threshold: s.inlier_threshold,
        records,
    };
    let json = run.to_json();
    std::fs::write(&args.out, &json)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.out.display())))?;

    let refined = run.records.iter().filter(|r| r.translation_refined).count();
    eprintln!(
        "estimated {} samples ({refined} with refined translation) -> {}",
        run.records.len(),
        args.out.display()
    );

    let pairs: Vec<(Pose, Pose)> = annotations
        .iter()
        .zip(run.records.iter())
        .map(|(a, r)| (a.pose, r.pose))
        .collect();
    let metric = MetricReport::evaluate(&mesh, &meta.intrinsics, &pairs)?;
    if let Some(path) = &args.report {
        std::fs::write(path, metric.to_json())
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    if args.json {
        println!("{}", metric.to_json());
    } else {
        print!("{}", metric.to_text());
    }
    Ok(())
}

fn validate_settings(s: &Settings) -> Result<(), CliError> {
    if !(s.iou > 0.0 && s.iou <= 1.0) {
        return Err(CliError::Config(format!(
            "iou {} outside (0, 1]",
            s.iou
        )));
    }
    if !(0.0..=1.0).contains(&s.outlier_frac) {
        return Err(CliError::Config(format!(
            "outlier-frac {} outside [0, 1]",
            s.outlier_frac
        )));
    }
    if s.kp_sigma < 0.0 || !s.kp_sigma.is_finite() {
        return Err(CliError::Config(format!(
            "kp-sigma {} must be nonnegative",
            s.kp_sigma
        )));
    }
    if s.kappa < 1.0 {
        return Err(CliError::Config(format!(
            "kappa {} must be at least 1",
            s.kappa
        )));
    }
    if s.ransac_iters == 0 {
        return Err(CliError::Config("ransac-iters must be at least 1".into()));
    }
    if !(s.inlier_threshold > 0.0) {
        return Err(CliError::Config(format!(
            "inlier-threshold {} must be positive",
            s.inlier_threshold
        )));
    }
    Ok(())
}

fn prefix_sample(id: usize, e: CliError) -> CliError {
    let msg = format!("sample {id}: {}", e.message());
    match e {
        CliError::Verification(_) => CliError::Verification(msg),
        CliError::Config(_) => CliError::Config(msg),
        CliError::Io(_) => CliError::Io(msg),
    }
}

/// Shifts the box diagonally so its IoU with the original equals `iou`.
/// For a shift by fraction s of each side, overlap is (1-s)^2 of the area
/// and IoU = (1-s)^2 / (2 - (1-s)^2), so s = 1 - sqrt(2*iou / (1 + iou)).
fn degrade_bbox(bbox: &BoundingBox, iou: f64, flip_u: bool, flip_v: bool) -> BoundingBox {
    let s = 1.0 - (2.0 * iou / (1.0 + iou)).sqrt();
    let du = s * bbox.width() * if flip_u { -1.0 } else { 1.0 };
    let dv = s * bbox.height() * if flip_v { -1.0 } else { 1.0 };
    BoundingBox {
        u_min: bbox.u_min + du,
        v_min: bbox.v_min + dv,
        u_max: bbox.u_max + du,
        v_max: bbox.v_max + dv,
    }
}

/// Solves rotation on whatever correspondences survived: RANSAC first, then
/// a plain LM pass, then bare DLT, so one degenerate sample cannot abort a
/// whole run unless nothing at all works.
fn solve_rotation(
    corrs: &[Correspondence],
    k: &CameraIntrinsics,
    iters: usize,
    threshold: f64,
    seed: u64,
) -> Result<PnPResult, CliError> {
    match solve_pnp_ransac(corrs, k, iters, threshold, seed) {
        Ok(result) => Ok(result),
        Err(ransac_err) => {
            if let Ok(init) = solve_pnp_dlt(corrs, k) {
                if let Ok(result) = refine_pnp_lm(corrs, k, &init, 100, 1e-12) {
                    return Ok(result);
                }
                return Ok(PnPResult {
                    reprojection_rmse: f64::INFINITY,
                    inliers: vec![false; corrs.len()],
                    converged: false,
                    pose: init,
                });
            }
            Err(CliError::Verification(ransac_err.to_string()))
        }
    }
}

fn estimate_sample(
    data_dir: &Path,
    meta: &DatasetMeta,
    ann: &SampleAnnotation,
    s: &Settings,
) -> Result<EstimateRecord, CliError> {
    let k = &meta.intrinsics;
    let spec = &meta.spec;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed ^ ann.sample_id as u64);
    let noise = Normal::new(0.0, s.kp_sigma)
        .map_err(|e| CliError::Config(format!("kp-sigma: {e}")))?;

    // detection window: the ground-truth box, optionally shifted to the
    // requested IoU, inflated by kappa, clipped to the frame. The shift
    // signs are drawn even at iou = 1 to keep the stream stable across
    // settings.
    let flip_u = rng.random::<bool>();
    let flip_v = rng.random::<bool>();
    let detected = if s.iou < 1.0 {
        degrade_bbox(&ann.bbox, s.iou, flip_u, flip_v)
    } else {
        ann.bbox
    };
    let window = detected.inflate(s.kappa, k.width, k.height)?;

    // simulated keypoint prediction
    let mut kp: Vec<Vector2<f64>> = ann.keypoints2d.iter().copied().collect();
    for p in kp.iter_mut() {
        p.x += rng.sample(noise);
        p.y += rng.sample(noise);
    }
    let n_out = (s.outlier_frac * kp.len() as f64).round() as usize;
    if n_out > 0 {
        let picks = rand::seq::index::sample(&mut rng, kp.len(), n_out.min(kp.len()));
        for i in picks {
            kp[i] = Vector2::new(
                rng.random_range(window.u_min..window.u_max),
                rng.random_range(window.v_min..window.v_max),
            );
        }
    }

    // the detector only sees the window
    let p3 = primitive_corners_3d(spec);
    let corrs: Vec<Correspondence> = p3
        .iter()
        .zip(kp.iter())
        .filter(|(_, p2)| window.contains(p2.x, p2.y))
        .map(|(p3, p2)| Correspondence { p3: *p3, p2: *p2 })
        .collect();

    let ransac_seed = rng.random::<u64>();
    eprintln!("DBG s{}: corrs={} window={:?}", ann.sample_id, corrs.len(), window);
    for (i, p2) in kp.iter().enumerate() {
        if !window.contains(p2.x, p2.y) {
            eprintln!("DBG s{}:   kp{} at ({:.2}, {:.2}) outside", ann.sample_id, i, p2.x, p2.y);
        }
    }
    let pnp = solve_rotation(&corrs, k, s.ransac_iters, s.inlier_threshold, ransac_seed)?;
    let n_inliers = pnp.inliers.iter().filter(|&&b| b).count();

    // translation observations
    let mut obs: Vec<TranslationObservation> = Vec::with_capacity(4);
    if s.centers_from_images {
        obs = image_observations(data_dir, ann.sample_id, s, &window, spec, k, &pnp, &mut rng)?;
    } else {
        // center = the noisy 21st keypoint; tips = ground-truth tip-face
        // centers under the same noise model
        let center = kp[primpose_core::CENTER_KEYPOINT];
        if window.contains(center.x, center.y) {
            obs.push(TranslationObservation::Center { pixel: center });
        }
        for axis in 0..3 {
            let anchor = spec.tip_face_center(axis);
            let mut p = k.project(&ann.pose.transform_point(&anchor))?;
            p.x += rng.sample(noise);
            p.y += rng.sample(noise);
            if window.contains(p.x, p.y) {
                obs.push(TranslationObservation::AxisTip { axis, pixel: p });
            }
        }
    }

    // gate the observations against the solved pose: the center keypoint
    // can itself be replaced by an outlier and image detections can land
    // on occluders, and the refinement has no robustness of its own
    let gate = s.inlier_threshold.max(3.0 * s.kp_sigma);
    obs.retain(|o| {
        let (anchor, pixel) = match o {
            TranslationObservation::Center { pixel } => (nalgebra::Vector3::zeros(), *pixel),
            TranslationObservation::AxisTip { axis, pixel } => {
                (spec.tip_face_center(*axis), *pixel)
            }
        };
        match k.project(&pnp.pose.transform_point(&anchor)) {
            Ok(p) => (p - pixel).norm() <= gate,
            Err(_) => false,
        }
    });

    // back-project the observed center at the PnP depth for the initial
    // translation, then refine; any failure falls back to the PnP result
    let t_init = match obs.first() {
        Some(TranslationObservation::Center { pixel }) => k
            .backproject_translation(pixel.x, pixel.y, pnp.pose.translation.z)
            .unwrap_or(pnp.pose.translation),
        _ => pnp.pose.translation,
    };
    let (translation, translation_refined) = if obs.len() >= 2 {
        match refine_translation_fixed_rotation(&pnp.pose.rotation, &obs, spec, k, &t_init) {
            Ok(t) => (t, true),
            Err(_) => (pnp.pose.translation, false),
        }
    } else {
        (pnp.pose.translation, false)
    };

    Ok(EstimateRecord {
        sample_id: ann.sample_id,
        pose: Pose::new(pnp.pose.rotation, translation),
        n_inliers,
        translation_refined,
    })
}

/// Center and tip observations measured from the stored primitive image.
///
/// The raw detections are biased anchors: the foreground centroid is not
/// the projected origin for a generic pose (the one-sided arms pull it),
/// and the farthest arm pixel is a tip face corner, not the face center.
/// The rotation and depth are already solved, so the same detectors run
/// on a rendered prediction of the scene and each measurement is
/// corrected by its predicted bias:
///
///   corrected = detected - predicted_detection + predicted_anchor_pixel
///
/// A shared lateral prediction error shifts detected and predicted
/// detections alike, so it cancels to first order. Tips are used only
/// when both images detect them.
fn image_observations(
    data_dir: &Path,
    sample_id: usize,
    s: &Settings,
    window: &BoundingBox,
    spec: &PrimitiveSpec,
    k: &CameraIntrinsics,
    pnp: &PnPResult,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<TranslationObservation>, CliError> {
    let path = data_dir.join(format!("samples/{sample_id:06}_prim.png"));
    let mut img = ImageBuffer::load_png(&path)?;
    let occluder_seed = rng.random::<u64>();
    if s.occluders > 0 {
        img = occlude_image(&img, s.occluders, s.occluder_size, occluder_seed);
    }
    let img = mask_window(&img, window);
    let center = match estimate_center_image(&img, PRIM_BACKGROUND) {
        Ok(c) => c,
        // nothing visible in the window: no observations, the caller
        // falls back to the PnP translation
        Err(_) => return Ok(Vec::new()),
    };

    // predicted scene at the solved rotation and depth, quantized to the
    // stored image's 8-bit levels so both detector inputs share one noise
    // floor. Anchoring the predicted origin on the real centroid would
    // displace the prediction by the centroid bias and the window would
    // clip the two objects differently, so a first full-frame pass
    // measures that bias and the prediction is re-anchored to put its
    // centroid on the real one.
    let z = pnp.pose.translation.z;
    let Some(first) = predicted_image(spec, &pnp.pose.rotation, center, z, k) else {
        return Ok(Vec::new());
    };
    let Ok(c0) = estimate_center_image(&first.1, PRIM_BACKGROUND) else {
        return Ok(Vec::new());
    };
    let Ok(p0) = k.project(&first.0.translation) else {
        return Ok(Vec::new());
    };
    let anchor = (center.0 - (c0.0 - p0.x), center.1 - (c0.1 - p0.y));
    let Some((pred_pose, pred_full)) = predicted_image(spec, &pnp.pose.rotation, anchor, z, k)
    else {
        return Ok(Vec::new());
    };
    let pred_img = mask_window(&pred_full, window);
    let pred_center = match estimate_center_image(&pred_img, PRIM_BACKGROUND) {
        Ok(c) => c,
        Err(_) => return Ok(Vec::new()),
    };
    let origin_px = match k.project(&pred_pose.translation) {
        Ok(p) => p,
        Err(_) => return Ok(Vec::new()),
    };

    let mut obs = Vec::with_capacity(4);
    obs.push(TranslationObservation::Center {
        pixel: Vector2::new(center.0 - pred_center.0, center.1 - pred_center.1) + origin_px,
    });
    let tips = detect_axis_tips(&img, center, spec);
    let pred_tips = detect_axis_tips(&pred_img, pred_center, spec);
    for axis in 0..3 {
        let (Some(t), Some(tp)) = (tips[axis], pred_tips[axis]) else {
            continue;
        };
        let Ok(anchor_px) = k.project(&pred_pose.transform_point(&spec.tip_face_center(axis)))
        else {
            continue;
        };
        obs.push(TranslationObservation::AxisTip {
            axis,
            pixel: Vector2::new(t.0 - tp.0, t.1 - tp.1) + anchor_px,
        });
    }
    Ok(obs)
}

/// Quantized full-frame render at the given rotation, depth, and center
/// pixel, with the pose it was rendered at. None when the anchor does not
/// back-project or the render fails.
fn predicted_image(
    spec: &PrimitiveSpec,
    rotation: &nalgebra::UnitQuaternion<f64>,
    center_px: (f64, f64),
    z: f64,
    k: &CameraIntrinsics,
) -> Option<(Pose, ImageBuffer)> {
    let t = k.backproject_translation(center_px.0, center_px.1, z).ok()?;
    let pose = Pose::new(*rotation, t);
    let rendered = render_primitive(spec, &pose, k).ok()?;
    Some((pose, quantize_u8(&rendered.color)))
}

/// The detector only sees pixels whose centers lie in the window; the rest
/// become background.
fn mask_window(img: &ImageBuffer, window: &BoundingBox) -> ImageBuffer {
    let mut out = ImageBuffer::new(img.width(), img.height());
    for v in 0..img.height() {
        for u in 0..img.width() {
            if window.contains(u as f64, v as f64) {
                out.set(u, v, img.get(u, v));
            } else {
                out.set(u, v, PRIM_BACKGROUND);
            }
        }
    }
    out
}

/// Rounds every channel to the nearest 8-bit PNG level.
fn quantize_u8(img: &ImageBuffer) -> ImageBuffer {
    let mut out = ImageBuffer::new(img.width(), img.height());
    for v in 0..img.height() {
        for u in 0..img.width() {
            let px = img.get(u, v);
            out.set(
                u,
                v,
                [
                    (px[0] * 255.0).round() / 255.0,
                    (px[1] * 255.0).round() / 255.0,
                    (px[2] * 255.0).round() / 255.0,
                ],
            );
        }
    }
    out
}
