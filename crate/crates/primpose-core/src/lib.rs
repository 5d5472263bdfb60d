//! Core library for a rotational-primitive 6D pose pipeline.
//!
//! The pipeline models an object's orientation with a colored axis primitive
//! (a cube with three axis arms), renders it with a deterministic software
//! rasterizer, recovers rotation from the primitive's 21 keypoints via
//! PnP/RANSAC and translation from the primitive center via back-projection,
//! and evaluates poses with ADD(-S), 2D-projection, and MAE metrics.
//! Synthetic datasets with domain randomization tie the pieces together.

pub mod buffer;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod gradcheck;
pub mod jsonio;
pub mod loss;
pub mod mesh;
pub mod metrics;
pub mod primitive;
pub mod render;
pub mod solver;

pub use buffer::{DepthBuffer, ImageBuffer, MaskBuffer};
pub use dataset::{
    augment_domain_randomization, generate_dataset, load_annotations, load_dataset, sample_pose,
    DatasetManifest, DatasetMeta, DatasetReader, DatasetSample, FileChecksum, GenConfig,
    SampleAnnotation, DATASET_FORMAT_VERSION,
};
pub use error::{Error, Result};
pub use geometry::{
    quat_to_matrix, relocalize_object, rotation_geodesic_deg, uniform_unit_quaternion,
    BoundingBox, CameraIntrinsics, Pose,
};
pub use gradcheck::{check_all, check_all_faulted, KernelReport, GRAD_TOLERANCE, KERNEL_NAMES};
pub use loss::{
    kl_divergence, loss_adversarial, loss_keypoint, loss_object_topk, loss_primitive,
    loss_vae_total, AdversarialLoss, KlLoss, LatentStats, LossValue, DEFAULT_ALPHA,
    DEFAULT_TOP_K,
};
pub use mesh::{MeshModel, SymmetryClass};
pub use metrics::{
    add_metric, adds_metric, model_diameter, pose_correct_add, pose_mae, projection2d_error,
    MetricReport,
};
pub use primitive::{
    primitive_corners_3d, primitive_mesh, project_keypoints, KeypointSet21, Keypoints2,
    Keypoints3, PrimitiveSpec, CENTER_KEYPOINT, KEYPOINT_COUNT,
};
pub use render::{
    composite_occlusion, occlude_image, render_mesh, render_primitive, RenderOutput, Shading,
    AMBIENT_LIGHT, MIN_RENDER_Z,
};
pub use solver::{
    detect_axis_tips, estimate_center, estimate_center_image, keypoint_correspondences,
    refine_pnp_lm, refine_translation_fixed_rotation, solve_pnp_dlt, solve_pnp_ransac,
    Correspondence, PnPResult, TranslationObservation, CHANNEL_DOMINANCE, FOREGROUND_EPS,
    PNP_MIN_CORRESPONDENCES,
};
