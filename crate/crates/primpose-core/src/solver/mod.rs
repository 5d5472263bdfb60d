//! Pose recovery from keypoint correspondences and primitive images.
//!
//! Rotation comes from PnP on 2D-3D keypoint matches (direct linear
//! transform initialization, Levenberg-Marquardt refinement, optional
//! RANSAC loop). Translation comes separately from the primitive's
//! image-space center and axis tips with the rotation held fixed, so the
//! two estimates can be cross-checked downstream.

mod pnp;
mod translation;

pub use pnp::{
    keypoint_correspondences, refine_pnp_lm, solve_pnp_dlt, solve_pnp_ransac, Correspondence,
    PnPResult, PNP_MIN_CORRESPONDENCES,
};
pub use translation::{
    detect_axis_tips, estimate_center, estimate_center_image, refine_translation_fixed_rotation,
    TranslationObservation, CHANNEL_DOMINANCE, FOREGROUND_EPS,
};
