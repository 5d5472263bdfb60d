//! The estimates file: per-sample poses produced by `estimate`, consumed by
//! `eval`. JSON with 17-significant-digit floats so identical runs write
//! identical bytes.

use std::path::Path;

use primpose_core::jsonio::{fmt_f64, fmt_f64_slice};
use primpose_core::Pose;

use crate::CliError;

pub struct EstimateRecord {
    pub sample_id: usize,
    pub pose: Pose,
    pub n_inliers: usize,
    /// False when translation fell back to the PnP solution.
    pub translation_refined: bool,
}

pub struct EstimateRun {
    pub seed: u64,
    pub kp_sigma: f64,
    pub outlier_frac: f64,
    pub occluders: usize,
    pub iou: f64,
    pub kappa: f64,
    pub centers_from_images: bool,
    pub ransac_iters: usize,
    pub inlier_threshold: f64,
    pub records: Vec<EstimateRecord>,
}

impl EstimateRun {
    pub fn to_json(&self) -> String {
        let records: Vec<String> = self
            .records
            .iter()
            .map(|r| {
                format!(
                    "{{\"sample_id\":{},\"quat_wxyz\":{},\"t_m\":{},\"n_inliers\":{},\"translation_refined\":{}}}",
                    r.sample_id,
                    fmt_f64_slice(&r.pose.quat_wxyz()),
                    fmt_f64_slice(r.pose.translation.as_slice()),
                    r.n_inliers,
                    r.translation_refined
                )
            })
            .collect();
        format!(
            "{{\"seed\":{},\"kp_sigma\":{},\"outlier_frac\":{},\"occluders\":{},\"iou\":{},\"kappa\":{},\"centers_from_images\":{},\"ransac_iters\":{},\"inlier_threshold\":{},\"n_samples\":{},\"estimates\":[{}]}}",
            self.seed,
            fmt_f64(self.kp_sigma),
            fmt_f64(self.outlier_frac),
            self.occluders,
            fmt_f64(self.iou),
            fmt_f64(self.kappa),
            self.centers_from_images,
            self.ransac_iters,
            fmt_f64(self.inlier_threshold),
            self.records.len(),
            records.join(",")
        )
    }
}

/// Reads back just what evaluation needs: (sample_id, pose) pairs.
pub fn read_poses(path: &Path) -> Result<Vec<(usize, Pose)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let v: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Io(format!("{}: invalid JSON: {e}", path.display())))?;
    let bad = |msg: String| CliError::Io(format!("{}: {msg}", path.display()));
    let list = v
        .get("estimates")
        .and_then(|e| e.as_array())
        .ok_or_else(|| bad("missing estimates array".into()))?;
    let mut out = Vec::with_capacity(list.len());
    for (i, rec) in list.iter().enumerate() {
        let id = rec
            .get("sample_id")
            .and_then(|x| x.as_u64())
            .ok_or_else(|| bad(format!("estimate {i}: missing sample_id")))?
            as usize;
        let quat = float_array::<4>(rec.get("quat_wxyz"))
            .ok_or_else(|| bad(format!("estimate {i}: malformed quat_wxyz")))?;
        let t = float_array::<3>(rec.get("t_m"))
            .ok_or_else(|| bad(format!("estimate {i}: malformed t_m")))?;
        let pose = Pose::from_wxyz(quat, t)
            .map_err(|e| bad(format!("estimate {i}: {e}")))?;
        out.push((id, pose));
    }
    Ok(out)
}

fn float_array<const N: usize>(v: Option<&serde_json::Value>) -> Option<[f64; N]> {
    let arr = v?.as_array()?;
    if arr.len() != N {
        return None;
    }
    let mut out = [0.0; N];
    for (slot, x) in out.iter_mut().zip(arr) {
        *slot = x.as_f64()?;
    }
    Some(out)
}
