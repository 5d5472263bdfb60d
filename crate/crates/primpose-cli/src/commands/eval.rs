//! `eval`: score estimated poses against dataset ground truth.
//!
//! Joins estimates to annotations by sample id (the sets must match
//! exactly), evaluates the standard pose metrics over the mesh model, and
//! prints the report as flat `key = value` text or JSON.

use std::collections::BTreeMap;
use std::path::PathBuf;

use primpose_core::{load_annotations, MeshModel, MetricReport, Pose};

use crate::config::{self, log_resolved};
use crate::estimates::read_poses;
use crate::CliError;

#[derive(clap::Args)]
pub struct EvalArgs {
    /// Dataset directory with ground truth
    #[arg(long)]
    data: PathBuf,
    /// Estimates JSON produced by `estimate`
    #[arg(long)]
    estimates: PathBuf,
    /// Mesh the distance metrics are computed over (text format)
    #[arg(long)]
    model: PathBuf,
    /// Also write the JSON report to this path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accepted for uniformity; eval has no tunables, so any key is unknown
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the report as JSON instead of text
    #[arg(long)]
    json: bool,
}

pub fn run(args: EvalArgs) -> Result<(), CliError> {
    let map = config::load(args.config.as_deref())?;
    log_resolved("data", &args.data.display());
    log_resolved("estimates", &args.estimates.display());
    log_resolved("model", &args.model.display());
    map.finish()?;

    let model = MeshModel::from_text_file(&args.model)?;
    let (meta, annotations) = load_annotations(&args.data)?;
    let estimates = read_poses(&args.estimates)?;

    let gt: BTreeMap<usize, Pose> = annotations.iter().map(|a| (a.sample_id, a.pose)).collect();
    let est: BTreeMap<usize, Pose> = estimates.into_iter().collect();
    check_ids(&gt, &est)?;

    let pairs: Vec<(Pose, Pose)> = gt.iter().map(|(id, gt_pose)| (*gt_pose, est[id])).collect();
    let report = MetricReport::evaluate(&model, &meta.intrinsics, &pairs)?;

    if let Some(out) = &args.out {
        std::fs::write(out, report.to_json())
            .map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    }
    if args.json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.to_text());
    }
    Ok(())
}

fn check_ids(gt: &BTreeMap<usize, Pose>, est: &BTreeMap<usize, Pose>) -> Result<(), CliError> {
    let missing: Vec<usize> = gt.keys().filter(|id| !est.contains_key(id)).copied().collect();
    let extra: Vec<usize> = est.keys().filter(|id| !gt.contains_key(id)).copied().collect();
    if missing.is_empty() && extra.is_empty() {
        return Ok(());
    }
    let mut msg = String::from("estimate and ground-truth sample ids disagree");
    if !missing.is_empty() {
        msg.push_str(&format!(
            "; {} without an estimate: {}",
            missing.len(),
            id_list(&missing)
        ));
    }
    if !extra.is_empty() {
        msg.push_str(&format!(
            "; {} without ground truth: {}",
            extra.len(),
            id_list(&extra)
        ));
    }
    Err(CliError::Config(msg))
}

fn id_list(ids: &[usize]) -> String {
    let mut parts: Vec<String> = ids.iter().take(20).map(|i| i.to_string()).collect();
    if ids.len() > 20 {
        parts.push("...".into());
    }
    parts.join(", ")
}
