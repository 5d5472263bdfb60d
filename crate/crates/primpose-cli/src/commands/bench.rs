//! `bench`: wall-clock timing of the pipeline hot paths.
//!
//! Three stages: PnP/RANSAC with LM refinement on 21 noisy keypoints,
//! a full-frame primitive render, and the whole per-sample oracle estimate
//! (keypoints, rotation, translation refinement). Reports median/min/max
//! milliseconds; `--assert-budgets` turns budget breaches into exit 1.

use std::time::Instant;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use primpose_core::jsonio::fmt_f64;
use primpose_core::{
    keypoint_correspondences, refine_translation_fixed_rotation, render_primitive,
    solve_pnp_ransac, uniform_unit_quaternion, CameraIntrinsics, Correspondence, Pose,
    PrimitiveSpec, TranslationObservation, CENTER_KEYPOINT,
};

use crate::config::{self, log_resolved};
use crate::CliError;

/// Median PnP+refine per sample must stay under this.
const PNP_BUDGET_MS: f64 = 10.0;
/// Median full-frame primitive render must stay under this.
const RENDER_BUDGET_MS: f64 = 50.0;

const KEYPOINT_SIGMA_PX: f64 = 1.0;
const RANSAC_ITERS: usize = 100;
const INLIER_THRESHOLD_PX: f64 = 3.0;

#[derive(clap::Args)]
pub struct BenchArgs {
    /// Flat key = value config file; flags override it
    #[arg(long)]
    config: Option<std::path::PathBuf>,
    /// Timed repetitions per stage
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Exit 1 if a stage with a budget exceeds it
    #[arg(long)]
    assert_budgets: bool,
    /// Print the statistics as JSON
    #[arg(long)]
    json: bool,
}

struct StageStats {
    stage: &'static str,
    median_ms: f64,
    min_ms: f64,
    max_ms: f64,
    n: usize,
    budget_ms: Option<f64>,
}

impl StageStats {
    fn from_samples(stage: &'static str, mut ms: Vec<f64>, budget_ms: Option<f64>) -> Self {
        ms.sort_by(|a, b| a.total_cmp(b));
        let n = ms.len();
        let median_ms = if n % 2 == 1 {
            ms[n / 2]
        } else {
            0.5 * (ms[n / 2 - 1] + ms[n / 2])
        };
        StageStats {
            stage,
            median_ms,
            min_ms: ms[0],
            max_ms: ms[n - 1],
            n,
            budget_ms,
        }
    }

    fn within_budget(&self) -> bool {
        self.budget_ms.is_none_or(|b| self.median_ms < b)
    }

    fn text_line(&self) -> String {
        let budget = match self.budget_ms {
            Some(b) => format!(
                ", budget {b} ms {}",
                if self.within_budget() { "OK" } else { "EXCEEDED" }
            ),
            None => String::new(),
        };
        format!(
            "{}: median {:.3} ms (min {:.3}, max {:.3}, n = {}{budget})",
            self.stage, self.median_ms, self.min_ms, self.max_ms, self.n
        )
    }

    fn json_item(&self) -> String {
        let budget = match self.budget_ms {
            Some(b) => fmt_f64(b),
            None => "null".into(),
        };
        format!(
            "{{\"stage\":\"{}\",\"median_ms\":{},\"min_ms\":{},\"max_ms\":{},\"n\":{},\"budget_ms\":{budget},\"within_budget\":{}}}",
            self.stage,
            fmt_f64(self.median_ms),
            fmt_f64(self.min_ms),
            fmt_f64(self.max_ms),
            self.n,
            self.within_budget()
        )
    }
}

pub fn run(args: BenchArgs) -> Result<(), CliError> {
    let mut map = config::load(args.config.as_deref())?;
    let iters = map.resolve("iters", args.iters, 20usize)?;
    let seed = map.resolve("seed", args.seed, 0u64)?;
    map.finish()?;
    if iters == 0 {
        return Err(CliError::Config("iters must be at least 1".into()));
    }
    log_resolved("assert-budgets", &args.assert_budgets);

    let k = CameraIntrinsics::new(610.0, 590.0, 319.5, 239.5, 640, 480)?;
    let spec = PrimitiveSpec::from_diameter(0.15)?;

    let mut pnp_ms = Vec::with_capacity(iters);
    let mut render_ms = Vec::with_capacity(iters);
    let mut estimate_ms = Vec::with_capacity(iters);
    for i in 0..iters {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let pose = random_pose(&mut rng);
        let corrs = noisy_correspondences(&spec, &pose, &k, &mut rng)?;
        let ransac_seed = rng.random::<u64>();

        let t0 = Instant::now();
        let pnp = solve_pnp_ransac(&corrs, &k, RANSAC_ITERS, INLIER_THRESHOLD_PX, ransac_seed)?;
        pnp_ms.push(elapsed_ms(t0));

        let t1 = Instant::now();
        let rendered = render_primitive(&spec, &pose, &k)?;
        render_ms.push(elapsed_ms(t1));
        std::hint::black_box(&rendered);

        let t2 = Instant::now();
        let est = oracle_estimate(&spec, &pose, &k, &corrs, ransac_seed)?;
        estimate_ms.push(elapsed_ms(t2));
        std::hint::black_box(&est);
        std::hint::black_box(&pnp);
    }

    let stats = [
        StageStats::from_samples("pnp_refine", pnp_ms, Some(PNP_BUDGET_MS)),
        StageStats::from_samples("render_primitive", render_ms, Some(RENDER_BUDGET_MS)),
        StageStats::from_samples("oracle_estimate", estimate_ms, None),
    ];

    if args.json {
        let items: Vec<String> = stats.iter().map(StageStats::json_item).collect();
        println!("[{}]", items.join(","));
    } else {
        for s in &stats {
            println!("{}", s.text_line());
        }
    }

    if args.assert_budgets {
        if let Some(bad) = stats.iter().find(|s| !s.within_budget()) {
            return Err(CliError::Verification(format!(
                "{} median {:.3} ms exceeds its {} ms budget",
                bad.stage,
                bad.median_ms,
                bad.budget_ms.unwrap_or(f64::NAN)
            )));
        }
    }
    Ok(())
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn random_pose(rng: &mut ChaCha8Rng) -> Pose {
    let rotation = uniform_unit_quaternion(rng);
    let t_z = rng.random_range(0.6..1.2);
    let t_x = rng.random_range(-0.05..0.05);
    let t_y = rng.random_range(-0.05..0.05);
    Pose::new(rotation, Vector3::new(t_x, t_y, t_z))
}

fn noisy_correspondences(
    spec: &PrimitiveSpec,
    pose: &Pose,
    k: &CameraIntrinsics,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Correspondence>, CliError> {
    let noise = Normal::new(0.0, KEYPOINT_SIGMA_PX).expect("constant sigma");
    let mut corrs = keypoint_correspondences(spec, pose, k)?;
    for c in corrs.iter_mut() {
        c.p2.x += rng.sample(noise);
        c.p2.y += rng.sample(noise);
    }
    Ok(corrs)
}

/// One estimate as the `estimate` command performs it: rotation from
/// RANSAC on the noisy keypoints, translation from back-projecting the
/// observed center at the solved depth and refining on center plus tips.
fn oracle_estimate(
    spec: &PrimitiveSpec,
    pose: &Pose,
    k: &CameraIntrinsics,
    corrs: &[Correspondence],
    ransac_seed: u64,
) -> Result<Pose, CliError> {
    let pnp = solve_pnp_ransac(corrs, k, RANSAC_ITERS, INLIER_THRESHOLD_PX, ransac_seed)?;
    let center = corrs[CENTER_KEYPOINT].p2;
    let mut obs = vec![TranslationObservation::Center { pixel: center }];
    for axis in 0..3 {
        let anchor = spec.tip_face_center(axis);
        let pixel = k.project(&pose.transform_point(&anchor))?;
        obs.push(TranslationObservation::AxisTip { axis, pixel });
    }
    let t_init = k
        .backproject_translation(center.x, center.y, pnp.pose.translation.z)
        .unwrap_or(pnp.pose.translation);
    let t = refine_translation_fixed_rotation(&pnp.pose.rotation, &obs, spec, k, &t_init)
        .unwrap_or(pnp.pose.translation);
    Ok(Pose::new(pnp.pose.rotation, t))
}
