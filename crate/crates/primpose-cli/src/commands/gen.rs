//! `gen`: synthetic dataset generation.

use std::path::PathBuf;

use sha2::{Digest, Sha256};

use primpose_core::{generate_dataset, GenConfig, MeshModel, PrimitiveSpec};

use crate::config::{self, log_resolved};
use crate::CliError;

#[derive(clap::Args)]
pub struct GenArgs {
    /// Model file: text mesh with `v x y z` and `f i j k` lines
    #[arg(long)]
    model: PathBuf,
    /// Output dataset directory
    #[arg(long)]
    out: PathBuf,
    /// Flat key = value config file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of samples
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Closest object depth, m
    #[arg(long)]
    t_z_min: Option<f64>,
    /// Farthest object depth, m
    #[arg(long)]
    t_z_max: Option<f64>,
    /// Minimum projected clearance from the frame edge, px
    #[arg(long)]
    margin_px: Option<f64>,
    /// Substitute a random background behind the object
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    background: Option<bool>,
    /// Color jitter amplitude in [0, 1]
    #[arg(long)]
    color_jitter: Option<f64>,
    /// Occluder rectangles per training image
    #[arg(long)]
    occluder_count: Option<usize>,
    /// Smallest occluder side, fraction of frame
    #[arg(long)]
    occluder_size_min: Option<f64>,
    /// Largest occluder side, fraction of frame
    #[arg(long)]
    occluder_size_max: Option<f64>,
    /// Additive Gaussian pixel noise sigma
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Bounding-box inflation factor for downstream cropping
    #[arg(long)]
    kappa: Option<f64>,
    /// Primitive scale; defaults to the model's diameter
    #[arg(long)]
    primitive_diameter: Option<f64>,
    #[command(flatten)]
    camera: CameraFlags,
    /// Print the full manifest as JSON
    #[arg(long)]
    json: bool,
}

type CameraFlags = super::CameraArgs;

pub fn run(args: GenArgs) -> Result<(), CliError> {
    let mut map = config::load(args.config.as_deref())?;
    log_resolved("model", &args.model.display());
    log_resolved("out", &args.out.display());

    let model = MeshModel::from_text_file(&args.model)?;
    let defaults = GenConfig::default();
    let gen = GenConfig {
        n_samples: map.resolve("n", args.n, defaults.n_samples)?,
        seed: map.resolve("seed", args.seed, defaults.seed)?,
        t_z_min: map.resolve("t-z-min", args.t_z_min, defaults.t_z_min)?,
        t_z_max: map.resolve("t-z-max", args.t_z_max, defaults.t_z_max)?,
        margin_px: map.resolve("margin-px", args.margin_px, defaults.margin_px)?,
        background: map.resolve("background", args.background, defaults.background)?,
        color_jitter: map.resolve("color-jitter", args.color_jitter, defaults.color_jitter)?,
        occluder_count: map.resolve(
            "occluder-count",
            args.occluder_count,
            defaults.occluder_count,
        )?,
        occluder_size: (
            map.resolve(
                "occluder-size-min",
                args.occluder_size_min,
                defaults.occluder_size.0,
            )?,
            map.resolve(
                "occluder-size-max",
                args.occluder_size_max,
                defaults.occluder_size.1,
            )?,
        ),
        noise_sigma: map.resolve("noise-sigma", args.noise_sigma, defaults.noise_sigma)?,
        kappa: map.resolve("kappa", args.kappa, defaults.kappa)?,
    };
    let diameter = map.resolve(
        "primitive-diameter",
        args.primitive_diameter,
        model.diameter,
    )?;
    let k = args.camera.resolve(&mut map)?;
    map.finish()?;

    let spec = PrimitiveSpec::from_diameter(diameter)?;
    let manifest = generate_dataset(&model, &spec, &k, &gen, &args.out)?;

    if args.json {
        let files: Vec<String> = manifest
            .files
            .iter()
            .map(|f| format!("{{\"path\":\"{}\",\"sha256\":\"{}\"}}", f.path, f.sha256))
            .collect();
        println!(
            "{{\"n_samples\":{},\"files\":[{}]}}",
            manifest.n_samples,
            files.join(",")
        );
    } else {
        // one digest over all per-file digests: a compact determinism witness
        let mut hasher = Sha256::new();
        for f in &manifest.files {
            hasher.update(f.path.as_bytes());
            hasher.update(b":");
            hasher.update(f.sha256.as_bytes());
            hasher.update(b"\n");
        }
        let combined: String = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
        println!(
            "generated {} samples, {} files, manifest sha256 {combined}",
            manifest.n_samples,
            manifest.files.len()
        );
    }
    Ok(())
}
