//! `render`: one mesh or primitive render to PNG.

use std::path::{Path, PathBuf};

use nalgebra::Vector3;

use primpose_core::{primitive_mesh, render_mesh, MeshModel, PrimitiveSpec, Shading};

use crate::config::{self, log_resolved};
use crate::CliError;

#[derive(clap::Args)]
pub struct RenderArgs {
    /// Pose as w,x,y,z,tx,ty,tz (unit quaternion, meters)
    #[arg(long)]
    pose: String,
    /// Output color PNG path
    #[arg(long)]
    out: PathBuf,
    /// Model file; omitted renders the colored primitive
    #[arg(long)]
    model: Option<PathBuf>,
    /// Primitive scale when no model is given
    #[arg(long)]
    primitive_diameter: Option<f64>,
    /// flat or lambertian
    #[arg(long)]
    shading: Option<String>,
    /// Lambertian light direction x,y,z
    #[arg(long)]
    light: Option<String>,
    /// Also write the coverage mask PNG here
    #[arg(long)]
    mask_out: Option<PathBuf>,
    /// Also write the depth PNG (16-bit millimeters) here
    #[arg(long)]
    depth_out: Option<PathBuf>,
    /// Flat key = value config file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    camera: super::CameraArgs,
}

fn parse_light(text: &str) -> Result<Vector3<f64>, CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(CliError::Config(format!(
            "light needs 3 comma-separated numbers, got {}",
            parts.len()
        )));
    }
    let mut v = [0.0f64; 3];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part
            .parse()
            .map_err(|_| CliError::Config(format!("light component `{part}` is not a number")))?;
    }
    Ok(Vector3::new(v[0], v[1], v[2]))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn run(args: RenderArgs) -> Result<(), CliError> {
    let mut map = config::load(args.config.as_deref())?;
    log_resolved("pose", &args.pose);
    log_resolved("out", &args.out.display());
    let pose = super::parse_pose(&args.pose)?;

    let mesh = match &args.model {
        Some(path) => {
            log_resolved("model", &path.display());
            MeshModel::from_text_file(path)?
        }
        None => {
            let diameter =
                map.resolve("primitive-diameter", args.primitive_diameter, 0.15)?;
            primitive_mesh(&PrimitiveSpec::from_diameter(diameter)?)
        }
    };

    let shading_name = map.resolve("shading", args.shading, "flat".to_string())?;
    let shading = match shading_name.as_str() {
        "flat" => Shading::Flat,
        "lambertian" => {
            let light = parse_light(&map.resolve(
                "light",
                args.light,
                "0.3,-0.4,0.85".to_string(),
            )?)?;
            Shading::Lambertian { light_dir: light }
        }
        other => {
            return Err(CliError::Config(format!(
                "shading must be flat or lambertian, got `{other}`"
            )))
        }
    };
    let k = args.camera.resolve(&mut map)?;
    map.finish()?;

    let render = render_mesh(&mesh, &pose, &k, &shading)?;
    write_bytes(&args.out, &render.color.encode_png())?;
    println!("wrote {} ({}x{})", args.out.display(), k.width, k.height);
    if let Some(path) = &args.mask_out {
        write_bytes(path, &render.mask.encode_png())?;
        println!("wrote {}", path.display());
    }
    if let Some(path) = &args.depth_out {
        write_bytes(path, &render.depth.encode_png_mm())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
