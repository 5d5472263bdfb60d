//! One module per subcommand, plus flag groups they share.

pub mod bench;
pub mod checkgrads;
pub mod estimate;
pub mod eval;
pub mod gen;
pub mod render;

use primpose_core::CameraIntrinsics;

use crate::config::ConfigMap;
use crate::CliError;

/// Pinhole intrinsics flags shared by `gen` and `render`. The principal
/// point defaults to the frame center.
#[derive(clap::Args)]
pub struct CameraArgs {
    /// Horizontal focal length, px
    #[arg(long)]
    f_u: Option<f64>,
    /// Vertical focal length, px
    #[arg(long)]
    f_v: Option<f64>,
    /// Principal point u, px
    #[arg(long)]
    u_p: Option<f64>,
    /// Principal point v, px
    #[arg(long)]
    v_p: Option<f64>,
    /// Frame width, px
    #[arg(long)]
    width: Option<usize>,
    /// Frame height, px
    #[arg(long)]
    height: Option<usize>,
}

impl CameraArgs {
    pub fn resolve(self, map: &mut ConfigMap) -> Result<CameraIntrinsics, CliError> {
        let width = map.resolve("width", self.width, 640)?;
        let height = map.resolve("height", self.height, 480)?;
        let f_u = map.resolve("f-u", self.f_u, 610.0)?;
        let f_v = map.resolve("f-v", self.f_v, 590.0)?;
        let u_p = map.resolve("u-p", self.u_p, 0.5 * (width as f64 - 1.0))?;
        let v_p = map.resolve("v-p", self.v_p, 0.5 * (height as f64 - 1.0))?;
        Ok(CameraIntrinsics::new(f_u, f_v, u_p, v_p, width, height)?)
    }
}

/// Parses `w,x,y,z,tx,ty,tz` into a pose (quaternion must be near unit).
pub fn parse_pose(text: &str) -> Result<primpose_core::Pose, CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 7 {
        return Err(CliError::Config(format!(
            "pose needs 7 comma-separated numbers w,x,y,z,tx,ty,tz, got {}",
            parts.len()
        )));
    }
    let mut vals = [0.0f64; 7];
    for (slot, part) in vals.iter_mut().zip(&parts) {
        *slot = part
            .parse()
            .map_err(|_| CliError::Config(format!("pose component `{part}` is not a number")))?;
    }
    let q = [vals[0], vals[1], vals[2], vals[3]];
    let t = [vals[4], vals[5], vals[6]];
    Ok(primpose_core::Pose::from_wxyz(q, t)?)
}
