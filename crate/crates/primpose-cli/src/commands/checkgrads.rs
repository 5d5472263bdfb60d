//! `check-grads`: analytic loss gradients against finite differences.
//!
//! Prints one pass/fail line per kernel; any failure exits 1 naming the
//! first failing kernel. `--inject-bug <kernel>` deliberately corrupts one
//! analytic gradient so the harness can prove it catches a wrong one.

use primpose_core::jsonio::fmt_f64;
use primpose_core::{check_all_faulted, KernelReport, GRAD_TOLERANCE, KERNEL_NAMES};

use crate::config::{self, log_resolved};
use crate::CliError;

#[derive(clap::Args)]
pub struct CheckGradsArgs {
    /// Flat key = value config file; flags override it
    #[arg(long)]
    config: Option<std::path::PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Base frame width for the image-domain kernels
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    /// Random configurations checked per kernel
    #[arg(long)]
    seeds: Option<u64>,
    /// Corrupt this kernel's analytic gradient; the run must then fail
    #[arg(long, value_name = "KERNEL")]
    inject_bug: Option<String>,
    /// Print the reports as a JSON array instead of text lines
    #[arg(long)]
    json: bool,
}

pub fn run(args: CheckGradsArgs) -> Result<(), CliError> {
    let mut map = config::load(args.config.as_deref())?;
    let seed = map.resolve("seed", args.seed, 2026u64)?;
    let width = map.resolve("width", args.width, 32usize)?;
    let height = map.resolve("height", args.height, 32usize)?;
    let seeds = map.resolve("seeds", args.seeds, 20u64)?;
    map.finish()?;
    if width == 0 || height == 0 || seeds == 0 {
        return Err(CliError::Config(
            "width, height and seeds must all be at least 1".into(),
        ));
    }

    let fault = match &args.inject_bug {
        Some(name) => {
            if !KERNEL_NAMES.contains(&name.as_str()) {
                return Err(CliError::Config(format!(
                    "unknown kernel `{name}`; kernels: {}",
                    KERNEL_NAMES.join(", ")
                )));
            }
            log_resolved("inject-bug", name);
            Some(name.as_str())
        }
        None => None,
    };

    let reports = check_all_faulted(seed, width, height, seeds, fault);
    if args.json {
        println!("{}", reports_json(&reports));
    } else {
        for r in &reports {
            let verdict = if r.passes() { "PASS" } else { "FAIL" };
            println!(
                "{:<12} max_rel_err = {:.3e} (tolerance {GRAD_TOLERANCE:.0e}, {} checked, {} skipped) {verdict}",
                r.kernel, r.max_rel_err, r.checked, r.skipped
            );
        }
    }

    if let Some(bad) = reports.iter().find(|r| !r.passes()) {
        return Err(CliError::Verification(format!(
            "gradient check failed for kernel `{}`: max_rel_err {:.3e} exceeds {GRAD_TOLERANCE:.0e}",
            bad.kernel, bad.max_rel_err
        )));
    }
    Ok(())
}

fn reports_json(reports: &[KernelReport]) -> String {
    let items: Vec<String> = reports
        .iter()
        .map(|r| {
            format!(
                "{{\"kernel\":\"{}\",\"max_rel_err\":{},\"worst_index\":{},\"checked\":{},\"skipped\":{},\"pass\":{}}}",
                r.kernel,
                fmt_f64(r.max_rel_err),
                r.worst_index,
                r.checked,
                r.skipped,
                r.passes()
            )
        })
        .collect();
    format!("[{}]", items.join(","))
}
