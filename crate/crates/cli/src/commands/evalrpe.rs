//! eval-rpe: compare an estimated trajectory against a reference.

use std::path::{Path, PathBuf};

use nalgebra::Vector3;

use relicforge_core::eval::{apply_alignment, rpe, umeyama_sim3};
use relicforge_core::trajectory::{parse_annotation, Trajectory};

use crate::error::{read_file, CliError};

#[derive(clap::Args)]
pub struct Args {
    /// Reference trajectory document.
    reference: PathBuf,
    /// Estimated trajectory document.
    estimate: PathBuf,
    /// Fit a similarity transform from the estimate onto the reference
    /// before measuring, removing any global gauge difference.
    #[arg(long)]
    align: bool,
}

fn load(path: &Path) -> Result<Trajectory, CliError> {
    parse_annotation(&read_file(path)?)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn run(args: Args) -> Result<(), CliError> {
    let reference = load(&args.reference)?;
    let estimate = load(&args.estimate)?;
    let (report, scale, residual) = if args.align {
        let src: Vec<Vector3<f64>> = estimate.poses.iter().map(|p| p.position).collect();
        let dst: Vec<Vector3<f64>> = reference.poses.iter().map(|p| p.position).collect();
        let alignment = umeyama_sim3(&src, &dst)?;
        let aligned = apply_alignment(&estimate, &alignment);
        (rpe(&reference, &aligned, false)?, alignment.scale, alignment.residual_rms)
    } else {
        (rpe(&reference, &estimate, false)?, 1.0, 0.0)
    };
    println!("{} {} {} {}", report.rpe_trans, report.rpe_rot_deg, scale, residual);
    Ok(())
}
