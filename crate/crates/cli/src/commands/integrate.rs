//! integrate: action JSONL in, reconstructed trajectory document out.

use std::path::PathBuf;

use nalgebra::Vector3;

use relicforge_core::action::{integrate_poses, parse_actions_jsonl};
use relicforge_core::trajectory::{euler_compose, to_annotation_json, CameraPose, EulerAngles};

use crate::error::{emit, read_file, CliError};

#[derive(clap::Args)]
pub struct Args {
    /// Actions document (JSON lines with a header record).
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Trajectory document to write; stdout when omitted.
    #[arg(long = "out", value_name = "PATH")]
    out: Option<PathBuf>,
    /// World units per unit of normalized translation; defaults to the
    /// gamma recorded in the document header.
    #[arg(long)]
    gamma: Option<f64>,
    /// Starting pose as x,y,z,yaw,pitch,roll with angles in degrees;
    /// identity at t = 0 when omitted.
    #[arg(long)]
    initial: Option<String>,
}

fn parse_initial(raw: &str) -> Result<CameraPose, CliError> {
    let parts = raw
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Validation(format!("--initial: {e}")))?;
    if parts.len() != 6 {
        return Err(CliError::Validation(format!(
            "--initial needs 6 comma-separated numbers, got {}",
            parts.len()
        )));
    }
    if parts.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Validation("--initial entries must be finite".into()));
    }
    let rotation = euler_compose(&EulerAngles::new(
        parts[3].to_radians(),
        parts[4].to_radians(),
        parts[5].to_radians(),
    ));
    Ok(CameraPose::new(Vector3::new(parts[0], parts[1], parts[2]), rotation, 0.0))
}

pub fn run(args: Args) -> Result<(), CliError> {
    let doc = parse_actions_jsonl(&read_file(&args.input)?)?;
    let gamma = args.gamma.unwrap_or(doc.gamma);
    let initial = match &args.initial {
        Some(raw) => parse_initial(raw)?,
        None => CameraPose::identity_at(0.0),
    };
    let traj = integrate_poses(&doc.seq, gamma, &initial)?;
    emit(args.out.as_deref(), &to_annotation_json(&traj))
}
