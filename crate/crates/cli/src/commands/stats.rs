//! stats: turn trajectories or a manifest into plot-ready histogram tables.

use std::fmt::Write;
use std::path::PathBuf;

use rayon::prelude::*;

use relicforge_core::action::{extract_actions, ActionSlot, StaticThresholds, ACTION_DIM};
use relicforge_core::curation::{action_histogram, filter_scores, write_manifest, ClipMetadata};
use relicforge_core::curation::parse_manifest;
use relicforge_core::trajectory::parse_annotation;

use crate::error::{emit, read_file, write_file, CliError};

#[derive(clap::Args)]
#[command(group(
    clap::ArgGroup::new("source").required(true).args(["manifest", "trajectories"])
))]
pub struct Args {
    /// Clip manifest (JSON lines of metadata records).
    #[arg(long, value_name = "FILE")]
    manifest: Option<PathBuf>,
    /// Trajectory documents to profile directly instead.
    #[arg(long = "trajectories", value_name = "FILE", num_args = 1..)]
    trajectories: Vec<PathBuf>,
    /// Which histogram to emit.
    #[arg(long, value_enum, default_value_t = Table::Action)]
    table: Table,
    /// Bucket width for the duration table, seconds.
    #[arg(long, default_value_t = 60.0)]
    bin_seconds: f64,
    /// Also save the per-clip metadata computed from --trajectories.
    #[arg(long, value_name = "PATH", requires = "trajectories")]
    write_manifest: Option<PathBuf>,
    /// CSV to write; stdout when omitted.
    #[arg(long = "out", value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Table {
    /// Frames per action slot, pooled over all clips.
    Action,
    /// Clip counts per duration bucket.
    Duration,
}

fn metadata_from_trajectory(path: &PathBuf, text: &str) -> Result<ClipMetadata, CliError> {
    let traj =
        parse_annotation(text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let seq = extract_actions(&traj, &StaticThresholds::default())
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let scores = filter_scores(&traj);
    let clip_id = if traj.clip_id.is_empty() {
        path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "clip".into())
    } else {
        traj.clip_id.clone()
    };
    Ok(ClipMetadata {
        clip_id,
        duration: traj.len() as f64 / traj.frame_rate,
        action_histogram: action_histogram(&seq),
        jitter_score: scores.jitter,
        velocity_cv: scores.velocity_cv,
        caption_segments: Vec::new(),
    })
}

fn action_table(clips: &[ClipMetadata]) -> String {
    let mut totals = [0u64; ACTION_DIM];
    for clip in clips {
        for (t, &c) in totals.iter_mut().zip(&clip.action_histogram) {
            *t += c;
        }
    }
    let mut csv = String::from("bin,count\n");
    for slot in ActionSlot::ALL {
        writeln!(csv, "{},{}", slot.name(), totals[slot as usize]).expect("string write");
    }
    csv
}

fn duration_table(clips: &[ClipMetadata], bin_seconds: f64) -> Result<String, CliError> {
    if !(bin_seconds.is_finite() && bin_seconds > 0.0) {
        return Err(CliError::Validation(format!("--bin-seconds must be positive, got {bin_seconds}")));
    }
    let mut counts = Vec::new();
    for clip in clips {
        if !(clip.duration.is_finite() && clip.duration >= 0.0) {
            return Err(CliError::Validation(format!(
                "clip '{}' has duration {}",
                clip.clip_id, clip.duration
            )));
        }
        let bin = (clip.duration / bin_seconds).floor() as usize;
        if counts.len() <= bin {
            counts.resize(bin + 1, 0u64);
        }
        counts[bin] += 1;
    }
    let mut csv = String::from("bin,count\n");
    for (k, count) in counts.iter().enumerate() {
        writeln!(csv, "{},{count}", k as f64 * bin_seconds).expect("string write");
    }
    Ok(csv)
}

pub fn run(args: Args) -> Result<(), CliError> {
    let mut clips = if let Some(manifest) = &args.manifest {
        parse_manifest(&read_file(manifest)?)?
    } else {
        let texts = args
            .trajectories
            .iter()
            .map(|p| read_file(p).map(|t| (p.clone(), t)))
            .collect::<Result<Vec<_>, _>>()?;
        texts
            .par_iter()
            .map(|(path, text)| metadata_from_trajectory(path, text))
            .collect::<Result<Vec<_>, _>>()?
    };
    if clips.is_empty() {
        return Err(CliError::Validation("no clips to aggregate".into()));
    }
    clips.sort_by(|a, b| a.clip_id.cmp(&b.clip_id));

    if let Some(path) = &args.write_manifest {
        write_file(path, &write_manifest(&clips))?;
    }
    let csv = match args.table {
        Table::Action => action_table(&clips),
        Table::Duration => duration_table(&clips, args.bin_seconds)?,
    };
    emit(args.out.as_deref(), &csv)
}
