//! extract-actions: trajectory documents in, per-frame action JSONL out.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;

use relicforge_core::action::{extract_actions, write_actions_jsonl, StaticThresholds};
use relicforge_core::trajectory::parse_annotation;

use crate::error::{emit, read_file, write_file, CliError};

#[derive(clap::Args)]
pub struct Args {
    /// Trajectory annotation documents (JSON).
    #[arg(long = "in", value_name = "FILE", required = true, num_args = 1..)]
    inputs: Vec<PathBuf>,
    /// Output file for a single input, directory for several; a single
    /// input prints to stdout when this is omitted.
    #[arg(long = "out", value_name = "PATH")]
    out: Option<PathBuf>,
    /// Normalized translation magnitude below which a channel reads as still.
    #[arg(long, default_value_t = StaticThresholds::default().translation)]
    translation_threshold: f64,
    /// Per-frame rotation below which a channel reads as still, degrees.
    #[arg(long, default_value_t = 0.1)]
    rotation_threshold_deg: f64,
    /// Gamma to record in the document header for later integration;
    /// defaults to each clip's own mean displacement.
    #[arg(long)]
    gamma: Option<f64>,
}

struct Extracted {
    clip_id: String,
    file_name: String,
    doc: String,
    degenerate: bool,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let thresholds = StaticThresholds {
        translation: args.translation_threshold,
        rotation: args.rotation_threshold_deg.to_radians(),
    };
    if ![thresholds.translation, thresholds.rotation].iter().all(|t| t.is_finite() && *t >= 0.0) {
        return Err(CliError::Validation("thresholds must be finite and nonnegative".into()));
    }
    if let Some(g) = args.gamma {
        if !(g.is_finite() && g > 0.0) {
            return Err(CliError::Validation(format!("--gamma must be positive, got {g}")));
        }
    }
    let multi = args.inputs.len() > 1;
    if multi && args.out.is_none() {
        return Err(CliError::Validation(
            "several inputs need --out pointing at a directory".into(),
        ));
    }

    let texts = args
        .inputs
        .iter()
        .map(|p| read_file(p).map(|t| (p.clone(), t)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut results = texts
        .par_iter()
        .map(|(path, text)| {
            let label = || path.display();
            let traj = parse_annotation(text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", label())))?;
            let seq = extract_actions(&traj, &thresholds)
                .map_err(|e| CliError::Validation(format!("{}: {e}", label())))?;
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
            Ok(Extracted {
                clip_id: seq.clip_id.clone(),
                file_name: format!("{}.actions.jsonl", stem.unwrap_or_else(|| "clip".into())),
                doc: write_actions_jsonl(&seq, args.gamma.unwrap_or(seq.mean_displacement)),
                degenerate: seq.degenerate,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    results.sort_by(|a, b| a.clip_id.cmp(&b.clip_id));

    for r in &results {
        if r.degenerate {
            eprintln!(
                "warning: clip '{}' has no detectable motion; every frame is labeled static",
                r.clip_id
            );
        }
    }

    if multi {
        let dir = args.out.as_deref().expect("checked above");
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("creating {}: {e}", dir.display())))?;
        let mut seen = BTreeMap::new();
        for r in &results {
            if let Some(other) = seen.insert(&r.file_name, &r.clip_id) {
                return Err(CliError::Validation(format!(
                    "inputs for clips '{}' and '{}' would both write {}",
                    other, r.clip_id, r.file_name
                )));
            }
        }
        for r in &results {
            write_file(&dir.join(&r.file_name), &r.doc)?;
        }
    } else {
        emit(args.out.as_deref(), &results[0].doc)?;
    }
    Ok(())
}
