//! balance: greedily pick clips whose pooled action mix approaches a target.

use std::fmt::Write;
use std::io::Write as IoWrite;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use relicforge_core::action::{ActionSlot, ACTION_DIM};
use relicforge_core::curation::{balance_sample, parse_manifest, write_manifest};

use crate::error::{read_file, write_file, CliError};

#[derive(clap::Args)]
pub struct Args {
    /// Clip manifest (JSON lines of metadata records).
    #[arg(long, value_name = "FILE")]
    manifest: PathBuf,
    /// Target proportions: "uniform" or 13 comma-separated values summing to 1.
    #[arg(long, default_value = "uniform")]
    target: String,
    /// Where to write the selected subset, itself a manifest.
    #[arg(long = "out", value_name = "PATH")]
    out: PathBuf,
}

fn parse_target(raw: &str) -> Result<[f64; ACTION_DIM], CliError> {
    if raw.trim() == "uniform" {
        return Ok([1.0 / ACTION_DIM as f64; ACTION_DIM]);
    }
    let values = raw
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Validation(format!("--target: {e}")))?;
    if values.len() != ACTION_DIM {
        return Err(CliError::Validation(format!(
            "--target needs {ACTION_DIM} proportions, got {}",
            values.len()
        )));
    }
    let mut target = [0.0; ACTION_DIM];
    target.copy_from_slice(&values);
    Ok(target)
}

pub fn run(args: Args, seed: u64) -> Result<(), CliError> {
    let clips = parse_manifest(&read_file(&args.manifest)?)?;
    let target = parse_target(&args.target)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outcome = balance_sample(&clips, &target, &mut rng)?;

    let mut selected: Vec<_> = outcome.selected.iter().map(|&i| clips[i].clone()).collect();
    selected.sort_by(|a, b| a.clip_id.cmp(&b.clip_id));
    write_file(&args.out, &write_manifest(&selected))?;

    let mut csv = String::from("bin,target,achieved\n");
    for slot in ActionSlot::ALL {
        writeln!(csv, "{},{},{}", slot.name(), target[slot as usize], outcome.achieved[slot as usize])
            .expect("string write");
    }
    std::io::stdout()
        .write_all(csv.as_bytes())
        .map_err(|e| CliError::Io(format!("writing stdout: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_target_spreads_mass_evenly() {
        let target = parse_target("uniform").unwrap();
        assert!(target.iter().all(|&t| (t - 1.0 / 13.0).abs() < 1e-15));
    }

    #[test]
    fn explicit_targets_must_have_thirteen_entries() {
        let raw = "0.2,0.2,0.2,0.2,0.2,0,0,0,0,0,0,0,0";
        let target = parse_target(raw).unwrap();
        assert_eq!(target[0], 0.2);
        assert_eq!(target[12], 0.0);
        assert!(matches!(parse_target("0.5,0.5"), Err(CliError::Validation(_))));
        assert!(matches!(parse_target("a,b,c"), Err(CliError::Validation(_))));
    }
}
