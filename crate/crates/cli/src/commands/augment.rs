//! augment: sample a palindromic frame order for time-reversal training.

use std::fmt::Write;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use relicforge_core::curation::time_reverse_augment;

use crate::error::{emit, CliError};

#[derive(clap::Args)]
pub struct Args {
    /// Clip length in frames.
    #[arg(long)]
    frames: usize,
    /// CSV to write; stdout when omitted.
    #[arg(long = "out", value_name = "PATH")]
    out: Option<PathBuf>,
}

pub fn run(args: Args, seed: u64) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let palindrome = time_reverse_augment(args.frames, &mut rng)?;
    let mut csv = String::from("position,source_frame\n");
    for (position, frame) in palindrome.indices.iter().enumerate() {
        writeln!(csv, "{position},{frame}").expect("string write");
    }
    emit(args.out.as_deref(), &csv)
}
