//! masks: render the block-causal / hybrid-forcing mask family.

use std::fmt::Write;
use std::path::PathBuf;

use relicforge_core::cache::{build_block_causal_mask, build_hybrid_forcing_mask, AttnMask};

use crate::error::{emit, CliError};

#[derive(clap::Args)]
pub struct Args {
    /// Comma-separated token counts per block, oldest first.
    #[arg(long)]
    blocks: String,
    /// Trailing blocks treated as noisy; the rest form a clean prefix that
    /// attends bidirectionally within itself. Omitted: plain block-causal.
    #[arg(long)]
    noisy_suffix: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Where to write; stdout when omitted.
    #[arg(long = "out", value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Format {
    /// One row per line, '#' where attention is allowed, '.' where not.
    Text,
    /// One row per line of comma-separated 0/1.
    Csv,
}

fn render(mask: &AttnMask, format: Format) -> String {
    let mut out = String::with_capacity(mask.rows * (mask.cols + 1));
    for r in 0..mask.rows {
        for c in 0..mask.cols {
            match format {
                Format::Text => out.push(if mask.get(r, c) { '#' } else { '.' }),
                Format::Csv => {
                    if c > 0 {
                        out.push(',');
                    }
                    out.push(if mask.get(r, c) { '1' } else { '0' });
                }
            }
        }
        out.push('\n');
    }
    out
}

pub fn run(args: Args) -> Result<(), CliError> {
    let counts = args
        .blocks
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Validation(format!("--blocks: {e}")))?;
    let mask = match args.noisy_suffix {
        Some(noisy) => build_hybrid_forcing_mask(&counts, noisy)?,
        None => build_block_causal_mask(&counts)?,
    };
    let mut rendered = render(&mask, args.format);
    if args.format == Format::Text {
        let mut header = String::new();
        writeln!(header, "{} x {} ({} blocks)", mask.rows, mask.cols, counts.len())
            .expect("string write");
        header.push_str(&rendered);
        rendered = header;
    }
    emit(args.out.as_deref(), &rendered)
}
