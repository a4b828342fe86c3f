//! simulate-cache: step the streaming cache and account for every token,
//! byte and attention FLOP along the way.

use std::fmt::Write;
use std::path::PathBuf;

use relicforge_core::cache::{
    CacheConfig, CompressionSchedule, StreamingCache, DEFAULT_FACTOR_CYCLE, DEFAULT_WINDOW,
};

use crate::error::{emit, read_file, CliError};

#[derive(Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    steps: Option<usize>,
    window: Option<usize>,
    grid_height: Option<usize>,
    grid_width: Option<usize>,
    d_model: Option<usize>,
    bytes_per_element: Option<usize>,
    schedule: Option<Vec<usize>>,
}

#[derive(clap::Args)]
pub struct Args {
    /// TOML file supplying any of the flags below; flags still win.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Latent frames to feed.
    #[arg(long)]
    steps: Option<usize>,
    /// Uncompressed window size in latents.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    grid_height: Option<usize>,
    #[arg(long)]
    grid_width: Option<usize>,
    #[arg(long)]
    d_model: Option<usize>,
    #[arg(long)]
    bytes_per_element: Option<usize>,
    /// Comma-separated per-event pooling factors, applied cyclically.
    #[arg(long)]
    schedule: Option<String>,
    /// CSV to write; stdout when omitted.
    #[arg(long = "out", value_name = "PATH")]
    out: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let file: FileConfig = match &args.config {
        Some(path) => toml::from_str(&read_file(path)?)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?,
        None => FileConfig::default(),
    };
    let steps = args.steps.or(file.steps).unwrap_or(80);
    if steps == 0 {
        return Err(CliError::Validation("--steps must be at least 1".into()));
    }
    let factors = match &args.schedule {
        Some(raw) => raw
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Validation(format!("--schedule: {e}")))?,
        None => file.schedule.unwrap_or_else(|| DEFAULT_FACTOR_CYCLE.to_vec()),
    };
    let schedule =
        CompressionSchedule::new(factors, args.window.or(file.window).unwrap_or(DEFAULT_WINDOW))?;
    let defaults = CacheConfig::default();
    let config = CacheConfig {
        schedule,
        grid_height: args.grid_height.or(file.grid_height).unwrap_or(defaults.grid_height),
        grid_width: args.grid_width.or(file.grid_width).unwrap_or(defaults.grid_width),
        d_model: args.d_model.or(file.d_model).unwrap_or(defaults.d_model),
        bytes_per_element: args
            .bytes_per_element
            .or(file.bytes_per_element)
            .unwrap_or(defaults.bytes_per_element),
    };
    let mut cache = StreamingCache::new(config)?;

    let mut csv = String::from(
        "step,latents,tokens,uncompressed_tokens,bytes,flops,compressed_latent,compressed_factor,ratio\n",
    );
    for _ in 0..steps {
        let report = cache.advance();
        let totals = report.totals;
        let (latent, factor) = report
            .compressed
            .map(|e| (e.latent_index.to_string(), e.factor.to_string()))
            .unwrap_or_default();
        writeln!(
            csv,
            "{},{},{},{},{},{},{latent},{factor},{}",
            report.step,
            totals.latents,
            totals.tokens,
            totals.uncompressed_tokens,
            totals.bytes,
            totals.flops_per_step,
            totals.compression_ratio()
        )
        .expect("string write");
    }
    emit(args.out.as_deref(), &csv)
}
