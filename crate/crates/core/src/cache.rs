//! Streaming KV-cache bookkeeping: a sliding window of full-resolution
//! latents backed by a spatially pooled long-term memory, plus the masks
//! that gate attention between clean and noisy latent blocks.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("compression schedule is empty")]
    EmptySchedule,
    #[error("pooling factor {0} unsupported, expected 1, 2 or 4")]
    BadFactor(usize),
    #[error("window must hold at least one latent")]
    BadWindow,
    #[error("token grid dimensions must be nonzero, got {height}x{width}x{dim}")]
    BadGrid { height: usize, width: usize, dim: usize },
    #[error("token grid holds {len} values, expected {expected}")]
    BadGridData { len: usize, expected: usize },
    #[error("mask needs at least one block")]
    EmptyBlocks,
    #[error("block {index} is empty")]
    EmptyBlock { index: usize },
    #[error("noisy suffix of {suffix} blocks exceeds the {blocks} available")]
    BadSuffix { suffix: usize, blocks: usize },
}

// ---------------------------------------------------------------------------
// Compression schedule
// ---------------------------------------------------------------------------

/// Cyclic per-latent pooling factors applied as latents leave the window,
/// together with the window capacity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompressionSchedule {
    factors: Vec<usize>,
    window: usize,
}

/// Production cycle: one latent kept whole, five pooled 2x, twelve pooled 4x.
pub const DEFAULT_FACTOR_CYCLE: [usize; 18] =
    [1, 4, 2, 4, 4, 4, 2, 4, 4, 2, 4, 4, 4, 2, 4, 4, 2, 4];

/// Latents the window holds before the oldest spills into memory.
pub const DEFAULT_WINDOW: usize = 9;

impl CompressionSchedule {
    pub fn new(factors: Vec<usize>, window: usize) -> Result<Self, CacheError> {
        if factors.is_empty() {
            return Err(CacheError::EmptySchedule);
        }
        if let Some(&bad) = factors.iter().find(|f| ![1, 2, 4].contains(*f)) {
            return Err(CacheError::BadFactor(bad));
        }
        if window == 0 {
            return Err(CacheError::BadWindow);
        }
        Ok(Self { factors, window })
    }

    /// Pooling factor for the n-th compression event (0-based), cycling.
    pub fn factor_for(&self, event: usize) -> usize {
        self.factors[event % self.factors.len()]
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }
}

impl Default for CompressionSchedule {
    fn default() -> Self {
        Self { factors: DEFAULT_FACTOR_CYCLE.to_vec(), window: DEFAULT_WINDOW }
    }
}

// ---------------------------------------------------------------------------
// Token grids and pooling
// ---------------------------------------------------------------------------

/// A spatial grid of feature vectors, row-major `[height][width][dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenGrid {
    pub height: usize,
    pub width: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl TokenGrid {
    pub fn new(height: usize, width: usize, dim: usize, data: Vec<f64>) -> Result<Self, CacheError> {
        if height == 0 || width == 0 || dim == 0 {
            return Err(CacheError::BadGrid { height, width, dim });
        }
        let expected = height * width * dim;
        if data.len() != expected {
            return Err(CacheError::BadGridData { len: data.len(), expected });
        }
        Ok(Self { height, width, dim, data })
    }

    pub fn zeros(height: usize, width: usize, dim: usize) -> Result<Self, CacheError> {
        if height == 0 || width == 0 || dim == 0 {
            return Err(CacheError::BadGrid { height, width, dim });
        }
        Ok(Self { height, width, dim, data: vec![0.0; height * width * dim] })
    }

    pub fn tokens(&self) -> usize {
        self.height * self.width
    }

    pub fn token(&self, h: usize, w: usize) -> &[f64] {
        let base = (h * self.width + w) * self.dim;
        &self.data[base..base + self.dim]
    }
}

/// Token count a grid has after pooling both spatial axes by `factor`,
/// rounding partial edge cells up.
pub fn pooled_tokens(height: usize, width: usize, factor: usize) -> usize {
    height.div_ceil(factor) * width.div_ceil(factor)
}

/// Mean-pool both spatial axes by `factor`. Edge cells whose window sticks
/// out of the grid average over the cells that exist.
pub fn compress_token_grid(grid: &TokenGrid, factor: usize) -> Result<TokenGrid, CacheError> {
    if ![1, 2, 4].contains(&factor) {
        return Err(CacheError::BadFactor(factor));
    }
    if factor == 1 {
        return Ok(grid.clone());
    }
    let oh = grid.height.div_ceil(factor);
    let ow = grid.width.div_ceil(factor);
    let mut out = TokenGrid::zeros(oh, ow, grid.dim)?;
    for ch in 0..oh {
        for cw in 0..ow {
            let h_end = ((ch + 1) * factor).min(grid.height);
            let w_end = ((cw + 1) * factor).min(grid.width);
            let count = ((h_end - ch * factor) * (w_end - cw * factor)) as f64;
            let base = (ch * ow + cw) * grid.dim;
            for h in ch * factor..h_end {
                for w in cw * factor..w_end {
                    let src = grid.token(h, w);
                    for d in 0..grid.dim {
                        out.data[base + d] += src[d];
                    }
                }
            }
            for d in 0..grid.dim {
                out.data[base + d] /= count;
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Streaming cache accounting
// ---------------------------------------------------------------------------

/// Where a cached latent currently lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LatentState {
    /// Recent, full resolution.
    Window,
    /// Spilled out of the window and pooled.
    Memory,
}

/// Bookkeeping for one cached latent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatentDescriptor {
    /// Arrival order, 0-based.
    pub index: usize,
    pub state: LatentState,
    /// Pooling factor applied so far (1 while in the window).
    pub factor: usize,
    pub tokens: usize,
}

/// A latent spilling from window to memory during an advance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompressionEvent {
    pub latent_index: usize,
    pub factor: usize,
    pub tokens_before: usize,
    pub tokens_after: usize,
}

/// Sizes and costs of the cache after an advance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheTotals {
    pub latents: usize,
    pub tokens: usize,
    /// Tokens the same latents would occupy with no pooling at all.
    pub uncompressed_tokens: usize,
    /// K and V caches together, `tokens * 2 * d_model * bytes_per_element`.
    pub bytes: u64,
    /// One new-block attention pass against the whole cache,
    /// `4 * d_model * q_tokens * kv_tokens`.
    pub flops_per_step: u64,
}

impl CacheTotals {
    pub fn compression_ratio(&self) -> f64 {
        self.uncompressed_tokens as f64 / self.tokens as f64
    }
}

/// What one advance did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdvanceReport {
    /// 1-based count of latents pushed so far.
    pub step: usize,
    pub compressed: Option<CompressionEvent>,
    pub totals: CacheTotals,
}

/// Geometry and dtype the accounting runs over.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheConfig {
    pub schedule: CompressionSchedule,
    pub grid_height: usize,
    pub grid_width: usize,
    pub d_model: usize,
    pub bytes_per_element: usize,
}

impl Default for CacheConfig {
    fn default() -> Self {
        Self {
            schedule: CompressionSchedule::default(),
            grid_height: 30,
            grid_width: 52,
            d_model: 1024,
            bytes_per_element: 2,
        }
    }
}

impl CacheConfig {
    pub fn grid_tokens(&self) -> usize {
        self.grid_height * self.grid_width
    }

    fn validate(&self) -> Result<(), CacheError> {
        if self.grid_height == 0 || self.grid_width == 0 || self.d_model == 0 {
            return Err(CacheError::BadGrid {
                height: self.grid_height,
                width: self.grid_width,
                dim: self.d_model,
            });
        }
        Ok(())
    }
}

/// Token-count simulation of the streaming cache. Holds no feature data;
/// [`compress_token_grid`] applies the same geometry to real grids.
#[derive(Debug, Clone)]
pub struct StreamingCache {
    config: CacheConfig,
    latents: Vec<LatentDescriptor>,
    events: usize,
    steps: usize,
}

impl StreamingCache {
    pub fn new(config: CacheConfig) -> Result<Self, CacheError> {
        config.validate()?;
        Ok(Self { config, latents: Vec::new(), events: 0, steps: 0 })
    }

    pub fn config(&self) -> &CacheConfig {
        &self.config
    }

    pub fn latents(&self) -> &[LatentDescriptor] {
        &self.latents
    }

    fn window_len(&self) -> usize {
        self.latents.iter().filter(|l| l.state == LatentState::Window).count()
    }

    /// Push one new full-resolution latent. If the window was already full,
    /// its oldest latent spills into memory and is pooled by the next factor
    /// in the schedule first.
    pub fn advance(&mut self) -> AdvanceReport {
        let mut compressed = None;
        if self.window_len() == self.config.schedule.window() {
            let slot = self
                .latents
                .iter()
                .position(|l| l.state == LatentState::Window)
                .expect("window is full");
            let factor = self.config.schedule.factor_for(self.events);
            let before = self.latents[slot].tokens;
            let after = pooled_tokens(self.config.grid_height, self.config.grid_width, factor);
            self.latents[slot] =
                LatentDescriptor { state: LatentState::Memory, factor, tokens: after, ..self.latents[slot] };
            self.events += 1;
            compressed = Some(CompressionEvent {
                latent_index: self.latents[slot].index,
                factor,
                tokens_before: before,
                tokens_after: after,
            });
        }
        self.latents.push(LatentDescriptor {
            index: self.steps,
            state: LatentState::Window,
            factor: 1,
            tokens: self.config.grid_tokens(),
        });
        self.steps += 1;
        AdvanceReport { step: self.steps, compressed, totals: self.totals() }
    }

    pub fn totals(&self) -> CacheTotals {
        let tokens: usize = self.latents.iter().map(|l| l.tokens).sum();
        let uncompressed = self.latents.len() * self.config.grid_tokens();
        let bytes = tokens as u64 * 2 * self.config.d_model as u64 * self.config.bytes_per_element as u64;
        let flops = 4 * self.config.d_model as u64 * self.config.grid_tokens() as u64 * tokens as u64;
        CacheTotals {
            latents: self.latents.len(),
            tokens,
            uncompressed_tokens: uncompressed,
            bytes,
            flops_per_step: flops,
        }
    }
}

// ---------------------------------------------------------------------------
// Attention masks over latent blocks
// ---------------------------------------------------------------------------

/// Dense boolean attention mask; `true` means the query may look at the key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttnMask {
    pub rows: usize,
    pub cols: usize,
    data: Vec<bool>,
}

impl AttnMask {
    pub fn filled(rows: usize, cols: usize, value: bool) -> Self {
        Self { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        self.data[r * self.cols + c] = value;
    }
}

fn check_blocks(counts: &[usize]) -> Result<usize, CacheError> {
    if counts.is_empty() {
        return Err(CacheError::EmptyBlocks);
    }
    if let Some(index) = counts.iter().position(|&c| c == 0) {
        return Err(CacheError::EmptyBlock { index });
    }
    Ok(counts.iter().sum())
}

fn fill_block(mask: &mut AttnMask, offsets: &[usize], counts: &[usize], bi: usize, bj: usize) {
    for r in offsets[bi]..offsets[bi] + counts[bi] {
        for c in offsets[bj]..offsets[bj] + counts[bj] {
            mask.set(r, c, true);
        }
    }
}

fn block_offsets(counts: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(counts.len());
    let mut acc = 0;
    for &c in counts {
        offsets.push(acc);
        acc += c;
    }
    offsets
}

/// Block-causal mask: tokens of block i attend blocks 0..=i in full.
pub fn build_block_causal_mask(counts: &[usize]) -> Result<AttnMask, CacheError> {
    let total = check_blocks(counts)?;
    let offsets = block_offsets(counts);
    let mut mask = AttnMask::filled(total, total, false);
    for bi in 0..counts.len() {
        for bj in 0..=bi {
            fill_block(&mut mask, &offsets, counts, bi, bj);
        }
    }
    Ok(mask)
}

/// Mixed training mask: the first `blocks - noisy_suffix` blocks form a clean
/// prefix that attends bidirectionally within itself; the noisy suffix blocks
/// attend the whole prefix plus themselves block-causally.
pub fn build_hybrid_forcing_mask(counts: &[usize], noisy_suffix: usize) -> Result<AttnMask, CacheError> {
    let total = check_blocks(counts)?;
    if noisy_suffix > counts.len() {
        return Err(CacheError::BadSuffix { suffix: noisy_suffix, blocks: counts.len() });
    }
    let offsets = block_offsets(counts);
    let clean = counts.len() - noisy_suffix;
    let mut mask = AttnMask::filled(total, total, false);
    for bi in 0..counts.len() {
        let reach = if bi < clean { clean - 1 } else { bi };
        for bj in 0..=reach {
            fill_block(&mut mask, &offsets, counts, bi, bj);
        }
    }
    Ok(mask)
}
