//! A small reference attention stack over latent blocks: QK-normalized
//! multi-head attention with rotary positions, per-latent pose and action
//! conditioning at fixed injection points, and a streaming wrapper that
//! keeps its keys and values inside the compressed cache.

use crate::action::ActionVector;
use crate::cache::{
    compress_token_grid, AttnMask, CacheConfig, CacheError, StreamingCache, TokenGrid,
};
use crate::trajectory::CameraPose;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

const NORM_EPS: f64 = 1e-12;
const POSE_FEATURES: usize = 56;

#[derive(Debug, Error)]
pub enum AttentionError {
    #[error("{what}: {left} vs {right}")]
    DimMismatch { what: &'static str, left: usize, right: usize },
    #[error("mask is {mask_rows}x{mask_cols} but attention is {q} queries over {k} keys")]
    MaskShape { mask_rows: usize, mask_cols: usize, q: usize, k: usize },
    #[error("{kind:?} conditioning must be injected at {expected:?}, not {got:?}")]
    WrongStage { kind: ConditioningKind, expected: InjectionStage, got: InjectionStage },
    #[error("sequence is empty")]
    EmptySequence,
    #[error("bad model config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Cache(#[from] CacheError),
}

// ---------------------------------------------------------------------------
// Config and token buffers
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct ToyConfig {
    pub d_model: usize,
    pub n_heads: usize,
    pub rope_base: f64,
    /// Seeds the frozen lift matrices for pose and action embeddings.
    pub embed_seed: u64,
    /// Add the pose embedding to queries and keys before the rotary turn
    /// (the default), or after it.
    pub pose_before_rope: bool,
}

impl ToyConfig {
    pub fn new(
        d_model: usize,
        n_heads: usize,
        rope_base: f64,
        embed_seed: u64,
    ) -> Result<Self, AttentionError> {
        if n_heads == 0 || d_model == 0 || d_model % n_heads != 0 {
            return Err(AttentionError::BadConfig(format!(
                "d_model {d_model} must be a positive multiple of n_heads {n_heads}"
            )));
        }
        if (d_model / n_heads) % 2 != 0 {
            return Err(AttentionError::BadConfig(format!(
                "head dim {} must be even for rotary positions",
                d_model / n_heads
            )));
        }
        if !(rope_base.is_finite() && rope_base > 1.0) {
            return Err(AttentionError::BadConfig(format!("rope base {rope_base}")));
        }
        Ok(Self { d_model, n_heads, rope_base, embed_seed, pose_before_rope: true })
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self { d_model: 8, n_heads: 2, rope_base: 10_000.0, embed_seed: 7, pose_before_rope: true }
    }
}

/// A dense stack of token vectors, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tokens {
    pub count: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Tokens {
    pub fn zeros(count: usize, dim: usize) -> Self {
        Self { count, dim, data: vec![0.0; count * dim] }
    }

    pub fn from_grid(grid: &TokenGrid) -> Self {
        Self { count: grid.tokens(), dim: grid.dim, data: grid.data.clone() }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn concat(parts: &[&Tokens]) -> Result<Self, AttentionError> {
        let dim = parts.first().ok_or(AttentionError::EmptySequence)?.dim;
        let mut out = Tokens { count: 0, dim, data: Vec::new() };
        for p in parts {
            if p.dim != dim {
                return Err(AttentionError::DimMismatch { what: "token dim", left: dim, right: p.dim });
            }
            out.count += p.count;
            out.data.extend_from_slice(&p.data);
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Latent grouping and conditioning embeddings
// ---------------------------------------------------------------------------

/// Frames per latent: the first frame stands alone, the rest pack in fours.
/// Returned as `(start, len)` spans covering `frames` exactly.
pub fn latent_groups(frames: usize) -> Vec<(usize, usize)> {
    let mut groups = Vec::new();
    if frames == 0 {
        return groups;
    }
    groups.push((0, 1));
    let mut start = 1;
    while start < frames {
        let len = 4.min(frames - start);
        groups.push((start, len));
        start += len;
    }
    groups
}

fn lift_matrix(rows: usize, cols: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..rows * cols).map(|_| rng.gen_range(-0.5..0.5)).collect()
}

fn lift(features: &[f64], matrix: &[f64], d_model: usize) -> Vec<f64> {
    let mut out = vec![0.0; d_model];
    for (i, &f) in features.iter().enumerate() {
        for (o, &m) in out.iter_mut().zip(&matrix[i * d_model..(i + 1) * d_model]) {
            *o += f * m;
        }
    }
    out
}

/// One embedding row per latent: group-mean action vectors pushed through a
/// frozen random lift.
pub fn encode_actions(actions: &[ActionVector], config: &ToyConfig) -> Result<Tokens, AttentionError> {
    if actions.is_empty() {
        return Err(AttentionError::EmptySequence);
    }
    let groups = latent_groups(actions.len());
    let matrix = lift_matrix(crate::action::ACTION_DIM, config.d_model, config.embed_seed);
    let mut out = Tokens::zeros(groups.len(), config.d_model);
    for (g, &(start, len)) in groups.iter().enumerate() {
        let mut mean = [0.0; crate::action::ACTION_DIM];
        for a in &actions[start..start + len] {
            for (m, &v) in mean.iter_mut().zip(a.as_array()) {
                *m += v;
            }
        }
        for m in mean.iter_mut() {
            *m /= len as f64;
        }
        out.row_mut(g).copy_from_slice(&lift(&mean, &matrix, config.d_model));
    }
    Ok(out)
}

fn pose_features(pose: &CameraPose) -> [f64; POSE_FEATURES] {
    let q = pose.rotation.quaternion();
    let raw = [pose.position.x, pose.position.y, pose.position.z, q.w, q.i, q.j, q.k];
    let mut out = [0.0; POSE_FEATURES];
    let mut idx = 0;
    for v in raw {
        for j in 0..4 {
            let freq = (1u32 << j) as f64;
            out[idx] = (v * freq).sin();
            out[idx + 1] = (v * freq).cos();
            idx += 2;
        }
    }
    out
}

/// One embedding row per latent from the pose of the group's first frame.
pub fn encode_poses(poses: &[CameraPose], config: &ToyConfig) -> Result<Tokens, AttentionError> {
    if poses.is_empty() {
        return Err(AttentionError::EmptySequence);
    }
    let groups = latent_groups(poses.len());
    let matrix = lift_matrix(POSE_FEATURES, config.d_model, config.embed_seed.wrapping_add(1));
    let mut out = Tokens::zeros(groups.len(), config.d_model);
    for (g, &(start, _)) in groups.iter().enumerate() {
        let feats = pose_features(&poses[start]);
        out.row_mut(g).copy_from_slice(&lift(&feats, &matrix, config.d_model));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Conditioning injection contract
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InjectionStage {
    /// Added to queries and keys before attention; values never see it.
    PreAttentionQueryKey,
    /// Added to the hidden states after attention.
    PostAttention,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditioningKind {
    Pose,
    Action,
}

impl ConditioningKind {
    pub fn stage(self) -> InjectionStage {
        match self {
            ConditioningKind::Pose => InjectionStage::PreAttentionQueryKey,
            ConditioningKind::Action => InjectionStage::PostAttention,
        }
    }
}

/// Add one embedding row per latent to every token inside that latent's span.
/// Refuses stage/kind pairings the model contract forbids.
pub fn inject_conditioning(
    target: &mut Tokens,
    per_latent: &Tokens,
    spans: &[(usize, usize)],
    kind: ConditioningKind,
    stage: InjectionStage,
) -> Result<(), AttentionError> {
    if stage != kind.stage() {
        return Err(AttentionError::WrongStage { kind, expected: kind.stage(), got: stage });
    }
    if per_latent.dim != target.dim {
        return Err(AttentionError::DimMismatch {
            what: "conditioning dim",
            left: per_latent.dim,
            right: target.dim,
        });
    }
    if per_latent.count != spans.len() {
        return Err(AttentionError::DimMismatch {
            what: "latent count",
            left: per_latent.count,
            right: spans.len(),
        });
    }
    let covered: usize = spans.iter().map(|s| s.1).sum();
    if covered != target.count || spans.iter().any(|&(s, l)| s + l > target.count) {
        return Err(AttentionError::DimMismatch {
            what: "span coverage",
            left: covered,
            right: target.count,
        });
    }
    for (g, &(start, len)) in spans.iter().enumerate() {
        for t in start..start + len {
            let row = target.row_mut(t);
            for (r, &e) in row.iter_mut().zip(per_latent.row(g)) {
                *r += e;
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Rotary positions and attention
// ---------------------------------------------------------------------------

/// Rotate every token in place to carry `position`. Pairs (2k, 2k+1) within
/// each head turn by `position * base^(-2k / head_dim)`.
pub fn apply_rope(tokens: &mut Tokens, position: usize, config: &ToyConfig) -> Result<(), AttentionError> {
    if tokens.dim != config.d_model {
        return Err(AttentionError::DimMismatch {
            what: "token dim",
            left: tokens.dim,
            right: config.d_model,
        });
    }
    let hd = config.head_dim();
    for i in 0..tokens.count {
        let row = tokens.row_mut(i);
        for h in 0..config.n_heads {
            for k in 0..hd / 2 {
                let theta = config.rope_base.powf(-((2 * k) as f64) / hd as f64);
                let angle = position as f64 * theta;
                let (sin, cos) = angle.sin_cos();
                let a = row[h * hd + 2 * k];
                let b = row[h * hd + 2 * k + 1];
                row[h * hd + 2 * k] = a * cos - b * sin;
                row[h * hd + 2 * k + 1] = a * sin + b * cos;
            }
        }
    }
    Ok(())
}

fn normalized_heads(tokens: &Tokens, config: &ToyConfig) -> Vec<f64> {
    let hd = config.head_dim();
    let mut out = tokens.data.clone();
    for i in 0..tokens.count {
        for h in 0..config.n_heads {
            let base = i * tokens.dim + h * hd;
            let slice = &mut out[base..base + hd];
            let norm = slice.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > NORM_EPS {
                for v in slice.iter_mut() {
                    *v /= norm;
                }
            }
        }
    }
    out
}

/// Multi-head scaled dot-product attention with L2-normalized queries and
/// keys. Rows whose mask admits no key come out as zeros.
pub fn attend(
    q: &Tokens,
    k: &Tokens,
    v: &Tokens,
    mask: &AttnMask,
    config: &ToyConfig,
) -> Result<Tokens, AttentionError> {
    for (what, dim) in [("query dim", q.dim), ("key dim", k.dim), ("value dim", v.dim)] {
        if dim != config.d_model {
            return Err(AttentionError::DimMismatch { what, left: dim, right: config.d_model });
        }
    }
    if k.count != v.count {
        return Err(AttentionError::DimMismatch { what: "kv count", left: k.count, right: v.count });
    }
    if mask.rows != q.count || mask.cols != k.count {
        return Err(AttentionError::MaskShape {
            mask_rows: mask.rows,
            mask_cols: mask.cols,
            q: q.count,
            k: k.count,
        });
    }
    let hd = config.head_dim();
    let scale = 1.0 / (hd as f64).sqrt();
    let qn = normalized_heads(q, config);
    let kn = normalized_heads(k, config);
    let mut out = Tokens::zeros(q.count, config.d_model);
    let mut scores = vec![0.0; k.count];
    for i in 0..q.count {
        for h in 0..config.n_heads {
            let q_slice = &qn[i * q.dim + h * hd..i * q.dim + h * hd + hd];
            let mut max = f64::NEG_INFINITY;
            for j in 0..k.count {
                if !mask.get(i, j) {
                    continue;
                }
                let k_slice = &kn[j * k.dim + h * hd..j * k.dim + h * hd + hd];
                let dot: f64 = q_slice.iter().zip(k_slice).map(|(a, b)| a * b).sum();
                scores[j] = dot * scale;
                max = max.max(scores[j]);
            }
            if max == f64::NEG_INFINITY {
                continue;
            }
            let mut denom = 0.0;
            for j in 0..k.count {
                if mask.get(i, j) {
                    scores[j] = (scores[j] - max).exp();
                    denom += scores[j];
                }
            }
            let out_row = out.row_mut(i);
            for j in 0..k.count {
                if !mask.get(i, j) {
                    continue;
                }
                let w = scores[j] / denom;
                let v_slice = v.row(j);
                for d in 0..hd {
                    out_row[h * hd + d] += w * v_slice[h * hd + d];
                }
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Full block pipeline, batch and streaming
// ---------------------------------------------------------------------------

fn token_spans(latents: &[TokenGrid]) -> Vec<(usize, usize)> {
    let mut spans = Vec::with_capacity(latents.len());
    let mut start = 0;
    for g in latents {
        spans.push((start, g.tokens()));
        start += g.tokens();
    }
    spans
}

/// Run one attention block over a whole sequence of latents at once.
///
/// Queries and keys are the hidden tokens plus the per-latent pose embedding,
/// rotated to the latent's position; values are the raw hidden tokens; the
/// per-latent action embedding joins after attention.
pub fn block_forward(
    latents: &[TokenGrid],
    pose_embed: &Tokens,
    action_embed: &Tokens,
    mask: &AttnMask,
    config: &ToyConfig,
) -> Result<Tokens, AttentionError> {
    if latents.is_empty() {
        return Err(AttentionError::EmptySequence);
    }
    let spans = token_spans(latents);
    let flat = latents.iter().map(Tokens::from_grid).collect::<Vec<_>>();
    let hidden = Tokens::concat(&flat.iter().collect::<Vec<_>>())?;

    let mut qk = hidden.clone();
    if config.pose_before_rope {
        inject_conditioning(
            &mut qk,
            pose_embed,
            &spans,
            ConditioningKind::Pose,
            InjectionStage::PreAttentionQueryKey,
        )?;
    }
    let mut rotated = Tokens::zeros(0, config.d_model);
    rotated.data.reserve(qk.data.len());
    for (g, &(start, len)) in spans.iter().enumerate() {
        let mut part = Tokens {
            count: len,
            dim: qk.dim,
            data: qk.data[start * qk.dim..(start + len) * qk.dim].to_vec(),
        };
        apply_rope(&mut part, g, config)?;
        rotated.count += part.count;
        rotated.data.extend_from_slice(&part.data);
    }
    if !config.pose_before_rope {
        inject_conditioning(
            &mut rotated,
            pose_embed,
            &spans,
            ConditioningKind::Pose,
            InjectionStage::PreAttentionQueryKey,
        )?;
    }

    let mut out = attend(&rotated, &rotated, &hidden, mask, config)?;
    inject_conditioning(
        &mut out,
        action_embed,
        &spans,
        ConditioningKind::Action,
        InjectionStage::PostAttention,
    )?;
    Ok(out)
}

/// Streaming counterpart of [`block_forward`]: latents arrive one at a time,
/// keys and values live in the compressed cache, and each new latent attends
/// over everything still cached.
pub struct StreamingAttention {
    cache: StreamingCache,
    keys: Vec<TokenGrid>,
    values: Vec<TokenGrid>,
    config: ToyConfig,
}

impl StreamingAttention {
    pub fn new(config: ToyConfig, cache_config: CacheConfig) -> Result<Self, AttentionError> {
        Ok(Self {
            cache: StreamingCache::new(cache_config)?,
            keys: Vec::new(),
            values: Vec::new(),
            config,
        })
    }

    pub fn cache(&self) -> &StreamingCache {
        &self.cache
    }

    /// Feed the next latent. Returns the attention output for its tokens,
    /// with the action embedding already added.
    pub fn step(
        &mut self,
        hidden: &TokenGrid,
        pose_row: &[f64],
        action_row: &[f64],
    ) -> Result<Tokens, AttentionError> {
        if hidden.dim != self.config.d_model {
            return Err(AttentionError::DimMismatch {
                what: "latent dim",
                left: hidden.dim,
                right: self.config.d_model,
            });
        }
        if hidden.height != self.cache.config().grid_height
            || hidden.width != self.cache.config().grid_width
        {
            return Err(AttentionError::DimMismatch {
                what: "grid tokens",
                left: hidden.tokens(),
                right: self.cache.config().grid_tokens(),
            });
        }
        let position = self.keys.len();
        let spans = [(0, hidden.tokens())];

        let mut qk = Tokens::from_grid(hidden);
        let pose = Tokens { count: 1, dim: self.config.d_model, data: pose_row.to_vec() };
        if self.config.pose_before_rope {
            inject_conditioning(
                &mut qk,
                &pose,
                &spans,
                ConditioningKind::Pose,
                InjectionStage::PreAttentionQueryKey,
            )?;
            apply_rope(&mut qk, position, &self.config)?;
        } else {
            apply_rope(&mut qk, position, &self.config)?;
            inject_conditioning(
                &mut qk,
                &pose,
                &spans,
                ConditioningKind::Pose,
                InjectionStage::PreAttentionQueryKey,
            )?;
        }

        let report = self.cache.advance();
        if let Some(event) = report.compressed {
            let slot = event.latent_index;
            self.keys[slot] = compress_token_grid(&self.keys[slot], event.factor)?;
            self.values[slot] = compress_token_grid(&self.values[slot], event.factor)?;
        }
        self.keys.push(TokenGrid::new(hidden.height, hidden.width, hidden.dim, qk.data.clone())?);
        self.values.push(hidden.clone());

        let k_flat: Vec<Tokens> = self.keys.iter().map(Tokens::from_grid).collect();
        let v_flat: Vec<Tokens> = self.values.iter().map(Tokens::from_grid).collect();
        let k_all = Tokens::concat(&k_flat.iter().collect::<Vec<_>>())?;
        let v_all = Tokens::concat(&v_flat.iter().collect::<Vec<_>>())?;

        let mask = AttnMask::filled(qk.count, k_all.count, true);
        let mut out = attend(&qk, &k_all, &v_all, &mask, &self.config)?;
        let action = Tokens { count: 1, dim: self.config.d_model, data: action_row.to_vec() };
        inject_conditioning(
            &mut out,
            &action,
            &spans,
            ConditioningKind::Action,
            InjectionStage::PostAttention,
        )?;
        Ok(out)
    }
}
