//! Distribution-matching distillation on a deliberately tiny generator:
//! per-block score differences, the pseudo-gradient they induce, and two
//! interchangeable backward passes. The monolithic one keeps every block
//! tape alive until the end; the replayed one re-derives each tape on
//! demand and never holds more than one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DistillError {
    #[error("sigma must be positive, got {0}")]
    BadSigma(f64),
    #[error("bad generator config: {0}")]
    BadConfig(String),
    #[error("parameters diverged at step {step}: theta_c = {theta_c}")]
    Diverged { step: usize, theta_c: f64 },
}

/// Generator parameters: `x = a * ctx + b * eps + c`, elementwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Theta {
    pub const ZERO: Theta = Theta { a: 0.0, b: 0.0, c: 0.0 };

    pub fn norm(&self) -> f64 {
        (self.a * self.a + self.b * self.b + self.c * self.c).sqrt()
    }
}

/// A chain of `blocks` affine blocks over `block_dim`-element vectors. Each
/// block sees the previous block's output only through a stop-gradient
/// context, so no gradient flows across block boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyGenerator {
    pub theta: Theta,
    pub blocks: usize,
    pub block_dim: usize,
}

impl ToyGenerator {
    pub fn new(theta: Theta, blocks: usize, block_dim: usize) -> Result<Self, DistillError> {
        if blocks == 0 || block_dim == 0 {
            return Err(DistillError::BadConfig(format!(
                "need at least one block and one dim, got {blocks}x{block_dim}"
            )));
        }
        if ![theta.a, theta.b, theta.c].iter().all(|v| v.is_finite()) {
            return Err(DistillError::BadConfig("theta must be finite".into()));
        }
        Ok(Self { theta, blocks, block_dim })
    }

    /// Analytic per-block output means at zero noise:
    /// `m_1 = c`, `m_l = a * m_(l-1) + c`.
    pub fn block_means(&self) -> Vec<f64> {
        let mut means = Vec::with_capacity(self.blocks);
        let mut m = 0.0;
        for _ in 0..self.blocks {
            m = self.theta.a * m + self.theta.c;
            means.push(m);
        }
        means
    }
}

/// Score of a Gaussian density: `-(x - mu) / sigma^2`.
pub fn gaussian_score(x: f64, mu: f64, sigma: f64) -> Result<f64, DistillError> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(DistillError::BadSigma(sigma));
    }
    Ok(-(x - mu) / (sigma * sigma))
}

/// Zero-mean noise and the block's partial-noising level, re-derivable from
/// the sample seed and block index alone.
fn block_draws(sample_seed: u64, block: usize, dim: usize) -> (Vec<f64>, f64) {
    let stream = sample_seed ^ (block as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03);
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    let eps = (0..dim).map(|_| (rng.gen::<f64>() - 0.5) * 2.0).collect();
    let u = rng.gen::<f64>();
    (eps, u)
}

/// One full self-rollout: block outputs plus the per-block noising levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub outputs: Vec<Vec<f64>>,
    pub u: Vec<f64>,
}

pub fn self_rollout(gen: &ToyGenerator, sample_seed: u64) -> Rollout {
    let mut outputs = Vec::with_capacity(gen.blocks);
    let mut u = Vec::with_capacity(gen.blocks);
    let mut ctx = vec![0.0; gen.block_dim];
    for block in 0..gen.blocks {
        let (eps, ul) = block_draws(sample_seed, block, gen.block_dim);
        let x: Vec<f64> = ctx
            .iter()
            .zip(&eps)
            .map(|(&c, &e)| gen.theta.a * c + gen.theta.b * e + gen.theta.c)
            .collect();
        ctx = x.clone();
        outputs.push(x);
        u.push(ul);
    }
    Rollout { outputs, u }
}

/// Per-block, per-element difference between the target score and the
/// generator's own score, both taken at the partially noised sample
/// `psi = cos(pi * u / 2) * x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreDiffMap {
    pub per_block: Vec<Vec<f64>>,
}

pub fn score_diff_maps(
    gen: &ToyGenerator,
    rollout: &Rollout,
    target_mu: f64,
    sigma: f64,
) -> Result<ScoreDiffMap, DistillError> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(DistillError::BadSigma(sigma));
    }
    let means = gen.block_means();
    let mut per_block = Vec::with_capacity(gen.blocks);
    for (block, x) in rollout.outputs.iter().enumerate() {
        let damp = (std::f64::consts::FRAC_PI_2 * rollout.u[block]).cos();
        let mut diffs = Vec::with_capacity(x.len());
        for &xi in x {
            let psi = damp * xi;
            let real = gaussian_score(psi, damp * target_mu, sigma)?;
            let fake = gaussian_score(psi, damp * means[block], sigma)?;
            diffs.push(real - fake);
        }
        per_block.push(diffs);
    }
    Ok(ScoreDiffMap { per_block })
}

// ---------------------------------------------------------------------------
// Tapes and the two backward passes
// ---------------------------------------------------------------------------

/// Counts tape allocations so tests can pin down peak memory behaviour.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TapeMeter {
    live: usize,
    peak: usize,
}

impl TapeMeter {
    fn alloc(&mut self) {
        self.live += 1;
        self.peak = self.peak.max(self.live);
    }

    fn free(&mut self) {
        self.live -= 1;
    }

    pub fn live(&self) -> usize {
        self.live
    }

    pub fn peak(&self) -> usize {
        self.peak
    }
}

/// What one block's backward pass needs: its stop-gradient context and its
/// noise draw.
struct BlockTape {
    ctx: Vec<f64>,
    eps: Vec<f64>,
}

/// `d x / d theta` contracted with `-diff`:
/// `(-diff . ctx, -diff . eps, -sum(diff))`.
fn block_grad(tape: &BlockTape, diff: &[f64]) -> Theta {
    let mut g = Theta::ZERO;
    for ((&d, &c), &e) in diff.iter().zip(&tape.ctx).zip(&tape.eps) {
        g.a -= d * c;
        g.b -= d * e;
        g.c -= d;
    }
    g
}

fn add(acc: &mut Theta, g: Theta) {
    acc.a += g.a;
    acc.b += g.b;
    acc.c += g.c;
}

/// Backward pass that keeps every block tape until the end, then walks them
/// in reverse. Peak live tapes equals the block count.
pub fn monolithic_gradient(
    gen: &ToyGenerator,
    sample_seed: u64,
    target_mu: f64,
    sigma: f64,
) -> Result<(Theta, Rollout, TapeMeter), DistillError> {
    let mut meter = TapeMeter::default();
    let mut tapes = Vec::with_capacity(gen.blocks);
    let mut outputs = Vec::with_capacity(gen.blocks);
    let mut u = Vec::with_capacity(gen.blocks);
    let mut ctx = vec![0.0; gen.block_dim];
    for block in 0..gen.blocks {
        let (eps, ul) = block_draws(sample_seed, block, gen.block_dim);
        let x: Vec<f64> = ctx
            .iter()
            .zip(&eps)
            .map(|(&c, &e)| gen.theta.a * c + gen.theta.b * e + gen.theta.c)
            .collect();
        meter.alloc();
        tapes.push(BlockTape { ctx: ctx.clone(), eps });
        ctx = x.clone();
        outputs.push(x);
        u.push(ul);
    }
    let rollout = Rollout { outputs, u };
    let diffs = score_diff_maps(gen, &rollout, target_mu, sigma)?;
    let mut grad = Theta::ZERO;
    for block in (0..gen.blocks).rev() {
        add(&mut grad, block_grad(&tapes[block], &diffs.per_block[block]));
        meter.free();
    }
    Ok((grad, rollout, meter))
}

/// Backward pass that replays each block on demand: the rollout keeps only
/// the block outputs, and each tape is rebuilt from the previous block's
/// output and the re-derived noise, used, and dropped. Peak live tapes is 1
/// regardless of depth.
pub fn replay_accumulate(
    gen: &ToyGenerator,
    sample_seed: u64,
    target_mu: f64,
    sigma: f64,
) -> Result<(Theta, Rollout, TapeMeter), DistillError> {
    let rollout = self_rollout(gen, sample_seed);
    let diffs = score_diff_maps(gen, &rollout, target_mu, sigma)?;
    let mut meter = TapeMeter::default();
    let mut grad = Theta::ZERO;
    for block in 0..gen.blocks {
        let (eps, _) = block_draws(sample_seed, block, gen.block_dim);
        let ctx = if block == 0 {
            vec![0.0; gen.block_dim]
        } else {
            rollout.outputs[block - 1].clone()
        };
        meter.alloc();
        let tape = BlockTape { ctx, eps };
        add(&mut grad, block_grad(&tape, &diffs.per_block[block]));
        drop(tape);
        meter.free();
    }
    Ok((grad, rollout, meter))
}

// ---------------------------------------------------------------------------
// Fitting demo
// ---------------------------------------------------------------------------

/// Settings for the small fitting run; the defaults converge in well under
/// a hundred steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoConfig {
    pub target_mu: f64,
    pub sigma: f64,
    pub max_steps: usize,
    pub learning_rate: f64,
    pub blocks: usize,
    pub block_dim: usize,
    pub batch: usize,
    pub initial_theta: Theta,
    pub seed: u64,
    /// Stop once the batch sample mean is this close to the target.
    pub convergence_tol: f64,
    /// Abort with an error if `|theta_c|` passes this.
    pub abort_threshold: f64,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            target_mu: 3.0,
            sigma: 1.0,
            max_steps: 500,
            learning_rate: 0.1,
            blocks: 4,
            block_dim: 2,
            batch: 64,
            initial_theta: Theta { a: 0.05, b: 0.02, c: 0.0 },
            seed: 0,
            convergence_tol: 1e-2,
            abort_threshold: 1e6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemoStep {
    pub step: usize,
    pub theta_c: f64,
    pub sample_mean: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoReport {
    pub history: Vec<DemoStep>,
    /// First step whose batch mean fell within the tolerance, if any.
    pub converged_at: Option<usize>,
    pub final_theta: Theta,
}

fn sample_seed_for(base: u64, step: usize, sample: usize) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((step as u64) << 24)
        .wrapping_add(sample as u64)
}

/// Fit the generator's offset `theta_c` to pull its sample mean onto the
/// target, using the replayed backward pass for every gradient.
pub fn dmd_fit_demo(config: &DemoConfig) -> Result<DemoReport, DistillError> {
    if config.max_steps == 0 || config.batch == 0 {
        return Err(DistillError::BadConfig("need at least one step and one sample".into()));
    }
    if !(config.learning_rate.is_finite()
        && config.convergence_tol > 0.0
        && config.abort_threshold > 0.0)
    {
        return Err(DistillError::BadConfig("bad rate or thresholds".into()));
    }
    let mut gen = ToyGenerator::new(config.initial_theta, config.blocks, config.block_dim)?;
    let mut history = Vec::new();
    let mut converged_at = None;
    for step in 0..config.max_steps {
        let mut grad = Theta::ZERO;
        let mut mean = 0.0;
        for sample in 0..config.batch {
            let seed = sample_seed_for(config.seed, step, sample);
            let (g, rollout, _) = replay_accumulate(&gen, seed, config.target_mu, config.sigma)?;
            add(&mut grad, g);
            let total: f64 = rollout.outputs.iter().flatten().sum();
            mean += total / (config.blocks * config.block_dim) as f64;
        }
        let scale = 1.0 / config.batch as f64;
        grad.a *= scale;
        grad.b *= scale;
        grad.c *= scale;
        mean *= scale;

        gen.theta.c -= config.learning_rate * grad.c;
        if !gen.theta.c.is_finite() || gen.theta.c.abs() > config.abort_threshold {
            return Err(DistillError::Diverged { step, theta_c: gen.theta.c });
        }
        history.push(DemoStep { step, theta_c: gen.theta.c, sample_mean: mean, grad_norm: grad.norm() });
        if (mean - config.target_mu).abs() < config.convergence_tol {
            converged_at = Some(step);
            break;
        }
    }
    Ok(DemoReport { history, converged_at, final_theta: gen.theta })
}
