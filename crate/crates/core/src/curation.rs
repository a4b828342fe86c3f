//! Clip curation: motion-quality scores, time-reverse (palindrome)
//! augmentation, greedy action balancing and caption segment lookup.

use crate::action::{ActionSequence, ACTION_DIM};
use crate::trajectory::Trajectory;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Captions are attached to fixed-length segments of this many seconds.
pub const CAPTION_SEGMENT_SECONDS: f64 = 5.0;

#[derive(Debug, Error)]
pub enum CurationError {
    #[error("palindrome needs at least 4 frames, got {0}")]
    TooShortForPalindrome(usize),
    #[error("pivot {pivot} outside valid range [{min}, {max}] for {frames} frames")]
    BadPivot { pivot: usize, min: usize, max: usize, frames: usize },
    #[error("clip pool is empty")]
    EmptyPool,
    #[error("target distribution invalid: {0}")]
    BadTarget(String),
    #[error("clip {clip_id}: action histogram is all zero")]
    EmptyHistogram { clip_id: String },
    #[error("caption segments invalid: {0}")]
    BadSegments(String),
    #[error("sample start {start} s outside caption coverage [0, {coverage}) s")]
    CaptionOutOfRange { start: f64, coverage: f64 },
    #[error("line {line}: {detail}")]
    MalformedRecord { line: usize, detail: String },
}

// ---------------------------------------------------------------------------
// Motion-quality scores
// ---------------------------------------------------------------------------

/// Scores used to filter jittery, erratic or over-fast clips.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterScores {
    /// RMS of the second differences of position, over d-bar.
    pub jitter: f64,
    /// Coefficient of variation of the nonzero per-frame speeds.
    pub velocity_cv: f64,
    /// Largest per-frame rotation angle times the frame rate, rad/s.
    pub max_angular_speed: f64,
    /// True when the clip shows no motion at all; scores are then 0.
    pub degenerate: bool,
}

/// Compute the filter scores for one clip.
pub fn filter_scores(traj: &Trajectory) -> FilterScores {
    let n = traj.len();
    let mut displacements = Vec::with_capacity(n - 1);
    let mut any_rotation = false;
    let mut max_angle = 0.0_f64;
    for w in traj.poses.windows(2) {
        displacements.push((w[1].position - w[0].position).norm());
        // Bitwise-equal quaternions short-circuit to an exact zero angle;
        // the acos route would report ~1e-8 for them.
        let angle = if w[0].rotation.coords == w[1].rotation.coords {
            0.0
        } else {
            (w[1].rotation * w[0].rotation.inverse()).angle()
        };
        any_rotation |= angle > 0.0;
        max_angle = max_angle.max(angle);
    }

    let nonzero: Vec<f64> = displacements.iter().copied().filter(|&d| d > 0.0).collect();
    if nonzero.is_empty() && !any_rotation {
        return FilterScores { jitter: 0.0, velocity_cv: 0.0, max_angular_speed: 0.0, degenerate: true };
    }
    let mean_step =
        if nonzero.is_empty() { 1.0 } else { nonzero.iter().sum::<f64>() / nonzero.len() as f64 };

    let jitter = if n < 3 {
        0.0
    } else {
        let mut acc = 0.0;
        for w in traj.poses.windows(3) {
            let second = w[2].position - 2.0 * w[1].position + w[0].position;
            acc += second.norm_squared();
        }
        (acc / (n - 2) as f64).sqrt() / mean_step
    };

    let velocity_cv = if nonzero.is_empty() {
        0.0
    } else {
        let mean = mean_step;
        let var = nonzero.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / nonzero.len() as f64;
        var.sqrt() / mean
    };

    FilterScores {
        jitter,
        velocity_cv,
        max_angular_speed: max_angle * traj.frame_rate,
        degenerate: false,
    }
}

// ---------------------------------------------------------------------------
// Time-reverse augmentation
// ---------------------------------------------------------------------------

/// A palindromic reindexing of a clip: frames 0..=pivot forward, then the
/// mirror image walking back just far enough to restore the original length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Palindrome {
    /// 0-based source frame indices, exactly `frames` of them.
    pub indices: Vec<usize>,
    /// 0-based pivot frame; it appears exactly once.
    pub pivot: usize,
}

/// Smallest pivot whose mirrored tail still stays inside the clip.
fn min_pivot(frames: usize) -> usize {
    (frames - 1).div_ceil(2)
}

/// Deterministic palindrome for a chosen pivot.
pub fn palindrome_indices(frames: usize, pivot: usize) -> Result<Palindrome, CurationError> {
    if frames < 4 {
        return Err(CurationError::TooShortForPalindrome(frames));
    }
    let (min, max) = (min_pivot(frames), frames - 1);
    if pivot < min || pivot > max {
        return Err(CurationError::BadPivot { pivot, min, max, frames });
    }
    let mut indices: Vec<usize> = (0..=pivot).collect();
    indices.extend((2 * pivot + 1 - frames..pivot).rev());
    debug_assert_eq!(indices.len(), frames);
    Ok(Palindrome { indices, pivot })
}

/// Sample a palindrome with the pivot drawn uniformly from the valid upper
/// half of the clip.
pub fn time_reverse_augment(
    frames: usize,
    rng: &mut impl Rng,
) -> Result<Palindrome, CurationError> {
    if frames < 4 {
        return Err(CurationError::TooShortForPalindrome(frames));
    }
    let pivot = rng.gen_range(min_pivot(frames)..frames);
    palindrome_indices(frames, pivot)
}

// ---------------------------------------------------------------------------
// Clip metadata and balancing
// ---------------------------------------------------------------------------

/// One caption covering a 5-second span starting at `start`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionSegment {
    pub start: f64,
    pub text: String,
}

/// Per-clip record as stored in a curation manifest (JSON lines).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipMetadata {
    pub clip_id: String,
    /// Seconds.
    pub duration: f64,
    /// Frame counts per action slot; sums to the clip frame count.
    pub action_histogram: [u64; ACTION_DIM],
    pub jitter_score: f64,
    pub velocity_cv: f64,
    #[serde(default)]
    pub caption_segments: Vec<CaptionSegment>,
}

/// Count each frame under its strongest slot (static frames under static).
/// Ties go to the earlier slot, so the counts sum to the frame count.
pub fn action_histogram(seq: &ActionSequence) -> [u64; ACTION_DIM] {
    let mut hist = [0u64; ACTION_DIM];
    for action in &seq.actions {
        let a = action.as_array();
        let mut best = 0usize;
        for (i, &v) in a.iter().enumerate() {
            if v > a[best] {
                best = i;
            }
        }
        hist[best] += 1;
    }
    hist
}

/// Result of greedy balancing: which clips were taken (as indices into the
/// input pool, in selection order) and the distribution they achieve.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceOutcome {
    pub selected: Vec<usize>,
    pub achieved: [f64; ACTION_DIM],
}

fn normalized(hist: &[u64; ACTION_DIM]) -> Option<[f64; ACTION_DIM]> {
    let total: u64 = hist.iter().sum();
    (total > 0).then(|| {
        let mut out = [0.0; ACTION_DIM];
        for (o, &h) in out.iter_mut().zip(hist.iter()) {
            *o = h as f64 / total as f64;
        }
        out
    })
}

fn l1(a: &[f64; ACTION_DIM], b: &[f64; ACTION_DIM]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum()
}

/// Greedily pick a subset of clips whose pooled action histogram comes as
/// close to `target` (proportions summing to 1) as single additions allow.
///
/// Candidates are scanned in an order shuffled by `rng`, so results are
/// deterministic for a fixed seed. Selection stops when no remaining clip
/// strictly improves the L1 distance to the target.
pub fn balance_sample(
    clips: &[ClipMetadata],
    target: &[f64; ACTION_DIM],
    rng: &mut impl Rng,
) -> Result<BalanceOutcome, CurationError> {
    if clips.is_empty() {
        return Err(CurationError::EmptyPool);
    }
    let sum: f64 = target.iter().sum();
    if target.iter().any(|&t| !t.is_finite() || t < 0.0) {
        return Err(CurationError::BadTarget("entries must be finite and nonnegative".into()));
    }
    if (sum - 1.0).abs() > 1e-6 {
        return Err(CurationError::BadTarget(format!("proportions sum to {sum}, expected 1")));
    }
    for clip in clips {
        if clip.action_histogram.iter().all(|&h| h == 0) {
            return Err(CurationError::EmptyHistogram { clip_id: clip.clip_id.clone() });
        }
    }

    let mut order: Vec<usize> = (0..clips.len()).collect();
    // Fisher-Yates driven by the caller's seeded rng; ties in the greedy
    // scan resolve to whichever candidate this order visits first.
    for i in (1..order.len()).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }

    let mut selected = Vec::new();
    let mut taken = vec![false; clips.len()];
    let mut cumulative = [0u64; ACTION_DIM];
    let mut current_l1 = f64::INFINITY;
    loop {
        let mut best: Option<(usize, f64)> = None;
        for &i in &order {
            if taken[i] {
                continue;
            }
            let mut trial = cumulative;
            for (t, &h) in trial.iter_mut().zip(clips[i].action_histogram.iter()) {
                *t += h;
            }
            let dist = l1(&normalized(&trial).expect("nonzero histogram"), target);
            if best.map_or(true, |(_, d)| dist < d) {
                best = Some((i, dist));
            }
        }
        match best {
            Some((i, dist)) if dist < current_l1 => {
                taken[i] = true;
                selected.push(i);
                for (t, &h) in cumulative.iter_mut().zip(clips[i].action_histogram.iter()) {
                    *t += h;
                }
                current_l1 = dist;
            }
            _ => break,
        }
    }
    let achieved = normalized(&cumulative).expect("at least one clip selected");
    Ok(BalanceOutcome { selected, achieved })
}

// ---------------------------------------------------------------------------
// Caption lookup
// ---------------------------------------------------------------------------

/// Pick the caption segment covering `sample_start` seconds, assuming the
/// standard 5-second segment grid.
pub fn select_caption(
    segments: &[CaptionSegment],
    sample_start: f64,
) -> Result<usize, CurationError> {
    select_caption_with_len(segments, sample_start, CAPTION_SEGMENT_SECONDS)
}

/// Same as [`select_caption`] with an explicit segment length.
pub fn select_caption_with_len(
    segments: &[CaptionSegment],
    sample_start: f64,
    segment_len: f64,
) -> Result<usize, CurationError> {
    if !(segment_len.is_finite() && segment_len > 0.0) {
        return Err(CurationError::BadSegments(format!("segment length {segment_len}")));
    }
    if segments.is_empty() {
        return Err(CurationError::BadSegments("no segments".into()));
    }
    for (k, seg) in segments.iter().enumerate() {
        if (seg.start - k as f64 * segment_len).abs() > 1e-9 {
            return Err(CurationError::BadSegments(format!(
                "segment {k} starts at {} s, expected {} s",
                seg.start,
                k as f64 * segment_len
            )));
        }
    }
    let coverage = segments.len() as f64 * segment_len;
    if !sample_start.is_finite() || sample_start < 0.0 || sample_start >= coverage {
        return Err(CurationError::CaptionOutOfRange { start: sample_start, coverage });
    }
    Ok((sample_start / segment_len).floor() as usize)
}

// ---------------------------------------------------------------------------
// Manifest format (JSON lines)
// ---------------------------------------------------------------------------

pub fn parse_manifest(text: &str) -> Result<Vec<ClipMetadata>, CurationError> {
    let mut clips = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let clip: ClipMetadata = serde_json::from_str(line)
            .map_err(|e| CurationError::MalformedRecord { line: i + 1, detail: e.to_string() })?;
        clips.push(clip);
    }
    Ok(clips)
}

pub fn write_manifest(clips: &[ClipMetadata]) -> String {
    let mut out = String::new();
    for clip in clips {
        out.push_str(&serde_json::to_string(clip).expect("manifest serialization"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::ActionSlot;
    use crate::trajectory::{euler_compose, CameraPose, EulerAngles};
    use nalgebra::{UnitQuaternion, Vector3};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn line_with(perturb: impl Fn(usize) -> f64) -> Trajectory {
        let poses = (0..40)
            .map(|i| {
                CameraPose::new(
                    Vector3::new(i as f64, perturb(i), 0.0),
                    UnitQuaternion::identity(),
                    i as f64 / 16.0,
                )
            })
            .collect();
        Trajectory::new("t", 16.0, poses).unwrap()
    }

    #[test]
    fn constant_velocity_line_scores_zero_jitter_and_cv() {
        let scores = filter_scores(&line_with(|_| 0.0));
        assert_eq!(scores.jitter, 0.0);
        assert_eq!(scores.velocity_cv, 0.0);
        assert_eq!(scores.max_angular_speed, 0.0);
        assert!(!scores.degenerate);
    }

    #[test]
    fn sinusoidal_perturbation_matches_a_brute_force_second_difference_oracle() {
        let traj = line_with(|i| 0.05 * (0.7 * i as f64).sin());
        let scores = filter_scores(&traj);

        // Oracle: recompute from raw positions with plain loops.
        let pos: Vec<Vector3<f64>> = traj.poses.iter().map(|p| p.position).collect();
        let mut steps = Vec::new();
        for i in 1..pos.len() {
            steps.push((pos[i] - pos[i - 1]).norm());
        }
        let dbar = steps.iter().sum::<f64>() / steps.len() as f64;
        let mut acc = 0.0;
        for i in 1..pos.len() - 1 {
            acc += (pos[i + 1] - 2.0 * pos[i] + pos[i - 1]).norm_squared();
        }
        let expected = (acc / (pos.len() - 2) as f64).sqrt() / dbar;
        assert!((scores.jitter - expected).abs() < 1e-9);
        assert!(scores.jitter > 0.0);
    }

    #[test]
    fn max_angular_speed_sees_the_fastest_turn() {
        let slow = euler_compose(&EulerAngles::new(0.01, 0.0, 0.0));
        let fast = euler_compose(&EulerAngles::new(0.2, 0.0, 0.0));
        let rots = [
            UnitQuaternion::identity(),
            slow,
            fast * slow,
            renorm(slow * fast * slow),
        ];
        let poses = rots
            .iter()
            .enumerate()
            .map(|(i, r)| CameraPose::new(Vector3::new(i as f64, 0.0, 0.0), *r, i as f64 / 16.0))
            .collect();
        let traj = Trajectory::new("rot", 16.0, poses).unwrap();
        let scores = filter_scores(&traj);
        assert!((scores.max_angular_speed - 0.2 * 16.0).abs() < 1e-9);
    }

    fn renorm(q: UnitQuaternion<f64>) -> UnitQuaternion<f64> {
        crate::trajectory::renormalize(q)
    }

    #[test]
    fn motionless_clip_is_degenerate_with_zero_scores() {
        let poses = (0..6)
            .map(|i| CameraPose::new(Vector3::zeros(), UnitQuaternion::identity(), i as f64))
            .collect();
        let traj = Trajectory::new("frozen", 16.0, poses).unwrap();
        let scores = filter_scores(&traj);
        assert!(scores.degenerate);
        assert_eq!((scores.jitter, scores.velocity_cv, scores.max_angular_speed), (0.0, 0.0, 0.0));
    }

    #[test]
    fn scores_are_invariant_to_rigid_motion_and_uniform_scale() {
        let traj = line_with(|i| 0.3 * (0.5 * i as f64).sin());
        let base = filter_scores(&traj);
        let rot = euler_compose(&EulerAngles::new(1.1, 0.4, -0.7));
        let mut moved = traj.clone();
        for p in moved.poses.iter_mut() {
            p.position = 5.0 * (rot.inverse() * p.position) + Vector3::new(3.0, -2.0, 9.0);
            p.rotation = renorm(p.rotation * rot);
        }
        let transformed = filter_scores(&moved);
        assert!((base.jitter - transformed.jitter).abs() < 1e-9);
        assert!((base.velocity_cv - transformed.velocity_cv).abs() < 1e-9);
        assert!((base.max_angular_speed - transformed.max_angular_speed).abs() < 1e-9);
    }

    #[test]
    fn forced_pivot_reproduces_the_reference_palindrome() {
        // 8 frames, pivot at the 6th frame: forward run then two mirrored.
        let p = palindrome_indices(8, 5).unwrap();
        assert_eq!(p.indices, vec![0, 1, 2, 3, 4, 5, 4, 3]);
        // Pivot at the last frame degenerates to the identity order.
        let p = palindrome_indices(4, 3).unwrap();
        assert_eq!(p.indices, vec![0, 1, 2, 3]);
    }

    #[test]
    fn palindromes_have_exact_length_and_mirrored_suffix_for_every_valid_pivot() {
        for frames in 4..=64 {
            for pivot in min_pivot(frames)..frames {
                let p = palindrome_indices(frames, pivot).unwrap();
                assert_eq!(p.indices.len(), frames);
                assert_eq!(p.indices.iter().filter(|&&i| i == pivot).count(), 1);
                assert!(p.indices.iter().all(|&i| i < frames));
                for k in 1..frames - pivot {
                    assert_eq!(p.indices[pivot + k], p.indices[pivot - k]);
                }
            }
        }
    }

    #[test]
    fn palindrome_rejects_short_clips_and_bad_pivots() {
        assert!(matches!(palindrome_indices(3, 2), Err(CurationError::TooShortForPalindrome(3))));
        assert!(matches!(palindrome_indices(8, 3), Err(CurationError::BadPivot { .. })));
        assert!(matches!(palindrome_indices(8, 8), Err(CurationError::BadPivot { .. })));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            time_reverse_augment(2, &mut rng),
            Err(CurationError::TooShortForPalindrome(2))
        ));
    }

    #[test]
    fn sampled_pivots_cover_exactly_the_valid_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..10_000 {
            let p = time_reverse_augment(8, &mut rng).unwrap();
            seen.insert(p.pivot);
        }
        assert_eq!(seen.into_iter().collect::<Vec<_>>(), vec![4, 5, 6, 7]);
    }

    fn clip(id: &str, hist: [u64; ACTION_DIM]) -> ClipMetadata {
        ClipMetadata {
            clip_id: id.into(),
            duration: hist.iter().sum::<u64>() as f64 / 16.0,
            action_histogram: hist,
            jitter_score: 0.1,
            velocity_cv: 0.2,
            caption_segments: vec![],
        }
    }

    fn hist_of(pairs: &[(ActionSlot, u64)]) -> [u64; ACTION_DIM] {
        let mut h = [0u64; ACTION_DIM];
        for &(slot, count) in pairs {
            h[slot as usize] = count;
        }
        h
    }

    #[test]
    fn two_complementary_clips_are_both_selected_for_a_uniform_two_slot_target() {
        let clips = vec![
            clip("a", hist_of(&[(ActionSlot::DollyIn, 10)])),
            clip("b", hist_of(&[(ActionSlot::PanLeft, 10)])),
        ];
        let mut target = [0.0; ACTION_DIM];
        target[ActionSlot::DollyIn as usize] = 0.5;
        target[ActionSlot::PanLeft as usize] = 0.5;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = balance_sample(&clips, &target, &mut rng).unwrap();
        let mut ids = out.selected.clone();
        ids.sort_unstable();
        assert_eq!(ids, vec![0, 1]);
        assert!((out.achieved[ActionSlot::DollyIn as usize] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_clip_pools_select_that_clip_and_empty_pools_error() {
        let clips = vec![clip("only", hist_of(&[(ActionSlot::Static, 4)]))];
        let mut target = [0.0; ACTION_DIM];
        target[ActionSlot::DollyIn as usize] = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let out = balance_sample(&clips, &target, &mut rng).unwrap();
        assert_eq!(out.selected, vec![0]);
        assert!(matches!(
            balance_sample(&[], &target, &mut rng),
            Err(CurationError::EmptyPool)
        ));
    }

    #[test]
    fn greedy_beats_the_raw_pool_and_is_bracketed_by_the_exhaustive_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for trial in 0..20 {
            let n = 5 + (trial % 8);
            let clips: Vec<ClipMetadata> = (0..n)
                .map(|i| {
                    let mut h = [0u64; ACTION_DIM];
                    let a = rng.gen_range(0..ACTION_DIM);
                    let b = rng.gen_range(0..ACTION_DIM);
                    h[a] += rng.gen_range(1..20);
                    h[b] += rng.gen_range(0..20);
                    clip(&format!("c{i}"), h)
                })
                .collect();
            let target = [1.0 / ACTION_DIM as f64; ACTION_DIM];

            let mut greedy_rng = ChaCha8Rng::seed_from_u64(trial as u64);
            let out = balance_sample(&clips, &target, &mut greedy_rng).unwrap();

            // Exhaustive oracle over all nonempty subsets.
            let mut best = f64::INFINITY;
            for mask in 1u32..(1 << n) {
                let mut h = [0u64; ACTION_DIM];
                for (i, c) in clips.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        for (t, &v) in h.iter_mut().zip(c.action_histogram.iter()) {
                            *t += v;
                        }
                    }
                }
                best = best.min(l1(&normalized(&h).unwrap(), &target));
            }
            let mut pool = [0u64; ACTION_DIM];
            for c in &clips {
                for (t, &v) in pool.iter_mut().zip(c.action_histogram.iter()) {
                    *t += v;
                }
            }
            let pool_l1 = l1(&normalized(&pool).unwrap(), &target);
            let achieved_l1 = l1(&out.achieved, &target);
            assert!(achieved_l1 <= pool_l1 + 1e-12, "trial {trial}");
            assert!(achieved_l1 >= best - 1e-12, "trial {trial}");
        }
    }

    #[test]
    fn balancing_a_skewed_pool_reduces_the_max_to_min_slot_ratio() {
        let mut clips = Vec::new();
        for i in 0..60 {
            clips.push(clip(&format!("dolly{i}"), hist_of(&[(ActionSlot::DollyIn, 20)])));
        }
        for i in 0..20 {
            clips.push(clip(&format!("pan{i}"), hist_of(&[(ActionSlot::PanLeft, 20)])));
        }
        for i in 0..20 {
            clips.push(clip(
                &format!("mix{i}"),
                hist_of(&[(ActionSlot::PedestalUp, 10), (ActionSlot::PanLeft, 10)]),
            ));
        }
        let mut target = [0.0; ACTION_DIM];
        for slot in [ActionSlot::DollyIn, ActionSlot::PanLeft, ActionSlot::PedestalUp] {
            target[slot as usize] = 1.0 / 3.0;
        }
        let ratio = |dist: &[f64; ACTION_DIM]| {
            let active: Vec<f64> =
                [ActionSlot::DollyIn, ActionSlot::PanLeft, ActionSlot::PedestalUp]
                    .iter()
                    .map(|s| dist[*s as usize])
                    .collect();
            let max = active.iter().cloned().fold(f64::MIN, f64::max);
            let min = active.iter().cloned().fold(f64::MAX, f64::min);
            max / min
        };
        let mut pool = [0u64; ACTION_DIM];
        for c in &clips {
            for (t, &v) in pool.iter_mut().zip(c.action_histogram.iter()) {
                *t += v;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let out = balance_sample(&clips, &target, &mut rng).unwrap();
        assert!(ratio(&out.achieved) <= ratio(&normalized(&pool).unwrap()));
        assert!(ratio(&out.achieved) < 1.6);
    }

    #[test]
    fn balancing_is_deterministic_for_a_fixed_seed() {
        let clips: Vec<ClipMetadata> = (0..10)
            .map(|i| clip(&format!("c{i}"), hist_of(&[(ActionSlot::ALL[i], 5 + i as u64)])))
            .collect();
        let target = [1.0 / ACTION_DIM as f64; ACTION_DIM];
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            balance_sample(&clips, &target, &mut rng).unwrap()
        };
        assert_eq!(run(5), run(5));
    }

    #[test]
    fn caption_lookup_matches_a_linear_scan_and_rejects_out_of_range_starts() {
        let segments: Vec<CaptionSegment> = (0..4)
            .map(|k| CaptionSegment { start: k as f64 * 5.0, text: format!("seg{k}") })
            .collect();
        assert_eq!(select_caption(&segments, 7.3).unwrap(), 1);
        assert_eq!(select_caption(&segments, 0.0).unwrap(), 0);
        // Linear-scan oracle across the covered span.
        for i in 0..200 {
            let start = i as f64 * 0.1;
            let idx = select_caption(&segments, start).unwrap();
            let oracle = segments
                .iter()
                .position(|s| start >= s.start && start < s.start + 5.0)
                .unwrap();
            assert_eq!(idx, oracle, "start {start}");
        }
        assert!(matches!(
            select_caption(&segments[..2], 10.0),
            Err(CurationError::CaptionOutOfRange { .. })
        ));
        assert!(matches!(
            select_caption(&segments, -0.1),
            Err(CurationError::CaptionOutOfRange { .. })
        ));
        let bad = vec![CaptionSegment { start: 1.0, text: "x".into() }];
        assert!(matches!(select_caption(&bad, 0.5), Err(CurationError::BadSegments(_))));
    }

    #[test]
    fn manifest_round_trips_and_reports_bad_lines() {
        let clips = vec![
            clip("a", hist_of(&[(ActionSlot::DollyIn, 3)])),
            clip("b", hist_of(&[(ActionSlot::Static, 2)])),
        ];
        let text = write_manifest(&clips);
        assert_eq!(parse_manifest(&text).unwrap(), clips);
        let err = parse_manifest("{\"clip_id\": 3}\n").unwrap_err();
        assert!(matches!(err, CurationError::MalformedRecord { line: 1, .. }));
    }

    #[test]
    fn histogram_counts_every_frame_once() {
        use crate::action::{extract_actions, StaticThresholds};
        use crate::synthetic::{smooth_trajectory, SmoothTrajectoryParams};
        let traj = smooth_trajectory("h", 12, &SmoothTrajectoryParams::default());
        let seq = extract_actions(&traj, &StaticThresholds::default()).unwrap();
        let hist = action_histogram(&seq);
        assert_eq!(hist.iter().sum::<u64>() as usize, seq.len());
    }
}
