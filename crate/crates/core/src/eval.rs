//! Trajectory evaluation: closed-form similarity alignment between point
//! sets and relative pose error between a reference and an estimated
//! camera trajectory.

use crate::trajectory::{renormalize, Trajectory};
use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("trajectories differ in length: {reference} vs {estimate}")]
    LengthMismatch { reference: usize, estimate: usize },
    #[error("alignment needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
}

/// Similarity transform `y = scale * rotation * x + translation` fitted in
/// the least-squares sense, with the fit's RMS residual.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult {
    pub scale: f64,
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
    pub residual_rms: f64,
}

/// Fit the similarity transform that best maps `source` onto `target`.
pub fn umeyama_sim3(
    source: &[Vector3<f64>],
    target: &[Vector3<f64>],
) -> Result<AlignmentResult, EvalError> {
    if source.len() != target.len() {
        return Err(EvalError::LengthMismatch { reference: target.len(), estimate: source.len() });
    }
    let n = source.len();
    if n < 3 {
        return Err(EvalError::TooFewPoints(n));
    }
    let nf = n as f64;
    let mu_s: Vector3<f64> = source.iter().sum::<Vector3<f64>>() / nf;
    let mu_t: Vector3<f64> = target.iter().sum::<Vector3<f64>>() / nf;

    let mut sigma_s = 0.0;
    let mut cov = Matrix3::zeros();
    for (x, y) in source.iter().zip(target) {
        let xs = x - mu_s;
        let yt = y - mu_t;
        sigma_s += xs.norm_squared();
        cov += yt * xs.transpose();
    }
    sigma_s /= nf;
    cov /= nf;
    if sigma_s <= f64::EPSILON {
        return Err(EvalError::DegenerateGeometry("source points coincide".into()));
    }

    let svd = cov.svd(true, true);
    let u = svd.u.expect("svd with u");
    let v_t = svd.v_t.expect("svd with v_t");
    let d = svd.singular_values;
    // Rank 1 leaves a one-parameter family of rotations (collinear points).
    if d[1] <= 1e-12 * d[0].max(1.0) {
        return Err(EvalError::DegenerateGeometry("points are collinear".into()));
    }
    let mut s = Vector3::new(1.0, 1.0, 1.0);
    if (u.determinant() * v_t.determinant()) < 0.0 {
        s[2] = -1.0;
    }
    let rotation_m = u * Matrix3::from_diagonal(&s) * v_t;
    let scale = d.dot(&s) / sigma_s;
    let translation = mu_t - scale * (rotation_m * mu_s);
    let rotation = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(rotation_m));

    let mut residual = 0.0;
    for (x, y) in source.iter().zip(target) {
        residual += (y - (scale * (rotation_m * x) + translation)).norm_squared();
    }
    Ok(AlignmentResult { scale, rotation, translation, residual_rms: (residual / nf).sqrt() })
}

/// Apply a fitted similarity to a whole trajectory: positions move with the
/// transform, and the world side of every orientation rotates with it.
pub fn apply_alignment(traj: &Trajectory, alignment: &AlignmentResult) -> Trajectory {
    let mut out = traj.clone();
    let r_inv = alignment.rotation.inverse();
    for pose in out.poses.iter_mut() {
        pose.position = alignment.scale * (alignment.rotation * pose.position) + alignment.translation;
        pose.rotation = renormalize(pose.rotation * r_inv);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RpeReport {
    /// RMS norm of the per-step translation discrepancy, over the mean
    /// reference step length.
    pub rpe_trans: f64,
    /// Mean per-step rotation discrepancy, degrees.
    pub rpe_rot_deg: f64,
}

struct Increment {
    rotation: UnitQuaternion<f64>,
    translation: Vector3<f64>,
}

/// Per-step motion in the frame of the step's first camera.
fn increments(traj: &Trajectory) -> Vec<Increment> {
    traj.poses
        .windows(2)
        .map(|w| Increment {
            rotation: w[0].rotation * w[1].rotation.inverse(),
            translation: w[0].rotation * (w[1].position - w[0].position),
        })
        .collect()
}

/// Relative pose error of `estimate` against `reference`. With `align` the
/// estimate is first mapped onto the reference by the best-fit similarity
/// transform, making the report invariant to the estimate's gauge.
pub fn rpe(reference: &Trajectory, estimate: &Trajectory, align: bool) -> Result<RpeReport, EvalError> {
    if reference.len() != estimate.len() {
        return Err(EvalError::LengthMismatch {
            reference: reference.len(),
            estimate: estimate.len(),
        });
    }
    let aligned;
    let estimate = if align {
        let src: Vec<Vector3<f64>> = estimate.poses.iter().map(|p| p.position).collect();
        let dst: Vec<Vector3<f64>> = reference.poses.iter().map(|p| p.position).collect();
        aligned = apply_alignment(estimate, &umeyama_sim3(&src, &dst)?);
        &aligned
    } else {
        estimate
    };

    let d_ref = increments(reference);
    let d_est = increments(estimate);
    let scale = reference.mean_nonzero_step().unwrap_or(1.0);
    let mut trans_sq = 0.0;
    let mut rot_sum = 0.0;
    for (r, e) in d_ref.iter().zip(&d_est) {
        let rot_err = r.rotation.inverse() * e.rotation;
        let trans_err = r.rotation.inverse() * (e.translation - r.translation);
        trans_sq += trans_err.norm_squared();
        rot_sum += if r.rotation.coords == e.rotation.coords { 0.0 } else { rot_err.angle() };
    }
    let steps = d_ref.len() as f64;
    Ok(RpeReport {
        rpe_trans: (trans_sq / steps).sqrt() / scale,
        rpe_rot_deg: (rot_sum / steps).to_degrees(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{smooth_trajectory, SmoothTrajectoryParams};
    use crate::trajectory::{euler_compose, CameraPose, EulerAngles};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(n: usize, seed: u64) -> Vec<Vector3<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| Vector3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0))).collect()
    }

    #[test]
    fn identical_point_sets_align_with_the_identity() {
        let pts = cloud(12, 1);
        let a = umeyama_sim3(&pts, &pts).unwrap();
        assert!((a.scale - 1.0).abs() < 1e-12);
        assert!(a.rotation.angle() < 1e-9);
        assert!(a.translation.norm() < 1e-12);
        assert!(a.residual_rms < 1e-12);
    }

    #[test]
    fn recovers_a_synthesized_similarity_exactly() {
        let src = cloud(30, 2);
        let rot = euler_compose(&EulerAngles::new(0.8, -0.3, 1.4));
        let t = Vector3::new(4.0, -1.0, 2.5);
        let dst: Vec<Vector3<f64>> = src.iter().map(|p| 2.0 * (rot * p) + t).collect();
        let a = umeyama_sim3(&src, &dst).unwrap();
        assert!((a.scale - 2.0).abs() < 1e-9);
        assert!(a.rotation.angle_to(&rot) < 1e-9);
        assert!((a.translation - t).norm() < 1e-9);
        assert!(a.residual_rms < 1e-9);
    }

    #[test]
    fn noise_shows_up_in_the_residual_at_its_own_scale() {
        let amp = 1e-3;
        for trial in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + trial);
            let src = cloud(60, 200 + trial);
            let rot = euler_compose(&EulerAngles::new(0.2, 0.5, -0.9));
            let dst: Vec<Vector3<f64>> = src
                .iter()
                .map(|p| {
                    let noise = Vector3::new(
                        rng.gen_range(-amp..amp),
                        rng.gen_range(-amp..amp),
                        rng.gen_range(-amp..amp),
                    );
                    1.5 * (rot * p) + Vector3::new(1.0, 2.0, 3.0) + noise
                })
                .collect();
            let a = umeyama_sim3(&src, &dst).unwrap();
            // Uniform +-amp noise per axis has RMS norm amp / sqrt(3) * sqrt(3) = amp.
            assert!(a.residual_rms > 0.3 * amp, "trial {trial}: {}", a.residual_rms);
            assert!(a.residual_rms < 2.0 * amp, "trial {trial}: {}", a.residual_rms);
            assert!((a.scale - 1.5).abs() < 1e-3);
        }
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let line: Vec<Vector3<f64>> = (0..10).map(|i| Vector3::new(i as f64, 0.0, 0.0)).collect();
        let shifted: Vec<Vector3<f64>> = line.iter().map(|p| p + Vector3::new(0.0, 1.0, 0.0)).collect();
        assert!(matches!(umeyama_sim3(&line, &shifted), Err(EvalError::DegenerateGeometry(_))));
        let same = vec![Vector3::new(1.0, 1.0, 1.0); 5];
        assert!(matches!(umeyama_sim3(&same, &same), Err(EvalError::DegenerateGeometry(_))));
        let two = cloud(2, 3);
        assert!(matches!(umeyama_sim3(&two, &two), Err(EvalError::TooFewPoints(2))));
        let a = cloud(5, 4);
        let b = cloud(6, 5);
        assert!(matches!(umeyama_sim3(&a, &b), Err(EvalError::LengthMismatch { .. })));
    }

    #[test]
    fn identical_trajectories_score_zero() {
        let traj = smooth_trajectory("ref", 9, &SmoothTrajectoryParams::default());
        let report = rpe(&traj, &traj, false).unwrap();
        assert_eq!(report.rpe_trans, 0.0);
        assert_eq!(report.rpe_rot_deg, 0.0);
    }

    #[test]
    fn a_constant_world_shift_cancels_in_the_increments() {
        let traj = smooth_trajectory("ref", 10, &SmoothTrajectoryParams::default());
        let mut shifted = traj.clone();
        for p in shifted.poses.iter_mut() {
            p.position += Vector3::new(10.0, -4.0, 2.0);
        }
        let report = rpe(&traj, &shifted, false).unwrap();
        assert!(report.rpe_trans < 1e-12);
        assert!(report.rpe_rot_deg < 1e-12);
    }

    #[test]
    fn alternating_position_error_of_known_size_is_reported_exactly() {
        // Identity orientations, unit forward steps; the estimate displaces
        // every other position sideways by e, so each step's discrepancy
        // has norm exactly e and the mean reference step is exactly 1.
        let make = |offset: f64| {
            let poses: Vec<CameraPose> = (0..9)
                .map(|i| {
                    let bump = if i % 2 == 1 { offset } else { 0.0 };
                    CameraPose::new(
                        Vector3::new(i as f64, bump, 0.0),
                        UnitQuaternion::identity(),
                        i as f64,
                    )
                })
                .collect();
            Trajectory::new("t", 16.0, poses).unwrap()
        };
        let reference = make(0.0);
        let estimate = make(0.25);
        let report = rpe(&reference, &estimate, false).unwrap();
        assert!((report.rpe_trans - 0.25).abs() < 1e-12);
        assert_eq!(report.rpe_rot_deg, 0.0);
    }

    #[test]
    fn a_constant_yaw_bias_per_step_reports_exactly_that_angle() {
        let reference = smooth_trajectory("ref", 21, &SmoothTrajectoryParams::default());
        let beta = 0.01_f64;
        let bias = euler_compose(&EulerAngles::new(beta, 0.0, 0.0));
        let mut est_poses = vec![reference.poses[0].clone()];
        for w in reference.poses.windows(2) {
            let step = w[1].rotation * w[0].rotation.inverse();
            let prev = est_poses.last().unwrap().clone();
            let mut next = w[1].clone();
            // Compose the reference step with an extra fixed-axis turn.
            next.rotation = renormalize(bias * step * prev.rotation);
            next.position = w[1].position;
            est_poses.push(next);
        }
        let estimate = Trajectory::new("est", reference.frame_rate, est_poses).unwrap();
        let report = rpe(&reference, &estimate, false).unwrap();
        assert!(
            (report.rpe_rot_deg - beta.to_degrees()).abs() < 1e-9,
            "got {} want {}",
            report.rpe_rot_deg,
            beta.to_degrees()
        );
    }

    #[test]
    fn alignment_makes_the_report_invariant_to_a_similarity_transform() {
        for seed in 0..8 {
            let reference = smooth_trajectory("ref", seed, &SmoothTrajectoryParams::default());
            let transform = AlignmentResult {
                scale: 2.5,
                rotation: euler_compose(&EulerAngles::new(0.9, -0.4, 0.3)),
                translation: Vector3::new(-3.0, 7.0, 1.5),
                residual_rms: 0.0,
            };
            let estimate = apply_alignment(&reference, &transform);
            let raw = rpe(&reference, &estimate, false).unwrap();
            assert!(raw.rpe_trans > 0.1, "the gauge change must be visible unaligned");
            let aligned = rpe(&reference, &estimate, true).unwrap();
            assert!(aligned.rpe_trans < 1e-9, "seed {seed}: {}", aligned.rpe_trans);
            assert!(aligned.rpe_rot_deg < 1e-9, "seed {seed}: {}", aligned.rpe_rot_deg);
        }
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        let a = smooth_trajectory("a", 1, &SmoothTrajectoryParams::default());
        let b = smooth_trajectory("b", 1, &SmoothTrajectoryParams { frames: 32, ..Default::default() });
        assert!(matches!(rpe(&a, &b, false), Err(EvalError::LengthMismatch { .. })));
    }
}
