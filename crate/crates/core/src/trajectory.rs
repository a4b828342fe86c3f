//! Camera trajectory primitives: poses, relative motion, Euler angles and the
//! JSON annotation format used by the capture tooling.
//!
//! Rotations are stored as world-to-camera unit quaternions and converted to
//! matrices on demand, which avoids drift over long compositions. The working
//! frame is left handed with X forward, Y right and Z up: yaw turns about Z
//! (positive = camera turns right), pitch about Y (positive = camera tilts
//! up), roll about X (positive = clockwise), applied intrinsically in the
//! order yaw, pitch, roll.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Quaternion norms may deviate from 1 by at most this much before a parsed
/// rotation is rejected as non-orthonormal.
pub const ROTATION_NORM_TOLERANCE: f64 = 1e-6;

/// Below this deviation a parsed quaternion is kept bit for bit instead of
/// being renormalized, so serialize -> parse round trips exactly.
const RENORMALIZE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("malformed annotation document: {0}")]
    Malformed(String),
    #[error("frame {index}: rotation norm deviates from 1 by {deviation:.3e} (tolerance {ROTATION_NORM_TOLERANCE:.0e})")]
    NonOrthonormalRotation { index: usize, deviation: f64 },
    #[error("frame {index}: non-finite value in {field}")]
    NonFinite { index: usize, field: &'static str },
    #[error("frame {index}: timestamp {t} does not increase over previous {prev}")]
    NonMonotonicTimestamps { index: usize, t: f64, prev: f64 },
    #[error("degenerate clip: {frames} frame(s), need at least 2")]
    DegenerateClip { frames: usize },
    #[error("frame rate {0} must be finite and positive")]
    BadFrameRate(f64),
    #[error("matrix has determinant {det:.6} <= 0; reflections are not rotations")]
    Reflection { det: f64 },
}

/// Tag recording which Euler angle convention a decomposition used.
///
/// Only the game engine convention is implemented; the tag travels with the
/// angles so data from other sources can declare what it means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EulerConvention {
    /// Left handed, Z up, X forward; intrinsic yaw (Z), pitch (Y), roll (X).
    #[default]
    LeftHandedZUpYawPitchRoll,
}

/// Yaw, pitch and roll in radians under `convention`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAngles {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    pub convention: EulerConvention,
}

impl EulerAngles {
    pub fn new(yaw: f64, pitch: f64, roll: f64) -> Self {
        Self { yaw, pitch, roll, convention: EulerConvention::default() }
    }
}

/// A single camera sample: absolute position, world-to-camera rotation and a
/// timestamp in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraPose {
    pub position: Vector3<f64>,
    pub rotation: UnitQuaternion<f64>,
    pub timestamp: f64,
}

impl CameraPose {
    pub fn new(position: Vector3<f64>, rotation: UnitQuaternion<f64>, timestamp: f64) -> Self {
        Self { position, rotation, timestamp }
    }

    pub fn identity_at(timestamp: f64) -> Self {
        Self::new(Vector3::zeros(), UnitQuaternion::identity(), timestamp)
    }

    /// World-to-camera rotation matrix; rows are the camera forward, right
    /// and up axes expressed in world coordinates.
    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        *self.rotation.to_rotation_matrix().matrix()
    }
}

/// An ordered pose sequence with its source frame rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub clip_id: String,
    pub frame_rate: f64,
    pub poses: Vec<CameraPose>,
}

impl Trajectory {
    /// Validates the structural invariants: at least two frames, strictly
    /// increasing timestamps, positive finite frame rate.
    pub fn new(
        clip_id: impl Into<String>,
        frame_rate: f64,
        poses: Vec<CameraPose>,
    ) -> Result<Self, TrajectoryError> {
        if !(frame_rate.is_finite() && frame_rate > 0.0) {
            return Err(TrajectoryError::BadFrameRate(frame_rate));
        }
        if poses.len() < 2 {
            return Err(TrajectoryError::DegenerateClip { frames: poses.len() });
        }
        for (i, w) in poses.windows(2).enumerate() {
            if w[1].timestamp <= w[0].timestamp {
                return Err(TrajectoryError::NonMonotonicTimestamps {
                    index: i + 1,
                    t: w[1].timestamp,
                    prev: w[0].timestamp,
                });
            }
        }
        Ok(Self { clip_id: clip_id.into(), frame_rate, poses })
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    /// Mean of the nonzero per-frame displacement magnitudes, or `None` if
    /// every consecutive pair of positions coincides exactly.
    pub fn mean_nonzero_step(&self) -> Option<f64> {
        let mut sum = 0.0;
        let mut count = 0usize;
        for w in self.poses.windows(2) {
            let d = (w[1].position - w[0].position).norm();
            if d > 0.0 {
                sum += d;
                count += 1;
            }
        }
        (count > 0).then(|| sum / count as f64)
    }
}

/// Relative motion between two poses, expressed in the frame of the first
/// camera: `translation = R_a (P_b - P_a)` and `rotation = R_b R_a^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativePose {
    pub translation: Vector3<f64>,
    pub rotation: UnitQuaternion<f64>,
}

impl RelativePose {
    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        *self.rotation.to_rotation_matrix().matrix()
    }
}

/// Egocentric delta from pose `a` to pose `b`.
///
/// Composing the result with `a` reproduces `b`:
/// `R_b = rotation * R_a` and `P_b = P_a + R_a^T * translation`.
pub fn relative_pose(a: &CameraPose, b: &CameraPose) -> RelativePose {
    let translation = a.rotation * (b.position - a.position);
    let rotation = renormalize(b.rotation * a.rotation.inverse());
    RelativePose { translation, rotation }
}

/// Re-unitize a quaternion; products drift a few ulps per composition.
pub fn renormalize(q: UnitQuaternion<f64>) -> UnitQuaternion<f64> {
    UnitQuaternion::new_normalize(q.into_inner())
}

/// World-to-camera rotation for intrinsic yaw -> pitch -> roll.
///
/// The camera-to-world matrix is `Rz(yaw) * Ry(-pitch) * Rx(-roll)` in
/// right-hand-rule algebra; the sign flips realize the left handed frame
/// where positive pitch looks up and positive roll is clockwise.
pub fn euler_compose(angles: &EulerAngles) -> UnitQuaternion<f64> {
    let EulerConvention::LeftHandedZUpYawPitchRoll = angles.convention;
    let qz = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), angles.yaw);
    let qy = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), -angles.pitch);
    let qx = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), -angles.roll);
    renormalize((qz * qy * qx).inverse())
}

/// Decompose a world-to-camera rotation matrix into yaw, pitch, roll.
///
/// Pitch lands in [-pi/2, pi/2], yaw and roll in (-pi, pi]. Exactly at the
/// gimbal pole (|pitch| = pi/2) roll is fixed to 0 and the residual rotation
/// is assigned to yaw.
pub fn euler_decompose(m: &Matrix3<f64>) -> Result<EulerAngles, TrajectoryError> {
    let det = m.determinant();
    if det <= 0.0 {
        return Err(TrajectoryError::Reflection { det });
    }
    let sp = m[(0, 2)].clamp(-1.0, 1.0);
    // Inside ~1e-7 rad of the pole the yaw/roll split is numerically
    // meaningless; collapse it deterministically.
    let (yaw, pitch, roll) = if sp.abs() >= 1.0 - 1e-14 {
        let pitch = if sp > 0.0 { std::f64::consts::FRAC_PI_2 } else { -std::f64::consts::FRAC_PI_2 };
        let yaw = f64::atan2(-m[(1, 0)], m[(1, 1)]);
        (yaw, pitch, 0.0)
    } else {
        let pitch = sp.asin();
        let yaw = f64::atan2(m[(0, 1)], m[(0, 0)]);
        let roll = f64::atan2(-m[(1, 2)], m[(2, 2)]);
        (yaw, pitch, roll)
    };
    Ok(EulerAngles::new(wrap_half_open(yaw), pitch, wrap_half_open(roll)))
}

/// Map an atan2 result from [-pi, pi] into (-pi, pi].
fn wrap_half_open(a: f64) -> f64 {
    if a <= -std::f64::consts::PI {
        a + 2.0 * std::f64::consts::PI
    } else {
        a
    }
}

// ---------------------------------------------------------------------------
// Annotation document format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct RawDoc {
    frame_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    clip_id: Option<String>,
    frames: Vec<RawFrame>,
}

#[derive(Serialize, Deserialize)]
struct RawFrame {
    t: f64,
    position: [f64; 3],
    rotation: RawRotation,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawRotation {
    Quat { quat: [f64; 4] },
    /// Degrees, converted to radians at parse time.
    Euler { yaw: f64, pitch: f64, roll: f64 },
}

/// Parse an annotation document: top level `frame_rate` plus a `frames`
/// array of `{t, position, rotation}` records, where rotation is either a
/// `[w, x, y, z]` quaternion or yaw/pitch/roll in degrees.
pub fn parse_annotation(text: &str) -> Result<Trajectory, TrajectoryError> {
    let raw: RawDoc =
        serde_json::from_str(text).map_err(|e| TrajectoryError::Malformed(e.to_string()))?;
    if !(raw.frame_rate.is_finite() && raw.frame_rate > 0.0) {
        return Err(TrajectoryError::BadFrameRate(raw.frame_rate));
    }
    let mut poses = Vec::with_capacity(raw.frames.len());
    for (index, frame) in raw.frames.iter().enumerate() {
        if !frame.t.is_finite() {
            return Err(TrajectoryError::NonFinite { index, field: "t" });
        }
        if frame.position.iter().any(|v| !v.is_finite()) {
            return Err(TrajectoryError::NonFinite { index, field: "position" });
        }
        let rotation = match frame.rotation {
            RawRotation::Quat { quat } => {
                if quat.iter().any(|v| !v.is_finite()) {
                    return Err(TrajectoryError::NonFinite { index, field: "rotation.quat" });
                }
                let q = Quaternion::new(quat[0], quat[1], quat[2], quat[3]);
                let deviation = (q.norm() - 1.0).abs();
                if deviation > ROTATION_NORM_TOLERANCE {
                    return Err(TrajectoryError::NonOrthonormalRotation { index, deviation });
                }
                if deviation > RENORMALIZE_THRESHOLD {
                    UnitQuaternion::new_normalize(q)
                } else {
                    UnitQuaternion::new_unchecked(q)
                }
            }
            RawRotation::Euler { yaw, pitch, roll } => {
                if ![yaw, pitch, roll].iter().all(|v| v.is_finite()) {
                    return Err(TrajectoryError::NonFinite { index, field: "rotation" });
                }
                euler_compose(&EulerAngles::new(
                    yaw.to_radians(),
                    pitch.to_radians(),
                    roll.to_radians(),
                ))
            }
        };
        poses.push(CameraPose::new(Vector3::from(frame.position), rotation, frame.t));
    }
    Trajectory::new(raw.clip_id.clone().unwrap_or_default(), raw.frame_rate, poses)
}

/// Serialize a trajectory to the annotation document format. Rotations are
/// written as quaternions, so `parse_annotation` inverts this exactly.
pub fn to_annotation_json(traj: &Trajectory) -> String {
    let raw = RawDoc {
        frame_rate: traj.frame_rate,
        clip_id: (!traj.clip_id.is_empty()).then(|| traj.clip_id.clone()),
        frames: traj
            .poses
            .iter()
            .map(|p| {
                let q = p.rotation.quaternion();
                RawFrame {
                    t: p.timestamp,
                    position: [p.position.x, p.position.y, p.position.z],
                    rotation: RawRotation::Quat { quat: [q.w, q.i, q.j, q.k] },
                }
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&raw).expect("annotation serialization");
    out.push('\n');
    out
}
