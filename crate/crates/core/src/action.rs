//! The 13-way camera action vocabulary, trajectory-to-action extraction and
//! the inverse action-to-pose integration.
//!
//! Translational magnitudes are normalized by the clip's mean displacement
//! d-bar so the labels are scale free; rotational magnitudes are absolute
//! radians per frame. Opposing actions (e.g. dolly in / dolly out) never
//! co-occur within one frame.

use crate::trajectory::{
    euler_compose, euler_decompose, relative_pose, renormalize, CameraPose, EulerAngles,
    Trajectory, TrajectoryError,
};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ACTION_DIM: usize = 13;

/// Rotational step, in radians per frame, assigned to a pressed rotation key
/// by [`multihot_from_keys`].
pub const DEFAULT_KEY_ANGULAR_STEP: f64 = 2.0 * std::f64::consts::PI / 180.0;

#[derive(Debug, Error)]
pub enum ActionError {
    #[error("action entry {slot} is negative or non-finite: {value}")]
    BadEntry { slot: &'static str, value: f64 },
    #[error("opposing actions {a} and {b} are both nonzero")]
    OpposingPair { a: &'static str, b: &'static str },
    #[error("static flag must be exactly 0 or 1, got {0}")]
    NonBinaryStatic(f64),
    #[error("static frame also carries {slot} = {value}")]
    StaticWithMotion { slot: &'static str, value: f64 },
    #[error("non-static frame has no active action entry")]
    EmptyNonStatic,
    #[error("gamma must be finite and positive, got {0}")]
    BadGamma(f64),
    #[error("action sequence needs at least 2 frames, got {0}")]
    TooShort(usize),
    #[error("frame rate must be finite and positive, got {0}")]
    BadFrameRate(f64),
    #[error("unknown action name {0:?}")]
    UnknownAction(String),
    #[error("line {line}: {detail}")]
    MalformedRecord { line: usize, detail: String },
    #[error("line {line}: frame index {found} does not match position {expected}")]
    FrameIndexMismatch { line: usize, found: usize, expected: usize },
    #[error("actions document is missing its header line")]
    MissingHeader,
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

/// Slot order of the action vector. The first twelve form six opposing
/// pairs; the last marks a frame with no detected motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActionSlot {
    DollyIn = 0,
    DollyOut = 1,
    TruckLeft = 2,
    TruckRight = 3,
    PedestalUp = 4,
    PedestalDown = 5,
    TiltUp = 6,
    TiltDown = 7,
    PanLeft = 8,
    PanRight = 9,
    RollCw = 10,
    RollCcw = 11,
    Static = 12,
}

impl ActionSlot {
    pub const ALL: [ActionSlot; ACTION_DIM] = [
        ActionSlot::DollyIn,
        ActionSlot::DollyOut,
        ActionSlot::TruckLeft,
        ActionSlot::TruckRight,
        ActionSlot::PedestalUp,
        ActionSlot::PedestalDown,
        ActionSlot::TiltUp,
        ActionSlot::TiltDown,
        ActionSlot::PanLeft,
        ActionSlot::PanRight,
        ActionSlot::RollCw,
        ActionSlot::RollCcw,
        ActionSlot::Static,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActionSlot::DollyIn => "dolly_in",
            ActionSlot::DollyOut => "dolly_out",
            ActionSlot::TruckLeft => "truck_left",
            ActionSlot::TruckRight => "truck_right",
            ActionSlot::PedestalUp => "pedestal_up",
            ActionSlot::PedestalDown => "pedestal_down",
            ActionSlot::TiltUp => "tilt_up",
            ActionSlot::TiltDown => "tilt_down",
            ActionSlot::PanLeft => "pan_left",
            ActionSlot::PanRight => "pan_right",
            ActionSlot::RollCw => "roll_cw",
            ActionSlot::RollCcw => "roll_ccw",
            ActionSlot::Static => "static",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, ActionError> {
        Self::ALL
            .iter()
            .copied()
            .find(|s| s.name() == name)
            .ok_or_else(|| ActionError::UnknownAction(name.to_string()))
    }

    /// The slot this one is mutually exclusive with, if any.
    pub fn opposing(self) -> Option<Self> {
        let i = self as usize;
        if i >= 12 {
            return None;
        }
        Some(Self::ALL[i ^ 1])
    }

    pub fn is_translational(self) -> bool {
        (self as usize) < 6
    }

    pub fn is_rotational(self) -> bool {
        (6..12).contains(&(self as usize))
    }
}

/// Nonnegative magnitudes for one frame, one entry per [`ActionSlot`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; ACTION_DIM]", into = "[f64; ACTION_DIM]")]
pub struct ActionVector([f64; ACTION_DIM]);

impl ActionVector {
    /// Validates nonnegativity, pair exclusivity and the static flag rules.
    pub fn from_array(values: [f64; ACTION_DIM]) -> Result<Self, ActionError> {
        for (slot, &v) in ActionSlot::ALL.iter().zip(values.iter()) {
            if !v.is_finite() || v < 0.0 {
                return Err(ActionError::BadEntry { slot: slot.name(), value: v });
            }
        }
        for pair in ActionSlot::ALL[..12].chunks_exact(2) {
            if values[pair[0] as usize] > 0.0 && values[pair[1] as usize] > 0.0 {
                return Err(ActionError::OpposingPair { a: pair[0].name(), b: pair[1].name() });
            }
        }
        let st = values[ActionSlot::Static as usize];
        if st != 0.0 && st != 1.0 {
            return Err(ActionError::NonBinaryStatic(st));
        }
        let motion = ActionSlot::ALL[..12].iter().find(|s| values[**s as usize] > 0.0);
        if st == 1.0 {
            if let Some(slot) = motion {
                return Err(ActionError::StaticWithMotion {
                    slot: slot.name(),
                    value: values[*slot as usize],
                });
            }
        } else if motion.is_none() {
            return Err(ActionError::EmptyNonStatic);
        }
        Ok(Self(values))
    }

    pub fn static_frame() -> Self {
        let mut v = [0.0; ACTION_DIM];
        v[ActionSlot::Static as usize] = 1.0;
        Self(v)
    }

    pub fn as_array(&self) -> &[f64; ACTION_DIM] {
        &self.0
    }

    pub fn get(&self, slot: ActionSlot) -> f64 {
        self.0[slot as usize]
    }

    pub fn is_static(&self) -> bool {
        self.0[ActionSlot::Static as usize] == 1.0
    }

    /// Signed (forward, right, up) translation in d-bar units.
    pub fn signed_translation(&self) -> Vector3<f64> {
        Vector3::new(
            self.get(ActionSlot::DollyIn) - self.get(ActionSlot::DollyOut),
            self.get(ActionSlot::TruckRight) - self.get(ActionSlot::TruckLeft),
            self.get(ActionSlot::PedestalUp) - self.get(ActionSlot::PedestalDown),
        )
    }

    /// Signed (yaw, pitch, roll) in radians per frame.
    pub fn signed_rotation(&self) -> EulerAngles {
        EulerAngles::new(
            self.get(ActionSlot::PanRight) - self.get(ActionSlot::PanLeft),
            self.get(ActionSlot::TiltUp) - self.get(ActionSlot::TiltDown),
            self.get(ActionSlot::RollCw) - self.get(ActionSlot::RollCcw),
        )
    }
}

impl TryFrom<[f64; ACTION_DIM]> for ActionVector {
    type Error = ActionError;
    fn try_from(values: [f64; ACTION_DIM]) -> Result<Self, Self::Error> {
        Self::from_array(values)
    }
}

impl From<ActionVector> for [f64; ACTION_DIM] {
    fn from(v: ActionVector) -> Self {
        v.0
    }
}

/// Detection floors below which a channel is treated as still.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StaticThresholds {
    /// In d-bar normalized units.
    pub translation: f64,
    /// Radians per frame.
    pub rotation: f64,
}

impl Default for StaticThresholds {
    fn default() -> Self {
        Self { translation: 0.05, rotation: 0.1_f64.to_radians() }
    }
}

/// Per-frame action labels for one clip, plus the statistics needed to
/// invert them.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSequence {
    pub clip_id: String,
    pub actions: Vec<ActionVector>,
    /// d-bar: mean of the nonzero per-frame displacement magnitudes
    /// (fallback 1 when the clip never translates).
    pub mean_displacement: f64,
    pub source_frame_rate: f64,
    /// Set when the clip had no detectable motion at all; the sequence is
    /// then all static and d-bar fell back to 1.
    pub degenerate: bool,
}

impl ActionSequence {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Extract per-frame action labels from a trajectory.
///
/// Frame t > 0 describes the motion from pose t-1 to pose t; index 0 is a
/// prepended static frame so the sequence length matches the frame count.
pub fn extract_actions(
    traj: &Trajectory,
    thresholds: &StaticThresholds,
) -> Result<ActionSequence, ActionError> {
    if !(traj.frame_rate.is_finite() && traj.frame_rate > 0.0) {
        return Err(ActionError::BadFrameRate(traj.frame_rate));
    }
    if traj.len() < 2 {
        return Err(ActionError::TooShort(traj.len()));
    }

    let steps: Vec<_> = traj.poses.windows(2).map(|w| relative_pose(&w[0], &w[1])).collect();

    let mut sum = 0.0;
    let mut nonzero = 0usize;
    for s in &steps {
        let d = s.translation.norm();
        if d > 0.0 {
            sum += d;
            nonzero += 1;
        }
    }
    let mean_displacement = if nonzero > 0 { sum / nonzero as f64 } else { 1.0 };

    let mut actions = Vec::with_capacity(traj.len());
    actions.push(ActionVector::static_frame());
    let mut any_motion = false;
    for s in &steps {
        let mut v = [0.0; ACTION_DIM];
        let t = s.translation / mean_displacement;
        route(&mut v, ActionSlot::DollyIn, ActionSlot::DollyOut, t.x, thresholds.translation);
        route(&mut v, ActionSlot::TruckRight, ActionSlot::TruckLeft, t.y, thresholds.translation);
        route(&mut v, ActionSlot::PedestalUp, ActionSlot::PedestalDown, t.z, thresholds.translation);
        let angles = euler_decompose(&s.rotation_matrix())?;
        route(&mut v, ActionSlot::PanRight, ActionSlot::PanLeft, angles.yaw, thresholds.rotation);
        route(&mut v, ActionSlot::TiltUp, ActionSlot::TiltDown, angles.pitch, thresholds.rotation);
        route(&mut v, ActionSlot::RollCw, ActionSlot::RollCcw, angles.roll, thresholds.rotation);
        if v.iter().all(|&x| x == 0.0) {
            actions.push(ActionVector::static_frame());
        } else {
            any_motion = true;
            actions.push(ActionVector::from_array(v).expect("routed vector is valid"));
        }
    }

    Ok(ActionSequence {
        clip_id: traj.clip_id.clone(),
        actions,
        mean_displacement,
        source_frame_rate: traj.frame_rate,
        degenerate: !any_motion,
    })
}

/// Place a signed magnitude into the slot matching its sign, zeroing values
/// under the threshold.
fn route(v: &mut [f64; ACTION_DIM], pos: ActionSlot, neg: ActionSlot, value: f64, floor: f64) {
    if value.abs() < floor {
        return;
    }
    if value > 0.0 {
        v[pos as usize] = value;
    } else {
        v[neg as usize] = -value;
    }
}

/// Integrate an action sequence back into poses, starting from `initial`.
///
/// gamma converts d-bar normalized translation back into world units; with
/// `gamma = seq.mean_displacement` this inverts [`extract_actions`].
pub fn integrate_poses(
    seq: &ActionSequence,
    gamma: f64,
    initial: &CameraPose,
) -> Result<Trajectory, ActionError> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(ActionError::BadGamma(gamma));
    }
    if !(seq.source_frame_rate.is_finite() && seq.source_frame_rate > 0.0) {
        return Err(ActionError::BadFrameRate(seq.source_frame_rate));
    }
    if seq.len() < 2 {
        return Err(ActionError::TooShort(seq.len()));
    }
    for a in &seq.actions {
        ActionVector::from_array(*a.as_array())?;
    }

    let mut poses = Vec::with_capacity(seq.len());
    poses.push(CameraPose::new(initial.position, initial.rotation, initial.timestamp));
    for (i, action) in seq.actions.iter().enumerate().skip(1) {
        let prev = poses.last().expect("nonempty");
        let timestamp = initial.timestamp + i as f64 / seq.source_frame_rate;
        let next = if action.is_static() {
            CameraPose::new(prev.position, prev.rotation, timestamp)
        } else {
            let step_cam = gamma * action.signed_translation();
            let position = prev.position + prev.rotation.inverse() * step_cam;
            let rotation = renormalize(euler_compose(&action.signed_rotation()) * prev.rotation);
            CameraPose::new(position, rotation, timestamp)
        };
        poses.push(next);
    }
    Ok(Trajectory::new(seq.clip_id.clone(), seq.source_frame_rate, poses)?)
}

/// Build a single action vector from a set of pressed keys, as an
/// interactive driver would.
///
/// Translational keys contribute unit magnitude (scaled by gamma only at
/// integration time); rotational keys contribute
/// [`DEFAULT_KEY_ANGULAR_STEP`]. An empty set yields a static frame.
pub fn multihot_from_keys(pressed: &[ActionSlot], gamma: f64) -> Result<ActionVector, ActionError> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(ActionError::BadGamma(gamma));
    }
    if pressed.is_empty() {
        return Ok(ActionVector::static_frame());
    }
    let mut v = [0.0; ACTION_DIM];
    for &slot in pressed {
        if slot == ActionSlot::Static {
            continue;
        }
        v[slot as usize] = if slot.is_translational() { 1.0 } else { DEFAULT_KEY_ANGULAR_STEP };
    }
    if v[..12].iter().all(|&x| x == 0.0) {
        return Ok(ActionVector::static_frame());
    }
    ActionVector::from_array(v)
}

// ---------------------------------------------------------------------------
// Actions document format (JSON lines)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ActionsHeader {
    mean_displacement: f64,
    gamma: f64,
    source_frame_rate: f64,
    frames: usize,
    #[serde(default)]
    clip_id: String,
    #[serde(default)]
    degenerate: bool,
}

#[derive(Serialize, Deserialize)]
struct ActionsRecord {
    frame: usize,
    a: [f64; ACTION_DIM],
    #[serde(rename = "static")]
    is_static: bool,
}

/// A parsed actions document: the sequence plus the gamma recorded in its
/// header.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionsDoc {
    pub seq: ActionSequence,
    pub gamma: f64,
}

/// Serialize to JSON lines: one header record, then one record per frame.
pub fn write_actions_jsonl(seq: &ActionSequence, gamma: f64) -> String {
    let mut out = serde_json::to_string(&ActionsHeader {
        mean_displacement: seq.mean_displacement,
        gamma,
        source_frame_rate: seq.source_frame_rate,
        frames: seq.len(),
        clip_id: seq.clip_id.clone(),
        degenerate: seq.degenerate,
    })
    .expect("header serialization");
    out.push('\n');
    for (frame, action) in seq.actions.iter().enumerate() {
        let rec = ActionsRecord { frame, a: *action.as_array(), is_static: action.is_static() };
        out.push_str(&serde_json::to_string(&rec).expect("record serialization"));
        out.push('\n');
    }
    out
}

pub fn parse_actions_jsonl(text: &str) -> Result<ActionsDoc, ActionError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (line, header) = lines.next().ok_or(ActionError::MissingHeader)?;
    let header: ActionsHeader = serde_json::from_str(header)
        .map_err(|e| ActionError::MalformedRecord { line: line + 1, detail: e.to_string() })?;
    let mut actions = Vec::with_capacity(header.frames);
    for (line, text) in lines {
        let rec: ActionsRecord = serde_json::from_str(text)
            .map_err(|e| ActionError::MalformedRecord { line: line + 1, detail: e.to_string() })?;
        if rec.frame != actions.len() {
            return Err(ActionError::FrameIndexMismatch {
                line: line + 1,
                found: rec.frame,
                expected: actions.len(),
            });
        }
        let action = ActionVector::from_array(rec.a)?;
        if action.is_static() != rec.is_static {
            return Err(ActionError::MalformedRecord {
                line: line + 1,
                detail: "static flag disagrees with the action entries".into(),
            });
        }
        actions.push(action);
    }
    if actions.len() != header.frames {
        return Err(ActionError::MalformedRecord {
            line: 1,
            detail: format!("header declares {} frames, found {}", header.frames, actions.len()),
        });
    }
    let seq = ActionSequence {
        clip_id: header.clip_id,
        actions,
        mean_displacement: header.mean_displacement,
        source_frame_rate: header.source_frame_rate,
        degenerate: header.degenerate,
    };
    Ok(ActionsDoc { seq, gamma: header.gamma })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{smooth_trajectory, SmoothTrajectoryParams};
    use crate::trajectory::euler_compose;
    use nalgebra::UnitQuaternion;

    fn straight_line(frames: usize, step: f64) -> Trajectory {
        let poses = (0..frames)
            .map(|i| {
                CameraPose::new(
                    Vector3::new(i as f64 * step, 0.0, 0.0),
                    UnitQuaternion::identity(),
                    i as f64 / 16.0,
                )
            })
            .collect();
        Trajectory::new("line", 16.0, poses).unwrap()
    }

    #[test]
    fn constant_forward_motion_is_unit_dolly_in_exactly() {
        let seq = extract_actions(&straight_line(10, 1.0), &StaticThresholds::default()).unwrap();
        assert_eq!(seq.len(), 10);
        assert_eq!(seq.mean_displacement, 1.0);
        assert!(seq.actions[0].is_static());
        for a in &seq.actions[1..] {
            assert_eq!(a.get(ActionSlot::DollyIn), 1.0);
            assert!(!a.is_static());
            for slot in ActionSlot::ALL.iter().skip(1) {
                assert_eq!(a.get(*slot), 0.0, "slot {}", slot.name());
            }
        }
    }

    #[test]
    fn sign_routing_covers_all_six_translation_slots() {
        let check = |dir: Vector3<f64>, slot: ActionSlot| {
            let poses = (0..4)
                .map(|i| CameraPose::new(dir * i as f64, UnitQuaternion::identity(), i as f64))
                .collect();
            let traj = Trajectory::new("d", 16.0, poses).unwrap();
            let seq = extract_actions(&traj, &StaticThresholds::default()).unwrap();
            assert_eq!(seq.actions[1].get(slot), 1.0, "expected {}", slot.name());
        };
        check(Vector3::new(1.0, 0.0, 0.0), ActionSlot::DollyIn);
        check(Vector3::new(-1.0, 0.0, 0.0), ActionSlot::DollyOut);
        check(Vector3::new(0.0, 1.0, 0.0), ActionSlot::TruckRight);
        check(Vector3::new(0.0, -1.0, 0.0), ActionSlot::TruckLeft);
        check(Vector3::new(0.0, 0.0, 1.0), ActionSlot::PedestalUp);
        check(Vector3::new(0.0, 0.0, -1.0), ActionSlot::PedestalDown);
    }

    #[test]
    fn sign_routing_covers_all_six_rotation_slots() {
        let check = |yaw: f64, pitch: f64, roll: f64, slot: ActionSlot| {
            let step = euler_compose(&EulerAngles::new(yaw, pitch, roll));
            let mut rot = UnitQuaternion::identity();
            let mut poses = Vec::new();
            for i in 0..4 {
                poses.push(CameraPose::new(Vector3::zeros(), rot, i as f64));
                rot = step * rot;
            }
            let traj = Trajectory::new("r", 16.0, poses).unwrap();
            let seq = extract_actions(&traj, &StaticThresholds::default()).unwrap();
            let expected = yaw.abs().max(pitch.abs()).max(roll.abs());
            let got = seq.actions[1].get(slot);
            assert!((got - expected).abs() < 1e-12, "{}: {got} vs {expected}", slot.name());
        };
        let a = 1.5_f64.to_radians();
        check(a, 0.0, 0.0, ActionSlot::PanRight);
        check(-a, 0.0, 0.0, ActionSlot::PanLeft);
        check(0.0, a, 0.0, ActionSlot::TiltUp);
        check(0.0, -a, 0.0, ActionSlot::TiltDown);
        check(0.0, 0.0, a, ActionSlot::RollCw);
        check(0.0, 0.0, -a, ActionSlot::RollCcw);
    }

    #[test]
    fn sub_threshold_motion_becomes_static() {
        // Two big steps set d-bar; the third step is a 1e-4 crawl.
        let positions = [0.0, 1.0, 2.0, 2.0001];
        let poses = positions
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                CameraPose::new(Vector3::new(x, 0.0, 0.0), UnitQuaternion::identity(), i as f64)
            })
            .collect();
        let traj = Trajectory::new("s", 16.0, poses).unwrap();
        let seq = extract_actions(&traj, &StaticThresholds::default()).unwrap();
        assert!(!seq.actions[1].is_static());
        assert!(!seq.actions[2].is_static());
        assert!(seq.actions[3].is_static());
        assert!(!seq.degenerate);
    }

    #[test]
    fn motionless_clip_falls_back_to_unit_mean_and_flags_degenerate() {
        let poses = (0..5)
            .map(|i| CameraPose::new(Vector3::zeros(), UnitQuaternion::identity(), i as f64))
            .collect();
        let traj = Trajectory::new("frozen", 16.0, poses).unwrap();
        let seq = extract_actions(&traj, &StaticThresholds::default()).unwrap();
        assert!(seq.degenerate);
        assert_eq!(seq.mean_displacement, 1.0);
        assert!(seq.actions.iter().all(ActionVector::is_static));
    }

    #[test]
    fn vector_invariants_are_enforced() {
        let mut v = [0.0; ACTION_DIM];
        v[ActionSlot::DollyIn as usize] = 1.0;
        v[ActionSlot::DollyOut as usize] = 0.5;
        assert!(matches!(
            ActionVector::from_array(v),
            Err(ActionError::OpposingPair { a: "dolly_in", b: "dolly_out" })
        ));

        let mut v = [0.0; ACTION_DIM];
        v[ActionSlot::Static as usize] = 1.0;
        v[ActionSlot::PanLeft as usize] = 0.2;
        assert!(matches!(ActionVector::from_array(v), Err(ActionError::StaticWithMotion { .. })));

        assert!(matches!(
            ActionVector::from_array([0.0; ACTION_DIM]),
            Err(ActionError::EmptyNonStatic)
        ));

        let mut v = [0.0; ACTION_DIM];
        v[ActionSlot::TiltUp as usize] = -0.1;
        assert!(matches!(ActionVector::from_array(v), Err(ActionError::BadEntry { .. })));
    }

    #[test]
    fn multihot_sets_unit_translation_and_default_angular_step() {
        let v = multihot_from_keys(&[ActionSlot::DollyIn, ActionSlot::PanLeft], 2.5).unwrap();
        assert_eq!(v.get(ActionSlot::DollyIn), 1.0);
        assert_eq!(v.get(ActionSlot::PanLeft), DEFAULT_KEY_ANGULAR_STEP);
        assert!(!v.is_static());

        assert!(multihot_from_keys(&[], 1.0).unwrap().is_static());
        assert!(matches!(
            multihot_from_keys(&[ActionSlot::TruckLeft, ActionSlot::TruckRight], 1.0),
            Err(ActionError::OpposingPair { a: "truck_left", b: "truck_right" })
        ));
        assert!(matches!(multihot_from_keys(&[ActionSlot::DollyIn], 0.0), Err(ActionError::BadGamma(_))));
    }

    #[test]
    fn integrate_scales_unit_dolly_by_gamma() {
        let seq = extract_actions(&straight_line(4, 1.0), &StaticThresholds::default()).unwrap();
        let traj = integrate_poses(&seq, 2.5, &CameraPose::identity_at(0.0)).unwrap();
        assert_eq!(traj.poses[1].position, Vector3::new(2.5, 0.0, 0.0));
        assert_eq!(traj.poses[3].position, Vector3::new(7.5, 0.0, 0.0));
    }

    #[test]
    fn integrate_rejects_bad_gamma_and_short_sequences() {
        let seq = extract_actions(&straight_line(4, 1.0), &StaticThresholds::default()).unwrap();
        assert!(matches!(
            integrate_poses(&seq, -1.0, &CameraPose::identity_at(0.0)),
            Err(ActionError::BadGamma(_))
        ));
        let mut short = seq.clone();
        short.actions.truncate(1);
        assert!(matches!(
            integrate_poses(&short, 1.0, &CameraPose::identity_at(0.0)),
            Err(ActionError::TooShort(1))
        ));
    }

    #[test]
    fn extract_then_integrate_reproduces_a_smooth_clip() {
        for seed in 0..24 {
            let params = SmoothTrajectoryParams { frames: 48, ..Default::default() };
            let traj = smooth_trajectory("rt", seed, &params);
            let seq = extract_actions(&traj, &StaticThresholds::default()).unwrap();
            let rebuilt = integrate_poses(&seq, seq.mean_displacement, &traj.poses[0]).unwrap();
            for (a, b) in traj.poses.iter().zip(rebuilt.poses.iter()) {
                assert!((a.position - b.position).amax() < 1e-9, "seed {seed}");
                let (ma, mb) = (a.rotation_matrix(), b.rotation_matrix());
                assert!((ma - mb).amax() < 1e-9, "seed {seed}");
            }
        }
    }

    #[test]
    fn uniform_scaling_leaves_actions_unchanged() {
        for seed in 0..8 {
            let params = SmoothTrajectoryParams { frames: 32, ..Default::default() };
            let traj = smooth_trajectory("sc", seed, &params);
            let mut scaled = traj.clone();
            for p in scaled.poses.iter_mut() {
                p.position *= 37.5;
            }
            let a = extract_actions(&traj, &StaticThresholds::default()).unwrap();
            let b = extract_actions(&scaled, &StaticThresholds::default()).unwrap();
            for (x, y) in a.actions.iter().zip(b.actions.iter()) {
                for slot in ActionSlot::ALL {
                    assert!((x.get(slot) - y.get(slot)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn actions_jsonl_round_trips_bitwise() {
        let traj = smooth_trajectory("io", 5, &SmoothTrajectoryParams::default());
        let seq = extract_actions(&traj, &StaticThresholds::default()).unwrap();
        let text = write_actions_jsonl(&seq, seq.mean_displacement);
        let doc = parse_actions_jsonl(&text).unwrap();
        assert_eq!(doc.seq, seq);
        assert_eq!(doc.gamma.to_bits(), seq.mean_displacement.to_bits());
    }

    #[test]
    fn actions_jsonl_rejects_inconsistent_records() {
        let traj = straight_line(4, 1.0);
        let seq = extract_actions(&traj, &StaticThresholds::default()).unwrap();
        let text = write_actions_jsonl(&seq, 1.0);
        let broken = text.replace("{\"frame\":2", "{\"frame\":9");
        assert!(matches!(
            parse_actions_jsonl(&broken),
            Err(ActionError::FrameIndexMismatch { found: 9, expected: 2, .. })
        ));
        assert!(matches!(parse_actions_jsonl(""), Err(ActionError::MissingHeader)));
    }
}
