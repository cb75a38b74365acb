//! Skeletal hand traces and their segmentation by spoken-token windows.
//!
//! Each frame carries up to two hands; a present hand always has all five
//! tracked joints. Palm joints face along their local -y axis.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Rotation, Vec3};
use crate::transcript::TimeInterval;

/// Palm displacement (meters) above which a hand counts as moving.
pub const DEFAULT_MOVE_THRESHOLD_M: f64 = 0.02;

#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("trace JSON is malformed: {0}")]
    Schema(String),
    #[error("frame {index}: timestamp {t_ms} ms does not increase")]
    NonMonotonicTime { index: usize, t_ms: i64 },
    #[error("no frames fall inside [{} ms, {} ms]", .0.start_ms, .0.end_ms)]
    EmptySegment(TimeInterval),
    #[error("no hand is present in the segment")]
    NoHands,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hand {
    Left,
    Right,
}

impl Hand {
    pub const BOTH: [Hand; 2] = [Hand::Left, Hand::Right];
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointPose {
    pub position: Vec3,
    pub rotation: Rotation,
}

impl JointPose {
    pub fn new(position: Vec3, rotation: Rotation) -> Self {
        JointPose { position, rotation }
    }

    pub fn at(position: Vec3) -> Self {
        JointPose::new(position, Rotation::identity())
    }

    fn transformed(&self, rotation: &Rotation, translation: &Vec3) -> Self {
        JointPose {
            position: rotation.rotate(&self.position) + translation,
            rotation: rotation.compose(&self.rotation),
        }
    }
}

/// The five tracked joints of one hand.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HandPose {
    pub palm: JointPose,
    pub thumb_tip: JointPose,
    pub index_tip: JointPose,
    pub middle_tip: JointPose,
    pub index_metacarpal: JointPose,
}

impl HandPose {
    pub fn joints(&self) -> [(&'static str, &JointPose); 5] {
        [
            ("palm", &self.palm),
            ("thumb_tip", &self.thumb_tip),
            ("index_tip", &self.index_tip),
            ("middle_tip", &self.middle_tip),
            ("index_metacarpal", &self.index_metacarpal),
        ]
    }

    pub fn transformed(&self, rotation: &Rotation, translation: &Vec3) -> Self {
        HandPose {
            palm: self.palm.transformed(rotation, translation),
            thumb_tip: self.thumb_tip.transformed(rotation, translation),
            index_tip: self.index_tip.transformed(rotation, translation),
            middle_tip: self.middle_tip.transformed(rotation, translation),
            index_metacarpal: self.index_metacarpal.transformed(rotation, translation),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HandFrame {
    pub t_ms: i64,
    pub left: Option<HandPose>,
    pub right: Option<HandPose>,
}

impl HandFrame {
    pub fn hand(&self, hand: Hand) -> Option<&HandPose> {
        match hand {
            Hand::Left => self.left.as_ref(),
            Hand::Right => self.right.as_ref(),
        }
    }

    pub fn transformed(&self, rotation: &Rotation, translation: &Vec3) -> Self {
        HandFrame {
            t_ms: self.t_ms,
            left: self.left.map(|h| h.transformed(rotation, translation)),
            right: self.right.map(|h| h.transformed(rotation, translation)),
        }
    }
}

/// Frames with strictly increasing timestamps.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GestureTrace {
    frames: Vec<HandFrame>,
}

impl GestureTrace {
    pub fn new(frames: Vec<HandFrame>) -> Result<Self, TraceError> {
        for (index, w) in frames.windows(2).enumerate() {
            if w[1].t_ms <= w[0].t_ms {
                return Err(TraceError::NonMonotonicTime {
                    index: index + 1,
                    t_ms: w[1].t_ms,
                });
            }
        }
        Ok(GestureTrace { frames })
    }

    pub fn frames(&self) -> &[HandFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Applies a rigid motion to every joint.
    pub fn transformed(&self, rotation: &Rotation, translation: &Vec3) -> Self {
        GestureTrace {
            frames: self
                .frames
                .iter()
                .map(|f| f.transformed(rotation, translation))
                .collect(),
        }
    }

    /// Extent of the trace in time, if nonempty.
    pub fn interval(&self) -> Option<TimeInterval> {
        Some(TimeInterval::new(
            self.frames.first()?.t_ms,
            self.frames.last()?.t_ms,
        ))
    }
}

/// Contiguous run of frames inside a time window.
#[derive(Clone, Debug, PartialEq)]
pub struct GestureSegment {
    pub frames: Vec<HandFrame>,
    pub interval: TimeInterval,
}

impl GestureSegment {
    /// Wraps frames directly; they must be nonempty.
    pub fn from_frames(frames: Vec<HandFrame>) -> Result<Self, TraceError> {
        let interval = TimeInterval::new(
            frames
                .first()
                .ok_or(TraceError::EmptySegment(TimeInterval::new(0, 0)))?
                .t_ms,
            frames.last().expect("nonempty").t_ms,
        );
        Ok(GestureSegment { frames, interval })
    }

    /// Poses of `hand` in frame order, skipping frames where it is absent.
    pub fn poses(&self, hand: Hand) -> impl Iterator<Item = &HandPose> {
        self.frames.iter().filter_map(move |f| f.hand(hand))
    }

    pub fn present_count(&self, hand: Hand) -> usize {
        self.poses(hand).count()
    }

    pub fn present_throughout(&self, hand: Hand) -> bool {
        self.frames.iter().all(|f| f.hand(hand).is_some())
    }

    pub fn transformed(&self, rotation: &Rotation, translation: &Vec3) -> Self {
        GestureSegment {
            frames: self
                .frames
                .iter()
                .map(|f| f.transformed(rotation, translation))
                .collect(),
            interval: self.interval,
        }
    }
}

/// All frames with `t_ms` inside the closed interval.
pub fn segment(trace: &GestureTrace, interval: TimeInterval) -> Result<GestureSegment, TraceError> {
    let frames: Vec<HandFrame> = trace
        .frames
        .iter()
        .filter(|f| interval.contains(f.t_ms))
        .cloned()
        .collect();
    if frames.is_empty() {
        return Err(TraceError::EmptySegment(interval));
    }
    Ok(GestureSegment { frames, interval })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PerHand {
    pub left: bool,
    pub right: bool,
}

impl PerHand {
    pub fn get(&self, hand: Hand) -> bool {
        match hand {
            Hand::Left => self.left,
            Hand::Right => self.right,
        }
    }
}

/// A hand moves when its palm strays more than `threshold_m` from where it
/// was in the hand's first frame of the segment.
pub fn detect_movement(seg: &GestureSegment, threshold_m: f64) -> PerHand {
    let moved = |hand: Hand| {
        let mut poses = seg.poses(hand);
        let Some(first) = poses.next() else {
            return false;
        };
        let origin = first.palm.position;
        poses.any(|p| (p.palm.position - origin).norm() > threshold_m)
    };
    PerHand {
        left: moved(Hand::Left),
        right: moved(Hand::Right),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HandsUsed {
    LeftOnly,
    RightOnly,
    Both,
}

impl HandsUsed {
    pub fn single(hand: Hand) -> Self {
        match hand {
            Hand::Left => HandsUsed::LeftOnly,
            Hand::Right => HandsUsed::RightOnly,
        }
    }

    pub fn hand(&self) -> Option<Hand> {
        match self {
            HandsUsed::LeftOnly => Some(Hand::Left),
            HandsUsed::RightOnly => Some(Hand::Right),
            HandsUsed::Both => None,
        }
    }
}

/// How the parameter being extracted reads a two-hand segment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HandContext {
    /// Meaning is carried by motion (rotation, path): a still hand is idle.
    Motion,
    /// Meaning is carried by a held pose (size): two visible hands form it.
    Pose,
}

fn more_present(seg: &GestureSegment) -> Hand {
    if seg.present_count(Hand::Left) > seg.present_count(Hand::Right) {
        Hand::Left
    } else {
        Hand::Right
    }
}

/// Decides which hands take part in the gesture.
///
/// With both hands visible, the result is `Both` when both move, or (in
/// [`HandContext::Pose`]) when both stay visible for the whole segment.
/// Otherwise the single moving hand wins; with no motion, the hand seen in
/// more frames (right on ties).
pub fn hands_used(
    seg: &GestureSegment,
    threshold_m: f64,
    context: HandContext,
) -> Result<HandsUsed, TraceError> {
    let left = seg.present_count(Hand::Left) > 0;
    let right = seg.present_count(Hand::Right) > 0;
    match (left, right) {
        (false, false) => Err(TraceError::NoHands),
        (true, false) => Ok(HandsUsed::LeftOnly),
        (false, true) => Ok(HandsUsed::RightOnly),
        (true, true) => {
            let moving = detect_movement(seg, threshold_m);
            if moving.left && moving.right {
                return Ok(HandsUsed::Both);
            }
            if context == HandContext::Pose
                && seg.present_throughout(Hand::Left)
                && seg.present_throughout(Hand::Right)
            {
                return Ok(HandsUsed::Both);
            }
            Ok(match (moving.left, moving.right) {
                (true, false) => HandsUsed::LeftOnly,
                (false, true) => HandsUsed::RightOnly,
                _ => HandsUsed::single(more_present(seg)),
            })
        }
    }
}

// ---- JSON ----

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJoint {
    pos: [f64; 3],
    rot: [f64; 4],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHand {
    palm: Option<RawJoint>,
    thumb_tip: Option<RawJoint>,
    index_tip: Option<RawJoint>,
    middle_tip: Option<RawJoint>,
    index_metacarpal: Option<RawJoint>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFrame {
    t_ms: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    left: Option<RawHand>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    right: Option<RawHand>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrace {
    frames: Vec<RawFrame>,
}

fn joint_from_raw(raw: Option<RawJoint>, name: &str, frame: usize) -> Result<JointPose, TraceError> {
    let raw = raw.ok_or_else(|| TraceError::Schema(format!("frame {frame}: missing joint `{name}`")))?;
    if raw.pos.iter().any(|v| !v.is_finite()) {
        return Err(TraceError::Schema(format!("frame {frame}: `{name}` position is not finite")));
    }
    let [x, y, z, w] = raw.rot;
    let rotation = Rotation::from_xyzw(x, y, z, w)
        .ok_or_else(|| TraceError::Schema(format!("frame {frame}: `{name}` rotation is degenerate")))?;
    Ok(JointPose::new(Vec3::from(raw.pos), rotation))
}

fn hand_from_raw(raw: RawHand, frame: usize) -> Result<HandPose, TraceError> {
    Ok(HandPose {
        palm: joint_from_raw(raw.palm, "palm", frame)?,
        thumb_tip: joint_from_raw(raw.thumb_tip, "thumb_tip", frame)?,
        index_tip: joint_from_raw(raw.index_tip, "index_tip", frame)?,
        middle_tip: joint_from_raw(raw.middle_tip, "middle_tip", frame)?,
        index_metacarpal: joint_from_raw(raw.index_metacarpal, "index_metacarpal", frame)?,
    })
}

fn joint_to_raw(j: &JointPose) -> RawJoint {
    RawJoint {
        pos: j.position.into(),
        rot: j.rotation.xyzw(),
    }
}

fn hand_to_raw(h: &HandPose) -> RawHand {
    RawHand {
        palm: Some(joint_to_raw(&h.palm)),
        thumb_tip: Some(joint_to_raw(&h.thumb_tip)),
        index_tip: Some(joint_to_raw(&h.index_tip)),
        middle_tip: Some(joint_to_raw(&h.middle_tip)),
        index_metacarpal: Some(joint_to_raw(&h.index_metacarpal)),
    }
}

/// Parses the trace JSON document.
pub fn load_trace(text: &str) -> Result<GestureTrace, TraceError> {
    let raw: RawTrace = serde_json::from_str(text).map_err(|e| TraceError::Schema(e.to_string()))?;
    let frames = raw
        .frames
        .into_iter()
        .enumerate()
        .map(|(i, f)| {
            Ok(HandFrame {
                t_ms: f.t_ms,
                left: f.left.map(|h| hand_from_raw(h, i)).transpose()?,
                right: f.right.map(|h| hand_from_raw(h, i)).transpose()?,
            })
        })
        .collect::<Result<Vec<_>, TraceError>>()?;
    GestureTrace::new(frames)
}

/// Writes the trace JSON document.
pub fn trace_to_json(trace: &GestureTrace) -> String {
    let raw = RawTrace {
        frames: trace
            .frames
            .iter()
            .map(|f| RawFrame {
                t_ms: f.t_ms,
                left: f.left.as_ref().map(hand_to_raw),
                right: f.right.as_ref().map(hand_to_raw),
            })
            .collect(),
    };
    serde_json::to_string(&raw).expect("trace serializes")
}
