//! Turns a gesture segment into a concrete parameter value.

use thiserror::Error;

use crate::fitting::{fit_circle_2d, resample_polyline, DEFAULT_SAMPLES};
use crate::geometry::{plane_basis, try_unit, Rotation, UnitVec3, Vec3};
use crate::gesture::{hands_used, GestureSegment, Hand, HandContext, HandFrame, HandPose, HandsUsed, TraceError};
use crate::scene::{
    cone_intersect, ray_intersect, Cone, Ray, Scene, CONE_HEIGHT_M, CONE_VERTEX_OFFSET_M, RAY_LENGTH_M,
};

/// Index-to-middle fingertip distance below which a single hand is read as
/// a flat hand measuring against a surface.
pub const PINCH_MERGE_THRESHOLD_M: f64 = 0.03;

#[derive(Debug, Error, PartialEq)]
pub enum ExtractError {
    #[error("index fingertip and metacarpal coincide, or the rays cancel out")]
    DegenerateRay,
    #[error("no pointing ray hit the scene")]
    NoIntersection,
    #[error("no hand is visible in the segment")]
    NoHands,
    #[error("palms coincide, so the line between them has no direction")]
    ZeroLengthLine,
    #[error("no surface under the palm within ray range")]
    NoSurfaceHit,
    #[error("no frames in the gesture window")]
    EmptySegment,
}

impl From<TraceError> for ExtractError {
    fn from(e: TraceError) -> Self {
        match e {
            TraceError::EmptySegment(_) => ExtractError::EmptySegment,
            _ => ExtractError::NoHands,
        }
    }
}

/// Recorded hand motion plus the dominant index fingertip polyline.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    /// Every recorded frame, all joints of both hands.
    pub frames: Vec<HandFrame>,
    pub dominant: Hand,
    /// Dominant index-tip positions, one per frame where that hand is seen.
    pub tips: Vec<Vec3>,
    /// `tips` resampled to uniform arc length.
    pub polyline: Vec<Vec3>,
}

impl Path {
    /// A path given directly as points, without recorded frames.
    pub fn from_points(points: Vec<Vec3>) -> Self {
        let polyline = polyline_of(&points, DEFAULT_SAMPLES);
        Path {
            frames: Vec::new(),
            dominant: Hand::Right,
            tips: points,
            polyline,
        }
    }

    pub fn len(&self) -> usize {
        self.tips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tips.is_empty()
    }

    pub fn transformed(&self, rotation: &Rotation, translation: &Vec3) -> Self {
        let map = |p: &Vec3| rotation.rotate(p) + translation;
        Path {
            frames: self.frames.iter().map(|f| f.transformed(rotation, translation)).collect(),
            dominant: self.dominant,
            tips: self.tips.iter().map(map).collect(),
            polyline: self.polyline.iter().map(map).collect(),
        }
    }
}

fn polyline_of(points: &[Vec3], samples: usize) -> Vec<Vec3> {
    if points.len() <= 1 {
        points.to_vec()
    } else {
        resample_polyline(points, samples)
    }
}

/// Pointing ray of one hand pose: metacarpal through index fingertip.
pub fn pose_ray(pose: &HandPose) -> Result<Ray, ExtractError> {
    let origin = pose.index_metacarpal.position;
    Ray::new(origin, pose.index_tip.position - origin, RAY_LENGTH_M).map_err(|_| ExtractError::DegenerateRay)
}

pub fn hand_ray(frame: &HandFrame, hand: Hand) -> Result<Ray, ExtractError> {
    pose_ray(frame.hand(hand).ok_or(ExtractError::NoHands)?)
}

fn index_extension(seg: &GestureSegment, hand: Hand) -> f64 {
    let (sum, n) = seg.poses(hand).fold((0.0, 0usize), |(s, n), p| {
        (s + (p.index_tip.position - p.index_metacarpal.position).norm(), n + 1)
    });
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// The hand doing the pointing: the one seen in more frames, then the one
/// with the more extended index finger, then the right.
pub fn pointing_hand(seg: &GestureSegment) -> Result<Hand, ExtractError> {
    let left = seg.present_count(Hand::Left);
    let right = seg.present_count(Hand::Right);
    if left == 0 && right == 0 {
        return Err(ExtractError::NoHands);
    }
    Ok(if left != right {
        if left > right {
            Hand::Left
        } else {
            Hand::Right
        }
    } else if index_extension(seg, Hand::Left) > index_extension(seg, Hand::Right) {
        Hand::Left
    } else {
        Hand::Right
    })
}

fn pointing_rays(seg: &GestureSegment) -> Result<Vec<Ray>, ExtractError> {
    let hand = pointing_hand(seg)?;
    let rays: Vec<Ray> = seg.poses(hand).filter_map(|p| pose_ray(p).ok()).collect();
    if rays.is_empty() {
        return Err(ExtractError::DegenerateRay);
    }
    Ok(rays)
}

fn mean_direction(rays: &[Ray]) -> Result<UnitVec3, ExtractError> {
    let sum: Vec3 = rays.iter().map(|r| r.direction.into_inner()).sum();
    // cancelling rays leave a sum that is tiny relative to the ray count
    if sum.norm() <= 1e-9 * rays.len() as f64 {
        return Err(ExtractError::DegenerateRay);
    }
    try_unit(sum).ok_or(ExtractError::DegenerateRay)
}

/// Mean of the first points where the pointing rays meet the scene.
pub fn extract_position(seg: &GestureSegment, scene: &Scene, ignore: &[String]) -> Result<Vec3, ExtractError> {
    let mut sum = Vec3::zeros();
    let mut n = 0usize;
    for ray in pointing_rays(seg)? {
        if let Some(hit) = ray_intersect(scene, &ray, ignore).first() {
            sum += hit.point;
            n += 1;
        }
    }
    if n == 0 {
        return Err(ExtractError::NoIntersection);
    }
    Ok(sum / n as f64)
}

/// Selection cone swept out by the pointing hand.
///
/// The axis is the mean ray direction. Fingertips are projected onto the
/// plane through the mean palm position normal to the axis and a circle is
/// fitted to them; the vertex sits behind the circle center.
pub fn build_cone(seg: &GestureSegment) -> Result<Cone, ExtractError> {
    let hand = pointing_hand(seg)?;
    let poses: Vec<&HandPose> = seg.poses(hand).filter(|p| pose_ray(p).is_ok()).collect();
    let rays: Vec<Ray> = poses.iter().filter_map(|p| pose_ray(p).ok()).collect();
    if rays.is_empty() {
        return Err(ExtractError::DegenerateRay);
    }
    let axis = mean_direction(&rays)?;
    let n = poses.len() as f64;
    let palm: Vec3 = poses.iter().map(|p| p.palm.position).sum::<Vec3>() / n;

    let (e1, e2) = plane_basis(&axis);
    let uv: Vec<[f64; 2]> = poses
        .iter()
        .map(|p| {
            let d = p.index_tip.position - palm;
            [d.dot(&e1), d.dot(&e2)]
        })
        .collect();
    let ([cu, cv], radius) = match fit_circle_2d(&uv) {
        Ok(c) if c.radius.is_finite() => (c.center, c.radius),
        // Too few or collinear tips: centroid and farthest spread.
        _ => {
            let cu = uv.iter().map(|p| p[0]).sum::<f64>() / n;
            let cv = uv.iter().map(|p| p[1]).sum::<f64>() / n;
            let r = uv
                .iter()
                .map(|p| (p[0] - cu).hypot(p[1] - cv))
                .fold(0.0, f64::max);
            ([cu, cv], r)
        }
    };
    let center = palm + e1.into_inner() * cu + e2.into_inner() * cv;
    Ok(Cone::from_circle(center, axis, radius, CONE_VERTEX_OFFSET_M, CONE_HEIGHT_M))
}

/// Every object the selection cone touches, in scene order.
pub fn extract_object(seg: &GestureSegment, scene: &Scene) -> Result<Vec<String>, ExtractError> {
    Ok(cone_intersect(scene, &build_cone(seg)?))
}

/// Normalized mean of the pointing directions.
pub fn extract_direction(seg: &GestureSegment) -> Result<UnitVec3, ExtractError> {
    mean_direction(&pointing_rays(seg)?)
}

fn both_palms(seg: &GestureSegment) -> impl Iterator<Item = (Vec3, Vec3)> + '_ {
    seg.frames
        .iter()
        .filter_map(|f| Some((f.left.as_ref()?.palm.position, f.right.as_ref()?.palm.position)))
}

/// Rotation shown by the hands between the first and last frame.
///
/// One hand: the change of palm orientation. Two hands: the shortest arc
/// carrying the initial palm-to-palm line onto the final one.
pub fn extract_rotation(seg: &GestureSegment, move_threshold_m: f64) -> Result<Rotation, ExtractError> {
    match hands_used(seg, move_threshold_m, HandContext::Motion)? {
        HandsUsed::Both => {
            let mut lines = both_palms(seg).map(|(l, r)| r - l);
            let first = lines.next().ok_or(ExtractError::NoHands)?;
            let last = lines.last().unwrap_or(first);
            Rotation::between(&first, &last).ok_or(ExtractError::ZeroLengthLine)
        }
        single => {
            let hand = single.hand().expect("single hand");
            let mut poses = seg.poses(hand);
            let first = poses.next().ok_or(ExtractError::NoHands)?.palm.rotation;
            let last = poses.last().map(|p| p.palm.rotation).unwrap_or(first);
            Ok(last.compose(&first.inverse()))
        }
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Length shown by the hands.
///
/// Two hands: mean palm separation. One hand with index and middle finger
/// together: mean distance from the palm to the surface it faces. Otherwise
/// the mean thumb-to-index gap.
pub fn extract_size(
    seg: &GestureSegment,
    scene: &Scene,
    ignore: &[String],
    move_threshold_m: f64,
) -> Result<f64, ExtractError> {
    match hands_used(seg, move_threshold_m, HandContext::Pose)? {
        HandsUsed::Both => mean(both_palms(seg).map(|(l, r)| (r - l).norm())).ok_or(ExtractError::NoHands),
        single => {
            let hand = single.hand().expect("single hand");
            let pinch = mean(
                seg.poses(hand)
                    .map(|p| (p.index_tip.position - p.middle_tip.position).norm()),
            )
            .ok_or(ExtractError::NoHands)?;
            if pinch < PINCH_MERGE_THRESHOLD_M {
                let lengths = seg.poses(hand).filter_map(|p| {
                    let ray = Ray::new(p.palm.position, p.palm.rotation.down(), RAY_LENGTH_M).ok()?;
                    ray_intersect(scene, &ray, ignore).first().map(|h| h.distance)
                });
                mean(lengths).ok_or(ExtractError::NoSurfaceHit)
            } else {
                mean(
                    seg.poses(hand)
                        .map(|p| (p.index_tip.position - p.thumb_tip.position).norm()),
                )
                .ok_or(ExtractError::NoHands)
            }
        }
    }
}

fn index_travel(seg: &GestureSegment, hand: Hand) -> f64 {
    let tips: Vec<Vec3> = seg.poses(hand).map(|p| p.index_tip.position).collect();
    tips.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// The recorded motion, with the hand whose index fingertip travelled
/// farther taken as dominant (right on ties).
pub fn extract_path(seg: &GestureSegment) -> Result<Path, ExtractError> {
    extract_path_with(seg, DEFAULT_SAMPLES)
}

pub fn extract_path_with(seg: &GestureSegment, samples: usize) -> Result<Path, ExtractError> {
    let dominant = match (seg.present_count(Hand::Left), seg.present_count(Hand::Right)) {
        (0, 0) => return Err(ExtractError::NoHands),
        (_, 0) => Hand::Left,
        (0, _) => Hand::Right,
        _ if index_travel(seg, Hand::Left) > index_travel(seg, Hand::Right) => Hand::Left,
        _ => Hand::Right,
    };
    let tips: Vec<Vec3> = seg.poses(dominant).map(|p| p.index_tip.position).collect();
    let polyline = polyline_of(&tips, samples);
    Ok(Path {
        frames: seg.frames.clone(),
        dominant,
        tips,
        polyline,
    })
}
