//! Scene state, its JSON form, and the ray and cone queries used for pointing.
//!
//! Every object is an oriented bounding box: `position` is the box center,
//! `rotation` its orientation and `scale` its full extent along each local
//! axis. Queries never mutate the scene; state changes go through
//! [`crate::functions`].

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::Deserialize;
use thiserror::Error;

use crate::geometry::{is_finite, try_unit, Rotation, UnitVec3, Vec3};
use crate::gjk::{self, Support};

/// Length of every hand ray and palm ray, in meters.
pub const RAY_LENGTH_M: f64 = 10.0;
/// Height of a selection cone, measured from its vertex.
pub const CONE_HEIGHT_M: f64 = 10.0;
/// Distance from the cone vertex to the plane holding the fitted circle.
pub const CONE_VERTEX_OFFSET_M: f64 = 0.30;
/// Smallest base radius a selection cone may have.
pub const CONE_MIN_RADIUS_M: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("scene JSON is malformed: {0}")]
    Json(String),
    #[error("object {index}: {reason}")]
    Schema { index: usize, reason: String },
    #[error("duplicate object name `{0}`")]
    DuplicateName(String),
}

/// Linear RGB with components in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rgb(pub [f64; 3]);

impl Rgb {
    pub fn approx_eq(&self, other: &Rgb, tol: f64) -> bool {
        self.0.iter().zip(other.0).all(|(a, b)| (a - b).abs() <= tol)
    }
}

/// Path attached by `move_path`: the object oscillates along `waypoints`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathMotion {
    pub waypoints: Vec<Vec3>,
    /// Meters per second.
    pub speed: f64,
    /// Position in the back-and-forth cycle, in `[0, 2 · length)`.
    pub phase: f64,
}

impl PathMotion {
    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Point at arc length `s` from the first waypoint.
    pub fn point_at(&self, s: f64) -> Vec3 {
        let mut remaining = s.max(0.0);
        for w in self.waypoints.windows(2) {
            let seg = (w[1] - w[0]).norm();
            if remaining <= seg && seg > 0.0 {
                return w[0] + (w[1] - w[0]) * (remaining / seg);
            }
            remaining -= seg;
        }
        *self.waypoints.last().expect("path has waypoints")
    }

    /// Current position given the phase: forward on the first half of the
    /// cycle, backward on the second.
    pub fn current_point(&self) -> Vec3 {
        let len = self.length();
        let s = if self.phase <= len {
            self.phase
        } else {
            2.0 * len - self.phase
        };
        self.point_at(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneObject {
    pub name: String,
    pub position: Vec3,
    pub rotation: Rotation,
    pub scale: Vec3,
    pub color: Option<Rgb>,
    pub manipulatable: bool,
    /// Polyline vertices for shapes created by `draw_path`.
    pub points: Option<Vec<Vec3>>,
    /// Set by `move_path`; not part of the JSON form.
    pub motion: Option<PathMotion>,
}

impl SceneObject {
    pub fn new(name: impl Into<String>, position: Vec3, scale: Vec3) -> Self {
        SceneObject {
            name: name.into(),
            position,
            rotation: Rotation::identity(),
            scale,
            color: None,
            manipulatable: true,
            points: None,
            motion: None,
        }
    }

    pub fn with_rotation(mut self, rotation: Rotation) -> Self {
        self.rotation = rotation;
        self
    }

    pub fn with_color(mut self, color: Rgb) -> Self {
        self.color = Some(color);
        self
    }

    pub fn fixed(mut self) -> Self {
        self.manipulatable = false;
        self
    }

    pub fn obb(&self) -> Obb {
        Obb {
            center: self.position,
            rotation: self.rotation,
            half_extents: self.scale / 2.0,
        }
    }
}

/// Ordered set of uniquely named objects.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Scene {
    objects: Vec<SceneObject>,
}

impl Scene {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a scene, rejecting invalid or duplicate objects.
    pub fn from_objects(objects: Vec<SceneObject>) -> Result<Self, SceneError> {
        let mut scene = Scene::new();
        for (index, obj) in objects.into_iter().enumerate() {
            validate_object(&obj).map_err(|reason| SceneError::Schema { index, reason })?;
            scene.insert(obj)?;
        }
        Ok(scene)
    }

    /// Appends an object. Names are compared case-insensitively.
    pub fn insert(&mut self, obj: SceneObject) -> Result<(), SceneError> {
        if self.get(&obj.name).is_some() {
            return Err(SceneError::DuplicateName(obj.name));
        }
        self.objects.push(obj);
        Ok(())
    }

    pub fn objects(&self) -> &[SceneObject] {
        &self.objects
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    /// Case-insensitive lookup.
    pub fn get(&self, name: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.name.eq_ignore_ascii_case(name))
    }

    pub(crate) fn get_mut(&mut self, name: &str) -> Option<&mut SceneObject> {
        self.objects
            .iter_mut()
            .find(|o| o.name.eq_ignore_ascii_case(name))
    }

    pub(crate) fn objects_mut(&mut self) -> impl Iterator<Item = &mut SceneObject> {
        self.objects.iter_mut()
    }

    /// Applies a rigid motion to every object (positions, orientations and
    /// drawn polylines).
    pub fn transformed(&self, rotation: &Rotation, translation: &Vec3) -> Scene {
        let map = |p: &Vec3| rotation.rotate(p) + translation;
        let objects = self
            .objects
            .iter()
            .map(|o| SceneObject {
                position: map(&o.position),
                rotation: rotation.compose(&o.rotation),
                points: o.points.as_ref().map(|pts| pts.iter().map(map).collect()),
                motion: o.motion.as_ref().map(|m| PathMotion {
                    waypoints: m.waypoints.iter().map(map).collect(),
                    ..m.clone()
                }),
                ..o.clone()
            })
            .collect();
        Scene { objects }
    }
}

fn validate_object(obj: &SceneObject) -> Result<(), String> {
    if obj.name.trim().is_empty() {
        return Err("name must be nonempty".into());
    }
    if !is_finite(&obj.position) || !is_finite(&obj.scale) {
        return Err("non-finite position or scale".into());
    }
    if obj.scale.iter().any(|&s| s <= 0.0) {
        return Err("scale components must be positive".into());
    }
    if let Some(Rgb(c)) = obj.color {
        if c.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err("color components must lie in [0, 1]".into());
        }
    }
    if let Some(points) = &obj.points {
        if points.iter().any(|p| !is_finite(p)) {
            return Err("non-finite polyline point".into());
        }
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObject {
    name: String,
    position: [f64; 3],
    rotation: [f64; 3],
    scale: [f64; 3],
    #[serde(default)]
    color: Option<[f64; 3]>,
    #[serde(default)]
    manipulatable: Option<bool>,
    #[serde(default)]
    points: Option<Vec<[f64; 3]>>,
}

/// Parses the scene JSON document (an array of objects).
pub fn load_scene(text: &str) -> Result<Scene, SceneError> {
    let raw: Vec<RawObject> =
        serde_json::from_str(text).map_err(|e| SceneError::Json(e.to_string()))?;
    let objects = raw
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            if r.rotation.iter().any(|v| !v.is_finite()) {
                return Err(SceneError::Schema {
                    index,
                    reason: "non-finite rotation".into(),
                });
            }
            Ok(SceneObject {
                name: r.name,
                position: Vec3::from(r.position),
                rotation: Rotation::from_euler_degrees(r.rotation),
                scale: Vec3::from(r.scale),
                color: r.color.map(Rgb),
                manipulatable: r.manipulatable.unwrap_or(true),
                points: r.points.map(|p| p.into_iter().map(Vec3::from).collect()),
                motion: None,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Scene::from_objects(objects)
}

/// Rounds half away from zero to three decimals and prints exactly three.
pub fn format_3dp(v: f64) -> String {
    let milli = (v * 1000.0).round() as i64;
    let sign = if milli < 0 { "-" } else { "" };
    let abs = milli.unsigned_abs();
    format!("{sign}{}.{:03}", abs / 1000, abs % 1000)
}

fn format_triple(out: &mut String, v: [f64; 3]) {
    out.push('[');
    for (i, c) in v.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format_3dp(*c));
    }
    out.push(']');
}

/// Euler angles as serialized: once the pitch rounds to ±90 the roll is
/// folded into yaw, and a yaw or roll of -180 is written as 180, so that
/// re-serializing a loaded document reproduces it.
fn serialized_euler(r: &Rotation) -> [f64; 3] {
    let mut e = r.to_euler_degrees();
    if format_3dp(e[0].abs()) == "90.000" {
        e = r.to_euler_degrees_locked();
    }
    for a in &mut e[1..] {
        if format_3dp(*a) == "-180.000" {
            *a = 180.0;
        }
    }
    e
}

/// Writes the scene as JSON with every number rounded to three decimals.
///
/// Keys appear in a fixed order: name, position, rotation, scale, then
/// `color`, `manipulatable` (only when false) and `points` when present.
pub fn serialize_scene(scene: &Scene) -> String {
    if scene.is_empty() {
        return "[]".to_string();
    }
    let mut out = String::from("[\n");
    for (i, o) in scene.objects.iter().enumerate() {
        let name = serde_json::to_string(&o.name).expect("strings serialize");
        let _ = write!(out, "  {{\"name\":{name},\"position\":");
        format_triple(&mut out, o.position.into());
        out.push_str(",\"rotation\":");
        format_triple(&mut out, serialized_euler(&o.rotation));
        out.push_str(",\"scale\":");
        format_triple(&mut out, o.scale.into());
        if let Some(Rgb(c)) = o.color {
            out.push_str(",\"color\":");
            format_triple(&mut out, c);
        }
        if !o.manipulatable {
            out.push_str(",\"manipulatable\":false");
        }
        if let Some(points) = &o.points {
            out.push_str(",\"points\":[");
            for (j, p) in points.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                format_triple(&mut out, (*p).into());
            }
            out.push(']');
        }
        out.push('}');
        if i + 1 < scene.objects.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push(']');
    out
}

/// Oriented bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Obb {
    pub center: Vec3,
    pub rotation: Rotation,
    pub half_extents: Vec3,
}

impl Obb {
    pub fn corners(&self) -> [Vec3; 8] {
        let axes = self.rotation.axes();
        let h = self.half_extents;
        let mut out = [Vec3::zeros(); 8];
        for (i, c) in out.iter_mut().enumerate() {
            let sx = if i & 1 == 0 { -1.0 } else { 1.0 };
            let sy = if i & 2 == 0 { -1.0 } else { 1.0 };
            let sz = if i & 4 == 0 { -1.0 } else { 1.0 };
            *c = self.center + axes[0] * (sx * h.x) + axes[1] * (sy * h.y) + axes[2] * (sz * h.z);
        }
        out
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        let local = self.rotation.inverse().rotate(&(p - self.center));
        (0..3).all(|i| local[i].abs() <= self.half_extents[i] * (1.0 + 1e-12))
    }

    /// Parametric interval `[t_in, t_out]` where the line `origin + t·dir`
    /// is inside the box (slab method in the box frame).
    pub fn line_interval(&self, origin: &Vec3, dir: &Vec3) -> Option<(f64, f64)> {
        let inv = self.rotation.inverse();
        let o = inv.rotate(&(origin - self.center));
        let d = inv.rotate(dir);
        let mut t_in = f64::NEG_INFINITY;
        let mut t_out = f64::INFINITY;
        for i in 0..3 {
            let h = self.half_extents[i];
            if d[i].abs() < 1e-15 {
                if o[i].abs() > h {
                    return None;
                }
                continue;
            }
            let t1 = (-h - o[i]) / d[i];
            let t2 = (h - o[i]) / d[i];
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            t_in = t_in.max(lo);
            t_out = t_out.min(hi);
            if t_in > t_out {
                return None;
            }
        }
        Some((t_in, t_out))
    }
}

impl Support for Obb {
    fn support(&self, d: &Vec3) -> Vec3 {
        let axes = self.rotation.axes();
        let mut p = self.center;
        for (axis, h) in axes.iter().zip(self.half_extents.iter()) {
            let s = if axis.dot(d) >= 0.0 { 1.0 } else { -1.0 };
            p += axis * (s * h);
        }
        p
    }

    fn center(&self) -> Vec3 {
        self.center
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("direction has zero length")]
    ZeroDirection,
    #[error("length must be positive and finite")]
    BadLength,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: UnitVec3,
    pub length: f64,
}

impl Ray {
    pub fn new(origin: Vec3, direction: Vec3, length: f64) -> Result<Self, GeometryError> {
        let direction = try_unit(direction).ok_or(GeometryError::ZeroDirection)?;
        if !(length > 0.0 && length.is_finite()) {
            return Err(GeometryError::BadLength);
        }
        Ok(Ray {
            origin,
            direction,
            length,
        })
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction.into_inner() * t
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hit {
    pub name: String,
    pub point: Vec3,
    pub distance: f64,
}

/// All boxes hit by `ray`, nearest first, skipping names in `ignore`
/// (case-insensitive). A ray starting inside a box hits it where it exits.
pub fn ray_intersect(scene: &Scene, ray: &Ray, ignore: &[String]) -> Vec<Hit> {
    let dir = ray.direction.into_inner();
    let mut hits: Vec<Hit> = scene
        .objects
        .iter()
        .filter(|o| !ignore.iter().any(|n| n.eq_ignore_ascii_case(&o.name)))
        .filter_map(|o| {
            let (t_in, t_out) = o.obb().line_interval(&ray.origin, &dir)?;
            let t = if t_in > 0.0 { t_in } else { t_out };
            (t > 0.0 && t <= ray.length).then(|| Hit {
                name: o.name.clone(),
                point: ray.at(t),
                distance: t,
            })
        })
        .collect();
    hits.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    hits
}

/// Finite right circular cone opening from `vertex` along `axis`.
///
/// The fitted circle lies at `base_center`, `plane_distance` along the axis
/// from the vertex, with radius `base_radius`; the radius grows linearly
/// with distance along the axis up to `height`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cone {
    pub vertex: Vec3,
    pub axis: UnitVec3,
    pub base_center: Vec3,
    pub base_radius: f64,
    pub height: f64,
}

impl Cone {
    /// Cone whose fitted circle has center `circle_center` and lies in the
    /// plane with normal `axis`; the vertex sits `vertex_offset` behind it.
    pub fn from_circle(
        circle_center: Vec3,
        axis: UnitVec3,
        radius: f64,
        vertex_offset: f64,
        height: f64,
    ) -> Self {
        Cone {
            vertex: circle_center - axis.into_inner() * vertex_offset,
            axis,
            base_center: circle_center,
            base_radius: radius.max(CONE_MIN_RADIUS_M),
            height,
        }
    }

    fn plane_distance(&self) -> f64 {
        (self.base_center - self.vertex).dot(&self.axis)
    }

    /// Radius of the cross-section at distance `t` from the vertex.
    pub fn radius_at(&self, t: f64) -> f64 {
        self.base_radius * t / self.plane_distance()
    }

    /// Point-in-cone test on the closed volume.
    pub fn contains(&self, p: &Vec3) -> bool {
        let rel = p - self.vertex;
        let t = rel.dot(&self.axis);
        if !(0.0..=self.height).contains(&t) {
            return false;
        }
        let r = (rel - self.axis.into_inner() * t).norm();
        r <= self.radius_at(t) + 1e-12
    }

    fn cap_radius(&self) -> f64 {
        self.radius_at(self.height)
    }
}

impl Support for Cone {
    fn support(&self, d: &Vec3) -> Vec3 {
        let axis = self.axis.into_inner();
        let cap_center = self.vertex + axis * self.height;
        let perp = d - axis * d.dot(&axis);
        let n = perp.norm();
        let rim = if n > 1e-15 {
            cap_center + perp * (self.cap_radius() / n)
        } else {
            cap_center
        };
        if rim.dot(d) >= self.vertex.dot(d) {
            rim
        } else {
            self.vertex
        }
    }

    fn center(&self) -> Vec3 {
        self.vertex + self.axis.into_inner() * (self.height / 2.0)
    }
}

/// Free-function form of [`Cone::contains`].
pub fn cone_contains(cone: &Cone, point: &Vec3) -> bool {
    cone.contains(point)
}

/// True when the object's box and the cone share a point.
pub fn cone_hits_object(cone: &Cone, obj: &SceneObject) -> bool {
    let obb = obj.obb();
    if obb.corners().iter().any(|c| cone.contains(c)) || cone.contains(&obb.center) {
        return true;
    }
    let axis = cone.axis.into_inner();
    if let Some((t_in, t_out)) = obb.line_interval(&cone.vertex, &axis) {
        if t_out >= 0.0 && t_in <= cone.height {
            return true;
        }
    }
    gjk::intersects(cone, &obb)
}

/// Names of every object whose box intersects the cone, in scene order.
pub fn cone_intersect(scene: &Scene, cone: &Cone) -> Vec<String> {
    scene
        .objects
        .iter()
        .filter(|o| cone_hits_object(cone, o))
        .map(|o| o.name.clone())
        .collect()
}

/// Lowercased names, for set comparisons.
pub fn name_set<'a>(names: impl IntoIterator<Item = &'a String>) -> HashSet<String> {
    names.into_iter().map(|n| n.to_lowercase()).collect()
}
