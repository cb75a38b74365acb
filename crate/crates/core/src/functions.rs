//! The function catalog and the executor that applies calls to a scene.

use std::fmt;

use thiserror::Error;

use crate::extraction::Path;
use crate::fitting::{bounding_box, fit_shape, FitError, ShapeType, DEFAULT_SAMPLES};
use crate::geometry::{Rotation, UnitVec3, Vec3};
use crate::scene::{format_3dp, PathMotion, Rgb, Scene, SceneObject};

/// Speed of objects sent along a path, m/s.
pub const DEFAULT_PATH_SPEED: f64 = 0.5;
/// Smallest extent given to a drawn shape along any axis.
pub const MIN_DRAWN_EXTENT_M: f64 = 0.005;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamKind {
    Position,
    Object,
    ObjectList,
    Direction,
    RotationDelta,
    Size,
    Path,
    Color,
    ShapeType,
}

impl ParamKind {
    pub const ALL: [ParamKind; 9] = [
        ParamKind::Position,
        ParamKind::Object,
        ParamKind::ObjectList,
        ParamKind::Direction,
        ParamKind::RotationDelta,
        ParamKind::Size,
        ParamKind::Path,
        ParamKind::Color,
        ParamKind::ShapeType,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ParamKind::Position => "position",
            ParamKind::Object => "object",
            ParamKind::ObjectList => "object_list",
            ParamKind::Direction => "direction",
            ParamKind::RotationDelta => "rotation",
            ParamKind::Size => "size",
            ParamKind::Path => "path",
            ParamKind::Color => "color",
            ParamKind::ShapeType => "shape_type",
        }
    }

    pub fn parse(s: &str) -> Option<ParamKind> {
        ParamKind::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Kinds a hand gesture can supply.
    pub fn is_spatial(&self) -> bool {
        !matches!(self, ParamKind::Color | ParamKind::ShapeType)
    }
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    pub description: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionSignature {
    pub name: String,
    pub description: String,
    pub params: Vec<ParamSpec>,
}

impl FunctionSignature {
    pub fn new(name: &str, description: &str, params: &[(&str, ParamKind, &str)]) -> Self {
        FunctionSignature {
            name: name.to_string(),
            description: description.to_string(),
            params: params
                .iter()
                .map(|&(n, kind, d)| ParamSpec {
                    name: n.to_string(),
                    kind,
                    description: d.to_string(),
                })
                .collect(),
        }
    }

    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn param_names(&self) -> Vec<&str> {
        self.params.iter().map(|p| p.name.as_str()).collect()
    }
}

/// `move(object, position)`
impl fmt::Display for FunctionSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.name, self.param_names().join(", "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionCatalog {
    functions: Vec<FunctionSignature>,
}

impl Default for FunctionCatalog {
    fn default() -> Self {
        Self::default_catalog()
    }
}

impl FunctionCatalog {
    pub fn new(functions: Vec<FunctionSignature>) -> Self {
        FunctionCatalog { functions }
    }

    /// The eight built-in scene functions.
    pub fn default_catalog() -> Self {
        use ParamKind::*;
        let obj = "name of the object to change";
        FunctionCatalog::new(vec![
            FunctionSignature::new(
                "select",
                "pick out the objects of a given color from a list of objects",
                &[
                    ("objects", ObjectList, "candidate object names"),
                    ("color", Color, "color to keep"),
                ],
            ),
            FunctionSignature::new(
                "move",
                "move an object to a new location",
                &[
                    ("object", Object, obj),
                    ("position", Position, "target point in meters"),
                ],
            ),
            FunctionSignature::new(
                "rotate_dir",
                "turn an object so that its front faces a direction",
                &[
                    ("object", Object, obj),
                    ("direction", Direction, "unit vector the front should face"),
                ],
            ),
            FunctionSignature::new(
                "rotate",
                "rotate an object by a rotation",
                &[
                    ("object", Object, obj),
                    ("rotation", RotationDelta, "rotation to apply"),
                ],
            ),
            FunctionSignature::new(
                "resize",
                "scale an object uniformly so its largest side has a given length",
                &[
                    ("object", Object, obj),
                    ("size", Size, "target length in meters"),
                ],
            ),
            FunctionSignature::new(
                "move_path",
                "make an object travel back and forth along a path",
                &[
                    ("object", Object, obj),
                    ("path", Path, "sequence of points"),
                ],
            ),
            FunctionSignature::new(
                "draw_path",
                "draw a line, circle or sine wave that follows a path",
                &[
                    ("path", Path, "sequence of points"),
                    ("shape_type", ShapeType, "one of line, circle, sine"),
                ],
            ),
            FunctionSignature::new(
                "set_color",
                "change the color of an object",
                &[
                    ("object", Object, obj),
                    ("color", Color, "new color"),
                ],
            ),
        ])
    }

    pub fn functions(&self) -> &[FunctionSignature] {
        &self.functions
    }

    pub fn get(&self, name: &str) -> Option<&FunctionSignature> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn push(&mut self, signature: FunctionSignature) {
        self.functions.push(signature);
    }

    pub fn names(&self) -> Vec<&str> {
        self.functions.iter().map(|f| f.name.as_str()).collect()
    }
}

/// Reply used when a request matches no function.
pub fn general_error_message(catalog: &FunctionCatalog) -> String {
    format!(
        "Sorry, the system is unable to do that, the system is able to do {}.",
        catalog.names().join(", ")
    )
}

const CSS_BASIC_COLORS: [(&str, [u8; 3]); 16] = [
    ("black", [0, 0, 0]),
    ("silver", [192, 192, 192]),
    ("gray", [128, 128, 128]),
    ("white", [255, 255, 255]),
    ("maroon", [128, 0, 0]),
    ("red", [255, 0, 0]),
    ("purple", [128, 0, 128]),
    ("fuchsia", [255, 0, 255]),
    ("green", [0, 128, 0]),
    ("lime", [0, 255, 0]),
    ("olive", [128, 128, 0]),
    ("yellow", [255, 255, 0]),
    ("navy", [0, 0, 128]),
    ("blue", [0, 0, 255]),
    ("teal", [0, 128, 128]),
    ("aqua", [0, 255, 255]),
];

/// Tolerance for matching colors, enough to survive 3-decimal rounding.
pub const COLOR_TOLERANCE: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct NamedColor {
    pub name: String,
    pub rgb: Rgb,
}

/// Looks up one of the sixteen basic web color names.
pub fn color_by_name(name: &str) -> Option<NamedColor> {
    let lower = name.trim().to_ascii_lowercase();
    let key = match lower.as_str() {
        "grey" => "gray",
        "magenta" => "fuchsia",
        "cyan" => "aqua",
        other => other,
    };
    CSS_BASIC_COLORS.iter().find(|(n, _)| *n == key).map(|(n, c)| NamedColor {
        name: n.to_string(),
        rgb: Rgb(c.map(|v| v as f64 / 255.0)),
    })
}

pub fn color_names() -> impl Iterator<Item = &'static str> {
    CSS_BASIC_COLORS.iter().map(|(n, _)| *n)
}

/// Name of the basic color closest to `rgb`, if within tolerance.
pub fn color_name_of(rgb: &Rgb) -> Option<&'static str> {
    color_names().find(|n| color_by_name(n).is_some_and(|c| c.rgb.approx_eq(rgb, COLOR_TOLERANCE)))
}

/// A bound parameter value.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Position(Vec3),
    Object(String),
    ObjectList(Vec<String>),
    Direction(UnitVec3),
    Rotation(Rotation),
    Size(f64),
    Path(Path),
    Color(NamedColor),
    Shape(ShapeType),
}

impl Value {
    pub fn kind(&self) -> ParamKind {
        match self {
            Value::Position(_) => ParamKind::Position,
            Value::Object(_) => ParamKind::Object,
            Value::ObjectList(_) => ParamKind::ObjectList,
            Value::Direction(_) => ParamKind::Direction,
            Value::Rotation(_) => ParamKind::RotationDelta,
            Value::Size(_) => ParamKind::Size,
            Value::Path(_) => ParamKind::Path,
            Value::Color(_) => ParamKind::Color,
            Value::Shape(_) => ParamKind::ShapeType,
        }
    }

    /// Whether a value of this kind may fill a slot of `kind`. Object and
    /// object-list slots accept each other.
    pub fn fits(&self, kind: ParamKind) -> bool {
        let k = self.kind();
        k == kind
            || matches!(
                (k, kind),
                (ParamKind::Object, ParamKind::ObjectList) | (ParamKind::ObjectList, ParamKind::Object)
            )
    }

    /// Short human-readable rendering.
    pub fn describe(&self) -> String {
        let v3 = |v: &Vec3| format!("({}, {}, {})", format_3dp(v.x), format_3dp(v.y), format_3dp(v.z));
        match self {
            Value::Position(p) => v3(p),
            Value::Object(n) => n.clone(),
            Value::ObjectList(ns) => ns.join(", "),
            Value::Direction(d) => v3(d),
            Value::Rotation(r) => {
                let axis = r.quaternion().axis().map(|a| a.into_inner()).unwrap_or_else(Vec3::y);
                format!("{} degrees about {}", format_3dp(r.angle().to_degrees()), v3(&axis))
            }
            Value::Size(s) => format!("{} m", format_3dp(*s)),
            Value::Path(p) => format!("a path of {} points", p.len()),
            Value::Color(c) => c.name.clone(),
            Value::Shape(s) => s.to_string(),
        }
    }

    /// JSON form used in plans and reports.
    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        let v3 = |v: &Vec3| json!([v.x, v.y, v.z]);
        match self {
            Value::Position(p) => v3(p),
            Value::Object(n) => json!(n),
            Value::ObjectList(ns) => json!(ns),
            Value::Direction(d) => v3(d),
            Value::Rotation(r) => {
                let axis = r.quaternion().axis().map(|a| a.into_inner()).unwrap_or_else(Vec3::y);
                json!({"axis": v3(&axis), "degrees": r.angle().to_degrees()})
            }
            Value::Size(s) => json!(s),
            Value::Path(p) => serde_json::Value::Array(p.tips.iter().map(v3).collect()),
            Value::Color(c) => json!(c.name),
            Value::Shape(s) => json!(s.as_str()),
        }
    }

    fn names(&self) -> Vec<String> {
        match self {
            Value::Object(n) => vec![n.clone()],
            Value::ObjectList(ns) => ns.clone(),
            _ => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunctionCall {
    pub function: String,
    /// Bindings in signature order.
    pub args: Vec<(String, Value)>,
}

impl FunctionCall {
    pub fn new(function: impl Into<String>) -> Self {
        FunctionCall {
            function: function.into(),
            args: Vec::new(),
        }
    }

    pub fn arg(mut self, name: &str, value: Value) -> Self {
        self.args.push((name.to_string(), value));
        self
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.args.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ExecError {
    #[error("{message}")]
    UnknownFunction { name: String, message: String },
    #[error("no object named `{0}`")]
    UnknownObject(String),
    #[error("`{0}` cannot be changed")]
    NotManipulatable(String),
    #[error("parameter `{param}` of `{function}` is not bound")]
    MissingParameter { function: String, param: String },
    #[error("parameter `{param}` expects a {expected} value")]
    KindMismatch { param: String, expected: ParamKind },
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Result of executing one call.
#[derive(Clone, Debug, PartialEq)]
pub struct ExecOutcome {
    pub scene: Scene,
    /// Names chosen by `select`.
    pub selection: Option<Vec<String>>,
    /// Name of an object created by `draw_path`.
    pub created: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExecConfig {
    pub path_speed: f64,
    pub shape_samples: usize,
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig {
            path_speed: DEFAULT_PATH_SPEED,
            shape_samples: DEFAULT_SAMPLES,
        }
    }
}

/// Applies `call` to a copy of `scene` with default settings.
pub fn execute_call(scene: &Scene, call: &FunctionCall, catalog: &FunctionCatalog) -> Result<ExecOutcome, ExecError> {
    execute_call_with(scene, call, catalog, &ExecConfig::default())
}

pub fn execute_call_with(
    scene: &Scene,
    call: &FunctionCall,
    catalog: &FunctionCatalog,
    config: &ExecConfig,
) -> Result<ExecOutcome, ExecError> {
    let sig = catalog.get(&call.function).ok_or_else(|| ExecError::UnknownFunction {
        name: call.function.clone(),
        message: general_error_message(catalog),
    })?;
    for p in &sig.params {
        let v = call.get(&p.name).ok_or_else(|| ExecError::MissingParameter {
            function: sig.name.clone(),
            param: p.name.clone(),
        })?;
        if !v.fits(p.kind) {
            return Err(ExecError::KindMismatch {
                param: p.name.clone(),
                expected: p.kind,
            });
        }
    }
    let arg = |name: &str| call.get(name).expect("checked above");
    let mut out = ExecOutcome {
        scene: scene.clone(),
        selection: None,
        created: None,
    };

    match sig.name.as_str() {
        "select" => {
            let Value::Color(color) = arg("color") else { unreachable!() };
            let mut chosen = Vec::new();
            for name in arg("objects").names() {
                let obj = scene.get(&name).ok_or_else(|| ExecError::UnknownObject(name.clone()))?;
                if obj.color.is_some_and(|c| c.approx_eq(&color.rgb, COLOR_TOLERANCE)) {
                    chosen.push(obj.name.clone());
                }
            }
            out.selection = Some(chosen);
        }
        "move" => {
            let Value::Position(p) = arg("position") else { unreachable!() };
            let targets = targets(scene, arg("object"))?;
            let centroid = if targets.len() == 1 {
                scene.get(&targets[0]).expect("checked").position
            } else {
                targets.iter().map(|n| scene.get(n).expect("checked").position).sum::<Vec3>() / targets.len() as f64
            };
            let offset = p - centroid;
            for n in &targets {
                let obj = out.scene.get_mut(n).expect("checked");
                obj.position = if targets.len() == 1 { *p } else { obj.position + offset };
            }
        }
        "rotate_dir" => {
            let Value::Direction(d) = arg("direction") else { unreachable!() };
            for n in targets(scene, arg("object"))? {
                let obj = out.scene.get_mut(&n).expect("checked");
                let turn = Rotation::between(&obj.rotation.forward(), d).expect("unit vectors");
                obj.rotation = turn.compose(&obj.rotation);
            }
        }
        "rotate" => {
            let Value::Rotation(r) = arg("rotation") else { unreachable!() };
            for n in targets(scene, arg("object"))? {
                let obj = out.scene.get_mut(&n).expect("checked");
                obj.rotation = r.compose(&obj.rotation);
            }
        }
        "resize" => {
            let Value::Size(s) = arg("size") else { unreachable!() };
            if !(s.is_finite() && *s > 0.0) {
                return Err(ExecError::InvalidValue(format!("size must be positive, got {s}")));
            }
            for n in targets(scene, arg("object"))? {
                let obj = out.scene.get_mut(&n).expect("checked");
                obj.scale *= s / obj.scale.max();
            }
        }
        "move_path" => {
            let Value::Path(path) = arg("path") else { unreachable!() };
            let waypoints = path.polyline.clone();
            if waypoints.len() < 2 || crate::fitting::polyline_length(&waypoints) <= 0.0 {
                return Err(ExecError::InvalidValue("path needs two distinct points".into()));
            }
            for n in targets(scene, arg("object"))? {
                let obj = out.scene.get_mut(&n).expect("checked");
                obj.position = waypoints[0];
                obj.motion = Some(PathMotion {
                    waypoints: waypoints.clone(),
                    speed: config.path_speed,
                    phase: 0.0,
                });
            }
        }
        "draw_path" => {
            let Value::Path(path) = arg("path") else { unreachable!() };
            let Value::Shape(shape) = arg("shape_type") else { unreachable!() };
            let fitted = fit_shape(&path.tips, *shape)?;
            let points = fitted.sample(config.shape_samples);
            let (center, extents) = bounding_box(&points);
            let name = fresh_name(scene, shape.as_str());
            let mut obj = SceneObject::new(name.clone(), center, extents.map(|e| e.max(MIN_DRAWN_EXTENT_M)));
            obj.points = Some(points);
            out.scene.insert(obj).expect("fresh name");
            out.created = Some(name);
        }
        "set_color" => {
            let Value::Color(c) = arg("color") else { unreachable!() };
            for n in targets(scene, arg("object"))? {
                out.scene.get_mut(&n).expect("checked").color = Some(c.rgb);
            }
        }
        other => {
            return Err(ExecError::UnknownFunction {
                name: other.to_string(),
                message: general_error_message(catalog),
            })
        }
    }
    Ok(out)
}

/// Canonical names of the objects a state-changing call acts on.
fn targets(scene: &Scene, value: &Value) -> Result<Vec<String>, ExecError> {
    let names = value.names();
    if names.is_empty() {
        return Err(ExecError::InvalidValue("no objects given".into()));
    }
    names
        .iter()
        .map(|n| {
            let obj = scene.get(n).ok_or_else(|| ExecError::UnknownObject(n.clone()))?;
            if !obj.manipulatable {
                return Err(ExecError::NotManipulatable(obj.name.clone()));
            }
            Ok(obj.name.clone())
        })
        .collect()
}

fn fresh_name(scene: &Scene, stem: &str) -> String {
    (1..)
        .map(|k| format!("{stem}_{k}"))
        .find(|n| scene.get(n).is_none())
        .expect("unbounded")
}

/// Advances every object travelling along a path by `dt` seconds.
pub fn step_paths(scene: &Scene, dt: f64) -> Scene {
    let mut next = scene.clone();
    for obj in next.objects_mut() {
        let Some(m) = obj.motion.as_mut() else { continue };
        let len = m.length();
        if len <= 0.0 {
            continue;
        }
        m.phase = (m.phase + m.speed * dt).rem_euclid(2.0 * len);
        obj.position = m.current_point();
    }
    next
}
