//! From plan to updated scene: gesture windows, extraction, execution and
//! the clarification fallback. Also the accuracy metrics.

use std::collections::HashSet;

use crate::extraction::{
    build_cone, extract_direction, extract_path, extract_position, extract_rotation, extract_size, ExtractError,
};
use crate::fitting::{direction_difference_degrees, dtw_similarity, FitError};
use crate::functions::{execute_call_with, ExecConfig, FunctionCall, FunctionCatalog, ParamKind, Value};
use crate::geometry::{Rotation, Vec3};
use crate::gesture::{segment, GestureTrace, DEFAULT_MOVE_THRESHOLD_M};
use crate::intent::{AmbiguousParam, Literal, Plan, PlannedCall};
use crate::scene::{cone_intersect, Scene};
use crate::transcript::{token_window, TimeInterval, Transcript, DEFAULT_PADDING_MS};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PipelineConfig {
    /// Widening of each gesture window on both sides.
    pub padding_ms: i64,
    pub move_threshold_m: f64,
    pub exec: ExecConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            padding_ms: DEFAULT_PADDING_MS,
            move_threshold_m: DEFAULT_MOVE_THRESHOLD_M,
            exec: ExecConfig::default(),
        }
    }
}

/// What happened to one ambiguous parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamReport {
    pub call: usize,
    pub name: String,
    pub kind: ParamKind,
    pub window: TimeInterval,
    pub frames: usize,
    pub value: Option<Value>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CallReport {
    pub function: String,
    pub args: Vec<(String, Value)>,
    pub selection: Option<Vec<String>>,
    pub created: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClarificationRequest {
    pub call: usize,
    pub function: String,
    /// `move(object, position)`
    pub signature: String,
    pub missing: Vec<String>,
    /// Parameter name and how its value reads in the message.
    pub resolved: Vec<(String, String)>,
    pub message: String,
}

/// A call the executor refused; nothing was changed.
#[derive(Clone, Debug, PartialEq)]
pub struct Rejection {
    pub call: usize,
    pub function: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Executed { calls: Vec<CallReport> },
    Clarification(ClarificationRequest),
    Rejected(Rejection),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Resolution {
    pub outcome: Outcome,
    /// The updated scene, or the input scene untouched when not executed.
    pub scene: Scene,
    pub params: Vec<ParamReport>,
}

impl Resolution {
    pub fn is_executed(&self) -> bool {
        matches!(self.outcome, Outcome::Executed { .. })
    }

    /// Every `select` result, by call index.
    pub fn selections(&self) -> Vec<(usize, &[String])> {
        match &self.outcome {
            Outcome::Executed { calls } => calls
                .iter()
                .enumerate()
                .filter_map(|(i, c)| Some((i, c.selection.as_deref()?)))
                .collect(),
            _ => Vec::new(),
        }
    }
}

fn quote_list(names: &[String]) -> String {
    let quoted: Vec<String> = names.iter().map(|n| format!("'{n}'")).collect();
    match quoted.as_slice() {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

/// The message asking the user to repeat a command that could not be
/// completed.
pub fn clarification_message(signature: &str, resolved: &[(String, String)], missing: &[String]) -> String {
    let noun = if missing.len() == 1 { "parameter" } else { "parameters" };
    let mut s = format!(
        "Unable to retrieve {} {noun} for function {signature}.",
        quote_list(missing)
    );
    for (name, value) in resolved {
        s.push_str(&format!(" The '{name}' parameter was detected as {value}."));
    }
    s.push_str(" Could you repeat your command?");
    s
}

/// Picks one object for a single-object slot: manipulatable ones first,
/// then the one closest in angle to the cone axis.
fn pick_one(scene: &Scene, names: &[String], vertex: &Vec3, axis: &Vec3) -> Option<String> {
    names
        .iter()
        .filter_map(|n| scene.get(n))
        .min_by(|a, b| {
            let key = |o: &crate::scene::SceneObject| {
                (
                    !o.manipulatable,
                    crate::geometry::angle_between(&(o.position - vertex), axis),
                )
            };
            let (ka, kb) = (key(a), key(b));
            ka.0.cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
        })
        .map(|o| o.name.clone())
}

fn extract(
    a: &AmbiguousParam,
    seg: &crate::gesture::GestureSegment,
    scene: &Scene,
    config: &PipelineConfig,
) -> Result<Value, String> {
    let err = |e: ExtractError| e.to_string();
    Ok(match a.kind {
        ParamKind::Position => Value::Position(extract_position(seg, scene, &a.ignore_objects).map_err(err)?),
        ParamKind::Object | ParamKind::ObjectList => {
            let cone = build_cone(seg).map_err(err)?;
            let hits = cone_intersect(scene, &cone);
            if hits.is_empty() {
                return Err("no object inside the pointing cone".into());
            }
            if a.kind == ParamKind::ObjectList {
                Value::ObjectList(hits)
            } else {
                let axis = cone.axis.into_inner();
                Value::Object(pick_one(scene, &hits, &cone.vertex, &axis).expect("nonempty"))
            }
        }
        ParamKind::Direction => Value::Direction(extract_direction(seg).map_err(err)?),
        ParamKind::RotationDelta => Value::Rotation(extract_rotation(seg, config.move_threshold_m).map_err(err)?),
        ParamKind::Size => {
            Value::Size(extract_size(seg, scene, &a.ignore_objects, config.move_threshold_m).map_err(err)?)
        }
        ParamKind::Path => Value::Path(extract_path(seg).map_err(err)?),
        ParamKind::Color | ParamKind::ShapeType => return Err(format!("a {} cannot be shown by a gesture", a.kind)),
    })
}

/// Parameter name, its value if known, and why it is missing otherwise.
type Slot = (String, Option<Bound>, Option<String>);

enum Bound {
    Value(Value),
    Selection(usize),
}

/// Resolves every ambiguous parameter from the gesture trace and, if all
/// succeed, runs the calls in order. Otherwise nothing runs and the first
/// incomplete call is reported back for clarification.
pub fn resolve(
    plan: &Plan,
    transcript: &Transcript,
    trace: &GestureTrace,
    scene: &Scene,
    catalog: &FunctionCatalog,
    config: &PipelineConfig,
) -> Resolution {
    let mut params = Vec::new();
    let mut bound: Vec<Vec<Slot>> = Vec::new();

    for (ci, call) in plan.calls.iter().enumerate() {
        let mut row = Vec::new();
        let Some(sig) = catalog.get(&call.function) else {
            return unknown_function(call, ci, scene, params, catalog);
        };
        for spec in &sig.params {
            if let Some(tp) = call.text(&spec.name) {
                let (b, shown) = match &tp.literal {
                    Literal::Value(v) => (Bound::Value(v.clone()), tp.phrase.clone().unwrap_or_else(|| v.describe())),
                    Literal::ResultOf(k) => (
                        Bound::Selection(*k),
                        tp.phrase.clone().unwrap_or_else(|| "the selected objects".into()),
                    ),
                };
                row.push((spec.name.clone(), Some(b), Some(shown)));
            } else if let Some(a) = call.ambiguous(&spec.name) {
                let window = if a.token.is_valid_for(transcript) {
                    token_window(transcript, &a.token, config.padding_ms)
                } else {
                    TimeInterval::new(0, -1)
                };
                let (frames, result) = match segment(trace, window) {
                    Ok(seg) => (seg.frames.len(), extract(a, &seg, scene, config)),
                    Err(e) => (0, Err(e.to_string())),
                };
                let (value, error) = match result {
                    Ok(v) => (Some(v), None),
                    Err(e) => (None, Some(e)),
                };
                params.push(ParamReport {
                    call: ci,
                    name: a.name.clone(),
                    kind: a.kind,
                    window,
                    frames,
                    value: value.clone(),
                    error,
                });
                let shown = value.as_ref().map(Value::describe);
                row.push((spec.name.clone(), value.map(Bound::Value), shown));
            } else {
                row.push((spec.name.clone(), None, None));
            }
        }
        bound.push(row);
    }

    // First call with an unresolved parameter asks for clarification.
    for (ci, row) in bound.iter().enumerate() {
        let missing: Vec<String> = row.iter().filter(|r| r.1.is_none()).map(|r| r.0.clone()).collect();
        if missing.is_empty() {
            continue;
        }
        let sig = catalog.get(&plan.calls[ci].function).expect("checked");
        let resolved: Vec<(String, String)> = row
            .iter()
            .filter(|r| r.1.is_some())
            .map(|r| (r.0.clone(), r.2.clone().unwrap_or_default()))
            .collect();
        let signature = sig.to_string();
        let message = clarification_message(&signature, &resolved, &missing);
        return Resolution {
            outcome: Outcome::Clarification(ClarificationRequest {
                call: ci,
                function: sig.name.clone(),
                signature,
                missing,
                resolved,
                message,
            }),
            scene: scene.clone(),
            params,
        };
    }

    let mut current = scene.clone();
    let mut reports: Vec<CallReport> = Vec::new();
    for (ci, row) in bound.into_iter().enumerate() {
        let function = plan.calls[ci].function.clone();
        let mut fc = FunctionCall::new(function.clone());
        for (name, b, _) in row {
            let v = match b.expect("all bound") {
                Bound::Value(v) => v,
                Bound::Selection(k) => Value::ObjectList(
                    reports.get(k).and_then(|r| r.selection.clone()).unwrap_or_default(),
                ),
            };
            fc = fc.arg(&name, v);
        }
        match execute_call_with(&current, &fc, catalog, &config.exec) {
            Ok(out) => {
                current = out.scene;
                reports.push(CallReport {
                    function,
                    args: fc.args,
                    selection: out.selection,
                    created: out.created,
                });
            }
            Err(e) => {
                return Resolution {
                    outcome: Outcome::Rejected(Rejection {
                        call: ci,
                        function,
                        message: e.to_string(),
                    }),
                    scene: scene.clone(),
                    params,
                }
            }
        }
    }
    Resolution {
        outcome: Outcome::Executed { calls: reports },
        scene: current,
        params,
    }
}

fn unknown_function(
    call: &PlannedCall,
    ci: usize,
    scene: &Scene,
    params: Vec<ParamReport>,
    catalog: &FunctionCatalog,
) -> Resolution {
    Resolution {
        outcome: Outcome::Rejected(Rejection {
            call: ci,
            function: call.function.clone(),
            message: crate::functions::general_error_message(catalog),
        }),
        scene: scene.clone(),
        params,
    }
}

// ---------------------------------------------------------------------------
// Metrics

/// Euclidean distance in meters.
pub fn metric_position_error(p: &Vec3, target: &Vec3) -> f64 {
    (p - target).norm()
}

/// Smallest rotation angle between two orientations, in degrees.
pub fn metric_rotation_diff(r: &Rotation, target: &Rotation) -> f64 {
    // 2·acos|⟨q1, q2⟩|, computed in atan2 form to keep precision near zero
    r.angle_to(target).to_degrees()
}

/// Angle between two directions in degrees.
pub fn metric_direction_diff(d: &Vec3, target: &Vec3) -> f64 {
    direction_difference_degrees(d, target)
}

/// `|length - target| / target` in percent; `None` for a zero target.
pub fn metric_size_pct(length: f64, target: f64) -> Option<f64> {
    (target != 0.0).then(|| (length - target).abs() / target * 100.0)
}

/// Precision and recall in percent. Either is `None` when its denominator
/// is zero.
pub fn metric_selection(selected: &[String], truth: &[String]) -> (Option<f64>, Option<f64>) {
    let sel: HashSet<&str> = selected.iter().map(String::as_str).collect();
    let tru: HashSet<&str> = truth.iter().map(String::as_str).collect();
    let tp = sel.intersection(&tru).count() as f64;
    let pct = |den: usize| (den > 0).then(|| tp / den as f64 * 100.0);
    (pct(sel.len()), pct(tru.len()))
}

/// DTW similarity of a drawn path to the target path, percent.
pub fn metric_path(drawn: &[Vec3], target: &[Vec3]) -> Result<f64, FitError> {
    dtw_similarity(drawn, target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::vec3;
    use crate::gesture::{HandFrame, HandPose, JointPose};
    use crate::intent::plan_rules;
    use crate::scene::{serialize_scene, SceneObject};
    use approx::assert_abs_diff_eq;

    fn gallery() -> Scene {
        Scene::from_objects(vec![
            SceneObject::new("Starry Night", vec3(-1.0, 1.2, 2.0), vec3(0.9, 0.7, 0.05)),
            SceneObject::new("wall", vec3(0.0, 1.5, 3.05), vec3(6.0, 3.0, 0.1)).fixed(),
        ])
        .unwrap()
    }

    fn pointing(t_ms: i64, at: Vec3) -> HandFrame {
        let meta = vec3(0.2, 1.3, 0.3);
        let dir = (at - meta).normalize();
        HandFrame {
            t_ms,
            left: None,
            right: Some(HandPose {
                palm: JointPose::at(meta - dir * 0.05),
                thumb_tip: JointPose::at(meta + vec3(-0.03, 0.0, 0.02)),
                index_tip: JointPose::at(meta + dir * 0.08),
                middle_tip: JointPose::at(meta + vec3(0.02, -0.02, 0.05)),
                index_metacarpal: JointPose::at(meta),
            }),
        }
    }

    const UTTERANCE: &str = "Hang the Starry Night painting on the wall here.";

    fn run(trace: &GestureTrace) -> (Resolution, Scene) {
        let t = Transcript::from_text("u", UTTERANCE, 0, 250, 50);
        let scene = gallery();
        let catalog = FunctionCatalog::default();
        let plan = plan_rules(&t, &scene, &catalog).unwrap();
        (resolve(&plan, &t, trace, &scene, &catalog, &PipelineConfig::default()), scene)
    }

    #[test]
    fn pointing_hangs_the_painting() {
        let target = vec3(0.5, 1.4, 3.0);
        // "here" is word 8: 2400..2650 ms
        let frames = (0..100).map(|i| pointing(2000 + i * 10, target)).collect();
        let (res, _) = run(&GestureTrace::new(frames).unwrap());
        assert!(res.is_executed(), "{:?}", res.outcome);
        assert_abs_diff_eq!(res.scene.get("Starry Night").unwrap().position, target, epsilon = 1e-9);
    }

    #[test]
    fn missing_gesture_asks_again() {
        let frames = (0..10).map(|i| pointing(i * 10, vec3(0.0, 1.0, 3.0))).collect();
        let (res, scene) = run(&GestureTrace::new(frames).unwrap());
        let Outcome::Clarification(c) = &res.outcome else {
            panic!("{:?}", res.outcome)
        };
        assert_eq!(
            c.message,
            "Unable to retrieve 'position' parameter for function move(object, position). The 'object' \
             parameter was detected as the Starry Night painting. Could you repeat your command?"
        );
        assert_eq!(serialize_scene(&res.scene), serialize_scene(&scene));
    }

    #[test]
    fn message_variants() {
        assert_eq!(
            clarification_message("move(object, position)", &[], &["object".into()]),
            "Unable to retrieve 'object' parameter for function move(object, position). Could you repeat your command?"
        );
        assert_eq!(
            clarification_message("move(object, position)", &[], &["object".into(), "position".into()]),
            "Unable to retrieve 'object' and 'position' parameters for function move(object, position). \
             Could you repeat your command?"
        );
    }

    #[test]
    fn metric_formulas() {
        let r = Rotation::from_euler_degrees([10.0, 20.0, 30.0]);
        assert_abs_diff_eq!(metric_rotation_diff(&r, &r), 0.0, epsilon = 1e-12);
        let d = Rotation::from_axis_angle_degrees(&Vec3::x_axis(), 37.0);
        assert_abs_diff_eq!(metric_rotation_diff(&r, &r.compose(&d)), 37.0, epsilon = 1e-9);
        assert_abs_diff_eq!(metric_size_pct(0.1, 0.2).unwrap(), 50.0);
        assert_eq!(metric_size_pct(0.1, 0.0), None);
        let nine: Vec<String> = (0..9).map(|i| format!("c{i}")).collect();
        assert_eq!(metric_selection(&nine, &nine), (Some(100.0), Some(100.0)));
        assert_eq!(metric_selection(&[], &nine), (None, Some(0.0)));
        assert_abs_diff_eq!(metric_position_error(&vec3(1.0, 2.0, 2.0), &Vec3::zeros()), 3.0);
    }
}
