//! One utterance end to end, reported as JSON lines.

use std::time::Instant;

use cospeech::functions::FunctionCatalog;
use cospeech::gesture::GestureTrace;
use cospeech::intent::{plan_llm, plan_rules, plan_to_json, IntentBackend, IntentError};
use cospeech::pipeline::{resolve, Outcome, PipelineConfig, Resolution};
use cospeech::scene::{serialize_scene, Scene};
use cospeech::transcript::Transcript;
use serde_json::{json, Value as Json};

pub enum Planner<'a> {
    Rules,
    Llm(&'a dyn IntentBackend),
}

/// Exit status of a replay.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Executed,
    /// Clarification, rejection, or no matching function.
    NeedsUser,
    InputError,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Executed => 0,
            Status::InputError => 1,
            Status::NeedsUser => 2,
        }
    }
}

pub struct Replay {
    pub status: Status,
    pub records: Vec<Json>,
    /// The scene after the utterance; the input scene unless executed.
    pub scene: Scene,
}

pub fn replay(
    scene: &Scene,
    transcript: &Transcript,
    trace: &GestureTrace,
    planner: Planner<'_>,
    config: &PipelineConfig,
) -> Replay {
    let catalog = FunctionCatalog::default_catalog();
    let mut records = vec![json!({
        "record": "transcript",
        "utterance_id": transcript.utterance_id,
        "text": transcript.text(),
    })];
    let backend = match planner {
        Planner::Rules => "rules",
        Planner::Llm(_) => "llm",
    };
    let started = Instant::now();
    let planned = match planner {
        Planner::Rules => plan_rules(transcript, scene, &catalog),
        Planner::Llm(b) => plan_llm(transcript, scene, &catalog, b),
    };
    let plan_ms = started.elapsed().as_secs_f64() * 1e3;
    let plan = match planned {
        Ok(p) => p,
        Err(e) => {
            let status = match e {
                IntentError::NoFunctionMatched { .. } => Status::NeedsUser,
                _ => Status::InputError,
            };
            let mut rec = json!({"record": "rejected", "stage": "plan", "backend": backend, "message": e.to_string()});
            if let IntentError::MalformedReply { raw, .. } = &e {
                rec["raw"] = json!(raw);
            }
            records.push(rec);
            records.push(json!({"record": "timing", "plan_ms": plan_ms}));
            records.push(scene_record(scene));
            return Replay {
                status,
                records,
                scene: scene.clone(),
            };
        }
    };
    records.push(json!({"record": "plan", "backend": backend, "calls": plan_to_json(&plan)["calls"]}));

    let started = Instant::now();
    let res = resolve(&plan, transcript, trace, scene, &catalog, config);
    let resolve_ms = started.elapsed().as_secs_f64() * 1e3;
    records.extend(param_records(&res));
    let status = match &res.outcome {
        Outcome::Executed { calls } => {
            let calls: Vec<Json> = calls
                .iter()
                .map(|c| {
                    let args: serde_json::Map<String, Json> =
                        c.args.iter().map(|(n, v)| (n.clone(), v.to_json())).collect();
                    json!({"function": c.function, "args": args, "selection": c.selection, "created": c.created})
                })
                .collect();
            records.push(json!({"record": "executed", "calls": calls}));
            Status::Executed
        }
        Outcome::Clarification(c) => {
            records.push(json!({
                "record": "clarification",
                "call": c.call,
                "function": c.function,
                "signature": c.signature,
                "missing": c.missing,
                "resolved": c.resolved.iter().map(|(n, v)| json!([n, v])).collect::<Vec<_>>(),
                "message": c.message,
            }));
            Status::NeedsUser
        }
        Outcome::Rejected(r) => {
            records.push(json!({"record": "rejected", "stage": "execute", "call": r.call, "function": r.function, "message": r.message}));
            Status::NeedsUser
        }
    };
    records.push(json!({"record": "timing", "plan_ms": plan_ms, "resolve_ms": resolve_ms}));
    records.push(scene_record(&res.scene));
    Replay {
        status,
        records,
        scene: res.scene,
    }
}

fn param_records(res: &Resolution) -> impl Iterator<Item = Json> + '_ {
    res.params.iter().map(|p| {
        json!({
            "record": "param",
            "call": p.call,
            "name": p.name,
            "kind": p.kind.as_str(),
            "window_ms": [p.window.start_ms, p.window.end_ms],
            "frames": p.frames,
            "value": p.value.as_ref().map(|v| v.to_json()),
            "error": p.error,
        })
    })
}

fn scene_record(scene: &Scene) -> Json {
    let doc: Json = serde_json::from_str(&serialize_scene(scene)).expect("scene JSON is valid");
    json!({"record": "scene", "scene": doc})
}

/// One JSON document per line.
pub fn to_lines(records: &[Json]) -> String {
    records.iter().map(|r| r.to_string() + "\n").collect()
}
