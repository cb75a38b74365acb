use std::collections::BTreeSet;

use cospeech::functions::FunctionCatalog;
use cospeech::geometry::{vec3, Vec3};
use cospeech::intent::{parse_backend_reply, plan_rules, plan_to_json, validate_plan, IntentError, Literal};
use cospeech::scene::{Scene, SceneObject};
use cospeech::transcript::Transcript;
use proptest::prelude::*;

const VOCAB: &[&str] = &[
    "move", "put", "hang", "rotate", "turn", "face", "resize", "scale", "select", "paint", "color", "draw",
    "animate", "sketch", "the", "a", "this", "that", "these", "it", "them", "cube", "lamp", "table", "Starry",
    "Night", "painting", "red", "blue", "green", "here", "there", "way", "like", "along", "path", "size",
    "large", "to", "on", "behind", "in", "front", "of", "then", "and", "20", "cm", "90", "degrees",
    "clockwise", "circle", "line", "sine", "wave", "toward", "me", "spot", "please", "quickly", "now",
];

fn scene() -> Scene {
    Scene::from_objects(vec![
        SceneObject::new("table", vec3(0.0, 0.4, 1.0), vec3(1.6, 0.8, 0.8)).fixed(),
        SceneObject::new("cube", vec3(0.0, 0.85, 1.0), Vec3::repeat(0.1)),
        SceneObject::new("lamp", vec3(0.5, 0.9, 1.0), vec3(0.1, 0.2, 0.1)),
        SceneObject::new("Starry Night", vec3(-1.0, 1.2, 2.0), vec3(0.9, 0.7, 0.05)),
    ])
    .unwrap()
}

fn utterance() -> impl Strategy<Value = String> {
    prop::collection::vec((prop::sample::select(VOCAB), prop::sample::select(&["", "", "", ",", "."][..])), 1..16)
        .prop_map(|ws| ws.into_iter().map(|(w, p)| format!("{w}{p}")).collect::<Vec<_>>().join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    // Every planned call splits its signature's parameters into text and
    // gesture parameters, with nothing left out and nothing in both.
    #[test]
    fn planned_calls_partition_their_signature(text in utterance()) {
        let catalog = FunctionCatalog::default_catalog();
        let scene = scene();
        let t = Transcript::from_text("u", &text, 0, 300, 80);
        match plan_rules(&t, &scene, &catalog) {
            Ok(plan) => {
                prop_assert!(!plan.calls.is_empty());
                for (i, call) in plan.calls.iter().enumerate() {
                    let sig = catalog.get(&call.function).unwrap();
                    let expected: BTreeSet<&str> = sig.params.iter().map(|p| p.name.as_str()).collect();
                    let text_names: Vec<&str> = call.text_params.iter().map(|p| p.name.as_str()).collect();
                    let amb_names: Vec<&str> = call.amb_params.iter().map(|p| p.name.as_str()).collect();
                    let text_set: BTreeSet<&str> = text_names.iter().copied().collect();
                    let amb_set: BTreeSet<&str> = amb_names.iter().copied().collect();
                    prop_assert_eq!(text_set.len() + amb_set.len(), text_names.len() + amb_names.len());
                    prop_assert!(text_set.is_disjoint(&amb_set));
                    let union: BTreeSet<&str> = text_set.union(&amb_set).copied().collect();
                    prop_assert_eq!(union, expected);
                    for a in &call.amb_params {
                        prop_assert!(a.token.first <= a.token.last && a.token.last < t.words.len());
                    }
                    for p in &call.text_params {
                        if let Literal::ResultOf(k) = p.literal {
                            prop_assert!(k < i);
                        }
                    }
                }
                prop_assert_eq!(validate_plan(&plan, &t, &scene, &catalog), Ok(()));
                // the reply form reads back to the same plan
                let reply = plan_to_json(&plan).to_string();
                prop_assert_eq!(parse_backend_reply(&reply, &t, &scene, &catalog).unwrap(), plan);
            }
            Err(IntentError::NoFunctionMatched { message }) => {
                prop_assert!(message.starts_with("Sorry, the system is unable to do that"));
            }
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}
