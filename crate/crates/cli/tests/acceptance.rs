//! Acceptance suite. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use cospeech::eval::{run_trial, PATH_SIMILARITY, PRECISION, RECALL};
use cospeech::extraction::{
    build_cone, extract_direction, extract_object, extract_position, extract_rotation, extract_size,
};
use cospeech::fitting::{fit_circle_2d, fit_line, fit_sine};
use cospeech::functions::{FunctionCatalog, COLOR_TOLERANCE};
use cospeech::geometry::{vec3, Rotation, UnitVec3, Vec3};
use cospeech::gesture::{segment, GestureSegment, GestureTrace};
use cospeech::intent::{plan_rules, IntentError, Plan};
use cospeech::pipeline::{resolve, Outcome, PipelineConfig};
use cospeech::scene::{serialize_scene, Cone, Scene, SceneObject};
use cospeech::synth::{hang_painting, synth_trial, synth_trials, Fixture, GroundTruth, SizeMode, SynthParams, Task};
use cospeech::transcript::{token_window, TokenSpan, DEFAULT_PADDING_MS};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value as Json;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn main() {
    let started = Instant::now();
    let criteria: [Criterion; 8] = [
        ("1 closed-loop zero-noise oracle", closed_loop),
        ("2 pointing noise scaling", noise_scaling),
        ("3 cone selection vs surface sampling", cone_oracle),
        ("4 fit suite", fit_suite),
        ("5 parameter partition", partition),
        ("6 atomicity and golden messages", atomicity),
        ("7 equivariance", equivariance),
        ("8 hang-the-painting replay", hang_replay),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let t = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {name} ({secs:.2} s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name} ({secs:.2} s): {why}");
            }
        }
    }
    let total = started.elapsed();
    println!("acceptance suite ran in {:.2} s", total.as_secs_f64());
    if total > Duration::from_secs(60) {
        println!("FAIL acceptance suite exceeded 60 s");
        failed += 1;
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_cospeech"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn window_segment(f: &Fixture, span: TokenSpan) -> GestureSegment {
    segment(&f.trace, token_window(&f.transcript, &span, DEFAULT_PADDING_MS)).expect("gesture in window")
}

// 1 -------------------------------------------------------------------------

fn closed_loop() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let started = Instant::now();
    let mut worst = Vec::new();
    for task in Task::ALL {
        let dir = tmp.path().join(task.as_str());
        let dir = dir.to_str().expect("utf-8 path");
        let out = cli(&["synth", "--task", task.as_str(), "--seed", "11", "--trials", "5", "--out", dir]);
        ensure(out.status.success(), || format!("synth {task} failed"))?;
        let out = cli(&["eval", "--task", task.as_str(), "--dir", dir, "--json"]);
        ensure(out.status.success(), || format!("eval {task} failed"))?;
        let lines: Vec<Json> = String::from_utf8_lossy(&out.stdout)
            .lines()
            .map(|l| serde_json::from_str(l).expect("json line"))
            .collect();
        let trials: Vec<&Json> = lines.iter().filter(|r| r["record"] == "trial").collect();
        ensure(trials.len() == 5, || format!("{task}: {} trials", trials.len()))?;
        let mut max_dev: f64 = 0.0;
        for r in trials {
            ensure(r["failure"].is_null(), || format!("{task}: {}", r["failure"]))?;
            for m in r["metrics"].as_array().expect("metrics") {
                let (name, v) = (m[0].as_str().expect("name"), m[1].as_f64().expect("value"));
                let (dev, tol) = match name {
                    PATH_SIMILARITY => (100.0 - v, 1e-6),
                    PRECISION | RECALL => (100.0 - v, 0.0),
                    // float round-off in the hand distances; the ledger notes this
                    "size_diff_pct" => (v, 1e-9),
                    _ => (v, 1e-6),
                };
                ensure(dev.abs() <= tol && v.is_finite(), || format!("{task}: {name} = {v}"))?;
                max_dev = max_dev.max(dev.abs());
            }
        }
        worst.push(format!("{task} {max_dev:.1e}"));
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("6x5 trials took {secs:.2} s"))?;
    Ok(format!("worst deviation per task: {}; {secs:.2} s", worst.join(", ")))
}

// 2 -------------------------------------------------------------------------

fn mean_position_error(sigma_deg: f64) -> Result<f64, String> {
    let params = SynthParams {
        sigma_deg,
        distance_m: 2.0,
        ..SynthParams::default()
    };
    let cfg = PipelineConfig::default();
    let mut sum = 0.0;
    for f in synth_trials(Task::Position, &params, 2024, 100) {
        let r = run_trial(&f, &cfg);
        let e = r.metric("position_error_m").ok_or_else(|| format!("trial failed: {:?}", r.failure))?;
        sum += e;
    }
    Ok(sum / 100.0)
}

fn noise_scaling() -> Check {
    let half = mean_position_error(0.5)?;
    let one = mean_position_error(1.0)?;
    ensure(half <= 0.04, || format!("mean error {half:.4} m at 0.5 deg"))?;
    ensure(one > half, || format!("1.0 deg gives {one:.5} m, not above {half:.5} m"))?;
    Ok(format!("mean error {half:.5} m at 0.5 deg, {one:.5} m at 1.0 deg"))
}

// 3 -------------------------------------------------------------------------

/// Point in the closed cone, written from the cone's defining quantities.
fn in_cone(c: &Cone, p: &Vec3) -> bool {
    let a = c.axis.into_inner();
    let d = p - c.vertex;
    let t = d.dot(&a);
    let plane = (c.base_center - c.vertex).dot(&a);
    if t < 0.0 || t > c.height {
        return false;
    }
    let radial = (d - a * t).norm();
    radial <= c.base_radius * t / plane
}

/// Samples the six faces of the object's box on an `n`x`n` grid each.
fn box_surface(o: &SceneObject, n: usize) -> Vec<Vec3> {
    let half = o.scale / 2.0;
    let mut pts = Vec::with_capacity(6 * n * n);
    for axis in 0..3 {
        for sign in [-1.0, 1.0] {
            for i in 0..n {
                for j in 0..n {
                    let (s, t) = (i as f64 / (n - 1) as f64 * 2.0 - 1.0, j as f64 / (n - 1) as f64 * 2.0 - 1.0);
                    let mut local = Vec3::zeros();
                    local[axis] = sign * half[axis];
                    local[(axis + 1) % 3] = s * half[(axis + 1) % 3];
                    local[(axis + 2) % 3] = t * half[(axis + 2) % 3];
                    pts.push(o.position + o.rotation.rotate(&local));
                }
            }
        }
    }
    pts
}

fn cone_oracle() -> Check {
    let mut compared = 0;
    for seed in 0..50 {
        let f = synth_trial(Task::Object, &SynthParams::default(), 5000 + seed, 0);
        let counts = ["red", "green", "blue"].map(|c| {
            let rgb = cospeech::functions::color_by_name(c).expect("known").rgb;
            f.scene
                .objects()
                .iter()
                .filter(|o| o.color.is_some_and(|c| c.approx_eq(&rgb, COLOR_TOLERANCE)))
                .count()
        });
        ensure(counts == [9, 8, 8], || format!("seed {seed}: color counts {counts:?}"))?;
        let seg = window_segment(&f, TokenSpan::new(1, 3));
        let cone = build_cone(&seg).map_err(|e| e.to_string())?;
        let picked: BTreeSet<String> = extract_object(&seg, &f.scene).map_err(|e| e.to_string())?.into_iter().collect();
        for o in f.scene.objects() {
            // surface grid near 1 mm on the cubes, 1 cm on the table
            let n = ((o.scale.max() / 0.001).ceil() as usize).clamp(20, 200);
            let oracle = box_surface(o, n).iter().any(|p| in_cone(&cone, p));
            let got = picked.contains(&o.name);
            ensure(oracle == got, || format!("seed {seed}: `{}` oracle {oracle}, extractor {got}", o.name))?;
            compared += 1;
        }
    }
    Ok(format!("{compared} object checks, 0 disagreements"))
}

// 4 -------------------------------------------------------------------------

/// Least squares of `a sin(wu) + b cos(wu) + c` at fixed `w`, by Cramer's rule.
fn sine_sse_at(points: &[[f64; 2]], w: f64) -> f64 {
    let mut m = [[0.0; 3]; 3];
    let mut r = [0.0; 3];
    for &[u, v] in points {
        let row = [(w * u).sin(), (w * u).cos(), 1.0];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += row[i] * row[j];
            }
            r[i] += row[i] * v;
        }
    }
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    let mut x = [0.0; 3];
    for (k, xk) in x.iter_mut().enumerate() {
        let mut mk = m;
        for i in 0..3 {
            mk[i][k] = r[i];
        }
        *xk = det(&mk) / d;
    }
    points
        .iter()
        .map(|&[u, v]| (x[0] * (w * u).sin() + x[1] * (w * u).cos() + x[2] - v).powi(2))
        .sum()
}

fn check_sine(amplitude: f64, period: f64, phase: f64, offset: f64, span: f64) -> Result<(), String> {
    let pts: Vec<[f64; 2]> = (0..64)
        .map(|k| {
            let u = span * k as f64 / 63.0;
            [u, amplitude * (std::f64::consts::TAU * u / period + phase).sin() + offset]
        })
        .collect();
    let fit = fit_sine(&pts).map_err(|e| e.to_string())?;
    ensure((fit.amplitude - amplitude).abs() < 1e-6, || format!("amplitude {}", fit.amplitude))?;
    ensure((fit.period - period).abs() < 1e-6, || format!("period {}", fit.period))?;
    ensure((fit.offset - offset).abs() < 1e-6, || format!("offset {}", fit.offset))?;
    // dense frequency grid with the linear part solved exactly at each node
    let (lo, hi) = (std::f64::consts::PI / span, std::f64::consts::PI * 63.0 / span);
    let nodes = 20_000;
    let (best_w, best) = (0..=nodes)
        .map(|k| lo + (hi - lo) * k as f64 / nodes as f64)
        .map(|w| (w, sine_sse_at(&pts, w)))
        .fold((0.0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    let fit_w = std::f64::consts::TAU / fit.period;
    let step = (hi - lo) / nodes as f64;
    ensure((fit_w - best_w).abs() <= step, || format!("fit w {fit_w}, oracle w {best_w}"))?;
    ensure(fit.sse <= best + 1e-12, || format!("fit sse {} above oracle {best}", fit.sse))
}

fn fit_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut circle_err: f64 = 0.0;
    for _ in 0..50 {
        let (cx, cy, r) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(0.05..3.0));
        let start = rng.random_range(0.0..std::f64::consts::TAU);
        let sweep = rng.random_range(1.0..std::f64::consts::TAU);
        let pts: Vec<[f64; 2]> = (0..40)
            .map(|k| {
                let a = start + sweep * k as f64 / 39.0;
                [cx + r * a.cos(), cy + r * a.sin()]
            })
            .collect();
        let c = fit_circle_2d(&pts).map_err(|e| e.to_string())?;
        let e = (c.center[0] - cx).abs().max((c.center[1] - cy).abs()).max((c.radius - r).abs());
        ensure(e < 1e-9, || format!("circle off by {e:e}"))?;
        circle_err = circle_err.max(e);
    }
    // the drawing-task sine: 0.3 m long, amplitude 0.2 m, 1.5 periods
    check_sine(0.2, 0.2, 0.0, 0.0, 0.3)?;
    // the literal period reading, T = 1.5 over two periods
    check_sine(0.2, 1.5, 0.4, 0.1, 3.0)?;
    let mut line_err: f64 = 0.0;
    for _ in 0..50 {
        let d = UnitVec3::new_normalize(vec3(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let p0 = vec3(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let pts: Vec<Vec3> = (0..30).map(|k| p0 + d.into_inner() * (k as f64 * 0.05)).collect();
        let l = fit_line(&pts).map_err(|e| e.to_string())?;
        let e = (l.direction.into_inner() - d.into_inner()).norm();
        ensure(e < 1e-9, || format!("line direction off by {e:e}"))?;
        line_err = line_err.max(e);
    }
    Ok(format!("circle max error {circle_err:.1e}, line max error {line_err:.1e}, sines match the grid oracle"))
}

// 5 -------------------------------------------------------------------------

fn partition_scene() -> Scene {
    Scene::from_objects(vec![
        SceneObject::new("table", vec3(0.0, 0.4, 1.0), vec3(1.6, 0.8, 0.8)).fixed(),
        SceneObject::new("cube", vec3(0.0, 0.85, 1.0), Vec3::repeat(0.1)),
        SceneObject::new("lamp", vec3(0.5, 0.9, 1.0), vec3(0.1, 0.2, 0.1)),
        SceneObject::new("Starry Night", vec3(-1.0, 1.2, 2.0), vec3(0.9, 0.7, 0.05)),
        SceneObject::new("red cube", vec3(0.2, 0.85, 1.0), Vec3::repeat(0.05)),
    ])
    .expect("valid")
}

fn random_clause(rng: &mut ChaCha8Rng, after_select: bool) -> String {
    let objects = ["the cube", "the lamp", "the table", "the Starry Night painting", "this", "that chair", "it"];
    let obj = *objects.choose(rng).expect("nonempty");
    let colors = ["red", "green", "blue", "yellow", "white"];
    let color = *colors.choose(rng).expect("nonempty");
    let shapes = ["line", "circle", "sine wave", "wave"];
    let n = rng.random_range(1..=180);
    let pronoun = if after_select { "them" } else { obj };
    let options = [
        format!("move {pronoun} here"),
        format!("put {obj} there"),
        format!("place {obj} behind the table there"),
        format!("move {obj} to this spot"),
        format!("move {obj} along this path"),
        format!("animate {obj} like this"),
        format!("rotate {obj} like this"),
        format!("turn {obj} this way"),
        format!("rotate {obj} {n} degrees clockwise"),
        format!("spin {obj} {n} degrees"),
        format!("face {obj} toward me"),
        format!("resize {obj} to this size"),
        format!("scale {obj} to {n} cm"),
        format!("enlarge {obj} to this large"),
        format!("select these {color} cubes"),
        "select these cubes".to_string(),
        format!("select {obj}"),
        format!("paint {obj} {color}"),
        format!("color {pronoun} {color}"),
        format!("draw a {} like this", shapes.choose(rng).expect("nonempty")),
        format!("sketch a {} here", shapes.choose(rng).expect("nonempty")),
        "draw this".to_string(),
        format!("paint {obj}"),
    ];
    options.choose(rng).expect("nonempty").clone()
}

fn random_utterance(rng: &mut ChaCha8Rng) -> String {
    let clauses = rng.random_range(1..=3);
    let mut text = String::new();
    let mut prev_select = false;
    for k in 0..clauses {
        let clause = random_clause(rng, prev_select);
        prev_select = clause.starts_with("select");
        if k > 0 {
            text.push_str([" then ", " and ", ". ", ", then "].choose(rng).expect("nonempty"));
        }
        text.push_str(&clause);
    }
    text
}

fn partition_holds(plan: &Plan, catalog: &FunctionCatalog) -> Result<(), String> {
    for call in &plan.calls {
        let sig = catalog.get(&call.function).ok_or("unknown function in plan")?;
        let expected: BTreeSet<&str> = sig.params.iter().map(|p| p.name.as_str()).collect();
        let text: BTreeSet<&str> = call.text_params.iter().map(|p| p.name.as_str()).collect();
        let amb: BTreeSet<&str> = call.amb_params.iter().map(|p| p.name.as_str()).collect();
        ensure(text.len() == call.text_params.len() && amb.len() == call.amb_params.len(), || {
            format!("{}: repeated parameter", call.function)
        })?;
        ensure(text.is_disjoint(&amb), || format!("{}: text and gesture overlap", call.function))?;
        let union: BTreeSet<&str> = text.union(&amb).copied().collect();
        ensure(union == expected, || format!("{}: covers {union:?}, needs {expected:?}", call.function))?;
    }
    Ok(())
}

fn partition() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let scene = partition_scene();
    let catalog = FunctionCatalog::default_catalog();
    let mut calls = 0;
    for k in 0..1000 {
        let text = random_utterance(&mut rng);
        let t = cospeech::transcript::Transcript::from_text(&format!("u{k}"), &text, 0, 300, 80);
        let plan = plan_rules(&t, &scene, &catalog).map_err(|e| format!("`{text}`: {e}"))?;
        partition_holds(&plan, &catalog).map_err(|e| format!("`{text}`: {e}"))?;
        calls += plan.calls.len();
    }
    Ok(format!("1000 utterances, {calls} planned calls"))
}

// 6 -------------------------------------------------------------------------

fn quoted_list(names: &[String]) -> String {
    let q: Vec<String> = names.iter().map(|n| format!("'{n}'")).collect();
    match q.len() {
        1 => format!("{} parameter", q[0]),
        _ => format!("{} and {} parameters", q[..q.len() - 1].join(", "), q[q.len() - 1]),
    }
}

fn atomicity() -> Check {
    let catalog = FunctionCatalog::default_catalog();
    let cfg = PipelineConfig::default();
    let mut fixtures: Vec<Fixture> = Task::ALL
        .iter()
        .flat_map(|&task| synth_trials(task, &SynthParams::default(), 77, 3))
        .collect();
    for f in &mut fixtures {
        f.trace = GestureTrace::default();
    }
    fixtures.push(hang_painting(3, false));
    for f in &fixtures {
        let before = serialize_scene(&f.scene);
        let plan = plan_rules(&f.transcript, &f.scene, &catalog).map_err(|e| e.to_string())?;
        let res = resolve(&plan, &f.transcript, &f.trace, &f.scene, &catalog, &cfg);
        let Outcome::Clarification(c) = &res.outcome else {
            return Err(format!("`{}` did not ask back", f.transcript.text()));
        };
        ensure(serialize_scene(&res.scene) == before, || "scene changed".into())?;
        let detected: String = c
            .resolved
            .iter()
            .map(|(n, v)| format!(" The '{n}' parameter was detected as {v}."))
            .collect();
        let expected = format!(
            "Unable to retrieve {} for function {}.{detected} Could you repeat your command?",
            quoted_list(&c.missing),
            c.signature
        );
        ensure(c.message == expected, || format!("message `{}`", c.message))?;
    }
    let fig2 = hang_painting(3, false);
    let plan = plan_rules(&fig2.transcript, &fig2.scene, &catalog).map_err(|e| e.to_string())?;
    let res = resolve(&plan, &fig2.transcript, &fig2.trace, &fig2.scene, &catalog, &cfg);
    let Outcome::Clarification(c) = res.outcome else { return Err("hang fixture executed".into()) };
    let golden = "Unable to retrieve 'position' parameter for function move(object, position). \
                  The 'object' parameter was detected as the Starry Night painting. Could you repeat your command?";
    ensure(c.message == golden, || format!("hang message `{}`", c.message))?;

    let t = cospeech::transcript::Transcript::from_text("u", "sing me a song", 0, 300, 80);
    let general = "Sorry, the system is unable to do that, the system is able to do \
                   select, move, rotate_dir, rotate, resize, move_path, draw_path, set_color.";
    match plan_rules(&t, &fig2.scene, &catalog) {
        Err(IntentError::NoFunctionMatched { message }) => {
            ensure(message == general, || format!("general message `{message}`"))?
        }
        other => return Err(format!("unknown function planned as {other:?}")),
    }
    Ok(format!("{} clarification fixtures left their scenes unchanged", fixtures.len()))
}

// 7 -------------------------------------------------------------------------

fn random_rigid(rng: &mut ChaCha8Rng) -> (Rotation, Vec3) {
    let axis = UnitVec3::new_normalize(vec3(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let r = Rotation::from_axis_angle(&axis, rng.random_range(-3.1..3.1));
    let t = vec3(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
    (r, t)
}

fn span_of(f: &Fixture) -> TokenSpan {
    let n = f.transcript.words.len();
    match f.truth {
        GroundTruth::Position { .. } => TokenSpan::single(n - 1),
        _ => TokenSpan::new(n - 2, n - 1),
    }
}

fn equivariance() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let p = SynthParams {
        sigma_deg: 0.7,
        palm_sigma_m: 0.003,
        ..SynthParams::default()
    };
    let thr = PipelineConfig::default().move_threshold_m;
    let fixtures: Vec<Fixture> = vec![
        synth_trial(Task::Position, &p, 1, 0),
        synth_trial(Task::Direction, &p, 2, 2),
        synth_trial(Task::Rotation, &SynthParams { hands: Some(1), ..p.clone() }, 3, 0),
        synth_trial(Task::Rotation, &SynthParams { hands: Some(2), ..p.clone() }, 4, 0),
        synth_trial(Task::Size, &SynthParams { size_mode: Some(SizeMode::OneHand), ..p.clone() }, 5, 0),
        synth_trial(Task::Size, &SynthParams { size_mode: Some(SizeMode::TwoHands), ..p.clone() }, 6, 0),
        synth_trial(Task::Size, &SynthParams { size_mode: Some(SizeMode::Surface), ..p.clone() }, 7, 0),
    ];
    let mut worst: f64 = 0.0;
    for k in 0..200 {
        let (r, t) = random_rigid(&mut rng);
        for f in &fixtures {
            let seg = window_segment(f, span_of(f));
            let moved = seg.transformed(&r, &t);
            let scene2 = f.scene.transformed(&r, &t);
            let err = match f.truth {
                GroundTruth::Position { .. } => {
                    let a = extract_position(&seg, &f.scene, &[]).map_err(|e| e.to_string())?;
                    let b = extract_position(&moved, &scene2, &[]).map_err(|e| e.to_string())?;
                    (b - (r.rotate(&a) + t)).norm()
                }
                GroundTruth::Direction { .. } => {
                    let a = extract_direction(&seg).map_err(|e| e.to_string())?;
                    let b = extract_direction(&moved).map_err(|e| e.to_string())?;
                    (b.into_inner() - r.rotate(&a.into_inner())).norm()
                }
                GroundTruth::Rotation { .. } => {
                    let a = extract_rotation(&seg, thr).map_err(|e| e.to_string())?;
                    let b = extract_rotation(&moved, thr).map_err(|e| e.to_string())?;
                    b.angle_to(&r.compose(&a).compose(&r.inverse()))
                }
                GroundTruth::Size { .. } => {
                    let a = extract_size(&seg, &f.scene, &[], thr).map_err(|e| e.to_string())?;
                    let b = extract_size(&moved, &scene2, &[], thr).map_err(|e| e.to_string())?;
                    (a - b).abs()
                }
                _ => unreachable!("only the four transforming extractors"),
            };
            ensure(err <= 1e-9, || format!("transform {k}, {:?}: error {err:e}", f.truth.task()))?;
            worst = worst.max(err);
        }
    }
    Ok(format!("200 transforms x {} extractions, worst {worst:.1e}", fixtures.len()))
}

// 8 -------------------------------------------------------------------------

fn hang_replay() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path().join("hang");
    let d = dir.to_str().expect("utf-8 path");
    let out = cli(&["synth", "--task", "hang", "--seed", "8", "--trials", "1", "--out", d]);
    ensure(out.status.success(), || "synth failed".into())?;
    let trial = dir.join("trial_000");
    let file = |n: &str| trial.join(n).to_str().expect("utf-8").to_string();
    let report = tmp.path().join("report.jsonl");
    let scene_out = tmp.path().join("scene.json");
    let out = cli(&[
        "replay",
        "--scene",
        &file("scene.json"),
        "--transcript",
        &file("transcript.json"),
        "--trace",
        &file("trace.json"),
        "--backend",
        "rules",
        "--out",
        report.to_str().expect("utf-8"),
        "--scene-out",
        scene_out.to_str().expect("utf-8"),
    ]);
    ensure(out.status.code() == Some(0), || format!("exit {:?}", out.status.code()))?;
    let truth: GroundTruth = serde_json::from_str(&read(&trial.join("truth.json"))?).map_err(|e| e.to_string())?;
    let GroundTruth::Position { target, .. } = truth else { return Err("wrong truth".into()) };
    let scene: Json = serde_json::from_str(&read(&scene_out)?).map_err(|e| e.to_string())?;
    let painting = scene
        .as_array()
        .and_then(|a| a.iter().find(|o| o["name"] == "Starry Night"))
        .ok_or("painting missing")?;
    let p: Vec<f64> = painting["position"].as_array().ok_or("no position")?.iter().filter_map(Json::as_f64).collect();
    let err = (Vec3::new(p[0], p[1], p[2]) - Vec3::from(target)).norm();
    ensure(err <= 1e-6, || format!("painting {err:e} m from the target"))?;
    Ok(format!("painting placed {err:.1e} m from the pointed target"))
}

fn read(p: &Path) -> Result<String, String> {
    std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))
}
