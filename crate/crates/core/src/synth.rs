//! Seeded synthetic sessions with known answers.
//!
//! Each generator returns a scene, a timed utterance, a hand trace and the
//! ground truth. The gesture stroke runs while the parameter words are
//! spoken; the hand holds still for [`HOLD_MS`] before and after and is out
//! of view otherwise.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::fitting::ShapeType;
use crate::functions::{color_by_name, ExecConfig};
use crate::geometry::{any_perpendicular, vec3, Rotation, UnitVec3, Vec3};
use crate::gesture::{GestureTrace, HandFrame, HandPose, JointPose};
use crate::scene::{load_scene, ray_intersect, serialize_scene, Ray, Scene, SceneObject};
use crate::transcript::{TokenSpan, Transcript};

pub const FRAME_RATE_HZ: f64 = 90.0;
pub const HOLD_MS: i64 = 600;
pub const WORD_MS: i64 = 300;
pub const GAP_MS: i64 = 80;
pub const SPEECH_START_MS: i64 = 500;
/// Initial edge length of the task cube.
pub const CUBE_EDGE_M: f64 = 0.1;

const TABLE_TOP_Y: f64 = 0.8;
const HAND: Vec3 = Vec3::new(0.2, 1.3, 0.3);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Position,
    Object,
    Direction,
    Rotation,
    Size,
    Path,
}

impl Task {
    pub const ALL: [Task; 6] = [
        Task::Position,
        Task::Object,
        Task::Direction,
        Task::Rotation,
        Task::Size,
        Task::Path,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Task::Position => "position",
            Task::Object => "object",
            Task::Direction => "direction",
            Task::Rotation => "rotation",
            Task::Size => "size",
            Task::Path => "path",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Task::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown task `{s}`"))
    }
}

/// How the size is shown.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeMode {
    /// Thumb-to-index gap.
    OneHand,
    /// Palm-to-palm distance.
    TwoHands,
    /// Flat hand held above the table.
    Surface,
}

impl FromStr for SizeMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "one" | "one_hand" => Ok(SizeMode::OneHand),
            "two" | "two_hands" => Ok(SizeMode::TwoHands),
            "surface" => Ok(SizeMode::Surface),
            _ => Err(format!("unknown size mode `{s}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum GroundTruth {
    Position { object: String, target: [f64; 3] },
    Object { color: String, selected: Vec<String> },
    Direction { object: String, direction: [f64; 3] },
    /// Target orientation as a quaternion `[x, y, z, w]`.
    Rotation { object: String, target: [f64; 4], hands: u8 },
    Size { object: String, target: f64, mode: SizeMode },
    /// The reference shape sampled with the vertex count of drawn shapes.
    Path { shape: ShapeType, target: Vec<[f64; 3]> },
}

impl GroundTruth {
    pub fn task(&self) -> Task {
        match self {
            GroundTruth::Position { .. } => Task::Position,
            GroundTruth::Object { .. } => Task::Object,
            GroundTruth::Direction { .. } => Task::Direction,
            GroundTruth::Rotation { .. } => Task::Rotation,
            GroundTruth::Size { .. } => Task::Size,
            GroundTruth::Path { .. } => Task::Path,
        }
    }
}

/// Generator settings. `None` fields are drawn per trial.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthParams {
    /// Per-frame pointing (or palm orientation) jitter, degrees.
    pub sigma_deg: f64,
    /// Per-frame hand position jitter, meters (Gaussian standard deviation).
    pub palm_sigma_m: f64,
    /// Hand-to-target distance for the position task.
    pub distance_m: f64,
    /// Hands used in the rotation task (1 or 2).
    pub hands: Option<u8>,
    pub size_mode: Option<SizeMode>,
    pub shape: Option<ShapeType>,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            sigma_deg: 0.0,
            palm_sigma_m: 0.0,
            distance_m: 2.0,
            hands: None,
            size_mode: None,
            shape: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fixture {
    pub scene: Scene,
    pub transcript: Transcript,
    pub trace: GestureTrace,
    pub truth: GroundTruth,
}

/// Seed of trial `k` in a batch started from `seed`.
pub fn trial_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k as u64)
}

/// `n` trials of `task`. Trial `k` cycles through the discrete variants
/// (hands, size mode, shape) unless they are fixed in `params`.
pub fn synth_trials(task: Task, params: &SynthParams, seed: u64, n: usize) -> Vec<Fixture> {
    (0..n).map(|k| synth_trial(task, params, trial_seed(seed, k), k)).collect()
}

pub fn synth_trial(task: Task, params: &SynthParams, seed: u64, k: usize) -> Fixture {
    let mut g = Gen::new(seed, params);
    match task {
        Task::Position => g.position(),
        Task::Object => g.object(),
        Task::Direction => g.direction(k),
        Task::Rotation => g.rotation(params.hands.unwrap_or(1 + (k % 2) as u8)),
        Task::Size => {
            let modes = [SizeMode::OneHand, SizeMode::TwoHands, SizeMode::Surface];
            g.size(params.size_mode.unwrap_or(modes[k % 3]))
        }
        Task::Path => {
            let shapes = [ShapeType::Line, ShapeType::Circle, ShapeType::Sine];
            g.path(params.shape.unwrap_or(shapes[k % 3]))
        }
    }
}

/// The gallery scene with a spoken "hang ... here" command. When
/// `with_gesture` is false the hand is only seen before the command.
pub fn hang_painting(seed: u64, with_gesture: bool) -> Fixture {
    let params = SynthParams::default();
    let mut g = Gen::new(seed, &params);
    // on the millimeter grid so the stored scene holds the target exactly
    let mm = |v: f64| (v * 1000.0).round() / 1000.0;
    let aim = vec3(mm(g.rng.random_range(-0.8..0.8)), mm(g.rng.random_range(1.3..1.9)), 3.0);
    let scene = snap(vec![
        SceneObject::new("floor", vec3(0.0, -0.05, 2.0), vec3(8.0, 0.1, 8.0)).fixed(),
        SceneObject::new("wall", vec3(0.0, 1.5, 3.05), vec3(8.0, 3.0, 0.1)).fixed(),
        SceneObject::new("Starry Night", vec3(-1.8, 0.37, 2.6), vec3(0.92, 0.73, 0.04))
            .with_rotation(Rotation::from_euler_degrees([-15.0, 0.0, 0.0])),
    ]);
    let target = first_hit(&scene, HAND, aim - HAND, "wall");
    let t = utterance("Hang the Starry Night painting on the wall here.");
    let here = TokenSpan::single(8);
    let trace = if with_gesture {
        g.frames(&t, here, |g, _| Some(g.pointing_at(HAND, target)), |_, _| None)
    } else {
        let early = TokenSpan::new(0, 1);
        g.frames(&t, early, |g, _| Some(g.pointing_at(HAND, vec3(0.0, 0.0, 2.0))), |_, _| None)
    };
    Fixture {
        scene,
        transcript: t,
        trace,
        truth: GroundTruth::Position {
            object: "Starry Night".into(),
            target: target.into(),
        },
    }
}

fn utterance(text: &str) -> Transcript {
    Transcript::from_text("synthetic", text, SPEECH_START_MS, WORD_MS, GAP_MS)
}

fn table() -> SceneObject {
    SceneObject::new("table", vec3(0.0, TABLE_TOP_Y / 2.0, 1.0), vec3(1.6, TABLE_TOP_Y, 0.8)).fixed()
}

fn task_cube(position: Vec3, rotation: Rotation) -> SceneObject {
    SceneObject::new("cube", position, Vec3::repeat(CUBE_EDGE_M))
        .with_rotation(rotation)
        .with_color(color_by_name("white").expect("known").rgb)
}

/// A relaxed hand whose index finger points along `dir` from `meta`.
fn pointing_pose(meta: Vec3, tip_dir: Vec3) -> HandPose {
    let d = tip_dir.normalize();
    let rot = Rotation::between(&Vec3::z(), &d).expect("nonzero");
    let [side, up, _] = rot.axes();
    HandPose {
        palm: JointPose::new(meta - d * 0.04 - up * 0.01, rot),
        thumb_tip: JointPose::at(meta - side * 0.04 + d * 0.02),
        index_tip: JointPose::at(meta + d * 0.08),
        middle_tip: JointPose::at(meta + side * 0.02 - up * 0.03 + d * 0.01),
        index_metacarpal: JointPose::at(meta),
    }
}

struct Gen<'a> {
    rng: ChaCha8Rng,
    p: &'a SynthParams,
}

impl<'a> Gen<'a> {
    fn new(seed: u64, p: &'a SynthParams) -> Self {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            p,
        }
    }

    fn random_axis(&mut self) -> UnitVec3 {
        let v: [f64; 3] = UnitSphere.sample(&mut self.rng);
        UnitVec3::new_normalize(Vec3::from(v))
    }

    /// Rotation by exactly `sigma_deg` about a random axis.
    fn jitter(&mut self) -> Rotation {
        if self.p.sigma_deg == 0.0 {
            return Rotation::identity();
        }
        let axis = self.random_axis();
        Rotation::from_axis_angle_degrees(&axis, self.p.sigma_deg)
    }

    fn palm_noise(&mut self) -> Vec3 {
        if self.p.palm_sigma_m == 0.0 {
            return Vec3::zeros();
        }
        let n = Normal::new(0.0, self.p.palm_sigma_m).expect("finite sigma");
        vec3(n.sample(&mut self.rng), n.sample(&mut self.rng), n.sample(&mut self.rng))
    }

    fn random_rotation(&mut self) -> Rotation {
        let axis = self.random_axis();
        let angle = self.rng.random_range(0.0..std::f64::consts::PI);
        Rotation::from_axis_angle(&axis, angle)
    }

    /// Pointing from `meta` towards `target`, with jitter and hand noise.
    fn pointing_at(&mut self, meta: Vec3, target: Vec3) -> HandPose {
        self.pointing_along(meta, target - meta)
    }

    fn pointing_along(&mut self, meta: Vec3, dir: Vec3) -> HandPose {
        let j = self.jitter();
        let shift = self.palm_noise();
        let pose = pointing_pose(meta, j.rotate(&dir));
        pose.transformed(&Rotation::identity(), &shift)
    }

    /// Frames at [`FRAME_RATE_HZ`] from `HOLD_MS` before the token to
    /// `HOLD_MS` after it; `right`/`left` get the stroke progress in [0, 1].
    fn frames(
        &mut self,
        t: &Transcript,
        token: TokenSpan,
        mut right: impl FnMut(&mut Self, f64) -> Option<HandPose>,
        mut left: impl FnMut(&mut Self, f64) -> Option<HandPose>,
    ) -> GestureTrace {
        let s = t.words[token.first].start_ms;
        let e = t.words[token.last].end_ms;
        let (from, to) = (s - HOLD_MS, e + HOLD_MS);
        let step = 1000.0 / FRAME_RATE_HZ;
        let mut frames = Vec::new();
        let mut k = 0;
        loop {
            let t_ms = from + (k as f64 * step).round() as i64;
            if t_ms > to {
                break;
            }
            let progress = ((t_ms - s) as f64 / (e - s).max(1) as f64).clamp(0.0, 1.0);
            let r = right(self, progress);
            let l = left(self, progress);
            frames.push(HandFrame { t_ms, left: l, right: r });
            k += 1;
        }
        GestureTrace::new(frames).expect("increasing times")
    }

    fn position(&mut self) -> Fixture {
        let yaw = self.rng.random_range(-20.0f64..20.0).to_radians();
        let pitch = self.rng.random_range(-8.0f64..2.0).to_radians();
        let dir = vec3(yaw.sin() * pitch.cos(), pitch.sin(), yaw.cos() * pitch.cos());
        let aim = HAND + dir * self.p.distance_m;
        let facing = Rotation::between(&Vec3::z(), &dir).expect("unit");
        let board = SceneObject::new("board", aim + dir * 0.01, vec3(3.0, 3.0, 0.02))
            .with_rotation(facing)
            .fixed();
        let start = vec3(self.rng.random_range(-0.7..-0.3), TABLE_TOP_Y + CUBE_EDGE_M / 2.0, self.rng.random_range(0.7..1.3));
        let scene = snap(vec![table(), board, task_cube(start, Rotation::identity())]);
        // the stored board is rounded, so the target is where the ray meets it
        let target = first_hit(&scene, HAND, dir, "board");
        let t = utterance("move the cube here");
        let trace = self.frames(&t, TokenSpan::single(3), |g, _| Some(g.pointing_at(HAND, target)), |_, _| None);
        Fixture {
            scene,
            transcript: t,
            trace,
            truth: GroundTruth::Position {
                object: "cube".into(),
                target: target.into(),
            },
        }
    }

    fn object(&mut self) -> Fixture {
        const SPACING: f64 = 0.15;
        const EDGE: f64 = 0.05;
        const TIP_RADIUS: f64 = 0.09;
        const PALM_Y: f64 = 1.25;
        let colors = ["red", "green", "blue"];
        let target_color = colors[self.rng.random_range(0..3)];
        let counts = [("red", 9), ("green", 8), ("blue", 8)];
        let target_count = counts.iter().find(|c| c.0 == target_color).expect("known").1;
        let (bx, bz) = (self.rng.random_range(0..3usize), self.rng.random_range(0..3usize));

        let mut block: Vec<usize> = Vec::new();
        let mut rest: Vec<usize> = Vec::new();
        for cell in 0..25 {
            let (i, j) = (cell % 5, cell / 5);
            if (bx..bx + 3).contains(&i) && (bz..bz + 3).contains(&j) {
                block.push(cell);
            } else {
                rest.push(cell);
            }
        }
        block.shuffle(&mut self.rng);
        let mut color_of = vec![""; 25];
        for &cell in block.iter().take(target_count) {
            color_of[cell] = target_color;
        }
        let mut others: Vec<&str> = counts
            .iter()
            .filter(|c| c.0 != target_color)
            .flat_map(|c| std::iter::repeat_n(c.0, c.1))
            .collect();
        others.shuffle(&mut self.rng);
        let free: Vec<usize> = (0..25).filter(|&c| color_of[c].is_empty()).collect();
        for (cell, c) in free.into_iter().zip(others) {
            color_of[cell] = c;
        }

        let cell_center = |i: usize, j: usize| {
            vec3((i as f64 - 2.0) * SPACING, TABLE_TOP_Y + EDGE / 2.0, 1.0 + (j as f64 - 2.0) * SPACING)
        };
        let mut objects = vec![table()];
        let mut selected = Vec::new();
        for (cell, color) in color_of.iter().enumerate() {
            let name = format!("cube_{:02}", cell + 1);
            if *color == target_color {
                selected.push(name.clone());
            }
            let rgb = color_by_name(color).expect("known").rgb;
            objects.push(SceneObject::new(name, cell_center(cell % 5, cell / 5), Vec3::repeat(EDGE)).with_color(rgb));
        }
        let scene = snap(objects);
        let center = cell_center(bx + 1, bz + 1);

        let t = utterance(&format!("select these {target_color} cubes"));
        let phase = self.rng.random_range(0.0..std::f64::consts::TAU);
        let down = -Vec3::y();
        let trace = self.frames(
            &t,
            TokenSpan::new(1, 3),
            |g, p| {
                let a = phase + p * std::f64::consts::TAU;
                let tip = vec3(center.x + TIP_RADIUS * a.cos(), PALM_Y - 0.12, center.z + TIP_RADIUS * a.sin());
                Some(g.pointing_along(tip - down * 0.08, down))
            },
            |_, _| None,
        );
        Fixture {
            scene,
            transcript: t,
            trace,
            truth: GroundTruth::Object {
                color: target_color.into(),
                selected,
            },
        }
    }

    fn direction(&mut self, k: usize) -> Fixture {
        let options = [Vec3::x(), -Vec3::x(), Vec3::z(), -Vec3::z(), Vec3::y()];
        let dir = options[k % options.len()];
        let start = self.random_rotation();
        let scene = snap(vec![
            table(),
            task_cube(vec3(0.0, TABLE_TOP_Y + CUBE_EDGE_M / 2.0, 1.0), start),
        ]);
        let t = utterance("turn the cube this way");
        let meta = vec3(0.15, 1.2, 0.5);
        let trace = self.frames(&t, TokenSpan::new(3, 4), |g, _| Some(g.pointing_along(meta, dir)), |_, _| None);
        Fixture {
            scene,
            transcript: t,
            trace,
            truth: GroundTruth::Direction {
                object: "cube".into(),
                direction: dir.into(),
            },
        }
    }

    fn rotation(&mut self, hands: u8) -> Fixture {
        let e = [
            self.rng.random_range(-90.0..90.0),
            self.rng.random_range(-90.0..90.0),
            self.rng.random_range(-90.0..90.0),
        ];
        let start = Rotation::from_euler_degrees(e.map(|v: f64| (v * 1000.0).round() / 1000.0));
        // bring the front face round to the user
        let delta = Rotation::between(&start.forward(), &-Vec3::z()).expect("unit");
        let target = delta.compose(&start);
        let scene = snap(vec![
            table(),
            task_cube(vec3(0.0, TABLE_TOP_Y + CUBE_EDGE_M / 2.0, 1.0), start),
        ]);
        let t = utterance("rotate the cube like this");
        let token = TokenSpan::new(3, 4);
        let center = vec3(0.0, 1.1, 0.6);
        let base = Rotation::from_euler_degrees([20.0, 0.0, 0.0]);
        let at = |p: f64| Rotation::identity().slerp(&delta, p);

        let trace = if hands == 2 {
            let axis = delta.quaternion().axis().map(|a| a.into_inner()).unwrap_or_else(Vec3::y);
            let half = any_perpendicular(&axis).into_inner() * 0.15;
            let hand = move |g: &mut Self, p: f64, sign: f64| {
                let r = at(p);
                let palm = center + r.rotate(&(half * sign));
                let orient = g.jitter().compose(&r).compose(&base);
                let shift = g.palm_noise();
                let pose = flat_pose(palm, orient);
                Some(pose.transformed(&Rotation::identity(), &shift))
            };
            self.frames(&t, token, move |g, p| hand(g, p, 1.0), move |g, p| hand(g, p, -1.0))
        } else {
            self.frames(
                &t,
                token,
                |g, p| {
                    let orient = g.jitter().compose(&at(p)).compose(&base);
                    let shift = g.palm_noise();
                    Some(flat_pose(center, orient).transformed(&Rotation::identity(), &shift))
                },
                |_, _| None,
            )
        };
        Fixture {
            scene,
            transcript: t,
            trace,
            truth: GroundTruth::Rotation {
                object: "cube".into(),
                target: target.xyzw(),
                hands,
            },
        }
    }

    fn size(&mut self, mode: SizeMode) -> Fixture {
        let target = match mode {
            SizeMode::OneHand => self.rng.random_range(0.03..0.12),
            SizeMode::TwoHands => self.rng.random_range(0.15..0.5),
            SizeMode::Surface => self.rng.random_range(0.1..0.4),
        };
        let scene = snap(vec![
            table(),
            task_cube(vec3(-0.3, TABLE_TOP_Y + CUBE_EDGE_M / 2.0, 1.0), Rotation::identity()),
        ]);
        let t = utterance("resize the cube to this size");
        let token = TokenSpan::new(4, 5);
        let trace = match mode {
            SizeMode::OneHand => self.frames(
                &t,
                token,
                |g, _| {
                    let palm = vec3(0.1, 1.1, 0.5);
                    let pose = HandPose {
                        palm: JointPose::at(palm),
                        thumb_tip: JointPose::at(palm + vec3(-target / 2.0, 0.0, 0.08)),
                        index_tip: JointPose::at(palm + vec3(target / 2.0, 0.0, 0.08)),
                        middle_tip: JointPose::at(palm + vec3(target / 2.0, -0.05, 0.03)),
                        index_metacarpal: JointPose::at(palm + vec3(0.02, 0.0, 0.03)),
                    };
                    let shift = g.palm_noise();
                    Some(pose.transformed(&Rotation::identity(), &shift))
                },
                |_, _| None,
            ),
            SizeMode::TwoHands => {
                let center = vec3(0.0, 1.1, 0.6);
                let hand = move |g: &mut Self, sign: f64| {
                    let palm = center + vec3(sign * target / 2.0, 0.0, 0.0);
                    let side = Rotation::from_axis_angle_degrees(&Vec3::z_axis(), sign * 90.0);
                    let shift = g.palm_noise();
                    Some(flat_pose(palm, side).transformed(&Rotation::identity(), &shift))
                };
                self.frames(&t, token, move |g, _| hand(g, 1.0), move |g, _| hand(g, -1.0))
            }
            SizeMode::Surface => self.frames(
                &t,
                token,
                |g, _| {
                    let palm = vec3(0.4, TABLE_TOP_Y + target, 0.9);
                    let shift = g.palm_noise();
                    Some(flat_pose(palm, Rotation::identity()).transformed(&Rotation::identity(), &shift))
                },
                |_, _| None,
            ),
        };
        Fixture {
            scene,
            transcript: t,
            trace,
            truth: GroundTruth::Size {
                object: "cube".into(),
                target,
                mode,
            },
        }
    }

    fn path(&mut self, shape: ShapeType) -> Fixture {
        let origin = vec3(self.rng.random_range(-0.25..-0.05), self.rng.random_range(1.1..1.3), 0.5);
        let phase = self.rng.random_range(0.0..std::f64::consts::TAU);
        let curve = move |p: f64| -> Vec3 { origin + target_curve(shape, p, phase) };
        let n = ExecConfig::default().shape_samples.max(2);
        let target: Vec<[f64; 3]> = (0..n).map(|k| curve(k as f64 / (n - 1) as f64).into()).collect();
        let scene = snap(vec![table()]);
        let noun = match shape {
            ShapeType::Line => "line",
            ShapeType::Circle => "circle",
            ShapeType::Sine => "sine wave",
        };
        let t = utterance(&format!("draw a {noun} like this"));
        let like = t.words.iter().position(|w| w.text == "like").expect("present");
        let trace = self.frames(
            &t,
            TokenSpan::new(like, like + 1),
            |g, p| {
                let tip = curve(p);
                Some(g.pointing_along(tip - vec3(0.0, 0.0, 0.08), Vec3::z()))
            },
            |_, _| None,
        );
        Fixture {
            scene,
            transcript: t,
            trace,
            truth: GroundTruth::Path { shape, target },
        }
    }
}

/// Builds the scene and rounds it the way the scene file stores it, so a
/// fixture written to disk and read back is the same fixture.
fn snap(objects: Vec<SceneObject>) -> Scene {
    let scene = Scene::from_objects(objects).expect("unique names");
    load_scene(&serialize_scene(&scene)).expect("round trip")
}

fn first_hit(scene: &Scene, origin: Vec3, dir: Vec3, name: &str) -> Vec3 {
    let ray = Ray::new(origin, dir, 100.0).expect("nonzero direction");
    let hit = ray_intersect(scene, &ray, &[]).into_iter().next().expect("ray hits the scene");
    assert_eq!(hit.name, name, "target surface is occluded");
    hit.point
}

/// The reference shapes, drawn in a vertical plane facing the user:
/// a 0.3 m line, a 0.3 m diameter circle, and a sine 0.3 m long with
/// amplitude 0.2 m and 1.5 periods along its length.
pub fn target_curve(shape: ShapeType, p: f64, phase: f64) -> Vec3 {
    match shape {
        ShapeType::Line => vec3(0.3 * p, 0.0, 0.0),
        ShapeType::Circle => {
            let a = phase + p * std::f64::consts::TAU;
            vec3(0.15 + 0.15 * a.cos(), 0.15 * a.sin(), 0.0)
        }
        ShapeType::Sine => vec3(0.3 * p, 0.2 * (std::f64::consts::TAU * 1.5 * p).sin(), 0.0),
    }
}

/// An open flat hand: fingers along local +z, palm facing local -y.
fn flat_pose(palm: Vec3, r: Rotation) -> HandPose {
    let at = |v: Vec3| JointPose::new(palm + r.rotate(&v), r);
    HandPose {
        palm: JointPose::new(palm, r),
        thumb_tip: at(vec3(-0.06, 0.0, 0.05)),
        index_tip: at(vec3(-0.01, 0.0, 0.09)),
        middle_tip: at(vec3(0.01, 0.0, 0.095)),
        index_metacarpal: at(vec3(-0.01, 0.0, 0.02)),
    }
}
