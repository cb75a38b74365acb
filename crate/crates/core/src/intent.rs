//! Turning an utterance into a plan of function calls.
//!
//! Parameters the words settle go into `text_params`; parameters that need
//! a gesture become [`AmbiguousParam`]s tied to the words spoken alongside
//! the gesture. Two planners produce the same [`Plan`]: a deterministic
//! keyword grammar ([`plan_rules`]) and a language-model backend
//! ([`plan_llm`]) whose JSON reply is checked by [`parse_backend_reply`].

use std::collections::HashSet;

use serde_json::{json, Map, Value as Json};
use thiserror::Error;

use crate::extraction::Path;
use crate::fitting::ShapeType;
use crate::functions::{color_by_name, general_error_message, FunctionCatalog, ParamKind, Value};
use crate::geometry::{try_unit, Rotation, Vec3};
use crate::scene::{serialize_scene, Scene};
use crate::transcript::{TokenSpan, Transcript};

#[derive(Debug, Error, PartialEq)]
pub enum IntentError {
    #[error("the transcript has no words")]
    EmptyTranscript,
    #[error("{message}")]
    NoFunctionMatched { message: String },
    #[error("backend reply rejected: {reason}")]
    MalformedReply { reason: String, raw: String },
    #[error("backend timed out")]
    BackendTimeout,
    #[error("backend unreachable: {0}")]
    BackendUnreachable(String),
}

/// Literal bound from the words of the utterance.
#[derive(Clone, Debug, PartialEq)]
pub enum Literal {
    Value(Value),
    /// The objects chosen by an earlier `select` in the same plan.
    ResultOf(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TextParam {
    pub name: String,
    pub literal: Literal,
    /// Words the value was read from, for messages.
    pub phrase: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AmbiguousParam {
    pub name: String,
    pub kind: ParamKind,
    pub token: TokenSpan,
    /// Objects to look past when extracting a position.
    pub ignore_objects: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlannedCall {
    pub function: String,
    pub text_params: Vec<TextParam>,
    pub amb_params: Vec<AmbiguousParam>,
}

impl PlannedCall {
    pub fn text(&self, name: &str) -> Option<&TextParam> {
        self.text_params.iter().find(|p| p.name == name)
    }

    pub fn ambiguous(&self, name: &str) -> Option<&AmbiguousParam> {
        self.amb_params.iter().find(|p| p.name == name)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Plan {
    pub calls: Vec<PlannedCall>,
}

/// Checks that text and ambiguous parameters of every call split the
/// signature exactly, that kinds agree, token spans exist, named objects
/// exist and references point backwards to a `select`.
pub fn validate_plan(plan: &Plan, t: &Transcript, scene: &Scene, catalog: &FunctionCatalog) -> Result<(), String> {
    if plan.calls.is_empty() {
        return Err("plan has no calls".into());
    }
    for (i, call) in plan.calls.iter().enumerate() {
        let sig = catalog
            .get(&call.function)
            .ok_or_else(|| format!("call {i}: unknown function `{}`", call.function))?;
        let text: Vec<&str> = call.text_params.iter().map(|p| p.name.as_str()).collect();
        let amb: Vec<&str> = call.amb_params.iter().map(|p| p.name.as_str()).collect();
        let mut seen = HashSet::new();
        for n in text.iter().chain(&amb) {
            if !seen.insert(*n) {
                return Err(format!("call {i}: parameter `{n}` bound twice"));
            }
            if sig.param(n).is_none() {
                return Err(format!("call {i}: `{}` has no parameter `{n}`", sig.name));
            }
        }
        if let Some(p) = sig.params.iter().find(|p| !seen.contains(p.name.as_str())) {
            return Err(format!("call {i}: parameter `{}` is not bound", p.name));
        }
        for a in &call.amb_params {
            let kind = sig.param(&a.name).expect("checked").kind;
            if a.kind != kind {
                return Err(format!("call {i}: `{}` is a {kind} parameter, not {}", a.name, a.kind));
            }
            if !a.token.is_valid_for(t) {
                return Err(format!("call {i}: token span of `{}` is outside the utterance", a.name));
            }
        }
        for p in &call.text_params {
            let kind = sig.param(&p.name).expect("checked").kind;
            match &p.literal {
                Literal::ResultOf(k) => {
                    if *k >= i || plan.calls[*k].function != "select" {
                        return Err(format!("call {i}: `{}` refers to call {k}, which is not an earlier select", p.name));
                    }
                    if !matches!(kind, ParamKind::Object | ParamKind::ObjectList) {
                        return Err(format!("call {i}: `{}` cannot take a selection", p.name));
                    }
                }
                Literal::Value(v) => {
                    if !v.fits(kind) {
                        return Err(format!("call {i}: `{}` expects a {kind} value", p.name));
                    }
                    let names = match v {
                        Value::Object(n) => vec![n.clone()],
                        Value::ObjectList(ns) => ns.clone(),
                        _ => Vec::new(),
                    };
                    if let Some(n) = names.iter().find(|n| scene.get(n).is_none()) {
                        return Err(format!("call {i}: no object named `{n}`"));
                    }
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Keyword grammar

const DETERMINERS: &[&str] = &[
    "the", "a", "an", "this", "that", "these", "those", "my", "your", "its", "their", "some", "all", "every",
];
const DEMONSTRATIVES: &[&str] = &["this", "that", "these", "those"];
const PRONOUNS: &[&str] = &["it", "them", "they", "everything"];
const STOP_WORDS: &[&str] = &[
    "on", "in", "into", "onto", "to", "at", "along", "like", "by", "toward", "towards", "from", "with", "over",
    "under", "behind", "above", "below", "beside", "next", "near", "through", "around", "across", "for", "so",
    "as", "until", "about", "here", "there", "and", "then", "way", "much", "back", "up", "down", "facing",
    "degrees", "degree",
];
const PLACE_NOUNS: &[&str] = &["place", "spot", "point", "location", "position", "side", "corner", "area"];
const SIZE_WORDS: &[&str] = &["large", "big", "small", "long", "tall", "wide", "high", "size", "much", "short"];
const PATH_NOUNS: &[&str] = &["path", "way", "route", "trajectory", "line", "curve", "shape", "motion"];

fn normalize(word: &str) -> String {
    word.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase()
}

fn subwords(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn ends_sentence(raw: &str) -> bool {
    let t = raw.trim_end_matches(['"', '\'', ')']);
    t.ends_with(['.', '!', '?', ';'])
}

fn function_for_verb(w: &str) -> Option<&'static str> {
    Some(match w {
        "move" | "put" | "place" | "hang" | "bring" | "drag" | "shift" => "move",
        "animate" => "move_path",
        "rotate" | "turn" | "spin" | "twist" => "rotate",
        "face" | "orient" | "aim" => "rotate_dir",
        "resize" | "enlarge" | "shrink" | "scale" | "grow" => "resize",
        "select" | "pick" | "choose" | "highlight" => "select",
        "color" | "colour" | "paint" | "recolor" | "recolour" | "tint" => "set_color",
        "draw" | "sketch" | "trace" => "draw_path",
        _ => return None,
    })
}

fn shape_word(w: &str) -> Option<ShapeType> {
    Some(match w {
        "line" | "straight" => ShapeType::Line,
        "circle" | "round" | "ring" | "loop" | "circular" => ShapeType::Circle,
        "sine" | "wave" | "wavy" | "sinusoid" | "sinusoidal" => ShapeType::Sine,
        _ => return None,
    })
}

fn length_unit(w: &str) -> Option<f64> {
    Some(match w {
        "m" | "meter" | "meters" | "metre" | "metres" => 1.0,
        "cm" | "centimeter" | "centimeters" | "centimetre" | "centimetres" => 0.01,
        "mm" | "millimeter" | "millimeters" | "millimetre" | "millimetres" => 0.001,
        _ => return None,
    })
}

/// A clause of the utterance: absolute word indices `[start, end)`.
struct Clause<'a> {
    words: &'a [String],
    start: usize,
    end: usize,
}

impl Clause<'_> {
    fn w(&self, i: usize) -> &str {
        if i < self.end {
            &self.words[i]
        } else {
            ""
        }
    }

    fn is(&self, i: usize, options: &[&str]) -> bool {
        i < self.end && options.contains(&self.w(i))
    }

    fn find(&self, from: usize, pred: impl Fn(usize) -> bool) -> Option<usize> {
        (from..self.end).find(|&i| pred(i))
    }
}

/// Noun phrase `[start, end)` with an optional leading determiner.
#[derive(Clone, Copy, Debug)]
struct NounPhrase {
    start: usize,
    end: usize,
}

impl NounPhrase {
    fn span(&self) -> TokenSpan {
        TokenSpan::new(self.start, self.end - 1)
    }
}

fn is_predicate_color(c: &Clause, i: usize) -> bool {
    color_by_name(c.w(i)).is_some() && (i + 1 >= c.end || c.is(i + 1, STOP_WORDS))
}

fn noun_phrase(c: &Clause, mut i: usize) -> Option<NounPhrase> {
    while c.is(i, &["of", "up"]) {
        i += 1;
    }
    if i >= c.end || c.is(i, STOP_WORDS) {
        return None;
    }
    let start = i;
    if c.is(i, PRONOUNS) {
        return Some(NounPhrase { start, end: i + 1 });
    }
    if c.is(i, DETERMINERS) {
        let demonstrative = c.is(i, DEMONSTRATIVES);
        i += 1;
        if demonstrative && (i >= c.end || c.is(i, STOP_WORDS) || c.is(i, SIZE_WORDS) || is_predicate_color(c, i)) {
            return Some(NounPhrase { start, end: i });
        }
    }
    while i < c.end
        && !c.is(i, STOP_WORDS)
        && !(i > start && c.is(i, DEMONSTRATIVES))
        && !is_predicate_color(c, i)
        && parse_number(c.w(i)).is_none()
    {
        i += 1;
    }
    (i > start).then_some(NounPhrase { start, end: i })
}

/// Longest scene names spelled out inside `[start, end)`, left to right.
fn names_in(c: &Clause, scene: &Scene, start: usize, end: usize) -> Vec<String> {
    let tokens: Vec<String> = (start..end).flat_map(|i| subwords(c.w(i))).collect();
    let candidates: Vec<(Vec<String>, &str)> = scene
        .objects()
        .iter()
        .map(|o| (subwords(&o.name), o.name.as_str()))
        .filter(|(w, _)| !w.is_empty())
        .collect();
    let mut found = Vec::new();
    let mut k = 0;
    while k < tokens.len() {
        let best = candidates
            .iter()
            .filter(|(w, _)| tokens[k..].starts_with(w))
            .max_by_key(|(w, _)| w.len());
        match best {
            Some((w, name)) => {
                found.push(name.to_string());
                k += w.len();
            }
            None => k += 1,
        }
    }
    found
}

fn parse_number(w: &str) -> Option<f64> {
    w.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// A number followed by a length unit ("20 cm", "0.2m").
fn spoken_length(c: &Clause, from: usize) -> Option<(f64, TokenSpan)> {
    for i in from..c.end {
        let w = c.w(i);
        if let Some(v) = parse_number(w) {
            if let Some(u) = length_unit(c.w(i + 1)) {
                return Some((v * u, TokenSpan::new(i, i + 1)));
            }
        }
        let split = w.find(|ch: char| ch.is_alphabetic()).unwrap_or(w.len());
        if split > 0 && split < w.len() {
            if let (Some(v), Some(u)) = (parse_number(&w[..split]), length_unit(&w[split..])) {
                return Some((v * u, TokenSpan::single(i)));
            }
        }
    }
    None
}

/// "90 degrees", optionally "clockwise", as a turn about the vertical.
fn spoken_angle(c: &Clause, from: usize) -> Option<(Rotation, TokenSpan)> {
    let i = c.find(from, |i| parse_number(c.w(i)).is_some() && c.is(i + 1, &["degrees", "degree"]))?;
    let mut deg = parse_number(c.w(i)).expect("checked");
    let mut last = i + 1;
    if c.is(i + 2, &["clockwise"]) {
        deg = -deg;
        last = i + 2;
    } else if c.is(i + 2, &["counterclockwise", "anticlockwise"]) {
        last = i + 2;
    }
    Some((Rotation::from_axis_angle_degrees(&Vec3::y_axis(), deg), TokenSpan::new(i, last)))
}

/// "this"/"that" followed by one of `nouns`, as a two-word span.
fn demonstrative_with(c: &Clause, from: usize, nouns: &[&str]) -> Option<TokenSpan> {
    c.find(from, |i| c.is(i, &["this", "that"]) && c.is(i + 1, nouns))
        .map(|i| TokenSpan::new(i, i + 1))
}

fn phrase_pair(c: &Clause, from: usize, first: &[&str], second: &[&str]) -> Option<TokenSpan> {
    c.find(from, |i| c.is(i, first) && c.is(i + 1, second))
        .map(|i| TokenSpan::new(i, i + 1))
}

fn bare(c: &Clause, from: usize, options: &[&str]) -> Option<TokenSpan> {
    c.find(from, |i| c.is(i, options)).map(TokenSpan::single)
}

fn location_token(c: &Clause, from: usize) -> Option<TokenSpan> {
    bare(c, from, &["here", "there"])
        .or_else(|| demonstrative_with(c, from, PLACE_NOUNS))
        .or_else(|| bare(c, from, &["this", "that"]))
}

fn direction_token(c: &Clause, from: usize) -> Option<TokenSpan> {
    demonstrative_with(c, from, &["way", "direction"])
        .or_else(|| {
            let i = c.find(from, |i| c.is(i, &["toward", "towards", "facing", "face"]))?;
            let j = c.find(i + 1, |j| c.is(j, &["here", "there", "this", "that", "me"]))?;
            Some(TokenSpan::new(i, j))
        })
        .or_else(|| bare(c, from, &["here", "there", "this", "that"]))
}

fn rotation_token(c: &Clause, from: usize) -> Option<TokenSpan> {
    phrase_pair(c, from, &["like"], &["this", "that"])
        .or_else(|| demonstrative_with(c, from, &["much", "way", "amount"]))
        .or_else(|| bare(c, from, &["this", "that"]))
}

fn size_token(c: &Clause, from: usize) -> Option<TokenSpan> {
    demonstrative_with(c, from, SIZE_WORDS)
        .or_else(|| phrase_pair(c, from, &["like"], &["this", "that"]))
        .or_else(|| bare(c, from, &["this", "that"]))
}

fn path_token(c: &Clause, from: usize) -> Option<TokenSpan> {
    demonstrative_with(c, from, PATH_NOUNS)
        .or_else(|| phrase_pair(c, from, &["like"], &["this", "that"]))
        .or_else(|| bare(c, from, &["here", "there", "this", "that"]))
}

/// Objects named after "behind", "past" or "in front of".
fn obstacles(c: &Clause, scene: &Scene) -> Vec<String> {
    let mut out = Vec::new();
    for i in c.start..c.end {
        let after = if c.is(i, &["behind", "past", "beyond"]) {
            i + 1
        } else if c.is(i, &["in"]) && c.is(i + 1, &["front"]) && c.is(i + 2, &["of"]) {
            i + 3
        } else {
            continue;
        };
        if let Some(np) = noun_phrase(c, after) {
            for n in names_in(c, scene, np.start, np.end) {
                if !out.contains(&n) {
                    out.push(n);
                }
            }
        }
    }
    out
}

struct CallBuilder {
    call: PlannedCall,
}

impl CallBuilder {
    fn new(function: &str) -> Self {
        CallBuilder {
            call: PlannedCall {
                function: function.to_string(),
                text_params: Vec::new(),
                amb_params: Vec::new(),
            },
        }
    }

    fn text(&mut self, name: &str, literal: Literal, phrase: Option<String>) {
        self.call.text_params.push(TextParam {
            name: name.to_string(),
            literal,
            phrase,
        });
    }

    fn amb(&mut self, name: &str, kind: ParamKind, token: TokenSpan, ignore: Vec<String>) {
        self.call.amb_params.push(AmbiguousParam {
            name: name.to_string(),
            kind,
            token,
            ignore_objects: ignore,
        });
    }
}

struct Grammar<'a> {
    t: &'a Transcript,
    scene: &'a Scene,
    words: Vec<String>,
}

impl Grammar<'_> {
    /// Splits at sentence ends, at "then", and at "and"/commas that are
    /// followed by a verb.
    fn clauses(&self) -> Vec<(usize, usize)> {
        let n = self.words.len();
        let mut out = Vec::new();
        let mut start = 0;
        let verb_at = |i: usize| {
            let j = if self.words.get(i).map(String::as_str) == Some("then") { i + 1 } else { i };
            self.words.get(j).is_some_and(|w| function_for_verb(w).is_some())
        };
        let mut i = 0;
        while i < n {
            let w = self.words[i].as_str();
            if w == "then" || w == "and" && verb_at(i + 1) {
                if i > start {
                    out.push((start, i));
                }
                start = i + 1;
            } else if ends_sentence(&self.t.words[i].text)
                || self.t.words[i].text.ends_with(',') && verb_at(i + 1)
            {
                out.push((start, i + 1));
                start = i + 1;
            }
            i += 1;
        }
        if start < n {
            out.push((start, n));
        }
        out.retain(|&(s, e)| (s..e).any(|k| !self.words[k].is_empty()));
        out
    }

    /// Text literal for a pronoun referring back into the plan.
    fn back_reference(&self, calls: &[PlannedCall], np: &NounPhrase, c: &Clause) -> Option<(Literal, Option<String>)> {
        if np.end - np.start != 1 || !c.is(np.start, &["it", "them", "they"]) {
            return None;
        }
        let (k, prev) = calls.iter().enumerate().next_back()?;
        if prev.function == "select" {
            return Some((Literal::ResultOf(k), Some(self.t.phrase(&np.span()))));
        }
        let p = prev.text("object")?;
        Some((p.literal.clone(), p.phrase.clone()))
    }

    /// Fills an object-like slot from the noun phrase at `from`.
    #[allow(clippy::too_many_arguments)]
    fn object_slot(
        &self,
        b: &mut CallBuilder,
        calls: &[PlannedCall],
        c: &Clause,
        name: &str,
        kind: ParamKind,
        from: usize,
        verb: usize,
    ) -> usize {
        let Some(np) = noun_phrase(c, from) else {
            b.amb(name, kind, TokenSpan::single(verb), Vec::new());
            return from;
        };
        if let Some((lit, phrase)) = self.back_reference(calls, &np, c) {
            b.text(name, lit, phrase);
            return np.end;
        }
        let names = names_in(c, self.scene, np.start, np.end);
        let phrase = Some(self.t.phrase(&np.span()));
        if kind == ParamKind::ObjectList {
            if !names.is_empty() {
                b.text(name, Literal::Value(Value::ObjectList(names)), phrase);
            } else if c.is(np.start, &["all", "every", "everything"]) {
                let all = self.scene.objects().iter().map(|o| o.name.clone()).collect();
                b.text(name, Literal::Value(Value::ObjectList(all)), phrase);
            } else {
                b.amb(name, kind, np.span(), Vec::new());
            }
        } else if let Some(first) = names.into_iter().next() {
            b.text(name, Literal::Value(Value::Object(first)), phrase);
        } else {
            b.amb(name, kind, np.span(), Vec::new());
        }
        np.end
    }

    fn color_slot(&self, b: &mut CallBuilder, c: &Clause, name: &str, verb: usize, last: bool) {
        let mut hits = (c.start..c.end).filter(|&i| color_by_name(c.w(i)).is_some());
        let hit = if last { hits.next_back() } else { hits.next() };
        match hit {
            Some(i) => {
                let color = color_by_name(c.w(i)).expect("checked");
                b.text(name, Literal::Value(Value::Color(color)), Some(self.t.phrase(&TokenSpan::single(i))));
            }
            None => b.amb(name, ParamKind::Color, TokenSpan::single(verb), Vec::new()),
        }
    }

    fn clause(&self, c: &Clause, calls: &[PlannedCall]) -> Option<PlannedCall> {
        let verb = c.find(c.start, |i| function_for_verb(c.w(i)).is_some())?;
        let mut function = function_for_verb(c.w(verb)).expect("checked");
        let after_verb = verb + 1;
        let has = |opts: &[&str]| c.find(after_verb, |i| c.is(i, opts)).is_some();
        if function == "move"
            && (has(&["along"]) || phrase_pair(c, after_verb, &["back"], &["and"]).is_some() || has(&["like"]))
        {
            function = "move_path";
        }
        if function == "rotate"
            && (demonstrative_with(c, after_verb, &["way", "direction"]).is_some()
                || has(&["toward", "towards", "facing", "face"]))
        {
            function = "rotate_dir";
        }
        let mut b = CallBuilder::new(function);
        let obj = |b: &mut CallBuilder, kind| self.object_slot(b, calls, c, if kind == ParamKind::ObjectList { "objects" } else { "object" }, kind, after_verb, verb);

        match function {
            "select" => {
                obj(&mut b, ParamKind::ObjectList);
                self.color_slot(&mut b, c, "color", verb, false);
            }
            "move" => {
                let rest = obj(&mut b, ParamKind::Object);
                let token = location_token(c, rest)
                    .or_else(|| noun_phrase(c, rest + 1).map(|np| np.span()))
                    .unwrap_or(TokenSpan::single(verb));
                b.amb("position", ParamKind::Position, token, obstacles(c, self.scene));
            }
            "rotate_dir" => {
                let rest = obj(&mut b, ParamKind::Object);
                let token = direction_token(c, rest).unwrap_or(TokenSpan::single(verb));
                b.amb("direction", ParamKind::Direction, token, Vec::new());
            }
            "rotate" => {
                let rest = obj(&mut b, ParamKind::Object);
                match spoken_angle(c, rest) {
                    Some((r, span)) => b.text("rotation", Literal::Value(Value::Rotation(r)), Some(self.t.phrase(&span))),
                    None => {
                        let token = rotation_token(c, rest).unwrap_or(TokenSpan::single(verb));
                        b.amb("rotation", ParamKind::RotationDelta, token, Vec::new());
                    }
                }
            }
            "resize" => {
                let rest = obj(&mut b, ParamKind::Object);
                match spoken_length(c, rest) {
                    Some((v, span)) => b.text("size", Literal::Value(Value::Size(v)), Some(self.t.phrase(&span))),
                    None => {
                        let token = size_token(c, rest).unwrap_or(TokenSpan::single(verb));
                        b.amb("size", ParamKind::Size, token, obstacles(c, self.scene));
                    }
                }
            }
            "move_path" => {
                let rest = obj(&mut b, ParamKind::Object);
                let token = path_token(c, rest).unwrap_or(TokenSpan::single(verb));
                b.amb("path", ParamKind::Path, token, Vec::new());
            }
            "draw_path" => {
                let shape = c.find(after_verb, |i| shape_word(c.w(i)).is_some());
                let token = path_token(c, after_verb).unwrap_or(TokenSpan::single(verb));
                b.amb("path", ParamKind::Path, token, Vec::new());
                match shape {
                    Some(i) => b.text(
                        "shape_type",
                        Literal::Value(Value::Shape(shape_word(c.w(i)).expect("checked"))),
                        Some(self.t.phrase(&TokenSpan::single(i))),
                    ),
                    None => b.amb("shape_type", ParamKind::ShapeType, TokenSpan::single(verb), Vec::new()),
                }
            }
            "set_color" => {
                obj(&mut b, ParamKind::Object);
                self.color_slot(&mut b, c, "color", verb, true);
            }
            _ => unreachable!("verb table covers the catalog"),
        }
        Some(b.call)
    }
}

/// Plans an utterance with a fixed keyword grammar.
///
/// Each clause needs a known verb; its object slot is filled textually when
/// the noun phrase spells out a scene object's name, and otherwise from a
/// gesture during that noun phrase. Spatial slots are tied to the
/// demonstrative that goes with them ("here", "this way", "like this",
/// "this large"), unless given in words ("20 cm", "90 degrees").
pub fn plan_rules(t: &Transcript, scene: &Scene, catalog: &FunctionCatalog) -> Result<Plan, IntentError> {
    if t.is_empty() {
        return Err(IntentError::EmptyTranscript);
    }
    let no_match = || IntentError::NoFunctionMatched {
        message: general_error_message(catalog),
    };
    let g = Grammar {
        t,
        scene,
        words: t.words.iter().map(|w| normalize(&w.text)).collect(),
    };
    let mut calls: Vec<PlannedCall> = Vec::new();
    for (start, end) in g.clauses() {
        let c = Clause {
            words: &g.words,
            start,
            end,
        };
        let call = g.clause(&c, &calls).ok_or_else(no_match)?;
        if catalog.get(&call.function).is_none() {
            return Err(no_match());
        }
        calls.push(call);
    }
    if calls.is_empty() {
        return Err(no_match());
    }
    Ok(Plan { calls })
}

// ---------------------------------------------------------------------------
// Language-model backend

#[derive(Debug, Error, PartialEq)]
pub enum BackendError {
    #[error("timed out")]
    Timeout,
    #[error("{0}")]
    Unreachable(String),
}

/// Something that answers a prompt with text.
pub trait IntentBackend {
    fn complete(&self, prompt: &str) -> Result<String, BackendError>;
}

/// Replays a fixed reply, whatever the prompt.
#[derive(Clone, Debug)]
pub struct RecordedBackend {
    pub reply: String,
}

impl RecordedBackend {
    pub fn new(reply: impl Into<String>) -> Self {
        RecordedBackend { reply: reply.into() }
    }
}

impl IntentBackend for RecordedBackend {
    fn complete(&self, _prompt: &str) -> Result<String, BackendError> {
        Ok(self.reply.clone())
    }
}

/// Which instructions the prompt carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PromptMode {
    /// Speech with co-speech gestures.
    Multimodal,
    /// Speech alone; every parameter must be stated in words.
    VoiceOnly,
}

const REPLY_SCHEMA: &str = r#"{"calls":[{"function":"<name>","text_params":{"<param>":<value>},"amb_params":[{"name":"<param>","kind":"<kind>","token":[<first word index>,<last word index>],"ignore_objects":["<object name>"]}]}]}"#;

/// Instructions for a language-model planner.
///
/// This text is our own wording of the planner's job, not a copy of any
/// published prompt.
pub fn render_metaprompt(catalog: &FunctionCatalog, scene: &Scene) -> String {
    render_prompt_template(catalog, scene, PromptMode::Multimodal)
}

pub fn render_prompt_template(catalog: &FunctionCatalog, scene: &Scene, mode: PromptMode) -> String {
    let mut s = String::new();
    s.push_str("You plan actions in a 3D scene from a spoken command.\n");
    match mode {
        PromptMode::Multimodal => s.push_str(
            "The user may gesture with their hands while speaking, so some values are shown rather than said.\n\
             Steps:\n\
             1. Break the command into sub-commands and map each to one function below, keeping the spoken order.\n\
             2. For each parameter whose value is fully stated in words, put the value in \"text_params\".\n\
             3. For each parameter that depends on a gesture (words such as \"here\", \"this\", \"this way\", \"like this\", \"this large\"), \
             add an entry to \"amb_params\" with the word indices of the phrase spoken with the gesture.\n\
             Every parameter of a call goes in exactly one of \"text_params\" and \"amb_params\".\n",
        ),
        PromptMode::VoiceOnly => s.push_str(
            "Only the words are available; there are no gestures.\n\
             Steps:\n\
             1. Break the command into sub-commands and map each to one function below, keeping the spoken order.\n\
             2. Put every parameter value in \"text_params\", using coordinates in meters and the scene below to turn \
             descriptions into numbers.\n\
             3. Leave \"amb_params\" empty.\n",
        ),
    }
    s.push_str("If no function fits, reply {\"calls\":[]}.\n\nFunctions:\n");
    for f in catalog.functions() {
        s.push_str(&format!("- {f}: {}\n", f.description));
        for p in &f.params {
            s.push_str(&format!("    {} ({}): {}\n", p.name, p.kind, p.description));
        }
    }
    s.push_str(
        "\nValue formats in text_params: object = name string; object_list = list of names, or {\"result_of\": <call index>} \
         for the objects chosen by an earlier select; position and direction = [x, y, z]; rotation = {\"axis\": [x, y, z], \
         \"degrees\": d}; size = meters; path = list of [x, y, z]; color = color name; shape_type = line, circle or sine. \
         Any value may be wrapped as {\"value\": <value>, \"phrase\": \"<words>\"}.\n",
    );
    s.push_str("\nScene (positions and scales in meters, rotations in degrees):\n");
    s.push_str(&serialize_scene(scene));
    s.push_str("\n\nReply with JSON only, in this form:\n");
    s.push_str(REPLY_SCHEMA);
    s.push('\n');
    s
}

/// Full prompt for one utterance: instructions plus the indexed words.
pub fn render_request(catalog: &FunctionCatalog, scene: &Scene, t: &Transcript, mode: PromptMode) -> String {
    let mut s = render_prompt_template(catalog, scene, mode);
    s.push_str("\nCommand (word index: word):\n");
    for (i, w) in t.words.iter().enumerate() {
        s.push_str(&format!("{i}: {}\n", w.text));
    }
    s
}

/// Plans an utterance by asking `backend`.
pub fn plan_llm(
    t: &Transcript,
    scene: &Scene,
    catalog: &FunctionCatalog,
    backend: &dyn IntentBackend,
) -> Result<Plan, IntentError> {
    if t.is_empty() {
        return Err(IntentError::EmptyTranscript);
    }
    let reply = backend
        .complete(&render_request(catalog, scene, t, PromptMode::Multimodal))
        .map_err(|e| match e {
            BackendError::Timeout => IntentError::BackendTimeout,
            BackendError::Unreachable(m) => IntentError::BackendUnreachable(m),
        })?;
    parse_backend_reply(&reply, t, scene, catalog)
}

fn vec3_of(v: &Json) -> Result<Vec3, String> {
    let a = v.as_array().filter(|a| a.len() == 3).ok_or("expected [x, y, z]")?;
    let c: Vec<f64> = a.iter().filter_map(Json::as_f64).collect();
    if c.len() != 3 || c.iter().any(|x| !x.is_finite()) {
        return Err("expected three finite numbers".into());
    }
    Ok(Vec3::new(c[0], c[1], c[2]))
}

fn strict_keys(obj: &Map<String, Json>, allowed: &[&str]) -> Result<(), String> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(format!("unexpected key `{k}`")),
        None => Ok(()),
    }
}

fn literal_of(kind: ParamKind, v: &Json, scene: &Scene) -> Result<Literal, String> {
    let object = |v: &Json| -> Result<String, String> {
        let n = v.as_str().ok_or("object must be a name")?;
        scene.get(n).map(|o| o.name.clone()).ok_or_else(|| format!("no object named `{n}`"))
    };
    Ok(Literal::Value(match kind {
        ParamKind::Object | ParamKind::ObjectList => {
            if let Some(o) = v.as_object() {
                strict_keys(o, &["result_of"])?;
                let k = o.get("result_of").and_then(Json::as_u64).ok_or("result_of must be a call index")?;
                return Ok(Literal::ResultOf(k as usize));
            }
            if let Some(a) = v.as_array() {
                Value::ObjectList(a.iter().map(object).collect::<Result<_, _>>()?)
            } else if kind == ParamKind::Object {
                Value::Object(object(v)?)
            } else {
                return Err("object list must be a list of names".into());
            }
        }
        ParamKind::Position => Value::Position(vec3_of(v)?),
        ParamKind::Direction => Value::Direction(try_unit(vec3_of(v)?).ok_or("direction has zero length")?),
        ParamKind::RotationDelta => {
            let o = v.as_object().ok_or("rotation must be {axis, degrees}")?;
            strict_keys(o, &["axis", "degrees"])?;
            let axis = try_unit(vec3_of(o.get("axis").ok_or("rotation needs an axis")?)?).ok_or("zero rotation axis")?;
            let deg = o.get("degrees").and_then(Json::as_f64).ok_or("rotation needs degrees")?;
            Value::Rotation(Rotation::from_axis_angle_degrees(&axis, deg))
        }
        ParamKind::Size => {
            let s = v.as_f64().ok_or("size must be a number")?;
            if !(s.is_finite() && s > 0.0) {
                return Err("size must be positive".into());
            }
            Value::Size(s)
        }
        ParamKind::Path => {
            let a = v.as_array().ok_or("path must be a list of points")?;
            let pts: Vec<Vec3> = a.iter().map(vec3_of).collect::<Result<_, _>>()?;
            if pts.is_empty() {
                return Err("path is empty".into());
            }
            Value::Path(Path::from_points(pts))
        }
        ParamKind::Color => {
            let n = v.as_str().ok_or("color must be a name")?;
            Value::Color(color_by_name(n).ok_or_else(|| format!("unknown color `{n}`"))?)
        }
        ParamKind::ShapeType => {
            let n = v.as_str().ok_or("shape_type must be a string")?;
            Value::Shape(n.parse().map_err(|_| format!("unknown shape `{n}`"))?)
        }
    }))
}

fn parse_call(v: &Json, scene: &Scene, catalog: &FunctionCatalog) -> Result<PlannedCall, String> {
    let o = v.as_object().ok_or("call must be an object")?;
    strict_keys(o, &["function", "text_params", "amb_params"])?;
    let function = o.get("function").and_then(Json::as_str).ok_or("call needs a function name")?;
    let sig = catalog.get(function).ok_or_else(|| format!("unknown function `{function}`"))?;

    let mut text_params = Vec::new();
    let empty = Map::new();
    let text = match o.get("text_params") {
        None => &empty,
        Some(v) => v.as_object().ok_or("text_params must be an object")?,
    };
    for (name, raw) in text {
        let spec = sig.param(name).ok_or_else(|| format!("`{function}` has no parameter `{name}`"))?;
        let (value, phrase) = match raw.as_object() {
            Some(w) if w.contains_key("value") => {
                strict_keys(w, &["value", "phrase"])?;
                let phrase = match w.get("phrase") {
                    None => None,
                    Some(p) => Some(p.as_str().ok_or("phrase must be a string")?.to_string()),
                };
                (&w["value"], phrase)
            }
            _ => (raw, None),
        };
        let literal = literal_of(spec.kind, value, scene).map_err(|e| format!("`{name}`: {e}"))?;
        text_params.push(TextParam {
            name: name.clone(),
            literal,
            phrase,
        });
    }
    // keep signature order
    text_params.sort_by_key(|p| sig.params.iter().position(|s| s.name == p.name));

    let mut amb_params = Vec::new();
    let amb = match o.get("amb_params") {
        None => Vec::new(),
        Some(v) => v.as_array().ok_or("amb_params must be a list")?.clone(),
    };
    for a in &amb {
        let a = a.as_object().ok_or("ambiguous parameter must be an object")?;
        strict_keys(a, &["name", "kind", "token", "ignore_objects"])?;
        let name = a.get("name").and_then(Json::as_str).ok_or("ambiguous parameter needs a name")?;
        let spec = sig.param(name).ok_or_else(|| format!("`{function}` has no parameter `{name}`"))?;
        let kind = match a.get("kind") {
            None => spec.kind,
            Some(k) => {
                let k = k.as_str().ok_or("kind must be a string")?;
                ParamKind::parse(k).ok_or_else(|| format!("unknown kind `{k}`"))?
            }
        };
        let token = a
            .get("token")
            .and_then(Json::as_array)
            .filter(|s| s.len() == 2)
            .and_then(|s| Some(TokenSpan::new(s[0].as_u64()? as usize, s[1].as_u64()? as usize)))
            .ok_or_else(|| format!("`{name}` needs a token span [first, last]"))?;
        let ignore_objects = match a.get("ignore_objects") {
            None => Vec::new(),
            Some(v) => v
                .as_array()
                .ok_or("ignore_objects must be a list")?
                .iter()
                .map(|n| n.as_str().map(str::to_string).ok_or("ignore_objects holds names"))
                .collect::<Result<_, _>>()?,
        };
        amb_params.push(AmbiguousParam {
            name: name.to_string(),
            kind,
            token,
            ignore_objects,
        });
    }
    Ok(PlannedCall {
        function: function.to_string(),
        text_params,
        amb_params,
    })
}

/// Parses and checks a backend reply. An empty call list means the request
/// matched no function.
pub fn parse_backend_reply(
    text: &str,
    t: &Transcript,
    scene: &Scene,
    catalog: &FunctionCatalog,
) -> Result<Plan, IntentError> {
    let malformed = |reason: String| IntentError::MalformedReply {
        reason,
        raw: text.to_string(),
    };
    let doc: Json = serde_json::from_str(text.trim()).map_err(|e| malformed(e.to_string()))?;
    let o = doc.as_object().ok_or_else(|| malformed("reply must be a JSON object".into()))?;
    strict_keys(o, &["calls"]).map_err(malformed)?;
    let calls = o
        .get("calls")
        .and_then(Json::as_array)
        .ok_or_else(|| malformed("reply needs a `calls` list".into()))?;
    if calls.is_empty() {
        return Err(IntentError::NoFunctionMatched {
            message: general_error_message(catalog),
        });
    }
    let plan = Plan {
        calls: calls
            .iter()
            .map(|c| parse_call(c, scene, catalog))
            .collect::<Result<_, _>>()
            .map_err(malformed)?,
    };
    validate_plan(&plan, t, scene, catalog).map_err(malformed)?;
    Ok(plan)
}

/// The plan in the backend reply format.
pub fn plan_to_json(plan: &Plan) -> Json {
    let calls: Vec<Json> = plan
        .calls
        .iter()
        .map(|c| {
            let text: Map<String, Json> = c
                .text_params
                .iter()
                .map(|p| {
                    let v = match &p.literal {
                        Literal::Value(v) => v.to_json(),
                        Literal::ResultOf(k) => json!({"result_of": k}),
                    };
                    let v = match &p.phrase {
                        Some(ph) => json!({"value": v, "phrase": ph}),
                        None => v,
                    };
                    (p.name.clone(), v)
                })
                .collect();
            let amb: Vec<Json> = c
                .amb_params
                .iter()
                .map(|a| {
                    json!({
                        "name": a.name,
                        "kind": a.kind.as_str(),
                        "token": [a.token.first, a.token.last],
                        "ignore_objects": a.ignore_objects,
                    })
                })
                .collect();
            json!({"function": c.function, "text_params": text, "amb_params": amb})
        })
        .collect();
    json!({ "calls": calls })
}
