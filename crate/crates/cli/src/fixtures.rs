//! Fixture directories: one `trial_NNN/` per trial holding `scene.json`,
//! `transcript.json`, `trace.json` and `truth.json`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cospeech::gesture::{load_trace, trace_to_json};
use cospeech::scene::{load_scene, serialize_scene};
use cospeech::synth::{Fixture, GroundTruth};
use cospeech::transcript::parse_transcript;

pub const SCENE: &str = "scene.json";
pub const TRANSCRIPT: &str = "transcript.json";
pub const TRACE: &str = "trace.json";
pub const TRUTH: &str = "truth.json";

pub fn write_fixture(dir: &Path, f: &Fixture) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let files = [
        (SCENE, serialize_scene(&f.scene)),
        (TRANSCRIPT, serde_json::to_string_pretty(&f.transcript)?),
        (TRACE, trace_to_json(&f.trace)),
        (TRUTH, serde_json::to_string_pretty(&f.truth)?),
    ];
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn read_scene(path: &Path) -> Result<cospeech::scene::Scene> {
    load_scene(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

pub fn read_transcript(path: &Path) -> Result<cospeech::transcript::Transcript> {
    parse_transcript(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

pub fn read_trace(path: &Path) -> Result<cospeech::gesture::GestureTrace> {
    load_trace(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

/// Reads one trial directory. A missing `truth.json` is an error.
pub fn read_fixture(dir: &Path) -> Result<Fixture> {
    let truth_path = dir.join(TRUTH);
    if !truth_path.exists() {
        bail!("missing ground truth: {} not found", truth_path.display());
    }
    let truth: GroundTruth =
        serde_json::from_str(&read(&truth_path)?).with_context(|| format!("parsing {}", truth_path.display()))?;
    Ok(Fixture {
        scene: read_scene(&dir.join(SCENE))?,
        transcript: read_transcript(&dir.join(TRANSCRIPT))?,
        trace: read_trace(&dir.join(TRACE))?,
        truth,
    })
}

/// Trial directories under `dir`, sorted by name.
pub fn trial_dirs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.is_dir() && path.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("trial_")) {
            out.push(path);
        }
    }
    out.sort();
    if out.is_empty() {
        bail!("no trial_* directories in {}", dir.display());
    }
    Ok(out)
}

pub fn trial_dir(root: &Path, k: usize) -> PathBuf {
    root.join(format!("trial_{k:03}"))
}
