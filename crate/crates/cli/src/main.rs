use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use cospeech::eval::{format_summary, run_trial, summarize};
use cospeech::fitting::ShapeType;
use cospeech::pipeline::PipelineConfig;
use cospeech::scene::serialize_scene;
use cospeech::synth::{hang_painting, synth_trials, trial_seed, SizeMode, SynthParams, Task};
use cospeech::transcript::DEFAULT_PADDING_MS;

mod backend;
mod fixtures;
mod replay;

use backend::{HttpBackend, LlmConfig};
use replay::{Planner, Status};

#[derive(Parser)]
#[command(name = "cospeech", version, about = "Replay and evaluate speech-and-gesture scene commands")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendKind {
    Rules,
    Llm,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SynthTask {
    Position,
    Object,
    Direction,
    Rotation,
    Size,
    Path,
    /// Hanging a painting on a wall by pointing.
    Hang,
}

#[derive(Subcommand)]
enum Command {
    /// Run one recorded utterance and write a JSON-lines report.
    Replay {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        transcript: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_enum, default_value = "rules")]
        backend: BackendKind,
        /// Report file (JSON lines).
        #[arg(long)]
        out: PathBuf,
        /// Also write the resulting scene here.
        #[arg(long)]
        scene_out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_PADDING_MS)]
        padding_ms: i64,
        #[arg(long)]
        move_threshold_m: Option<f64>,
        /// TOML file with `endpoint`, `token` and `timeout_s`.
        #[arg(long)]
        llm_config: Option<PathBuf>,
    },
    /// Score a directory of fixtures against their ground truth.
    Eval {
        #[arg(long)]
        task: Task,
        #[arg(long)]
        dir: PathBuf,
        /// Print JSON lines (one per trial, then the summary) instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Generate seeded fixtures.
    Synth {
        #[arg(long, value_enum)]
        task: SynthTask,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        #[arg(long)]
        out: PathBuf,
        /// Pointing jitter per frame, degrees.
        #[arg(long, default_value_t = 0.0)]
        sigma_deg: f64,
        /// Hand position jitter per frame, meters.
        #[arg(long, default_value_t = 0.0)]
        palm_sigma_m: f64,
        #[arg(long, default_value_t = 2.0)]
        distance_m: f64,
        /// Hands for the rotation task (1 or 2).
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        hands: Option<u8>,
        /// one, two or surface.
        #[arg(long)]
        size_mode: Option<SizeMode>,
        /// line, circle or sine.
        #[arg(long)]
        shape: Option<ShapeType>,
        /// For `hang`: keep the hand out of view while "here" is spoken.
        #[arg(long)]
        no_gesture: bool,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(Status::InputError.code())
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Replay {
            scene,
            transcript,
            trace,
            backend,
            out,
            scene_out,
            padding_ms,
            move_threshold_m,
            llm_config,
        } => {
            let scene = fixtures::read_scene(&scene)?;
            let transcript = fixtures::read_transcript(&transcript)?;
            let trace = fixtures::read_trace(&trace)?;
            let mut config = PipelineConfig {
                padding_ms,
                ..PipelineConfig::default()
            };
            if let Some(m) = move_threshold_m {
                if !(m.is_finite() && m >= 0.0) {
                    bail!("--move-threshold-m must be a non-negative number");
                }
                config.move_threshold_m = m;
            }
            if padding_ms < 0 {
                bail!("--padding-ms must be non-negative");
            }
            let http;
            let planner = match backend {
                BackendKind::Rules => Planner::Rules,
                BackendKind::Llm => {
                    let cfg = match &llm_config {
                        Some(p) => LlmConfig::from_file(p)?,
                        None => LlmConfig::from_env()?,
                    };
                    http = HttpBackend::new(cfg);
                    Planner::Llm(&http)
                }
            };
            let result = replay::replay(&scene, &transcript, &trace, planner, &config);
            write(&out, &replay::to_lines(&result.records))?;
            if let Some(p) = scene_out {
                write(&p, &(serialize_scene(&result.scene) + "\n"))?;
            }
            if let Some(msg) = result
                .records
                .iter()
                .find(|r| r["record"] == "clarification" || r["record"] == "rejected")
                .and_then(|r| r["message"].as_str())
            {
                eprintln!("{msg}");
            }
            Ok(result.status.code())
        }
        Command::Eval { task, dir, json } => {
            let config = PipelineConfig::default();
            let mut results = Vec::new();
            for d in fixtures::trial_dirs(&dir)? {
                let f = fixtures::read_fixture(&d)?;
                if f.truth.task() != task {
                    bail!("{} holds a {} fixture, not {task}", d.display(), f.truth.task());
                }
                let r = run_trial(&f, &config);
                let name = d.file_name().and_then(|n| n.to_str()).unwrap_or("?").to_string();
                if json {
                    let rec = serde_json::json!({"record": "trial", "trial": name, "metrics": r.metrics, "failure": r.failure});
                    println!("{rec}");
                } else {
                    let metrics: Vec<String> = r.metrics.iter().map(|(n, v)| format!("{n}={v:.6}")).collect();
                    match &r.failure {
                        None => println!("{name} {}", metrics.join(" ")),
                        Some(why) => println!("{name} failed: {why}"),
                    }
                }
                results.push(r);
            }
            let summary = summarize(&results);
            if json {
                let mut rec = serde_json::to_value(&summary)?;
                rec["record"] = "summary".into();
                println!("{rec}");
            } else {
                print!("{}", format_summary(task.as_str(), &summary));
            }
            Ok(0)
        }
        Command::Synth {
            task,
            seed,
            trials,
            out,
            sigma_deg,
            palm_sigma_m,
            distance_m,
            hands,
            size_mode,
            shape,
            no_gesture,
        } => {
            if !(sigma_deg >= 0.0 && palm_sigma_m >= 0.0 && distance_m > 0.0) {
                bail!("noise levels must be non-negative and the distance positive");
            }
            let params = SynthParams {
                sigma_deg,
                palm_sigma_m,
                distance_m,
                hands,
                size_mode,
                shape,
            };
            let batch = match to_task(task) {
                Some(t) => synth_trials(t, &params, seed, trials),
                None => (0..trials).map(|k| hang_painting(trial_seed(seed, k), !no_gesture)).collect(),
            };
            for (k, f) in batch.iter().enumerate() {
                fixtures::write_fixture(&fixtures::trial_dir(&out, k), f)?;
            }
            println!("wrote {} fixtures to {}", batch.len(), out.display());
            Ok(0)
        }
    }
}

fn to_task(t: SynthTask) -> Option<Task> {
    Some(match t {
        SynthTask::Position => Task::Position,
        SynthTask::Object => Task::Object,
        SynthTask::Direction => Task::Direction,
        SynthTask::Rotation => Task::Rotation,
        SynthTask::Size => Task::Size,
        SynthTask::Path => Task::Path,
        SynthTask::Hang => return None,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
