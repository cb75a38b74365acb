//! Scoring synthetic trials against their ground truth.

use std::fmt::Write as _;

use serde::Serialize;

use crate::functions::FunctionCatalog;
use crate::geometry::{Rotation, Vec3};
use crate::intent::plan_rules;
use crate::pipeline::{
    metric_direction_diff, metric_path, metric_position_error, metric_rotation_diff, metric_selection,
    metric_size_pct, resolve, Outcome, PipelineConfig, Resolution,
};
use crate::synth::{Fixture, GroundTruth};

pub const POSITION_ERROR: &str = "position_error_m";
pub const PRECISION: &str = "precision_pct";
pub const RECALL: &str = "recall_pct";
pub const DIRECTION_ERROR: &str = "direction_error_deg";
pub const ROTATION_ERROR: &str = "rotation_error_deg";
pub const SIZE_DIFF: &str = "size_diff_pct";
pub const PATH_SIMILARITY: &str = "path_similarity_pct";

/// One scored trial. A trial that did not execute carries the reason in
/// `failure` and no metrics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialResult {
    pub metrics: Vec<(String, f64)>,
    pub failure: Option<String>,
}

impl TrialResult {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    fn failed(reason: impl Into<String>) -> Self {
        TrialResult {
            metrics: Vec::new(),
            failure: Some(reason.into()),
        }
    }
}

/// Plans with the rule grammar, resolves, executes and scores.
pub fn run_trial(fixture: &Fixture, config: &PipelineConfig) -> TrialResult {
    let catalog = FunctionCatalog::default_catalog();
    let plan = match plan_rules(&fixture.transcript, &fixture.scene, &catalog) {
        Ok(p) => p,
        Err(e) => return TrialResult::failed(e.to_string()),
    };
    let res = resolve(&plan, &fixture.transcript, &fixture.trace, &fixture.scene, &catalog, config);
    score(fixture, &res)
}

/// Scores an already resolved trial.
pub fn score(fixture: &Fixture, res: &Resolution) -> TrialResult {
    let calls = match &res.outcome {
        Outcome::Executed { calls } => calls,
        Outcome::Clarification(c) => return TrialResult::failed(c.message.clone()),
        Outcome::Rejected(r) => return TrialResult::failed(r.message.clone()),
    };
    let object = |name: &str| res.scene.get(name);
    let mut metrics = Vec::new();
    match &fixture.truth {
        GroundTruth::Position { object: o, target } => {
            let Some(obj) = object(o) else { return TrialResult::failed(format!("`{o}` missing")) };
            metrics.push((POSITION_ERROR.into(), metric_position_error(&obj.position, &Vec3::from(*target))));
        }
        GroundTruth::Object { selected, .. } => {
            let Some(sel) = calls.iter().find_map(|c| c.selection.as_ref()) else {
                return TrialResult::failed("nothing was selected");
            };
            let (p, r) = metric_selection(sel, selected);
            metrics.extend(p.map(|v| (PRECISION.to_string(), v)));
            metrics.extend(r.map(|v| (RECALL.to_string(), v)));
        }
        GroundTruth::Direction { object: o, direction } => {
            let Some(obj) = object(o) else { return TrialResult::failed(format!("`{o}` missing")) };
            let d = metric_direction_diff(&obj.rotation.forward(), &Vec3::from(*direction));
            metrics.push((DIRECTION_ERROR.into(), d));
        }
        GroundTruth::Rotation { object: o, target, .. } => {
            let Some(obj) = object(o) else { return TrialResult::failed(format!("`{o}` missing")) };
            let [x, y, z, w] = *target;
            let Some(t) = Rotation::from_xyzw(x, y, z, w) else {
                return TrialResult::failed("bad target quaternion");
            };
            metrics.push((ROTATION_ERROR.into(), metric_rotation_diff(&obj.rotation, &t)));
        }
        GroundTruth::Size { object: o, target, .. } => {
            let Some(obj) = object(o) else { return TrialResult::failed(format!("`{o}` missing")) };
            metrics.extend(metric_size_pct(obj.scale.max(), *target).map(|v| (SIZE_DIFF.to_string(), v)));
        }
        GroundTruth::Path { target, .. } => {
            let Some(points) = calls
                .iter()
                .find_map(|c| c.created.as_deref())
                .and_then(object)
                .and_then(|o| o.points.clone())
            else {
                return TrialResult::failed("no shape was drawn");
            };
            let target: Vec<Vec3> = target.iter().map(|p| Vec3::from(*p)).collect();
            match metric_path(&points, &target) {
                Ok(v) => metrics.push((PATH_SIMILARITY.into(), v)),
                Err(e) => return TrialResult::failed(e.to_string()),
            }
        }
    }
    TrialResult { metrics, failure: None }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricSummary {
    pub metric: String,
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub sd: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub trials: usize,
    pub failures: usize,
    pub metrics: Vec<MetricSummary>,
}

pub fn summarize(results: &[TrialResult]) -> Summary {
    let mut names: Vec<&str> = Vec::new();
    for r in results {
        for (n, _) in &r.metrics {
            if !names.contains(&n.as_str()) {
                names.push(n);
            }
        }
    }
    let metrics = names
        .into_iter()
        .map(|name| {
            let xs: Vec<f64> = results.iter().filter_map(|r| r.metric(name)).collect();
            let (mean, sd) = mean_sd(&xs);
            MetricSummary {
                metric: name.to_string(),
                mean,
                sd,
                n: xs.len(),
            }
        })
        .collect();
    Summary {
        trials: results.len(),
        failures: results.iter().filter(|r| r.failure.is_some()).count(),
        metrics,
    }
}

/// Mean and sample standard deviation.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Plain-text table, one metric per line as `mean ± sd`.
pub fn format_summary(title: &str, s: &Summary) -> String {
    let mut out = format!("{title}: {} trials, {} failed\n", s.trials, s.failures);
    for m in &s.metrics {
        let _ = writeln!(out, "  {:<22} {:>10.4} ± {:<10.4} (n={})", m.metric, m.mean, m.sd, m.n);
    }
    out
}
