//! Least-squares shape fits and DTW path similarity.
//!
//! Circles use the algebraic (Kåsa) linearization, lines the principal
//! axis of the point cloud, and sine waves a grid-seeded damped
//! Gauss-Newton refinement. Mid-air sketches are 3D; circle and sine fits
//! first project the points onto their best-fit plane.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Matrix3, Matrix4, SymmetricEigen, Vector3, Vector4};
use thiserror::Error;
use serde::{Deserialize, Serialize};

use crate::geometry::{angle_between, plane_basis, try_unit, UnitVec3, Vec3};

/// Samples per polyline when comparing or drawing paths.
pub const DEFAULT_SAMPLES: usize = 64;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("sine fit did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize, last: Box<SineFit> },
    #[error("path is empty")]
    EmptyPath,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Circle2 {
    pub center: [f64; 2],
    pub radius: f64,
}

/// Algebraic circle fit: least squares on `u² + v² = a·u + b·v + c`.
pub fn fit_circle_2d(points: &[[f64; 2]]) -> Result<Circle2, FitError> {
    if points.len() < 3 {
        return Err(FitError::DegenerateInput("circle fit needs at least 3 points"));
    }
    let n = points.len() as f64;
    let mu = points
        .iter()
        .fold([0.0, 0.0], |acc, p| [acc[0] + p[0] / n, acc[1] + p[1] / n]);
    let design = DMatrix::from_fn(points.len(), 3, |i, j| match j {
        0 => points[i][0] - mu[0],
        1 => points[i][1] - mu[1],
        _ => 1.0,
    });
    let rhs = DVector::from_fn(points.len(), |i, _| {
        let u = points[i][0] - mu[0];
        let v = points[i][1] - mu[1];
        u * u + v * v
    });
    let svd = design.svd(true, true);
    let max_sv = svd.singular_values.max();
    let min_sv = svd.singular_values.min();
    if max_sv == 0.0 || min_sv / max_sv < 1e-10 {
        return Err(FitError::DegenerateInput("points are collinear or coincident"));
    }
    let sol = svd
        .solve(&rhs, 0.0)
        .map_err(|_| FitError::DegenerateInput("circle system is singular"))?;
    let cu = sol[0] / 2.0;
    let cv = sol[1] / 2.0;
    let r2 = sol[2] + cu * cu + cv * cv;
    if r2.is_nan() || r2 <= 0.0 {
        return Err(FitError::DegenerateInput("circle fit produced no real radius"));
    }
    Ok(Circle2 {
        center: [cu + mu[0], cv + mu[1]],
        radius: r2.sqrt(),
    })
}

fn centroid(points: &[Vec3]) -> Vec3 {
    points.iter().sum::<Vec3>() / points.len() as f64
}

/// Eigen-decomposition of the scatter matrix, eigenvalues descending.
fn principal_axes(points: &[Vec3]) -> (Vec3, [f64; 3], [Vec3; 3]) {
    let c = centroid(points);
    let mut scatter = Matrix3::zeros();
    for p in points {
        let d = p - c;
        scatter += d * d.transpose();
    }
    let eig = SymmetricEigen::new(scatter);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.map(|i| eig.eigenvalues[i]);
    let vectors = order.map(|i| Vector3::from(eig.eigenvectors.column(i)));
    (c, values, vectors)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    /// Centroid of the points; the line passes through it.
    pub point: Vec3,
    /// Oriented from the first input point towards the last.
    pub direction: UnitVec3,
    /// Extent of the point projections along `direction`.
    pub length: f64,
    pub start: Vec3,
    pub end: Vec3,
}

/// Total-least-squares line: the principal axis through the centroid.
pub fn fit_line(points: &[Vec3]) -> Result<LineFit, FitError> {
    if points.len() < 2 {
        return Err(FitError::DegenerateInput("line fit needs at least 2 points"));
    }
    let (c, values, vectors) = principal_axes(points);
    if values[0] <= 1e-24 {
        return Err(FitError::DegenerateInput("all points coincide"));
    }
    let mut dir = vectors[0];
    let travel = points[points.len() - 1] - points[0];
    if travel.dot(&dir) < 0.0 {
        dir = -dir;
    }
    let dir = try_unit(dir).ok_or(FitError::DegenerateInput("no principal direction"))?;
    let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let s = (p - c).dot(&dir);
        (lo.min(s), hi.max(s))
    });
    Ok(LineFit {
        point: c,
        direction: dir,
        length: hi - lo,
        start: c + dir.into_inner() * lo,
        end: c + dir.into_inner() * hi,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneFit {
    pub point: Vec3,
    pub normal: UnitVec3,
}

/// Best-fit plane through the centroid (normal = least principal axis).
pub fn fit_plane(points: &[Vec3]) -> Result<PlaneFit, FitError> {
    if points.len() < 3 {
        return Err(FitError::DegenerateInput("plane fit needs at least 3 points"));
    }
    let (c, values, vectors) = principal_axes(points);
    if values[1] <= 1e-18 * values[0].max(1e-300) || values[0] <= 1e-24 {
        return Err(FitError::DegenerateInput("points are collinear or coincident"));
    }
    let normal = try_unit(vectors[2]).ok_or(FitError::DegenerateInput("no plane normal"))?;
    Ok(PlaneFit { point: c, normal })
}

/// `v ≈ amplitude · sin(2π·u / period + phase) + offset`.
#[derive(Clone, Debug, PartialEq)]
pub struct SineFit {
    pub amplitude: f64,
    pub period: f64,
    pub phase: f64,
    pub offset: f64,
    pub sse: f64,
    pub iterations: usize,
    /// Objective value after the seed and after every accepted step.
    pub objective_trace: Vec<f64>,
}

impl SineFit {
    pub fn eval(&self, u: f64) -> f64 {
        self.amplitude * (TAU * u / self.period + self.phase).sin() + self.offset
    }
}

const SINE_MAX_ITERATIONS: usize = 100;
const SINE_STEP_TOL: f64 = 1e-10;

fn sine_sse(points: &[[f64; 2]], p: &Vector4<f64>) -> f64 {
    points
        .iter()
        .map(|&[u, v]| {
            let r = p[0] * (p[3] * u).sin() + p[1] * (p[3] * u).cos() + p[2] - v;
            r * r
        })
        .sum()
}

/// Linear least squares for `(a, b, c)` in `a·sin(ωu) + b·cos(ωu) + c` at a
/// fixed angular frequency.
fn sine_linear(points: &[[f64; 2]], omega: f64) -> Option<Vector3<f64>> {
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    for &[u, v] in points {
        let row = Vector3::new((omega * u).sin(), (omega * u).cos(), 1.0);
        ata += row * row.transpose();
        atb += row * v;
    }
    // pseudo-inverse tolerates constant data where the sine columns vanish
    ata.pseudo_inverse(1e-12).ok().map(|inv| inv * atb)
}

/// Nonlinear least-squares sine fit.
///
/// The angular frequency is seeded by a grid search (with the linear
/// parameters solved exactly at each grid point) and then refined jointly
/// with the linear parameters by Levenberg-damped Gauss-Newton. A step is
/// only accepted when it lowers the objective.
pub fn fit_sine(points: &[[f64; 2]]) -> Result<SineFit, FitError> {
    if points.len() < 8 {
        return Err(FitError::DegenerateInput("sine fit needs at least 8 points"));
    }
    let (u_min, u_max) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[0]), hi.max(p[0])));
    let span = u_max - u_min;
    if span.is_nan() || span <= 0.0 {
        return Err(FitError::DegenerateInput("sine fit needs distinct abscissae"));
    }

    let omega_min = PI / span;
    let omega_max = PI * (points.len() - 1) as f64 / span;
    let step = PI / (4.0 * span);
    let mut best: Option<(f64, Vector4<f64>)> = None;
    let mut omega = omega_min;
    while omega <= omega_max + 1e-12 {
        if let Some(lin) = sine_linear(points, omega) {
            let p = Vector4::new(lin[0], lin[1], lin[2], omega);
            let sse = sine_sse(points, &p);
            if best.as_ref().is_none_or(|(b, _)| sse < *b) {
                best = Some((sse, p));
            }
        }
        omega += step;
    }
    let (mut sse, mut params) =
        best.ok_or(FitError::DegenerateInput("no frequency admits a linear fit"))?;
    let mut trace = vec![sse];

    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < SINE_MAX_ITERATIONS {
        iterations += 1;
        let mut jtj = Matrix4::zeros();
        let mut jtr = Vector4::zeros();
        for &[u, v] in points {
            let (s, c) = (params[3] * u).sin_cos();
            let r = params[0] * s + params[1] * c + params[2] - v;
            let j = Vector4::new(s, c, 1.0, u * (params[0] * c - params[1] * s));
            jtj += j * j.transpose();
            jtr += j * r;
        }
        let mut accepted = false;
        let mut small_step = false;
        while lambda < 1e12 {
            let mut damped = jtj;
            for i in 0..4 {
                damped[(i, i)] += lambda * (jtj[(i, i)] + 1e-12);
            }
            let Some(delta) = damped.lu().solve(&-jtr) else {
                lambda *= 10.0;
                continue;
            };
            if delta.norm() < SINE_STEP_TOL {
                small_step = true;
                break;
            }
            let candidate = params + delta;
            let cand_sse = sine_sse(points, &candidate);
            if cand_sse < sse {
                params = candidate;
                sse = cand_sse;
                trace.push(sse);
                lambda = (lambda / 10.0).max(1e-15);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if small_step || !accepted {
            // either the step vanished or no damping lowers the objective:
            // a stationary point either way
            converged = true;
            break;
        }
    }

    let fit = sine_from_params(&params, sse, iterations, trace);
    if converged {
        Ok(fit)
    } else {
        Err(FitError::NoConvergence {
            iterations,
            last: Box::new(fit),
        })
    }
}

fn sine_from_params(p: &Vector4<f64>, sse: f64, iterations: usize, trace: Vec<f64>) -> SineFit {
    let (mut a, b, omega) = (p[0], p[1], p[3]);
    let omega = if omega < 0.0 {
        a = -a;
        -omega
    } else {
        omega
    };
    let amplitude = a.hypot(b);
    let phase = if amplitude < 1e-12 { 0.0 } else { b.atan2(a) };
    SineFit {
        amplitude,
        period: TAU / omega,
        phase,
        offset: p[2],
        sse,
        iterations,
        objective_trace: trace,
    }
}

/// Kinds of shapes `draw_path` can sketch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeType {
    Line,
    Circle,
    Sine,
}

impl ShapeType {
    pub fn as_str(&self) -> &'static str {
        match self {
            ShapeType::Line => "line",
            ShapeType::Circle => "circle",
            ShapeType::Sine => "sine",
        }
    }
}

impl fmt::Display for ShapeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ShapeType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "line" | "straight_line" | "straight line" => Ok(ShapeType::Line),
            "circle" => Ok(ShapeType::Circle),
            "sine" | "sine_wave" | "sine wave" | "wave" => Ok(ShapeType::Sine),
            other => Err(format!("unknown shape type `{other}`")),
        }
    }
}

/// A shape fitted to a sketched 3D path.
#[derive(Clone, Debug, PartialEq)]
pub enum FittedShape {
    Line(LineFit),
    Circle {
        center: Vec3,
        normal: UnitVec3,
        radius: f64,
        /// In-plane basis; angles are measured from `e1` towards `e2`.
        e1: Vec3,
        e2: Vec3,
        start_angle: f64,
        /// +1 or -1: the direction the sketch went round.
        sweep: f64,
    },
    Sine {
        origin: Vec3,
        u_axis: Vec3,
        v_axis: Vec3,
        u_end: f64,
        fit: SineFit,
    },
}

impl FittedShape {
    pub fn shape_type(&self) -> ShapeType {
        match self {
            FittedShape::Line(_) => ShapeType::Line,
            FittedShape::Circle { .. } => ShapeType::Circle,
            FittedShape::Sine { .. } => ShapeType::Sine,
        }
    }

    /// `n` points spaced uniformly in the shape's own parameter. Circles are
    /// closed (the last point repeats the first).
    pub fn sample(&self, n: usize) -> Vec<Vec3> {
        let n = n.max(2);
        let frac = |k: usize| k as f64 / (n - 1) as f64;
        match self {
            FittedShape::Line(l) => (0..n).map(|k| l.start + (l.end - l.start) * frac(k)).collect(),
            FittedShape::Circle {
                center,
                radius,
                e1,
                e2,
                start_angle,
                sweep,
                ..
            } => (0..n)
                .map(|k| {
                    let a = start_angle + sweep * TAU * frac(k);
                    center + (e1 * a.cos() + e2 * a.sin()) * *radius
                })
                .collect(),
            FittedShape::Sine {
                origin,
                u_axis,
                v_axis,
                u_end,
                fit,
            } => (0..n)
                .map(|k| {
                    let u = u_end * frac(k);
                    origin + u_axis * u + v_axis * fit.eval(u)
                })
                .collect(),
        }
    }

    /// Center of the shape's bounding box and its extents.
    pub fn bounds(&self, n: usize) -> (Vec3, Vec3) {
        bounding_box(&self.sample(n))
    }
}

/// Axis-aligned bounding box as (center, extents).
pub fn bounding_box(points: &[Vec3]) -> (Vec3, Vec3) {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    ((lo + hi) / 2.0, hi - lo)
}

/// Fits `shape` to a sketched path.
pub fn fit_shape(points: &[Vec3], shape: ShapeType) -> Result<FittedShape, FitError> {
    match shape {
        ShapeType::Line => fit_line(points).map(FittedShape::Line),
        ShapeType::Circle => fit_circle_3d(points),
        ShapeType::Sine => fit_sine_3d(points),
    }
}

fn fit_circle_3d(points: &[Vec3]) -> Result<FittedShape, FitError> {
    let plane = fit_plane(points)?;
    let (e1, e2) = plane_basis(&plane.normal);
    let (e1, e2) = (e1.into_inner(), e2.into_inner());
    let uv: Vec<[f64; 2]> = points
        .iter()
        .map(|p| {
            let d = p - plane.point;
            [d.dot(&e1), d.dot(&e2)]
        })
        .collect();
    let circle = fit_circle_2d(&uv)?;
    let angle = |p: &[f64; 2]| (p[1] - circle.center[1]).atan2(p[0] - circle.center[0]);
    let start_angle = angle(&uv[0]);
    let mut turned = 0.0;
    for w in uv.windows(2) {
        let mut d = angle(&w[1]) - angle(&w[0]);
        if d > PI {
            d -= TAU;
        } else if d < -PI {
            d += TAU;
        }
        turned += d;
    }
    Ok(FittedShape::Circle {
        center: plane.point + e1 * circle.center[0] + e2 * circle.center[1],
        normal: plane.normal,
        radius: circle.radius,
        e1,
        e2,
        start_angle,
        sweep: if turned < 0.0 { -1.0 } else { 1.0 },
    })
}

fn fit_sine_3d(points: &[Vec3]) -> Result<FittedShape, FitError> {
    let plane = fit_plane(points)?;
    let n = plane.normal.into_inner();
    let first = points[0];
    let origin = first - n * (first - plane.point).dot(&n);
    let chord = points[points.len() - 1] - first;
    let chord = chord - n * chord.dot(&n);
    let u_axis = match try_unit(chord) {
        Some(u) => u.into_inner(),
        None => principal_axes(points).2[0],
    };
    let v_axis = n.cross(&u_axis);
    let uv: Vec<[f64; 2]> = points
        .iter()
        .map(|p| {
            let d = p - origin;
            [d.dot(&u_axis), d.dot(&v_axis)]
        })
        .collect();
    let fit = fit_sine(&uv)?;
    Ok(FittedShape::Sine {
        origin,
        u_axis,
        v_axis,
        u_end: uv[uv.len() - 1][0],
        fit,
    })
}

/// Total length of a polyline.
pub fn polyline_length(points: &[Vec3]) -> f64 {
    points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// `n` points uniformly spaced by arc length, endpoints included. A
/// zero-length polyline yields `n` copies of its first point.
pub fn resample_polyline(points: &[Vec3], n: usize) -> Vec<Vec3> {
    if points.is_empty() || n == 0 {
        return Vec::new();
    }
    let total = polyline_length(points);
    if n == 1 || total == 0.0 {
        return vec![points[0]; n];
    }
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    let mut seg_start = 0.0;
    for k in 0..n {
        let target = total * k as f64 / (n - 1) as f64;
        loop {
            let len = (points[seg + 1] - points[seg]).norm();
            if target <= seg_start + len || seg + 2 >= points.len() {
                let t = if len > 0.0 {
                    ((target - seg_start) / len).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                out.push(points[seg] + (points[seg + 1] - points[seg]) * t);
                break;
            }
            seg_start += len;
            seg += 1;
        }
    }
    out
}

/// Optimal DTW alignment with Euclidean point cost: (total cost, number of
/// aligned pairs on the optimal warping path).
pub fn dtw_alignment(a: &[Vec3], b: &[Vec3]) -> Result<(f64, usize), FitError> {
    if a.is_empty() || b.is_empty() {
        return Err(FitError::EmptyPath);
    }
    let (n, m) = (a.len(), b.len());
    let mut acc = vec![f64::INFINITY; n * m];
    let idx = |i: usize, j: usize| i * m + j;
    for i in 0..n {
        for j in 0..m {
            let cost = (a[i] - b[j]).norm();
            let prev = if i == 0 && j == 0 {
                0.0
            } else {
                let diag = if i > 0 && j > 0 { acc[idx(i - 1, j - 1)] } else { f64::INFINITY };
                let up = if i > 0 { acc[idx(i - 1, j)] } else { f64::INFINITY };
                let left = if j > 0 { acc[idx(i, j - 1)] } else { f64::INFINITY };
                diag.min(up).min(left)
            };
            acc[idx(i, j)] = cost + prev;
        }
    }
    // Walk back, preferring the diagonal on ties.
    let (mut i, mut j, mut steps) = (n - 1, m - 1, 1);
    while i > 0 || j > 0 {
        if i == 0 {
            j -= 1;
        } else if j == 0 {
            i -= 1;
        } else {
            let diag = acc[idx(i - 1, j - 1)];
            let up = acc[idx(i - 1, j)];
            let left = acc[idx(i, j - 1)];
            if diag <= up && diag <= left {
                i -= 1;
                j -= 1;
            } else if up <= left {
                i -= 1;
            } else {
                j -= 1;
            }
        }
        steps += 1;
    }
    Ok((acc[idx(n - 1, m - 1)], steps))
}

/// Mean aligned distance mapped to a percentage of the reference path's
/// bounding-box diagonal.
pub fn similarity_percent(mean_distance: f64, reference_diagonal: f64) -> f64 {
    if reference_diagonal <= 0.0 {
        return if mean_distance == 0.0 { 100.0 } else { 0.0 };
    }
    100.0 * (1.0 - mean_distance / reference_diagonal).max(0.0)
}

/// DTW similarity of path `a` against reference path `b`, in `[0, 100]`.
///
/// Both polylines are resampled to [`DEFAULT_SAMPLES`] points by arc
/// length. The score is normalized by `b`'s bounding box, so it is not
/// symmetric in its arguments.
pub fn dtw_similarity(a: &[Vec3], b: &[Vec3]) -> Result<f64, FitError> {
    if a.is_empty() || b.is_empty() {
        return Err(FitError::EmptyPath);
    }
    let ra = resample_polyline(a, DEFAULT_SAMPLES);
    let rb = resample_polyline(b, DEFAULT_SAMPLES);
    let (cost, steps) = dtw_alignment(&ra, &rb)?;
    let diagonal = bounding_box(b).1.norm();
    Ok(similarity_percent(cost / steps as f64, diagonal))
}

/// Angle in degrees between two directions; used by the direction metric.
pub fn direction_difference_degrees(a: &Vec3, b: &Vec3) -> f64 {
    angle_between(a, b).to_degrees()
}
