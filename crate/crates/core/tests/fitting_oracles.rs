use std::collections::HashMap;

use cospeech::fitting::{
    dtw_alignment, dtw_similarity, fit_circle_2d, fit_line, fit_shape, fit_sine, FittedShape, ShapeType,
};
use cospeech::geometry::{vec3, Vec3};
use proptest::prelude::*;

/// Plain recursive DTW with memoization.
fn dtw_reference(a: &[Vec3], b: &[Vec3]) -> f64 {
    fn go(i: usize, j: usize, a: &[Vec3], b: &[Vec3], memo: &mut HashMap<(usize, usize), f64>) -> f64 {
        if let Some(v) = memo.get(&(i, j)) {
            return *v;
        }
        let cost = (a[i] - b[j]).norm();
        let v = match (i, j) {
            (0, 0) => cost,
            (0, _) => cost + go(0, j - 1, a, b, memo),
            (_, 0) => cost + go(i - 1, 0, a, b, memo),
            _ => {
                cost + go(i - 1, j - 1, a, b, memo)
                    .min(go(i - 1, j, a, b, memo))
                    .min(go(i, j - 1, a, b, memo))
            }
        };
        memo.insert((i, j), v);
        v
    }
    go(a.len() - 1, b.len() - 1, a, b, &mut HashMap::new())
}

fn polyline() -> impl Strategy<Value = Vec<Vec3>> {
    prop::collection::vec(prop::array::uniform3(-1.0f64..1.0), 1..25)
        .prop_map(|v| v.into_iter().map(Vec3::from).collect())
}

/// Least squares of `a sin(wu) + b cos(wu) + c` at fixed `w` (Cramer's rule).
fn sse_at(points: &[[f64; 2]], w: f64) -> f64 {
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
    let x: Vec<f64> = (0..3)
        .map(|k| {
            let mut mk = m;
            for i in 0..3 {
                mk[i][k] = r[i];
            }
            det(&mk) / d
        })
        .collect();
    points
        .iter()
        .map(|&[u, v]| (x[0] * (w * u).sin() + x[1] * (w * u).cos() + x[2] - v).powi(2))
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dtw_matches_recursive_reference(a in polyline(), b in polyline()) {
        let (cost, steps) = dtw_alignment(&a, &b).unwrap();
        let reference = dtw_reference(&a, &b);
        prop_assert!((cost - reference).abs() <= 1e-9 * (1.0 + reference));
        prop_assert!(steps >= a.len().max(b.len()) && steps < a.len() + b.len());
    }

    #[test]
    fn dtw_similarity_is_100_for_itself_and_bounded(a in polyline(), b in polyline()) {
        prop_assert!((dtw_similarity(&a, &a).unwrap() - 100.0).abs() < 1e-9);
        let s = dtw_similarity(&a, &b).unwrap();
        prop_assert!((0.0..=100.0).contains(&s));
    }

    #[test]
    fn circle_recovered_exactly(cx in -10.0f64..10.0, cy in -10.0f64..10.0, r in 0.01f64..5.0,
                                start in 0.0..std::f64::consts::TAU, sweep in 0.8..std::f64::consts::TAU, n in 5usize..80) {
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|k| {
                let a = start + sweep * k as f64 / (n - 1) as f64;
                [cx + r * a.cos(), cy + r * a.sin()]
            })
            .collect();
        let c = fit_circle_2d(&pts).unwrap();
        let scale = 1.0 + cx.abs().max(cy.abs()) / r;
        prop_assert!((c.center[0] - cx).abs() < 1e-9 * scale);
        prop_assert!((c.center[1] - cy).abs() < 1e-9 * scale);
        prop_assert!((c.radius - r).abs() < 1e-9 * scale);
    }

    #[test]
    fn line_direction_recovered(d in prop::array::uniform3(-1.0f64..1.0).prop_filter("nonzero", |d| d.iter().map(|x| x * x).sum::<f64>() > 0.01),
                                p in prop::array::uniform3(-5.0f64..5.0), n in 2usize..50) {
        let d = Vec3::from(d).normalize();
        let pts: Vec<Vec3> = (0..n).map(|k| Vec3::from(p) + d * (k as f64 * 0.1)).collect();
        let l = fit_line(&pts).unwrap();
        prop_assert!((l.direction.into_inner() - d).norm() < 1e-9);
        prop_assert!((l.length - (n - 1) as f64 * 0.1).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    // The fitted frequency lies in the grid oracle's best cell and the
    // objective is no worse than the oracle's.
    #[test]
    fn sine_fit_reaches_the_global_minimum(amp in 0.05f64..1.0, cycles in 0.8f64..4.0, phase in -3.0f64..3.0,
                                           offset in -1.0f64..1.0, span in 0.2f64..5.0) {
        let period = span / cycles;
        let pts: Vec<[f64; 2]> = (0..64)
            .map(|k| {
                let u = span * k as f64 / 63.0;
                [u, amp * (std::f64::consts::TAU * u / period + phase).sin() + offset]
            })
            .collect();
        let fit = fit_sine(&pts).unwrap();
        let (lo, hi) = (std::f64::consts::PI / span, std::f64::consts::PI * 63.0 / span);
        let nodes = 8000;
        let step = (hi - lo) / nodes as f64;
        let (best_w, best) = (0..=nodes)
            .map(|k| lo + step * k as f64)
            .map(|w| (w, sse_at(&pts, w)))
            .fold((0.0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        prop_assert!(fit.sse <= best + 1e-12);
        prop_assert!((std::f64::consts::TAU / fit.period - best_w).abs() <= step);
        prop_assert!((fit.amplitude - amp).abs() < 1e-6);
        prop_assert!((fit.period - period).abs() < 1e-6 * period.max(1.0));
    }
}

#[test]
fn drawing_task_sine_is_recovered() {
    // 0.3 m long, amplitude 0.2 m, one and a half periods
    let pts: Vec<Vec3> = (0..64)
        .map(|k| {
            let u = 0.3 * k as f64 / 63.0;
            vec3(u, 1.0 + 0.2 * (std::f64::consts::TAU * 1.5 * u / 0.3).sin(), 0.5)
        })
        .collect();
    let FittedShape::Sine { fit, u_end, .. } = fit_shape(&pts, ShapeType::Sine).unwrap() else {
        panic!("not a sine");
    };
    assert!((fit.amplitude - 0.2).abs() < 1e-6);
    assert!((u_end / fit.period - 1.5).abs() < 1e-6);
}
