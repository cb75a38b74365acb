use cospeech::functions::FunctionCatalog;
use cospeech::geometry::{Rotation, UnitVec3, Vec3};
use cospeech::intent::plan_rules;
use cospeech::pipeline::{resolve, PipelineConfig};
use cospeech::synth::{synth_trial, SynthParams, Task};
use proptest::prelude::*;

prop_compose! {
    fn rigid()(a in prop::array::uniform3(-1.0f64..1.0).prop_filter("nonzero", |a| a.iter().map(|x| x * x).sum::<f64>() > 0.01),
               angle in -3.1f64..3.1,
               t in prop::array::uniform3(-5.0f64..5.0)) -> (Rotation, Vec3) {
        (Rotation::from_axis_angle(&UnitVec3::new_normalize(Vec3::from(a)), angle), Vec3::from(t))
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // Running a command in a rigidly moved world gives the moved result.
    #[test]
    fn resolving_commutes_with_rigid_motion(task_k in 0usize..6, seed in 0u64..1000, k in 0usize..6, (r, t) in rigid()) {
        let task = Task::ALL[task_k];
        let p = SynthParams { sigma_deg: 0.5, palm_sigma_m: 0.002, ..SynthParams::default() };
        let f = synth_trial(task, &p, seed, k);
        let catalog = FunctionCatalog::default_catalog();
        let cfg = PipelineConfig::default();
        let plan = plan_rules(&f.transcript, &f.scene, &catalog).unwrap();
        let a = resolve(&plan, &f.transcript, &f.trace, &f.scene, &catalog, &cfg);
        let moved_scene = f.scene.transformed(&r, &t);
        let b = resolve(&plan, &f.transcript, &f.trace.transformed(&r, &t), &moved_scene, &catalog, &cfg);
        prop_assert!(a.is_executed() && b.is_executed(), "{task}");
        let expected = a.scene.transformed(&r, &t);
        prop_assert_eq!(expected.len(), b.scene.len());
        for (x, y) in expected.objects().iter().zip(b.scene.objects()) {
            prop_assert_eq!(&x.name, &y.name);
            if x.points.is_some() {
                // drawn shapes carry a world-aligned box; their points are the geometry
                let (p, q) = (x.points.as_ref().unwrap(), y.points.as_ref().unwrap());
                for (u, v) in p.iter().zip(q) {
                    prop_assert!((u - v).norm() < 1e-9, "{task} {}: points", x.name);
                }
                continue;
            }
            prop_assert!((x.position - y.position).norm() < 1e-9, "{task} {}: position", x.name);
            prop_assert!(x.rotation.angle_to(&y.rotation) < 1e-9, "{task} {}: rotation", x.name);
            prop_assert!((x.scale - y.scale).norm() < 1e-9, "{task} {}: scale", x.name);
            prop_assert!(y.points.is_none());
        }
    }
}
