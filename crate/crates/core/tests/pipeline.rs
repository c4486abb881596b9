use nalgebra::Point3;
use proptest::prelude::*;
use swarmtrack::eval::{evaluate, EvalConfig};
use swarmtrack::filter::Method;
use swarmtrack::geometry::{project, triangulate};
use swarmtrack::io;
use swarmtrack::manager::{run, Dataset, RunParams, TrackSet};
use swarmtrack::sim::{crossing_truth, generate_truth, render_all, GroundTruth, RigConfig, SimConfig};

fn scene(n: usize, seed: u64) -> (SimConfig, GroundTruth, Dataset) {
    let cfg = SimConfig {
        n_objects: n,
        seed,
        ..Default::default()
    };
    let cams = cfg.rig.cameras().unwrap();
    let gt = generate_truth(&cfg).unwrap();
    let r = render_all(&cfg, &gt, &cams).unwrap();
    let ds = Dataset::new(cams.clone(), r.by_view_id(&cams)).unwrap();
    (cfg, gt, ds)
}

fn window() -> EvalConfig {
    EvalConfig {
        d0: 1.5,
        window: Some((3, 50)),
    }
}

#[test]
fn small_swarm_is_tracked_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, gt, ds) = scene(8, 21);
    let cams = cfg.rig.cameras().unwrap();
    let r = render_all(&cfg, &gt, &cams).unwrap();

    io::write_calibration(&dir.path().join("cal.json"), &cams).unwrap();
    io::write_measurements(&dir.path().join("m.json"), &r.by_view_id(&cams)).unwrap();
    io::write_truth(&dir.path().join("t.csv"), &gt).unwrap();
    let ds_file = Dataset::new(
        io::read_calibration(&dir.path().join("cal.json")).unwrap(),
        io::read_measurements(&dir.path().join("m.json")).unwrap(),
    )
    .unwrap();
    let gt_file = io::read_truth(&dir.path().join("t.csv")).unwrap();

    let params = RunParams::simulation(Method::Cskpf, 21);
    let direct = run(&ds, &params).unwrap();
    let via_files = run(&ds_file, &params).unwrap();
    let a = evaluate(&gt, &direct, &window()).unwrap();
    let b = evaluate(&gt_file, &via_files, &window()).unwrap();
    assert_eq!(a, b);
    assert!(a.integrity >= 0.9, "{a:?}");
    assert!(a.precision.unwrap() < 0.5, "{a:?}");

    io::write_tracks(&dir.path().join("tracks.csv"), &direct).unwrap();
    let back = io::read_tracks(&dir.path().join("tracks.csv")).unwrap();
    assert_eq!(evaluate(&gt, &back, &window()).unwrap(), a);
}

#[test]
fn crossing_pair_keeps_identities() {
    for seed in 0..3 {
        let cfg = SimConfig {
            seed,
            ..Default::default()
        };
        let cams = cfg.rig.cameras().unwrap();
        let gt = crossing_truth(&cfg);
        let r = render_all(&cfg, &gt, &cams).unwrap();
        let ds = Dataset::new(cams.clone(), r.by_view_id(&cams)).unwrap();
        let ts = run(&ds, &RunParams::simulation(Method::Cskpf, seed)).unwrap();
        let m = evaluate(&gt, &ts, &window()).unwrap();
        assert_eq!(ts.len(), 2, "seed {seed}");
        assert_eq!(m.idsw_total, 0, "seed {seed}");
    }
}

#[test]
fn cskpf_is_more_precise_on_a_shared_scene() {
    let (_, gt, ds) = scene(10, 5);
    let cv = run(&ds, &RunParams::simulation(Method::Cvpf, 5)).unwrap();
    let cs = run(&ds, &RunParams::simulation(Method::Cskpf, 5)).unwrap();
    let pcv = evaluate(&gt, &cv, &window()).unwrap().precision.unwrap();
    let pcs = evaluate(&gt, &cs, &window()).unwrap().precision.unwrap();
    assert!(pcs < pcv, "cskpf {pcs} cvpf {pcv}");
}

fn relabel(ts: &TrackSet, offset: u64) -> TrackSet {
    let mut out = ts.clone();
    for t in &mut out.trajectories {
        t.id += offset;
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rig_round_trips_points_in_the_volume(
        x in -20.0f64..50.0, y in -44.0f64..44.0, z in -26.0f64..26.0,
    ) {
        let cams = RigConfig::default().cameras().unwrap();
        let p = Point3::new(x, y, z);
        let a = project(&cams[0], &p).unwrap();
        let b = project(&cams[1], &p).unwrap();
        let (q, residual) = triangulate(&cams[0], a, &cams[1], b).unwrap();
        prop_assert!((q - p).norm() < 1e-6);
        prop_assert!(residual < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn metrics_ignore_track_labels_and_stay_in_range(seed in 0u64..1000, offset in 1u64..1000) {
        let (_, gt, ds) = scene(4, seed);
        let ts = run(&ds, &RunParams::simulation(Method::Cvpf, seed)).unwrap();
        let m = evaluate(&gt, &ts, &window()).unwrap();
        prop_assert_eq!(&m, &evaluate(&gt, &relabel(&ts, offset), &window()).unwrap());
        prop_assert!((0.0..=1.0).contains(&m.integrity));
        prop_assert!((0.0..=1.0).contains(&m.continuity));
        if let Some(p) = m.precision {
            prop_assert!((0.0..=1.5).contains(&p));
        }
    }

    #[test]
    fn tracks_csv_round_trip_preserves_metrics(seed in 0u64..1000) {
        let (_, gt, ds) = scene(3, seed);
        let ts = run(&ds, &RunParams::simulation(Method::Cskpf, seed)).unwrap();
        let mut buf = Vec::new();
        io::write_tracks_to(&mut buf, &ts).unwrap();
        let back = io::tracks_from_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), ts.len());
        let a = evaluate(&gt, &ts, &window()).unwrap();
        let b = evaluate(&gt, &back, &window()).unwrap();
        prop_assert_eq!(a.integrity, b.integrity);
        prop_assert_eq!(a.idsw_total, b.idsw_total);
        prop_assert!((a.precision.unwrap_or(0.0) - b.precision.unwrap_or(0.0)).abs() < 1e-9);
    }
}
