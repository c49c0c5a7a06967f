use std::ops::ControlFlow;

use cvel::model::landmark_mask;
use cvel::pipeline::{
    dice, encode_png, extract_contour, init_phi, mask_from_phi, overlay_png, segment,
    segment_observed, synth_scenario, trace_csv, Contour, InitShape, RunSummary,
};
use cvel::solver::{init_state, run_admm, run_cv_gradient_descent, step};
use cvel::{LandmarkSet, Mode, ModelParams, Preset};

fn cv_params() -> ModelParams {
    ModelParams::default()
        .with_preset(Preset::Ucla)
        .with_mode(Mode::Cv)
}

#[test]
fn fifty_steps_on_clean_disk_keep_the_disk() {
    let s = synth_scenario("disk", (64, 64), 0.0, 3).unwrap();
    let f = &s.image;
    let params = cv_params();
    let none = LandmarkSet::default();
    let eta = landmark_mask(&none, 64, 64).unwrap();
    let mut state = init_state(f, &none, &s.truth_sdf(), &params).unwrap();
    let mut energy = f64::INFINITY;
    for _ in 0..50 {
        let (next, _, e) = step(&state, f, &eta, &params, energy).unwrap();
        for k in 0..next.phi.len() {
            assert!(next.m.at(k).norm() <= 1.0 + 1e-12);
            let p = next.p.at(k).norm();
            assert!(p == 0.0 || (p - 1.0).abs() <= 1e-12);
        }
        state = next;
        energy = e;
    }
    let d = dice(&mask_from_phi(&state.phi), &s.truth_mask).unwrap();
    assert!(d >= 0.99, "dice {d}");
}

#[test]
fn gradient_descent_baseline_segments_noisy_disk() {
    let s = synth_scenario("disk", (64, 64), 0.02, 1).unwrap();
    let phi0 = init_phi(&InitShape::centered_circle(64, 64, 0.25), 64, 64).unwrap();
    let phi = run_cv_gradient_descent(&s.image, &phi0, &cv_params(), 0.1, 8000).unwrap();
    let d = dice(&mask_from_phi(&phi), &s.truth_mask).unwrap();
    assert!(d >= 0.98, "dice {d}");
}

#[test]
fn run_reports_one_trace_row_per_iteration() {
    let s = synth_scenario("disk", (64, 64), 0.02, 2).unwrap();
    let phi0 = init_phi(&InitShape::centered_circle(64, 64, 0.25), 64, 64).unwrap();
    let mut params = cv_params();
    params.max_outer = 12;
    let (state, report) = run_admm(&s.image, &LandmarkSet::default(), &phi0, &params).unwrap();
    assert_eq!(state.outer_iter, report.iterations_run);
    assert_eq!(report.t1.len(), report.iterations_run);
    assert_eq!(report.energy.len(), report.iterations_run);
    let csv = trace_csv(&report);
    assert_eq!(csv.lines().count(), report.iterations_run + 1);
}

#[test]
fn observer_break_stops_the_run() {
    let s = synth_scenario("disk", (64, 64), 0.02, 2).unwrap();
    let init = InitShape::centered_circle(64, 64, 0.25);
    let seg = segment_observed(&s.image, &LandmarkSet::default(), &init, &cv_params(), |st, _| {
        if st.outer_iter == 4 {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })
    .unwrap();
    assert_eq!(seg.report.iterations_run, 4);
    assert!(!seg.report.converged);
}

#[test]
fn out_of_bounds_landmark_is_rejected_before_running() {
    let s = synth_scenario("disk", (64, 64), 0.0, 0).unwrap();
    let lm = LandmarkSet::from_json(r#"[{"row": 3, "col": 70}]"#).unwrap();
    let err = segment(&s.image, &lm, &InitShape::centered_circle(64, 64, 0.25), &cv_params())
        .unwrap_err()
        .to_string();
    assert!(err.contains("70"), "{err}");
}

#[test]
fn summary_and_contour_round_trip_through_json() {
    let s = synth_scenario("broken_circle", (64, 64), 0.02, 4).unwrap();
    let mut params = ModelParams::default().with_preset(Preset::Circle).with_mode(Mode::Cvel);
    params.max_outer = 20;
    let init = InitShape::centered_circle(64, 64, 0.35);
    let seg = segment(&s.image, &s.suggested_landmarks, &init, &params).unwrap();

    let summary = RunSummary::new(&seg, &s.suggested_landmarks, &params, Some(&s.truth_mask)).unwrap();
    assert_eq!(summary.mode, "cvel");
    assert_eq!(summary.iterations, 20);
    assert_eq!(summary.landmark_count, s.suggested_landmarks.len());
    assert!(summary.dice.is_some_and(|d| (0.0..=1.0).contains(&d)));
    let text = serde_json::to_string(&summary).unwrap();
    let back: RunSummary = serde_json::from_str(&text).unwrap();
    assert_eq!(back, summary);

    let contour = Contour::from_json(&seg.contour.to_json()).unwrap();
    assert_eq!(contour, extract_contour(&seg.state.phi));

    let png = overlay_png(&s.image, &seg.contour, &s.suggested_landmarks).unwrap();
    assert_eq!(&png[1..4], b"PNG");
    assert_eq!(&encode_png(&seg.mask).unwrap()[1..4], b"PNG");
}

#[test]
fn identical_runs_are_bitwise_identical() {
    let s = synth_scenario("broken_circle", (64, 64), 0.02, 9).unwrap();
    let mut params = ModelParams::default().with_preset(Preset::Circle).with_mode(Mode::Cvel);
    params.max_outer = 15;
    let init = InitShape::centered_circle(64, 64, 0.35);
    let a = segment(&s.image, &s.suggested_landmarks, &init, &params).unwrap();
    let b = segment(&s.image, &s.suggested_landmarks, &init, &params).unwrap();
    assert_eq!(trace_csv(&a.report), trace_csv(&b.report));
    assert_eq!(a.state.phi, b.state.phi);
}

#[test]
fn run_outputs_are_written_and_readable() {
    use cvel::pipeline::{load_image, parse_trace_csv, write_run_outputs, OUTPUT_FILES};
    let s = synth_scenario("disk", (64, 64), 0.02, 5).unwrap();
    let mut params = cv_params();
    params.max_outer = 5;
    let lm = LandmarkSet::default();
    let seg = segment(&s.image, &lm, &InitShape::centered_circle(64, 64, 0.25), &params).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nested/out");
    let summary = write_run_outputs(&out, &s.image, &lm, &params, &seg, Some(&s.truth_mask)).unwrap();
    for name in OUTPUT_FILES {
        assert!(out.join(name).is_file(), "{name}");
    }
    assert_eq!(load_image(out.join("mask.png")).unwrap(), seg.mask);
    let rows = parse_trace_csv(&std::fs::read_to_string(out.join("trace.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 5);
    let text = std::fs::read_to_string(out.join("summary.json")).unwrap();
    assert_eq!(serde_json::from_str::<RunSummary>(&text).unwrap(), summary);
}
