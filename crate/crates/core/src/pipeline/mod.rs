//! Image and landmark I/O, initial level sets, synthetic scenarios, contour
//! extraction, quality metrics, overlays and run traces.

mod contour;
mod init;
mod io;
mod metrics;
mod render;
mod synth;
mod trace;

use std::fs;
use std::ops::ControlFlow;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use contour::{extract_contour, shoelace_area, Contour};
pub use init::{init_phi, InitShape};
pub use io::{decode_image, encode_pgm, encode_png, load_image, save_image};
pub use metrics::{area, dice, hausdorff, mask_from_phi};
pub use render::{overlay_image, overlay_png, render_overlay};
pub use synth::{synth_scenario, Scenario, ScenarioKind, BROKEN_CIRCLE_ARC_DEG};
pub use trace::{export_trace, parse_trace_csv, trace_csv, trace_rows, TraceRow, TRACE_HEADER};

use crate::error::Result;
use crate::grid::ScalarField;
use crate::model::{LandmarkSet, ModelParams};
use crate::solver::{run_admm_observed, ConvergenceReport, SolverState};

/// Output of a full solver run.
#[derive(Debug, Clone)]
pub struct Segmentation {
    pub state: SolverState,
    pub report: ConvergenceReport,
    pub contour: Contour,
    pub mask: ScalarField,
}

impl Segmentation {
    fn from_run(state: SolverState, report: ConvergenceReport) -> Self {
        Segmentation {
            contour: extract_contour(&state.phi),
            mask: mask_from_phi(&state.phi),
            state,
            report,
        }
    }
}

pub fn segment(
    image: &ScalarField,
    landmarks: &LandmarkSet,
    init: &InitShape,
    params: &ModelParams,
) -> Result<Segmentation> {
    segment_observed(image, landmarks, init, params, |_, _| {
        ControlFlow::Continue(())
    })
}

/// [`segment`] with a per-iteration callback, as in
/// [`run_admm_observed`](crate::solver::run_admm_observed).
pub fn segment_observed(
    image: &ScalarField,
    landmarks: &LandmarkSet,
    init: &InitShape,
    params: &ModelParams,
    observer: impl FnMut(&SolverState, &ConvergenceReport) -> ControlFlow<()>,
) -> Result<Segmentation> {
    let (h, w) = image.dims();
    let phi0 = init_phi(init, h, w)?;
    let (state, report) = run_admm_observed(image, landmarks, &phi0, params, observer)?;
    Ok(Segmentation::from_run(state, report))
}

/// Largest `|phi|` over the landmark pixels; 0 without landmarks.
pub fn landmark_max_abs_phi(phi: &ScalarField, landmarks: &LandmarkSet) -> f64 {
    landmarks
        .points
        .iter()
        .map(|p| phi.get(p.row as usize, p.col as usize).abs())
        .fold(0.0, f64::max)
}

/// Largest distance from a landmark to the contour; 0 without landmarks.
pub fn landmark_max_distance(contour: &Contour, landmarks: &LandmarkSet) -> f64 {
    landmarks
        .points
        .iter()
        .map(|p| contour.distance_to(p.row as f64, p.col as f64))
        .fold(0.0, f64::max)
}

/// The `summary.json` written next to a run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mode: String,
    pub iterations: usize,
    pub converged: bool,
    pub final_metrics: Option<[f64; 6]>,
    pub final_energy: Option<f64>,
    pub c1: f64,
    pub c2: f64,
    pub contour_pieces: usize,
    pub closed_pieces: usize,
    pub landmark_count: usize,
    pub landmark_max_abs_phi: f64,
    pub landmark_max_distance: f64,
    pub dice: Option<f64>,
    pub params: ModelParams,
}

impl RunSummary {
    pub fn new(
        seg: &Segmentation,
        landmarks: &LandmarkSet,
        params: &ModelParams,
        truth: Option<&ScalarField>,
    ) -> Result<Self> {
        let dice = truth.map(|t| dice(&seg.mask, t)).transpose()?;
        Ok(RunSummary {
            mode: params.mode().to_string(),
            iterations: seg.report.iterations_run,
            converged: seg.report.converged,
            final_metrics: seg.report.last_metrics().map(|m| m.as_array()),
            final_energy: seg.report.final_energy(),
            c1: seg.state.means.c1,
            c2: seg.state.means.c2,
            contour_pieces: seg.contour.len(),
            closed_pieces: seg.contour.closed.iter().filter(|&&c| c).count(),
            landmark_count: landmarks.len(),
            landmark_max_abs_phi: landmark_max_abs_phi(&seg.state.phi, landmarks),
            landmark_max_distance: landmark_max_distance(&seg.contour, landmarks),
            dice,
            params: params.clone(),
        })
    }
}

/// File names written by [`write_run_outputs`].
pub const OUTPUT_FILES: [&str; 5] = [
    "mask.png",
    "contour.json",
    "trace.csv",
    "summary.json",
    "overlay.png",
];

/// Writes the artifacts of a run into `dir` (created if missing) and returns
/// the summary it wrote.
pub fn write_run_outputs(
    dir: impl AsRef<Path>,
    image: &ScalarField,
    landmarks: &LandmarkSet,
    params: &ModelParams,
    seg: &Segmentation,
    truth: Option<&ScalarField>,
) -> Result<RunSummary> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let summary = RunSummary::new(seg, landmarks, params, truth)?;
    save_image(&seg.mask, dir.join("mask.png"))?;
    fs::write(dir.join("contour.json"), seg.contour.to_json())?;
    export_trace(&seg.report, dir.join("trace.csv"))?;
    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    render_overlay(image, &seg.contour, landmarks, dir.join("overlay.png"))?;
    Ok(summary)
}
