//! `cvel`: batch segmentation, mode comparison, scenario generation and the
//! gradient-descent baseline.
//!
//! Exit codes: 0 on success (a run that did not converge still succeeds),
//! 1 on runtime errors, 2 on usage errors.

mod args;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use cvel::pipeline::{
    dice, extract_contour, init_phi, landmark_max_abs_phi, load_image, mask_from_phi,
    parse_trace_csv, render_overlay, save_image, segment, synth_scenario, write_run_outputs,
    InitShape, RunSummary,
};
use cvel::solver::run_cv_gradient_descent;
use cvel::{LandmarkSet, Mode, ScalarField};
use serde_json::json;

use args::{BaselineArgs, Cli, Command, CompareArgs, InputArgs, SegmentArgs, SynthArgs, TraceArgs};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code().clamp(0, 255) as u8);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Segment(a) => run_segment(a),
        Command::Compare(a) => run_compare(a),
        Command::Synth(a) => run_synth(a),
        Command::Baseline(a) => run_baseline(a),
        Command::ValidateTrace(a) => run_validate(a),
    }
}

struct Inputs {
    image: ScalarField,
    truth: Option<ScalarField>,
    landmarks: LandmarkSet,
    init: InitShape,
}

fn load_inputs(a: &InputArgs) -> Result<Inputs> {
    let image = load_image(&a.image).with_context(|| format!("reading {}", a.image.display()))?;
    let truth = a
        .truth
        .as_ref()
        .map(|p| {
            let t = load_image(p).with_context(|| format!("reading {}", p.display()))?;
            image.check_dims(&t).context("truth mask")?;
            Ok::<_, anyhow::Error>(t.map(|v| if v >= 0.5 { 1.0 } else { 0.0 }))
        })
        .transpose()?;
    let landmarks = match &a.landmarks {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            LandmarkSet::from_json(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => LandmarkSet::default(),
    }
    .with_radius(a.landmark_radius);
    let (h, w) = image.dims();
    landmarks.validate(h, w)?;
    let init = a
        .init
        .unwrap_or_else(|| InitShape::centered_circle(h, w, 0.25));
    Ok(Inputs {
        image,
        truth,
        landmarks,
        init,
    })
}

fn report_line(s: &RunSummary) -> String {
    let mut line = format!(
        "mode={} iterations={} converged={} pieces={} landmark_max_distance={:.3}",
        s.mode, s.iterations, s.converged, s.contour_pieces, s.landmark_max_distance
    );
    if let Some(d) = s.dice {
        let _ = write!(line, " dice={d:.4}");
    }
    line
}

fn run_segment(a: SegmentArgs) -> Result<()> {
    let inputs = load_inputs(&a.input)?;
    let mut params = a.params.build()?;
    if let Some(mode) = a.mode {
        params = params.with_mode(mode);
    }
    params.validate()?;
    let seg = segment(&inputs.image, &inputs.landmarks, &inputs.init, &params)?;
    let summary = write_run_outputs(
        &a.input.out,
        &inputs.image,
        &inputs.landmarks,
        &params,
        &seg,
        inputs.truth.as_ref(),
    )?;
    println!("{}", report_line(&summary));
    Ok(())
}

fn run_compare(a: CompareArgs) -> Result<()> {
    let inputs = load_inputs(&a.input)?;
    let base = a.params.build()?;
    let mut table = String::from("mode,iterations,dice,landmark_max_abs_phi\n");
    for mode in Mode::ALL {
        let params = base.clone().with_mode(mode);
        params.validate()?;
        let seg = segment(&inputs.image, &inputs.landmarks, &inputs.init, &params)?;
        let summary = write_run_outputs(
            a.input.out.join(mode.as_str()),
            &inputs.image,
            &inputs.landmarks,
            &params,
            &seg,
            inputs.truth.as_ref(),
        )?;
        let dice = summary.dice.map(|d| d.to_string()).unwrap_or_default();
        let _ = writeln!(
            table,
            "{mode},{},{dice},{}",
            summary.iterations,
            landmark_max_abs_phi(&seg.state.phi, &inputs.landmarks)
        );
        println!("{}", report_line(&summary));
    }
    fs::create_dir_all(&a.input.out)?;
    fs::write(a.input.out.join("compare.csv"), &table)?;
    print!("{table}");
    Ok(())
}

fn run_synth(a: SynthArgs) -> Result<()> {
    if !(a.sigma >= 0.0) {
        bail!("--sigma must be nonnegative");
    }
    let s = synth_scenario(&a.name, a.dims, a.sigma, a.seed)?;
    fs::create_dir_all(&a.out)?;
    save_image(&s.image, a.out.join("image.pgm"))?;
    save_image(&s.truth_mask, a.out.join("truth.pgm"))?;
    fs::write(a.out.join("landmarks.json"), s.suggested_landmarks.to_json())?;
    println!(
        "{}: {}x{} sigma={} seed={} landmarks={}",
        s.name,
        a.dims.0,
        a.dims.1,
        a.sigma,
        a.seed,
        s.suggested_landmarks.len()
    );
    Ok(())
}

fn run_baseline(a: BaselineArgs) -> Result<()> {
    let inputs = load_inputs(&a.input)?;
    let params = a.params.build()?.with_mode(Mode::Cv);
    params.validate()?;
    let (h, w) = inputs.image.dims();
    let phi0 = init_phi(&inputs.init, h, w)?;
    let phi = run_cv_gradient_descent(&inputs.image, &phi0, &params, a.dt, a.steps)?;
    let mask = mask_from_phi(&phi);
    let contour = extract_contour(&phi);
    let dice = inputs
        .truth
        .as_ref()
        .map(|t| dice(&mask, t))
        .transpose()?;

    let out = &a.input.out;
    fs::create_dir_all(out)?;
    save_image(&mask, out.join("mask.png"))?;
    fs::write(out.join("contour.json"), contour.to_json())?;
    render_overlay(&inputs.image, &contour, &inputs.landmarks, out.join("overlay.png"))?;
    let summary = json!({
        "mode": "baseline",
        "dt": a.dt,
        "steps": a.steps,
        "contour_pieces": contour.len(),
        "closed_pieces": contour.closed.iter().filter(|&&c| c).count(),
        "dice": dice,
        "params": params,
    });
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    let mut line = format!("baseline steps={} pieces={}", a.steps, contour.len());
    if let Some(d) = dice {
        let _ = write!(line, " dice={d:.4}");
    }
    println!("{line}");
    Ok(())
}

fn run_validate(a: TraceArgs) -> Result<()> {
    let text = read(&a.trace)?;
    let rows = parse_trace_csv(&text).with_context(|| format!("parsing {}", a.trace.display()))?;
    if let Some(bad) = rows
        .iter()
        .find(|r| r.metrics().iter().any(|v| !v.is_finite()) || !r.energy.is_finite())
    {
        bail!("non-finite value at iteration {}", bad.iter);
    }
    let within = rows
        .last()
        .is_some_and(|r| r.metrics().iter().all(|&v| v <= a.tol));
    println!(
        "rows={} finite=true final_within_tol={within} tol={}",
        rows.len(),
        a.tol
    );
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}
