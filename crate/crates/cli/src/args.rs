use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use cvel::pipeline::InitShape;
use cvel::{Mode, ModelParams, Preset};

#[derive(Debug, Parser)]
#[command(name = "cvel", version, about = "Chan-Vese segmentation with elastica and landmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment one image and write mask, contour, trace and summary.
    Segment(SegmentArgs),
    /// Run all four model variants with shared init and landmarks.
    Compare(CompareArgs),
    /// Generate a synthetic scenario (image, truth mask, landmarks).
    Synth(SynthArgs),
    /// Explicit gradient-descent Chan-Vese evolution.
    Baseline(BaselineArgs),
    /// Check a trace.csv for well-formedness and convergence.
    ValidateTrace(TraceArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Grayscale PGM (P5) or PNG.
    #[arg(long)]
    pub image: PathBuf,
    /// Ground-truth mask; pixels >= 0.5 are foreground.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// JSON array of {"row", "col"} objects.
    #[arg(long)]
    pub landmarks: Option<PathBuf>,
    /// Chebyshev dilation radius of each landmark.
    #[arg(long, default_value_t = 1)]
    pub landmark_radius: usize,
    /// `circle:row,col,radius` or `box:r0,c0,r1,c1`; defaults to a centred
    /// circle of a quarter of the smaller side.
    #[arg(long)]
    pub init: Option<InitShape>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    /// Named parameter set: ucla, triangle or circle.
    #[arg(long)]
    pub preset: Option<Preset>,
    /// Landmark penalty.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Elastica length coefficient.
    #[arg(long)]
    pub a: Option<f64>,
    /// Elastica curvature coefficient.
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Mollifier width.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub gamma1: Option<f64>,
    #[arg(long)]
    pub gamma2: Option<f64>,
    #[arg(long)]
    pub gamma3: Option<f64>,
    #[arg(long)]
    pub gamma4: Option<f64>,
    #[arg(long)]
    pub alpha1: Option<f64>,
    #[arg(long)]
    pub alpha2: Option<f64>,
    /// Stopping tolerance on the relative changes.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Maximum outer iterations.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Gauss-Seidel sweeps for both inner solves.
    #[arg(long)]
    pub sweeps: Option<usize>,
    /// Gauss-Seidel sweeps for the level-set solve; overrides --sweeps.
    #[arg(long)]
    pub sweeps_phi: Option<usize>,
    /// Gauss-Seidel sweeps for the normal-field solve; overrides --sweeps.
    #[arg(long)]
    pub sweeps_n: Option<usize>,
}

impl ParamArgs {
    /// Defaults, then the preset, then explicit values.
    pub fn build(&self) -> Result<ModelParams> {
        let mut p = ModelParams::default();
        if let Some(preset) = self.preset {
            p = p.with_preset(preset);
        }
        let scalars = [
            (&mut p.mu, self.mu),
            (&mut p.a, self.a),
            (&mut p.b, self.b),
            (&mut p.gamma, self.gamma),
            (&mut p.eps, self.eps),
            (&mut p.gamma1, self.gamma1),
            (&mut p.gamma2, self.gamma2),
            (&mut p.gamma3, self.gamma3),
            (&mut p.gamma4, self.gamma4),
            (&mut p.alpha1, self.alpha1),
            (&mut p.alpha2, self.alpha2),
            (&mut p.tol, self.tol),
        ];
        for (slot, value) in scalars {
            if let Some(v) = value {
                *slot = v;
            }
        }
        if let Some(n) = self.max_iters {
            p.max_outer = n;
        }
        if let Some(n) = self.sweeps {
            p.sweeps_phi = n;
            p.sweeps_n = n;
        }
        if let Some(n) = self.sweeps_phi {
            p.sweeps_phi = n;
        }
        if let Some(n) = self.sweeps_n {
            p.sweeps_n = n;
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// cv, cvl, cve or cvel. Cannot be combined with --mu or --b.
    #[arg(long, conflicts_with_all = ["mu", "b"])]
    pub mode: Option<Mode>,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// disk, broken_circle, broken_triangle or broken_letters.
    #[arg(long)]
    pub name: String,
    /// HEIGHTxWIDTH, at least 64x64.
    #[arg(long, default_value = "128x128", value_parser = parse_dims)]
    pub dims: (usize, usize),
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Standard deviation of the additive Gaussian noise.
    #[arg(long, default_value_t = 0.02)]
    pub sigma: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Time step.
    #[arg(long, default_value_t = 0.1)]
    pub dt: f64,
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    pub tol: f64,
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected HEIGHTxWIDTH, got `{s}`"))?;
    let parse = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("bad dimension `{t}` in `{s}`"))
    };
    Ok((parse(h)?, parse(w)?))
}
