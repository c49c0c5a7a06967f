//! The CVEL energy, its data attachment and the landmark mask.
//!
//! One parameter set covers the whole model family: CV is `mu = 0, b = 0`,
//! CVL adds landmarks (`mu > 0`), CVE adds the elastica (`b > 0`), and CVEL
//! uses both.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{curvature, gradient, magnitude, ScalarField, Scheme};
use crate::regularizers::Mollifier;

/// Denominators below this are treated as a vanished region.
pub const REGION_FLOOR: f64 = 1e-12;

/// Every scalar governing the energy and the splitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    /// Fidelity weight inside.
    pub alpha1: f64,
    /// Fidelity weight outside.
    pub alpha2: f64,
    /// Length / elastica weight.
    pub gamma: f64,
    /// Elastica length coefficient.
    pub a: f64,
    /// Elastica curvature coefficient.
    pub b: f64,
    /// Landmark penalty.
    pub mu: f64,
    /// Mollifier width, in pixels.
    pub eps: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub gamma4: f64,
    /// Relative-change tolerance for the stopping rule.
    pub tol: f64,
    pub max_outer: usize,
    /// Gauss-Seidel sweeps for the level-set update per outer iteration.
    pub sweeps_phi: usize,
    /// Gauss-Seidel sweeps for the `n` update per outer iteration.
    pub sweeps_n: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            alpha1: 0.5,
            alpha2: 0.5,
            gamma: 1.0,
            a: 1.0,
            b: 10.0,
            mu: 50.0,
            eps: 1.0,
            gamma1: 1.0,
            gamma2: 3.0,
            gamma3: 5.0,
            gamma4: 10.0,
            tol: 0.01,
            max_outer: 500,
            sweeps_phi: 10,
            sweeps_n: 10,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        fn nonneg(name: &'static str, v: f64) -> Result<()> {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be nonnegative and finite, got {v}"),
                })
            }
        }
        fn pos(name: &'static str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                })
            }
        }
        nonneg("alpha1", self.alpha1)?;
        nonneg("alpha2", self.alpha2)?;
        pos("gamma", self.gamma)?;
        nonneg("a", self.a)?;
        nonneg("b", self.b)?;
        nonneg("mu", self.mu)?;
        pos("eps", self.eps)?;
        pos("gamma1", self.gamma1)?;
        pos("gamma2", self.gamma2)?;
        pos("gamma3", self.gamma3)?;
        pos("gamma4", self.gamma4)?;
        pos("tol", self.tol)?;
        for (name, v) in [("sweeps_phi", self.sweeps_phi), ("sweeps_n", self.sweeps_n)] {
            if v == 0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "must be at least 1".into(),
                });
            }
        }
        Ok(())
    }

    pub fn mollifier(&self) -> Result<Mollifier> {
        Mollifier::new(self.eps)
    }

    /// The model variant implied by `mu` and `b`.
    pub fn mode(&self) -> Mode {
        match (self.mu > 0.0, self.b > 0.0) {
            (false, false) => Mode::Cv,
            (true, false) => Mode::Cvl,
            (false, true) => Mode::Cve,
            (true, true) => Mode::Cvel,
        }
    }

    /// Zeroes the terms `mode` switches off. Terms it keeps are left as set.
    pub fn with_mode(mut self, mode: Mode) -> Self {
        match mode {
            Mode::Cv => {
                self.mu = 0.0;
                self.b = 0.0;
            }
            Mode::Cvl => self.b = 0.0,
            Mode::Cve => self.mu = 0.0,
            Mode::Cvel => {}
        }
        self
    }

    pub fn with_preset(mut self, preset: Preset) -> Self {
        let (g1, g2, g3, g4, a1, a2) = preset.values();
        self.gamma1 = g1;
        self.gamma2 = g2;
        self.gamma3 = g3;
        self.gamma4 = g4;
        self.alpha1 = a1;
        self.alpha2 = a2;
        self
    }
}

/// Model variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Cv,
    Cvl,
    Cve,
    Cvel,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Cv, Mode::Cvl, Mode::Cve, Mode::Cvel];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Cv => "cv",
            Mode::Cvl => "cvl",
            Mode::Cve => "cve",
            Mode::Cvel => "cvel",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cv" => Ok(Mode::Cv),
            "cvl" => Ok(Mode::Cvl),
            "cve" => Ok(Mode::Cve),
            "cvel" => Ok(Mode::Cvel),
            other => Err(Error::Parse(format!("unknown mode `{other}`"))),
        }
    }
}

/// Penalty and fidelity sets from the reference experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Broken letters.
    Ucla,
    /// Triangle with a missing corner.
    Triangle,
    /// Broken circle.
    Circle,
}

impl Preset {
    /// `(gamma1, gamma2, gamma3, gamma4, alpha1, alpha2)`.
    pub fn values(self) -> (f64, f64, f64, f64, f64, f64) {
        match self {
            Preset::Ucla => (1.0, 3.0, 5.0, 10.0, 0.5, 0.5),
            Preset::Triangle => (1.0, 3.0, 5.0, 10.0, 1.1, 0.9),
            Preset::Circle => (7.0, 20.0, 5.0, 2.0, 1.1, 0.9),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ucla" => Ok(Preset::Ucla),
            "triangle" => Ok(Preset::Triangle),
            "circle" => Ok(Preset::Circle),
            other => Err(Error::Parse(format!("unknown preset `{other}`"))),
        }
    }
}

/// A landmark pixel. Coordinates are signed so that out-of-range input can
/// be reported rather than silently wrapped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Landmark {
    pub row: i64,
    pub col: i64,
}

impl Landmark {
    pub fn new(row: i64, col: i64) -> Self {
        Self { row, col }
    }
}

/// User-chosen pixels the zero level set must pass through.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LandmarkSet {
    pub points: Vec<Landmark>,
    /// Chebyshev radius each point is dilated by in the mask.
    pub dilation_radius: usize,
}

impl Default for LandmarkSet {
    fn default() -> Self {
        Self {
            points: Vec::new(),
            dilation_radius: 1,
        }
    }
}

impl LandmarkSet {
    pub fn new(points: Vec<Landmark>) -> Self {
        Self {
            points,
            ..Self::default()
        }
    }

    pub fn with_radius(mut self, radius: usize) -> Self {
        self.dilation_radius = radius;
        self
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Fails on the first point outside a `height x width` image.
    pub fn validate(&self, height: usize, width: usize) -> Result<()> {
        for p in &self.points {
            if p.row < 0 || p.col < 0 || p.row >= height as i64 || p.col >= width as i64 {
                return Err(Error::LandmarkOutOfBounds {
                    row: p.row,
                    col: p.col,
                    height,
                    width,
                });
            }
        }
        Ok(())
    }

    /// Parses the landmark file format: a JSON array of `{"row", "col"}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let points: Vec<Landmark> = serde_json::from_str(text)?;
        Ok(Self::new(points))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.points).expect("landmarks serialize")
    }
}

/// The binary landmark mask: 1 on every point dilated by the Chebyshev
/// radius, 0 elsewhere.
pub fn landmark_mask(landmarks: &LandmarkSet, height: usize, width: usize) -> Result<ScalarField> {
    landmarks.validate(height, width)?;
    let mut eta = ScalarField::zeros(height, width);
    let r = landmarks.dilation_radius as i64;
    for p in &landmarks.points {
        for i in (p.row - r).max(0)..=(p.row + r).min(height as i64 - 1) {
            for j in (p.col - r).max(0)..=(p.col + r).min(width as i64 - 1) {
                eta.set(i as usize, j as usize, 1.0);
            }
        }
    }
    Ok(eta)
}

/// Average intensities inside (`c1`) and outside (`c2`) the zero level set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionMeans {
    pub c1: f64,
    pub c2: f64,
}

/// Region means weighted by `H_eps(phi)` and `1 - H_eps(phi)`.
///
/// A region whose total weight falls below [`REGION_FLOOR`] takes the global
/// mean of `f`.
pub fn region_means(
    f: &ScalarField,
    phi: &ScalarField,
    mollifier: Mollifier,
) -> Result<RegionMeans> {
    f.check_dims(phi)?;
    let (mut num_in, mut den_in, mut num_out, mut den_out) = (0.0, 0.0, 0.0, 0.0);
    for (&fv, &pv) in f.values().iter().zip(phi.values()) {
        let h = mollifier.heaviside(pv);
        num_in += fv * h;
        den_in += h;
        num_out += fv * (1.0 - h);
        den_out += 1.0 - h;
    }
    let global = f.mean();
    let c1 = if den_in < REGION_FLOOR {
        global
    } else {
        num_in / den_in
    };
    let c2 = if den_out < REGION_FLOOR {
        global
    } else {
        num_out / den_out
    };
    Ok(RegionMeans { c1, c2 })
}

/// `Q = alpha1 (c1 - f)^2 - alpha2 (c2 - f)^2`.
pub fn q_field(f: &ScalarField, means: RegionMeans, params: &ModelParams) -> ScalarField {
    let (a1, a2) = (params.alpha1, params.alpha2);
    f.map(|v| a1 * (means.c1 - v).powi(2) - a2 * (means.c2 - v).powi(2))
}

/// The model energy
/// `sum Q H(phi) + mu/2 sum eta phi^2 + gamma sum (a + b kappa^2) |grad H(phi)|`.
///
/// `kappa` is the central-difference curvature of `phi`; `grad H` uses forward
/// differences.
pub fn energy_cvel(
    f: &ScalarField,
    phi: &ScalarField,
    means: RegionMeans,
    eta: &ScalarField,
    params: &ModelParams,
) -> Result<f64> {
    f.check_dims(phi)?;
    f.check_dims(eta)?;
    let mollifier = params.mollifier()?;
    let q = q_field(f, means, params);
    let h = phi.map(|v| mollifier.heaviside(v));
    let grad_h = magnitude(&gradient(&h, Scheme::Forward));

    let fidelity: f64 = q.values().iter().zip(h.values()).map(|(q, h)| q * h).sum();
    let landmark: f64 = eta
        .values()
        .iter()
        .zip(phi.values())
        .map(|(e, p)| e * p * p)
        .sum::<f64>()
        * 0.5
        * params.mu;
    let regularity = if params.b == 0.0 {
        params.gamma * params.a * grad_h.sum()
    } else {
        let kappa = curvature(phi);
        params.gamma
            * kappa
                .values()
                .iter()
                .zip(grad_h.values())
                .map(|(k, g)| (params.a + params.b * k * k) * g)
                .sum::<f64>()
    };
    Ok(fidelity + landmark + regularity)
}
