//! Pointwise kernels: the arctan-mollified Heaviside family and the
//! closed-form minimizers used by the splitting sub-problems.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::Vec2;

/// Guard added to `|A|` in the shrinkage direction.
pub const SHRINK_GUARD: f64 = 1e-6;

/// The mollified Heaviside `H_eps`, its derivative and second derivative,
/// for a validated width `eps > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mollifier {
    eps: f64,
}

impl Mollifier {
    pub fn new(eps: f64) -> Result<Self> {
        if eps > 0.0 && eps.is_finite() {
            Ok(Self { eps })
        } else {
            Err(Error::InvalidParameter {
                name: "eps",
                reason: format!("must be a positive finite number, got {eps}"),
            })
        }
    }

    #[inline]
    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `1/2 (1 + 2/pi atan(phi/eps))`.
    #[inline]
    pub fn heaviside(&self, phi: f64) -> f64 {
        0.5 * (1.0 + (2.0 / PI) * (phi / self.eps).atan())
    }

    /// `dH/dphi = (1/pi) eps / (eps^2 + phi^2)`.
    #[inline]
    pub fn dirac(&self, phi: f64) -> f64 {
        let e = self.eps;
        e / (PI * (e * e + phi * phi))
    }

    /// `d(dirac)/dphi = -(2/pi) eps phi / (eps^2 + phi^2)^2`.
    #[inline]
    pub fn dirac_prime(&self, phi: f64) -> f64 {
        let e = self.eps;
        let s = e * e + phi * phi;
        -(2.0 / PI) * e * phi / (s * s)
    }
}

pub fn heaviside_eps(phi: f64, eps: f64) -> Result<f64> {
    Ok(Mollifier::new(eps)?.heaviside(phi))
}

pub fn dirac_eps(phi: f64, eps: f64) -> Result<f64> {
    Ok(Mollifier::new(eps)?.dirac(phi))
}

pub fn dirac_eps_prime(phi: f64, eps: f64) -> Result<f64> {
    Ok(Mollifier::new(eps)?.dirac_prime(phi))
}

/// Generalized soft thresholding: `max(|a| - t, 0) a / (|a| + 1e-6)`.
///
/// Negative thresholds are treated as zero.
#[inline]
pub fn shrink_p(a: Vec2, threshold: f64) -> Vec2 {
    let t = threshold.max(0.0);
    let norm = a.norm();
    let scale = (norm - t).max(0.0) / (norm + SHRINK_GUARD);
    scale * a
}

/// `v / |v|`, with `0 / |0| = 0`.
#[inline]
pub fn normalize_unit(v: Vec2) -> Vec2 {
    let norm = v.norm();
    if norm > 0.0 {
        (1.0 / norm) * v
    } else {
        Vec2::ZERO
    }
}

/// Projection onto the closed unit disk, `v / max(1, |v|)`.
#[inline]
pub fn project_unit_ball(v: Vec2) -> Vec2 {
    let norm = v.norm();
    if norm > 1.0 {
        (1.0 / norm) * v
    } else {
        v
    }
}
