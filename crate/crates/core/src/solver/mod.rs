//! Alternating-direction solver for the CVEL energy and the classic
//! gradient-descent Chan-Vese baseline.
//!
//! Each outer iteration updates, in order: the region means, `phi`, `p`, `n`,
//! `m`, `q`, then the four multipliers. The level set and `n` are relaxed with
//! a fixed number of lexicographic Gauss-Seidel sweeps; the other variables
//! have closed-form pointwise updates.

mod admm;
mod baseline;
mod subproblems;

pub use admm::{convergence_metrics, init_state, run_admm, run_admm_observed, step, Metrics};
pub use baseline::run_cv_gradient_descent;
pub use subproblems::{
    solve_m, solve_n, solve_p, solve_phi, solve_q, update_multipliers, PUpdate, PixelP,
};

use serde::{Deserialize, Serialize};

use crate::grid::{ScalarField, VectorField};
use crate::model::RegionMeans;

/// The full iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub phi: ScalarField,
    /// Stands in for `grad phi`; unit or zero per pixel.
    pub p: VectorField,
    /// Unit direction of `p`, kept inside the unit disk.
    pub m: VectorField,
    /// Splitting copy of `m`.
    pub n: VectorField,
    /// Curvature surrogate, `div n`.
    pub q: ScalarField,
    pub lambda1: ScalarField,
    pub lambda2: VectorField,
    pub lambda3: VectorField,
    pub lambda4: ScalarField,
    pub means: RegionMeans,
    pub outer_iter: usize,
}

impl SolverState {
    pub fn dims(&self) -> (usize, usize) {
        self.phi.dims()
    }

    pub fn is_finite(&self) -> bool {
        self.phi.is_finite()
            && self.p.is_finite()
            && self.m.is_finite()
            && self.n.is_finite()
            && self.q.is_finite()
            && self.lambda1.is_finite()
            && self.lambda2.is_finite()
            && self.lambda3.is_finite()
            && self.lambda4.is_finite()
            && self.means.c1.is_finite()
            && self.means.c2.is_finite()
    }

    /// Name of the first field holding a NaN or infinity.
    pub(crate) fn first_non_finite(&self) -> Option<&'static str> {
        let checks: [(&'static str, bool); 9] = [
            ("phi", self.phi.is_finite()),
            ("p", self.p.is_finite()),
            ("m", self.m.is_finite()),
            ("n", self.n.is_finite()),
            ("q", self.q.is_finite()),
            ("lambda1", self.lambda1.is_finite()),
            ("lambda2", self.lambda2.is_finite()),
            ("lambda3", self.lambda3.is_finite()),
            ("lambda4", self.lambda4.is_finite()),
        ];
        checks.into_iter().find(|(_, ok)| !ok).map(|(name, _)| name)
    }
}

/// Per-iteration traces of the stopping metrics and the energy.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub struct ConvergenceReport {
    #[serde(rename = "T1")]
    pub t1: Vec<f64>,
    #[serde(rename = "T2")]
    pub t2: Vec<f64>,
    #[serde(rename = "T3")]
    pub t3: Vec<f64>,
    #[serde(rename = "T4")]
    pub t4: Vec<f64>,
    #[serde(rename = "Phi")]
    pub phi: Vec<f64>,
    #[serde(rename = "Sigma")]
    pub sigma: Vec<f64>,
    pub energy: Vec<f64>,
    pub converged: bool,
    pub iterations_run: usize,
}

impl ConvergenceReport {
    pub fn push(&mut self, metrics: Metrics, energy: f64) {
        self.t1.push(metrics.t1);
        self.t2.push(metrics.t2);
        self.t3.push(metrics.t3);
        self.t4.push(metrics.t4);
        self.phi.push(metrics.phi);
        self.sigma.push(metrics.sigma);
        self.energy.push(energy);
        self.iterations_run = self.energy.len();
    }

    pub fn len(&self) -> usize {
        self.energy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energy.is_empty()
    }

    /// Metrics recorded at 0-based iteration index `k`.
    pub fn metrics(&self, k: usize) -> Metrics {
        Metrics {
            t1: self.t1[k],
            t2: self.t2[k],
            t3: self.t3[k],
            t4: self.t4[k],
            phi: self.phi[k],
            sigma: self.sigma[k],
        }
    }

    pub fn last_metrics(&self) -> Option<Metrics> {
        (!self.is_empty()).then(|| self.metrics(self.len() - 1))
    }

    pub fn final_energy(&self) -> Option<f64> {
        self.energy.last().copied()
    }
}
