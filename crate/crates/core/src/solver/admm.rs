use std::ops::ControlFlow;

use crate::error::{Error, Result};
use crate::grid::{divergence, gradient, ScalarField, Scheme, VectorField};
use crate::model::{energy_cvel, landmark_mask, region_means, LandmarkSet, ModelParams};
use crate::regularizers::normalize_unit;

use super::subproblems::{solve_m, solve_n, solve_p, solve_phi, solve_q, update_multipliers};
use super::{ConvergenceReport, SolverState};

/// Floor for the relative-change denominators.
const METRIC_FLOOR: f64 = 1e-12;

/// The stopping rule is not evaluated before this many outer iterations,
/// since the multipliers start at zero.
const WARMUP_ITERATIONS: usize = 2;

/// Relative changes between consecutive iterates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metrics {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub phi: f64,
    pub sigma: f64,
}

impl Metrics {
    pub fn as_array(&self) -> [f64; 6] {
        [self.t1, self.t2, self.t3, self.t4, self.phi, self.sigma]
    }

    pub fn all_below(&self, tol: f64) -> bool {
        self.as_array().iter().all(|&v| v <= tol)
    }
}

/// Initial iterate: `p = m = n` is the unit direction of the forward
/// gradient of `init_phi`, `q = div n`, multipliers zero.
pub fn init_state(
    f: &ScalarField,
    landmarks: &LandmarkSet,
    init_phi: &ScalarField,
    params: &ModelParams,
) -> Result<SolverState> {
    params.validate()?;
    f.check_dims(init_phi)?;
    let (h, w) = f.dims();
    landmarks.validate(h, w)?;
    let mollifier = params.mollifier()?;

    let p = gradient(init_phi, Scheme::Forward).map(normalize_unit);
    let q = divergence(&p);
    Ok(SolverState {
        phi: init_phi.clone(),
        m: p.clone(),
        n: p.clone(),
        p,
        q,
        lambda1: ScalarField::zeros(h, w),
        lambda2: VectorField::zeros(h, w),
        lambda3: VectorField::zeros(h, w),
        lambda4: ScalarField::zeros(h, w),
        means: region_means(f, init_phi, mollifier)?,
        outer_iter: 0,
    })
}

fn relative_l1(new: &ScalarField, old: &ScalarField) -> f64 {
    let diff: f64 = new
        .values()
        .iter()
        .zip(old.values())
        .map(|(a, b)| (a - b).abs())
        .sum();
    diff / old.l1_norm().max(METRIC_FLOOR)
}

fn relative_l1_vec(new: &VectorField, old: &VectorField) -> f64 {
    let diff = (&new.x1 - &old.x1).l1_norm() + (&new.x2 - &old.x2).l1_norm();
    diff / old.l1_norm().max(METRIC_FLOOR)
}

/// Relative L1 changes of the four multipliers and of `phi`, and the relative
/// change of the energy.
pub fn convergence_metrics(
    prev: &SolverState,
    state: &SolverState,
    prev_energy: f64,
    energy: f64,
) -> Metrics {
    Metrics {
        t1: relative_l1(&state.lambda1, &prev.lambda1),
        t2: relative_l1_vec(&state.lambda2, &prev.lambda2),
        t3: relative_l1_vec(&state.lambda3, &prev.lambda3),
        t4: relative_l1(&state.lambda4, &prev.lambda4),
        phi: relative_l1(&state.phi, &prev.phi),
        sigma: (energy - prev_energy).abs() / prev_energy.abs().max(METRIC_FLOOR),
    }
}

/// One outer iteration. Returns the new state, its metrics relative to
/// `state`, and the model energy of the new state.
pub fn step(
    state: &SolverState,
    f: &ScalarField,
    eta: &ScalarField,
    params: &ModelParams,
    prev_energy: f64,
) -> Result<(SolverState, Metrics, f64)> {
    let mollifier = params.mollifier()?;
    let mut next = state.clone();

    next.means = region_means(f, &state.phi, mollifier)?;
    next.phi = solve_phi(&next, f, eta, params, mollifier);
    next.p = solve_p(&next, params, mollifier);
    next.n = solve_n(&next, params);
    next.m = solve_m(&next, params);
    next.q = solve_q(&next, params, mollifier);
    update_multipliers(&mut next, params);
    next.outer_iter = state.outer_iter + 1;

    if let Some(field) = next.first_non_finite() {
        return Err(Error::NonFinite {
            field,
            iteration: next.outer_iter,
        });
    }

    let energy = energy_cvel(f, &next.phi, next.means, eta, params)?;
    let metrics = convergence_metrics(state, &next, prev_energy, energy);
    Ok((next, metrics, energy))
}

/// Runs the solver to convergence or `params.max_outer` iterations.
pub fn run_admm(
    f: &ScalarField,
    landmarks: &LandmarkSet,
    init_phi: &ScalarField,
    params: &ModelParams,
) -> Result<(SolverState, ConvergenceReport)> {
    run_admm_observed(f, landmarks, init_phi, params, |_, _| {
        ControlFlow::Continue(())
    })
}

/// [`run_admm`] with a callback after every outer iteration. Returning
/// `ControlFlow::Break` stops the run early with `converged = false`.
pub fn run_admm_observed(
    f: &ScalarField,
    landmarks: &LandmarkSet,
    init_phi: &ScalarField,
    params: &ModelParams,
    mut observer: impl FnMut(&SolverState, &ConvergenceReport) -> ControlFlow<()>,
) -> Result<(SolverState, ConvergenceReport)> {
    let mut state = init_state(f, landmarks, init_phi, params)?;
    let (h, w) = f.dims();
    let eta = landmark_mask(landmarks, h, w)?;
    let mut energy = energy_cvel(f, &state.phi, state.means, &eta, params)?;
    let mut report = ConvergenceReport::default();

    while state.outer_iter < params.max_outer {
        let (next, metrics, next_energy) = step(&state, f, &eta, params, energy)?;
        state = next;
        energy = next_energy;
        report.push(metrics, energy);

        if state.outer_iter > WARMUP_ITERATIONS && metrics.all_below(params.tol) {
            report.converged = true;
        }
        if observer(&state, &report).is_break() || report.converged {
            break;
        }
    }
    Ok((state, report))
}
