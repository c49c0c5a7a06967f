use crate::grid::{divergence, gradient, ScalarField, Scheme, Vec2, VectorField};
use crate::model::{q_field, ModelParams};
use crate::regularizers::{normalize_unit, project_unit_ball, shrink_p, Mollifier};

use super::SolverState;

/// Boundary treatment of one axis of the Laplacian in [`gauss_seidel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Border {
    /// Replicate ghosts, `-D^T D` for the forward difference `D`.
    Replicate,
    /// `-D D^T`: zero ghosts around indices `0..n-1`, and the last index is
    /// decoupled. This is the axis operator seen by a component through
    /// `grad div`.
    Staggered,
}

impl Border {
    /// Adds the neighbours of index `k` along an axis of length `n` to
    /// `(sum, count)`. `at(k')` reads the neighbour.
    fn accumulate(self, k: usize, n: usize, at: impl Fn(usize) -> f64, acc: &mut (f64, f64)) {
        match self {
            Border::Replicate => {
                if k > 0 {
                    acc.0 += at(k - 1);
                    acc.1 += 1.0;
                }
                if k + 1 < n {
                    acc.0 += at(k + 1);
                    acc.1 += 1.0;
                }
            }
            Border::Staggered => {
                if k + 1 >= n {
                    return;
                }
                acc.1 += 2.0;
                if k > 0 {
                    acc.0 += at(k - 1);
                }
                if k + 2 < n {
                    acc.0 += at(k + 1);
                }
            }
        }
    }
}

/// Lexicographic Gauss-Seidel sweeps for `(diag - coupling * Lap) u = -source`,
/// with the five-point Laplacian closed per axis by `rows` and `cols`.
fn gauss_seidel(
    u: &mut ScalarField,
    diag: impl Fn(usize) -> f64,
    coupling: f64,
    source: &ScalarField,
    sweeps: usize,
    (rows, cols): (Border, Border),
) {
    let (h, w) = u.dims();
    for _ in 0..sweeps {
        for i in 0..h {
            for j in 0..w {
                let k = i * w + j;
                let vals = u.values();
                let mut acc = (0.0, 0.0);
                rows.accumulate(i, h, |r| vals[r * w + j], &mut acc);
                cols.accumulate(j, w, |c| vals[i * w + c], &mut acc);
                let denom = diag(k) + coupling * acc.1;
                if denom > 0.0 {
                    u.values_mut()[k] = (coupling * acc.0 - source.values()[k]) / denom;
                }
            }
        }
    }
}

/// Source term of the level-set equation:
/// `Q delta(phi) + gamma (a + b q^2) |p| delta'(phi) + div lambda2 + gamma2 div p`,
/// all evaluated at the previous iterate.
pub(crate) fn phi_source(
    state: &SolverState,
    f: &ScalarField,
    params: &ModelParams,
    mollifier: Mollifier,
) -> ScalarField {
    let q_data = q_field(f, state.means, params);
    let div_l2 = divergence(&state.lambda2);
    let div_p = divergence(&state.p);
    let (h, w) = state.dims();
    let mut out = ScalarField::zeros(h, w);
    for k in 0..out.len() {
        let phi = state.phi.values()[k];
        let q = state.q.values()[k];
        let p_norm = state.p.at(k).norm();
        out.values_mut()[k] = q_data.values()[k] * mollifier.dirac(phi)
            + params.gamma * (params.a + params.b * q * q) * p_norm * mollifier.dirac_prime(phi)
            + div_l2.values()[k]
            + params.gamma2 * div_p.values()[k];
    }
    out
}

/// Relaxes `(mu eta - gamma2 Lap) phi = -F` with `sweeps_phi` Gauss-Seidel
/// sweeps, starting from the current level set.
pub fn solve_phi(
    state: &SolverState,
    f: &ScalarField,
    eta: &ScalarField,
    params: &ModelParams,
    mollifier: Mollifier,
) -> ScalarField {
    let source = phi_source(state, f, params, mollifier);
    let mut phi = state.phi.clone();
    let mu = params.mu;
    let eta = eta.values();
    gauss_seidel(
        &mut phi,
        |k| mu * eta[k],
        params.gamma2,
        &source,
        params.sweeps_phi,
        (Border::Replicate, Border::Replicate),
    );
    phi
}

/// Outcome of the pointwise `p` update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PUpdate {
    /// Shrinkage result before normalization.
    pub shrunk: Vec2,
    /// The new `p`, unit or zero.
    pub p: Vec2,
}

/// Inputs of the pointwise `p` update at one pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelP {
    pub grad_phi: Vec2,
    pub m: Vec2,
    pub lambda1: f64,
    pub lambda2: Vec2,
    pub q: f64,
    pub phi: f64,
}

impl PixelP {
    /// Minimizes `gamma (a + b q^2) delta(phi) |p| + (lambda1 + gamma1)(|p| - p.m) +
    /// lambda2.p + gamma2/2 |p - grad phi|^2` by shrinkage, then normalizes.
    pub fn update(&self, params: &ModelParams, mollifier: Mollifier) -> PUpdate {
        let weight = self.lambda1 + params.gamma1;
        let shift = (1.0 / params.gamma2) * (weight * self.m - self.lambda2);
        let a = self.grad_phi + shift;
        let b = params.gamma * (params.a + params.b * self.q * self.q) * mollifier.dirac(self.phi);
        let threshold = ((weight + b) / params.gamma2).max(0.0);
        let shrunk = shrink_p(a, threshold);
        PUpdate {
            shrunk,
            p: normalize_unit(shrunk),
        }
    }
}

/// Pointwise shrinkage-and-normalize update of `p` from the new level set
/// (`state.phi`) and the previous `m`, `q`, `lambda1`, `lambda2`.
pub fn solve_p(state: &SolverState, params: &ModelParams, mollifier: Mollifier) -> VectorField {
    let grad = gradient(&state.phi, Scheme::Forward);
    let (h, w) = state.dims();
    let mut p = VectorField::zeros(h, w);
    for k in 0..p.len() {
        let pixel = PixelP {
            grad_phi: grad.at(k),
            m: state.m.at(k),
            lambda1: state.lambda1.values()[k],
            lambda2: state.lambda2.at(k),
            q: state.q.values()[k],
            phi: state.phi.values()[k],
        };
        p.put(k, pixel.update(params, mollifier).p);
    }
    p
}

/// Gauss-Seidel relaxation of the component-wise screened Poisson problem
/// `gamma3 n - gamma4 Lap n = -(lambda3 + gamma4 grad q + grad lambda4 - gamma3 m)`.
///
/// Each component's Laplacian uses the divergence's border closure along its
/// own axis and replicate ghosts across it, so `-Lap = -grad div + curl^T curl`
/// holds exactly and the explicit `grad q` term cannot amplify border modes.
pub fn solve_n(state: &SolverState, params: &ModelParams) -> VectorField {
    let grad_q = gradient(&state.q, Scheme::Forward);
    let grad_l4 = gradient(&state.lambda4, Scheme::Forward);
    let (h, w) = state.dims();
    let mut source = VectorField::zeros(h, w);
    for k in 0..source.len() {
        let v = state.lambda3.at(k) + params.gamma4 * grad_q.at(k) + grad_l4.at(k)
            - params.gamma3 * state.m.at(k);
        source.put(k, v);
    }
    let mut n = state.n.clone();
    let g3 = params.gamma3;
    let g4 = params.gamma4;
    let sweeps = params.sweeps_n;
    gauss_seidel(
        &mut n.x1,
        |_| g3,
        g4,
        &source.x1,
        sweeps,
        (Border::Staggered, Border::Replicate),
    );
    gauss_seidel(
        &mut n.x2,
        |_| g3,
        g4,
        &source.x2,
        sweeps,
        (Border::Replicate, Border::Staggered),
    );
    n
}

/// `m = P(n + ((lambda1 + gamma1) p + lambda3) / gamma3)` with `P` the
/// projection onto the unit disk.
pub fn solve_m(state: &SolverState, params: &ModelParams) -> VectorField {
    let (h, w) = state.dims();
    let mut m = VectorField::zeros(h, w);
    for k in 0..m.len() {
        let weight = state.lambda1.values()[k] + params.gamma1;
        let tilde =
            state.n.at(k) + (1.0 / params.gamma3) * (weight * state.p.at(k) + state.lambda3.at(k));
        m.put(k, project_unit_ball(tilde));
    }
    m
}

/// `q = (gamma4 div n - lambda4) / (gamma4 + 2 gamma b |p| delta(phi))`.
pub fn solve_q(state: &SolverState, params: &ModelParams, mollifier: Mollifier) -> ScalarField {
    let div_n = divergence(&state.n);
    let (h, w) = state.dims();
    let mut q = ScalarField::zeros(h, w);
    for k in 0..q.len() {
        let curv_weight = 2.0
            * params.gamma
            * params.b
            * state.p.at(k).norm()
            * mollifier.dirac(state.phi.values()[k]);
        // (gamma4 d - lambda4) / (gamma4 + w), arranged so that w = lambda4 = 0
        // reproduces d exactly
        let d = div_n.values()[k];
        q.values_mut()[k] =
            d - (curv_weight * d + state.lambda4.values()[k]) / (params.gamma4 + curv_weight);
    }
    q
}

/// Dual ascent on the four constraint residuals.
pub fn update_multipliers(state: &mut SolverState, params: &ModelParams) {
    let grad_phi = gradient(&state.phi, Scheme::Forward);
    let div_n = divergence(&state.n);
    for k in 0..state.phi.len() {
        let p = state.p.at(k);
        let m = state.m.at(k);
        let n = state.n.at(k);

        state.lambda1.values_mut()[k] += params.gamma1 * (p.norm() - p.dot(m));
        let l2 = state.lambda2.at(k) + params.gamma2 * (p - grad_phi.at(k));
        state.lambda2.put(k, l2);
        let l3 = state.lambda3.at(k) + params.gamma3 * (n - m);
        state.lambda3.put(k, l3);
        state.lambda4.values_mut()[k] += params.gamma4 * (state.q.values()[k] - div_n.values()[k]);
    }
}
