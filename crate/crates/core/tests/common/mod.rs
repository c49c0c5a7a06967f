//! Independent reference implementations used by the oracle tests and the
//! acceptance suite.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cvel::solver::{init_state, PixelP, SolverState};
use cvel::regularizers::Mollifier;
use cvel::{LandmarkSet, ModelParams, ScalarField, Vec2, VectorField};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Forward difference along rows (`axis = 0`) or columns, zero on the last
/// index, as a dense `(h w) x (h w)` matrix in row-major pixel order.
pub fn forward_matrix(h: usize, w: usize, axis: usize) -> DMatrix<f64> {
    let n = h * w;
    let mut d = DMatrix::zeros(n, n);
    for i in 0..h {
        for j in 0..w {
            let k = i * w + j;
            let next = if axis == 0 {
                (i + 1 < h).then(|| (i + 1) * w + j)
            } else {
                (j + 1 < w).then(|| i * w + j + 1)
            };
            if let Some(k2) = next {
                d[(k, k2)] = 1.0;
                d[(k, k)] = -1.0;
            }
        }
    }
    d
}

pub fn to_vector(f: &ScalarField) -> DVector<f64> {
    DVector::from_column_slice(f.values())
}

pub fn from_vector(v: &DVector<f64>, h: usize, w: usize) -> ScalarField {
    ScalarField::from_vec(h, w, v.iter().copied().collect()).unwrap()
}

/// `-(D1^T v1 + D2^T v2)`.
pub fn divergence_dense(v: &VectorField) -> DVector<f64> {
    let (h, w) = v.dims();
    let d1 = forward_matrix(h, w, 0);
    let d2 = forward_matrix(h, w, 1);
    -(d1.transpose() * to_vector(&v.x1) + d2.transpose() * to_vector(&v.x2))
}

/// The level-set source term assembled from scratch.
pub fn phi_source_reference(
    state: &SolverState,
    f: &ScalarField,
    params: &ModelParams,
) -> DVector<f64> {
    let moll = Mollifier::new(params.eps).unwrap();
    let div_l2 = divergence_dense(&state.lambda2);
    let div_p = divergence_dense(&state.p);
    let (c1, c2) = (state.means.c1, state.means.c2);
    DVector::from_fn(state.phi.len(), |k, _| {
        let fv = f.values()[k];
        let phi = state.phi.values()[k];
        let q = state.q.values()[k];
        let big_q = params.alpha1 * (c1 - fv).powi(2) - params.alpha2 * (c2 - fv).powi(2);
        let p_norm = state.p.x1.values()[k].hypot(state.p.x2.values()[k]);
        big_q * moll.dirac(phi)
            + params.gamma * (params.a + params.b * q * q) * p_norm * moll.dirac_prime(phi)
            + div_l2[k]
            + params.gamma2 * div_p[k]
    })
}

/// Dense solve of `(mu eta - gamma2 Lap) phi = -F` with the Neumann
/// Laplacian `-(D1^T D1 + D2^T D2)`.
pub fn phi_dense(
    state: &SolverState,
    f: &ScalarField,
    eta: &ScalarField,
    params: &ModelParams,
) -> ScalarField {
    let (h, w) = state.dims();
    let d1 = forward_matrix(h, w, 0);
    let d2 = forward_matrix(h, w, 1);
    let lap = -(d1.transpose() * &d1 + d2.transpose() * &d2);
    let a = DMatrix::from_diagonal(&(to_vector(eta) * params.mu)) - lap * params.gamma2;
    let rhs = -phi_source_reference(state, f, params);
    from_vector(&a.lu().solve(&rhs).expect("nonsingular"), h, w)
}

/// Dense solve of the `n` system. Component `c` sees `-D_c D_c^T` along its
/// own axis and `-D^T D` across it.
pub fn n_dense(state: &SolverState, params: &ModelParams) -> VectorField {
    let (h, w) = state.dims();
    let d1 = forward_matrix(h, w, 0);
    let d2 = forward_matrix(h, w, 1);
    let grad = |v: &DVector<f64>| (&d1 * v, &d2 * v);
    let (gq1, gq2) = grad(&to_vector(&state.q));
    let (gl1, gl2) = grad(&to_vector(&state.lambda4));
    let f1 = to_vector(&state.lambda3.x1) + gq1 * params.gamma4 + gl1
        - to_vector(&state.m.x1) * params.gamma3;
    let f2 = to_vector(&state.lambda3.x2) + gq2 * params.gamma4 + gl2
        - to_vector(&state.m.x2) * params.gamma3;
    let lap1 = -(&d1 * d1.transpose() + d2.transpose() * &d2);
    let lap2 = -(d1.transpose() * &d1 + &d2 * d2.transpose());
    let eye = DMatrix::<f64>::identity(h * w, h * w);
    let a1 = &eye * params.gamma3 - lap1 * params.gamma4;
    let a2 = &eye * params.gamma3 - lap2 * params.gamma4;
    let n1 = a1.lu().solve(&(-f1)).expect("nonsingular");
    let n2 = a2.lu().solve(&(-f2)).expect("nonsingular");
    VectorField::new(from_vector(&n1, h, w), from_vector(&n2, h, w)).unwrap()
}

fn random_field(rng: &mut ChaCha8Rng, h: usize, w: usize, lo: f64, hi: f64) -> ScalarField {
    ScalarField::from_fn(h, w, |_, _| rng.random_range(lo..hi))
}

fn random_vectors(rng: &mut ChaCha8Rng, h: usize, w: usize, lo: f64, hi: f64) -> VectorField {
    VectorField::new(random_field(rng, h, w, lo, hi), random_field(rng, h, w, lo, hi)).unwrap()
}

fn random_unit_ball(rng: &mut ChaCha8Rng, h: usize, w: usize) -> VectorField {
    VectorField::from_fn(h, w, |_, _| {
        let r: f64 = rng.random_range(0.0..1.0);
        let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        Vec2::new(r * t.cos(), r * t.sin())
    })
}

fn random_unit_or_zero(rng: &mut ChaCha8Rng, h: usize, w: usize) -> VectorField {
    VectorField::from_fn(h, w, |_, _| {
        if rng.random_bool(0.1) {
            Vec2::ZERO
        } else {
            let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            Vec2::new(t.cos(), t.sin())
        }
    })
}

/// Image, mask and a state with every field randomized.
pub fn random_system(
    seed: u64,
    h: usize,
    w: usize,
    params: &ModelParams,
) -> (ScalarField, ScalarField, SolverState) {
    let mut rng = rng(seed);
    let f = random_field(&mut rng, h, w, 0.0, 1.0);
    let phi = random_field(&mut rng, h, w, -3.0, 3.0);
    let mut state = init_state(&f, &LandmarkSet::default(), &phi, params).unwrap();
    state.p = random_unit_or_zero(&mut rng, h, w);
    state.m = random_unit_ball(&mut rng, h, w);
    state.n = random_vectors(&mut rng, h, w, -1.0, 1.0);
    state.q = random_field(&mut rng, h, w, -1.0, 1.0);
    state.lambda1 = random_field(&mut rng, h, w, 0.0, 1.0);
    state.lambda2 = random_vectors(&mut rng, h, w, -1.0, 1.0);
    state.lambda3 = random_vectors(&mut rng, h, w, -1.0, 1.0);
    state.lambda4 = random_field(&mut rng, h, w, -1.0, 1.0);
    let mut eta = ScalarField::zeros(h, w);
    let mut set = 0;
    while set < 4.min(h * w) {
        let k = rng.random_range(0..h * w);
        if eta.values()[k] == 0.0 {
            eta.values_mut()[k] = 1.0;
            set += 1;
        }
    }
    (f, eta, state)
}

pub fn max_abs_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn random_pixel_p(rng: &mut ChaCha8Rng) -> PixelP {
    let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let r: f64 = rng.random_range(0.0..1.0);
    PixelP {
        grad_phi: Vec2::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)),
        m: Vec2::new(r * t.cos(), r * t.sin()),
        lambda1: rng.random_range(0.0..1.0),
        lambda2: Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
        q: rng.random_range(-1.0..1.0),
        phi: rng.random_range(-3.0..3.0),
    }
}

/// Pointwise objective of the `p` sub-problem.
pub fn p_objective(px: &PixelP, params: &ModelParams, p: Vec2) -> f64 {
    let moll = Mollifier::new(params.eps).unwrap();
    let norm = p.x1.hypot(p.x2);
    let dx = p.x1 - px.grad_phi.x1;
    let dy = p.x2 - px.grad_phi.x2;
    params.gamma * (params.a + params.b * px.q * px.q) * moll.dirac(px.phi) * norm
        + (px.lambda1 + params.gamma1) * (norm - (p.x1 * px.m.x1 + p.x2 * px.m.x2))
        + (px.lambda2.x1 * p.x1 + px.lambda2.x2 * p.x2)
        + params.gamma2 / 2.0 * (dx * dx + dy * dy)
}

/// Grid scan of [`p_objective`] over `[-4, 4]^2` with step 0.005.
pub fn p_brute_force(px: &PixelP, params: &ModelParams) -> Vec2 {
    let steps = 1600;
    let mut best = (f64::INFINITY, Vec2::ZERO);
    for a in 0..=steps {
        let x = -4.0 + a as f64 * 0.005;
        for b in 0..=steps {
            let y = -4.0 + b as f64 * 0.005;
            let p = Vec2::new(x, y);
            let e = p_objective(px, params, p);
            if e < best.0 {
                best = (e, p);
            }
        }
    }
    best.1
}

/// Pointwise `q` instance: `(div n, lambda4, |p|, phi)`.
#[derive(Debug, Clone, Copy)]
pub struct PixelQ {
    pub div_n: f64,
    pub lambda4: f64,
    pub p_norm: f64,
    pub phi: f64,
}

pub fn q_objective(px: &PixelQ, params: &ModelParams, q: f64) -> f64 {
    let moll = Mollifier::new(params.eps).unwrap();
    let r = q - px.div_n;
    params.gamma * params.b * q * q * px.p_norm * moll.dirac(px.phi)
        + px.lambda4 * r
        + params.gamma4 / 2.0 * r * r
}

/// 1-D scan over `[-5, 5]` with step 1e-4.
pub fn q_brute_force(px: &PixelQ, params: &ModelParams) -> f64 {
    let steps = 100_000;
    let mut best = (f64::INFINITY, 0.0);
    for s in 0..=steps {
        let q = -5.0 + s as f64 * 1e-4;
        let e = q_objective(px, params, q);
        if e < best.0 {
            best = (e, q);
        }
    }
    best.1
}

/// Pointwise `m` objective:
/// `-(lambda1 + gamma1) p.m - lambda3.m + gamma3/2 |n - m|^2` on the unit disk.
pub fn m_objective(
    n: Vec2,
    p: Vec2,
    lambda1: f64,
    lambda3: Vec2,
    params: &ModelParams,
    m: Vec2,
) -> f64 {
    let wgt = lambda1 + params.gamma1;
    let (dx, dy) = (n.x1 - m.x1, n.x2 - m.x2);
    -wgt * (p.x1 * m.x1 + p.x2 * m.x2) - (lambda3.x1 * m.x1 + lambda3.x2 * m.x2)
        + params.gamma3 / 2.0 * (dx * dx + dy * dy)
}

/// Closed-form minimizer of [`m_objective`], written independently.
pub fn m_reference(n: Vec2, p: Vec2, lambda1: f64, lambda3: Vec2, params: &ModelParams) -> Vec2 {
    let wgt = lambda1 + params.gamma1;
    let x = n.x1 + (wgt * p.x1 + lambda3.x1) / params.gamma3;
    let y = n.x2 + (wgt * p.x2 + lambda3.x2) / params.gamma3;
    let s = x.hypot(y).max(1.0);
    Vec2::new(x / s, y / s)
}

/// Lowest [`m_objective`] over a polar grid of the closed unit disk.
pub fn m_scan_min(n: Vec2, p: Vec2, lambda1: f64, lambda3: Vec2, params: &ModelParams) -> f64 {
    let mut best = f64::INFINITY;
    for ri in 0..=200 {
        let r = ri as f64 / 200.0;
        for ti in 0..720 {
            let t = ti as f64 / 720.0 * std::f64::consts::TAU;
            let m = Vec2::new(r * t.cos(), r * t.sin());
            best = best.min(m_objective(n, p, lambda1, lambda3, params, m));
        }
    }
    best
}
