//! Discrete 2-D fields and finite-difference operators.
//!
//! Index convention: `i` is the row (first spatial axis, `x1`), `j` is the
//! column (`x2`); storage is row-major. Pixel spacing is 1.
//!
//! Out-of-range neighbours replicate the border value, so forward and
//! backward differences vanish across the image edge (homogeneous Neumann).
//! [`divergence`] is the negative adjoint of the forward gradient, which makes
//! `divergence(gradient(f, Forward)) == laplacian(f)` hold exactly.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A rectangular grid of real values, one per pixel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ScalarField {
    /// A field of `height` rows and `width` columns filled with zeros.
    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        assert!(height > 0 && width > 0, "fields must be nonempty");
        Self {
            width,
            height,
            values: vec![value; width * height],
        }
    }

    /// Builds a field from row-major values.
    pub fn from_vec(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidParameter {
                name: "dims",
                reason: format!("{height}x{width} is empty"),
            });
        }
        if values.len() != width * height {
            return Err(Error::InvalidParameter {
                name: "values",
                reason: format!(
                    "expected {} values for a {height}x{width} field, got {}",
                    width * height,
                    values.len()
                ),
            });
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    /// Builds a field by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(height > 0 && width > 0, "fields must be nonempty");
        let mut values = Vec::with_capacity(width * height);
        for i in 0..height {
            for j in 0..width {
                values.push(f(i, j));
            }
        }
        Self {
            width,
            height,
            values,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    /// `(rows, cols)`.
    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.width + j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.width + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.values[i * self.width + j] = value;
    }

    /// Value at `(i, j)` with out-of-range indices clamped to the border.
    #[inline]
    pub fn get_clamped(&self, i: isize, j: isize) -> f64 {
        let i = i.clamp(0, self.height as isize - 1) as usize;
        let j = j.clamp(0, self.width as isize - 1) as usize;
        self.get(i, j)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields of equal dimensions.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_same_dims(self, other);
        Self {
            width: self.width,
            height: self.height,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn same_dims(&self, other: &Self) -> bool {
        self.dims() == other.dims()
    }

    /// Returns an error unless `other` has the same dimensions.
    pub fn check_dims(&self, other: &Self) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: other.dims(),
            })
        }
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.values.len() as f64
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

fn assert_same_dims(a: &ScalarField, b: &ScalarField) {
    assert!(
        a.same_dims(b),
        "field dimensions {:?} and {:?} do not match",
        a.dims(),
        b.dims()
    );
}

/// A 2-vector, `x1` along rows and `x2` along columns.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x1: f64,
    pub x2: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x1: 0.0, x2: 0.0 };

    #[inline]
    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    #[inline]
    pub fn dot(self, other: Vec2) -> f64 {
        self.x1 * other.x1 + self.x2 * other.x2
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x1 + rhs.x1, self.x2 + rhs.x2)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x1 - rhs.x1, self.x2 - rhs.x2)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    #[inline]
    fn mul(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self * rhs.x1, self * rhs.x2)
    }
}

/// A 2-vector per pixel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorField {
    pub x1: ScalarField,
    pub x2: ScalarField,
}

impl VectorField {
    pub fn new(x1: ScalarField, x2: ScalarField) -> Result<Self> {
        x1.check_dims(&x2)?;
        Ok(Self { x1, x2 })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            x1: ScalarField::zeros(height, width),
            x2: ScalarField::zeros(height, width),
        }
    }

    pub fn filled(height: usize, width: usize, v: Vec2) -> Self {
        Self {
            x1: ScalarField::filled(height, width, v.x1),
            x2: ScalarField::filled(height, width, v.x2),
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> Vec2) -> Self {
        let mut out = Self::zeros(height, width);
        for i in 0..height {
            for j in 0..width {
                out.set(i, j, f(i, j));
            }
        }
        out
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        self.x1.dims()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.x1.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.x1.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(self.x1.get(i, j), self.x2.get(i, j))
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Vec2) {
        self.x1.set(i, j, v.x1);
        self.x2.set(i, j, v.x2);
    }

    /// Value at flat index `k`.
    #[inline]
    pub fn at(&self, k: usize) -> Vec2 {
        Vec2::new(self.x1.values()[k], self.x2.values()[k])
    }

    #[inline]
    pub fn put(&mut self, k: usize, v: Vec2) {
        self.x1.values_mut()[k] = v.x1;
        self.x2.values_mut()[k] = v.x2;
    }

    pub fn map(&self, f: impl Fn(Vec2) -> Vec2) -> Self {
        let (h, w) = self.dims();
        let mut out = Self::zeros(h, w);
        for k in 0..self.len() {
            out.put(k, f(self.at(k)));
        }
        out
    }

    /// Sum over pixels of `|x1| + |x2|`.
    pub fn l1_norm(&self) -> f64 {
        self.x1.l1_norm() + self.x2.l1_norm()
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }
}

/// Finite-difference scheme for [`gradient`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Forward,
    Backward,
    Central,
}

/// Discrete gradient with replicated borders.
pub fn gradient(f: &ScalarField, scheme: Scheme) -> VectorField {
    let (h, w) = f.dims();
    let mut g = VectorField::zeros(h, w);
    for i in 0..h {
        let (ip, im) = ((i + 1).min(h - 1), i.saturating_sub(1));
        for j in 0..w {
            let (jp, jm) = ((j + 1).min(w - 1), j.saturating_sub(1));
            let c = f.get(i, j);
            let v = match scheme {
                Scheme::Forward => Vec2::new(f.get(ip, j) - c, f.get(i, jp) - c),
                Scheme::Backward => Vec2::new(c - f.get(im, j), c - f.get(i, jm)),
                Scheme::Central => Vec2::new(
                    0.5 * (f.get(ip, j) - f.get(im, j)),
                    0.5 * (f.get(i, jp) - f.get(i, jm)),
                ),
            };
            g.set(i, j, v);
        }
    }
    g
}

/// Backward-difference divergence, the negative adjoint of
/// `gradient(_, Forward)`.
///
/// Flux through the image edge is zero: the ghost value below the first row
/// is 0 and the last row's own component is dropped, matching a forward
/// gradient whose last row vanishes.
pub fn divergence(v: &VectorField) -> ScalarField {
    let (h, w) = v.dims();
    let mut out = ScalarField::zeros(h, w);
    for i in 0..h {
        for j in 0..w {
            let d1 = flux(&v.x1, i, h, |k| (k, j));
            let d2 = flux(&v.x2, j, w, |k| (i, k));
            out.set(i, j, d1 + d2);
        }
    }
    out
}

#[inline]
fn flux(f: &ScalarField, k: usize, n: usize, at: impl Fn(usize) -> (usize, usize)) -> f64 {
    let value = |k| {
        let (i, j) = at(k);
        f.get(i, j)
    };
    let here = if k + 1 < n { value(k) } else { 0.0 };
    let before = if k > 0 { value(k - 1) } else { 0.0 };
    here - before
}

/// Five-point Laplacian with replicated borders.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let (h, w) = f.dims();
    let mut out = ScalarField::zeros(h, w);
    for i in 0..h {
        let (ip, im) = ((i + 1).min(h - 1), i.saturating_sub(1));
        for j in 0..w {
            let (jp, jm) = ((j + 1).min(w - 1), j.saturating_sub(1));
            let v = f.get(im, j) + f.get(i, jm) + f.get(ip, j) + f.get(i, jp) - 4.0 * f.get(i, j);
            out.set(i, j, v);
        }
    }
    out
}

/// Pointwise Euclidean dot product.
pub fn dot(u: &VectorField, v: &VectorField) -> ScalarField {
    assert_eq!(u.dims(), v.dims(), "vector field dimensions differ");
    let (h, w) = u.dims();
    let mut out = ScalarField::zeros(h, w);
    for k in 0..u.len() {
        out.values_mut()[k] = u.at(k).dot(v.at(k));
    }
    out
}

/// Pointwise Euclidean norm.
pub fn magnitude(v: &VectorField) -> ScalarField {
    let (h, w) = v.dims();
    let mut out = ScalarField::zeros(h, w);
    for k in 0..v.len() {
        out.values_mut()[k] = v.at(k).norm();
    }
    out
}

/// Mean curvature `div(grad phi / (|grad phi| + 1e-6))` using central
/// differences for the normal field.
pub fn curvature(phi: &ScalarField) -> ScalarField {
    let normal = gradient(phi, Scheme::Central).map(|g| (1.0 / (g.norm() + 1e-6)) * g);
    divergence(&normal)
}
