//! Objective oracles.
//!
//! An [`Objective`] supplies `f` and `∇f` over a flat ambient vector. When the
//! restriction of `f` to a line is a known quadratic, implementors can also
//! return its coefficients so the solver's one-dimensional searches become
//! closed-form.

use alloc::vec;
use alloc::vec::Vec;

use crate::vector::{axpy, dot};

/// Coefficients of `s ↦ a·s² + b·s + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic1d {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Quadratic1d {
    pub fn eval(&self, s: f64) -> f64 {
        (self.a * s + self.b) * s + self.c
    }
}

pub trait Objective {
    /// Ambient dimension.
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64], out: &mut [f64]);

    /// Exact restriction of `f` to `s ↦ base + s·dir`, if known in closed form.
    fn restriction(&self, _base: &[f64], _dir: &[f64]) -> Option<Quadratic1d> {
        None
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        (**self).gradient(x, out)
    }
    fn restriction(&self, base: &[f64], dir: &[f64]) -> Option<Quadratic1d> {
        (**self).restriction(base, dir)
    }
}

/// `f(x) = ½ xᵀQx − bᵀx + c` with symmetric `Q` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    dim: usize,
    q: Vec<f64>,
    b: Vec<f64>,
    c: f64,
}

impl Quadratic {
    pub fn new(q: Vec<f64>, b: Vec<f64>, c: f64) -> Self {
        let dim = b.len();
        assert_eq!(q.len(), dim * dim, "Q must be dim × dim");
        Self { dim, q, b, c }
    }

    /// The two-dimensional example `(x − 1)² + y²` over the nonnegative orthant.
    pub fn toy() -> Self {
        Self::new(vec![2.0, 0.0, 0.0, 2.0], vec![2.0, 0.0], 1.0)
    }

    pub fn hessian(&self) -> &[f64] {
        &self.q
    }

    pub fn linear(&self) -> &[f64] {
        &self.b
    }

    fn apply_q(&self, x: &[f64], out: &mut [f64]) {
        for (row, o) in self.q.chunks_exact(self.dim).zip(out.iter_mut()) {
            *o = dot(row, x);
        }
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut qx = vec![0.0; self.dim];
        self.apply_q(x, &mut qx);
        0.5 * dot(x, &qx) - dot(&self.b, x) + self.c
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        self.apply_q(x, out);
        axpy(-1.0, &self.b, out);
    }

    fn restriction(&self, base: &[f64], dir: &[f64]) -> Option<Quadratic1d> {
        let mut qd = vec![0.0; self.dim];
        self.apply_q(dir, &mut qd);
        let mut grad = vec![0.0; self.dim];
        self.gradient(base, &mut grad);
        Some(Quadratic1d {
            a: 0.5 * dot(dir, &qd),
            b: dot(&grad, dir),
            c: self.value(base),
        })
    }
}

/// `f(y) = scale·‖y‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledSquaredNorm {
    pub dim: usize,
    pub scale: f64,
}

impl ScaledSquaredNorm {
    /// `½‖y‖²`
    pub fn half(dim: usize) -> Self {
        Self { dim, scale: 0.5 }
    }
}

impl Objective for ScaledSquaredNorm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.scale * dot(x, x)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for (o, xi) in out.iter_mut().zip(x) {
            *o = 2.0 * self.scale * xi;
        }
    }

    fn restriction(&self, base: &[f64], dir: &[f64]) -> Option<Quadratic1d> {
        Some(Quadratic1d {
            a: self.scale * dot(dir, dir),
            b: 2.0 * self.scale * dot(base, dir),
            c: self.scale * dot(base, base),
        })
    }
}

/// Linear change of variables `u ↦ f(D u)` with a positive diagonal `D`.
///
/// A positive diagonal scaling maps the nonnegative orthant onto itself, so
/// the wrapped problem keeps the same cone. This is the only preconditioning
/// hook offered; choosing `D` is left to the caller.
#[derive(Debug, Clone)]
pub struct DiagonalScaling<F> {
    inner: F,
    diag: Vec<f64>,
}

impl<F: Objective> DiagonalScaling<F> {
    pub fn new(inner: F, diag: Vec<f64>) -> Self {
        assert_eq!(inner.dim(), diag.len());
        assert!(diag.iter().all(|&d| d > 0.0), "scaling must be positive");
        Self { inner, diag }
    }

    /// Maps a point of the scaled problem back to the original variables.
    pub fn unscale(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.diag).map(|(a, d)| a * d).collect()
    }
}

impl<F: Objective> Objective for DiagonalScaling<F> {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn value(&self, u: &[f64]) -> f64 {
        self.inner.value(&self.unscale(u))
    }

    fn gradient(&self, u: &[f64], out: &mut [f64]) {
        self.inner.gradient(&self.unscale(u), out);
        for (o, d) in out.iter_mut().zip(&self.diag) {
            *o *= d;
        }
    }

    fn restriction(&self, base: &[f64], dir: &[f64]) -> Option<Quadratic1d> {
        self.inner
            .restriction(&self.unscale(base), &self.unscale(dir))
    }
}
