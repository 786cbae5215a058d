//! Independent checks used by the test suites: finite-difference gradients,
//! the affine lower-bound model built from momentum, and the smoothness-gap
//! inequality for dual norms.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::solver::ConicProgram;
use crate::vector::{dot, norm2};

/// Directions sampled instead of coordinates above this dimension.
pub const FD_COORDINATE_LIMIT: usize = 50;
pub const FD_RANDOM_DIRECTIONS: usize = 20;

/// Largest relative deviation between `gradient` and central differences of
/// `value` at `point`, measured as `‖a − fd‖_∞ / max(‖fd‖_∞, 1e-6)` over
/// coordinates, or over 20 seeded random unit directions when `d > 50`.
pub fn fd_gradient_check<V, G>(mut value: V, mut gradient: G, point: &[f64], h: f64) -> f64
where
    V: FnMut(&[f64]) -> f64,
    G: FnMut(&[f64], &mut [f64]),
{
    let d = point.len();
    let mut grad = vec![0.0; d];
    gradient(point, &mut grad);
    let mut probe = point.to_vec();
    let mut central = |dir: &[f64], probe: &mut Vec<f64>| {
        for ((p, x), u) in probe.iter_mut().zip(point).zip(dir) {
            *p = x + h * u;
        }
        let up = value(probe);
        for ((p, x), u) in probe.iter_mut().zip(point).zip(dir) {
            *p = x - h * u;
        }
        let down = value(probe);
        (up - down) / (2.0 * h)
    };

    let mut analytic = Vec::new();
    let mut numeric = Vec::new();
    if d <= FD_COORDINATE_LIMIT {
        let mut e = vec![0.0; d];
        for i in 0..d {
            e[i] = 1.0;
            numeric.push(central(&e, &mut probe));
            analytic.push(grad[i]);
            e[i] = 0.0;
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..FD_RANDOM_DIRECTIONS {
            let mut u: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let nu = norm2(&u);
            u.iter_mut().for_each(|v| *v /= nu);
            numeric.push(central(&u, &mut probe));
            analytic.push(dot(&grad, &u));
        }
    }
    let scale = numeric.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-6);
    let dev = analytic
        .iter()
        .zip(&numeric)
        .fold(0.0f64, |m, (a, n)| m.max((a - n).abs()));
    dev / scale
}

/// Exact representation of the affine lower-bound model
/// `Φ_{k+1}(x) = (1 − δ_k) Φ_k(x) + δ_k [f(p_k) + ⟨∇f(p_k), x − p_k⟩]`
/// with `p_k = η_k x_k`. The linear part of `Φ_{k+1}` is the momentum vector
/// `g_k`, so only the constant part is stored.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhiTracker {
    pub alpha: f64,
}

impl PhiTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Folds in iteration `k`, given `δ_k`, `f(p_k)`, `∇f(p_k)` and `p_k`.
    pub fn update(&mut self, delta: f64, f_value: f64, grad: &[f64], point: &[f64]) {
        let tangent = f_value - dot(grad, point);
        self.alpha = (1.0 - delta) * self.alpha + delta * tangent;
    }

    /// `Φ(x) = alpha + ⟨g, x⟩`
    pub fn eval(&self, g: &[f64], x: &[f64]) -> f64 {
        self.alpha + dot(g, x)
    }

    /// `Φ_{k+1}(‖x*‖ v_k) = alpha + ‖x*‖⟨g_k, v_k⟩`, a lower bound on
    /// `f(x*)`.
    pub fn lower_bound(&self, g: &[f64], v: &[f64], xstar_norm: f64) -> f64 {
        self.alpha + xstar_norm * dot(g, v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessGap {
    /// `min [f(x) − f(y) − ⟨∇f(y), x − y⟩ − ‖∇f(y) − ∇f(x)‖_*² / 2L]`
    pub min_slack: f64,
    /// Magnitude of the terms at the minimizing pair, `1 + |f(x)| + |f(y)|`.
    pub scale: f64,
}

impl SmoothnessGap {
    pub fn relative(&self) -> f64 {
        self.min_slack / self.scale
    }
}

/// Samples `trials` Gaussian pairs `(x, y)` and reports the smallest slack
/// in `f(x) − f(y) ≥ ⟨∇f(y), x − y⟩ + ‖∇f(y) − ∇f(x)‖_*² / 2L`, with `L` the
/// program's smoothness constant and `‖·‖_*` the cone's dual norm.
pub fn smoothness_gap_check<F: Objective>(
    problem: &ConicProgram<F>,
    trials: usize,
    seed: u64,
) -> Result<SmoothnessGap> {
    let lipschitz = problem
        .smoothness
        .filter(|l| *l > 0.0)
        .ok_or(Error::InvalidConfig("smoothness constant required"))?;
    let d = problem.dim();
    let f = &problem.objective;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gx = vec![0.0; d];
    let mut gy = vec![0.0; d];
    let mut diff = vec![0.0; d];
    let mut worst = SmoothnessGap {
        min_slack: f64::INFINITY,
        scale: 1.0,
    };
    for _ in 0..trials {
        let x: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let y: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let (fx, fy) = (f.value(&x), f.value(&y));
        f.gradient(&x, &mut gx);
        f.gradient(&y, &mut gy);
        for ((di, a), b) in diff.iter_mut().zip(&x).zip(&y) {
            *di = a - b;
        }
        let linear = dot(&gy, &diff);
        for ((di, a), b) in diff.iter_mut().zip(&gy).zip(&gx) {
            *di = a - b;
        }
        let dn = problem.cone.dual_norm(&diff)?;
        let slack = fx - fy - linear - dn * dn / (2.0 * lipschitz);
        let scale = 1.0 + fx.abs() + fy.abs();
        if slack / scale < worst.relative() {
            worst = SmoothnessGap {
                min_slack: slack,
                scale,
            };
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::Cone;
    use crate::objective::{Quadratic, ScaledSquaredNorm};

    #[test]
    fn fd_exact_for_half_squared_norm() {
        let f = ScaledSquaredNorm::half(4);
        let x = [0.3, -1.2, 2.0, 0.7];
        let err = fd_gradient_check(|p| f.value(p), |p, g| f.gradient(p, g), &x, 1e-5);
        assert!(err <= 1e-7, "{err}");
    }

    #[test]
    fn fd_toy_gradient() {
        let f = Quadratic::toy();
        let mut g = [0.0; 2];
        f.gradient(&[2.0, 3.0], &mut g);
        assert_eq!(g, [2.0, 6.0]);
        let err = fd_gradient_check(|p| f.value(p), |p, g| f.gradient(p, g), &[2.0, 3.0], 1e-5);
        assert!(err <= 1e-6, "{err}");
    }

    #[test]
    fn fd_detects_scaled_gradient() {
        let f = Quadratic::toy();
        let err = fd_gradient_check(
            |p| f.value(p),
            |p, g| {
                f.gradient(p, g);
                g.iter_mut().for_each(|v| *v *= 2.0);
            },
            &[2.0, 3.0],
            1e-5,
        );
        assert!((err - 1.0).abs() < 1e-4, "{err}");
    }

    #[test]
    fn fd_random_directions_in_high_dimension() {
        let f = ScaledSquaredNorm::half(80);
        let x: Vec<f64> = (0..80).map(|i| (i as f64).sin()).collect();
        let err = fd_gradient_check(|p| f.value(p), |p, g| f.gradient(p, g), &x, 1e-5);
        assert!(err <= 1e-7, "{err}");
    }

    #[test]
    fn smoothness_gap_tight_for_scaled_norm() {
        let l = 3.0;
        let p = ConicProgram::new(
            ScaledSquaredNorm {
                dim: 3,
                scale: l / 2.0,
            },
            Cone::Orthant(3),
        )
        .unwrap()
        .with_smoothness(l);
        let gap = smoothness_gap_check(&p, 200, 1).unwrap();
        assert!(gap.relative().abs() <= 1e-12, "{gap:?}");
    }

    #[test]
    fn smoothness_gap_requires_constant() {
        let p = ConicProgram::new(Quadratic::toy(), Cone::Orthant(2)).unwrap();
        assert!(smoothness_gap_check(&p, 1, 0).is_err());
    }

    #[test]
    fn phi_tracker_is_exact_at_fixed_optimum() {
        // f(x) = ‖x − e1‖², x* = e1; start and stay at x* with g = ∇f(x*) = 0
        let mut t = PhiTracker::new();
        for k in 0..20 {
            let delta = 2.0 / (k as f64 + 2.0);
            t.update(delta, 0.0, &[0.0, 0.0], &[1.0, 0.0]);
            assert_eq!(t.lower_bound(&[0.0, 0.0], &[1.0, 0.0], 1.0), 0.0);
        }
    }
}
