//! Minimum eigenpair of a symmetric operator by the Lanczos process.
//!
//! The operator is only touched through matrix-vector products. Every Lanczos
//! vector is fully reorthogonalized against the stored basis (twice), which is
//! affordable at the sizes this crate targets and keeps Ritz values free of
//! ghost copies. The smallest eigenpair of the tridiagonal projection is
//! obtained by Sturm-sequence bisection plus inverse iteration, so each
//! convergence check costs `O(j)` for a `j`-step basis.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::vector::{axpy, dot, norm2, scale};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosConfig {
    /// Upper bound on the Krylov dimension; clamped to the operator size.
    pub max_iters: usize,
    /// Relative residual `‖Aq − λq‖ / ‖A‖_est` accepted as converged.
    pub residual_tol: f64,
    /// Seed of the Gaussian start vector.
    pub seed: u64,
}

impl LanczosConfig {
    /// `max_iters = min(n, 200)`, `residual_tol = 1e-8`, seed 0.
    pub fn for_dim(n: usize) -> Self {
        Self {
            max_iters: n.clamp(1, 200),
            residual_tol: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigPair {
    pub value: f64,
    /// Unit-norm eigenvector estimate.
    pub vector: Vec<f64>,
    /// Krylov dimension used.
    pub iterations: usize,
    /// `‖Aq − λq‖₂` evaluated with one extra operator application.
    pub residual: f64,
    /// Gershgorin bound on the projected operator, used as `‖A‖_est`.
    pub norm_estimate: f64,
}

/// Smallest eigenvalue and eigenvector of the symmetric operator `apply`.
pub fn min_eig_lanczos<A>(mut apply: A, n: usize, cfg: &LanczosConfig) -> Result<EigPair>
where
    A: FnMut(&[f64], &mut [f64]),
{
    if n == 0 {
        return Err(Error::InvalidConfig("Lanczos needs a nonempty operator"));
    }
    let max_iters = cfg.max_iters.clamp(1, n);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut start: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let nrm = norm2(&start);
    scale(1.0 / nrm, &mut start);

    let mut basis: Vec<Vec<f64>> = vec![start];
    let mut alpha: Vec<f64> = Vec::with_capacity(max_iters);
    let mut beta: Vec<f64> = Vec::with_capacity(max_iters);
    let mut w = vec![0.0; n];
    let mut norm_est = 0.0f64;

    for j in 0..max_iters {
        apply(&basis[j], &mut w);
        let a = dot(&w, &basis[j]);
        alpha.push(a);
        axpy(-a, &basis[j], &mut w);
        if j > 0 {
            axpy(-beta[j - 1], &basis[j - 1], &mut w);
        }
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                axpy(-c, b, &mut w);
            }
        }
        let b_next = norm2(&w);
        let b_prev = if j > 0 { beta[j - 1] } else { 0.0 };
        norm_est = norm_est.max(a.abs() + b_prev + b_next);
        let floor = norm_est.max(f64::MIN_POSITIVE);

        let (_, s) = tridiagonal_min_eig(&alpha, &beta);
        let ritz_residual = b_next * s[j].abs();
        let breakdown = b_next <= 1e-13 * floor;
        if ritz_residual <= cfg.residual_tol * floor || breakdown || j + 1 == n {
            let mut q = vec![0.0; n];
            for (coef, v) in s.iter().zip(&basis) {
                axpy(*coef, v, &mut q);
            }
            let qn = norm2(&q);
            scale(1.0 / qn, &mut q);
            apply(&q, &mut w);
            let value = dot(&q, &w);
            axpy(-value, &q, &mut w);
            return Ok(EigPair {
                value,
                vector: q,
                iterations: j + 1,
                residual: norm2(&w),
                norm_estimate: floor,
            });
        }
        if j + 1 == max_iters {
            return Err(Error::EigFailure {
                iterations: max_iters,
                residual: ritz_residual / floor,
            });
        }
        beta.push(b_next);
        let mut next = w.clone();
        scale(1.0 / b_next, &mut next);
        basis.push(next);
    }
    unreachable!("loop returns on its last iteration")
}

/// Number of eigenvalues of the tridiagonal matrix strictly below `x`.
fn sturm_count(alpha: &[f64], beta: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for (i, &a) in alpha.iter().enumerate() {
        let off = if i > 0 {
            beta[i - 1] * beta[i - 1] / q
        } else {
            0.0
        };
        q = a - x - off;
        if q == 0.0 {
            q = -f64::EPSILON * (a.abs() + x.abs() + 1e-300);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest eigenpair of the symmetric tridiagonal matrix with diagonal
/// `alpha` and off-diagonal `beta` (`beta.len() + 1 == alpha.len()`).
pub(crate) fn tridiagonal_min_eig(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let m = alpha.len();
    debug_assert_eq!(beta.len() + 1, m);
    if m == 1 {
        return (alpha[0], vec![1.0]);
    }
    let off = |i: usize| -> f64 {
        let l = if i > 0 { beta[i - 1].abs() } else { 0.0 };
        let r = if i < m - 1 { beta[i].abs() } else { 0.0 };
        l + r
    };
    let mut lo = (0..m)
        .map(|i| alpha[i] - off(i))
        .fold(f64::INFINITY, f64::min);
    let mut hi = (0..m)
        .map(|i| alpha[i] + off(i))
        .fold(f64::NEG_INFINITY, f64::max);
    let scale_ref = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 2.0 * f64::EPSILON * scale_ref {
            break;
        }
        if sturm_count(alpha, beta, mid) == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);

    // Inverse iteration on T − σI with σ strictly below the spectrum, so the
    // LDLᵀ factorization has positive pivots.
    let sigma = lo - 8.0 * f64::EPSILON * scale_ref;
    let mut d = vec![0.0; m];
    let mut l = vec![0.0; m - 1];
    d[0] = alpha[0] - sigma;
    for i in 0..m - 1 {
        l[i] = beta[i] / d[i];
        d[i + 1] = alpha[i + 1] - sigma - l[i] * beta[i];
    }
    let mut x: Vec<f64> = (0..m).map(|i| 1.0 + 0.1 * i as f64 / m as f64).collect();
    for _ in 0..4 {
        for i in 1..m {
            x[i] -= l[i - 1] * x[i - 1];
        }
        for i in 0..m {
            x[i] /= d[i];
        }
        for i in (0..m - 1).rev() {
            x[i] -= l[i] * x[i + 1];
        }
        let nrm = norm2(&x);
        if nrm.is_finite() && nrm > 0.0 {
            scale(1.0 / nrm, &mut x);
        }
    }
    (lambda, x)
}
