//! Cones, their linear minimization oracles over `K ∩ {‖v‖ ≤ 1}`, and exact
//! distance oracles to the dual cone.
//!
//! Every cone here is self-dual. The orthant and the second-order cone use
//! the ℓ2 norm as both primal and dual norm; the PSD cone uses the nuclear
//! norm with the operator norm as its dual. PSD points are flattened `n × n`
//! symmetric matrices (column-major, which for symmetric data is the same as
//! row-major), so the Euclidean dot product is the trace inner product.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};
#[allow(unused_imports)] // method resolution falls back to std when it is linked
use num_traits::Float;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::lanczos::{min_eig_lanczos, LanczosConfig};
use crate::vector::{dot, norm2};

/// Absolute membership tolerance for the orthant and the second-order cone.
pub const MEMBERSHIP_TOL: f64 = 1e-10;
/// Relative tolerance `λ_min ≥ −tol·‖X‖` for PSD membership.
pub const PSD_MEMBERSHIP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    /// `{x ∈ Rᵈ : x ≥ 0}`
    Orthant(usize),
    /// `{(x, t) ∈ Rᵈ⁻¹ × R : ‖x‖₂ ≤ t}`, with `t` the last coordinate.
    SecondOrder(usize),
    /// `n × n` PSD matrices; oracles use a dense eigendecomposition.
    PsdDense(usize),
    /// `n × n` PSD matrices; oracles use Lanczos on matrix-vector products.
    PsdOperator(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormPair {
    /// ℓ2 / ℓ2
    Euclidean,
    /// nuclear / operator
    NuclearOperator,
}

/// Output of a linear minimization oracle: `v ∈ argmin ⟨g, v⟩` and the
/// optimal value `⟨g, v⟩ ≤ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lmo {
    pub v: Vec<f64>,
    pub value: f64,
}

/// Dense PSD oracle output. `v = q qᵀ` when `lambda_min < 0`, else zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdLmo {
    pub lambda_min: f64,
    pub q: Vec<f64>,
    pub v: Vec<f64>,
}

impl Cone {
    /// Ambient dimension (`n²` for PSD cones).
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Orthant(d) | Cone::SecondOrder(d) => d,
            Cone::PsdDense(n) | Cone::PsdOperator(n) => n * n,
        }
    }

    pub fn norm_pair(&self) -> NormPair {
        match self {
            Cone::Orthant(_) | Cone::SecondOrder(_) => NormPair::Euclidean,
            Cone::PsdDense(_) | Cone::PsdOperator(_) => NormPair::NuclearOperator,
        }
    }

    fn side(&self) -> Option<usize> {
        match *self {
            Cone::PsdDense(n) | Cone::PsdOperator(n) => Some(n),
            _ => None,
        }
    }

    /// Primal norm `‖x‖`.
    pub fn norm(&self, x: &[f64]) -> Result<f64> {
        match self.side() {
            None => Ok(norm2(x)),
            Some(n) => Ok(sym_eigenvalues(n, x)?.iter().map(|l| l.abs()).sum()),
        }
    }

    /// Dual norm `‖g‖_*`.
    pub fn dual_norm(&self, g: &[f64]) -> Result<f64> {
        match self.side() {
            None => Ok(norm2(g)),
            Some(n) => Ok(sym_eigenvalues(n, g)?
                .iter()
                .fold(0.0, |m, l| m.max(l.abs()))),
        }
    }

    /// Membership test with the crate-wide tolerances.
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() || !x.iter().all(|v| v.is_finite()) {
            return false;
        }
        match *self {
            Cone::Orthant(_) => x.iter().all(|&v| v >= -MEMBERSHIP_TOL),
            Cone::SecondOrder(d) => {
                let (head, t) = x.split_at(d - 1);
                norm2(head) <= t[0] + MEMBERSHIP_TOL
            }
            Cone::PsdDense(n) | Cone::PsdOperator(n) => match sym_eigenvalues(n, x) {
                Ok(eig) => {
                    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
                    let scale = eig.iter().fold(0.0f64, |m, l| m.max(l.abs()));
                    n == 0 || min >= -PSD_MEMBERSHIP_TOL * scale
                }
                Err(_) => false,
            },
        }
    }

    /// A canonical nonzero point of the cone used when no start is given:
    /// `e₁` for the orthant, the axis `e_d` for the second-order cone, and
    /// the zero matrix for PSD cones.
    pub fn default_point(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        match *self {
            Cone::Orthant(d) if d > 0 => x[0] = 1.0,
            Cone::SecondOrder(d) if d > 0 => x[d - 1] = 1.0,
            _ => {}
        }
        x
    }

    /// `argmin ⟨g, v⟩ s.t. v ∈ K, ‖v‖ ≤ 1`.
    pub fn lmo(&self, g: &[f64]) -> Result<Lmo> {
        if g.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: g.len(),
            });
        }
        match *self {
            Cone::Orthant(_) => Ok(lmo_orthant(g)),
            Cone::SecondOrder(_) => Ok(lmo_soc(g)),
            Cone::PsdDense(n) => {
                let out = lmo_psd_dense(g, n)?;
                Ok(Lmo {
                    value: out.lambda_min.min(0.0),
                    v: out.v,
                })
            }
            Cone::PsdOperator(n) => {
                let pair = min_eig_lanczos(
                    |v, out| dense_sym_apply(n, g, v, out),
                    n,
                    &LanczosConfig::for_dim(n),
                )?;
                if pair.value < 0.0 {
                    Ok(Lmo {
                        v: outer(&pair.vector),
                        value: pair.value,
                    })
                } else {
                    Ok(Lmo {
                        v: vec![0.0; n * n],
                        value: 0.0,
                    })
                }
            }
        }
    }

    /// `dist_*(g, K*)`, the dual-norm distance from `g` to the dual cone.
    pub fn dual_distance(&self, g: &[f64]) -> Result<f64> {
        if g.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: g.len(),
            });
        }
        match *self {
            Cone::Orthant(_) => Ok(negative_part_norm(g)),
            Cone::SecondOrder(d) => {
                if d == 0 {
                    return Ok(0.0);
                }
                let (head, t) = g.split_at(d - 1);
                let (hn, t) = (norm2(head), t[0]);
                Ok(if hn <= t {
                    0.0
                } else if hn <= -t {
                    norm2(g)
                } else {
                    (hn - t) * FRAC_1_SQRT_2
                })
            }
            Cone::PsdDense(n) | Cone::PsdOperator(n) => {
                let min = sym_eigenvalues(n, g)?
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min);
                Ok(if n == 0 { 0.0 } else { (-min).max(0.0) })
            }
        }
    }
}

fn negative_part_norm(g: &[f64]) -> f64 {
    g.iter()
        .map(|&x| if x < 0.0 { x * x } else { 0.0 })
        .sum::<f64>()
        .sqrt()
}

/// Orthant LMO: `[−g]₊ / ‖[−g]₊‖₂`, or zero when `g ≥ 0`.
pub fn lmo_orthant(g: &[f64]) -> Lmo {
    let nrm = negative_part_norm(g);
    if nrm == 0.0 {
        return Lmo {
            v: vec![0.0; g.len()],
            value: 0.0,
        };
    }
    let v: Vec<f64> = g
        .iter()
        .map(|&x| if x < 0.0 { -x / nrm } else { 0.0 })
        .collect();
    Lmo { value: -nrm, v }
}

/// Second-order cone LMO with `t` stored last.
pub fn lmo_soc(g: &[f64]) -> Lmo {
    let d = g.len();
    if d == 0 {
        return Lmo {
            v: Vec::new(),
            value: 0.0,
        };
    }
    let (head, t) = g.split_at(d - 1);
    let (hn, t) = (norm2(head), t[0]);
    if hn <= t {
        return Lmo {
            v: vec![0.0; d],
            value: 0.0,
        };
    }
    if hn <= -t {
        let gn = norm2(g);
        let v: Vec<f64> = g.iter().map(|x| -x / gn).collect();
        return Lmo { v, value: -gn };
    }
    // Boundary ray ‖x‖ = t in the direction opposing g_x, scaled to unit norm.
    let mut v: Vec<f64> = head.iter().map(|x| -x / hn * FRAC_1_SQRT_2).collect();
    v.push(FRAC_1_SQRT_2);
    Lmo {
        value: (t - hn) * FRAC_1_SQRT_2,
        v,
    }
}

/// Dense PSD LMO via a full symmetric eigendecomposition.
///
/// On repeated minimal eigenvalues the eigenvector with the lowest index in
/// the decomposition is returned.
pub fn lmo_psd_dense(g: &[f64], n: usize) -> Result<PsdLmo> {
    if g.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            found: g.len(),
        });
    }
    if n == 0 {
        return Ok(PsdLmo {
            lambda_min: 0.0,
            q: Vec::new(),
            v: Vec::new(),
        });
    }
    let eig = sym_eigen(n, g)?;
    let mut idx = 0;
    for i in 1..n {
        if eig.eigenvalues[i] < eig.eigenvalues[idx] {
            idx = i;
        }
    }
    let lambda_min = eig.eigenvalues[idx];
    let q: Vec<f64> = eig.eigenvectors.column(idx).iter().cloned().collect();
    let v = if lambda_min < 0.0 {
        outer(&q)
    } else {
        vec![0.0; n * n]
    };
    Ok(PsdLmo { lambda_min, q, v })
}

/// Flattened `q qᵀ`.
pub fn outer(q: &[f64]) -> Vec<f64> {
    let n = q.len();
    let mut m = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            m[j * n + i] = q[i] * q[j];
        }
    }
    m
}

fn dense_sym_apply(n: usize, m: &[f64], v: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = (0..n).map(|j| m[j * n + i] * v[j]).sum();
    }
}

/// Symmetrized dense eigendecomposition of a flattened `n × n` matrix.
pub fn sym_eigen(n: usize, data: &[f64]) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let m = DMatrix::from_column_slice(n, n, data);
    let sym = (&m + m.transpose()) * 0.5;
    SymmetricEigen::try_new(sym, f64::EPSILON, 10_000).ok_or(Error::EigFailure {
        iterations: 10_000,
        residual: f64::NAN,
    })
}

pub fn sym_eigenvalues(n: usize, data: &[f64]) -> Result<DVector<f64>> {
    if n == 0 {
        return Ok(DVector::zeros(0));
    }
    Ok(sym_eigen(n, data)?.eigenvalues)
}

/// Exhaustive LMO over a grid of `K ∩ {‖v‖ ≤ 1}` for small cones.
///
/// Linear objectives attain their minimum over this set either at the origin
/// or on the unit sphere, so the grid covers the origin plus a parametrization
/// of the sphere slice whose boundary lies exactly on grid points. Supported:
/// orthant and second-order cone in dimension 1–3 and the 2 × 2 PSD cone.
pub fn brute_lmo(cone: &Cone, g: &[f64], grid_n: usize) -> Result<Lmo> {
    if g.len() != cone.dim() {
        return Err(Error::DimensionMismatch {
            expected: cone.dim(),
            found: g.len(),
        });
    }
    let grid_n = grid_n.max(2);
    let side = (grid_n as f64).sqrt().ceil() as usize;
    let lin = |lo: f64, hi: f64, k: usize, i: usize| lo + (hi - lo) * i as f64 / (k - 1) as f64;

    let mut best = Lmo {
        v: vec![0.0; g.len()],
        value: 0.0,
    };
    let mut consider = |v: Vec<f64>| {
        let val = dot(g, &v);
        if val < best.value {
            best = Lmo { v, value: val };
        }
    };

    match *cone {
        Cone::Orthant(1) | Cone::SecondOrder(1) => consider(vec![1.0]),
        Cone::Orthant(2) => {
            for i in 0..grid_n {
                let a = lin(0.0, FRAC_PI_2, grid_n, i);
                consider(vec![a.cos(), a.sin()]);
            }
        }
        Cone::SecondOrder(2) => {
            for i in 0..grid_n {
                let a = lin(-FRAC_PI_4, FRAC_PI_4, grid_n, i);
                consider(vec![a.sin(), a.cos()]);
            }
        }
        Cone::Orthant(3) | Cone::SecondOrder(3) => {
            let (polar_max, az_max) = match cone {
                Cone::Orthant(_) => (FRAC_PI_2, FRAC_PI_2),
                _ => (FRAC_PI_4, 2.0 * PI),
            };
            for i in 0..side {
                let a = lin(0.0, polar_max, side, i);
                for j in 0..side {
                    let b = lin(0.0, az_max, side, j);
                    let (sa, ca) = (a.sin(), a.cos());
                    consider(vec![sa * b.cos(), sa * b.sin(), ca]);
                }
            }
        }
        Cone::PsdDense(2) | Cone::PsdOperator(2) => {
            for i in 0..grid_n {
                let a = lin(0.0, PI, grid_n, i);
                consider(outer(&[a.cos(), a.sin()]));
            }
        }
        _ => {
            return Err(Error::UnsupportedCone(
                "brute-force LMO is limited to dimension ≤ 3",
            ))
        }
    }
    Ok(best)
}
