//! Gaussian sketch `S = XΩ` of the PSD iterate and its fixed-rank Nyström
//! reconstruction.

use alloc::vec::Vec;
#[allow(unused_imports)] // method resolution falls back to std when it is linked
use num_traits::Float;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SketchState {
    omega: DMatrix<f64>,
    s: DMatrix<f64>,
    seed: u64,
}

/// `X̂ = U diag(values) Uᵀ` with orthonormal columns in `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankPsd {
    pub u: DMatrix<f64>,
    pub values: Vec<f64>,
}

impl LowRankPsd {
    pub fn side(&self) -> usize {
        self.u.nrows()
    }

    pub fn rank(&self) -> usize {
        self.values.len()
    }

    /// Dense `n × n` matrix; for tests and small problems only.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&self.values));
        &self.u * d * self.u.transpose()
    }

    pub fn trace(&self) -> f64 {
        self.values.iter().sum()
    }
}

impl SketchState {
    /// `S = 0` with an `n × width` standard normal test matrix drawn from `seed`.
    pub fn new(n: usize, width: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let omega = DMatrix::from_fn(n, width, |_, _| rng.sample::<f64, _>(StandardNormal));
        Self {
            omega,
            s: DMatrix::zeros(n, width),
            seed,
        }
    }

    pub fn side(&self) -> usize {
        self.omega.nrows()
    }

    pub fn width(&self) -> usize {
        self.omega.ncols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    pub fn sketch(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn scale(&mut self, eta: f64) {
        self.s *= eta;
    }

    /// `S ← S + weight·u(uᵀΩ)`, in `O(nR)`.
    pub fn add_rank_one(&mut self, u: &[f64], weight: f64) {
        if weight == 0.0 {
            return;
        }
        let u = DVector::from_column_slice(u);
        let w = self.omega.tr_mul(&u);
        self.s.ger(weight, &u, &w, 1.0);
    }

    /// Fixed-rank Nyström approximation of the sketched matrix.
    ///
    /// Follows the numerically stable recipe: shift by
    /// `ν = √n·ε_mach·‖S‖_F`, form the core `Ωᵀ(S + νΩ)`, take its Cholesky
    /// factor `C`, and truncate the SVD of `(S + νΩ)C⁻¹` to rank `r`,
    /// subtracting the shift from the squared singular values. When the
    /// core is too ill-conditioned for Cholesky, a pseudo-inverse square root
    /// from its eigendecomposition is used instead.
    pub fn reconstruct(&self, r: usize) -> Result<LowRankPsd> {
        let (n, width) = self.s.shape();
        if r + 1 >= width {
            return Err(Error::RankTooLarge { rank: r, width });
        }
        let s_norm = self.s.norm();
        if s_norm == 0.0 {
            return Ok(LowRankPsd {
                u: DMatrix::zeros(n, r),
                values: alloc::vec![0.0; r],
            });
        }
        let nu = (n as f64).sqrt() * f64::EPSILON * s_norm;
        let y = &self.s + &self.omega * nu;
        let core = self.omega.tr_mul(&y);
        let core = (&core + core.transpose()) * 0.5;

        let e = match core.clone().cholesky() {
            Some(ch) => {
                // E = Y L⁻ᵀ, i.e. L Eᵀ = Yᵀ.
                let et =
                    ch.l()
                        .solve_lower_triangular(&y.transpose())
                        .ok_or(Error::EigFailure {
                            iterations: 0,
                            residual: f64::NAN,
                        })?;
                et.transpose()
            }
            None => {
                let eig = SymmetricEigen::try_new(core, f64::EPSILON, 10_000).ok_or(
                    Error::EigFailure {
                        iterations: 10_000,
                        residual: f64::NAN,
                    },
                )?;
                let top = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
                let cut = top * width as f64 * f64::EPSILON;
                let mut scaled = eig.eigenvectors.clone();
                for (j, &l) in eig.eigenvalues.iter().enumerate() {
                    let f = if l > cut { 1.0 / l.sqrt() } else { 0.0 };
                    scaled.column_mut(j).scale_mut(f);
                }
                &y * scaled
            }
        };

        let svd = e.svd(true, false);
        let left = svd.u.ok_or(Error::EigFailure {
            iterations: 0,
            residual: f64::NAN,
        })?;
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let mut u = DMatrix::zeros(n, r);
        let mut values = Vec::with_capacity(r);
        for (c, &j) in order.iter().take(r).enumerate() {
            u.column_mut(c).copy_from(&left.column(j));
            let sigma = svd.singular_values[j];
            values.push((sigma * sigma - nu).max(0.0));
        }
        Ok(LowRankPsd { u, values })
    }
}

/// `S ← η·S + θ·q(qᵀΩ)`
pub fn sketch_update(sketch: &mut SketchState, eta: f64, theta: f64, q: &[f64]) {
    sketch.scale(eta);
    sketch.add_rank_one(q, theta);
}
