use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use moco_core::sdp::{LowRankPsd, MeasurementOperator, SdpProblem};
use moco_core::ScaledSquaredNorm;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustdct::{DctPlanner, TransformType2And3};

use super::{add_noise_snr, stream_seed, ProblemError};

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseInstance {
    pub n: usize,
    pub m: usize,
    /// `m` diagonal sign patterns `S_j`, entries exactly `±1`.
    pub sign_masks: Vec<Vec<f64>>,
    /// `mn` intensity measurements, mask-major.
    pub b: Vec<f64>,
    pub gamma: f64,
    pub x_true: Vec<f64>,
    pub snr_db: f64,
    pub seed: u64,
}

impl PhaseInstance {
    /// `(1/m) Σ b_i`, which estimates `‖x‖² = tr(xxᵀ)` because each masked
    /// orthonormal transform preserves energy.
    pub fn trace_estimate(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.m as f64
    }

    pub fn operator(&self) -> DctMaskOperator {
        DctMaskOperator::new(self.n, self.sign_masks.clone())
    }
}

/// `G_i = a_i a_iᵀ` where the `a_i` are the rows of `A = [D S_1; …; D S_m]`
/// and `D` is the orthonormal DCT-II. Applied through fast transforms; `A`
/// is never stored.
#[derive(Clone)]
pub struct DctMaskOperator {
    n: usize,
    masks: Vec<Vec<f64>>,
    dct: Arc<dyn TransformType2And3<f64>>,
    weights: Vec<f64>,
}

impl fmt::Debug for DctMaskOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DctMaskOperator")
            .field("n", &self.n)
            .field("m", &self.masks.len())
            .finish()
    }
}

impl DctMaskOperator {
    pub fn new(n: usize, masks: Vec<Vec<f64>>) -> Self {
        assert!(
            masks.iter().all(|s| s.len() == n),
            "sign masks must have length n"
        );
        let dct = DctPlanner::new().plan_dct2(n);
        let mut weights = vec![(2.0 / n as f64).sqrt(); n];
        if n > 0 {
            weights[0] = (1.0 / n as f64).sqrt();
        }
        Self {
            n,
            masks,
            dct,
            weights,
        }
    }

    pub fn masks(&self) -> usize {
        self.masks.len()
    }

    /// Orthonormal DCT-II in place.
    fn forward_dct(&self, buf: &mut [f64]) {
        self.dct.process_dct2(buf);
        buf.iter_mut().zip(&self.weights).for_each(|(b, w)| *b *= w);
    }

    /// Inverse of [`Self::forward_dct`] in place.
    fn inverse_dct(&self, buf: &mut [f64]) {
        buf.iter_mut().zip(&self.weights).for_each(|(b, w)| *b *= w);
        if let Some(b0) = buf.first_mut() {
            *b0 *= 2.0;
        }
        self.dct.process_dct3(buf);
    }

    /// `Ax`, mask-major.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (s, block) in self.masks.iter().zip(out.chunks_mut(self.n.max(1))) {
            block
                .iter_mut()
                .zip(s)
                .zip(x)
                .for_each(|((o, s), x)| *o = s * x);
            self.forward_dct(block);
        }
        out
    }

    /// Row `a_i` of `A`.
    pub fn row(&self, i: usize) -> Vec<f64> {
        let (j, r) = (i / self.n, i % self.n);
        let w = self.weights[r];
        (0..self.n)
            .map(|c| {
                self.masks[j][c]
                    * w
                    * (PI * (2 * c + 1) as f64 * r as f64 / (2 * self.n) as f64).cos()
            })
            .collect()
    }
}

impl MeasurementOperator for DctMaskOperator {
    fn side(&self) -> usize {
        self.n
    }

    fn len(&self) -> usize {
        self.n * self.masks.len()
    }

    fn matvec(&self, i: usize, v: &[f64], out: &mut [f64]) {
        let a = self.row(i);
        let s: f64 = a.iter().zip(v).map(|(a, v)| a * v).sum();
        out.iter_mut().zip(&a).for_each(|(o, a)| *o = s * a);
    }

    fn gram(&self, u: &[f64], out: &mut [f64]) {
        let au = self.apply(u);
        out.iter_mut().zip(&au).for_each(|(o, v)| *o = v * v);
    }

    fn adjoint_matvec(&self, coef: &[f64], v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut buf = vec![0.0; self.n];
        for (s, c) in self.masks.iter().zip(coef.chunks(self.n.max(1))) {
            buf.iter_mut()
                .zip(s)
                .zip(v)
                .for_each(|((b, s), v)| *b = s * v);
            self.forward_dct(&mut buf);
            buf.iter_mut().zip(c).for_each(|(b, c)| *b *= c);
            self.inverse_dct(&mut buf);
            out.iter_mut()
                .zip(s)
                .zip(&buf)
                .for_each(|((o, s), b)| *o += s * b);
        }
    }
}

/// `A x` for an instance: concatenated `D(S_j x)` over the masks.
pub fn dct_measurement_apply(instance: &PhaseInstance, x: &[f64]) -> Vec<f64> {
    instance.operator().apply(x)
}

/// Lifted phase retrieval `min (1/mn)‖G(X) − b‖² + γ tr(X)` over `X ⪰ 0`,
/// with `b_i = (a_iᵀx)²` plus Gaussian noise at exactly `snr_db`.
pub fn build_phase_retrieval(
    x_true: &[f64],
    m: usize,
    gamma: f64,
    seed: u64,
    snr_db: f64,
) -> Result<
    (
        PhaseInstance,
        SdpProblem<DctMaskOperator, ScaledSquaredNorm>,
    ),
    ProblemError,
> {
    let n = x_true.len();
    if m == 0 || n == 0 {
        return Err(ProblemError::InvalidParameter(
            "phase retrieval needs n ≥ 1 and m ≥ 1",
        ));
    }
    if !(gamma >= 0.0) {
        return Err(ProblemError::InvalidParameter("gamma must be nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, 11));
    let sign_masks: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            (0..n)
                .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
                .collect()
        })
        .collect();
    let op = DctMaskOperator::new(n, sign_masks.clone());
    let clean: Vec<f64> = op.apply(x_true).iter().map(|v| v * v).collect();
    let b = add_noise_snr(&clean, snr_db, stream_seed(seed, 12))?;
    let d = m * n;
    let instance = PhaseInstance {
        n,
        m,
        sign_masks,
        b: b.clone(),
        gamma,
        x_true: x_true.to_vec(),
        snr_db,
        seed,
    };
    let objective = ScaledSquaredNorm {
        dim: d,
        scale: 1.0 / d as f64,
    };
    let problem = SdpProblem::new(op, objective, b, gamma)?;
    Ok((instance, problem))
}

/// Standard normal test signal of length `n`.
pub fn synthetic_signal(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, 10));
    (0..n)
        .map(|_| rng.sample(rand_distr::StandardNormal))
        .collect()
}

/// `‖X̂ − xxᵀ‖_F / ‖x‖²` for a low-rank `X̂ = U diag(λ) Uᵀ`, in `O(nr²)`.
pub fn recovery_error(estimate: &LowRankPsd, x: &[f64]) -> f64 {
    let r = estimate.rank();
    let xx: f64 = x.iter().map(|v| v * v).sum();
    let proj: Vec<f64> = (0..r)
        .map(|i| estimate.u.column(i).iter().zip(x).map(|(u, x)| u * x).sum())
        .collect();
    let mut est_sq = 0.0;
    for i in 0..r {
        for j in 0..r {
            let uij = estimate.u.column(i).dot(&estimate.u.column(j));
            est_sq += estimate.values[i] * estimate.values[j] * uij * uij;
        }
    }
    let cross: f64 = (0..r).map(|i| estimate.values[i] * proj[i] * proj[i]).sum();
    (est_sq + xx * xx - 2.0 * cross).max(0.0).sqrt() / xx
}
