use moco_core::sdp::{MeasurementOperator, SdpProblem};
use moco_core::ScaledSquaredNorm;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{add_noise_snr, stream_seed, ProblemError};

/// Side of the fully observed top-left block.
pub const BLOCK: usize = 10;
/// Sampling probability of every other upper-triangular entry.
pub const SAMPLE_PROB: f64 = 0.1;
const RANK: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct MatCompInstance {
    pub n: usize,
    /// Observed upper-triangular positions `(a, b)`, `a ≤ b`, row-major order.
    pub mask: Vec<(usize, usize)>,
    pub b: Vec<f64>,
    /// Ground-truth factor `V` (`n × 3`), with `A = VVᵀ`.
    pub v_true: DMatrix<f64>,
    pub snr_db: f64,
    pub seed: u64,
}

impl MatCompInstance {
    /// `(VVᵀ)_{ab}`
    pub fn truth_entry(&self, a: usize, b: usize) -> f64 {
        self.v_true.row(a).dot(&self.v_true.row(b))
    }

    pub fn truth_trace(&self) -> f64 {
        self.v_true.norm_squared()
    }

    /// `n` times the mean observed diagonal entry; an estimate of `tr(A)`.
    pub fn trace_estimate(&self) -> f64 {
        let diag: Vec<f64> = self
            .mask
            .iter()
            .zip(&self.b)
            .filter(|((a, b), _)| a == b)
            .map(|(_, v)| *v)
            .collect();
        if diag.is_empty() {
            return 0.0;
        }
        self.n as f64 * diag.iter().sum::<f64>() / diag.len() as f64
    }

    pub fn operator(&self) -> EntryOperator {
        EntryOperator::new(self.n, &self.mask)
    }
}

/// Entry sampling `G_i = ½(E_ab + E_ba)`, so `tr(G_i X) = X_ab` for
/// symmetric `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryOperator {
    n: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl EntryOperator {
    pub fn new(n: usize, mask: &[(usize, usize)]) -> Self {
        let (rows, cols) = mask.iter().cloned().unzip();
        Self { n, rows, cols }
    }
}

impl MeasurementOperator for EntryOperator {
    fn side(&self) -> usize {
        self.n
    }

    fn len(&self) -> usize {
        self.rows.len()
    }

    fn matvec(&self, i: usize, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let (a, b) = (self.rows[i], self.cols[i]);
        if a == b {
            out[a] = v[a];
        } else {
            out[a] = 0.5 * v[b];
            out[b] = 0.5 * v[a];
        }
    }

    fn gram(&self, u: &[f64], out: &mut [f64]) {
        for ((o, &a), &b) in out.iter_mut().zip(&self.rows).zip(&self.cols) {
            *o = u[a] * u[b];
        }
    }

    fn adjoint_matvec(&self, coef: &[f64], v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for ((&c, &a), &b) in coef.iter().zip(&self.rows).zip(&self.cols) {
            if a == b {
                out[a] += c * v[a];
            } else {
                out[a] += 0.5 * c * v[b];
                out[b] += 0.5 * c * v[a];
            }
        }
    }
}

/// Symmetric matrix completion `min ½ Σ (X_ab − b_ab)²` over `X ⪰ 0`.
///
/// The ground truth is `VVᵀ` with standard normal `V ∈ R^{n×3}`. Every entry
/// of the top-left 10×10 block is observed, and every other upper-triangular
/// entry (diagonal included) with probability 0.1. Observations carry
/// Gaussian noise at exactly `snr_db`.
pub fn build_matcomp(
    n: usize,
    seed: u64,
    snr_db: f64,
) -> Result<
    (
        MatCompInstance,
        SdpProblem<EntryOperator, ScaledSquaredNorm>,
    ),
    ProblemError,
> {
    if n < BLOCK {
        return Err(ProblemError::InvalidParameter(
            "matrix completion needs n ≥ 10",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, 1));
    let v_true = DMatrix::<f64>::from_fn(n, RANK, |_, _| rng.sample(StandardNormal));

    let mut mask_rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, 2));
    let mut mask = Vec::new();
    for a in 0..n {
        for b in a..n {
            let in_block = a < BLOCK && b < BLOCK;
            if in_block || mask_rng.random_bool(SAMPLE_PROB) {
                mask.push((a, b));
            }
        }
    }
    let mut instance = MatCompInstance {
        n,
        mask,
        b: Vec::new(),
        v_true,
        snr_db,
        seed,
    };
    let clean: Vec<f64> = instance
        .mask
        .iter()
        .map(|&(a, b)| instance.truth_entry(a, b))
        .collect();
    instance.b = add_noise_snr(&clean, snr_db, stream_seed(seed, 3))?;

    let d = instance.mask.len();
    let problem = SdpProblem::new(
        instance.operator(),
        ScaledSquaredNorm::half(d),
        instance.b.clone(),
        0.0,
    )?;
    Ok((instance, problem))
}

#[cfg(test)]
mod tests {
    use super::*;
    use moco_core::sdp::{adjoint_dense, DenseMeasurements};

    #[test]
    fn mask_contains_block_and_is_upper_triangular() {
        let (inst, p) = build_matcomp(30, 7, 20.0).unwrap();
        for a in 0..BLOCK {
            for b in a..BLOCK {
                assert!(inst.mask.contains(&(a, b)));
            }
        }
        assert!(inst.mask.iter().all(|(a, b)| a <= b));
        let mut sorted = inst.mask.clone();
        sorted.dedup();
        assert_eq!(sorted.len(), inst.mask.len());
        assert_eq!(p.op.len(), inst.b.len());
    }

    #[test]
    fn entry_operator_matches_dense_form() {
        let mask = vec![(0, 0), (0, 2), (1, 2), (2, 2)];
        let op = EntryOperator::new(3, &mask);
        let mats = mask
            .iter()
            .map(|&(a, b)| {
                let mut m = DMatrix::zeros(3, 3);
                m[(a, b)] += 0.5;
                m[(b, a)] += 0.5;
                m
            })
            .collect();
        let dense = DenseMeasurements::new(3, mats);
        let coef = [0.3, -1.0, 2.0, 0.5];
        assert_eq!(adjoint_dense(&op, &coef), adjoint_dense(&dense, &coef));
        let u = [1.0, -2.0, 0.5];
        let (mut g1, mut g2) = ([0.0; 4], [0.0; 4]);
        op.gram(&u, &mut g1);
        dense.gram(&u, &mut g2);
        for (a, b) in g1.iter().zip(&g2) {
            assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn builder_is_deterministic() {
        let (a, _) = build_matcomp(20, 3, 20.0).unwrap();
        let (b, _) = build_matcomp(20, 3, 20.0).unwrap();
        assert_eq!(a, b);
        let (c, _) = build_matcomp(20, 4, 20.0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_small_side() {
        assert!(build_matcomp(9, 0, 20.0).is_err());
    }
}
