//! Memory-efficient MOCO for semidefinite programs
//!
//! ```text
//! minimize f(G(X) − z) + γ·tr(X)   subject to   X ⪰ 0
//! ```
//!
//! The iterate `X_k` is never formed. The solver carries `y_k = G(X_k) − z`
//! (length `d`), the running trace `tr(X_k)`, the momentum vector `g̃_k` with
//! `g_k = G*(g̃_k)`, and a Gaussian sketch `S_k = X_kΩ` from which a low-rank
//! approximation of `X_k` can be rebuilt. The LMO is the minimum eigenpair of
//! `G*(g̃_k) + γI`, computed by Lanczos through matrix-vector products.
//!
//! The trace penalty is kept out of `f`: a linear term would break strict
//! convexity of `f`, so it is folded analytically into the ray and line
//! searches and as the `+γI` shift of the LMO matrix.
//!
//! A test mode additionally stores the dense `X_k`, which lets the sketch and
//! the measurement vector be checked against their definitions.

mod engine;
mod greedy;
mod operator;
mod sketch;

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // method resolution falls back to std when it is linked
use num_traits::Float;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lanczos::LanczosConfig;
use crate::objective::Objective;
use crate::solver::SolverConfig;

pub use engine::{
    fw_baseline_step, fw_solve, sdp_solve, theta_heuristic, FwStep, GreedyRecord, NoSdpHooks,
    SdpHooks, SdpIterationView, SdpOutcome,
};
pub use greedy::{greedy_step, GreedyConfig, GreedyOutcome};
pub use operator::{adjoint_dense, measure_dense, DenseMeasurements, MeasurementOperator};
pub use sketch::{sketch_update, LowRankPsd, SketchState};

/// An SDP in composite form `f(G(X) − z) + γ tr(X)` over `X ⪰ 0`.
#[derive(Debug, Clone)]
pub struct SdpProblem<Op, F> {
    pub op: Op,
    /// `f` over `R^d`.
    pub objective: F,
    /// `z`
    pub offset: Vec<f64>,
    /// `γ ≥ 0`
    pub trace_penalty: f64,
}

impl<Op: operator::MeasurementOperator, F: Objective> SdpProblem<Op, F> {
    pub fn new(op: Op, objective: F, offset: Vec<f64>, trace_penalty: f64) -> Result<Self> {
        if objective.dim() != op.len() {
            return Err(Error::DimensionMismatch {
                expected: op.len(),
                found: objective.dim(),
            });
        }
        if offset.len() != op.len() {
            return Err(Error::DimensionMismatch {
                expected: op.len(),
                found: offset.len(),
            });
        }
        if !(trace_penalty >= 0.0) {
            return Err(Error::InvalidConfig("trace penalty must be nonnegative"));
        }
        Ok(Self {
            op,
            objective,
            offset,
            trace_penalty,
        })
    }

    pub fn side(&self) -> usize {
        self.op.side()
    }

    /// `f(y) + γ·trace`
    pub fn value(&self, y: &[f64], trace: f64) -> f64 {
        self.objective.value(y) + self.trace_penalty * trace
    }

    /// Objective at an explicit `X`.
    pub fn value_dense(&self, x: &DMatrix<f64>) -> Result<f64> {
        let mut y = operator::measure_dense(&self.op, x)?;
        for (yi, zi) in y.iter_mut().zip(&self.offset) {
            *yi -= zi;
        }
        Ok(self.value(&y, x.trace()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpConfig {
    pub solver: SolverConfig,
    pub lanczos: LanczosConfig,
    /// Sketch width `R`.
    pub sketch_width: usize,
    pub sketch_seed: u64,
    /// Columns of the Burer–Monteiro factor in the greedy step.
    pub greedy_rank: usize,
    pub greedy: GreedyConfig,
    /// Also carry the dense `X_k` (quadratic memory).
    pub test_mode: bool,
}

impl SdpConfig {
    /// Defaults for an `n × n` problem: Lanczos with `min(n, 200)` steps,
    /// sketch width 3, rank-1 greedy factor.
    pub fn for_side(n: usize) -> Self {
        Self {
            solver: SolverConfig::default(),
            lanczos: LanczosConfig::for_dim(n),
            sketch_width: 3,
            sketch_seed: 0,
            greedy_rank: 1,
            greedy: GreedyConfig::default(),
            test_mode: false,
        }
    }
}

/// Sketched SDP iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpIterate {
    pub k: usize,
    /// `G(X_k) − z`
    pub y: Vec<f64>,
    /// `tr(X_k)`
    pub tr_acc: f64,
    /// `g̃_k`
    pub g_tilde: Vec<f64>,
    pub sketch: SketchState,
    /// Dense `X_k`, present only in test mode.
    pub dense_x: Option<DMatrix<f64>>,
    /// Most recent rank-one atoms `u uᵀ` of `X_k`, newest last. They seed the
    /// factor of the greedy step.
    pub atoms: Vec<Vec<f64>>,
}

impl SdpIterate {
    /// `X₀ = 0`, i.e. `y₀ = −z`.
    pub fn new<Op: operator::MeasurementOperator, F: Objective>(
        problem: &SdpProblem<Op, F>,
        config: &SdpConfig,
    ) -> Self {
        let n = problem.side();
        Self {
            k: 0,
            y: problem.offset.iter().map(|z| -z).collect(),
            tr_acc: 0.0,
            g_tilde: vec![0.0; problem.op.len()],
            sketch: SketchState::new(n, config.sketch_width, config.sketch_seed),
            dense_x: config.test_mode.then(|| DMatrix::zeros(n, n)),
            atoms: Vec::new(),
        }
    }

    /// `X ← ηX`, given `w = y + z`.
    pub(crate) fn scale(&mut self, eta: f64, offset: &[f64]) {
        if eta == 1.0 {
            return;
        }
        for (yi, zi) in self.y.iter_mut().zip(offset) {
            *yi = eta * (*yi + zi) - zi;
        }
        self.tr_acc *= eta;
        self.sketch.scale(eta);
        if let Some(x) = self.dense_x.as_mut() {
            *x *= eta;
        }
        let root = eta.sqrt();
        for u in &mut self.atoms {
            u.iter_mut().for_each(|v| *v *= root);
        }
    }

    /// `X ← X + weight·u uᵀ`, where `gram = G(u uᵀ)` and `sq_norm = ‖u‖²`.
    pub(crate) fn add_rank_one(&mut self, u: &[f64], weight: f64, gram: &[f64], sq_norm: f64) {
        crate::vector::axpy(weight, gram, &mut self.y);
        self.tr_acc += weight * sq_norm;
        self.sketch.add_rank_one(u, weight);
        if let Some(x) = self.dense_x.as_mut() {
            let uv = nalgebra::DVector::from_column_slice(u);
            x.ger(weight, &uv, &uv, 1.0);
        }
    }

    /// Rank-`r` reconstruction of the current iterate from the sketch.
    pub fn reconstruct(&self, r: usize) -> Result<LowRankPsd> {
        self.sketch.reconstruct(r)
    }
}
