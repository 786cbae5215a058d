use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // method resolution falls back to std when it is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::solver::SolveStats;
use crate::vector::{all_finite, axpy, dot, norm2};

use super::engine::Oracle;
use super::operator::MeasurementOperator;
use super::{SdpConfig, SdpIterate, SdpProblem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyConfig {
    /// Gradient steps on the factored objective.
    pub max_iters: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Correction pairs kept by the quasi-Newton solver.
    pub memory: usize,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        Self {
            max_iters: 50,
            armijo: 1e-4,
            memory: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyOutcome {
    pub f_before: f64,
    pub f_after: f64,
    pub inner_iters: usize,
    /// Whether a column was added along the minimum eigenvector.
    pub seeded: bool,
}

/// Burer–Monteiro improvement of the current iterate.
///
/// The iterate is split as `X = B + Σ u_j u_jᵀ`, where the `u_j` are the most
/// recent atoms and `B` is the remainder, which is only known through
/// `G(B)`, `tr B` and its sketch. The step minimizes
/// `f(G(t²B + UUᵀ) − z) + γ tr(t²B + UUᵀ)` over `(t, U)` by L-BFGS with
/// Armijo backtracking from `t = 1, U = [u_j]`, i.e. from the current point. If `U` has
/// fewer than `greedy_rank` columns and the LMO direction `q` improves the
/// objective, a column `√θ q` with the exact best `θ` is appended first.
///
/// Returns [`Error::InnerSolverStall`] and leaves `state` untouched when no
/// decrease is found.
pub fn greedy_step<Op: MeasurementOperator, F: Objective>(
    state: &mut SdpIterate,
    problem: &SdpProblem<Op, F>,
    config: &SdpConfig,
) -> Result<GreedyOutcome> {
    let mut oracle = Oracle {
        problem,
        stats: SolveStats::default(),
    };
    let k = state.k;
    greedy_step_counted(state, &mut oracle, config, k)
}

/// The factored objective over `z = [t, vec(U)]`.
struct Factored<'a, 'b, Op, F> {
    oracle: &'a mut Oracle<'b, Op, F>,
    n: usize,
    /// `G(B)`
    w_b: Vec<f64>,
    tr_b: f64,
    gram: Vec<f64>,
    grad_y: Vec<f64>,
}

impl<Op: MeasurementOperator, F: Objective> Factored<'_, '_, Op, F> {
    /// Measurement vector and trace of `t²B + UUᵀ`.
    fn measure(&mut self, z: &[f64], y: &mut [f64]) -> f64 {
        let problem = self.oracle.problem;
        let t2 = z[0] * z[0];
        for ((yi, w), off) in y.iter_mut().zip(&self.w_b).zip(&problem.offset) {
            *yi = t2 * w - off;
        }
        let mut tr = t2 * self.tr_b;
        for u in z[1..].chunks(self.n) {
            problem.op.gram(u, &mut self.gram);
            axpy(1.0, &self.gram, y);
            tr += dot(u, u);
        }
        tr
    }

    fn value(&mut self, z: &[f64], y: &mut [f64]) -> f64 {
        let tr = self.measure(z, y);
        self.oracle.value(y, tr)
    }

    /// Gradient at `z`, whose measurement vector is `y`.
    fn gradient(&mut self, z: &[f64], y: &[f64], out: &mut [f64]) {
        let problem = self.oracle.problem;
        let gamma = problem.trace_penalty;
        self.oracle.gradient(y, &mut self.grad_y);
        out[0] = 2.0 * z[0] * (dot(&self.grad_y, &self.w_b) + gamma * self.tr_b);
        for (u, g) in z[1..].chunks(self.n).zip(out[1..].chunks_mut(self.n)) {
            problem.op.adjoint_matvec(&self.grad_y, u, g);
            for (gi, ui) in g.iter_mut().zip(u) {
                *gi = 2.0 * (*gi + gamma * ui);
            }
        }
    }
}

/// L-BFGS direction `−H∇` from the stored pairs (two-loop recursion).
fn lbfgs_direction(grad: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, dir: &mut [f64]) {
    dir.copy_from_slice(grad);
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, dir);
        axpy(-a, y, dir);
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.back() {
        let scale = dot(s, y) / dot(y, y);
        dir.iter_mut().for_each(|d| *d *= scale);
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, dir);
        axpy(a - b, s, dir);
    }
    dir.iter_mut().for_each(|d| *d = -*d);
}

pub(crate) fn greedy_step_counted<Op: MeasurementOperator, F: Objective>(
    state: &mut SdpIterate,
    oracle: &mut Oracle<'_, Op, F>,
    config: &SdpConfig,
    k: usize,
) -> Result<GreedyOutcome> {
    let problem = oracle.problem;
    let d = problem.op.len();
    let n = problem.side();
    let gamma = problem.trace_penalty;
    let f_before = oracle.value(&state.y, state.tr_acc);

    let old_cols: Vec<Vec<f64>> = state.atoms.clone();
    let mut gram = vec![0.0; d];
    let mut w_b: Vec<f64> = state
        .y
        .iter()
        .zip(&problem.offset)
        .map(|(y, z)| y + z)
        .collect();
    let mut tr_b = state.tr_acc;
    for u in &old_cols {
        problem.op.gram(u, &mut gram);
        axpy(-1.0, &gram, &mut w_b);
        tr_b -= dot(u, u);
    }
    let tr_b = tr_b.max(0.0);

    let mut cols = old_cols.clone();
    let mut seeded = false;
    if cols.len() < config.greedy_rank {
        let mut a = vec![0.0; d];
        oracle.gradient(&state.y, &mut a);
        let pair = oracle.min_eig(&a, &config.lanczos, k)?;
        if pair.value < 0.0 {
            let q = pair.vector;
            problem.op.gram(&q, &mut gram);
            let theta = oracle.minimize_line(&state.y, &gram, gamma * dot(&q, &q), None)?;
            if theta > 0.0 {
                let root = theta.sqrt();
                cols.push(q.iter().map(|v| root * v).collect());
                seeded = true;
            }
        }
    }

    let mut fac = Factored {
        oracle,
        n,
        w_b,
        tr_b,
        gram: vec![0.0; d],
        grad_y: vec![0.0; d],
    };
    let mut z = Vec::with_capacity(1 + n * cols.len());
    z.push(1.0);
    cols.iter().for_each(|u| z.extend_from_slice(u));
    let dim = z.len();
    let mut y = vec![0.0; d];
    let mut f_cur = fac.value(&z, &mut y);
    let mut grad = vec![0.0; dim];
    fac.gradient(&z, &y, &mut grad);
    let mut dir = vec![0.0; dim];
    let mut trial = vec![0.0; dim];
    let mut trial_y = vec![0.0; d];
    let mut trial_grad = vec![0.0; dim];
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iters = 0;

    for _ in 0..config.greedy.max_iters {
        if !all_finite(&grad) || dot(&grad, &grad) == 0.0 {
            break;
        }
        lbfgs_direction(&grad, &pairs, &mut dir);
        let mut slope = dot(&grad, &dir);
        if !(slope < 0.0) {
            pairs.clear();
            dir.iter_mut().zip(&grad).for_each(|(d, g)| *d = -g);
            slope = -dot(&grad, &grad);
        }
        let mut step = if pairs.is_empty() {
            1.0 / norm2(&grad).max(1.0)
        } else {
            1.0
        };
        let mut accepted = false;
        for _ in 0..60 {
            trial
                .iter_mut()
                .zip(&z)
                .zip(&dir)
                .for_each(|((x, z), d)| *x = z + step * d);
            let f_trial = fac.value(&trial, &mut trial_y);
            if f_trial.is_finite() && f_trial <= f_cur + config.greedy.armijo * step * slope {
                f_cur = f_trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        fac.gradient(&trial, &trial_y, &mut trial_grad);
        let s_vec: Vec<f64> = trial.iter().zip(&z).map(|(a, b)| a - b).collect();
        let y_vec: Vec<f64> = trial_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s_vec, &y_vec);
        if sy > 1e-12 * norm2(&s_vec) * norm2(&y_vec) {
            if pairs.len() == config.greedy.memory.max(1) {
                pairs.pop_front();
            }
            pairs.push_back((s_vec, y_vec, 1.0 / sy));
        }
        core::mem::swap(&mut z, &mut trial);
        core::mem::swap(&mut y, &mut trial_y);
        core::mem::swap(&mut grad, &mut trial_grad);
        iters += 1;
    }

    if !(f_cur < f_before) || !all_finite(&y) {
        return Err(Error::InnerSolverStall);
    }

    let t = z[0];
    let cols: Vec<Vec<f64>> = z[1..].chunks(n).map(|c| c.to_vec()).collect();
    let t2 = t * t;
    let tr_new = fac.measure(&z, &mut y);
    for u in &old_cols {
        state.sketch.add_rank_one(u, -1.0);
    }
    state.sketch.scale(t2);
    for u in &cols {
        state.sketch.add_rank_one(u, 1.0);
    }
    if let Some(x) = state.dense_x.as_mut() {
        for u in &old_cols {
            let v = nalgebra::DVector::from_column_slice(u);
            x.ger(-1.0, &v, &v, 1.0);
        }
        *x *= t2;
        for u in &cols {
            let v = nalgebra::DVector::from_column_slice(u);
            x.ger(1.0, &v, &v, 1.0);
        }
    }
    state.y = y;
    state.tr_acc = tr_new;
    state.atoms = cols;
    Ok(GreedyOutcome {
        f_before,
        f_after: f_cur,
        inner_iters: iters,
        seeded,
    })
}
