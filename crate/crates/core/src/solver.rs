//! The conic descent loop.
//!
//! Each iteration `k`:
//!
//! 1. `η_k = argmin_{η ≥ 0} f(η x_k)` (ray minimization),
//! 2. `g_k = (1 − δ_k) g_{k−1} + δ_k ∇f(η_k x_k)` (momentum average),
//! 3. `v_k = argmin ⟨g_k, v⟩` over `v ∈ K, ‖v‖ ≤ 1`,
//! 4. `θ_k = argmin_{θ ≥ 0} f(η_k x_k + θ v_k)` (or the `2M/(k+2)` heuristic),
//! 5. `x_{k+1} = η_k x_k + θ_k v_k`.
//!
//! With `δ_k = 2/(k+2)` this is MOCO; with `δ_k ≡ 1` it is plain CD. The loop
//! stops as soon as the dual certificate `−⟨g_k, v_k⟩` drops to `√ε`.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // method resolution falls back to std when it is linked
use num_traits::Float;

use crate::cones::{Cone, NormPair};
use crate::error::{Error, Result};
use crate::line_search::{argmin_quadratic, golden_section};
use crate::objective::Objective;
use crate::vector::{all_finite, axpy, dot, is_zero};

/// A conic program `min f(x) s.t. x ∈ K`.
#[derive(Debug, Clone)]
pub struct ConicProgram<F> {
    pub objective: F,
    pub cone: Cone,
    /// Lipschitz constant of `∇f` w.r.t. the cone's norm pair, when known.
    pub smoothness: Option<f64>,
}

impl<F: Objective> ConicProgram<F> {
    pub fn new(objective: F, cone: Cone) -> Result<Self> {
        if objective.dim() != cone.dim() {
            return Err(Error::DimensionMismatch {
                expected: cone.dim(),
                found: objective.dim(),
            });
        }
        Ok(Self {
            objective,
            cone,
            smoothness: None,
        })
    }

    pub fn with_smoothness(mut self, lipschitz: f64) -> Self {
        self.smoothness = Some(lipschitz);
        self
    }

    pub fn dim(&self) -> usize {
        self.cone.dim()
    }

    pub fn norm_pair(&self) -> NormPair {
        self.cone.norm_pair()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentumMode {
    /// `δ_k ≡ 1`
    Cd,
    /// `δ_k = 2/(k+2)`
    Moco,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    LineSearch,
    /// `θ_k = 2M/(k+2)` with `M` an estimate of `‖x*‖`.
    Heuristic {
        m: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub tol_eps: f64,
    pub momentum: MomentumMode,
    pub step_rule: StepRule,
    /// Greedy step period for SDP solves; 0 disables it.
    pub greedy_period: usize,
    pub rng_seed: u64,
    pub trace_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 300,
            tol_eps: 0.0,
            momentum: MomentumMode::Moco,
            step_rule: StepRule::LineSearch,
            greedy_period: 0,
            rng_seed: 0,
            trace_every: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be positive"));
        }
        if !(self.tol_eps >= 0.0) {
            return Err(Error::InvalidConfig("tol_eps must be nonnegative"));
        }
        if self.trace_every == 0 {
            return Err(Error::InvalidConfig("trace_every must be positive"));
        }
        if let StepRule::Heuristic { m } = self.step_rule {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::InvalidConfig("heuristic step rule needs M > 0"));
            }
        }
        Ok(())
    }

    pub(crate) fn stop_threshold(&self) -> f64 {
        self.tol_eps.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIters,
}

/// One row of a solve trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    /// `f(η_k x_k)`
    pub f_value: f64,
    /// `−⟨g_k, v_k⟩`
    pub dual_cert: f64,
    /// `⟨η_k x_k, ∇f(η_k x_k)⟩`
    pub cs_residual: f64,
    pub eta: f64,
    pub theta: f64,
    /// Elapsed wall time since the start of the solve; not reproducible.
    pub wall_ms: f64,
    /// `λ_min` of the LMO matrix, for SDP solves.
    pub lambda_min: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    pub records: Vec<TraceRecord>,
}

impl SolveTrace {
    pub const CSV_COLUMNS: [&'static str; 7] =
        ["k", "f", "dual_cert", "cs", "eta", "theta", "wall_ms"];

    /// Whether `f_value` never increases by more than `slack` between records.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.records
            .windows(2)
            .all(|w| w[1].f_value <= w[0].f_value + slack)
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    /// Calls to the value oracle or the closed-form restriction.
    pub objective_evals: usize,
    pub gradient_evals: usize,
    pub ray_searches: usize,
    /// One-dimensional searches along `v_k`.
    pub line_searches: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    /// `η_K x_K`
    pub final_point: Vec<f64>,
    pub status: Status,
    pub trace: SolveTrace,
    /// `⟨g_K, v_K⟩` at the last iteration (non-positive).
    pub certified_dual_cert: f64,
    pub iterations: usize,
    pub stats: SolveStats,
}

/// Full solver state at iteration `k`, handed to [`SolveHooks::on_iterate`].
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub k: usize,
    pub x: Vec<f64>,
    /// `η_k x_k`
    pub point: Vec<f64>,
    /// `∇f(η_k x_k)`
    pub grad: Vec<f64>,
    pub f_value: f64,
    pub g: Vec<f64>,
    pub v: Vec<f64>,
    pub eta: f64,
    pub theta: f64,
    pub delta: f64,
}

/// Observation points into a running solve.
pub trait SolveHooks {
    /// Milliseconds since the solve started. The core crate has no clock.
    fn elapsed_ms(&mut self) -> f64 {
        0.0
    }

    fn on_iterate(&mut self, _state: &IterateState) {}

    /// Called as each trace row is produced, before the solve finishes.
    fn on_record(&mut self, _record: &TraceRecord) {}
}

pub struct NoHooks;

impl SolveHooks for NoHooks {}

pub fn delta_schedule(k: usize, mode: MomentumMode) -> f64 {
    match mode {
        MomentumMode::Moco => 2.0 / (k as f64 + 2.0),
        MomentumMode::Cd => 1.0,
    }
}

/// `(1 − δ)·g_prev + δ·grad`
pub fn momentum_update(g_prev: &[f64], grad: &[f64], delta: f64) -> Vec<f64> {
    g_prev
        .iter()
        .zip(grad)
        .map(|(g, d)| (1.0 - delta) * g + delta * d)
        .collect()
}

/// `−⟨g, v⟩`, which equals `dist_*(g, K*)` when `v` is the LMO output for `g`.
pub fn dual_certificate(g: &[f64], v: &[f64]) -> f64 {
    -dot(g, v)
}

struct Counted<'a, F> {
    f: &'a F,
    stats: SolveStats,
}

impl<F: Objective> Counted<'_, F> {
    fn value(&mut self, x: &[f64]) -> f64 {
        self.stats.objective_evals += 1;
        self.f.value(x)
    }

    fn gradient(&mut self, x: &[f64], out: &mut [f64]) {
        self.stats.gradient_evals += 1;
        self.f.gradient(x, out)
    }

    /// `argmin_{s ≥ 0} f(base + s·dir)`.
    fn minimize_along(&mut self, base: &[f64], dir: &[f64]) -> Result<f64> {
        if is_zero(dir) {
            return Ok(0.0);
        }
        self.stats.objective_evals += 1;
        if let Some(q) = self.f.restriction(base, dir) {
            return argmin_quadratic(q, None);
        }
        let mut grad = vec![0.0; base.len()];
        self.gradient(base, &mut grad);
        if dot(&grad, dir) >= 0.0 {
            return Ok(0.0);
        }
        let mut p = vec![0.0; base.len()];
        let f = self.f;
        let mut evals = 0;
        let s = golden_section(
            |s| {
                evals += 1;
                for ((pi, b), d) in p.iter_mut().zip(base).zip(dir) {
                    *pi = b + s * d;
                }
                f.value(&p)
            },
            None,
        );
        self.stats.objective_evals += evals;
        s
    }

    fn ray(&mut self, x: &[f64]) -> Result<f64> {
        self.stats.ray_searches += 1;
        if is_zero(x) {
            return Ok(1.0);
        }
        let origin = vec![0.0; x.len()];
        self.minimize_along(&origin, x)
    }
}

/// `argmin_{η ≥ 0} f(η x)`; returns 1 for `x = 0`.
pub fn ray_minimize<F: Objective>(problem: &ConicProgram<F>, x: &[f64]) -> Result<f64> {
    Counted {
        f: &problem.objective,
        stats: SolveStats::default(),
    }
    .ray(x)
}

/// `argmin_{θ ≥ 0} f(base + θ·direction)`.
pub fn line_search_step<F: Objective>(
    problem: &ConicProgram<F>,
    base: &[f64],
    direction: &[f64],
) -> Result<f64> {
    Counted {
        f: &problem.objective,
        stats: SolveStats::default(),
    }
    .minimize_along(base, direction)
}

/// Complementary slackness `⟨x, ∇f(x)⟩` and squared dual infeasibility
/// `dist_*(∇f(x), K*)²` at `x`.
pub fn kkt_residuals<F: Objective>(problem: &ConicProgram<F>, x: &[f64]) -> Result<(f64, f64)> {
    let mut grad = vec![0.0; x.len()];
    problem.objective.gradient(x, &mut grad);
    let dist = problem.cone.dual_distance(&grad)?;
    Ok((dot(x, &grad), dist * dist))
}

pub fn solve<F: Objective>(
    problem: &ConicProgram<F>,
    config: &SolverConfig,
) -> Result<SolveResult> {
    solve_with(problem, config, None, &mut NoHooks)
}

/// Runs the solver from `x0` (or the cone's default point), reporting every
/// iteration to `hooks`.
pub fn solve_with<F: Objective, H: SolveHooks + ?Sized>(
    problem: &ConicProgram<F>,
    config: &SolverConfig,
    x0: Option<&[f64]>,
    hooks: &mut H,
) -> Result<SolveResult> {
    config.validate()?;
    let dim = problem.dim();
    let mut x = match x0 {
        Some(x0) if x0.len() != dim => {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: x0.len(),
            })
        }
        Some(x0) => x0.to_vec(),
        None => problem.cone.default_point(),
    };

    let mut oracle = Counted {
        f: &problem.objective,
        stats: SolveStats::default(),
    };
    let mut g = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    let mut trace = SolveTrace::default();
    let threshold = config.stop_threshold();
    let mut status = Status::MaxIters;
    let mut last_value;
    let mut k = 0;

    let final_point = loop {
        let eta = oracle.ray(&x)?;
        let point: Vec<f64> = x.iter().map(|xi| eta * xi).collect();
        let f_value = oracle.value(&point);
        oracle.gradient(&point, &mut grad);
        if !f_value.is_finite() || !all_finite(&grad) {
            return Err(Error::NonFiniteValue { iteration: k });
        }
        let delta = delta_schedule(k, config.momentum);
        g = momentum_update(&g, &grad, delta);
        let lmo = problem.cone.lmo(&g)?;
        let cert = 0.0 - lmo.value;
        last_value = lmo.value;
        let cs = dot(&point, &grad);

        let done = cert <= threshold || k == config.max_iters;
        if cert <= threshold {
            status = Status::Converged;
        }

        let theta = if done {
            0.0
        } else {
            match config.step_rule {
                StepRule::LineSearch => {
                    oracle.stats.line_searches += 1;
                    oracle.minimize_along(&point, &lmo.v)?
                }
                StepRule::Heuristic { m } => 2.0 * m / (k as f64 + 2.0),
            }
        };

        if done || k % config.trace_every == 0 {
            let record = TraceRecord {
                k,
                f_value,
                dual_cert: cert,
                cs_residual: cs,
                eta,
                theta,
                wall_ms: hooks.elapsed_ms(),
                lambda_min: None,
            };
            hooks.on_record(&record);
            trace.records.push(record);
        }

        let mut next = point.clone();
        if theta > 0.0 {
            axpy(theta, &lmo.v, &mut next);
        }
        let state = IterateState {
            k,
            x: core::mem::replace(&mut x, next),
            point,
            grad: grad.clone(),
            f_value,
            g: g.clone(),
            v: lmo.v,
            eta,
            theta,
            delta,
        };
        hooks.on_iterate(&state);

        if done {
            break state.point;
        }
        k += 1;
    };

    Ok(SolveResult {
        final_point,
        status,
        trace,
        certified_dual_cert: last_value,
        iterations: k,
        stats: oracle.stats,
    })
}
