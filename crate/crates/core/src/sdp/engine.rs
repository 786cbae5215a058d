use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // method resolution falls back to std when it is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::lanczos::{min_eig_lanczos, EigPair, LanczosConfig};
use crate::line_search::{argmin_quadratic, golden_section};
use crate::objective::Objective;
use crate::solver::{
    delta_schedule, SolveResult, SolveStats, SolveTrace, Status, StepRule, TraceRecord,
};
use crate::vector::{all_finite, dot, is_zero};

use super::greedy::{greedy_step_counted, GreedyOutcome};
use super::operator::MeasurementOperator;
use super::{SdpConfig, SdpIterate, SdpProblem};

/// What an observer sees at iteration `k`, after ray minimization and the
/// eigen-solve but before the step along `q_k` is applied. `state` holds
/// `η_k X_k`.
#[derive(Debug)]
pub struct SdpIterationView<'a> {
    pub k: usize,
    pub state: &'a SdpIterate,
    /// `∇f(y)` at `η_k X_k`.
    pub grad: &'a [f64],
    pub f_value: f64,
    /// `λ_min(G*(g̃_k) + γI)`
    pub lambda_min: f64,
    pub q: &'a [f64],
    pub eta: f64,
    pub theta: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyRecord {
    /// Iteration after which the greedy step ran.
    pub k: usize,
    pub f_before: f64,
    pub f_after: f64,
    pub inner_iters: usize,
    pub stalled: bool,
}

pub trait SdpHooks {
    fn elapsed_ms(&mut self) -> f64 {
        0.0
    }

    fn on_iterate(&mut self, _view: &SdpIterationView<'_>) {}

    fn on_greedy(&mut self, _record: &GreedyRecord, _state: &SdpIterate) {}

    /// Called as each trace row is produced, before the solve finishes.
    fn on_record(&mut self, _record: &TraceRecord) {}
}

pub struct NoSdpHooks;

impl SdpHooks for NoSdpHooks {}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpOutcome {
    /// `final_point` is `y_K = G(η_K X_K) − z`.
    pub result: SolveResult,
    /// Holds `η_K X_K` (sketch, trace, optional dense copy).
    pub iterate: SdpIterate,
    pub greedy_log: Vec<GreedyRecord>,
}

/// `2M / (k + 2)`
pub fn theta_heuristic(k: usize, m: f64) -> f64 {
    2.0 * m / (k as f64 + 2.0)
}

pub(crate) struct Oracle<'a, Op, F> {
    pub problem: &'a SdpProblem<Op, F>,
    pub stats: SolveStats,
}

impl<Op: MeasurementOperator, F: Objective> Oracle<'_, Op, F> {
    pub fn value(&mut self, y: &[f64], trace: f64) -> f64 {
        self.stats.objective_evals += 1;
        self.problem.value(y, trace)
    }

    pub fn gradient(&mut self, y: &[f64], out: &mut [f64]) {
        self.stats.gradient_evals += 1;
        self.problem.objective.gradient(y, out);
    }

    /// `argmin_{s ∈ [0, upper]} f(base + s·dir) + linear·s`.
    pub fn minimize_line(
        &mut self,
        base: &[f64],
        dir: &[f64],
        linear: f64,
        upper: Option<f64>,
    ) -> Result<f64> {
        self.stats.objective_evals += 1;
        if let Some(mut q) = self.problem.objective.restriction(base, dir) {
            q.b += linear;
            return argmin_quadratic(q, upper);
        }
        let f = &self.problem.objective;
        let mut p = vec![0.0; base.len()];
        let mut evals = 0;
        let s = golden_section(
            |s| {
                evals += 1;
                for ((pi, b), d) in p.iter_mut().zip(base).zip(dir) {
                    *pi = b + s * d;
                }
                f.value(&p) + linear * s
            },
            upper,
        );
        self.stats.objective_evals += evals;
        s
    }

    /// Minimum eigenpair of `G*(a) + γI`, retrying once with a fresh start
    /// vector and the full Krylov budget when Lanczos does not converge.
    pub fn min_eig(&mut self, a: &[f64], cfg: &LanczosConfig, k: usize) -> Result<EigPair> {
        let problem = self.problem;
        let n = problem.side();
        let gamma = problem.trace_penalty;
        let apply = |v: &[f64], out: &mut [f64]| {
            problem.op.adjoint_matvec(a, v, out);
            if gamma != 0.0 {
                for (o, vi) in out.iter_mut().zip(v) {
                    *o += gamma * vi;
                }
            }
        };
        let first = LanczosConfig {
            seed: cfg.seed.wrapping_add(k as u64),
            ..*cfg
        };
        match min_eig_lanczos(apply, n, &first) {
            Err(Error::EigFailure { .. }) => {
                let retry = LanczosConfig {
                    max_iters: n,
                    seed: first.seed ^ 0x9E37_79B9_7F4A_7C15,
                    ..*cfg
                };
                min_eig_lanczos(apply, n, &retry)
            }
            other => other,
        }
    }

    /// `η = argmin_{η ≥ 0} f(η(y + z) − z) + γη·tr`; 1 when `X = 0`.
    pub fn ray(&mut self, state: &SdpIterate) -> Result<f64> {
        self.stats.ray_searches += 1;
        let z = &self.problem.offset;
        let w: Vec<f64> = state.y.iter().zip(z).map(|(y, z)| y + z).collect();
        let linear = self.problem.trace_penalty * state.tr_acc;
        if is_zero(&w) && linear == 0.0 {
            return Ok(1.0);
        }
        let base: Vec<f64> = z.iter().map(|z| -z).collect();
        self.minimize_line(&base, &w, linear, None)
    }
}

/// Memory-efficient MOCO (or CD, by `config.solver.momentum`) for
/// `min f(G(X) − z) + γ tr(X)` over `X ⪰ 0`, starting from `X₀ = 0`.
///
/// Stops once `λ_k ≥ −√ε`. With `greedy_period = p > 0`, a greedy
/// Burer–Monteiro step runs after every `p`-th iteration.
pub fn sdp_solve<Op, F, H>(
    problem: &SdpProblem<Op, F>,
    config: &SdpConfig,
    hooks: &mut H,
) -> Result<SdpOutcome>
where
    Op: MeasurementOperator,
    F: Objective,
    H: SdpHooks + ?Sized,
{
    let solver = &config.solver;
    solver.validate()?;
    if config.sketch_width == 0 {
        return Err(Error::InvalidConfig("sketch width must be positive"));
    }
    let d = problem.op.len();
    let threshold = solver.tol_eps.sqrt();
    let mut oracle = Oracle {
        problem,
        stats: SolveStats::default(),
    };
    let mut state = SdpIterate::new(problem, config);
    let mut grad = vec![0.0; d];
    let mut gram = vec![0.0; d];
    let mut trace = SolveTrace::default();
    let mut greedy_log = Vec::new();
    let mut status = Status::MaxIters;
    let mut last_value;
    let mut k = 0;

    loop {
        let eta = oracle.ray(&state)?;
        state.scale(eta, &problem.offset);
        let f_value = oracle.value(&state.y, state.tr_acc);
        oracle.gradient(&state.y, &mut grad);
        if !f_value.is_finite() || !all_finite(&grad) {
            return Err(Error::NonFiniteValue { iteration: k });
        }
        let delta = delta_schedule(k, solver.momentum);
        for (g, a) in state.g_tilde.iter_mut().zip(&grad) {
            *g = (1.0 - delta) * *g + delta * a;
        }
        let pair = oracle.min_eig(&state.g_tilde, &config.lanczos, k)?;
        let lambda = pair.value;
        last_value = lambda.min(0.0);
        let cert = (-lambda).max(0.0);
        let cs = state
            .y
            .iter()
            .zip(&problem.offset)
            .map(|(y, z)| y + z)
            .zip(&grad)
            .map(|(w, a)| w * a)
            .sum::<f64>()
            + problem.trace_penalty * state.tr_acc;

        let converged = lambda >= -threshold;
        if converged {
            status = Status::Converged;
        }
        let done = converged || k == solver.max_iters;

        let theta = if done || lambda >= 0.0 {
            0.0
        } else {
            match solver.step_rule {
                StepRule::LineSearch => {
                    problem.op.gram(&pair.vector, &mut gram);
                    oracle.stats.line_searches += 1;
                    oracle.minimize_line(&state.y, &gram, problem.trace_penalty, None)?
                }
                StepRule::Heuristic { m } => {
                    problem.op.gram(&pair.vector, &mut gram);
                    theta_heuristic(k, m)
                }
            }
        };

        if done || k % solver.trace_every == 0 {
            let record = TraceRecord {
                k,
                f_value,
                dual_cert: cert,
                cs_residual: cs,
                eta,
                theta,
                wall_ms: hooks.elapsed_ms(),
                lambda_min: Some(lambda),
            };
            hooks.on_record(&record);
            trace.records.push(record);
        }
        hooks.on_iterate(&SdpIterationView {
            k,
            state: &state,
            grad: &grad,
            f_value,
            lambda_min: lambda,
            q: &pair.vector,
            eta,
            theta,
            delta,
        });
        if done {
            break;
        }

        if theta > 0.0 {
            let q = &pair.vector;
            state.add_rank_one(q, theta, &gram, dot(q, q));
            let root = theta.sqrt();
            state.atoms.push(q.iter().map(|v| root * v).collect());
            while state.atoms.len() > config.greedy_rank {
                state.atoms.remove(0);
            }
        }
        k += 1;
        state.k = k;

        if solver.greedy_period > 0 && k % solver.greedy_period == 0 {
            let f_before = oracle.value(&state.y, state.tr_acc);
            let record = match greedy_step_counted(&mut state, &mut oracle, config, k) {
                Ok(GreedyOutcome {
                    f_after,
                    inner_iters,
                    ..
                }) => GreedyRecord {
                    k,
                    f_before,
                    f_after,
                    inner_iters,
                    stalled: false,
                },
                Err(Error::InnerSolverStall) => GreedyRecord {
                    k,
                    f_before,
                    f_after: f_before,
                    inner_iters: 0,
                    stalled: true,
                },
                Err(e) => return Err(e),
            };
            hooks.on_greedy(&record, &state);
            greedy_log.push(record);
        }
    }

    Ok(SdpOutcome {
        result: SolveResult {
            final_point: state.y.clone(),
            status,
            trace,
            certified_dual_cert: last_value,
            iterations: k,
            stats: oracle.stats,
        },
        iterate: state,
        greedy_log,
    })
}

/// One Frank–Wolfe step on `{X ⪰ 0, tr X ≤ τ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FwStep {
    /// Objective before the step.
    pub f_value: f64,
    pub lambda_min: f64,
    /// Step on the segment towards the atom, in `[0, 1]`.
    pub theta: f64,
    /// Frank–Wolfe gap `⟨∇, X − atom⟩`.
    pub gap: f64,
}

/// Frank–Wolfe on the trace-bounded set. The atom is `τ q qᵀ` when
/// `λ_min(G*(∇f) + γI) < 0` and `0` otherwise; the step is an exact search
/// over `θ ∈ [0, 1]` on the segment `(1 − θ)X + θ·atom`.
pub fn fw_baseline_step<Op: MeasurementOperator, F: Objective>(
    state: &mut SdpIterate,
    problem: &SdpProblem<Op, F>,
    trace_bound: f64,
    lanczos: &LanczosConfig,
) -> Result<FwStep> {
    let mut oracle = Oracle {
        problem,
        stats: SolveStats::default(),
    };
    fw_step_counted(state, &mut oracle, trace_bound, lanczos)
}

fn fw_step_counted<Op: MeasurementOperator, F: Objective>(
    state: &mut SdpIterate,
    oracle: &mut Oracle<'_, Op, F>,
    trace_bound: f64,
    lanczos: &LanczosConfig,
) -> Result<FwStep> {
    if !(trace_bound > 0.0) {
        return Err(Error::InvalidConfig("trace bound must be positive"));
    }
    let problem = oracle.problem;
    let d = problem.op.len();
    let k = state.k;
    let f_value = oracle.value(&state.y, state.tr_acc);
    let mut grad = vec![0.0; d];
    oracle.gradient(&state.y, &mut grad);
    if !f_value.is_finite() || !all_finite(&grad) {
        return Err(Error::NonFiniteValue { iteration: k });
    }
    state.g_tilde.copy_from_slice(&grad);
    let pair = oracle.min_eig(&grad, lanczos, k)?;
    let use_atom = pair.value < 0.0;

    let mut gram = vec![0.0; d];
    let atom_weight = if use_atom { trace_bound } else { 0.0 };
    if use_atom {
        problem.op.gram(&pair.vector, &mut gram);
    }
    // direction in y-space: atom − X, i.e. τ·G(qqᵀ) − (y + z)
    let dir: Vec<f64> = state
        .y
        .iter()
        .zip(&problem.offset)
        .zip(&gram)
        .map(|((y, z), h)| atom_weight * h - (y + z))
        .collect();
    let linear = problem.trace_penalty * (atom_weight - state.tr_acc);
    let w_dot_grad: f64 = state
        .y
        .iter()
        .zip(&problem.offset)
        .zip(&grad)
        .map(|((y, z), a)| (y + z) * a)
        .sum();
    let gap = w_dot_grad + problem.trace_penalty * state.tr_acc - atom_weight * pair.value.min(0.0);

    oracle.stats.line_searches += 1;
    let theta = if is_zero(&dir) && linear == 0.0 {
        0.0
    } else {
        oracle.minimize_line(&state.y, &dir, linear, Some(1.0))?
    };
    if theta > 0.0 {
        state.scale(1.0 - theta, &problem.offset);
        if use_atom {
            let q = &pair.vector;
            state.add_rank_one(q, theta * atom_weight, &gram, dot(q, q));
        }
    }
    state.k += 1;
    Ok(FwStep {
        f_value,
        lambda_min: pair.value,
        theta,
        gap,
    })
}

/// Runs `config.solver.max_iters` Frank–Wolfe steps on `{X ⪰ 0, tr X ≤ τ}`.
///
/// Trace rows report `eta = 1 − θ`, `theta = θτ` (the weight placed on the
/// unit-trace atom) and the Frank–Wolfe gap in `dual_cert`.
pub fn fw_solve<Op, F, H>(
    problem: &SdpProblem<Op, F>,
    config: &SdpConfig,
    trace_bound: f64,
    hooks: &mut H,
) -> Result<SdpOutcome>
where
    Op: MeasurementOperator,
    F: Objective,
    H: SdpHooks + ?Sized,
{
    config.solver.validate()?;
    let mut oracle = Oracle {
        problem,
        stats: SolveStats::default(),
    };
    let mut state = SdpIterate::new(problem, config);
    let mut trace = SolveTrace::default();
    let mut last = 0.0;
    for k in 0..=config.solver.max_iters {
        let step = if k == config.solver.max_iters {
            let f_value = oracle.value(&state.y, state.tr_acc);
            FwStep {
                f_value,
                lambda_min: f64::NAN,
                theta: 0.0,
                gap: f64::NAN,
            }
        } else {
            fw_step_counted(&mut state, &mut oracle, trace_bound, &config.lanczos)?
        };
        if !step.lambda_min.is_nan() {
            last = step.lambda_min.min(0.0);
        }
        if k == config.solver.max_iters || k % config.solver.trace_every == 0 {
            let record = TraceRecord {
                k,
                f_value: step.f_value,
                dual_cert: step.gap,
                cs_residual: f64::NAN,
                eta: 1.0 - step.theta,
                theta: step.theta * trace_bound,
                wall_ms: hooks.elapsed_ms(),
                lambda_min: (!step.lambda_min.is_nan()).then_some(step.lambda_min),
            };
            hooks.on_record(&record);
            trace.records.push(record);
        }
    }
    Ok(SdpOutcome {
        result: SolveResult {
            final_point: state.y.clone(),
            status: Status::MaxIters,
            trace,
            certified_dual_cert: last,
            iterations: config.solver.max_iters,
            stats: oracle.stats,
        },
        iterate: state,
        greedy_log: Vec::new(),
    })
}
