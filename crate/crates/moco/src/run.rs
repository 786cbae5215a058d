//! Experiment runner behind the command-line tool.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use moco_core::sdp::{
    fw_solve, sdp_solve, GreedyRecord, MeasurementOperator, SdpConfig, SdpHooks, SdpIterate,
    SdpOutcome, SdpProblem,
};
use moco_core::{
    solve_with, MomentumMode, Objective, SolveHooks, SolveResult, SolverConfig, Status, StepRule,
    TraceRecord,
};
use serde::Serialize;
use serde_json::json;

use crate::io::{self, FormatError, Instance, TraceWriter};
use crate::problems::{
    self, build_matcomp, build_phase_retrieval, recovery_error, synthetic_signal,
};

/// Output of `git describe` at build time.
pub const BUILD_DESCRIBE: &str = env!("MOCO_GIT_DESCRIBE");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Toy,
    Matcomp,
    Phase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    /// Conic descent (no momentum).
    Cd,
    /// Momentum conic descent with line search.
    Moco,
    /// MOCO with periodic greedy Burer–Monteiro steps.
    Mocog,
    /// MOCO with the step `θ_k = 2M/(k+2)` instead of a line search.
    Mocoh,
    /// Frank–Wolfe on `{X ⪰ 0, tr X ≤ τ}`.
    Fw,
}

impl FromStr for ProblemKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Self as clap::ValueEnum>::from_str(s, true)
    }
}

impl FromStr for Algo {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Self as clap::ValueEnum>::from_str(s, true)
    }
}

fn serialize_real<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&v.to_string())
    }
}

/// Fully resolved run configuration; echoed into every summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSpec {
    pub problem: ProblemKind,
    pub algo: Algo,
    pub iters: usize,
    pub eps: f64,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub gamma: f64,
    #[serde(serialize_with = "serialize_real")]
    pub snr_db: f64,
    pub greedy_every: usize,
    pub greedy_rank: usize,
    pub sketch_r: usize,
    pub recon_r: usize,
    /// `M` for `mocoh`; derived from the data when absent.
    pub m_estimate: Option<f64>,
    /// Trace bound for `fw`; twice the trace estimate when absent.
    pub tau: Option<f64>,
    /// PGM image used as the phase-retrieval signal.
    pub signal: Option<PathBuf>,
    /// Load this instance file instead of building one.
    pub instance: Option<PathBuf>,
    pub dump_instance: bool,
    pub test_mode: bool,
    pub trace_every: usize,
    pub out_prefix: PathBuf,
}

impl RunSpec {
    pub fn defaults(problem: ProblemKind, algo: Algo) -> Self {
        let (n, gamma, greedy_rank) = match problem {
            ProblemKind::Toy => (2, 0.0, 1),
            ProblemKind::Matcomp => (100, 0.0, 3),
            ProblemKind::Phase => (64, 5e-5, 1),
        };
        Self {
            problem,
            algo,
            iters: 300,
            eps: 0.0,
            seed: 0,
            n,
            m: 10,
            gamma,
            snr_db: 20.0,
            greedy_every: 10,
            greedy_rank,
            sketch_r: 3,
            recon_r: 1,
            m_estimate: None,
            tau: None,
            signal: None,
            instance: None,
            dump_instance: false,
            test_mode: false,
            trace_every: 1,
            out_prefix: PathBuf::from("run"),
        }
    }

    /// Sets one field from its textual `key = value` form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), RunError> {
        fn parse<T: FromStr>(key: &str, v: &str) -> Result<T, RunError> {
            v.parse()
                .map_err(|_| RunError::Config(format!("invalid value {v:?} for {key}")))
        }
        fn real(key: &str, v: &str) -> Result<f64, RunError> {
            match v.to_ascii_lowercase().as_str() {
                "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
                _ => parse(key, v),
            }
        }
        let v = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "problem" => self.problem = parse(key, v)?,
            "algo" => self.algo = parse(key, v)?,
            "iters" => self.iters = parse(key, v)?,
            "eps" => self.eps = real(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "n" => self.n = parse(key, v)?,
            "m" => self.m = parse(key, v)?,
            "gamma" => self.gamma = real(key, v)?,
            "snr_db" | "snr" => self.snr_db = real(key, v)?,
            "greedy_every" => self.greedy_every = parse(key, v)?,
            "greedy_rank" => self.greedy_rank = parse(key, v)?,
            "sketch_r" => self.sketch_r = parse(key, v)?,
            "recon_r" => self.recon_r = parse(key, v)?,
            "m_estimate" => self.m_estimate = Some(real(key, v)?),
            "tau" => self.tau = Some(real(key, v)?),
            "signal" => self.signal = Some(PathBuf::from(v)),
            "instance" => self.instance = Some(PathBuf::from(v)),
            "dump_instance" => self.dump_instance = parse(key, v)?,
            "test_mode" => self.test_mode = parse(key, v)?,
            "trace_every" => self.trace_every = parse(key, v)?,
            "out" | "out_prefix" => self.out_prefix = PathBuf::from(v),
            other => return Err(RunError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |msg: &str| Err(RunError::Config(msg.to_string()));
        match (self.problem, self.algo) {
            (ProblemKind::Toy, Algo::Fw) => return bad("fw runs only on matcomp and phase"),
            (ProblemKind::Toy, Algo::Mocog) => return bad("the greedy step needs an SDP problem"),
            (ProblemKind::Toy, Algo::Mocoh) if self.m_estimate.is_none() => {
                return bad("mocoh on the toy problem needs --m-estimate")
            }
            _ => {}
        }
        if self.trace_every == 0 {
            return bad("trace_every must be positive");
        }
        if !(self.eps >= 0.0) {
            return bad("eps must be nonnegative");
        }
        if let Some(m) = self.m_estimate {
            if !(m > 0.0 && m.is_finite()) {
                return bad("m_estimate must be positive");
            }
        }
        if let Some(t) = self.tau {
            if !(t > 0.0 && t.is_finite()) {
                return bad("tau must be positive");
            }
        }
        if self.problem != ProblemKind::Toy {
            if self.sketch_r == 0 {
                return bad("sketch_r must be positive");
            }
            if self.recon_r + 1 >= self.sketch_r {
                return bad("recon_r + 1 must be below sketch_r");
            }
            if self.algo == Algo::Mocog && (self.greedy_every == 0 || self.greedy_rank == 0) {
                return bad("mocog needs greedy_every > 0 and greedy_rank > 0");
            }
        }
        Ok(())
    }

    pub fn trace_path(&self) -> PathBuf {
        with_suffix(&self.out_prefix, ".trace.csv")
    }

    pub fn summary_path(&self) -> PathBuf {
        with_suffix(&self.out_prefix, ".summary.json")
    }

    pub fn recon_path(&self) -> PathBuf {
        with_suffix(&self.out_prefix, ".recon.bin")
    }

    pub fn instance_path(&self) -> PathBuf {
        with_suffix(&self.out_prefix, ".instance.bin")
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            max_iters: self.iters,
            tol_eps: self.eps,
            momentum: if self.algo == Algo::Cd {
                MomentumMode::Cd
            } else {
                MomentumMode::Moco
            },
            step_rule: StepRule::LineSearch,
            greedy_period: if self.algo == Algo::Mocog {
                self.greedy_every
            } else {
                0
            },
            rng_seed: self.seed,
            trace_every: self.trace_every,
        }
    }
}

impl RunSpec {
    /// SDP engine settings for an `n × n` problem. The `mocoh` step rule is
    /// filled in by the runner once `M` is known.
    pub fn sdp_config(&self, n: usize) -> SdpConfig {
        let mut cfg = SdpConfig::for_side(n);
        cfg.solver = self.solver_config();
        cfg.lanczos.seed = self.seed;
        cfg.sketch_width = self.sketch_r;
        cfg.sketch_seed = self.seed;
        cfg.greedy_rank = self.greedy_rank;
        cfg.test_mode = self.test_mode;
        cfg
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Parses a line-oriented `key = value` file; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, RunError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| RunError::Config(format!("line {}: expected key = value", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Solver(_) => 3,
            RunError::Io(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Solver(_) => "solver",
            RunError::Io(_) => "io",
        }
    }

    /// One-line JSON for stderr.
    pub fn to_json(&self) -> String {
        json!({ "error": { "code": self.exit_code(), "kind": self.kind(), "message": self.to_string() } })
            .to_string()
    }
}

impl From<FormatError> for RunError {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::Malformed { .. } => RunError::Config(e.to_string()),
            _ => RunError::Io(e.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

impl From<problems::ProblemError> for RunError {
    fn from(e: problems::ProblemError) -> Self {
        RunError::Config(e.to_string())
    }
}

fn solver_error(e: moco_core::Error) -> RunError {
    match e {
        moco_core::Error::InvalidConfig(_) | moco_core::Error::DimensionMismatch { .. } => {
            RunError::Config(e.to_string())
        }
        _ => RunError::Solver(e.to_string()),
    }
}

/// Wall clock plus streaming trace output.
struct Recorder {
    start: Instant,
    trace: TraceWriter<BufWriter<File>>,
    error: Option<FormatError>,
    greedy: Vec<GreedyRecord>,
}

impl Recorder {
    fn record(&mut self, r: &TraceRecord) {
        if self.error.is_none() {
            if let Err(e) = self.trace.write(r) {
                self.error = Some(e);
            }
        }
    }

    fn ms(&self) -> f64 {
        self.start.elapsed().as_secs_f64() * 1e3
    }
}

impl SolveHooks for Recorder {
    fn elapsed_ms(&mut self) -> f64 {
        self.ms()
    }
    fn on_record(&mut self, r: &TraceRecord) {
        self.record(r)
    }
}

impl SdpHooks for Recorder {
    fn elapsed_ms(&mut self) -> f64 {
        self.ms()
    }
    fn on_record(&mut self, r: &TraceRecord) {
        self.record(r)
    }
    fn on_greedy(&mut self, g: &GreedyRecord, _state: &SdpIterate) {
        self.greedy.push(*g);
    }
}

/// What a run produced, as written to the summary file.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub status: &'static str,
    pub final_f: f64,
    pub final_certificate: f64,
    pub iterations: usize,
    pub wall_ms: f64,
    pub objective_evals: usize,
    pub gradient_evals: usize,
    pub ray_searches: usize,
    pub line_searches: usize,
    pub greedy_steps: usize,
    pub greedy_stalls: usize,
    pub m_estimate: Option<f64>,
    pub tau: Option<f64>,
    pub recovery_error: Option<f64>,
    pub config: RunSpec,
    pub build: &'static str,
}

/// Builds the instance, runs the solver and writes trace, summary and (for
/// phase retrieval) the reconstructed factor next to `out_prefix`.
pub fn run_experiment(spec: &RunSpec) -> Result<RunSummary, RunError> {
    spec.validate()?;
    if let Some(dir) = spec
        .out_prefix
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
    {
        fs::create_dir_all(dir)?;
    }
    let trace = TraceWriter::new(
        BufWriter::new(File::create(spec.trace_path())?),
        spec.problem != ProblemKind::Toy,
    )?;
    let mut rec = Recorder {
        start: Instant::now(),
        trace,
        error: None,
        greedy: Vec::new(),
    };

    let summary = match spec.problem {
        ProblemKind::Toy => run_toy(spec, &mut rec)?,
        ProblemKind::Matcomp => run_matcomp(spec, &mut rec)?,
        ProblemKind::Phase => run_phase(spec, &mut rec)?,
    };
    if let Some(e) = rec.error.take() {
        return Err(e.into());
    }
    let mut w = BufWriter::new(File::create(spec.summary_path())?);
    serde_json::to_writer_pretty(&mut w, &summary).map_err(|e| RunError::Io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(summary)
}

fn summarize(spec: &RunSpec, result: &SolveResult, rec: &Recorder, final_f: f64) -> RunSummary {
    let last = result.trace.last();
    RunSummary {
        status: match result.status {
            Status::Converged => "converged",
            Status::MaxIters => "max_iters",
        },
        final_f,
        final_certificate: last.map(|r| r.dual_cert).unwrap_or(f64::NAN),
        iterations: result.iterations,
        wall_ms: rec.ms(),
        objective_evals: result.stats.objective_evals,
        gradient_evals: result.stats.gradient_evals,
        ray_searches: result.stats.ray_searches,
        line_searches: result.stats.line_searches,
        greedy_steps: rec.greedy.len(),
        greedy_stalls: rec.greedy.iter().filter(|g| g.stalled).count(),
        m_estimate: None,
        tau: None,
        recovery_error: None,
        config: spec.clone(),
        build: BUILD_DESCRIBE,
    }
}

fn run_toy(spec: &RunSpec, rec: &mut Recorder) -> Result<RunSummary, RunError> {
    let problem = problems::toy_problem();
    let mut cfg = spec.solver_config();
    if spec.algo == Algo::Mocoh {
        cfg.step_rule = StepRule::Heuristic {
            m: spec.m_estimate.unwrap_or(1.0),
        };
    }
    let result = solve_with(&problem, &cfg, None, rec).map_err(solver_error)?;
    let f = problem.objective.value(&result.final_point);
    let mut s = summarize(spec, &result, rec, f);
    s.m_estimate = spec.m_estimate;
    Ok(s)
}

fn run_sdp<Op: MeasurementOperator, F: Objective>(
    spec: &RunSpec,
    problem: &SdpProblem<Op, F>,
    trace_estimate: f64,
    rec: &mut Recorder,
) -> Result<(SdpOutcome, RunSummary), RunError> {
    let mut cfg = spec.sdp_config(problem.side());
    let mut m_used = None;
    let mut tau_used = None;
    let outcome = match spec.algo {
        Algo::Fw => {
            let tau = spec.tau.unwrap_or(2.0 * trace_estimate);
            if !(tau > 0.0) {
                return Err(RunError::Config(
                    "trace bound for fw is not positive".into(),
                ));
            }
            tau_used = Some(tau);
            fw_solve(problem, &cfg, tau, rec)
        }
        algo => {
            if algo == Algo::Mocoh {
                let m = spec.m_estimate.unwrap_or(trace_estimate);
                if !(m > 0.0) {
                    return Err(RunError::Config(
                        "M estimate for mocoh is not positive".into(),
                    ));
                }
                m_used = Some(m);
                cfg.solver.step_rule = StepRule::Heuristic { m };
            }
            sdp_solve(problem, &cfg, rec)
        }
    }
    .map_err(solver_error)?;
    let f = problem.value(&outcome.iterate.y, outcome.iterate.tr_acc);
    let mut s = summarize(spec, &outcome.result, rec, f);
    s.m_estimate = m_used;
    s.tau = tau_used;
    Ok((outcome, s))
}

fn load_instance(spec: &RunSpec) -> Result<Option<Instance>, RunError> {
    match &spec.instance {
        Some(path) => Ok(Some(io::read_instance(std::io::BufReader::new(
            File::open(path)?,
        ))?)),
        None => Ok(None),
    }
}

fn dump(spec: &RunSpec, inst: Instance) -> Result<(), RunError> {
    if spec.dump_instance {
        let mut w = BufWriter::new(File::create(spec.instance_path())?);
        io::write_instance(&mut w, &inst)?;
    }
    Ok(())
}

fn run_matcomp(spec: &RunSpec, rec: &mut Recorder) -> Result<RunSummary, RunError> {
    let (inst, problem) = match load_instance(spec)? {
        Some(Instance::MatComp(inst)) => {
            let d = inst.mask.len();
            let p = SdpProblem::new(
                inst.operator(),
                moco_core::ScaledSquaredNorm::half(d),
                inst.b.clone(),
                0.0,
            )
            .map_err(solver_error)?;
            (inst, p)
        }
        Some(_) => {
            return Err(RunError::Config(
                "instance file does not hold a matcomp instance".into(),
            ))
        }
        None => build_matcomp(spec.n, spec.seed, spec.snr_db)?,
    };
    let trace_estimate = inst.trace_estimate();
    dump(spec, Instance::MatComp(inst))?;
    let (_, s) = run_sdp(spec, &problem, trace_estimate, rec)?;
    Ok(s)
}

fn run_phase(spec: &RunSpec, rec: &mut Recorder) -> Result<RunSummary, RunError> {
    let (inst, problem) = match load_instance(spec)? {
        Some(Instance::Phase(inst)) => {
            let d = inst.m * inst.n;
            let objective = moco_core::ScaledSquaredNorm {
                dim: d,
                scale: 1.0 / d as f64,
            };
            let p = SdpProblem::new(inst.operator(), objective, inst.b.clone(), inst.gamma)
                .map_err(solver_error)?;
            (inst, p)
        }
        Some(_) => {
            return Err(RunError::Config(
                "instance file does not hold a phase instance".into(),
            ))
        }
        None => {
            let signal = match &spec.signal {
                Some(path) => io::read_pgm(path)?.to_signal(),
                None => synthetic_signal(spec.n, spec.seed),
            };
            build_phase_retrieval(&signal, spec.m, spec.gamma, spec.seed, spec.snr_db)?
        }
    };
    let trace_estimate = inst.trace_estimate();
    let x_true = inst.x_true.clone();
    dump(spec, Instance::Phase(inst))?;
    let (outcome, mut s) = run_sdp(spec, &problem, trace_estimate, rec)?;
    let recon = outcome
        .iterate
        .reconstruct(spec.recon_r)
        .map_err(solver_error)?;
    let mut w = BufWriter::new(File::create(spec.recon_path())?);
    io::write_factor(&mut w, &recon)?;
    if x_true.iter().any(|v| *v != 0.0) {
        s.recovery_error = Some(recovery_error(&recon, &x_true));
    }
    Ok(s)
}
