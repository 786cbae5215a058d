use std::path::PathBuf;
use std::process::{Command, ExitCode};

use clap::{Args, Parser, Subcommand};
use moco::run::{parse_config, run_experiment, Algo, ProblemKind, RunError, RunSpec};

/// Conic descent / MOCO experiment runner.
///
/// Writes <out>.trace.csv and <out>.summary.json (and <out>.recon.bin for
/// phase retrieval). Settings resolve as flags > --config file > defaults;
/// CDK_SEED, when set, overrides the seed. Exit codes: 0 ok, 2 bad config,
/// 3 solver failure, 4 io failure.
#[derive(Parser, Debug)]
#[command(name = "moco", version)]
struct Cli {
    #[command(subcommand)]
    problem: Problem,
}

#[derive(Subcommand, Debug)]
enum Problem {
    /// (x − 1)² + y² over the nonnegative orthant.
    Toy(RunArgs),
    /// Symmetric PSD matrix completion.
    Matcomp(RunArgs),
    /// Lifted phase retrieval with DCT sign masks.
    Phase(RunArgs),
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    #[arg(long, value_enum)]
    algo: Option<Algo>,
    #[arg(long)]
    iters: Option<usize>,
    /// Stop once the dual certificate is at most sqrt(eps).
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Matrix side (matcomp) or signal length (phase).
    #[arg(long)]
    n: Option<usize>,
    /// Number of sign masks (phase).
    #[arg(long)]
    m: Option<usize>,
    /// Trace penalty.
    #[arg(long)]
    gamma: Option<f64>,
    /// Noise level in dB; "inf" disables noise.
    #[arg(long, value_name = "DB")]
    snr_db: Option<String>,
    #[arg(long)]
    greedy_every: Option<usize>,
    #[arg(long)]
    greedy_rank: Option<usize>,
    /// Sketch width R.
    #[arg(long)]
    sketch_r: Option<usize>,
    /// Rank of the reconstructed factor.
    #[arg(long)]
    recon_r: Option<usize>,
    /// M for the mocoh step rule.
    #[arg(long)]
    m_estimate: Option<f64>,
    /// Trace bound for fw.
    #[arg(long)]
    tau: Option<f64>,
    /// 8-bit PGM image to use as the phase-retrieval signal.
    #[arg(long)]
    signal: Option<PathBuf>,
    /// Load a previously dumped instance.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Also write <out>.instance.bin.
    #[arg(long)]
    dump_instance: bool,
    /// Keep the dense iterate alongside the sketch (quadratic memory).
    #[arg(long)]
    test_mode: bool,
    #[arg(long)]
    trace_every: Option<usize>,
    /// Output path prefix.
    #[arg(long)]
    out: Option<PathBuf>,
    /// key = value file with any of the settings above.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run several seeds, e.g. "0..10" or "1,4,7"; outputs go to <out>.seed<s>.
    #[arg(long)]
    seeds: Option<String>,
    /// Worker processes for --seeds.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn resolve(problem: ProblemKind, args: &RunArgs) -> Result<RunSpec, RunError> {
    let mut spec = RunSpec::defaults(problem, Algo::Moco);
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
        for (k, v) in parse_config(&text)? {
            if k == "problem" {
                return Err(RunError::Config(
                    "the problem is chosen by the subcommand".into(),
                ));
            }
            spec.set(&k, &v)?;
        }
    }
    macro_rules! flag {
        ($field:ident) => {
            if let Some(v) = &args.$field {
                spec.$field = v.clone();
            }
        };
    }
    flag!(algo);
    flag!(iters);
    flag!(eps);
    flag!(seed);
    flag!(n);
    flag!(m);
    flag!(gamma);
    flag!(greedy_every);
    flag!(greedy_rank);
    flag!(sketch_r);
    flag!(recon_r);
    flag!(trace_every);
    if let Some(v) = &args.snr_db {
        spec.set("snr_db", v)?;
    }
    if args.m_estimate.is_some() {
        spec.m_estimate = args.m_estimate;
    }
    if args.tau.is_some() {
        spec.tau = args.tau;
    }
    if args.signal.is_some() {
        spec.signal = args.signal.clone();
    }
    if args.instance.is_some() {
        spec.instance = args.instance.clone();
    }
    if let Some(out) = &args.out {
        spec.out_prefix = out.clone();
    }
    spec.dump_instance |= args.dump_instance;
    spec.test_mode |= args.test_mode;
    if let Ok(seed) = std::env::var("CDK_SEED") {
        spec.set("seed", &seed)?;
    }
    Ok(spec)
}

fn parse_seeds(text: &str) -> Result<Vec<u64>, RunError> {
    let bad = || RunError::Config(format!("invalid seed list {text:?}"));
    if let Some((a, b)) = text.split_once("..") {
        let (a, b): (u64, u64) = (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        );
        if a >= b {
            return Err(bad());
        }
        return Ok((a..b).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse().map_err(|_| bad()))
        .collect()
}

/// Re-invokes this executable once per seed, `jobs` at a time.
fn fan_out(problem: &str, spec: &RunSpec, seeds: &[u64], jobs: usize) -> Result<(), RunError> {
    let exe = std::env::current_exe()?;
    let mut passthrough = Vec::new();
    let mut args = std::env::args().skip(2);
    while let Some(a) = args.next() {
        let name = a.split('=').next().unwrap_or("");
        if matches!(name, "--seeds" | "--jobs" | "--seed" | "--out") {
            if !a.contains('=') {
                args.next();
            }
            continue;
        }
        passthrough.push(a);
    }
    let mut failure: Option<i32> = None;
    for batch in seeds.chunks(jobs.max(1)) {
        let mut children = Vec::new();
        for &seed in batch {
            let mut out = spec.out_prefix.as_os_str().to_owned();
            out.push(format!(".seed{seed}"));
            let child = Command::new(&exe)
                .arg(problem)
                .args(&passthrough)
                .arg("--seed")
                .arg(seed.to_string())
                .arg("--out")
                .arg(&out)
                .env_remove("CDK_SEED")
                .spawn()?;
            children.push(child);
        }
        for mut child in children {
            let status = child.wait()?;
            if !status.success() {
                failure.get_or_insert(status.code().unwrap_or(3));
            }
        }
    }
    match failure {
        None => Ok(()),
        Some(2) => Err(RunError::Config(
            "a worker rejected its configuration".into(),
        )),
        Some(4) => Err(RunError::Io("a worker failed to write its output".into())),
        Some(_) => Err(RunError::Solver("a worker failed".into())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, name, args) = match &cli.problem {
        Problem::Toy(a) => (ProblemKind::Toy, "toy", a),
        Problem::Matcomp(a) => (ProblemKind::Matcomp, "matcomp", a),
        Problem::Phase(a) => (ProblemKind::Phase, "phase", a),
    };
    let result = resolve(kind, args).and_then(|spec| match &args.seeds {
        Some(list) => {
            spec.validate()?;
            fan_out(name, &spec, &parse_seeds(list)?, args.jobs)
        }
        None => {
            let summary = run_experiment(&spec)?;
            println!(
                "{}",
                serde_json::json!({
                    "status": summary.status,
                    "final_f": summary.final_f,
                    "iterations": summary.iterations,
                    "summary": spec.summary_path(),
                })
            );
            Ok(())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
