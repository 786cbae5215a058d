use std::fs;
use std::path::Path;
use std::process::Command;

use moco::io::{read_factor, read_instance, Instance};

fn moco() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_moco"));
    cmd.env_remove("CDK_SEED")
        .stdout(std::process::Stdio::null());
    cmd
}

fn trace_without_wall_clock(path: &Path) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let wall = header.iter().position(|c| *c == "wall_ms").unwrap();
    lines
        .map(|l| {
            l.split(',')
                .enumerate()
                .filter(|(i, _)| *i != wall)
                .map(|(_, c)| c)
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect()
}

#[test]
fn toy_run_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("toy");
    let status = moco()
        .args(["toy", "--algo", "moco", "--iters", "50", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("toy.summary.json")).unwrap())
            .unwrap();
    assert!(summary["final_f"].as_f64().unwrap() <= 1e-6);
    let trace = fs::read_to_string(dir.path().join("toy.trace.csv")).unwrap();
    assert!(trace.starts_with("k,"));
    assert!(trace.lines().count() >= 2);
}

#[test]
fn traces_are_deterministic_apart_from_wall_clock() {
    let dir = tempfile::tempdir().unwrap();
    let mut traces = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let status = moco()
            .args([
                "matcomp", "--algo", "mocog", "--n", "40", "--iters", "40", "--seed", "5", "--out",
            ])
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        traces.push(trace_without_wall_clock(
            &dir.path().join(format!("{name}.trace.csv")),
        ));
    }
    assert_eq!(traces[0], traces[1]);
    assert_eq!(traces[0].len(), 41);
}

#[test]
fn seed_environment_variable_overrides_flag() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, env_seed: Option<&str>, flag_seed: &str| {
        let mut cmd = moco();
        if let Some(s) = env_seed {
            cmd.env("CDK_SEED", s);
        }
        let status = cmd
            .args([
                "matcomp", "--algo", "moco", "--n", "30", "--iters", "10", "--seed", flag_seed,
                "--out",
            ])
            .arg(dir.path().join(name))
            .status()
            .unwrap();
        assert!(status.success());
        trace_without_wall_clock(&dir.path().join(format!("{name}.trace.csv")))
    };
    let by_env = run("env", Some("3"), "8");
    let by_flag = run("flag", None, "3");
    let other = run("other", None, "8");
    assert_eq!(by_env, by_flag);
    assert_ne!(by_env, other);
}

#[test]
fn dumped_instance_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let status = moco()
        .args([
            "phase",
            "--algo",
            "moco",
            "--n",
            "16",
            "--m",
            "4",
            "--iters",
            "20",
            "--dump-instance",
            "--out",
        ])
        .arg(&first)
        .status()
        .unwrap();
    assert!(status.success());
    let inst_path = dir.path().join("first.instance.bin");
    let inst = read_instance(fs::File::open(&inst_path).unwrap()).unwrap();
    assert!(matches!(&inst, Instance::Phase(p) if p.n == 16 && p.m == 4));

    let second = dir.path().join("second");
    let status = moco()
        .args(["phase", "--algo", "moco", "--iters", "20", "--instance"])
        .arg(&inst_path)
        .arg("--out")
        .arg(&second)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(
        trace_without_wall_clock(&dir.path().join("first.trace.csv")),
        trace_without_wall_clock(&dir.path().join("second.trace.csv"))
    );
    let factor = read_factor(fs::File::open(dir.path().join("second.recon.bin")).unwrap()).unwrap();
    assert_eq!(factor.u.nrows(), 16);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# comment\nalgo = cd\niters = 7\nn = 20\n").unwrap();
    let out = dir.path().join("cfg");
    let status = moco()
        .args(["matcomp", "--iters", "4", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("cfg.summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["iterations"], 4);
    assert_eq!(summary["config"]["n"], 20);
    assert_eq!(summary["config"]["algo"], "cd");
}

#[test]
fn bad_configuration_exits_with_code_two_and_json_error() {
    let output = moco()
        .args(["matcomp", "--sketch-r", "1", "--out", "/tmp/never"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&output.stderr).unwrap();
    assert!(err.is_object());
}

#[test]
fn multiple_seeds_fan_out_to_separate_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fan");
    let status = moco()
        .args([
            "toy", "--iters", "5", "--seeds", "1,2", "--jobs", "2", "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    for s in [1, 2] {
        assert!(dir
            .path()
            .join(format!("fan.seed{s}.summary.json"))
            .exists());
    }
}
