//! Experiments for the `moco-core` solvers: instance builders for the toy
//! orthant problem, symmetric matrix completion and DCT-masked phase
//! retrieval; binary instance and factor files; trace CSV output; and the
//! runner behind the `moco` command-line tool.

pub mod io;
pub mod problems;
pub mod run;

pub use run::{run_experiment, Algo, ProblemKind, RunError, RunSpec, RunSummary};
