//! Instance builders: the toy orthant problem, symmetric matrix completion
//! and DCT-masked phase retrieval.

mod matcomp;
mod noise;
mod phase;

pub use matcomp::{build_matcomp, EntryOperator, MatCompInstance, BLOCK, SAMPLE_PROB};
pub use noise::{add_noise_snr, snr_db_of};
pub use phase::{
    build_phase_retrieval, dct_measurement_apply, recovery_error, synthetic_signal,
    DctMaskOperator, PhaseInstance,
};

use moco_core::{Cone, ConicProgram, Quadratic};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("signal has zero energy; SNR is undefined")]
    DegenerateSignal,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error(transparent)]
    Core(#[from] moco_core::Error),
}

/// `f(x, y) = (x − 1)² + y²` over the nonnegative orthant, with
/// `L = 2` and `x* = (1, 0)`.
pub fn toy_problem() -> ConicProgram<Quadratic> {
    ConicProgram::new(Quadratic::toy(), Cone::Orthant(2))
        .expect("toy dimensions agree")
        .with_smoothness(2.0)
}

/// Deterministic sub-seed for an independent random stream of a builder.
pub(crate) fn stream_seed(seed: u64, stream: u64) -> u64 {
    seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}
