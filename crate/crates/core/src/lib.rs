//! Projection-free conic programming.
//!
//! This crate implements conic descent (CD) and its heavy-ball variant,
//! momentum conic descent (MOCO), for problems of the form
//!
//! ```text
//! minimize f(x)  subject to  x ∈ K
//! ```
//!
//! where `f` is smooth and strictly convex and `K` is a convex cone. Each
//! iteration alternates an exact minimization along the ray through the
//! current point with a linear minimization over `K ∩ {‖v‖ ≤ 1}`, so no
//! projection onto `K` is ever required.
//!
//! The [`sdp`] module specializes the method to semidefinite programs
//! `min f(G(X) − z) s.t. X ⪰ 0` with `O(d + nR)` memory: the iterate is kept
//! as the measurement vector `G(X) − z` plus a Gaussian sketch `XΩ`, the
//! linear minimization oracle is a Lanczos minimum-eigenvalue solve, and a
//! Burer–Monteiro style greedy step can be interleaved.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod cones;
pub mod error;
pub mod lanczos;
pub mod line_search;
pub mod objective;
pub mod sdp;
pub mod solver;
pub mod vector;
pub mod verify;

pub use cones::{Cone, Lmo, NormPair};
pub use error::{Error, Result};
pub use lanczos::{min_eig_lanczos, EigPair, LanczosConfig};
pub use objective::{Objective, Quadratic, Quadratic1d, ScaledSquaredNorm};
pub use solver::{
    delta_schedule, dual_certificate, kkt_residuals, line_search_step, momentum_update,
    ray_minimize, solve, solve_with, ConicProgram, IterateState, MomentumMode, NoHooks, SolveHooks,
    SolveResult, SolveStats, SolveTrace, SolverConfig, Status, StepRule, TraceRecord,
};
