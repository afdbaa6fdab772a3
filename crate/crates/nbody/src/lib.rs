//! Power-series integration and symmetry verification for autonomous
//! second-order systems `y'' = f(y)`, specialized to Newtonian point-mass
//! gravity, a softened variant of it, and a scalar pendulum.
//!
//! The crate develops solutions as truncated Taylor series (module
//! [`taylor`]), steps them with a radius-of-convergence-aware controller,
//! differentiates force fields numerically to high order ([`formulas`]),
//! and machine-checks the time-reflection symmetries of special solutions:
//! even trajectories launched from rest and odd trajectories of the softened
//! system launched from the origin ([`symmetry`]).

// Validation deliberately writes `!(x > 0.0)` and friends: unlike the
// suggested rewrites, the negated form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod forces;
pub mod formulas;
pub mod series;
pub mod symmetry;
pub mod taylor;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use forces::{
    accel_bound, jacobian_fd, total_energy, BodySystem, Field, ForceModel, ModelKind, Softening,
    State,
};
pub use formulas::{
    derivative_tensor, fifth_derivative, fourth_derivative, sixth_derivative, third_derivative,
    DerivativeTensor,
};
pub use series::PowerSeries;
pub use symmetry::{
    lemma5_check, parity_probe, symmetry_report, verify_even, verify_odd, Parity, ParityVerdict,
    SymmetryKind, SymmetryReport,
};
pub use taylor::{
    default_ball_radius, integrate, radius_estimate, step_size, taylor_coefficients, SeriesState,
    Trajectory,
};
