//! Reduced-order models with goal-oriented a-posteriori error estimates.
//!
//! The crate builds POD-Galerkin and POD/DEIM reduced models of autonomous
//! discrete dynamical systems, computes full and reduced discrete adjoints
//! for explicit and implicit Euler, and estimates the error in a scalar
//! quantity of interest from dual-weighted residuals. The same residuals
//! drive an adaptive choice of DEIM interpolation points.

pub mod adjoint;
pub mod burgers;
pub mod deim;
pub mod error;
pub mod estimate;
pub mod linalg;
pub mod model;
pub mod pod;
pub mod rom;

pub use adjoint::{
    full_adjoint_explicit, full_adjoint_for, full_adjoint_implicit, qoi_eval, qoi_gradient,
    reduced_adjoint, AdjointTrajectory, LinearQoi, QuantityOfInterest, ScaledQoi, SquaredSumQoi,
    ZeroQoi,
};
pub use burgers::{initial_condition, BurgersModel, InitialCondition};
pub use deim::{
    adaptive_deim_indices, adaptive_deim_indices_with, approximate_nonlinear, build_deim_operator,
    deim_indices, selection_condition_number, AdaptiveDeimConfig, DeimApproximation,
};
pub use error::{Error, Result};
pub use estimate::{
    dual_weighted_residuals, dwr_basis, estimate_error_fast, estimate_error_fast_explicit,
    estimate_error_fast_implicit, estimate_error_oracle, report_from_dwr, residuals,
    residuals_explicit, residuals_implicit, true_error, DualWeightedResiduals, ErrorReport,
    OracleVariant, ResidualSeries,
};
pub use model::{
    integrate, newton_solve, step, step_explicit, step_implicit, ClosureModel, DiscreteModel,
    LinearModel, NewtonOutcome, NewtonSettings, Scheme, TimeGrid, Trajectory,
};
pub use pod::{collect_snapshots, PodBasis, SnapshotMatrix, SnapshotSource, Truncation};
pub use rom::{
    integrate_rom, rom_step_explicit, rom_step_implicit, simulate_rom, ReducedModel,
    ReducedTrajectory,
};
