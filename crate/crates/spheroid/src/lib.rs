//! Radially symmetric growth of a two-layer tumor spheroid.
//!
//! A proliferating shell surrounds a quiescent core; the nutrient field is
//! quasi-steady, consumed at rate `f` in the shell and `h` in the core, and
//! the two interfaces — the tumor surface `r = R` and the core boundary
//! `r = rho` where the nutrient hits the quiescence threshold — are both
//! unknowns. This crate computes:
//!
//! * core and shell nutrient profiles by nested shooting ([`solve_inner`],
//!   [`shoot_shell`], [`nutrient_profile`]);
//! * the critical radius at which a core first appears
//!   ([`critical_radius`]) and the core radius of a given tumor
//!   ([`core_radius`]);
//! * the normalized volume growth rate `F(R)` and stationary radii
//!   ([`growth_rate`], [`find_stationary`]), the supply threshold above
//!   which a cored stationary state exists ([`supply_threshold`]), and
//!   a-priori bounds on the stationary geometry ([`estimate_beta`],
//!   [`estimate_delta`]);
//! * the radius dynamics `dR/dt = R F(R)` with regime-transition detection
//!   ([`evolve`], [`transition_time`]);
//! * the vanishing-core-consumption limit toward the necrotic-core model,
//!   including closed-form references for the all-linear case
//!   ([`shoot_with_flux`], [`stationary_radius_with_flux`], [`limit_sweep`],
//!   [`linear_closed_form`]).
//!
//! Every operation is a pure function of `(params, arguments, config)` and
//! safe to call concurrently.
//!
//! The `examples/` directory carries one runnable program per capability;
//! the `spheroid` binary exposes the same operations as subcommands reading
//! a TOML parameter file.

pub mod cli;
mod config;
mod error;
mod evolution;
mod inner;
mod model;
mod necrotic;
mod ode;
mod outer;
mod quad;
mod report;
mod root;
mod stationary;

pub use config::SolverConfig;
pub use error::{Result, SolverError};
pub use evolution::{
    default_t_end, evolve, transition_time, Trajectory, TrajectorySample, Transition,
};
pub use report::to_json_string;
pub use inner::{flux, solve_inner, InnerSolution};
pub use model::{
    validate_assumptions, AssumptionCheck, ModelParams, RateSpec, ValidationReport,
};
pub use necrotic::{
    growth_rate_with_flux, limit_sweep, linear_closed_form, shoot_with_flux,
    stationary_radius_with_flux, AuxSolution, LimitSweep, LinearClosedForm, SweepEntry,
};
pub use outer::{
    core_radius, critical_radius, nutrient_profile, shoot_shell, NutrientProfile, OuterSolution,
    Regime,
};
pub use stationary::{
    estimate_beta, estimate_delta, find_stationary, growth_rate, supply_threshold,
    threshold_lower_bound, EstimateReport, StationaryRegime, StationaryResult,
};
