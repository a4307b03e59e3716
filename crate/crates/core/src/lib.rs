//! Optimal quoting and hedging for a dealer internalizing client flow.
//!
//! A dealer streams bid and ask quotes to clients, absorbs the resulting
//! inventory, and may hedge externally in a liquidity pool at a capped rate,
//! paying quadratic-plus-proportional execution costs and moving the
//! reference price through permanent impact. This crate computes the
//! dealer's optimal quote offsets and execution rate by solving the
//! dynamic-programming equation of that control problem backward in time on
//! an inventory lattice, and cross-checks the resulting policy by Monte
//! Carlo simulation of the full dynamics.
//!
//! Unit conventions, used everywhere without exception: prices and quote
//! offsets in basis points (bps), inventory and trade sizes in millions of
//! dollars (M$), time in days, execution rates in M$/day, and values in
//! bps·M$.
//!
//! * [`model`] holds the market/cost/risk parameterization and primitive
//!   functions.
//! * [`hamiltonian`] solves the pointwise control problems (optimal quote
//!   per request bucket, optimal capped execution rate).
//! * [`grid`] and [`solver`] discretize inventory and run the monotone
//!   implicit scheme, then extract policies and the internalization zone.
//! * [`sim`] replays the full dynamics under a policy and estimates the
//!   objective with per-path-seeded Monte Carlo.

pub mod grid;
pub mod hamiltonian;
pub mod model;
pub mod sim;
pub mod solver;

pub use grid::{GridError, InventoryGrid};
pub use hamiltonian::{
    exec_hamiltonian, quote_hamiltonian, rate_hamiltonian, ExecSolution, HamiltonianError,
    QuoteSolution, RampFunction, RateSolution,
};
pub use model::{ExecutionCost, IntensityCurve, ModelError, ModelParams, SizeGrid};
pub use sim::{
    estimate_value, estimate_value_reduced, path_seed, simulate_path, PathSample, PathState,
    SimConfig, SimError, SimStats,
};
pub use solver::{
    extract_policy, internalization_zone, solve, stationarity_gap, step_implicit,
    value_lower_bound, value_upper_bound, InternalizationZone, PolicyTable, SolveDiagnostics,
    SolverError, SolverSettings, StepReport, ValueSurface,
};
