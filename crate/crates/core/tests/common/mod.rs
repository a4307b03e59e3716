#![allow(dead_code)]

use mmhedge_core::{
    ExecutionCost, IntensityCurve, InventoryGrid, ModelParams, SizeGrid, SolverSettings,
};

/// Reference parameter set used across the integration suites: logistic
/// client flow (1000, -1, 10) on both sides, four size buckets, quadratic
/// plus proportional execution costs, 100 M$ risk limit over a 0.05-day
/// horizon.
pub fn base_params() -> ModelParams {
    ModelParams {
        sigma: 50.0,
        impact_k: 0.005,
        gamma: 0.0005,
        horizon: 0.05,
        q_max: 100.0,
        delta_floor: 10.0,
        bid_curve: IntensityCurve::new(1000.0, -1.0, 10.0).unwrap(),
        ask_curve: IntensityCurve::new(1000.0, -1.0, 10.0).unwrap(),
        sizes: SizeGrid::new(vec![1.0, 5.0, 10.0, 20.0], vec![0.76, 0.15, 0.075, 0.015]).unwrap(),
        cost: ExecutionCost::new(1e-5, 0.1, 5000.0).unwrap(),
    }
}

/// 201-node lattice on [-100, 100] M$, step 1 M$.
pub fn base_grid() -> InventoryGrid {
    InventoryGrid::new(100.0, 201).unwrap()
}

/// Same model on a half-width band, for tests that solve repeatedly.
pub fn medium_params() -> ModelParams {
    ModelParams {
        q_max: 50.0,
        ..base_params()
    }
}

/// 101-node lattice on [-50, 50] M$, step 1 M$.
pub fn medium_grid() -> InventoryGrid {
    InventoryGrid::new(50.0, 101).unwrap()
}

pub fn default_settings() -> SolverSettings {
    SolverSettings::default()
}
