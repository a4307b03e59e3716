//! Shared fixtures for the benchmark suite: the reference model and the
//! standard lattice, mirroring the defaults the CLI applies.

use mmhedge_core::{
    ExecutionCost, IntensityCurve, InventoryGrid, ModelParams, SizeGrid, SolverSettings,
};

/// Reference parameter set used by every benchmark.
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
        sizes: SizeGrid::new(vec![1.0, 5.0, 10.0, 20.0], vec![0.76, 0.15, 0.075, 0.015])
            .unwrap(),
        cost: ExecutionCost::new(1e-5, 0.1, 5000.0).unwrap(),
    }
}

/// The standard 201-node lattice over the reference risk band.
pub fn base_grid() -> InventoryGrid {
    InventoryGrid::new(100.0, 201).unwrap()
}

pub fn default_settings() -> SolverSettings {
    SolverSettings::default()
}
