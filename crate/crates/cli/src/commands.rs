//! The three subcommands: `solve` writes the policy and figure tables for
//! one configuration, `simulate` cross-checks a policy by Monte Carlo, and
//! `statics` sweeps one parameter and tabulates the internalization zone.

use crate::config::{load_config, ConfigError, Problems, RunConfig};
use crate::csvio::{format_float, policy_rows, read_policy, write_table};
use crate::CliError;
use mmhedge_core::{
    estimate_value, extract_policy, internalization_zone, solve, stationarity_gap, InventoryGrid,
    SimStats,
};
use rayon::prelude::*;
use std::path::Path;

/// Creates the output directory and records provenance: the fully resolved
/// configuration, the tool version, and one stderr line per applied default.
fn write_provenance(cfg: &RunConfig, config_path: &Path, out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)?;
    let version = env!("CARGO_PKG_VERSION");
    eprintln!("provenance: config {}", config_path.display());
    eprintln!("provenance: artifact version {version}");
    for default in &cfg.defaults_applied {
        eprintln!("provenance: default applied: {default}");
    }
    let doc = serde_json::to_string_pretty(&cfg.resolved_json())
        .expect("resolved config serializes");
    std::fs::write(out.join("resolved_config.json"), doc + "\n")?;
    std::fs::write(out.join("VERSION"), format!("{version}\n"))?;
    Ok(())
}

fn grid_of(cfg: &RunConfig) -> InventoryGrid {
    // Both arguments were validated together by load_config.
    InventoryGrid::new(cfg.params.q_max, cfg.n_nodes).expect("grid validated at load")
}

fn missing_section(section: &str, command: &str) -> CliError {
    CliError::Config(ConfigError::Invalid(Problems(vec![format!(
        "{section}: required by the {command} command"
    )])))
}

/// Comment lines shared by every quote table: units plus, when a side is
/// switched off, why its cells are empty.
fn quote_comments(cfg: &RunConfig) -> Vec<String> {
    let mut comments =
        vec!["quote offsets in bps; empty delta: no quote (side off or flow unreachable)".into()];
    if cfg.params.bid_curve.is_null() {
        comments.push("bid side disabled: lambda_max = 0, all bid deltas empty".into());
    }
    if cfg.params.ask_curve.is_null() {
        comments.push("ask side disabled: lambda_max = 0, all ask deltas empty".into());
    }
    comments
}

/// Solves the configured problem and writes the value slice, controls,
/// stationarity comparison and the reloadable policy table.
pub fn cmd_solve(config_path: &Path, out: &Path) -> Result<(), CliError> {
    let cfg = load_config(config_path)?;
    write_provenance(&cfg, config_path, out)?;
    let grid = grid_of(&cfg);
    let (surface, diagnostics) = solve(&cfg.params, &grid, cfg.n_steps, &cfg.settings)?;
    eprintln!(
        "solve: {} steps, max inner iterations {}, max residual {:e}",
        cfg.n_steps,
        diagnostics.max_iterations(),
        diagnostics.max_residual()
    );
    let policy = extract_policy(&surface, &cfg.params, &grid, 0.0, &cfg.settings)?;
    let mid = extract_policy(
        &surface,
        &cfg.params,
        &grid,
        0.5 * cfg.params.horizon,
        &cfg.settings,
    )?;
    let gap = stationarity_gap(&surface, &cfg.params, &grid, &cfg.settings)?;
    eprintln!("solve: stationarity gap {gap:e}");

    let nodes = grid.nodes();
    let value_rows: Vec<Vec<String>> = nodes
        .iter()
        .zip(&surface.values[0])
        .map(|(&q, &theta)| vec![format_float(q), format_float(theta)])
        .collect();
    write_table(
        &out.join("value_function.csv"),
        &["value surface slice at t = 0; q in M$, theta0 in bps*M$".into()],
        &["q", "theta0"],
        &value_rows,
    )?;

    let rate_rows: Vec<Vec<String>> = nodes
        .iter()
        .enumerate()
        .map(|(i, &q)| vec![format_float(q), format_float(policy.exec_rate(i))])
        .collect();
    write_table(
        &out.join("exec_rate.csv"),
        &["optimal external execution rate at t = 0; q in M$, v_star in M$/day".into()],
        &["q", "v_star"],
        &rate_rows,
    )?;

    let mut quote_rows = Vec::new();
    for (i, &q) in nodes.iter().enumerate() {
        // Sorted by q, then side (ask before bid), then size.
        for (k, &z) in policy.sizes().iter().enumerate() {
            quote_rows.push(vec![
                format_float(q),
                "ask".into(),
                format_float(z),
                format_float(policy.ask_quote(i, k)),
            ]);
        }
        for (k, &z) in policy.sizes().iter().enumerate() {
            quote_rows.push(vec![
                format_float(q),
                "bid".into(),
                format_float(z),
                format_float(policy.bid_quote(i, k)),
            ]);
        }
    }
    write_table(
        &out.join("quotes.csv"),
        &quote_comments(&cfg),
        &["q", "side", "size", "delta"],
        &quote_rows,
    )?;

    let rate_scale = grid.step() / cfg.params.cost.v_max;
    let mut conv_rows = Vec::new();
    for (t, snapshot) in [(0.0, &policy), (0.5 * cfg.params.horizon, &mid)] {
        for (i, &q) in nodes.iter().enumerate() {
            conv_rows.push(vec![
                format_float(t),
                format_float(q),
                format_float(snapshot.exec_rate(i) * rate_scale),
            ]);
        }
    }
    write_table(
        &out.join("convergence.csv"),
        &[
            "control: execution rate scaled by grid step / v_max to a bps-comparable \
             magnitude, at t = 0 and t = horizon/2"
                .into(),
            format!("stationarity gap (quotes and scaled rates, sup norm): {gap:e}"),
        ],
        &["t", "q", "control"],
        &conv_rows,
    )?;

    let mut policy_comments = quote_comments(&cfg);
    policy_comments.insert(
        0,
        "full policy at t = 0, reloadable by `simulate --policy`; kind rate rows hold \
         v_star in M$/day with an empty size cell"
            .into(),
    );
    write_table(
        &out.join("policy.csv"),
        &policy_comments,
        &["q", "kind", "size", "value"],
        &policy_rows(&policy),
    )?;
    Ok(())
}

/// Monte Carlo check of the solved value: one row per start inventory with
/// the surface value, the sample mean, its standard error and the z-score.
pub fn cmd_simulate(
    config_path: &Path,
    policy_path: Option<&Path>,
    out: &Path,
    seed_override: Option<u64>,
) -> Result<(), CliError> {
    let mut cfg = load_config(config_path)?;
    let Some(sim) = cfg.sim.as_mut() else {
        return Err(missing_section("sim", "simulate"));
    };
    if let Some(seed) = seed_override {
        sim.seed = seed;
        eprintln!("provenance: seed overridden to {seed}");
    }
    let sim = cfg.sim.clone().expect("sim present");
    write_provenance(&cfg, config_path, out)?;
    let grid = grid_of(&cfg);
    let (surface, _) = solve(&cfg.params, &grid, cfg.n_steps, &cfg.settings)?;
    let policy = match policy_path {
        Some(path) => {
            eprintln!("provenance: policy loaded from {}", path.display());
            read_policy(path)?
        }
        None => extract_policy(&surface, &cfg.params, &grid, 0.0, &cfg.settings)?,
    };
    let stats = estimate_value(&policy, &cfg.params, &sim)?;

    let theta_at = |q0: f64| -> Result<f64, CliError> {
        let i = grid.index_of(q0).ok_or_else(|| {
            CliError::Table(format!("start inventory {q0} is not a grid node"))
        })?;
        Ok(surface.values[0][i])
    };
    let mut rows: Vec<(f64, Vec<String>)> = Vec::with_capacity(stats.len());
    for s in &stats {
        let theta = theta_at(s.q0)?;
        let z = if s.std_error.is_finite() && s.std_error > 0.0 {
            (s.mean_objective - theta) / s.std_error
        } else {
            0.0
        };
        rows.push((
            s.q0,
            vec![
                format_float(s.q0),
                format_float(theta),
                format_float(s.mean_objective),
                format_float(s.std_error),
                format_float(z),
            ],
        ));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let rows: Vec<Vec<String>> = rows.into_iter().map(|(_, r)| r).collect();
    write_table(
        &out.join("mc_check.csv"),
        &[
            format!(
                "Monte Carlo check: {} paths per start, dt_sim {:e}, seed {}",
                sim.n_paths, sim.dt_sim, sim.seed
            ),
            "z = (mc_mean - theta_pde) / mc_stderr; 0 when the standard error is not \
             finite (single path)"
                .into(),
        ],
        &["q0", "theta_pde", "mc_mean", "mc_stderr", "z"],
        &rows,
    )?;
    report_worst_z(&stats);
    Ok(())
}

fn report_worst_z(stats: &[SimStats]) {
    let worst = stats
        .iter()
        .filter(|s| s.std_error.is_finite() && s.std_error > 0.0)
        .map(|s| (s.mean_objective / s.std_error).abs())
        .fold(0.0f64, f64::max);
    eprintln!(
        "simulate: {} starts, worst |mean|/stderr {worst:.2}",
        stats.len()
    );
}

/// Solves the problem once per sweep value and tabulates how the
/// internalization zone moves.
pub fn cmd_statics(config_path: &Path, out: &Path) -> Result<(), CliError> {
    let cfg = load_config(config_path)?;
    let Some(sweep) = cfg.sweep.clone() else {
        return Err(missing_section("sweep", "statics"));
    };
    write_provenance(&cfg, config_path, out)?;
    let grid = grid_of(&cfg);
    let mut values = sweep.values.clone();
    values.sort_by(f64::total_cmp);

    let results: Vec<Result<Vec<String>, CliError>> = values
        .par_iter()
        .map(|&value| {
            let params = sweep.parameter.apply(&cfg.params, value);
            let run = || -> Result<Vec<String>, mmhedge_core::SolverError> {
                params.validate()?;
                let (surface, _) = solve(&params, &grid, cfg.n_steps, &cfg.settings)?;
                let policy = extract_policy(&surface, &params, &grid, 0.0, &cfg.settings)?;
                let zone = internalization_zone(&policy, &grid);
                eprintln!(
                    "statics: {} = {value}: zone [{:.4}, {:.4}], width {:.4}",
                    sweep.parameter.name(),
                    zone.q_low,
                    zone.q_high,
                    zone.width
                );
                Ok(vec![
                    format_float(value),
                    format_float(zone.q_low),
                    format_float(zone.q_high),
                    format_float(zone.width),
                ])
            };
            run().map_err(|source| CliError::Sweep { value, source })
        })
        .collect();
    let rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    write_table(
        &out.join("internalization.csv"),
        &[format!(
            "zero-external-execution plateau at t = 0 versus {}; q_low/q_high/width in M$",
            sweep.parameter.name()
        )],
        &["sweep_value", "q_low", "q_high", "width"],
        &rows,
    )?;
    Ok(())
}
