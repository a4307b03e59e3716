//! Configuration loading: a strict JSON schema with optional keys
//! defaulted, every applied default echoed, and validation errors
//! collected so one run reports every problem at once.

use mmhedge_core::{
    ExecutionCost, IntensityCurve, InventoryGrid, ModelParams, SimConfig, SizeGrid, SolverSettings,
};
use serde::Deserialize;
use serde_json::json;
use std::fmt;
use std::path::Path;

const DEFAULT_DELTA_FLOOR: f64 = 10.0;
const DEFAULT_V_MAX: f64 = 5000.0;
const DEFAULT_N_NODES: usize = 201;
const DEFAULT_N_STEPS: usize = 500;
const DEFAULT_DT_SIM: f64 = 1e-5;
const DEFAULT_SEED: u64 = 0;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Invalid(Problems),
}

/// Every validation failure of one load, reported together.
#[derive(Debug)]
pub struct Problems(pub Vec<String>);

impl fmt::Display for Problems {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid config ({} problems):", self.0.len())?;
        for p in &self.0 {
            writeln!(f, "  - {p}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: Option<RawModel>,
    grid: Option<RawGrid>,
    solver: Option<RawSolver>,
    sim: Option<RawSim>,
    sweep: Option<RawSweep>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    sigma: Option<f64>,
    impact_k: Option<f64>,
    gamma: Option<f64>,
    horizon: Option<f64>,
    q_max: Option<f64>,
    delta_floor: Option<f64>,
    bid_curve: Option<RawCurve>,
    ask_curve: Option<RawCurve>,
    sizes: Option<Vec<f64>>,
    probs: Option<Vec<f64>>,
    cost: Option<RawCost>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCurve {
    lambda_max: Option<f64>,
    alpha: Option<f64>,
    beta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCost {
    eta: Option<f64>,
    phi: Option<f64>,
    v_max: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    n_nodes: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    n_steps: Option<usize>,
    damping: Option<f64>,
    tolerance: Option<f64>,
    max_iterations: Option<usize>,
    ramp_width: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    n_paths: Option<usize>,
    dt_sim: Option<f64>,
    seed: Option<u64>,
    start_inventories: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    parameter: Option<String>,
    values: Option<Vec<f64>>,
}

/// Parameter swept by the `statics` command. `LambdaScale` multiplies both
/// flow curves' caps; `LambdaBid`/`LambdaAsk` set one side's cap outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    Phi,
    ImpactK,
    Gamma,
    LambdaScale,
    LambdaBid,
    LambdaAsk,
}

impl SweepParameter {
    fn from_name(name: &str) -> Option<Self> {
        match name {
            "phi" => Some(Self::Phi),
            "impact_k" => Some(Self::ImpactK),
            "gamma" => Some(Self::Gamma),
            "lambda_scale" => Some(Self::LambdaScale),
            "lambda_bid" => Some(Self::LambdaBid),
            "lambda_ask" => Some(Self::LambdaAsk),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Phi => "phi",
            Self::ImpactK => "impact_k",
            Self::Gamma => "gamma",
            Self::LambdaScale => "lambda_scale",
            Self::LambdaBid => "lambda_bid",
            Self::LambdaAsk => "lambda_ask",
        }
    }

    /// Base parameters with this sweep parameter set to `value`.
    pub fn apply(self, base: &ModelParams, value: f64) -> ModelParams {
        let mut p = base.clone();
        match self {
            Self::Phi => p.cost.phi = value,
            Self::ImpactK => p.impact_k = value,
            Self::Gamma => p.gamma = value,
            Self::LambdaScale => {
                p.bid_curve.lambda_max = base.bid_curve.lambda_max * value;
                p.ask_curve.lambda_max = base.ask_curve.lambda_max * value;
            }
            Self::LambdaBid => p.bid_curve.lambda_max = value,
            Self::LambdaAsk => p.ask_curve.lambda_max = value,
        }
        p
    }
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

/// Fully resolved run configuration: every default materialized.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: ModelParams,
    pub n_nodes: usize,
    pub n_steps: usize,
    pub settings: SolverSettings,
    pub sim: Option<SimConfig>,
    pub sweep: Option<Sweep>,
    /// `key = value` line per applied default, for the provenance log.
    pub defaults_applied: Vec<String>,
}

impl RunConfig {
    /// The resolved configuration as a JSON document, defaults
    /// materialized, for the output directory's provenance record.
    pub fn resolved_json(&self) -> serde_json::Value {
        let curve = |c: &IntensityCurve| {
            json!({"lambda_max": c.lambda_max, "alpha": c.alpha, "beta": c.beta})
        };
        let mut doc = json!({
            "artifact_version": env!("CARGO_PKG_VERSION"),
            "model": {
                "sigma": self.params.sigma,
                "impact_k": self.params.impact_k,
                "gamma": self.params.gamma,
                "horizon": self.params.horizon,
                "q_max": self.params.q_max,
                "delta_floor": self.params.delta_floor,
                "bid_curve": curve(&self.params.bid_curve),
                "ask_curve": curve(&self.params.ask_curve),
                "sizes": self.params.sizes.sizes(),
                "probs": self.params.sizes.probs(),
                "cost": {
                    "eta": self.params.cost.eta,
                    "phi": self.params.cost.phi,
                    "v_max": self.params.cost.v_max,
                },
            },
            "grid": {"n_nodes": self.n_nodes},
            "solver": {
                "n_steps": self.n_steps,
                "damping": self.settings.damping,
                "tolerance": self.settings.tolerance,
                "max_iterations": self.settings.max_iterations,
                "ramp_width": self.settings.ramp_width,
            },
            "defaults_applied": self.defaults_applied,
        });
        if let Some(sim) = &self.sim {
            doc["sim"] = json!({
                "n_paths": sim.n_paths,
                "dt_sim": sim.dt_sim,
                "seed": sim.seed,
                "start_inventories": sim.start_inventories,
            });
        }
        if let Some(sweep) = &self.sweep {
            doc["sweep"] = json!({
                "parameter": sweep.parameter.name(),
                "values": sweep.values,
            });
        }
        doc
    }
}

/// Loads, defaults and validates a configuration document.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    let raw: RawConfig = serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    resolve(raw)
}

fn require<T>(problems: &mut Vec<String>, key: &str, value: Option<T>) -> Option<T> {
    if value.is_none() {
        problems.push(format!("{key}: missing required key"));
    }
    value
}

fn resolve(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let mut problems = Vec::new();
    let mut defaults = Vec::new();

    let model = raw.model.unwrap_or_default();
    let sigma = require(&mut problems, "model.sigma", model.sigma);
    let impact_k = require(&mut problems, "model.impact_k", model.impact_k);
    let gamma = require(&mut problems, "model.gamma", model.gamma);
    let horizon = require(&mut problems, "model.horizon", model.horizon);
    let q_max = require(&mut problems, "model.q_max", model.q_max);
    let delta_floor = model.delta_floor.unwrap_or_else(|| {
        defaults.push(format!("model.delta_floor = {DEFAULT_DELTA_FLOOR}"));
        DEFAULT_DELTA_FLOOR
    });
    let mut curve_of = |key: &str, raw: Option<RawCurve>| -> Option<(f64, f64, f64)> {
        let c = match raw {
            Some(c) => c,
            None => {
                problems.push(format!("{key}: missing required key"));
                return None;
            }
        };
        let lambda = require(&mut problems, &format!("{key}.lambda_max"), c.lambda_max);
        let alpha = require(&mut problems, &format!("{key}.alpha"), c.alpha);
        let beta = require(&mut problems, &format!("{key}.beta"), c.beta);
        Some((lambda?, alpha?, beta?))
    };
    let bid = curve_of("model.bid_curve", model.bid_curve);
    let ask = curve_of("model.ask_curve", model.ask_curve);
    let sizes = require(&mut problems, "model.sizes", model.sizes);
    let probs = require(&mut problems, "model.probs", model.probs);
    let cost = model.cost.unwrap_or_else(|| {
        problems.push("model.cost: missing required key".into());
        RawCost::default()
    });
    let eta = require(&mut problems, "model.cost.eta", cost.eta);
    let phi = require(&mut problems, "model.cost.phi", cost.phi);
    let v_max = cost.v_max.unwrap_or_else(|| {
        defaults.push(format!("model.cost.v_max = {DEFAULT_V_MAX}"));
        DEFAULT_V_MAX
    });

    let n_nodes = raw.grid.unwrap_or_default().n_nodes.unwrap_or_else(|| {
        defaults.push(format!("grid.n_nodes = {DEFAULT_N_NODES}"));
        DEFAULT_N_NODES
    });

    let solver = raw.solver.unwrap_or_default();
    let n_steps = solver.n_steps.unwrap_or_else(|| {
        defaults.push(format!("solver.n_steps = {DEFAULT_N_STEPS}"));
        DEFAULT_N_STEPS
    });
    let base_settings = SolverSettings::default();
    let settings = SolverSettings {
        damping: solver.damping.unwrap_or_else(|| {
            defaults.push(format!("solver.damping = {}", base_settings.damping));
            base_settings.damping
        }),
        tolerance: solver.tolerance.unwrap_or_else(|| {
            defaults.push(format!("solver.tolerance = {:e}", base_settings.tolerance));
            base_settings.tolerance
        }),
        max_iterations: solver.max_iterations.unwrap_or_else(|| {
            defaults.push(format!(
                "solver.max_iterations = {}",
                base_settings.max_iterations
            ));
            base_settings.max_iterations
        }),
        ramp_width: solver.ramp_width.or_else(|| {
            defaults.push("solver.ramp_width = one grid step".into());
            None
        }),
    };

    let sim = match raw.sim {
        None => None,
        Some(s) => {
            let n_paths = require(&mut problems, "sim.n_paths", s.n_paths);
            let starts = require(&mut problems, "sim.start_inventories", s.start_inventories);
            let dt_sim = s.dt_sim.unwrap_or_else(|| {
                defaults.push(format!("sim.dt_sim = {DEFAULT_DT_SIM:e}"));
                DEFAULT_DT_SIM
            });
            let seed = s.seed.unwrap_or_else(|| {
                defaults.push(format!("sim.seed = {DEFAULT_SEED}"));
                DEFAULT_SEED
            });
            match (n_paths, starts) {
                (Some(n_paths), Some(start_inventories)) => Some(SimConfig {
                    n_paths,
                    dt_sim,
                    seed,
                    start_inventories,
                }),
                _ => None,
            }
        }
    };

    let sweep = match raw.sweep {
        None => None,
        Some(s) => {
            let name = require(&mut problems, "sweep.parameter", s.parameter);
            let values = require(&mut problems, "sweep.values", s.values);
            let parameter = name.as_deref().and_then(|n| {
                let p = SweepParameter::from_name(n);
                if p.is_none() {
                    problems.push(format!(
                        "sweep.parameter: unknown parameter {n:?} (expected phi, impact_k, \
                         gamma, lambda_scale, lambda_bid or lambda_ask)"
                    ));
                }
                p
            });
            if let Some(v) = &values {
                if v.len() < 2 {
                    problems.push("sweep.values: need at least two values".into());
                }
            }
            match (parameter, values) {
                (Some(parameter), Some(values)) if values.len() >= 2 => {
                    Some(Sweep { parameter, values })
                }
                _ => None,
            }
        }
    };

    if !problems.is_empty() {
        return Err(ConfigError::Invalid(Problems(problems)));
    }

    // All keys are present; build and semantically validate the model.
    let (bl, ba, bb) = bid.unwrap();
    let (al, aa, ab) = ask.unwrap();
    fn check(problems: &mut Vec<String>, key: &str, r: Result<(), String>) {
        if let Err(msg) = r {
            problems.push(format!("{key}: {msg}"));
        }
    }
    let bid_curve = IntensityCurve {
        lambda_max: bl,
        alpha: ba,
        beta: bb,
    };
    check(
        &mut problems,
        "model.bid_curve",
        bid_curve.validate().map_err(|e| e.to_string()),
    );
    let ask_curve = IntensityCurve {
        lambda_max: al,
        alpha: aa,
        beta: ab,
    };
    check(
        &mut problems,
        "model.ask_curve",
        ask_curve.validate().map_err(|e| e.to_string()),
    );
    let size_grid = match SizeGrid::new(sizes.unwrap(), probs.unwrap()) {
        Ok(g) => Some(g),
        Err(e) => {
            problems.push(format!("model.sizes/model.probs: {e}"));
            None
        }
    };
    let exec_cost = match ExecutionCost::new(eta.unwrap(), phi.unwrap(), v_max) {
        Ok(c) => Some(c),
        Err(e) => {
            problems.push(format!("model.cost: {e}"));
            None
        }
    };
    check(
        &mut problems,
        "solver",
        settings.validate().map_err(|e| e.to_string()),
    );
    if let Some(sim) = &sim {
        check(&mut problems, "sim", sim.validate().map_err(|e| e.to_string()));
    }
    let (size_grid, exec_cost) = match (size_grid, exec_cost) {
        (Some(s), Some(c)) if problems.is_empty() => (s, c),
        _ => return Err(ConfigError::Invalid(Problems(problems))),
    };

    let params = ModelParams {
        sigma: sigma.unwrap(),
        impact_k: impact_k.unwrap(),
        gamma: gamma.unwrap(),
        horizon: horizon.unwrap(),
        q_max: q_max.unwrap(),
        delta_floor,
        bid_curve,
        ask_curve,
        sizes: size_grid,
        cost: exec_cost,
    };
    check(
        &mut problems,
        "model",
        params.validate().map_err(|e| e.to_string()),
    );
    match InventoryGrid::new(params.q_max, n_nodes) {
        Ok(grid) => {
            if let Err(e) = grid.size_offsets(&params.sizes) {
                problems.push(format!("model.sizes: {e}"));
            }
            if let Some(sim) = &sim {
                for &q0 in &sim.start_inventories {
                    if grid.index_of(q0).is_none() {
                        problems.push(format!(
                            "sim.start_inventories: {q0} is not a grid node"
                        ));
                    }
                }
            }
        }
        Err(e) => problems.push(format!("grid.n_nodes: {e}")),
    }
    if n_steps == 0 {
        problems.push("solver.n_steps: must be at least 1".into());
    }
    if !problems.is_empty() {
        return Err(ConfigError::Invalid(Problems(problems)));
    }

    Ok(RunConfig {
        params,
        n_nodes,
        n_steps,
        settings,
        sim,
        sweep,
        defaults_applied: defaults,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(doc: &str) -> Result<RunConfig, ConfigError> {
        let raw: RawConfig = serde_json::from_str(doc).unwrap();
        resolve(raw)
    }

    const FULL: &str = r#"{
        "model": {
            "sigma": 50.0, "impact_k": 0.005, "gamma": 0.0005,
            "horizon": 0.05, "q_max": 100.0,
            "bid_curve": {"lambda_max": 1000.0, "alpha": -1.0, "beta": 10.0},
            "ask_curve": {"lambda_max": 1000.0, "alpha": -1.0, "beta": 10.0},
            "sizes": [1.0, 5.0, 10.0, 20.0],
            "probs": [0.76, 0.15, 0.075, 0.015],
            "cost": {"eta": 1e-5, "phi": 0.1}
        }
    }"#;

    #[test]
    fn defaults_are_applied_and_echoed() {
        let cfg = parse(FULL).unwrap();
        assert_eq!(cfg.params.delta_floor, 10.0);
        assert_eq!(cfg.params.cost.v_max, 5000.0);
        assert_eq!(cfg.n_nodes, 201);
        assert_eq!(cfg.n_steps, 500);
        assert!(cfg
            .defaults_applied
            .iter()
            .any(|d| d == "model.delta_floor = 10"));
        assert!(cfg.defaults_applied.iter().any(|d| d == "grid.n_nodes = 201"));
        let doc = cfg.resolved_json();
        assert_eq!(doc["model"]["cost"]["v_max"], 5000.0);
        assert_eq!(doc["artifact_version"], env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn empty_document_reports_every_required_key() {
        let err = parse("{}").unwrap_err();
        let ConfigError::Invalid(Problems(problems)) = err else {
            panic!("expected validation errors");
        };
        for key in [
            "model.sigma",
            "model.impact_k",
            "model.gamma",
            "model.horizon",
            "model.q_max",
            "model.bid_curve",
            "model.ask_curve",
            "model.sizes",
            "model.probs",
            "model.cost.eta",
            "model.cost.phi",
        ] {
            assert!(
                problems.iter().any(|p| p.starts_with(key)),
                "missing problem for {key}: {problems:?}"
            );
        }
    }

    #[test]
    fn bad_probabilities_name_the_offending_keys() {
        let doc = FULL.replace("[0.76, 0.15, 0.075, 0.015]", "[0.7, 0.1, 0.075, 0.015]");
        let err = parse(&doc).unwrap_err();
        let ConfigError::Invalid(Problems(problems)) = err else {
            panic!("expected validation errors");
        };
        assert!(problems.iter().any(|p| p.starts_with("model.sizes/model.probs")));
    }

    #[test]
    fn unknown_keys_are_parse_errors() {
        let doc = FULL.replace("\"sigma\"", "\"sigma_typo\"");
        let raw: Result<RawConfig, _> = serde_json::from_str(&doc);
        let msg = raw.unwrap_err().to_string();
        assert!(msg.contains("sigma_typo"), "{msg}");
    }

    #[test]
    fn sweep_needs_two_values_of_a_known_parameter() {
        let doc = FULL.replace(
            "\"model\"",
            "\"sweep\": {\"parameter\": \"phi\", \"values\": [0.1]}, \"model\"",
        );
        let err = parse(&doc).unwrap_err();
        assert!(err.to_string().contains("sweep.values"));
        let doc = FULL.replace(
            "\"model\"",
            "\"sweep\": {\"parameter\": \"spread\", \"values\": [0.1, 0.2]}, \"model\"",
        );
        let err = parse(&doc).unwrap_err();
        assert!(err.to_string().contains("unknown parameter"));
    }

    #[test]
    fn off_grid_start_inventories_are_rejected() {
        let doc = FULL.replace(
            "\"model\"",
            "\"sim\": {\"n_paths\": 10, \"start_inventories\": [0.25]}, \"model\"",
        );
        let err = parse(&doc).unwrap_err();
        assert!(err.to_string().contains("not a grid node"));
    }
}
