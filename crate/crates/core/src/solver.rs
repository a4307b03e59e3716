//! Backward-in-time solver for the dealer's dynamic-programming equation on
//! an inventory lattice, plus policy extraction, stationarity diagnostics
//! and detection of the pure-internalization zone.
//!
//! The scheme is implicit Euler with Godunov upwinding of the execution
//! term: the buy direction uses the forward inventory difference, the sell
//! direction the backward difference, which keeps the update monotone in
//! the neighbor values. Each implicit step is solved by damped Jacobi
//! fixed-point iteration; for the step sizes used here the iteration map is
//! a contraction, so convergence is unconditional.

use crate::grid::{GridError, InventoryGrid};
use crate::hamiltonian::{
    quote_opt, rate_hamiltonian, HamiltonianError, RampFunction,
};
use crate::model::{ModelError, ModelParams};
use thiserror::Error;

/// Errors raised by the solver and its post-processing.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error("time step must be finite and strictly positive, got {dt}")]
    BadTimeStep { dt: f64 },
    #[error("need at least one time step")]
    NoSteps,
    #[error("value slice has {got} entries but the grid has {expected} nodes")]
    SliceShape { got: usize, expected: usize },
    #[error("value slice entry at node index {index} is not finite")]
    SliceNotFinite { index: usize },
    #[error("{name} must be {constraint}, got {value}")]
    BadSetting {
        name: &'static str,
        constraint: &'static str,
        value: f64,
    },
    #[error("snapshot time {t} lies outside [0, {horizon})")]
    TimeOutOfRange { t: f64, horizon: f64 },
    #[error("surface with {got} time slices does not match the requested snapshot")]
    SurfaceShape { got: usize },
    #[error("invalid policy table: {0}")]
    PolicyShape(String),
    #[error("inner iteration stalled at residual {residual} after {iterations} iterations (time index {time_index:?})")]
    NoConvergence {
        residual: f64,
        iterations: usize,
        time_index: Option<usize>,
    },
}

/// Tuning knobs of the implicit stepper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Damping factor of the Jacobi fixed-point update, in (0, 1].
    pub damping: f64,
    /// Sup-norm residual at which the inner iteration stops.
    pub tolerance: f64,
    /// Inner iteration cap before reporting non-convergence.
    pub max_iterations: usize,
    /// Width of the boundary ramp gating execution, M$. `None` selects one
    /// grid step, which confines the relaxation to the boundary cells.
    pub ramp_width: Option<f64>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tolerance: 1e-10,
            max_iterations: 500,
            ramp_width: None,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !self.damping.is_finite() || self.damping <= 0.0 || self.damping > 1.0 {
            return Err(SolverError::BadSetting {
                name: "damping",
                constraint: "in (0, 1]",
                value: self.damping,
            });
        }
        if !self.tolerance.is_finite() || self.tolerance <= 0.0 {
            return Err(SolverError::BadSetting {
                name: "tolerance",
                constraint: "strictly positive",
                value: self.tolerance,
            });
        }
        if self.max_iterations == 0 {
            return Err(SolverError::BadSetting {
                name: "max_iterations",
                constraint: "at least 1",
                value: 0.0,
            });
        }
        if let Some(w) = self.ramp_width {
            if !w.is_finite() || w <= 0.0 {
                return Err(SolverError::BadSetting {
                    name: "ramp_width",
                    constraint: "strictly positive",
                    value: w,
                });
            }
        }
        Ok(())
    }

    fn ramp(&self, grid: &InventoryGrid) -> Result<RampFunction, SolverError> {
        Ok(RampFunction::new(self.ramp_width.unwrap_or(grid.step()))?)
    }
}

/// Convergence record of one implicit step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Inner iterations used.
    pub iterations: usize,
    /// Sup-norm equation residual at the last measured sweep.
    pub residual: f64,
}

/// Per-step convergence records of a full solve, ordered forward in time:
/// entry `s` belongs to the step that produced the slice at `times[s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveDiagnostics {
    pub step_reports: Vec<StepReport>,
}

impl SolveDiagnostics {
    pub fn max_residual(&self) -> f64 {
        self.step_reports
            .iter()
            .map(|r| r.residual)
            .fold(0.0, f64::max)
    }

    pub fn max_iterations(&self) -> usize {
        self.step_reports.iter().map(|r| r.iterations).max().unwrap_or(0)
    }

    pub fn total_iterations(&self) -> usize {
        self.step_reports.iter().map(|r| r.iterations).sum()
    }
}

/// Value surface over the time-inventory lattice: `values[s][i]` is the
/// value at `times[s]` and inventory node `i`. The last slice is the
/// terminal condition `-ell(q)`; earlier slices were produced backward in
/// time by the implicit scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSurface {
    /// Increasing times spanning `[0, horizon]`, days.
    pub times: Vec<f64>,
    /// One value slice per time, bps·M$.
    pub values: Vec<Vec<f64>>,
}

impl ValueSurface {
    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// Index of the stored slice nearest to time `t`.
    pub fn nearest_time_index(&self, t: f64) -> usize {
        let mut best = 0;
        let mut dist = f64::INFINITY;
        for (s, &ts) in self.times.iter().enumerate() {
            let d = (ts - t).abs();
            if d < dist {
                dist = d;
                best = s;
            }
        }
        best
    }
}

/// Stationary controls read off one time slice of the surface: per node, the
/// optimal quote offset for every trade-size bucket on both sides, and the
/// gated optimal execution rate.
///
/// A quote is `NaN` where it does not exist: either the fill would leave the
/// inventory band, or the matching side has no client flow.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable {
    snapshot_time: f64,
    q_nodes: Vec<f64>,
    sizes: Vec<f64>,
    bid_quotes: Vec<Vec<f64>>,
    ask_quotes: Vec<Vec<f64>>,
    exec_rate: Vec<f64>,
}

impl PolicyTable {
    /// Builds a table from raw columns, checking shape and lattice
    /// regularity. Intended for handcrafted policies in tests and for
    /// deserialized tables; solver output comes from [`extract_policy`].
    pub fn from_parts(
        snapshot_time: f64,
        q_nodes: Vec<f64>,
        sizes: Vec<f64>,
        bid_quotes: Vec<Vec<f64>>,
        ask_quotes: Vec<Vec<f64>>,
        exec_rate: Vec<f64>,
    ) -> Result<Self, SolverError> {
        let n = q_nodes.len();
        let k = sizes.len();
        let fail = |msg: &str| Err(SolverError::PolicyShape(msg.to_string()));
        if !snapshot_time.is_finite() || snapshot_time < 0.0 {
            return fail("snapshot time must be finite and nonnegative");
        }
        if n < 2 {
            return fail("need at least two inventory nodes");
        }
        if k == 0 {
            return fail("need at least one trade-size bucket");
        }
        if q_nodes.iter().any(|q| !q.is_finite()) {
            return fail("inventory nodes must be finite");
        }
        let step = q_nodes[1] - q_nodes[0];
        if step <= 0.0 {
            return fail("inventory nodes must be strictly increasing");
        }
        let uniform = q_nodes
            .windows(2)
            .all(|w| (w[1] - w[0] - step).abs() <= 1e-9 * step.max(1.0));
        if !uniform {
            return fail("inventory nodes must be uniformly spaced");
        }
        if sizes.windows(2).any(|w| w[0] >= w[1]) || sizes[0] <= 0.0 {
            return fail("sizes must be strictly increasing and positive");
        }
        if bid_quotes.len() != n || ask_quotes.len() != n || exec_rate.len() != n {
            return fail("column lengths must match the node count");
        }
        if bid_quotes.iter().chain(&ask_quotes).any(|row| row.len() != k) {
            return fail("quote rows must match the size-bucket count");
        }
        if exec_rate.iter().any(|v| !v.is_finite()) {
            return fail("execution rates must be finite");
        }
        // NaN marks an absent quote; anything else must be finite.
        let quote_ok = |row: &Vec<f64>| row.iter().all(|d| d.is_finite() || d.is_nan());
        if !bid_quotes.iter().all(quote_ok) || !ask_quotes.iter().all(quote_ok) {
            return fail("quotes must be finite or NaN (absent)");
        }
        Ok(Self {
            snapshot_time,
            q_nodes,
            sizes,
            bid_quotes,
            ask_quotes,
            exec_rate,
        })
    }

    pub fn snapshot_time(&self) -> f64 {
        self.snapshot_time
    }

    pub fn n_nodes(&self) -> usize {
        self.q_nodes.len()
    }

    pub fn n_sizes(&self) -> usize {
        self.sizes.len()
    }

    pub fn q_nodes(&self) -> &[f64] {
        &self.q_nodes
    }

    pub fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    /// Bid quote offset at node `i` for size bucket `k`; `NaN` if absent.
    pub fn bid_quote(&self, i: usize, k: usize) -> f64 {
        self.bid_quotes[i][k]
    }

    /// Ask quote offset at node `i` for size bucket `k`; `NaN` if absent.
    pub fn ask_quote(&self, i: usize, k: usize) -> f64 {
        self.ask_quotes[i][k]
    }

    pub fn exec_rate(&self, i: usize) -> f64 {
        self.exec_rate[i]
    }

    pub fn exec_rates(&self) -> &[f64] {
        &self.exec_rate
    }

    /// Lattice spacing implied by the nodes.
    pub fn step(&self) -> f64 {
        self.q_nodes[1] - self.q_nodes[0]
    }

    /// Index of the node nearest to `q`, clamped to the table.
    pub fn nearest_index(&self, q: f64) -> usize {
        let i = ((q - self.q_nodes[0]) / self.step()).round();
        (i.max(0.0) as usize).min(self.q_nodes.len() - 1)
    }

    /// Number of nodes where the execution rate sits at the cap (within
    /// `1e-9` relative), a diagnostic for whether the rate limit binds.
    pub fn rate_cap_count(&self, v_max: f64) -> usize {
        self.exec_rate
            .iter()
            .filter(|v| v.abs() >= v_max * (1.0 - 1e-9))
            .count()
    }

    /// Number of quotes pinned at the offset floor (within `1e-9`), a
    /// diagnostic for whether the quote constraint binds.
    pub fn floor_count(&self, delta_floor: f64) -> usize {
        self.bid_quotes
            .iter()
            .chain(&self.ask_quotes)
            .flatten()
            .filter(|d| d.is_finite() && **d <= -delta_floor + 1e-9)
            .count()
    }
}

/// Contiguous band of inventories around the execution-rate sign change
/// where the rate is exactly zero: client flow is internalized with no
/// external hedging. Reported as the union of the grid cells of the
/// zero-rate nodes, clamped to the grid span, so `width` equals the node
/// count times the step for interior zones; an empty zone has zero width
/// located at the sign change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InternalizationZone {
    /// Lower edge, M$.
    pub q_low: f64,
    /// Upper edge, M$.
    pub q_high: f64,
    /// `q_high - q_low`, M$.
    pub width: f64,
}

/// Precomputed per-solve state: node-indexed model arrays plus warm-start
/// seeds for the quote Newton solves, which change little between adjacent
/// nodes, sweeps and time steps.
struct Engine<'a> {
    params: &'a ModelParams,
    grid: &'a InventoryGrid,
    settings: &'a SolverSettings,
    offsets: Vec<usize>,
    pz: Vec<f64>,
    psi: Vec<f64>,
    kq: Vec<f64>,
    zeta_buy: Vec<f64>,
    zeta_sell: Vec<f64>,
    warm_bid: Vec<f64>,
    warm_ask: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> Engine<'a> {
    fn new(
        params: &'a ModelParams,
        grid: &'a InventoryGrid,
        settings: &'a SolverSettings,
    ) -> Result<Self, SolverError> {
        params.validate()?;
        settings.validate()?;
        let offsets = grid.size_offsets(&params.sizes)?;
        let ramp = settings.ramp(grid)?;
        let n = grid.n_nodes();
        let k = params.sizes.n_buckets();
        let pz: Vec<f64> = params
            .sizes
            .probs()
            .iter()
            .zip(params.sizes.sizes())
            .map(|(p, z)| p * z)
            .collect();
        let psi = grid.nodes().iter().map(|&q| params.running_penalty(q)).collect();
        let kq = grid.nodes().iter().map(|&q| params.impact_k * q).collect();
        let zeta_buy = grid
            .nodes()
            .iter()
            .map(|&q| ramp.eval(grid.q_max() - q))
            .collect();
        let zeta_sell = grid
            .nodes()
            .iter()
            .map(|&q| ramp.eval(grid.q_max() + q))
            .collect();
        Ok(Self {
            params,
            grid,
            settings,
            offsets,
            pz,
            psi,
            kq,
            zeta_buy,
            zeta_sell,
            warm_bid: vec![f64::NAN; n * k],
            warm_ask: vec![f64::NAN; n * k],
            scratch: vec![0.0; n],
        })
    }

    /// Right-hand side of the equation at node `i` evaluated on the slice
    /// `theta`: running penalty, expected quote revenues over reachable
    /// buckets, and the upwinded gated execution term.
    fn rhs(&mut self, i: usize, theta: &[f64]) -> f64 {
        let n = theta.len();
        let p = self.params;
        let nb = self.offsets.len();
        // Bid and ask contributions accumulate separately and merge with
        // single commutative additions: under q -> -q the two sums swap, so
        // this grouping keeps symmetric problems mirror-symmetric to the
        // last bit (fp addition commutes even though it fails to associate).
        let mut bid_sum = 0.0;
        let mut ask_sum = 0.0;
        for k in 0..nb {
            let off = self.offsets[k];
            let z = p.sizes.sizes()[k];
            if i + off < n {
                let arg = (theta[i] - theta[i + off]) / z;
                let sol = quote_opt(&p.bid_curve, p.delta_floor, arg, Some(self.warm_bid[i * nb + k]));
                self.warm_bid[i * nb + k] = sol.delta_star;
                bid_sum += self.pz[k] * sol.hamiltonian_value;
            }
            if i >= off {
                let arg = (theta[i] - theta[i - off]) / z;
                let sol = quote_opt(&p.ask_curve, p.delta_floor, arg, Some(self.warm_ask[i * nb + k]));
                self.warm_ask[i * nb + k] = sol.delta_star;
                ask_sum += self.pz[k] * sol.hamiltonian_value;
            }
        }
        let mut exec_buy = 0.0;
        let mut exec_sell = 0.0;
        if i + 1 < n && self.zeta_buy[i] > 0.0 {
            let fwd = (theta[i + 1] - theta[i]) / self.grid.step();
            let r = (fwd + self.kq[i]).max(0.0);
            exec_buy = self.zeta_buy[i] * rate_hamiltonian(&p.cost, r).value;
        }
        if i >= 1 && self.zeta_sell[i] > 0.0 {
            let bwd = (theta[i] - theta[i - 1]) / self.grid.step();
            let r = (bwd + self.kq[i]).min(0.0);
            exec_sell = self.zeta_sell[i] * rate_hamiltonian(&p.cost, r).value;
        }
        -self.psi[i] + (bid_sum + ask_sum) + (exec_buy + exec_sell)
    }

    /// One implicit step: solves `theta = theta_next + dt * rhs(theta)` by
    /// damped Jacobi iteration. Jacobi (rather than Gauss-Seidel) keeps the
    /// sweep order-independent, which preserves exact mirror symmetry of
    /// symmetric problems.
    fn step(&mut self, theta_next: &[f64], dt: f64) -> Result<(Vec<f64>, StepReport), SolverError> {
        let n = self.grid.n_nodes();
        if theta_next.len() != n {
            return Err(SolverError::SliceShape {
                got: theta_next.len(),
                expected: n,
            });
        }
        if let Some(index) = theta_next.iter().position(|v| !v.is_finite()) {
            return Err(SolverError::SliceNotFinite { index });
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(SolverError::BadTimeStep { dt });
        }
        let omega = self.settings.damping;
        let mut theta = theta_next.to_vec();
        let mut residual = f64::INFINITY;
        for iter in 1..=self.settings.max_iterations {
            for i in 0..n {
                let f = self.rhs(i, &theta);
                self.scratch[i] = theta_next[i] + dt * f;
            }
            residual = 0.0;
            for i in 0..n {
                let r = self.scratch[i] - theta[i];
                if !r.is_finite() {
                    residual = f64::INFINITY;
                    break;
                }
                residual = residual.max(r.abs());
                theta[i] += omega * r;
            }
            // The damped map contracts only while dt times the update's
            // Lipschitz bound stays moderate; a growing or non-finite
            // residual means dt is too large for this model, which is a
            // reportable failure rather than something to iterate through.
            if !residual.is_finite() || residual > 1e12 {
                return Err(SolverError::NoConvergence {
                    residual,
                    iterations: iter,
                    time_index: None,
                });
            }
            if residual < self.settings.tolerance {
                return Ok((
                    theta,
                    StepReport {
                        iterations: iter,
                        residual,
                    },
                ));
            }
        }
        Err(SolverError::NoConvergence {
            residual,
            iterations: self.settings.max_iterations,
            time_index: None,
        })
    }

    /// Reads the optimal controls off one value slice.
    fn policy_from_slice(&mut self, theta: &[f64], snapshot_time: f64) -> PolicyTable {
        let n = theta.len();
        let p = self.params;
        let nb = self.offsets.len();
        let mut bid = vec![vec![f64::NAN; nb]; n];
        let mut ask = vec![vec![f64::NAN; nb]; n];
        let mut rate = vec![0.0; n];
        for i in 0..n {
            for k in 0..nb {
                let z = p.sizes.sizes()[k];
                if i + self.offsets[k] < n && !p.bid_curve.is_null() {
                    let arg = (theta[i] - theta[i + self.offsets[k]]) / z;
                    bid[i][k] =
                        quote_opt(&p.bid_curve, p.delta_floor, arg, Some(self.warm_bid[i * nb + k]))
                            .delta_star;
                }
                if i >= self.offsets[k] && !p.ask_curve.is_null() {
                    let arg = (theta[i] - theta[i - self.offsets[k]]) / z;
                    ask[i][k] =
                        quote_opt(&p.ask_curve, p.delta_floor, arg, Some(self.warm_ask[i * nb + k]))
                            .delta_star;
                }
            }
            let mut v = 0.0;
            if i + 1 < n && self.zeta_buy[i] > 0.0 {
                let fwd = (theta[i + 1] - theta[i]) / self.grid.step();
                let r = (fwd + self.kq[i]).max(0.0);
                v += self.zeta_buy[i] * rate_hamiltonian(&p.cost, r).v_star;
            }
            if i >= 1 && self.zeta_sell[i] > 0.0 {
                let bwd = (theta[i] - theta[i - 1]) / self.grid.step();
                let r = (bwd + self.kq[i]).min(0.0);
                v += self.zeta_sell[i] * rate_hamiltonian(&p.cost, r).v_star;
            }
            rate[i] = v;
        }
        PolicyTable {
            snapshot_time,
            q_nodes: self.grid.nodes().to_vec(),
            sizes: p.sizes.sizes().to_vec(),
            bid_quotes: bid,
            ask_quotes: ask,
            exec_rate: rate,
        }
    }
}

/// One implicit Euler step backward in time: given the slice at `t + dt`,
/// returns the slice at `t` together with its convergence record.
pub fn step_implicit(
    theta_next: &[f64],
    dt: f64,
    params: &ModelParams,
    grid: &InventoryGrid,
    settings: &SolverSettings,
) -> Result<(Vec<f64>, StepReport), SolverError> {
    Engine::new(params, grid, settings)?.step(theta_next, dt)
}

/// Solves the equation backward from the terminal condition
/// `theta(horizon, q) = -ell(q)` in `n_steps` uniform implicit steps.
/// Returns the full surface and the per-step convergence records.
pub fn solve(
    params: &ModelParams,
    grid: &InventoryGrid,
    n_steps: usize,
    settings: &SolverSettings,
) -> Result<(ValueSurface, SolveDiagnostics), SolverError> {
    if n_steps == 0 {
        return Err(SolverError::NoSteps);
    }
    let mut engine = Engine::new(params, grid, settings)?;
    let times: Vec<f64> = (0..=n_steps)
        .map(|s| params.horizon * s as f64 / n_steps as f64)
        .collect();
    let mut values = vec![Vec::new(); n_steps + 1];
    values[n_steps] = grid
        .nodes()
        .iter()
        .map(|&q| -params.terminal_penalty(q))
        .collect();
    let mut reports = vec![
        StepReport {
            iterations: 0,
            residual: 0.0,
        };
        n_steps
    ];
    for s in (0..n_steps).rev() {
        let dt = times[s + 1] - times[s];
        match engine.step(&values[s + 1], dt) {
            Ok((row, report)) => {
                values[s] = row;
                reports[s] = report;
            }
            Err(SolverError::NoConvergence {
                residual,
                iterations,
                ..
            }) => {
                return Err(SolverError::NoConvergence {
                    residual,
                    iterations,
                    time_index: Some(s),
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok((
        ValueSurface { times, values },
        SolveDiagnostics {
            step_reports: reports,
        },
    ))
}

/// Reads the optimal controls off the surface slice nearest to time `t`.
/// Quotes re-solve the pointwise quote problem at the stored value
/// differences; the execution rate uses the same upwind differences and
/// boundary gating as the scheme, so a rate can never push inventory out of
/// the band.
pub fn extract_policy(
    surface: &ValueSurface,
    params: &ModelParams,
    grid: &InventoryGrid,
    t: f64,
    settings: &SolverSettings,
) -> Result<PolicyTable, SolverError> {
    if !t.is_finite() || t < 0.0 || t >= params.horizon {
        return Err(SolverError::TimeOutOfRange {
            t,
            horizon: params.horizon,
        });
    }
    if surface.n_times() < 2 {
        return Err(SolverError::SurfaceShape {
            got: surface.n_times(),
        });
    }
    let s = surface.nearest_time_index(t);
    let theta = &surface.values[s];
    if theta.len() != grid.n_nodes() {
        return Err(SolverError::SliceShape {
            got: theta.len(),
            expected: grid.n_nodes(),
        });
    }
    let mut engine = Engine::new(params, grid, settings)?;
    Ok(engine.policy_from_slice(theta, surface.times[s]))
}

/// Sup-norm distance between the controls at `t = 0` and `t = horizon/2`:
/// quote offsets compared in bps, execution rates scaled by
/// `step / v_max` to a bps-comparable magnitude. Small values mean the
/// backward solution has reached its stationary regime well before `t = 0`.
pub fn stationarity_gap(
    surface: &ValueSurface,
    params: &ModelParams,
    grid: &InventoryGrid,
    settings: &SolverSettings,
) -> Result<f64, SolverError> {
    let early = extract_policy(surface, params, grid, 0.0, settings)?;
    let mid = extract_policy(surface, params, grid, 0.5 * params.horizon, settings)?;
    let rate_scale = grid.step() / params.cost.v_max;
    let mut gap: f64 = 0.0;
    for i in 0..early.n_nodes() {
        for k in 0..early.n_sizes() {
            for (a, b) in [
                (early.bid_quote(i, k), mid.bid_quote(i, k)),
                (early.ask_quote(i, k), mid.ask_quote(i, k)),
            ] {
                // Quote availability depends only on node and bucket, so
                // absence always matches between the two snapshots.
                if a.is_finite() && b.is_finite() {
                    gap = gap.max((a - b).abs());
                }
            }
        }
        gap = gap.max((early.exec_rate(i) - mid.exec_rate(i)).abs() * rate_scale);
    }
    Ok(gap)
}

/// Finds the zero-rate plateau around the sign change of the execution
/// rate. Returns the union of the zero-rate nodes' grid cells (clamped to
/// the grid span); if the rate crosses zero without a plateau the zone is
/// empty, located at the interpolated crossing.
pub fn internalization_zone(policy: &PolicyTable, grid: &InventoryGrid) -> InternalizationZone {
    const TOL: f64 = 1e-9;
    let rates = policy.exec_rates();
    let nodes = policy.q_nodes();
    let n = rates.len();
    let half = 0.5 * grid.step();
    let point = |x: f64| InternalizationZone {
        q_low: x,
        q_high: x,
        width: 0.0,
    };
    // First node where the rate is no longer strictly positive: the start
    // of the plateau, or the far side of a plateau-free crossing.
    let Some(start) = rates.iter().position(|&r| r <= TOL) else {
        return point(nodes[n - 1]);
    };
    if rates[start] < -TOL {
        if start == 0 {
            return point(nodes[0]);
        }
        // No plateau: interpolate the crossing inside the bracketing cell.
        let (r0, r1) = (rates[start - 1], rates[start]);
        return point(nodes[start - 1] + grid.step() * r0 / (r0 - r1));
    }
    let mut end = start;
    while end + 1 < n && rates[end + 1].abs() <= TOL {
        end += 1;
    }
    let q_low = (nodes[start] - half).max(nodes[0]);
    let q_high = (nodes[end] + half).min(nodes[n - 1]);
    InternalizationZone {
        q_low,
        q_high,
        width: q_high - q_low,
    }
}

/// Analytic ceiling on the value surface: horizon times the best possible
/// revenue rate (each side quoting at the revenue-maximizing offset for
/// every bucket, plus the largest possible impact gain from capped
/// execution at the inventory limit).
pub fn value_upper_bound(params: &ModelParams) -> Result<f64, SolverError> {
    let h_bid = crate::hamiltonian::quote_hamiltonian(&params.bid_curve, params.delta_floor, 0.0)?;
    let h_ask = crate::hamiltonian::quote_hamiltonian(&params.ask_curve, params.delta_floor, 0.0)?;
    let mean = params.sizes.mean_size();
    Ok(params.horizon
        * (mean * (h_bid.hamiltonian_value + h_ask.hamiltonian_value)
            + params.impact_k * params.cost.v_max * params.q_max))
}

/// Analytic floor on the value at `(t, q)`: the value of doing nothing,
/// paying the running penalty until the horizon and liquidating at the
/// terminal penalty.
pub fn value_lower_bound(params: &ModelParams, t: f64, q: f64) -> f64 {
    -(params.horizon - t) * params.running_penalty(q) - params.terminal_penalty(q)
}
