//! Monte Carlo replay of the full dealer dynamics under a fixed policy
//! table: Bernoulli-thinned client fills, gated external execution, price
//! impact and the running inventory penalty.
//!
//! Two objective estimators are accumulated on the same paths: the full
//! mark-to-market objective (cash plus inventory value minus penalties) and
//! a reduced form (quote revenues plus impact gain minus execution cost and
//! penalties) whose difference from the full form is a mean-zero martingale.
//! Both use one uniform and one normal draw per step regardless of
//! parameters, so estimates with paired seeds stay aligned draw-for-draw
//! across parameter changes.

use crate::model::{ModelError, ModelParams};
use crate::solver::PolicyTable;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{name} must be {constraint}, got {value}")]
    BadConfig {
        name: &'static str,
        constraint: &'static str,
        value: f64,
    },
    #[error("no start inventories supplied")]
    NoStarts,
    #[error("start inventory {q0} is not a node of the policy lattice")]
    StartOffGrid { q0: f64 },
    #[error("policy size buckets do not match the model's trade-size distribution")]
    SizesMismatch,
    #[error("per-step fill probability {p} violates the rare-event bound {bound}; shrink dt_sim")]
    StepProbabilityTooLarge { p: f64, bound: f64 },
    #[error("policy execution rate {v} at q = {q} exceeds the cap {v_max}")]
    RateAboveCap { v: f64, q: f64, v_max: f64 },
    #[error("policy quote {delta} at q = {q} lies below the floor -{delta_floor}")]
    QuoteBelowFloor {
        delta: f64,
        q: f64,
        delta_floor: f64,
    },
    #[error("visited inventory {q} has no policy node within half a lattice step")]
    OffPolicyGrid { q: f64 },
    #[error("inventory {q} escaped the risk band [-{q_max}, {q_max}] at t = {t}")]
    InventoryEscaped { q: f64, q_max: f64, t: f64 },
    #[error("path {index} failed: {source}")]
    Path {
        index: usize,
        #[source]
        source: Box<SimError>,
    },
}

/// Monte Carlo run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Paths per start inventory.
    pub n_paths: usize,
    /// Simulation step, days. Must keep every per-bucket fill probability
    /// per step below 0.1 for the Bernoulli thinning to be accurate.
    pub dt_sim: f64,
    /// Root seed; per-path seeds derive from it via [`path_seed`].
    pub seed: u64,
    /// Start inventories, each required to sit on the policy lattice, M$.
    pub start_inventories: Vec<f64>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_paths == 0 {
            return Err(SimError::BadConfig {
                name: "n_paths",
                constraint: "at least 1",
                value: 0.0,
            });
        }
        if !self.dt_sim.is_finite() || self.dt_sim <= 0.0 {
            return Err(SimError::BadConfig {
                name: "dt_sim",
                constraint: "finite and strictly positive",
                value: self.dt_sim,
            });
        }
        if self.start_inventories.is_empty() {
            return Err(SimError::NoStarts);
        }
        if let Some(&q0) = self.start_inventories.iter().find(|q| !q.is_finite()) {
            return Err(SimError::BadConfig {
                name: "start_inventories",
                constraint: "finite",
                value: q0,
            });
        }
        Ok(())
    }
}

/// Market state carried along one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathState {
    /// Elapsed time, days.
    pub t: f64,
    /// Inventory, M$.
    pub q: f64,
    /// Cash relative to the initial reference price, bps·M$.
    pub x: f64,
    /// Reference-price offset from its initial value, bps.
    pub s: f64,
    /// Accumulated running penalty, bps·M$.
    pub accrued_psi: f64,
}

/// Terminal outcome of one simulated path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    /// Terminal market state.
    pub state: PathState,
    /// Full mark-to-market objective: `x + q s - ell(q) - accrued_psi`.
    pub objective: f64,
    /// Reduced-form objective with the martingale price term removed;
    /// equals `objective` in expectation.
    pub objective_reduced: f64,
    /// Total client notional filled, M$.
    pub internalized_notional: f64,
    /// Total externally executed notional, M$.
    pub externalized_notional: f64,
    /// Client fills on the bid side, one count per size bucket.
    pub bid_fills: Vec<u64>,
    /// Client fills on the ask side, one count per size bucket.
    pub ask_fills: Vec<u64>,
}

/// Objective statistics for one start inventory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimStats {
    /// Start inventory, M$.
    pub q0: f64,
    /// Paths simulated.
    pub n_paths: usize,
    /// Sample mean of the objective, bps·M$.
    pub mean_objective: f64,
    /// Standard error of the mean, bps·M$; `INFINITY` when a single path
    /// makes the spread inestimable.
    pub std_error: f64,
    /// Mean client notional filled per path, M$.
    pub mean_internalized_notional: f64,
    /// Mean externally executed notional per path, M$.
    pub mean_externalized_notional: f64,
}

/// Deterministic per-path seed: SplitMix64 of the root seed offset by a
/// golden-ratio stride of the path index, so nearby indices get
/// decorrelated streams while (seed, index) fully determine the path.
pub fn path_seed(seed: u64, path_index: u64) -> u64 {
    let mut z = seed.wrapping_add(
        path_index
            .wrapping_add(1)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15),
    );
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-run tables resolved once from (policy, params, config): per-node
/// cumulative fill probabilities per step (bid buckets then ask buckets)
/// and flattened quote/rate lookups.
struct Prepared<'a> {
    params: &'a ModelParams,
    node0: f64,
    step: f64,
    n_nodes: usize,
    n_buckets: usize,
    sizes: Vec<f64>,
    bid_quotes: Vec<f64>,
    ask_quotes: Vec<f64>,
    rates: Vec<f64>,
    cum: Vec<f64>,
    total: Vec<f64>,
    dt: f64,
    last_dt: f64,
    n_steps: usize,
    sqrt_dt: f64,
    sqrt_last_dt: f64,
}

impl<'a> Prepared<'a> {
    fn new(
        policy: &'a PolicyTable,
        params: &'a ModelParams,
        config: &SimConfig,
    ) -> Result<Self, SimError> {
        params.validate()?;
        config.validate()?;
        let nb = params.sizes.n_buckets();
        if policy.n_sizes() != nb
            || policy
                .sizes()
                .iter()
                .zip(params.sizes.sizes())
                .any(|(a, b)| (a - b).abs() > 1e-9)
        {
            return Err(SimError::SizesMismatch);
        }
        for &q0 in &config.start_inventories {
            let i = policy.nearest_index(q0);
            if (policy.q_nodes()[i] - q0).abs() > 1e-9 {
                return Err(SimError::StartOffGrid { q0 });
            }
        }
        // Rare-event validity of at-most-one-fill-per-step thinning.
        let bound = 0.1;
        let worst_share = params
            .sizes
            .probs()
            .iter()
            .fold(0.0f64, |a, &p| a.max(p));
        for curve in [&params.bid_curve, &params.ask_curve] {
            let p = curve.lambda_max * worst_share * config.dt_sim;
            if p >= bound {
                return Err(SimError::StepProbabilityTooLarge { p, bound });
            }
        }
        let n = policy.n_nodes();
        let mut bid_quotes = vec![f64::NAN; n * nb];
        let mut ask_quotes = vec![f64::NAN; n * nb];
        let mut rates = vec![0.0; n];
        let mut cum = vec![0.0; n * 2 * nb];
        let mut total = vec![0.0; n];
        for i in 0..n {
            let q = policy.q_nodes()[i];
            let v = policy.exec_rate(i);
            if v.abs() > params.cost.v_max * (1.0 + 1e-9) {
                return Err(SimError::RateAboveCap {
                    v,
                    q,
                    v_max: params.cost.v_max,
                });
            }
            rates[i] = v;
            let mut acc = 0.0;
            for k in 0..nb {
                let d = policy.bid_quote(i, k);
                bid_quotes[i * nb + k] = d;
                if d.is_finite() {
                    if d < -params.delta_floor - 1e-9 {
                        return Err(SimError::QuoteBelowFloor {
                            delta: d,
                            q,
                            delta_floor: params.delta_floor,
                        });
                    }
                    acc += params.sizes.probs()[k] * params.bid_curve.eval(d) * config.dt_sim;
                }
                cum[i * 2 * nb + k] = acc;
            }
            for k in 0..nb {
                let d = policy.ask_quote(i, k);
                ask_quotes[i * nb + k] = d;
                if d.is_finite() {
                    if d < -params.delta_floor - 1e-9 {
                        return Err(SimError::QuoteBelowFloor {
                            delta: d,
                            q,
                            delta_floor: params.delta_floor,
                        });
                    }
                    acc += params.sizes.probs()[k] * params.ask_curve.eval(d) * config.dt_sim;
                }
                cum[i * 2 * nb + nb + k] = acc;
            }
            if acc >= 1.0 {
                return Err(SimError::StepProbabilityTooLarge { p: acc, bound: 1.0 });
            }
            total[i] = acc;
        }
        // The final step absorbs the remainder so the loop lands exactly on
        // the horizon.
        let n_steps = ((params.horizon / config.dt_sim - 1e-9).ceil() as usize).max(1);
        let last_dt = params.horizon - (n_steps - 1) as f64 * config.dt_sim;
        Ok(Self {
            params,
            node0: policy.q_nodes()[0],
            step: policy.step(),
            n_nodes: n,
            n_buckets: nb,
            sizes: policy.sizes().to_vec(),
            bid_quotes,
            ask_quotes,
            rates,
            cum,
            total,
            dt: config.dt_sim,
            last_dt,
            n_steps,
            sqrt_dt: config.dt_sim.sqrt(),
            sqrt_last_dt: last_dt.sqrt(),
        })
    }

    fn run_path(&self, q0: f64, seed: u64) -> Result<PathSample, SimError> {
        let p = self.params;
        let impact = p.impact_k;
        let q_max = p.q_max;
        let sigma = p.sigma;
        let nb = self.n_buckets;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut q = q0;
        let mut s = 0.0;
        let mut x = 0.0;
        let mut accrued = 0.0;
        let mut reduced = 0.0;
        let mut internalized = 0.0;
        let mut externalized = 0.0;
        let mut bid_fills = vec![0u64; nb];
        let mut ask_fills = vec![0u64; nb];
        let mut t = 0.0;
        for step in 0..self.n_steps {
            let last = step + 1 == self.n_steps;
            let (dt, sqrt_dt) = if last {
                (self.last_dt, self.sqrt_last_dt)
            } else {
                (self.dt, self.sqrt_dt)
            };
            let node_f = (q - self.node0) / self.step;
            let node = (node_f.round().max(0.0) as usize).min(self.n_nodes - 1);
            if (q - (self.node0 + node as f64 * self.step)).abs() > 0.5 * self.step + 1e-9 {
                return Err(SimError::OffPolicyGrid { q });
            }
            let w = self.rates[node];
            // One uniform and one normal per step, in this order, always.
            let u: f64 = rng.random();
            let xi: f64 = rng.sample(StandardNormal);
            // The shorter final step scales every fill probability by
            // dt/dt_sim; rescaling u is equivalent and keeps the
            // precomputed thresholds untouched.
            let ur = if last { u * (self.dt / dt) } else { u };
            if ur < self.total[node] {
                let base = node * 2 * nb;
                let mut j = 0;
                while ur >= self.cum[base + j] {
                    j += 1;
                }
                if j < nb {
                    let z = self.sizes[j];
                    if q + z <= q_max + 1e-9 {
                        let d = self.bid_quotes[node * nb + j];
                        x -= z * (s - d);
                        q += z;
                        reduced += z * d;
                        internalized += z;
                        bid_fills[j] += 1;
                    }
                } else {
                    let z = self.sizes[j - nb];
                    if q - z >= -q_max - 1e-9 {
                        let d = self.ask_quotes[node * nb + (j - nb)];
                        x += z * (s + d);
                        q -= z;
                        reduced += z * d;
                        internalized += z;
                        ask_fills[j - nb] += 1;
                    }
                }
            }
            // Continuous updates from the post-fill state. The cash and
            // impact-gain integrals use the mid-step price/inventory so the
            // deterministic impact contribution integrates exactly.
            let psi = p.running_penalty(q);
            let cost = p.cost.eval_unchecked(w);
            accrued += psi * dt;
            reduced += (impact * w * (q + 0.5 * w * dt) - cost - psi) * dt;
            x -= (w * (s + 0.5 * impact * w * dt) + cost) * dt;
            q += w * dt;
            s += sigma * sqrt_dt * xi + impact * w * dt;
            externalized += w.abs() * dt;
            t += dt;
            if q.abs() > q_max + 1e-9 {
                return Err(SimError::InventoryEscaped { q, q_max, t });
            }
        }
        let terminal = p.terminal_penalty(q);
        Ok(PathSample {
            state: PathState {
                t: p.horizon,
                q,
                x,
                s,
                accrued_psi: accrued,
            },
            objective: x + q * s - terminal - accrued,
            objective_reduced: reduced - terminal,
            internalized_notional: internalized,
            externalized_notional: externalized,
            bid_fills,
            ask_fills,
        })
    }
}

/// Compensated (Neumaier) sum, so estimator means do not depend on
/// accumulation luck across hundreds of thousands of samples.
fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

fn stats_from(q0: f64, samples: &[PathSample], pick: fn(&PathSample) -> f64) -> SimStats {
    let n = samples.len();
    let nf = n as f64;
    let mean = compensated_sum(samples.iter().map(pick)) / nf;
    let std_error = if n < 2 {
        f64::INFINITY
    } else {
        let ss = compensated_sum(samples.iter().map(|s| {
            let d = pick(s) - mean;
            d * d
        }));
        (ss / (nf * (nf - 1.0))).sqrt()
    };
    SimStats {
        q0,
        n_paths: n,
        mean_objective: mean,
        std_error,
        mean_internalized_notional: compensated_sum(
            samples.iter().map(|s| s.internalized_notional),
        ) / nf,
        mean_externalized_notional: compensated_sum(
            samples.iter().map(|s| s.externalized_notional),
        ) / nf,
    }
}

/// Simulates one path from inventory `q0` with an explicit per-path seed
/// (normally produced by [`path_seed`]).
pub fn simulate_path(
    policy: &PolicyTable,
    params: &ModelParams,
    config: &SimConfig,
    q0: f64,
    seed: u64,
) -> Result<PathSample, SimError> {
    let prepared = Prepared::new(policy, params, config)?;
    let i = policy.nearest_index(q0);
    if (policy.q_nodes()[i] - q0).abs() > 1e-9 {
        return Err(SimError::StartOffGrid { q0 });
    }
    prepared.run_path(q0, seed)
}

fn estimate_with(
    policy: &PolicyTable,
    params: &ModelParams,
    config: &SimConfig,
    pick: fn(&PathSample) -> f64,
) -> Result<Vec<SimStats>, SimError> {
    let prepared = Prepared::new(policy, params, config)?;
    config
        .start_inventories
        .iter()
        .map(|&q0| {
            let samples: Result<Vec<PathSample>, SimError> = (0..config.n_paths)
                .into_par_iter()
                .map(|i| {
                    prepared
                        .run_path(q0, path_seed(config.seed, i as u64))
                        .map_err(|e| SimError::Path {
                            index: i,
                            source: Box::new(e),
                        })
                })
                .collect();
            Ok(stats_from(q0, &samples?, pick))
        })
        .collect()
}

/// Estimates the full mark-to-market objective per start inventory:
/// `n_paths` paths each, deterministic per-path seeds, mean and standard
/// error of the samples.
pub fn estimate_value(
    policy: &PolicyTable,
    params: &ModelParams,
    config: &SimConfig,
) -> Result<Vec<SimStats>, SimError> {
    estimate_with(policy, params, config, |s| s.objective)
}

/// Same engine and seeds as [`estimate_value`] but reporting the
/// reduced-form objective, whose samples are independent of the price
/// noise whenever the running penalty is off.
pub fn estimate_value_reduced(
    policy: &PolicyTable,
    params: &ModelParams,
    config: &SimConfig,
) -> Result<Vec<SimStats>, SimError> {
    estimate_with(policy, params, config, |s| s.objective_reduced)
}
