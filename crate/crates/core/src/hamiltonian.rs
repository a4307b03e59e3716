//! Pointwise control problems embedded in the dynamic-programming equation:
//! the optimal quote offset for one request bucket, the optimal capped
//! execution rate, and the inventory-gated combination of the two execution
//! directions.

use crate::model::{ExecutionCost, IntensityCurve, ModelError};
use thiserror::Error;

/// Errors raised by the Hamiltonian evaluators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HamiltonianError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{name} must be finite, got {value}")]
    NotFinite { name: &'static str, value: f64 },
    #[error("inventory {q} lies outside the admissible band [-{q_max}, {q_max}]")]
    InventoryOutOfBounds { q: f64, q_max: f64 },
    #[error("ramp width must be finite and strictly positive, got {epsilon}")]
    BadRampWidth { epsilon: f64 },
}

/// Piecewise-linear ramp `zeta(x) = clamp(x / epsilon, 0, 1)`: a Lipschitz
/// stand-in for the indicator `x > 0`, used to gate execution near the
/// inventory limits. Zero at or below 0, one at or above `epsilon`,
/// Lipschitz with constant `1/epsilon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampFunction {
    /// Ramp width, M$. Must be strictly positive.
    pub epsilon: f64,
}

impl RampFunction {
    pub fn new(epsilon: f64) -> Result<Self, HamiltonianError> {
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(HamiltonianError::BadRampWidth { epsilon });
        }
        Ok(Self { epsilon })
    }

    pub fn eval(&self, x: f64) -> f64 {
        (x / self.epsilon).clamp(0.0, 1.0)
    }
}

/// Optimal quote offset and value of one quote control problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuoteSolution {
    /// Maximizing offset, bps. `NaN` for a no-flow curve, where every offset
    /// is trivially optimal.
    pub delta_star: f64,
    /// Supremum value, trades/day·bps.
    pub hamiltonian_value: f64,
}

/// Optimal capped execution rate and value for a linear-in-rate reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSolution {
    /// Maximizing rate, M$/day, in `[-v_max, v_max]`.
    pub v_star: f64,
    /// Supremum of `r v - L(v)`, bps·M$/day. Always nonnegative.
    pub value: f64,
}

/// Value, ungated optimal rate and gated inventory drift of the execution
/// part of the dynamic-programming equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExecSolution {
    /// Gated Hamiltonian value, bps·M$/day.
    pub value: f64,
    /// Optimal execution rate before inventory gating, M$/day.
    pub v_star: f64,
    /// Effective inventory drift after gating, M$/day: the buy part of
    /// `v_star` scaled by the upper-limit ramp plus the sell part scaled by
    /// the lower-limit ramp.
    pub drift: f64,
}

/// Maximizes `lambda(delta) * (delta - p)` over offsets `delta >= -delta_floor`.
///
/// `p` is the marginal value concession per unit size implied by the value
/// surface. For the logistic curve the interior first-order condition
/// `delta - p = (1 + exp(-alpha - beta*delta)) / beta` has a unique root,
/// found by safeguarded Newton within an analytic bracket to a residual
/// below 1e-12; when the root falls below `-delta_floor` the floor binds and
/// the value is re-evaluated at the boundary.
pub fn quote_hamiltonian(
    curve: &IntensityCurve,
    delta_floor: f64,
    p: f64,
) -> Result<QuoteSolution, HamiltonianError> {
    curve.validate()?;
    if !p.is_finite() {
        return Err(HamiltonianError::NotFinite {
            name: "p",
            value: p,
        });
    }
    if !delta_floor.is_finite() {
        return Err(HamiltonianError::NotFinite {
            name: "delta_floor",
            value: delta_floor,
        });
    }
    Ok(quote_opt(curve, delta_floor, p, None))
}

/// Unvalidated quote optimizer with an optional warm start, for solver hot
/// loops. `warm` is clamped into the analytic bracket, so a stale seed can
/// slow convergence but never break it.
pub(crate) fn quote_opt(
    curve: &IntensityCurve,
    delta_floor: f64,
    p: f64,
    warm: Option<f64>,
) -> QuoteSolution {
    if curve.is_null() {
        return QuoteSolution {
            delta_star: f64::NAN,
            hamiltonian_value: 0.0,
        };
    }
    if !p.is_finite() {
        // Let a diverging caller see NaN instead of a panic; the solver's
        // inner iteration turns this into a non-convergence report.
        return QuoteSolution {
            delta_star: f64::NAN,
            hamiltonian_value: f64::NAN,
        };
    }
    let alpha = curve.alpha;
    let beta = curve.beta;
    // First-order condition g(d) = d - p - (1 + exp(-alpha - beta d))/beta,
    // strictly increasing and concave, so Newton with a bisection safeguard
    // cannot stall. Analytic bracket: at lo the residual is -exp(-c)/beta < 0
    // with c = alpha + beta p + 1; at hi it is (m - exp(-c - m))/beta > 0
    // because m >= max(1, 1 - c).
    let c = alpha + beta * p + 1.0;
    let mut lo = p + 1.0 / beta;
    let m = if c >= 0.0 { 1.0 } else { 1.0 - c };
    let mut hi = p + (1.0 + m) / beta;
    let mut x = match warm {
        Some(w) if w.is_finite() => w.clamp(lo, hi),
        // Starting from hi keeps the first residual moderate even when the
        // residual at lo is astronomically large (very negative c).
        _ => hi,
    };
    for _ in 0..100 {
        let e = (-alpha - beta * x).exp();
        let g = x - p - (1.0 + e) / beta;
        if g.abs() <= 1e-12 {
            break;
        }
        if g < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let step = g / (1.0 + e);
        let next = x - step;
        x = if next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            break;
        }
    }
    let delta_star = if x < -delta_floor { -delta_floor } else { x };
    QuoteSolution {
        delta_star,
        hamiltonian_value: curve.eval(delta_star) * (delta_star - p),
    }
}

/// Maximizes `r v - L(v)` over rates `|v| <= v_max` in closed form.
///
/// The proportional part of the cost creates a dead zone: `|r| <= phi`
/// yields `(0, 0)`. Outside it the unconstrained optimum
/// `(|r| - phi) / (2 eta)` is clamped to the cap. The value is nonnegative
/// and even in `r`; the rate is odd and nondecreasing in `r`.
pub fn rate_hamiltonian(cost: &ExecutionCost, r: f64) -> RateSolution {
    let magnitude = ((r.abs() - cost.phi) / (2.0 * cost.eta))
        .max(0.0)
        .min(cost.v_max);
    let v_star = if r < 0.0 { -magnitude } else { magnitude };
    RateSolution {
        v_star,
        value: r * v_star - cost.eval_unchecked(v_star),
    }
}

/// Execution part of the dynamic-programming equation at inventory `q` with
/// marginal value `p`: both trade directions priced at the impact-shifted
/// signal `r = p + impact_k * q`, each gated by the ramp distance to its
/// inventory limit.
///
/// Buying is gated by `zeta(q_max - q)`, selling by `zeta(q_max + q)`, so
/// the returned drift can never push inventory beyond the band.
pub fn exec_hamiltonian(
    cost: &ExecutionCost,
    ramp: &RampFunction,
    impact_k: f64,
    q_max: f64,
    p: f64,
    q: f64,
) -> Result<ExecSolution, HamiltonianError> {
    if !p.is_finite() {
        return Err(HamiltonianError::NotFinite {
            name: "p",
            value: p,
        });
    }
    if !q.is_finite() || q.abs() > q_max {
        return Err(HamiltonianError::InventoryOutOfBounds { q, q_max });
    }
    let r = p + impact_k * q;
    let gate_buy = ramp.eval(q_max - q);
    let gate_sell = ramp.eval(q_max + q);
    let buy = rate_hamiltonian(cost, r.max(0.0));
    let sell = rate_hamiltonian(cost, r.min(0.0));
    Ok(ExecSolution {
        value: gate_buy * buy.value + gate_sell * sell.value,
        // Exactly one of the two parts is nonzero, so the sum recovers the
        // ungated optimizer of r v - L(v).
        v_star: buy.v_star + sell.v_star,
        drift: gate_buy * buy.v_star + gate_sell * sell.v_star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference_curve() -> IntensityCurve {
        IntensityCurve::new(1000.0, -1.0, 10.0).unwrap()
    }

    fn reference_cost() -> ExecutionCost {
        ExecutionCost::new(1e-5, 0.1, 5000.0).unwrap()
    }

    #[test]
    fn ramp_shape_and_lipschitz() {
        let z = RampFunction::new(2.0).unwrap();
        assert_eq!(z.eval(-1.0), 0.0);
        assert_eq!(z.eval(0.0), 0.0);
        assert_eq!(z.eval(1.0), 0.5);
        assert_eq!(z.eval(2.0), 1.0);
        assert_eq!(z.eval(5.0), 1.0);
        for i in 0..50 {
            let a = -1.0 + 0.1 * i as f64;
            let b = a + 0.07;
            assert!((z.eval(b) - z.eval(a)).abs() <= 0.07 / 2.0 + 1e-15);
            assert!(z.eval(b) >= z.eval(a));
        }
        assert!(RampFunction::new(0.0).is_err());
        assert!(RampFunction::new(f64::NAN).is_err());
    }

    #[test]
    fn quote_first_order_condition_is_satisfied() {
        let curve = reference_curve();
        for p in [-1.0, -0.3, 0.0, 0.2, 1.0, 5.0] {
            let sol = quote_hamiltonian(&curve, 10.0, p).unwrap();
            let d = sol.delta_star;
            let residual = d - p - (1.0 + (1.0 - 10.0 * d).exp()) / 10.0;
            assert!(
                residual.abs() < 1e-11,
                "residual {residual} at p = {p}"
            );
            assert_relative_eq!(
                sol.hamiltonian_value,
                curve.eval(d) * (d - p),
                epsilon = 1e-12
            );
            assert!(sol.hamiltonian_value >= 0.0);
        }
    }

    #[test]
    fn quote_floor_binds_and_boundary_value_is_used() {
        let curve = reference_curve();
        // Small floor forces the constraint: the interior root at p = -1 is
        // about -0.107, below -0.05.
        let sol = quote_hamiltonian(&curve, 0.05, -1.0).unwrap();
        assert_eq!(sol.delta_star, -0.05);
        let expected = curve.eval(-0.05) * (-0.05 + 1.0);
        assert_relative_eq!(sol.hamiltonian_value, expected, epsilon = 1e-12);
        // The boundary beats nearby admissible offsets.
        for d in [-0.05 + 1e-3, -0.04, 0.0, 0.1] {
            assert!(curve.eval(d) * (d + 1.0) <= sol.hamiltonian_value + 1e-12);
        }
    }

    #[test]
    fn quote_warm_start_agrees_with_cold_start() {
        let curve = reference_curve();
        let cold = quote_opt(&curve, 10.0, 0.3, None);
        for seed in [-5.0, 0.0, 0.3456, 2.0, f64::NAN] {
            let warm = quote_opt(&curve, 10.0, 0.3, Some(seed));
            assert!((warm.delta_star - cold.delta_star).abs() < 1e-10);
        }
    }

    #[test]
    fn quote_null_curve_has_zero_value() {
        let curve = IntensityCurve::new(0.0, -1.0, 10.0).unwrap();
        let sol = quote_hamiltonian(&curve, 10.0, 0.7).unwrap();
        assert_eq!(sol.hamiltonian_value, 0.0);
        assert!(sol.delta_star.is_nan());
    }

    #[test]
    fn quote_rejects_bad_inputs() {
        assert!(quote_hamiltonian(&reference_curve(), 10.0, f64::NAN).is_err());
        assert!(quote_hamiltonian(&reference_curve(), f64::INFINITY, 0.0).is_err());
        let bad = IntensityCurve {
            lambda_max: 1000.0,
            alpha: -1.0,
            beta: 0.0,
        };
        assert!(quote_hamiltonian(&bad, 10.0, 0.0).is_err());
    }

    #[test]
    fn rate_closed_form_example() {
        let sol = rate_hamiltonian(&reference_cost(), 0.3);
        assert_eq!(sol.v_star, 5000.0);
        assert_relative_eq!(sol.value, 750.0, epsilon = 1e-9);
    }

    #[test]
    fn rate_dead_zone_and_antisymmetry() {
        let cost = reference_cost();
        for r in [0.0, 0.05, -0.1, 0.1] {
            let sol = rate_hamiltonian(&cost, r);
            assert_eq!(sol.v_star, 0.0);
            assert_eq!(sol.value, 0.0);
        }
        for r in [0.11, 0.2, 0.735, 3.0] {
            let plus = rate_hamiltonian(&cost, r);
            let minus = rate_hamiltonian(&cost, -r);
            assert_eq!(plus.v_star, -minus.v_star);
            assert_eq!(plus.value, minus.value);
            assert!(plus.value > 0.0);
            assert!(plus.v_star > 0.0);
        }
    }

    #[test]
    fn rate_interior_optimum_matches_formula() {
        let cost = reference_cost();
        // r = 0.15: unconstrained (0.15 - 0.1) / 2e-5 = 2500, inside the cap.
        let sol = rate_hamiltonian(&cost, 0.15);
        assert_relative_eq!(sol.v_star, 2500.0, epsilon = 1e-9);
        assert_relative_eq!(
            sol.value,
            0.15 * 2500.0 - (1e-5 * 2500.0 * 2500.0 + 0.1 * 2500.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn exec_cannot_buy_at_the_upper_limit() {
        let cost = reference_cost();
        let ramp = RampFunction::new(1.0).unwrap();
        let sol = exec_hamiltonian(&cost, &ramp, 0.005, 50.0, 1.0, 50.0).unwrap();
        // Signal p + kq = 1.25 > 0 wants to buy, but the buy gate is closed
        // and the sell part sits in its dead zone.
        assert_eq!(sol.value, 0.0);
        assert_eq!(sol.drift, 0.0);
        assert!(sol.v_star > 0.0);
    }

    #[test]
    fn exec_zero_signal_is_inactive() {
        let cost = reference_cost();
        let ramp = RampFunction::new(1.0).unwrap();
        let sol = exec_hamiltonian(&cost, &ramp, 0.005, 50.0, -0.005 * 10.0, 10.0).unwrap();
        assert_eq!(sol.value, 0.0);
        assert_eq!(sol.v_star, 0.0);
        assert_eq!(sol.drift, 0.0);
    }

    #[test]
    fn exec_gates_scale_the_active_direction() {
        let cost = reference_cost();
        let ramp = RampFunction::new(2.0).unwrap();
        // Halfway up the upper ramp: gate_buy = 0.5, gate_sell = 1.
        let q = 49.0;
        let sol = exec_hamiltonian(&cost, &ramp, 0.0, 50.0, 0.5, q).unwrap();
        let ungated = rate_hamiltonian(&cost, 0.5);
        assert_relative_eq!(sol.value, 0.5 * ungated.value, epsilon = 1e-12);
        assert_relative_eq!(sol.drift, 0.5 * ungated.v_star, epsilon = 1e-12);
        assert_eq!(sol.v_star, ungated.v_star);
    }

    #[test]
    fn exec_rejects_out_of_band_inventory() {
        let cost = reference_cost();
        let ramp = RampFunction::new(1.0).unwrap();
        assert_eq!(
            exec_hamiltonian(&cost, &ramp, 0.005, 50.0, 0.0, 50.1),
            Err(HamiltonianError::InventoryOutOfBounds {
                q: 50.1,
                q_max: 50.0
            })
        );
        assert!(exec_hamiltonian(&cost, &ramp, 0.005, 50.0, f64::NAN, 0.0).is_err());
    }
}
