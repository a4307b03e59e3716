//! Model primitives shared by every other module: client-flow intensity
//! curves, the discrete trade-size distribution, the external execution cost,
//! and the running/terminal inventory penalties.

use thiserror::Error;

/// Validation and domain errors raised by model primitives.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{name} must be finite, got {value}")]
    NotFinite { name: &'static str, value: f64 },
    #[error("{name} must be {constraint}, got {value}")]
    OutOfRange {
        name: &'static str,
        constraint: &'static str,
        value: f64,
    },
    #[error("trade sizes and probabilities must have equal nonzero length, got {n_sizes} sizes and {n_probs} probabilities")]
    SizeGridShape { n_sizes: usize, n_probs: usize },
    #[error("trade sizes must be finite, strictly positive and strictly increasing")]
    SizesNotIncreasing,
    #[error("size probabilities must be in [0, 1] and sum to 1 within 1e-12, got sum {sum}")]
    ProbsNotNormalized { sum: f64 },
    #[error("execution rate {rate} exceeds the cap {v_max}")]
    RateAboveCap { rate: f64, v_max: f64 },
}

fn require_finite(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NotFinite { name, value })
    }
}

/// Arrival intensity of client requests as a function of the quote offset:
/// `lambda(delta) = lambda_max / (1 + exp(alpha + beta * delta))`.
///
/// `beta > 0` makes the intensity strictly decreasing in the offset and
/// vanishing as `delta -> +inf`. `lambda_max = 0` is accepted as the
/// degenerate no-flow curve used to switch one side of the book off; all
/// consumers treat that side as inactive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityCurve {
    /// Request rate as the offset goes to negative infinity, trades/day.
    pub lambda_max: f64,
    /// Dimensionless midpoint shift of the logistic.
    pub alpha: f64,
    /// Offset sensitivity, 1/bps.
    pub beta: f64,
}

impl IntensityCurve {
    pub fn new(lambda_max: f64, alpha: f64, beta: f64) -> Result<Self, ModelError> {
        let curve = Self {
            lambda_max,
            alpha,
            beta,
        };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        require_finite("lambda_max", self.lambda_max)?;
        require_finite("alpha", self.alpha)?;
        require_finite("beta", self.beta)?;
        if self.lambda_max < 0.0 {
            return Err(ModelError::OutOfRange {
                name: "lambda_max",
                constraint: "nonnegative",
                value: self.lambda_max,
            });
        }
        if self.beta <= 0.0 {
            return Err(ModelError::OutOfRange {
                name: "beta",
                constraint: "strictly positive",
                value: self.beta,
            });
        }
        Ok(())
    }

    /// Fill rate at quote offset `delta` (bps), in trades/day.
    pub fn eval(&self, delta: f64) -> f64 {
        // exp overflow to +inf gives the correct zero limit for large delta.
        self.lambda_max / (1.0 + (self.alpha + self.beta * delta).exp())
    }

    /// True for the degenerate no-flow curve (side switched off).
    pub fn is_null(&self) -> bool {
        self.lambda_max == 0.0
    }
}

/// Discrete distribution of client trade sizes: buckets `z_k` (M$) with
/// probabilities `p_k` summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeGrid {
    sizes: Vec<f64>,
    probs: Vec<f64>,
}

impl SizeGrid {
    pub fn new(sizes: Vec<f64>, probs: Vec<f64>) -> Result<Self, ModelError> {
        if sizes.is_empty() || sizes.len() != probs.len() {
            return Err(ModelError::SizeGridShape {
                n_sizes: sizes.len(),
                n_probs: probs.len(),
            });
        }
        let increasing = sizes
            .windows(2)
            .all(|w| w[0] < w[1] && w[0].is_finite() && w[1].is_finite());
        if !increasing || !sizes[0].is_finite() || sizes[0] <= 0.0 {
            return Err(ModelError::SizesNotIncreasing);
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(ModelError::ProbsNotNormalized {
                sum: probs.iter().sum(),
            });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(ModelError::ProbsNotNormalized { sum });
        }
        Ok(Self { sizes, probs })
    }

    pub fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n_buckets(&self) -> usize {
        self.sizes.len()
    }

    /// Expected trade size, M$.
    pub fn mean_size(&self) -> f64 {
        self.sizes
            .iter()
            .zip(&self.probs)
            .map(|(z, p)| z * p)
            .sum()
    }
}

/// Instantaneous external execution cost `L(v) = eta * v^2 + phi * |v|`
/// with the admissible-rate cap `|v| <= v_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExecutionCost {
    /// Quadratic cost coefficient, bps·day/M$.
    pub eta: f64,
    /// Proportional cost, bps.
    pub phi: f64,
    /// Execution rate cap, M$/day.
    pub v_max: f64,
}

impl ExecutionCost {
    pub fn new(eta: f64, phi: f64, v_max: f64) -> Result<Self, ModelError> {
        let cost = Self { eta, phi, v_max };
        cost.validate()?;
        Ok(cost)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        require_finite("eta", self.eta)?;
        require_finite("phi", self.phi)?;
        require_finite("v_max", self.v_max)?;
        if self.eta <= 0.0 {
            return Err(ModelError::OutOfRange {
                name: "eta",
                constraint: "strictly positive",
                value: self.eta,
            });
        }
        if self.phi < 0.0 {
            return Err(ModelError::OutOfRange {
                name: "phi",
                constraint: "nonnegative",
                value: self.phi,
            });
        }
        if self.v_max <= 0.0 {
            return Err(ModelError::OutOfRange {
                name: "v_max",
                constraint: "strictly positive",
                value: self.v_max,
            });
        }
        Ok(())
    }

    /// Cost rate at execution rate `v` (M$/day), in bps·M$/day.
    /// Rejects rates beyond the cap.
    pub fn eval(&self, v: f64) -> Result<f64, ModelError> {
        if v.abs() > self.v_max {
            return Err(ModelError::RateAboveCap {
                rate: v,
                v_max: self.v_max,
            });
        }
        Ok(self.eval_unchecked(v))
    }

    /// Cost rate without the cap check; callers guarantee `|v| <= v_max`.
    pub(crate) fn eval_unchecked(&self, v: f64) -> f64 {
        self.eta * v * v + self.phi * v.abs()
    }
}

/// Complete market, cost and risk parameterization of the dealer problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Reference price volatility, bps/sqrt(day).
    pub sigma: f64,
    /// Permanent impact of external execution on the reference price, bps/M$.
    pub impact_k: f64,
    /// Risk-aversion weight of the running inventory penalty, 1/(bps·M$).
    pub gamma: f64,
    /// Trading horizon T, days.
    pub horizon: f64,
    /// Inventory risk limit, M$: admissible inventories are [-q_max, q_max].
    pub q_max: f64,
    /// Lower bound on quote offsets, bps: offsets are constrained to
    /// `delta >= -delta_floor`.
    pub delta_floor: f64,
    /// Intensity of client sell requests (dealer buys at the bid).
    pub bid_curve: IntensityCurve,
    /// Intensity of client buy requests (dealer sells at the ask).
    pub ask_curve: IntensityCurve,
    /// Trade-size distribution, shared by both sides.
    pub sizes: SizeGrid,
    /// External execution cost.
    pub cost: ExecutionCost,
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        require_finite("sigma", self.sigma)?;
        require_finite("impact_k", self.impact_k)?;
        require_finite("gamma", self.gamma)?;
        require_finite("horizon", self.horizon)?;
        require_finite("q_max", self.q_max)?;
        require_finite("delta_floor", self.delta_floor)?;
        // sigma = 0 is accepted as the deterministic degenerate case.
        if self.sigma < 0.0 {
            return Err(ModelError::OutOfRange {
                name: "sigma",
                constraint: "nonnegative",
                value: self.sigma,
            });
        }
        if self.impact_k < 0.0 {
            return Err(ModelError::OutOfRange {
                name: "impact_k",
                constraint: "nonnegative",
                value: self.impact_k,
            });
        }
        if self.gamma < 0.0 {
            return Err(ModelError::OutOfRange {
                name: "gamma",
                constraint: "nonnegative",
                value: self.gamma,
            });
        }
        if self.horizon <= 0.0 {
            return Err(ModelError::OutOfRange {
                name: "horizon",
                constraint: "strictly positive",
                value: self.horizon,
            });
        }
        if self.q_max <= 0.0 {
            return Err(ModelError::OutOfRange {
                name: "q_max",
                constraint: "strictly positive",
                value: self.q_max,
            });
        }
        if self.delta_floor <= 0.0 {
            return Err(ModelError::OutOfRange {
                name: "delta_floor",
                constraint: "strictly positive",
                value: self.delta_floor,
            });
        }
        self.bid_curve.validate()?;
        self.ask_curve.validate()?;
        self.cost.validate()?;
        // SizeGrid is validated at construction; re-check defensively since
        // params are plain data.
        SizeGrid::new(self.sizes.sizes().to_vec(), self.sizes.probs().to_vec())?;
        Ok(())
    }

    /// Running inventory penalty rate `psi(q) = (gamma/2) sigma^2 q^2`,
    /// bps·M$/day.
    pub fn running_penalty(&self, q: f64) -> f64 {
        0.5 * self.gamma * self.sigma * self.sigma * q * q
    }

    /// Terminal liquidation penalty `ell(q) = (impact_k/2) q^2`, bps·M$.
    /// The terminal value of the control problem is `-ell(q)`.
    pub fn terminal_penalty(&self, q: f64) -> f64 {
        0.5 * self.impact_k * q * q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference_curve() -> IntensityCurve {
        IntensityCurve::new(1000.0, -1.0, 10.0).unwrap()
    }

    #[test]
    fn intensity_matches_logistic_closed_form() {
        let c = reference_curve();
        assert_relative_eq!(c.eval(0.0), 1000.0 / (1.0 + (-1.0f64).exp()), epsilon = 1e-12);
        assert!((c.eval(0.0) - 731.06).abs() < 0.01);
        assert!((c.eval(0.2) - 268.94).abs() < 0.01);
    }

    #[test]
    fn intensity_vanishes_for_large_offsets() {
        let c = reference_curve();
        assert!(c.eval(1e6).abs() < 1e-9);
        assert_relative_eq!(c.eval(-1e6), 1000.0, epsilon = 1e-9);
    }

    #[test]
    fn intensity_is_strictly_decreasing() {
        // Sample the range where the logistic is resolvable in f64; in the
        // deep tails consecutive values saturate to lambda_max or 0.
        let c = reference_curve();
        let mut prev = c.eval(-3.0);
        for i in 1..=120 {
            let next = c.eval(-3.0 + 0.05 * i as f64);
            assert!(next < prev, "intensity must decrease at sample {i}");
            prev = next;
        }
    }

    #[test]
    fn null_curve_is_accepted_and_flagged() {
        let c = IntensityCurve::new(0.0, -1.0, 10.0).unwrap();
        assert!(c.is_null());
        assert_eq!(c.eval(0.3), 0.0);
    }

    #[test]
    fn intensity_rejects_bad_parameters() {
        assert!(IntensityCurve::new(-1.0, 0.0, 10.0).is_err());
        assert!(IntensityCurve::new(1000.0, 0.0, 0.0).is_err());
        assert!(IntensityCurve::new(f64::NAN, 0.0, 1.0).is_err());
    }

    fn reference_sizes() -> SizeGrid {
        SizeGrid::new(
            vec![1.0, 5.0, 10.0, 20.0],
            vec![0.76, 0.15, 0.075, 0.015],
        )
        .unwrap()
    }

    #[test]
    fn mean_size_of_reference_buckets() {
        assert_relative_eq!(reference_sizes().mean_size(), 2.56, epsilon = 1e-12);
    }

    #[test]
    fn mean_size_degenerate_cases() {
        let single = SizeGrid::new(vec![1.0], vec![1.0]).unwrap();
        assert_eq!(single.mean_size(), 1.0);
        let uniform = SizeGrid::new(vec![1.0, 3.0], vec![0.5, 0.5]).unwrap();
        assert_relative_eq!(uniform.mean_size(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn size_grid_rejects_invalid_inputs() {
        assert!(SizeGrid::new(vec![], vec![]).is_err());
        assert!(SizeGrid::new(vec![1.0, 1.0], vec![0.5, 0.5]).is_err());
        assert!(SizeGrid::new(vec![-1.0, 2.0], vec![0.5, 0.5]).is_err());
        assert!(SizeGrid::new(vec![1.0, 2.0], vec![0.5, 0.4]).is_err());
        assert!(SizeGrid::new(vec![1.0, 2.0], vec![0.5]).is_err());
    }

    fn reference_cost() -> ExecutionCost {
        ExecutionCost::new(1e-5, 0.1, 5000.0).unwrap()
    }

    #[test]
    fn execution_cost_arithmetic() {
        let l = reference_cost();
        assert_eq!(l.eval(0.0).unwrap(), 0.0);
        assert_relative_eq!(l.eval(1000.0).unwrap(), 110.0, epsilon = 1e-12);
    }

    #[test]
    fn execution_cost_is_even_and_capped() {
        let l = reference_cost();
        for v in [1.0, 17.5, 432.0, 4999.0] {
            assert_eq!(l.eval(v).unwrap(), l.eval(-v).unwrap());
        }
        assert_eq!(
            l.eval(5000.1),
            Err(ModelError::RateAboveCap {
                rate: 5000.1,
                v_max: 5000.0
            })
        );
        assert!(l.eval(5000.0).is_ok());
    }

    #[test]
    fn execution_cost_is_strictly_convex() {
        let l = reference_cost();
        for (a, b) in [(-100.0, 300.0), (0.0, 10.0), (-4000.0, -200.0)] {
            let mid = l.eval(0.5 * (a + b)).unwrap();
            let avg = 0.5 * (l.eval(a).unwrap() + l.eval(b).unwrap());
            assert!(mid < avg, "strict convexity violated at ({a}, {b})");
        }
    }

    fn reference_params() -> ModelParams {
        ModelParams {
            sigma: 50.0,
            impact_k: 0.005,
            gamma: 0.0005,
            horizon: 0.05,
            q_max: 100.0,
            delta_floor: 10.0,
            bid_curve: reference_curve(),
            ask_curve: reference_curve(),
            sizes: reference_sizes(),
            cost: reference_cost(),
        }
    }

    #[test]
    fn penalties_match_direct_arithmetic() {
        let p = reference_params();
        assert_eq!(p.running_penalty(0.0), 0.0);
        assert_relative_eq!(p.running_penalty(100.0), 6250.0, epsilon = 1e-9);
        assert_eq!(p.terminal_penalty(0.0), 0.0);
        assert_relative_eq!(p.terminal_penalty(100.0), 25.0, epsilon = 1e-12);
    }

    #[test]
    fn penalties_are_nonnegative_and_even() {
        let p = reference_params();
        for q in [-120.0, -3.5, 0.0, 7.25, 99.0] {
            assert!(p.running_penalty(q) >= 0.0);
            assert!(p.terminal_penalty(q) >= 0.0);
            assert_eq!(p.running_penalty(q), p.running_penalty(-q));
            assert_eq!(p.terminal_penalty(q), p.terminal_penalty(-q));
        }
    }

    #[test]
    fn params_validation_catches_sign_errors() {
        let mut p = reference_params();
        assert!(p.validate().is_ok());
        p.horizon = 0.0;
        assert!(p.validate().is_err());
        p.horizon = 0.05;
        p.gamma = -1.0;
        assert!(p.validate().is_err());
        p.gamma = 0.0;
        p.sigma = 0.0;
        assert!(p.validate().is_ok(), "degenerate deterministic case allowed");
    }
}
