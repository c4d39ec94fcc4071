use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::hermite::PiecewiseHermite;
use super::DifferentiableFunction;

/// Parameters of the divergence-inducing counterexample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleSpec {
    /// Knot spacing; equal to the step the optimizer takes along the knots.
    pub alpha: f64,
    /// Number of knots `K + 1`, the first at the origin.
    pub num_knots: usize,
    /// Gradient `c < 0` prescribed at every knot.
    pub gradient_level: f64,
    /// Value increment `delta >= 0`; the value at knot `k` is `k * delta`.
    pub value_increment: f64,
}

impl CounterexampleSpec {
    /// Default counterexample: `f_k = 0`, `g_k = -1`.
    pub fn new(alpha: f64, num_knots: usize) -> Self {
        CounterexampleSpec {
            alpha,
            num_knots,
            gradient_level: -1.0,
            value_increment: 0.0,
        }
    }

    pub fn with_gradient_level(mut self, c: f64) -> Self {
        self.gradient_level = c;
        self
    }

    pub fn with_value_increment(mut self, delta: f64) -> Self {
        self.value_increment = delta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid("alpha must be positive"));
        }
        if self.num_knots < 2 {
            return Err(Error::invalid("num_knots must be at least 2"));
        }
        if !(self.gradient_level < 0.0 && self.gradient_level.is_finite()) {
            return Err(Error::invalid("gradient level must be negative"));
        }
        if !(self.value_increment >= 0.0 && self.value_increment.is_finite()) {
            return Err(Error::invalid("value increment must be >= 0"));
        }
        Ok(())
    }

    /// Knots `x_0 = 0`, `x_{k+1} = x_k + alpha`, accumulated in floating point
    /// exactly as the pure optimizer accumulates its iterates.
    pub fn knots(&self) -> Vec<f64> {
        let mut knots = Vec::with_capacity(self.num_knots);
        let mut x = 0.0;
        for _ in 0..self.num_knots {
            knots.push(x);
            x += self.alpha;
        }
        knots
    }
}

/// A C1 function whose knots are an ADAM trajectory: value `k * delta` and
/// gradient `c` at the `k`-th knot, cubic Hermite in between, linear with
/// slope `c` to the left of the origin and beyond the last knot.
///
/// With the default spec this is `-t` for `t < 0` and
/// `-(t - x_k) + 3 (t - x_k)^2 / s - 2 (t - x_k)^3 / s^2` on `[x_k, x_{k+1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    spec: CounterexampleSpec,
    hermite: PiecewiseHermite,
}

pub fn build_counterexample(spec: CounterexampleSpec) -> Result<Counterexample> {
    spec.validate()?;
    Counterexample::through_knots(spec, spec.knots())
}

impl Counterexample {
    /// Builds the counterexample through an arbitrary increasing knot sequence,
    /// typically the iterates an optimizer produces under a constant gradient.
    /// `spec.alpha` is kept as the nominal spacing; `spec.num_knots` is
    /// overwritten by `knots.len()`.
    pub fn through_knots(mut spec: CounterexampleSpec, knots: Vec<f64>) -> Result<Self> {
        spec.num_knots = knots.len();
        spec.validate()?;
        let values = (0..knots.len())
            .map(|k| k as f64 * spec.value_increment)
            .collect();
        let slopes = vec![spec.gradient_level; knots.len()];
        let hermite = PiecewiseHermite::new(knots, values, slopes)?;
        Ok(Counterexample { spec, hermite })
    }

    pub fn spec(&self) -> &CounterexampleSpec {
        &self.spec
    }

    pub fn hermite(&self) -> &PiecewiseHermite {
        &self.hermite
    }

    pub fn knots(&self) -> &[f64] {
        self.hermite.knots()
    }

    pub fn evaluate(&self, t: f64) -> Result<(f64, f64)> {
        self.hermite.evaluate(t)
    }

    pub fn second_derivative(&self, t: f64) -> Result<f64> {
        self.hermite.second_derivative(t)
    }

    /// Analytic Lipschitz constant of the derivative, `max_k |H''|`; `6 / alpha`
    /// for the default spec with exact spacing.
    pub fn lipschitz_constant(&self) -> f64 {
        self.hermite.max_abs_second_derivative()
    }

    /// Per-piece lower bound `-sqrt(3) * alpha / 18` of the default spec.
    pub fn default_lower_bound(alpha: f64) -> f64 {
        -(3.0f64.sqrt()) * alpha / 18.0
    }
}

impl DifferentiableFunction for Counterexample {
    fn value_and_derivative(&self, t: f64) -> (f64, f64) {
        self.hermite.value_and_derivative(t)
    }

    fn breakpoints(&self) -> &[f64] {
        self.hermite.knots()
    }

    fn feature_scale(&self) -> Option<f64> {
        Some(self.hermite.min_spacing())
    }

    fn id(&self) -> String {
        format!(
            "counterexample(alpha={},gradient_level={},value_increment={},knots={})",
            self.spec.alpha,
            self.spec.gradient_level,
            self.spec.value_increment,
            self.spec.num_knots
        )
    }
}
