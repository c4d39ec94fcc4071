//! C1 scalar test functions with analytic derivatives.

mod closed_form;
mod counterexample;
mod hermite;

pub use closed_form::ClosedFormCounterexample;
pub use counterexample::{build_counterexample, Counterexample, CounterexampleSpec};
pub use hermite::{hermite_build, PiecewiseHermite};

/// A continuously differentiable map `R -> R` with an analytic derivative.
///
/// Implementations must return finite values for every finite argument.
pub trait DifferentiableFunction: Send + Sync {
    fn value_and_derivative(&self, t: f64) -> (f64, f64);

    fn value(&self, t: f64) -> f64 {
        self.value_and_derivative(t).0
    }

    fn derivative(&self, t: f64) -> f64 {
        self.value_and_derivative(t).1
    }

    /// Points where the function is only C1 (second derivative jumps).
    fn breakpoints(&self) -> &[f64] {
        &[]
    }

    /// Typical length over which the curvature varies, if the function has one.
    fn feature_scale(&self) -> Option<f64> {
        None
    }

    /// Short human-readable descriptor recorded alongside trajectories.
    fn id(&self) -> String;
}

/// `t -> intercept + slope * t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linear {
    pub intercept: f64,
    pub slope: f64,
}

impl DifferentiableFunction for Linear {
    fn value_and_derivative(&self, t: f64) -> (f64, f64) {
        (self.intercept + self.slope * t, self.slope)
    }

    fn id(&self) -> String {
        format!("linear(intercept={},slope={})", self.intercept, self.slope)
    }
}

/// `t -> curvature * t^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic {
    pub curvature: f64,
}

impl DifferentiableFunction for Quadratic {
    fn value_and_derivative(&self, t: f64) -> (f64, f64) {
        (0.5 * self.curvature * t * t, self.curvature * t)
    }

    fn id(&self) -> String {
        format!("quadratic(curvature={})", self.curvature)
    }
}

impl<F: DifferentiableFunction + ?Sized> DifferentiableFunction for &F {
    fn value_and_derivative(&self, t: f64) -> (f64, f64) {
        (**self).value_and_derivative(t)
    }

    fn breakpoints(&self) -> &[f64] {
        (**self).breakpoints()
    }

    fn feature_scale(&self) -> Option<f64> {
        (**self).feature_scale()
    }

    fn id(&self) -> String {
        (**self).id()
    }
}
