use crate::error::{Error, Result};

/// Direct evaluation of the default counterexample from its closed form,
/// without any Hermite machinery. Used as an independent route to cross-check
/// [`PiecewiseHermite`](super::PiecewiseHermite).
#[derive(Debug, Clone)]
pub struct ClosedFormCounterexample {
    knots: Vec<f64>,
}

impl ClosedFormCounterexample {
    pub fn new(knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots[0] != 0.0 || knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidKnots(
                "closed form needs increasing knots starting at 0".into(),
            ));
        }
        Ok(ClosedFormCounterexample { knots })
    }

    /// Evenly spaced knots `k * alpha`, `k = 0..num_knots`.
    pub fn uniform(alpha: f64, num_knots: usize) -> Result<Self> {
        Self::new((0..num_knots).map(|k| k as f64 * alpha).collect())
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// `(f(t), f'(t))` for `t` left of the last knot; `None` beyond it.
    pub fn evaluate(&self, t: f64) -> Option<(f64, f64)> {
        if t < 0.0 {
            return Some((-t, -1.0));
        }
        let idx = self.knots.partition_point(|&x| x <= t);
        if idx >= self.knots.len() {
            return None;
        }
        let k = idx - 1;
        let s = self.knots[k + 1] - self.knots[k];
        let d = t - self.knots[k];
        let value = -d + 3.0 / s * (d * d) - 2.0 / (s * s) * (d * d * d);
        let derivative = -1.0 + 6.0 / s * d - 6.0 / (s * s) * (d * d);
        Some((value, derivative))
    }
}
