use crate::error::{Error, Result};

use super::DifferentiableFunction;

/// Piecewise cubic Hermite interpolant with linear tails.
///
/// On `[x_k, x_{k+1})` with `h = x_{k+1} - x_k` the interpolant is the unique
/// cubic matching `(f_k, g_k)` and `(f_{k+1}, g_{k+1})`. It is stored in the
/// local power basis
///
/// ```text
/// H(t) = f_k + g_k d + c2_k d^2 + c3_k d^3,   d = t - x_k
/// ```
///
/// so that evaluating at a knot returns `(f_k, g_k)` with no rounding. Left of
/// `x_0` and from `x_K` on, `H` is the tangent line through the end knot.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseHermite {
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    /// `[c2, c3]` per piece.
    coeffs: Vec<[f64; 2]>,
    mean_spacing: f64,
}

/// Where an argument falls relative to the knots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    LeftTail,
    /// Piece `k`, covering `[x_k, x_{k+1})`.
    Piece(usize),
    RightTail,
}

/// Builds the C1 interpolant through `(knots[k], values[k], slopes[k])`.
pub fn hermite_build(
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
) -> Result<PiecewiseHermite> {
    PiecewiseHermite::new(knots, values, slopes)
}

impl PiecewiseHermite {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidKnots(format!(
                "need at least 2 knots, got {}",
                knots.len()
            )));
        }
        if values.len() != knots.len() || slopes.len() != knots.len() {
            return Err(Error::InvalidKnots(format!(
                "length mismatch: {} knots, {} values, {} slopes",
                knots.len(),
                values.len(),
                slopes.len()
            )));
        }
        if let Some(i) = knots
            .iter()
            .chain(&values)
            .chain(&slopes)
            .position(|x| !x.is_finite())
        {
            return Err(Error::InvalidKnots(format!(
                "non-finite entry at position {i}"
            )));
        }
        if let Some(k) = knots.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidKnots(format!(
                "knots must be strictly increasing (x[{}] = {} >= x[{}] = {})",
                k,
                knots[k],
                k + 1,
                knots[k + 1]
            )));
        }

        let coeffs = (0..knots.len() - 1)
            .map(|k| {
                let h = knots[k + 1] - knots[k];
                let secant = (values[k + 1] - values[k]) / h;
                let (g0, g1) = (slopes[k], slopes[k + 1]);
                let c2 = (3.0 * secant - 2.0 * g0 - g1) / h;
                let c3 = (g0 + g1 - 2.0 * secant) / (h * h);
                [c2, c3]
            })
            .collect();
        let n = knots.len() - 1;
        let mean_spacing = (knots[n] - knots[0]) / n as f64;

        Ok(PiecewiseHermite {
            knots,
            values,
            slopes,
            coeffs,
            mean_spacing,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn num_pieces(&self) -> usize {
        self.knots.len() - 1
    }

    /// Width of piece `k`.
    pub fn spacing(&self, k: usize) -> f64 {
        self.knots[k + 1] - self.knots[k]
    }

    /// Smallest piece width.
    pub fn min_spacing(&self) -> f64 {
        self.knots
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Pieces are half-open, so a knot belongs to the piece on its right.
    pub fn locate(&self, t: f64) -> Location {
        let n = self.num_pieces();
        if t < self.knots[0] {
            return Location::LeftTail;
        }
        if t >= self.knots[n] {
            return Location::RightTail;
        }
        // Uniform-spacing guess, then walk to the right piece.
        let guess = ((t - self.knots[0]) / self.mean_spacing).floor();
        let mut k = if guess.is_finite() && guess >= 0.0 {
            (guess as usize).min(n - 1)
        } else {
            0
        };
        for _ in 0..4 {
            if self.knots[k] > t {
                k -= 1;
            } else if self.knots[k + 1] <= t {
                k += 1;
            } else {
                return Location::Piece(k);
            }
        }
        Location::Piece(self.knots.partition_point(|&x| x <= t) - 1)
    }

    /// Value and derivative at `t`. Fails only for non-finite `t`.
    pub fn evaluate(&self, t: f64) -> Result<(f64, f64)> {
        if !t.is_finite() {
            return Err(Error::NonFiniteArgument(t));
        }
        Ok(self.eval(t))
    }

    /// Value and derivative of the cubic on piece `k`, evaluated at any `t`
    /// (not necessarily inside the piece).
    pub fn piece_value_and_derivative(&self, k: usize, t: f64) -> (f64, f64) {
        let [c2, c3] = self.coeffs[k];
        let g = self.slopes[k];
        let d = t - self.knots[k];
        let value = self.values[k] + d * (g + d * (c2 + d * c3));
        let derivative = g + d * (2.0 * c2 + 3.0 * c3 * d);
        (value, derivative)
    }

    /// Analytic second derivative. Undefined (an error) exactly at a knot,
    /// where the interpolant is C1 but generally not C2.
    pub fn second_derivative(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(Error::NonFiniteArgument(t));
        }
        match self.locate(t) {
            Location::LeftTail | Location::RightTail if t != self.knots[self.num_pieces()] => {
                Ok(0.0)
            }
            Location::Piece(k) if t != self.knots[k] => {
                let [c2, c3] = self.coeffs[k];
                Ok(2.0 * c2 + 6.0 * c3 * (t - self.knots[k]))
            }
            _ => Err(Error::AtKnot { t }),
        }
    }

    /// Largest `|H''|` over all pieces, attained at a piece endpoint.
    pub fn max_abs_second_derivative(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, &[c2, c3])| {
                let h = self.spacing(k);
                (2.0 * c2).abs().max((2.0 * c2 + 6.0 * c3 * h).abs())
            })
            .fold(0.0, f64::max)
    }

    fn eval(&self, t: f64) -> (f64, f64) {
        match self.locate(t) {
            Location::LeftTail => {
                let g = self.slopes[0];
                (self.values[0] + g * (t - self.knots[0]), g)
            }
            Location::RightTail => {
                let n = self.num_pieces();
                let g = self.slopes[n];
                (self.values[n] + g * (t - self.knots[n]), g)
            }
            Location::Piece(k) => self.piece_value_and_derivative(k, t),
        }
    }
}

impl DifferentiableFunction for PiecewiseHermite {
    fn value_and_derivative(&self, t: f64) -> (f64, f64) {
        self.eval(t)
    }

    fn breakpoints(&self) -> &[f64] {
        &self.knots
    }

    fn feature_scale(&self) -> Option<f64> {
        Some(self.min_spacing())
    }

    fn id(&self) -> String {
        format!(
            "hermite(knots={},span=[{},{}])",
            self.knots.len(),
            self.knots[0],
            self.knots[self.num_pieces()]
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::ulps_at_scale;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_counterexample(n: usize) -> PiecewiseHermite {
        hermite_build(
            (0..n).map(|k| k as f64).collect(),
            vec![0.0; n],
            vec![-1.0; n],
        )
        .unwrap()
    }

    #[test]
    fn single_piece_matches_closed_form() {
        let h = hermite_build(vec![0.0, 1.0], vec![0.0, 0.0], vec![-1.0, -1.0]).unwrap();
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            let closed = -t + 3.0 * t * t - 2.0 * t * t * t;
            let (v, _) = h.piece_value_and_derivative(0, t);
            assert!((v - closed).abs() <= 4.0 * f64::EPSILON, "t={t}");
        }
    }

    #[test]
    fn linear_data_reproduces_line() {
        let h = hermite_build(vec![0.0, 1.0], vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        for t in [0.0, 0.1, 0.37, 0.5, 0.99] {
            let (v, d) = h.evaluate(t).unwrap();
            assert!((v - t).abs() <= f64::EPSILON);
            assert_eq!(d, 1.0);
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let h = hermite_build(vec![0.0, 2.0], vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        for t in [0.0, 0.5, 1.0, 1.999, 2.0, 3.0, -1.0] {
            assert_eq!(h.evaluate(t).unwrap(), (0.0, 0.0));
        }
    }

    #[test]
    fn build_errors() {
        assert!(hermite_build(vec![0.0], vec![0.0], vec![0.0]).is_err());
        assert!(hermite_build(vec![0.0, 1.0], vec![0.0], vec![0.0, 0.0]).is_err());
        assert!(hermite_build(vec![0.0, 0.0], vec![0.0; 2], vec![0.0; 2]).is_err());
        assert!(hermite_build(vec![1.0, 0.0], vec![0.0; 2], vec![0.0; 2]).is_err());
        assert!(hermite_build(vec![0.0, f64::NAN], vec![0.0; 2], vec![0.0; 2]).is_err());
    }

    #[test]
    fn knots_interpolate_exactly() {
        let h = unit_counterexample(11);
        for k in 0..11 {
            assert_eq!(h.evaluate(k as f64).unwrap(), (0.0, -1.0));
        }
        assert_eq!(h.evaluate(3.0).unwrap(), (0.0, -1.0));
    }

    #[test]
    fn knots_belong_to_the_right_piece() {
        let h = unit_counterexample(5);
        assert_eq!(h.locate(-0.1), Location::LeftTail);
        assert_eq!(h.locate(0.0), Location::Piece(0));
        assert_eq!(h.locate(1.0), Location::Piece(1));
        assert_eq!(h.locate(3.999), Location::Piece(3));
        assert_eq!(h.locate(4.0), Location::RightTail);
    }

    #[test]
    fn locate_on_irregular_knots() {
        let knots = vec![0.0, 0.1, 5.0, 5.01, 5.02, 9.0, 100.0];
        let n = knots.len();
        let h = hermite_build(knots.clone(), vec![0.0; n], vec![0.0; n]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let t: f64 = rng.random_range(0.0..100.0);
            let expected = knots.partition_point(|&x| x <= t) - 1;
            assert_eq!(h.locate(t), Location::Piece(expected), "t={t}");
        }
    }

    #[test]
    fn tails_are_tangent_lines() {
        let h = unit_counterexample(10);
        assert_eq!(h.evaluate(-0.5).unwrap(), (0.5, -1.0));
        // Last knot is 9.
        assert_eq!(h.evaluate(10.25).unwrap(), (-1.25, -1.0));
        assert!(h.evaluate(f64::INFINITY).is_err());
    }

    #[test]
    fn adjacent_pieces_agree_at_interior_knots() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 40;
        let mut knots = vec![0.0];
        for _ in 1..n {
            knots.push(knots.last().unwrap() + rng.random_range(0.1..2.0));
        }
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let slopes: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h = hermite_build(knots.clone(), values.clone(), slopes.clone()).unwrap();
        for k in 1..n - 1 {
            let (vl, dl) = h.piece_value_and_derivative(k - 1, knots[k]);
            let (vr, dr) = h.piece_value_and_derivative(k, knots[k]);
            assert_eq!((vr, dr), (values[k], slopes[k]));
            // Compare in ulps of the largest term of the left cubic at d = h.
            let s = h.spacing(k - 1);
            let [c2, c3] = h.coeffs[k - 1];
            let g = slopes[k - 1];
            let vscale =
                values[k - 1].abs() + (g * s).abs() + (c2 * s * s).abs() + (c3 * s * s * s).abs();
            let dscale = g.abs() + (2.0 * c2 * s).abs() + (3.0 * c3 * s * s).abs();
            let (vu, du) = (ulps_at_scale(vl, vr, vscale), ulps_at_scale(dl, dr, dscale));
            assert!(vu <= 4.0, "value at knot {k}: {vu} ulps");
            assert!(du <= 4.0, "slope at knot {k}: {du} ulps");
        }
    }

    #[test]
    fn c1_continuity_across_knots() {
        let h = unit_counterexample(12);
        for k in 1..11 {
            let x = k as f64;
            for eps in [1e-6, 1e-8] {
                let (vl, dl) = h.evaluate(x - eps).unwrap();
                let (vr, dr) = h.evaluate(x + eps).unwrap();
                assert!((vl - vr).abs() <= 6.0 * eps);
                assert!((dl - dr).abs() <= 13.0 * eps);
            }
        }
    }

    #[test]
    fn second_derivative_jumps_at_knots() {
        let h = unit_counterexample(5);
        let eps = 1e-12;
        assert!((h.second_derivative(2.0 + eps).unwrap() - 6.0).abs() < 1e-9);
        assert!((h.second_derivative(3.0 - eps).unwrap() + 6.0).abs() < 1e-9);
        assert_eq!(h.second_derivative(-1.0).unwrap(), 0.0);
        assert_eq!(h.second_derivative(7.0).unwrap(), 0.0);
        for k in 0..5 {
            assert!(matches!(
                h.second_derivative(k as f64),
                Err(Error::AtKnot { .. })
            ));
        }
        assert_eq!(h.max_abs_second_derivative(), 6.0);
    }

    #[test]
    fn derivative_matches_central_differences() {
        let h = unit_counterexample(11);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let step = 1e-5;
        let mut checked = 0;
        while checked < 1000 {
            let t: f64 = rng.random_range(0.0..10.0);
            if (t - t.round()).abs() < 2.0 * step {
                continue;
            }
            let (tp, tm) = (t + step, t - step);
            let fd = (h.value(tp) - h.value(tm)) / (tp - tm);
            // f''' = -12 on every piece, so the truncation error is 2 step^2.
            assert!(
                (fd - h.derivative(t)).abs() <= 2.0 * step * step + 1e-10,
                "t={t}"
            );
            checked += 1;
        }
    }
}
