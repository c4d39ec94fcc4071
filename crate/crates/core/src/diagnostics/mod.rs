//! Numerical certification: divergence verdicts, Lipschitz and lower-bound
//! estimates, Taylor-model residuals and finite-difference audits.
//!
//! Every randomized routine takes an explicit seed and is bit-reproducible.

mod report;

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use report::{CheckOutcome, DiagnosticsReport, TaylorSummary};

use crate::error::{Error, Result};
use crate::functions::DifferentiableFunction;
use crate::harness::Trajectory;

/// A closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(Interval { lo, hi })
        } else {
            Err(Error::DegenerateSpan { lo, hi })
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    fn check(&self) -> Result<()> {
        Interval::new(self.lo, self.hi).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Diverges,
    Stalls,
    Converges,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Diverges => "Diverges",
            Verdict::Stalls => "Stalls",
            Verdict::Converges => "Converges",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub verdict: Verdict,
    #[serde(with = "crate::numeric::decimal_string")]
    pub final_abs_x: f64,
    #[serde(with = "crate::numeric::decimal_string")]
    pub min_abs_g: f64,
    #[serde(with = "crate::numeric::decimal_string")]
    pub max_abs_step: f64,
}

/// Default escape threshold: 90% of the distance `K * alpha` an exactly
/// linear escape would cover.
pub fn default_threshold(num_steps: u64, alpha: f64) -> f64 {
    0.9 * num_steps as f64 * alpha
}

/// `Converges` if some `|g_k|` drops below `gradient_floor`; otherwise
/// `Diverges` if `|x_K| >= threshold`, else `Stalls`.
///
/// Gradient statistics cover every step of the run, not only recorded ones.
pub fn divergence_verdict(
    traj: &Trajectory,
    threshold: f64,
    gradient_floor: f64,
) -> Result<DivergenceReport> {
    if traj.records().is_empty() {
        return Err(Error::NotEnoughRecords {
            needed: 1,
            found: 0,
        });
    }
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::invalid("threshold must be positive"));
    }
    if gradient_floor.is_nan() || gradient_floor <= 0.0 {
        return Err(Error::invalid("gradient floor must be positive"));
    }
    let stats = traj.stats();
    let final_abs_x = stats.final_x.abs();
    let min_abs_g = stats.abs_g.min;
    let max_abs_step = stats
        .step
        .map(|r| r.min.abs().max(r.max.abs()))
        .unwrap_or(0.0);
    let verdict = if min_abs_g < gradient_floor {
        Verdict::Converges
    } else if final_abs_x >= threshold {
        Verdict::Diverges
    } else {
        Verdict::Stalls
    };
    Ok(DivergenceReport {
        verdict,
        final_abs_x,
        min_abs_g,
        max_abs_step,
    })
}

/// Sampled estimate of `sup |f'(t) - f'(t')| / |t - t'|` over `span`.
///
/// Half the pairs are uniform over the span. The other half are close pairs
/// with separations log-uniform in `[scale * 1e-5, scale / 10]`, where `scale`
/// is the function's feature scale (knot spacing), because for piecewise
/// cubics the supremum is approached near piece endpoints.
pub fn estimate_lipschitz<F: DifferentiableFunction + ?Sized>(
    f: &F,
    span: Interval,
    num_pairs: usize,
    seed: u64,
) -> Result<f64> {
    span.check()?;
    if num_pairs == 0 {
        return Err(Error::invalid("num_pairs must be at least 1"));
    }
    let width = span.width();
    let scale = f.feature_scale().unwrap_or(width / 100.0).min(width);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for i in 0..num_pairs {
        let (t, u) = if i % 2 == 0 {
            (
                rng.random_range(span.lo..=span.hi),
                rng.random_range(span.lo..=span.hi),
            )
        } else {
            let exponent: f64 = rng.random_range(0.0..4.0);
            let sep = (scale / 10.0) * 10f64.powf(-exponent);
            let t = rng.random_range(span.lo..=(span.hi - sep).max(span.lo));
            (t, (t + sep).min(span.hi))
        };
        let dt = (u - t).abs();
        if dt == 0.0 {
            continue;
        }
        let q = (f.derivative(u) - f.derivative(t)).abs() / dt;
        best = best.max(q);
    }
    Ok(best)
}

/// Residuals of the first-order Taylor model `T_k(s) = f_k + g_k s` at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorResidual {
    pub k: u64,
    #[serde(with = "crate::numeric::decimal_string")]
    pub step: f64,
    /// `|f_{k+1} - T_k(s_k)|`.
    #[serde(with = "crate::numeric::decimal_string")]
    pub value_residual: f64,
    /// `s_k^2 / alpha`.
    #[serde(with = "crate::numeric::decimal_string")]
    pub value_bound: f64,
    pub value_holds: bool,
    /// `|g_{k+1} - g_k|`.
    #[serde(with = "crate::numeric::decimal_string")]
    pub gradient_residual: f64,
    /// `s_k / alpha`.
    #[serde(with = "crate::numeric::decimal_string")]
    pub gradient_bound: f64,
    pub gradient_holds: bool,
}

/// Relative slack on the bound comparisons. The observed `s_k` carries the
/// rounding of `x_{k+1}`, so `s_k` can fall a few ulps of `x` short of `alpha`.
pub const TAYLOR_BOUND_SLACK: f64 = 1e-9;

/// Per-step Taylor residuals against the bounds `s^2 / alpha` and `s / alpha`.
pub fn taylor_residuals(traj: &Trajectory, alpha: f64) -> Result<Vec<TaylorResidual>> {
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(Error::invalid("alpha must be positive"));
    }
    let recs = traj.records();
    if recs.len() < 2 {
        return Err(Error::NotEnoughRecords {
            needed: 2,
            found: recs.len(),
        });
    }
    if let Some(r) = recs.iter().find(|r| !r.f.is_finite()) {
        return Err(Error::MissingFunctionValue { k: r.k });
    }
    recs.windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            if b.k != a.k + 1 {
                return Err(Error::NonContiguous { k: b.k });
            }
            let s = b.x - a.x;
            let value_residual = (b.f - (a.f + a.g * s)).abs();
            let gradient_residual = (b.g - a.g).abs();
            let value_bound = s * s / alpha;
            let gradient_bound = s.abs() / alpha;
            let slack = 1.0 + TAYLOR_BOUND_SLACK;
            Ok(TaylorResidual {
                k: a.k,
                step: s,
                value_residual,
                value_bound,
                value_holds: value_residual <= value_bound * slack,
                gradient_residual,
                gradient_bound,
                gradient_holds: gradient_residual <= gradient_bound * slack,
            })
        })
        .collect()
}

/// Grid minimum of `f` over `span`, refined by a golden-section search in
/// the cells adjacent to the best grid point. Returns `(argmin, min)`.
pub fn scan_minimum<F: DifferentiableFunction + ?Sized>(
    f: &F,
    span: Interval,
    points_per_unit: usize,
) -> Result<(f64, f64)> {
    span.check()?;
    if points_per_unit == 0 {
        return Err(Error::invalid("points per unit must be at least 1"));
    }
    let width = span.width();
    let intervals = ((width * points_per_unit as f64).ceil() as usize).max(1);
    let at = |i: usize| span.lo + (width * i as f64) / intervals as f64;

    let (mut best_i, mut best) = (0, f.value(span.lo));
    for i in 1..=intervals {
        let v = f.value(at(i));
        if v < best {
            best_i = i;
            best = v;
        }
    }
    let mut best_t = at(best_i);

    let (mut a, mut b) = (
        at(best_i.saturating_sub(1)),
        at((best_i + 1).min(intervals)),
    );
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f.value(c), f.value(d));
    for _ in 0..200 {
        if b - a <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f.value(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f.value(d);
        }
    }
    for (t, v) in [(c, fc), (d, fd)] {
        if v < best {
            best = v;
            best_t = t;
        }
    }
    Ok((best_t, best))
}

/// Lower-bound estimate of `f` over `span`; see [`scan_minimum`].
pub fn scan_lower_bound<F: DifferentiableFunction + ?Sized>(
    f: &F,
    span: Interval,
    points_per_unit: usize,
) -> Result<f64> {
    scan_minimum(f, span, points_per_unit).map(|(_, v)| v)
}

/// Largest `|f'|` on a uniform grid over `span`.
pub fn max_abs_derivative<F: DifferentiableFunction + ?Sized>(
    f: &F,
    span: Interval,
    num_points: usize,
) -> Result<f64> {
    span.check()?;
    let n = num_points.max(2);
    Ok((0..n)
        .map(|i| {
            f.derivative(span.lo + span.width() * i as f64 / (n - 1) as f64)
                .abs()
        })
        .fold(0.0, f64::max))
}

/// `|central difference - f'(t)| / max(1, |f'(t)|)` with step `h`.
pub fn finite_difference_error<F: DifferentiableFunction + ?Sized>(f: &F, t: f64, h: f64) -> f64 {
    let (tp, tm) = (t + h, t - h);
    let fd = (f.value(tp) - f.value(tm)) / (tp - tm);
    let exact = f.derivative(t);
    (fd - exact).abs() / exact.abs().max(1.0)
}

/// Largest relative finite-difference error at `num_points` seeded points of
/// `span` lying at least `2h` away from every breakpoint of `f`.
pub fn finite_difference_audit<F: DifferentiableFunction + ?Sized>(
    f: &F,
    span: Interval,
    num_points: usize,
    h: f64,
    seed: u64,
) -> Result<f64> {
    span.check()?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("h must be positive"));
    }
    let breaks = f.breakpoints();
    let near_break = |t: f64| {
        let i = breaks.partition_point(|&b| b < t);
        let left = i.checked_sub(1).map(|j| t - breaks[j]);
        let right = breaks.get(i).map(|&b| b - t);
        left.into_iter().chain(right).any(|d| d < 2.0 * h)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut accepted = 0;
    let max_draws = 1000 * num_points.max(1);
    for _ in 0..max_draws {
        if accepted == num_points {
            break;
        }
        let t = rng.random_range(span.lo..=span.hi);
        if near_break(t) {
            continue;
        }
        worst = worst.max(finite_difference_error(f, t, h));
        accepted += 1;
    }
    if accepted < num_points {
        return Err(Error::invalid(
            "span has too little room away from breakpoints for the requested h",
        ));
    }
    Ok(worst)
}
