//! The certification suite run by `adam-divergence verify`.
//!
//! One counterexample run is checked against every mechanically verifiable
//! property of the construction: constant moments and gradients, exact step
//! lengths, divergence, the `6 / alpha` Lipschitz constant, the
//! `-sqrt(3) alpha / 18` lower bound, the Taylor-model equalities, analytic
//! derivatives against finite differences, and agreement of the Hermite forge
//! with the closed form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{
    default_threshold, divergence_verdict, estimate_lipschitz, finite_difference_audit,
    max_abs_derivative, scan_lower_bound, taylor_residuals, CheckOutcome, DiagnosticsReport,
    Interval, TaylorSummary, Verdict,
};
use crate::error::Result;
use crate::functions::{
    ClosedFormCounterexample, Counterexample, DifferentiableFunction, PiecewiseHermite,
};
use crate::harness::{counterexample_for_run, run, Trajectory};
use crate::numeric::{fmt17, ulps_at_scale};
use crate::optimizer::AdamParams;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub steps: u64,
    pub seed: u64,
    pub lipschitz_pairs: usize,
    pub fd_points: usize,
    pub oracle_points: usize,
    /// Number of per-step Taylor residuals kept verbatim in the report.
    pub taylor_keep: usize,
    /// Test hook: perturbs the gradient recorded at this step before checking.
    pub corrupt_step: Option<u64>,
}

impl VerifyConfig {
    pub fn new(alpha: f64, steps: u64, seed: u64) -> Self {
        VerifyConfig {
            alpha,
            beta1: 0.9,
            beta2: 0.9,
            steps,
            seed,
            lipschitz_pairs: 100_000,
            fd_points: 1000,
            oracle_points: 10_000,
            taylor_keep: 1000,
            corrupt_step: None,
        }
    }
}

pub const LIPSCHITZ_LOWER_FRACTION: f64 = 0.98;
pub const LIPSCHITZ_RELATIVE_SLACK: f64 = 1e-9;
pub const LOWER_BOUND_TOLERANCE: f64 = 1e-6;
pub const FD_TOLERANCE: f64 = 1e-8;
pub const ORACLE_MAX_ULPS: f64 = 8.0;
pub const STEP_ROUNDING_MAX_ULPS: f64 = 1.0;

/// Largest disagreement between the forge and the closed form at `num_points`
/// seeded points of `span`, in ulps of the largest term of the closed-form
/// sum (`-d + 3 d^2 / s - 2 d^3 / s^2` for values, `-1 + 6 d / s - 6 d^2 / s^2`
/// for slopes).
pub fn oracle_max_ulps(
    forge: &PiecewiseHermite,
    closed: &ClosedFormCounterexample,
    span: Interval,
    num_points: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let knots = forge.knots();
    let mut worst = 0.0f64;
    for _ in 0..num_points {
        let t = rng.random_range(span.lo..span.hi);
        let Some((cv, cd)) = closed.evaluate(t) else {
            continue;
        };
        let (hv, hd) = forge.value_and_derivative(t);
        let i = knots.partition_point(|&x| x <= t);
        let (value_scale, slope_scale) = if i == 0 {
            (t.abs(), 1.0)
        } else {
            let d = t - knots[i - 1];
            let u = d / (knots[i] - knots[i - 1]);
            (
                d.max(3.0 * d * u).max(2.0 * d * u * u),
                1f64.max(6.0 * u).max(6.0 * u * u),
            )
        };
        worst = worst
            .max(ulps_at_scale(hv, cv, value_scale))
            .max(ulps_at_scale(hd, cd, slope_scale));
    }
    worst
}

fn check(name: &str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// Runs ADAM on the counterexample and evaluates every check.
pub fn verify(config: &VerifyConfig) -> Result<DiagnosticsReport> {
    let params = AdamParams::new(config.alpha, config.beta1, config.beta2)?;
    let function = counterexample_for_run(&params, -1.0, 0.0, 0.0, config.steps)?;
    let mut traj = run(&function, &params, 0.0, config.steps, 1)?;
    if let Some(k) = config.corrupt_step {
        if let Some(rec) = traj.records_mut().get_mut(k as usize) {
            rec.g *= 1.0 - 1e-3;
        }
        traj = Trajectory::from_records(
            traj.records().to_vec(),
            *traj.method(),
            traj.function_id().to_string(),
        )?;
    }
    verify_trajectory(config, &function, &traj)
}

/// Checks a stride-1 counterexample trajectory and the function it ran on.
pub fn verify_trajectory(
    config: &VerifyConfig,
    function: &Counterexample,
    traj: &Trajectory,
) -> Result<DiagnosticsReport> {
    let alpha = config.alpha;
    let stats = traj.stats();
    let mut checks = Vec::new();

    let records = traj.records();
    let bad_record = records
        .iter()
        .find(|r| r.g != -1.0 || r.m != -1.0 || r.v != 1.0);
    checks.push(check(
        "constant_moments",
        bad_record.is_none() && traj.is_contiguous(),
        match bad_record {
            Some(r) => format!(
                "record k={} has g={} m={} v={}",
                r.k,
                fmt17(r.g),
                fmt17(r.m),
                fmt17(r.v)
            ),
            None => format!("g=-1, m=-1, v=1 at all {} records", records.len()),
        },
    ));

    let update = stats.update.unwrap_or(crate::harness::Range {
        min: f64::NAN,
        max: f64::NAN,
    });
    let step_ok = update.min == alpha
        && update.max == alpha
        && stats.max_rounding_ulps <= STEP_ROUNDING_MAX_ULPS;
    checks.push(check(
        "step_lengths",
        step_ok,
        format!(
            "applied step in [{}, {}], s_k within {} ulp(x) of it",
            fmt17(update.min),
            fmt17(update.max),
            stats.max_rounding_ulps
        ),
    ));

    let threshold = default_threshold(config.steps, alpha);
    let divergence = divergence_verdict(traj, threshold, 0.5)?;
    checks.push(check(
        "divergence",
        divergence.verdict == Verdict::Diverges,
        format!(
            "{} with |x_K|={} (threshold {}), min|g|={}",
            divergence.verdict,
            fmt17(divergence.final_abs_x),
            fmt17(threshold),
            fmt17(divergence.min_abs_g)
        ),
    ));

    let x_end = stats.final_x;
    let run_span = Interval::new(0.0, x_end.max(alpha))?;
    let lipschitz_bound = 6.0 / alpha;
    let lipschitz_estimate =
        estimate_lipschitz(function, run_span, config.lipschitz_pairs, config.seed)?;
    checks.push(check(
        "lipschitz",
        lipschitz_estimate >= LIPSCHITZ_LOWER_FRACTION * lipschitz_bound
            && lipschitz_estimate <= lipschitz_bound * (1.0 + LIPSCHITZ_RELATIVE_SLACK),
        format!(
            "estimate {} vs 6/alpha = {}",
            fmt17(lipschitz_estimate),
            fmt17(lipschitz_bound)
        ),
    ));

    let scan_hi = (20.0 * alpha).min(x_end.max(alpha));
    let scan_span = Interval::new(0.0, scan_hi)?;
    let ppu = (1e4 / alpha).ceil().max(1.0) as usize;
    let lower_bound_estimate = scan_lower_bound(function, scan_span, ppu)?;
    let lower_bound_reference = Counterexample::default_lower_bound(alpha);
    checks.push(check(
        "lower_bound",
        (lower_bound_estimate - lower_bound_reference).abs() <= LOWER_BOUND_TOLERANCE,
        format!(
            "grid minimum {} vs -sqrt(3) alpha/18 = {}",
            fmt17(lower_bound_estimate),
            fmt17(lower_bound_reference)
        ),
    ));

    let residuals = taylor_residuals(traj, alpha)?;
    let taylor = TaylorSummary::from_residuals(&residuals, config.taylor_keep);
    checks.push(check(
        "taylor_equalities",
        taylor.value_residual_equals_step && taylor.gradient_residual_zero,
        format!(
            "value residual == s_k: {}, gradient residual == 0: {} over {} steps",
            taylor.value_residual_equals_step, taylor.gradient_residual_zero, taylor.steps
        ),
    ));

    let h = 1e-6 * alpha.min(1.0);
    let fd_error = finite_difference_audit(function, run_span, config.fd_points, h, config.seed)?;
    checks.push(check(
        "finite_differences",
        fd_error <= FD_TOLERANCE,
        format!("max relative error {} at h={}", fmt17(fd_error), h),
    ));

    let closed = ClosedFormCounterexample::new(function.knots().to_vec())?;
    let oracle_span = Interval::new(-alpha, *function.knots().last().unwrap_or(&alpha))?;
    let oracle_ulps = oracle_max_ulps(
        function.hermite(),
        &closed,
        oracle_span,
        config.oracle_points,
        config.seed,
    );
    checks.push(check(
        "oracle_equivalence",
        oracle_ulps <= ORACLE_MAX_ULPS,
        format!("forge vs closed form: {oracle_ulps} ulps"),
    ));

    let max_abs_derivative = max_abs_derivative(function, scan_span, 100_001)?;

    Ok(DiagnosticsReport {
        alpha,
        steps: config.steps,
        seed: config.seed,
        lipschitz_estimate,
        lipschitz_bound: Some(lipschitz_bound),
        lower_bound_estimate,
        lower_bound_reference: Some(lower_bound_reference),
        max_abs_derivative,
        divergence,
        taylor_residuals: taylor,
        finite_difference_max_error: fd_error,
        oracle_max_ulps: oracle_ulps,
        checks,
    })
}
