use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::{DivergenceReport, TaylorResidual};

/// Aggregate of the Taylor residuals over a run; the per-step list is kept
/// only for the first `residuals.len()` steps to bound the report size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorSummary {
    pub steps: u64,
    /// Every `|f_{k+1} - T_k(s_k)|` equals `s_k` bit for bit.
    pub value_residual_equals_step: bool,
    /// Every `|g_{k+1} - g_k|` is exactly zero.
    pub gradient_residual_zero: bool,
    pub value_bound_violations: u64,
    pub gradient_bound_violations: u64,
    pub residuals: Vec<TaylorResidual>,
    pub residuals_truncated: bool,
}

impl TaylorSummary {
    pub fn from_residuals(residuals: &[TaylorResidual], keep: usize) -> Self {
        TaylorSummary {
            steps: residuals.len() as u64,
            value_residual_equals_step: residuals.iter().all(|r| r.value_residual == r.step.abs()),
            gradient_residual_zero: residuals.iter().all(|r| r.gradient_residual == 0.0),
            value_bound_violations: residuals.iter().filter(|r| !r.value_holds).count() as u64,
            gradient_bound_violations: residuals.iter().filter(|r| !r.gradient_holds).count()
                as u64,
            residuals: residuals.iter().take(keep).copied().collect(),
            residuals_truncated: residuals.len() > keep,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Everything the certification suite measured. Reals are serialized as
/// decimal strings with 17 significant digits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    #[serde(with = "crate::numeric::decimal_string")]
    pub alpha: f64,
    pub steps: u64,
    pub seed: u64,
    #[serde(with = "crate::numeric::decimal_string")]
    pub lipschitz_estimate: f64,
    #[serde(with = "crate::numeric::decimal_string::option")]
    pub lipschitz_bound: Option<f64>,
    #[serde(with = "crate::numeric::decimal_string")]
    pub lower_bound_estimate: f64,
    #[serde(with = "crate::numeric::decimal_string::option")]
    pub lower_bound_reference: Option<f64>,
    #[serde(with = "crate::numeric::decimal_string")]
    pub max_abs_derivative: f64,
    pub divergence: DivergenceReport,
    pub taylor_residuals: TaylorSummary,
    #[serde(with = "crate::numeric::decimal_string")]
    pub finite_difference_max_error: f64,
    #[serde(with = "crate::numeric::decimal_string")]
    pub oracle_max_ulps: f64,
    pub checks: Vec<CheckOutcome>,
}

impl DiagnosticsReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        Ok(())
    }
}
