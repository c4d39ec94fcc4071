use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{divergence_verdict, Verdict};
use crate::error::{Error, Result};
use crate::optimizer::{AdamParams, Variant};

use super::{counterexample_for_run, run};

/// Grid of `(beta1, beta2, alpha)` cells, each run on its own counterexample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub beta1: Vec<f64>,
    pub beta2: Vec<f64>,
    pub alpha: Vec<f64>,
    pub num_steps: u64,
    pub variant: Variant,
    /// Divergence threshold as a fraction of `K * alpha`.
    pub threshold_fraction: f64,
    pub gradient_floor: f64,
}

impl GridSpec {
    pub fn new(beta1: Vec<f64>, beta2: Vec<f64>, alpha: Vec<f64>, num_steps: u64) -> Self {
        GridSpec {
            beta1,
            beta2,
            alpha,
            num_steps,
            variant: Variant::Pure,
            threshold_fraction: 0.9,
            gradient_floor: 0.5,
        }
    }

    /// `beta1, beta2 in {0, 0.3, 0.6, 0.9, 0.99}`, `alpha in {1e-3, 1, 10}`, `K = 10^4`.
    pub fn default_grid() -> Self {
        let betas = vec![0.0, 0.3, 0.6, 0.9, 0.99];
        GridSpec::new(betas.clone(), betas, vec![1e-3, 1.0, 10.0], 10_000)
    }

    /// Cells in canonical row-major order: `beta1`, then `beta2`, then `alpha`.
    pub fn cells(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.beta1.len() * self.beta2.len() * self.alpha.len());
        for &b1 in &self.beta1 {
            for &b2 in &self.beta2 {
                for &a in &self.alpha {
                    out.push((b1, b2, a));
                }
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        for (name, values) in [
            ("beta1", &self.beta1),
            ("beta2", &self.beta2),
            ("alpha", &self.alpha),
        ] {
            if values.is_empty() {
                return Err(Error::invalid(format!("{name} range is empty")));
            }
        }
        for &a in &self.alpha {
            AdamParams::new(a, 0.0, 0.0)?;
        }
        for &b in &self.beta1 {
            AdamParams::new(1.0, b, 0.0)?;
        }
        for &b in &self.beta2 {
            AdamParams::new(1.0, 0.0, b)?;
        }
        if self.num_steps == 0 {
            return Err(Error::invalid("steps must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub beta1: f64,
    pub beta2: f64,
    pub alpha: f64,
    pub final_x: f64,
    pub min_abs_g: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn count(&self, verdict: Verdict) -> usize {
        self.cells.iter().filter(|c| c.verdict == verdict).count()
    }
}

/// Runs the counterexample for every grid cell. Cells run in parallel; the
/// result is always in canonical order.
pub fn sweep(grid: &GridSpec) -> Result<SweepResult> {
    grid.validate()?;
    let cells = grid
        .cells()
        .into_par_iter()
        .map(|(b1, b2, alpha)| run_cell(grid, b1, b2, alpha))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { cells })
}

fn run_cell(grid: &GridSpec, beta1: f64, beta2: f64, alpha: f64) -> Result<SweepCell> {
    let params = AdamParams::new(alpha, beta1, beta2)?.with_variant(grid.variant)?;
    let function = counterexample_for_run(&params, -1.0, 0.0, 0.0, grid.num_steps)?;
    let traj = run(&function, &params, 0.0, grid.num_steps, grid.num_steps)?;
    let threshold = grid.threshold_fraction * grid.num_steps as f64 * alpha;
    let report = divergence_verdict(&traj, threshold, grid.gradient_floor)?;
    Ok(SweepCell {
        beta1,
        beta2,
        alpha,
        final_x: traj.stats().final_x,
        min_abs_g: traj.stats().abs_g.min,
        verdict: report.verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sign_gradient_cell() {
        let grid = GridSpec::new(vec![0.0], vec![0.0], vec![1.0], 500);
        let result = sweep(&grid).unwrap();
        assert_eq!(result.cells.len(), 1);
        let cell = result.cells[0];
        assert_eq!(cell.verdict, Verdict::Diverges);
        assert_eq!(cell.final_x, 500.0);
        assert_eq!(cell.min_abs_g, 1.0);
    }

    #[test]
    fn empty_or_invalid_ranges_are_rejected() {
        assert!(sweep(&GridSpec::new(vec![0.0], vec![0.0], vec![], 10)).is_err());
        let err = sweep(&GridSpec::new(vec![1.0], vec![0.0], vec![1.0], 10)).unwrap_err();
        assert_eq!(err.to_string(), "beta1 must be < 1");
        assert!(sweep(&GridSpec::new(vec![0.0], vec![0.0], vec![-1.0], 10)).is_err());
    }

    #[test]
    fn order_is_row_major() {
        let grid = GridSpec::new(vec![0.0, 0.5], vec![0.1, 0.2], vec![1.0, 2.0], 20);
        let result = sweep(&grid).unwrap();
        let keys: Vec<_> = result
            .cells
            .iter()
            .map(|c| (c.beta1, c.beta2, c.alpha))
            .collect();
        assert_eq!(keys, grid.cells());
    }

    #[test]
    fn verdicts_do_not_depend_on_grid_order() {
        let grid = GridSpec::new(vec![0.0, 0.9], vec![0.3, 0.99], vec![0.01, 3.0], 200);
        let mut reversed = grid.clone();
        reversed.beta1.reverse();
        reversed.beta2.reverse();
        reversed.alpha.reverse();
        let a = sweep(&grid).unwrap();
        let b = sweep(&reversed).unwrap();
        for cell in &a.cells {
            let twin = b
                .cells
                .iter()
                .find(|c| (c.beta1, c.beta2, c.alpha) == (cell.beta1, cell.beta2, cell.alpha))
                .unwrap();
            assert_eq!(cell, twin);
        }
    }
}
