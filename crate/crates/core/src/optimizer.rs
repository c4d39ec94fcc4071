//! ADAM without bias correction.
//!
//! For every component `i` and step `k >= 0`:
//!
//! ```text
//! m_k = beta1 * m_{k-1} + (1 - beta1) * g_k
//! v_k = beta2 * v_{k-1} + (1 - beta2) * g_k^2
//! x_{k+1} = x_k - alpha * m_k / sqrt(v_k)
//! ```
//!
//! seeded with `m_{-1} = g_0` and `v_{-1} = g_0^2`. Two epsilon-regularised
//! denominators, `sqrt(eps + v^2)` and `eps + sqrt(v^2)`, are available
//! through [`Variant`]. Note the square on `v`: these are not the usual
//! `sqrt(v) + eps` form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::Trajectory;

/// Denominator used in the iterate update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Variant {
    /// `sqrt(v)`.
    Pure,
    /// `sqrt(epsilon + v^2)`.
    EpsInsideSqrt { epsilon: f64 },
    /// `epsilon + sqrt(v^2)`.
    EpsOutsideSqrt { epsilon: f64 },
}

impl Variant {
    pub fn epsilon(&self) -> Option<f64> {
        match *self {
            Variant::Pure => None,
            Variant::EpsInsideSqrt { epsilon } | Variant::EpsOutsideSqrt { epsilon } => {
                Some(epsilon)
            }
        }
    }

    #[inline]
    fn denominator(&self, v: f64) -> f64 {
        match *self {
            Variant::Pure => v.sqrt(),
            Variant::EpsInsideSqrt { epsilon } => (epsilon + v * v).sqrt(),
            Variant::EpsOutsideSqrt { epsilon } => epsilon + (v * v).sqrt(),
        }
    }
}

/// Fixed hyperparameters of the method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct AdamParams {
    alpha: f64,
    beta1: f64,
    beta2: f64,
    variant: Variant,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    alpha: f64,
    beta1: f64,
    beta2: f64,
    variant: Variant,
}

impl TryFrom<RawParams> for AdamParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        AdamParams::new(raw.alpha, raw.beta1, raw.beta2)?.with_variant(raw.variant)
    }
}

impl From<AdamParams> for RawParams {
    fn from(p: AdamParams) -> Self {
        RawParams {
            alpha: p.alpha,
            beta1: p.beta1,
            beta2: p.beta2,
            variant: p.variant,
        }
    }
}

impl AdamParams {
    /// Pure-variant parameters. Fails unless `alpha > 0` and both betas lie in `[0, 1)`.
    pub fn new(alpha: f64, beta1: f64, beta2: f64) -> Result<Self> {
        validate_alpha(alpha)?;
        validate_beta("beta1", beta1)?;
        validate_beta("beta2", beta2)?;
        Ok(AdamParams {
            alpha,
            beta1,
            beta2,
            variant: Variant::Pure,
        })
    }

    pub fn with_variant(mut self, variant: Variant) -> Result<Self> {
        if let Some(eps) = variant.epsilon() {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::invalid("epsilon must be positive"));
            }
        }
        self.variant = variant;
        Ok(self)
    }

    /// Same parameters with a different step length.
    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        validate_alpha(alpha)?;
        self.alpha = alpha;
        Ok(self)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta1(&self) -> f64 {
        self.beta1
    }

    pub fn beta2(&self) -> f64 {
        self.beta2
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// The scalar update `alpha * m / denom(v)` that is subtracted from `x`.
    ///
    /// This is the exact expression used by [`AdamState::step`], exposed so
    /// callers can compare observed iterate differences with the applied step.
    #[inline]
    pub fn update(&self, m: f64, v: f64) -> f64 {
        self.alpha * (m / self.variant.denominator(v))
    }
}

fn validate_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("alpha must be positive"))
    }
}

fn validate_beta(name: &str, beta: f64) -> Result<()> {
    if beta.is_nan() || beta < 0.0 {
        Err(Error::invalid(format!("{name} must be >= 0")))
    } else if beta >= 1.0 {
        Err(Error::invalid(format!("{name} must be < 1")))
    } else {
        Ok(())
    }
}

/// Iterate and moment estimates after `k` completed steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    x: Vec<f64>,
    m: Vec<f64>,
    v: Vec<f64>,
    k: u64,
    initialized: bool,
}

/// Seeds the moments from the initial gradient: `m_{-1} = g0`, `v_{-1} = g0^2`.
///
/// Because `beta * a + (1 - beta) * a == a`, the first [`AdamState::step`] with
/// gradient `g0` leaves `m_0 = g0` and `v_0 = g0^2`.
pub fn adam_init(x0: &[f64], g0: &[f64], _params: &AdamParams) -> Result<AdamState> {
    AdamState::init(x0, g0)
}

impl AdamState {
    pub fn init(x0: &[f64], g0: &[f64]) -> Result<Self> {
        if x0.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if g0.len() != x0.len() {
            return Err(Error::DimensionMismatch {
                expected: x0.len(),
                found: g0.len(),
            });
        }
        check_finite("x0", x0)?;
        check_finite("gradient", g0)?;
        Ok(AdamState {
            x: x0.to_vec(),
            m: g0.to_vec(),
            v: g0.iter().map(|g| g * g).collect(),
            k: 0,
            initialized: true,
        })
    }

    /// Applies one ADAM step with gradient `g` evaluated at the current iterate.
    ///
    /// On error the state is left untouched.
    pub fn step(&mut self, g: &[f64], params: &AdamParams) -> Result<()> {
        if !self.initialized {
            return Err(Error::invalid("state has not been seeded"));
        }
        if g.len() != self.x.len() {
            return Err(Error::DimensionMismatch {
                expected: self.x.len(),
                found: g.len(),
            });
        }
        check_finite("gradient", g)?;

        let (b1, b2) = (params.beta1, params.beta2);
        if params.variant == Variant::Pure {
            for (i, (&v, &gi)) in self.v.iter().zip(g).enumerate() {
                if b2 * v + (1.0 - b2) * (gi * gi) == 0.0 {
                    return Err(Error::DivisionByZero { component: i });
                }
            }
        }

        for (((x, m), v), &gi) in self.x.iter_mut().zip(&mut self.m).zip(&mut self.v).zip(g) {
            *m = b1 * *m + (1.0 - b1) * gi;
            *v = b2 * *v + (1.0 - b2) * (gi * gi);
            *x -= params.update(*m, *v);
        }
        self.k += 1;
        Ok(())
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    /// Number of completed steps.
    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn initialized(&self) -> bool {
        self.initialized
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Moments that the next step would produce for gradient `g`, without
    /// moving the iterate.
    pub fn preview_moments(&self, g: &[f64], params: &AdamParams) -> (Vec<f64>, Vec<f64>) {
        let (b1, b2) = (params.beta1, params.beta2);
        let m = self
            .m
            .iter()
            .zip(g)
            .map(|(&m, &gi)| b1 * m + (1.0 - b1) * gi)
            .collect();
        let v = self
            .v
            .iter()
            .zip(g)
            .map(|(&v, &gi)| b2 * v + (1.0 - b2) * (gi * gi))
            .collect();
        (m, v)
    }
}

fn check_finite(what: &'static str, xs: &[f64]) -> Result<()> {
    match xs.iter().position(|x| !x.is_finite()) {
        Some(component) => Err(Error::NonFinite { what, component }),
        None => Ok(()),
    }
}

/// Differences `x_{k+1} - x_k` between consecutive records of a 1D trajectory.
pub fn step_sizes(traj: &Trajectory) -> Result<Vec<f64>> {
    let records = traj.records();
    if records.len() < 2 {
        return Err(Error::NotEnoughRecords {
            needed: 2,
            found: records.len(),
        });
    }
    records
        .windows(2)
        .map(|w| {
            if w[1].k != w[0].k + 1 {
                Err(Error::NonContiguous { k: w[1].k })
            } else {
                Ok(w[1].x - w[0].x)
            }
        })
        .collect()
}
