//! Couples the optimizer to a function: trajectories, parameter sweeps and export.

mod export;
mod sweep;

use serde::{Deserialize, Serialize};

pub use export::{
    export_trajectory, import_trajectory_json, write_sweep_csv, write_trajectory_csv, Format,
};
pub use sweep::{sweep, GridSpec, SweepCell, SweepResult};

use crate::error::{Error, Result};
use crate::functions::{Counterexample, CounterexampleSpec, DifferentiableFunction};
use crate::numeric::ulp;
use crate::optimizer::{AdamParams, AdamState};

/// One recorded iterate. `m` and `v` are the moments after absorbing `g`,
/// i.e. the ones that produce the step from `x` to the next iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub k: u64,
    pub x: f64,
    pub f: f64,
    pub g: f64,
    pub m: f64,
    pub v: f64,
}

/// Step-length schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    #[default]
    Constant,
    /// `alpha_k = alpha / sqrt(k + 1)`. Exploratory only.
    InverseSqrt,
}

impl Schedule {
    pub fn alpha_at(&self, alpha: f64, k: u64) -> f64 {
        match self {
            Schedule::Constant => alpha,
            Schedule::InverseSqrt => alpha / ((k + 1) as f64).sqrt(),
        }
    }
}

/// How a trajectory was generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Adam {
        params: AdamParams,
        schedule: Schedule,
    },
    /// Plain `x <- x - alpha g`; records carry `m = g` and `v = 1`.
    GradientDescent { alpha: f64 },
}

impl Method {
    pub fn alpha(&self) -> f64 {
        match self {
            Method::Adam { params, .. } => params.alpha(),
            Method::GradientDescent { alpha } => *alpha,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    fn point(x: f64) -> Self {
        Range { min: x, max: x }
    }

    fn include(&mut self, x: f64) {
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    fn merge(slot: &mut Option<Range>, x: f64) {
        match slot {
            Some(r) => r.include(x),
            None => *slot = Some(Range::point(x)),
        }
    }
}

/// Statistics gathered over every step of a run, recorded or not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    /// Number of completed steps `K`.
    pub steps: u64,
    pub final_x: f64,
    /// `|g_k|` over `k = 0..=K`.
    pub abs_g: Range,
    /// `m_k` and `v_k` over `k = 0..=K`.
    pub m: Range,
    pub v: Range,
    /// Observed `s_k = x_{k+1} - x_k` over `k < K`.
    pub step: Option<Range>,
    /// Intended displacement (minus the applied update) over `k < K`.
    pub update: Option<Range>,
    /// Largest `|s_k - update_k|` in ulps of `max(|x_k|, |x_{k+1}|)`.
    pub max_rounding_ulps: f64,
}

impl RunStats {
    fn start(first: &TrajectoryRecord) -> Self {
        RunStats {
            steps: 0,
            final_x: first.x,
            abs_g: Range::point(first.g.abs()),
            m: Range::point(first.m),
            v: Range::point(first.v),
            step: None,
            update: None,
            max_rounding_ulps: 0.0,
        }
    }

    fn absorb(&mut self, rec: &TrajectoryRecord) {
        self.abs_g.include(rec.g.abs());
        self.m.include(rec.m);
        self.v.include(rec.v);
    }

    fn absorb_step(&mut self, x: f64, x_next: f64, displacement: f64) {
        let s = x_next - x;
        Range::merge(&mut self.step, s);
        Range::merge(&mut self.update, displacement);
        let ulps = (s - displacement).abs() / ulp(x.abs().max(x_next.abs()));
        self.max_rounding_ulps = self.max_rounding_ulps.max(ulps);
        self.steps += 1;
        self.final_x = x_next;
    }

    /// Recomputes statistics from a contiguous list of records.
    pub fn from_records(records: &[TrajectoryRecord], method: &Method) -> Result<Self> {
        let first = records.first().ok_or(Error::NotEnoughRecords {
            needed: 1,
            found: 0,
        })?;
        let mut stats = RunStats::start(first);
        for w in records.windows(2) {
            if w[1].k != w[0].k + 1 {
                return Err(Error::NonContiguous { k: w[1].k });
            }
            let displacement = match method {
                Method::Adam { params, schedule } => {
                    let p = params.with_alpha(schedule.alpha_at(params.alpha(), w[0].k))?;
                    -p.update(w[0].m, w[0].v)
                }
                Method::GradientDescent { alpha } => -alpha * w[0].g,
            };
            stats.absorb(&w[1]);
            stats.absorb_step(w[0].x, w[1].x, displacement);
        }
        Ok(stats)
    }
}

/// Ordered records of a 1D run plus the statistics of every step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    method: Method,
    function_id: String,
    records: Vec<TrajectoryRecord>,
    stats: RunStats,
}

impl Trajectory {
    /// Wraps hand-built or imported records. Records must be contiguous in `k`.
    pub fn from_records(
        records: Vec<TrajectoryRecord>,
        method: Method,
        function_id: impl Into<String>,
    ) -> Result<Self> {
        let stats = RunStats::from_records(&records, &method)?;
        Ok(Trajectory {
            method,
            function_id: function_id.into(),
            records,
            stats,
        })
    }

    pub fn records(&self) -> &[TrajectoryRecord] {
        &self.records
    }

    /// Mutable access for fault-injection tests.
    pub fn records_mut(&mut self) -> &mut [TrajectoryRecord] {
        &mut self.records
    }

    pub fn method(&self) -> &Method {
        &self.method
    }

    pub fn function_id(&self) -> &str {
        &self.function_id
    }

    pub fn stats(&self) -> &RunStats {
        &self.stats
    }

    pub fn last(&self) -> &TrajectoryRecord {
        self.records.last().expect("trajectories are never empty")
    }

    /// True when every step from 0 to K is recorded.
    pub fn is_contiguous(&self) -> bool {
        self.records.first().map(|r| r.k) == Some(0)
            && self.records.windows(2).all(|w| w[1].k == w[0].k + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub record_stride: u64,
    pub schedule: Schedule,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            record_stride: 1,
            schedule: Schedule::Constant,
        }
    }
}

/// A resumable ADAM run on a 1D function.
pub struct Session<'a, F: DifferentiableFunction + ?Sized> {
    function: &'a F,
    params: AdamParams,
    options: RunOptions,
    state: AdamState,
    records: Vec<TrajectoryRecord>,
    stats: Option<RunStats>,
}

impl<'a, F: DifferentiableFunction + ?Sized> Session<'a, F> {
    pub fn start(
        function: &'a F,
        params: AdamParams,
        x0: f64,
        options: RunOptions,
    ) -> Result<Self> {
        if options.record_stride == 0 {
            return Err(Error::invalid("stride must be at least 1"));
        }
        if !x0.is_finite() {
            return Err(Error::invalid("x0 must be finite"));
        }
        let g0 = function.derivative(x0);
        if !g0.is_finite() {
            return Err(Error::NonFiniteAtStep {
                what: "gradient",
                step: 0,
            });
        }
        let state = AdamState::init(&[x0], &[g0])?;
        Ok(Session {
            function,
            params,
            options,
            state,
            records: Vec::new(),
            stats: None,
        })
    }

    pub fn state(&self) -> &AdamState {
        &self.state
    }

    fn sample(&self) -> Result<(f64, f64)> {
        let step = self.state.k();
        let (f, g) = self.function.value_and_derivative(self.state.x()[0]);
        if !f.is_finite() {
            return Err(Error::NonFiniteAtStep {
                what: "function value",
                step,
            });
        }
        if !g.is_finite() {
            return Err(Error::NonFiniteAtStep {
                what: "gradient",
                step,
            });
        }
        Ok((f, g))
    }

    /// Performs `num_steps` further steps.
    pub fn advance(&mut self, num_steps: u64) -> Result<()> {
        for _ in 0..num_steps {
            let k = self.state.k();
            let x = self.state.x()[0];
            let (f, g) = self.sample()?;
            let params = match self.options.schedule {
                Schedule::Constant => self.params,
                s => self.params.with_alpha(s.alpha_at(self.params.alpha(), k))?,
            };
            self.state.step(&[g], &params)?;
            let x_next = self.state.x()[0];
            if !x_next.is_finite() {
                return Err(Error::NonFiniteAtStep {
                    what: "iterate",
                    step: k + 1,
                });
            }
            let (m, v) = (self.state.m()[0], self.state.v()[0]);
            let rec = TrajectoryRecord { k, x, f, g, m, v };
            let stats = self.stats.get_or_insert_with(|| RunStats::start(&rec));
            stats.absorb(&rec);
            stats.absorb_step(x, x_next, -params.update(m, v));
            if k.is_multiple_of(self.options.record_stride) {
                self.records.push(rec);
            }
        }
        Ok(())
    }

    /// Snapshot of the run so far, closed by a record at the current iterate.
    pub fn trajectory(&self) -> Result<Trajectory> {
        let (f, g) = self.sample()?;
        let (m, v) = self.state.preview_moments(&[g], &self.params);
        let last = TrajectoryRecord {
            k: self.state.k(),
            x: self.state.x()[0],
            f,
            g,
            m: m[0],
            v: v[0],
        };
        let mut stats = self.stats.unwrap_or_else(|| RunStats::start(&last));
        stats.absorb(&last);
        let mut records = Vec::with_capacity(self.records.len() + 1);
        records.extend_from_slice(&self.records);
        records.push(last);
        Ok(Trajectory {
            method: Method::Adam {
                params: self.params,
                schedule: self.options.schedule,
            },
            function_id: self.function.id(),
            records,
            stats,
        })
    }
}

/// Runs `num_steps` ADAM steps from `x0`, recording every `record_stride`-th
/// iterate and always the final one.
pub fn run<F: DifferentiableFunction + ?Sized>(
    function: &F,
    params: &AdamParams,
    x0: f64,
    num_steps: u64,
    record_stride: u64,
) -> Result<Trajectory> {
    run_with(
        function,
        params,
        x0,
        num_steps,
        RunOptions {
            record_stride,
            ..RunOptions::default()
        },
    )
}

pub fn run_with<F: DifferentiableFunction + ?Sized>(
    function: &F,
    params: &AdamParams,
    x0: f64,
    num_steps: u64,
    options: RunOptions,
) -> Result<Trajectory> {
    if num_steps == 0 {
        return Err(Error::invalid("steps must be at least 1"));
    }
    let mut session = Session::start(function, *params, x0, options)?;
    session.advance(num_steps)?;
    session.trajectory()
}

/// Plain gradient descent, recorded in the same format (`m = g`, `v = 1`).
pub fn run_gradient_descent<F: DifferentiableFunction + ?Sized>(
    function: &F,
    alpha: f64,
    x0: f64,
    num_steps: u64,
) -> Result<Trajectory> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid("alpha must be positive"));
    }
    let mut records = Vec::with_capacity(num_steps as usize + 1);
    let mut x = x0;
    for k in 0..=num_steps {
        let (f, g) = function.value_and_derivative(x);
        if !(f.is_finite() && g.is_finite()) {
            return Err(Error::NonFiniteAtStep {
                what: "gradient",
                step: k,
            });
        }
        records.push(TrajectoryRecord {
            k,
            x,
            f,
            g,
            m: g,
            v: 1.0,
        });
        x -= alpha * g;
    }
    Trajectory::from_records(records, Method::GradientDescent { alpha }, function.id())
}

/// Iterates generated from the origin when every gradient equals
/// `gradient_level`: the knot sequence of the counterexample for `params`.
pub fn escape_iterates(params: &AdamParams, gradient_level: f64, count: usize) -> Result<Vec<f64>> {
    let mut state = AdamState::init(&[0.0], &[gradient_level])?;
    let mut xs = Vec::with_capacity(count);
    xs.push(0.0);
    while xs.len() < count {
        state.step(&[gradient_level], params)?;
        xs.push(state.x()[0]);
    }
    Ok(xs)
}

/// Counterexample whose knots are exactly the iterates ADAM (with `params`)
/// produces from the origin, sized with `K + 2` knots for a `K`-step run (more
/// if `x0 > 0`), so the run never reaches the right tail.
pub fn counterexample_for_run(
    params: &AdamParams,
    gradient_level: f64,
    value_increment: f64,
    x0: f64,
    num_steps: u64,
) -> Result<Counterexample> {
    let spec = CounterexampleSpec::new(params.alpha(), 2)
        .with_gradient_level(gradient_level)
        .with_value_increment(value_increment);
    spec.validate()?;
    let first = -params.update(gradient_level, gradient_level * gradient_level);
    let lead = if x0 > 0.0 {
        (x0 / first).ceil() as usize
    } else {
        0
    };
    let count = num_steps as usize + 2 + lead;
    let knots = escape_iterates(params, gradient_level, count)?;
    Counterexample::through_knots(spec, knots)
}
