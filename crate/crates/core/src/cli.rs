//! Command-line front end.
//!
//! Exit codes: 0 success, 1 runtime or invariant failure, 2 usage error,
//! 3 sweep found a non-diverging cell.
//!
//! Every subcommand accepts `--config <file.json>`: a JSON object whose keys
//! are the subcommand's long flag names in snake_case. Flags given on the
//! command line override the file.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{default_threshold, divergence_verdict, Verdict};
use crate::error::Error;
use crate::functions::{build_counterexample, CounterexampleSpec, DifferentiableFunction};
use crate::harness::{
    counterexample_for_run, export_trajectory, run_with, sweep, write_sweep_csv, Format, GridSpec,
    RunOptions, Schedule,
};
use crate::numeric::fmt17;
use crate::optimizer::{AdamParams, Variant};
use crate::verify::{verify, VerifyConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_DIVERGING: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "adam-divergence",
    version,
    about = "Deterministic ADAM on a C1 counterexample: run, sweep, verify, plot data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run ADAM on the counterexample and write the trajectory.
    Run(RunArgs),
    /// Run every (beta1, beta2, alpha) cell of a grid and report verdicts.
    Sweep(SweepArgs),
    /// Run the full certification suite and write a diagnostics report.
    Verify(VerifyArgs),
    /// Sample (t, f, f') of the counterexample for plotting.
    PlotData(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum VariantArg {
    Pure,
    EpsInside,
    EpsOutside,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleArg {
    Constant,
    InverseSqrt,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<VariantArg>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stride: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gradient_level: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value_increment: Option<f64>,
    /// Step-length schedule; `inverse-sqrt` is an exploratory contrast mode.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleArg>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepArgs {
    /// Comma-separated values or `start:stop:count`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta1: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta2: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<VariantArg>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report_out: Option<PathBuf>,
    /// Test hook: perturb the gradient recorded at this step.
    #[arg(long, hide = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corrupt_step: Option<u64>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(Error),
    ChecksFailed(Vec<String>),
    NotDiverging(usize),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(msg) => CliError::Usage(msg),
            other => CliError::Runtime(other),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(Error::io("<stdout>", e))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name) and runs the subcommand,
/// returning the process exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{rendered}");
            } else {
                let _ = write!(stdout, "{rendered}");
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args, stdout),
        Command::Sweep(args) => cmd_sweep(args, stdout),
        Command::Verify(args) => cmd_verify(args, stdout),
        Command::PlotData(args) => cmd_plot_data(args, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(
                stderr,
                "error: {msg}\n\nFor more information, try '--help'."
            );
            EXIT_USAGE
        }
        Err(CliError::Runtime(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_FAILURE
        }
        Err(CliError::ChecksFailed(names)) => {
            let _ = writeln!(stderr, "failed checks: {}", names.join(", "));
            EXIT_FAILURE
        }
        Err(CliError::NotDiverging(n)) => {
            let _ = writeln!(stderr, "{n} cell(s) did not diverge");
            EXIT_NOT_DIVERGING
        }
    }
}

/// Overlays the command-line flags on the optional JSON config file.
fn with_config<A>(flags: A, config: Option<&Path>) -> CliResult<A>
where
    A: Serialize + DeserializeOwned,
{
    let Some(path) = config else {
        return Ok(flags);
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Runtime(Error::io(path, e)))?;
    let mut base: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
    let overlay = serde_json::to_value(&flags).map_err(|e| CliError::Runtime(e.into()))?;
    match (&mut base, overlay) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => b.extend(o),
        _ => {
            return Err(CliError::Usage(format!(
                "config {} must be a JSON object",
                path.display()
            )))
        }
    }
    serde_json::from_value(base)
        .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
}

fn variant_from(arg: VariantArg, epsilon: f64) -> Variant {
    match arg {
        VariantArg::Pure => Variant::Pure,
        VariantArg::EpsInside => Variant::EpsInsideSqrt { epsilon },
        VariantArg::EpsOutside => Variant::EpsOutsideSqrt { epsilon },
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Runtime(Error::io(path, e)))
}

fn cmd_run(args: RunArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let config = args.config.clone();
    let args = with_config(args, config.as_deref())?;
    let steps = args.steps.unwrap_or(100);
    if steps == 0 {
        return Err(CliError::Usage("steps must be at least 1".into()));
    }
    let stride = args.stride.unwrap_or(1);
    if stride == 0 {
        return Err(CliError::Usage("stride must be at least 1".into()));
    }
    let x0 = args.x0.unwrap_or(0.0);
    if !x0.is_finite() {
        return Err(CliError::Usage("x0 must be finite".into()));
    }
    let variant = variant_from(
        args.variant.unwrap_or(VariantArg::Pure),
        args.epsilon.unwrap_or(1e-8),
    );
    let params = AdamParams::new(
        args.alpha.unwrap_or(1.0),
        args.beta1.unwrap_or(0.9),
        args.beta2.unwrap_or(0.9),
    )?
    .with_variant(variant)?;
    let schedule = match args.schedule.unwrap_or(ScheduleArg::Constant) {
        ScheduleArg::Constant => Schedule::Constant,
        ScheduleArg::InverseSqrt => Schedule::InverseSqrt,
    };
    let gradient_level = args.gradient_level.unwrap_or(-1.0);
    let function = counterexample_for_run(
        &params,
        gradient_level,
        args.value_increment.unwrap_or(0.0),
        x0,
        steps,
    )?;
    let traj = run_with(
        &function,
        &params,
        x0,
        steps,
        RunOptions {
            record_stride: stride,
            schedule,
        },
    )?;
    if let Some(out) = &args.out {
        export_trajectory(&traj, out, args.format.unwrap_or(Format::Csv))?;
    }
    let escape_step = -params.update(gradient_level, gradient_level * gradient_level);
    let report = divergence_verdict(&traj, default_threshold(steps, escape_step), 0.5)?;
    writeln!(
        stdout,
        "final_x={} min_abs_g={} verdict={}",
        traj.stats().final_x,
        report.min_abs_g,
        report.verdict
    )?;
    Ok(())
}

/// Parses `a,b,c` or `start:stop:count` (inclusive, evenly spaced).
pub fn parse_values(name: &str, text: &str) -> Result<Vec<f64>, String> {
    let bad = |why: &str| format!("malformed {name} range '{text}': {why}");
    let text = text.trim();
    if text.is_empty() {
        return Err(format!("{name} range is empty"));
    }
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, stop, count] = parts[..] else {
            return Err(bad("expected start:stop:count"));
        };
        let start: f64 = start.trim().parse().map_err(|_| bad("bad start"))?;
        let stop: f64 = stop.trim().parse().map_err(|_| bad("bad stop"))?;
        let count: usize = count.trim().parse().map_err(|_| bad("bad count"))?;
        if !(start.is_finite() && stop.is_finite()) {
            return Err(bad("bounds must be finite"));
        }
        return match count {
            0 => Err(format!("{name} range is empty")),
            1 => Ok(vec![start]),
            n => Ok((0..n)
                .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
                .collect()),
        };
    }
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(&format!("'{}' is not a number", s.trim())))
        })
        .collect()
}

fn cmd_sweep(args: SweepArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let config = args.config.clone();
    let args = with_config(args, config.as_deref())?;
    let defaults = GridSpec::default_grid();
    let values = |name: &str, text: &Option<String>, default: &Vec<f64>| match text {
        Some(t) => parse_values(name, t).map_err(CliError::Usage),
        None => Ok(default.clone()),
    };
    let mut grid = GridSpec::new(
        values("beta1", &args.beta1, &defaults.beta1)?,
        values("beta2", &args.beta2, &defaults.beta2)?,
        values("alpha", &args.alpha, &defaults.alpha)?,
        args.steps.unwrap_or(defaults.num_steps),
    );
    grid.variant = variant_from(
        args.variant.unwrap_or(VariantArg::Pure),
        args.epsilon.unwrap_or(1e-8),
    );
    AdamParams::new(1.0, 0.0, 0.0)?.with_variant(grid.variant)?;

    let result = sweep(&grid)?;
    if let Some(out) = &args.out {
        let mut w = create(out)?;
        write_sweep_csv(&result, &mut w)?;
        w.flush()
            .map_err(|e| CliError::Runtime(Error::io(out, e)))?;
    }
    let total = result.cells.len();
    let diverging = result.count(Verdict::Diverges);
    writeln!(
        stdout,
        "{diverging}/{total} diverge ({} non-diverging)",
        total - diverging
    )?;
    if diverging == total {
        Ok(())
    } else {
        Err(CliError::NotDiverging(total - diverging))
    }
}

fn cmd_verify(args: VerifyArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let config = args.config.clone();
    let args = with_config(args, config.as_deref())?;
    let mut cfg = VerifyConfig::new(
        args.alpha.unwrap_or(1.0),
        args.steps.unwrap_or(1000),
        args.seed.unwrap_or(42),
    );
    cfg.beta1 = args.beta1.unwrap_or(cfg.beta1);
    cfg.beta2 = args.beta2.unwrap_or(cfg.beta2);
    cfg.corrupt_step = args.corrupt_step;
    AdamParams::new(cfg.alpha, cfg.beta1, cfg.beta2)?;
    if cfg.steps == 0 {
        return Err(CliError::Usage("steps must be at least 1".into()));
    }

    let report = verify(&cfg)?;
    if let Some(path) = &args.report_out {
        let mut w = create(path)?;
        report.write_json(&mut w)?;
        w.write_all(b"\n")
            .and_then(|_| w.flush())
            .map_err(|e| CliError::Runtime(Error::io(path, e)))?;
    }
    for c in &report.checks {
        writeln!(
            stdout,
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        )?;
    }
    let failed: Vec<String> = report.failed_checks().map(|c| c.name.clone()).collect();
    if failed.is_empty() {
        writeln!(stdout, "all {} checks passed", report.checks.len())?;
        Ok(())
    } else {
        Err(CliError::ChecksFailed(failed))
    }
}

fn cmd_plot_data(args: PlotArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let config = args.config.clone();
    let args = with_config(args, config.as_deref())?;
    let alpha = args.alpha.unwrap_or(1.0);
    let t_min = args.t_min.unwrap_or(-1.0);
    let t_max = args.t_max.unwrap_or(10.0);
    let samples = args.samples.unwrap_or(2201);
    AdamParams::new(alpha, 0.0, 0.0)?;
    if !(t_min.is_finite() && t_max.is_finite() && t_min < t_max) {
        return Err(CliError::Usage("t-min must be less than t-max".into()));
    }
    if samples < 2 {
        return Err(CliError::Usage("samples must be at least 2".into()));
    }
    let num_knots = (t_max.max(0.0) / alpha).ceil() as usize + 2;
    let function = build_counterexample(CounterexampleSpec::new(alpha, num_knots))?;

    let mut sink: Box<dyn Write + '_> = match &args.out {
        Some(path) => Box::new(create(path)?),
        None => Box::new(&mut *stdout),
    };
    let mut w = csv::Writer::from_writer(&mut sink);
    w.write_record(["t", "f", "df"]).map_err(Error::from)?;
    let span = t_max - t_min;
    for i in 0..samples {
        let t = if i == samples - 1 {
            t_max
        } else {
            t_min + (span * i as f64) / (samples - 1) as f64
        };
        let (f, df) = function.value_and_derivative(t);
        w.write_record([fmt17(t), fmt17(f), fmt17(df)])
            .map_err(Error::from)?;
    }
    w.flush()?;
    drop(w);
    sink.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut argv = vec!["adam-divergence"];
        argv.extend_from_slice(args);
        let code = main_with(argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn parse_value_lists_and_ranges() {
        assert_eq!(parse_values("a", "0,0.5, 1").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(
            parse_values("a", "0:1:5").unwrap(),
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
        assert_eq!(parse_values("a", "2:9:1").unwrap(), vec![2.0]);
        assert!(parse_values("a", "").is_err());
        assert!(parse_values("a", "0:1").is_err());
        assert!(parse_values("a", "0,x").is_err());
        assert!(parse_values("a", "0:1:0").is_err());
    }

    #[test]
    fn run_summary() {
        let (code, out, _) = call(&[
            "run", "--alpha", "0.5", "--beta1", "0.9", "--beta2", "0.9", "--steps", "100",
        ]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), "final_x=50 min_abs_g=1 verdict=Diverges");
    }

    #[test]
    fn run_eps_outside() {
        let (code, out, _) = call(&[
            "run",
            "--variant",
            "eps-outside",
            "--epsilon",
            "1",
            "--alpha",
            "1",
            "--steps",
            "10",
        ]);
        assert_eq!(code, 0);
        assert!(out.starts_with("final_x=5 "), "{out}");
        assert!(out.contains("Diverges"));
    }

    #[test]
    fn run_rejects_zero_alpha() {
        let (code, _, err) = call(&["run", "--alpha", "0"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("alpha must be positive"), "{err}");
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        let (code, _, _) = call(&["run", "--bogus"]);
        assert_eq!(code, EXIT_USAGE);
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("plot-data"));
    }

    #[test]
    fn sweep_rejects_beta_one() {
        let (code, _, err) = call(&["sweep", "--beta1", "0,1.0", "--steps", "10"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("beta1 must be < 1"), "{err}");
        let (code, _, _) = call(&["sweep", "--alpha", "1:2"]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn plot_two_samples() {
        let (code, out, _) = call(&["plot-data", "--samples", "2"]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("-1.0000000000000000e0,1.0000000000000000e0,"));
        assert!(lines[2].starts_with("1.0000000000000000e1,"));
    }

    #[test]
    fn plot_rejects_inverted_range() {
        let (code, _, _) = call(&["plot-data", "--t-min", "3", "--t-max", "3"]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn config_file_is_overridden_by_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.json");
        std::fs::write(&cfg, r#"{"alpha": 0.25, "steps": 8, "beta1": 0.5}"#).unwrap();
        let cfg = cfg.to_str().unwrap();
        let (code, out, _) = call(&["run", "--config", cfg]);
        assert_eq!(code, 0);
        assert!(out.starts_with("final_x=2 "), "{out}");
        let (code, out, _) = call(&["run", "--config", cfg, "--steps", "4"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("final_x=1 "), "{out}");

        std::fs::write(dir.path().join("bad.json"), r#"{"alpha": 1, "nope": 2}"#).unwrap();
        let bad = dir.path().join("bad.json");
        let (code, _, _) = call(&["run", "--config", bad.to_str().unwrap()]);
        assert_eq!(code, EXIT_USAGE);
    }
}
