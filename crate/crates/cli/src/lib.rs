//! Argument parsing and command dispatch for the `liouville` binary.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use liouville_core::algebra::{
    beta_extremes, classify_point, critical_couplings, necessary_conditions_tol, phi1,
    solvable_radial, thresholds, Classification, CriticalCouplings, NecessaryConditions, Sign,
    SolvabilityReport,
};
use liouville_core::ode::{integrate, TailEstimate};
use liouville_core::shooting::{estimate_limits, linear_grid, solve_for_target, sweep};
use liouville_core::verify::{
    beta_infty, decay_check, general_pohozaev_residual, normalize_general, BetaInfinity,
    DecayCheck, Normalized,
};
use liouville_core::{FluxPair, GeneralSystem, IntegrateConfig, SystemParams};

/// Exit status of a completed run.
pub const EXIT_OK: u8 = 0;
/// Usage or domain error.
pub const EXIT_ERROR: u8 = 1;
/// The run finished but some result did not converge.
pub const EXIT_NOT_CONVERGED: u8 = 2;

/// Environment variable capping the worker threads of sweeps.
pub const THREADS_ENV: &str = "LIOUVILLE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "liouville", version, about = "Radial shooting solver for the competitive singular Liouville system")]
struct Cli {
    #[command(subcommand)]
    command: RawCommand,
}

#[derive(Debug, Clone, Args)]
struct Model {
    /// Coupling tau in (0, 1); 0 is accepted by solve and sweep
    #[arg(long, allow_negative_numbers = true)]
    tau: f64,
    /// Singularity strength N > 0
    #[arg(long = "N", allow_negative_numbers = true)]
    big_n: f64,
}

#[derive(Debug, Clone, Args)]
struct Tolerances {
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    #[arg(long)]
    tail_tol: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    /// Launch radius (chosen automatically when absent)
    #[arg(long)]
    r0: Option<f64>,
}

#[derive(Debug, Clone, Args)]
struct Output {
    /// Output file (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
enum RawCommand {
    /// Closed-form thresholds; critical couplings only when --tau is absent
    Thresholds {
        #[arg(long = "N", allow_negative_numbers = true)]
        big_n: f64,
        #[arg(long, allow_negative_numbers = true)]
        tau: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Integrate one shot, or find the shot hitting --target
    Solve {
        #[command(flatten)]
        model: Model,
        #[arg(long, allow_negative_numbers = true, required_unless_present = "target")]
        alpha: Option<f64>,
        /// Target beta1 for inversion over [--alpha-min, --alpha-max]
        #[arg(long, conflicts_with = "alpha")]
        target: Option<f64>,
        #[arg(long, allow_negative_numbers = true, default_value_t = -20.0)]
        alpha_min: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 20.0)]
        alpha_max: f64,
        #[arg(long, default_value_t = 1e-6)]
        target_tol: f64,
        #[command(flatten)]
        tol: Tolerances,
        #[command(flatten)]
        output: Output,
    },
    /// Fluxes over an equally spaced alpha grid
    Sweep {
        #[command(flatten)]
        model: Model,
        #[arg(long, allow_negative_numbers = true)]
        alpha_min: f64,
        #[arg(long, allow_negative_numbers = true)]
        alpha_max: f64,
        #[arg(long)]
        steps: usize,
        #[command(flatten)]
        tol: Tolerances,
        #[command(flatten)]
        output: Output,
    },
    /// Extrapolated ends of the shooting curve against the closed-form limits
    Limits {
        #[command(flatten)]
        model: Model,
        #[arg(long, default_value_t = 30.0)]
        alpha_max: f64,
        #[command(flatten)]
        tol: Tolerances,
        #[command(flatten)]
        output: Output,
    },
    /// Solvability report for a flux pair
    Verify {
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        beta1: f64,
        #[arg(long)]
        beta2: f64,
        /// Relative tolerance for membership on the curve
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Reduce a general 2x2 system to normalized couplings
    Normalize {
        #[arg(long, allow_negative_numbers = true)]
        k11: f64,
        #[arg(long, allow_negative_numbers = true)]
        k12: f64,
        #[arg(long, allow_negative_numbers = true)]
        k21: f64,
        #[arg(long, allow_negative_numbers = true)]
        k22: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        n1: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        n2: f64,
        /// Optional flux pair to evaluate in the general identity
        #[arg(long, requires = "beta2")]
        beta1: Option<f64>,
        #[arg(long, requires = "beta1")]
        beta2: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// The arc beta2 = phi1+(beta1) sampled for plotting
    Curve {
        #[command(flatten)]
        model: Model,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[command(flatten)]
        output: Output,
    },
}

/// A validated command.
#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Thresholds {
        big_n: f64,
        tau: Option<f64>,
    },
    Solve {
        params: SystemParams<f64>,
        alpha: f64,
    },
    SolveTarget {
        params: SystemParams<f64>,
        target: f64,
        bracket: (f64, f64),
        tol: f64,
    },
    Sweep {
        params: SystemParams<f64>,
        alpha_min: f64,
        alpha_max: f64,
        steps: usize,
    },
    Limits {
        params: SystemParams<f64>,
        alpha_max: f64,
    },
    Verify {
        params: SystemParams<f64>,
        beta1: f64,
        beta2: f64,
        tol: f64,
    },
    Normalize {
        system: GeneralSystem<f64>,
        betas: Option<(f64, f64)>,
    },
    Curve {
        params: SystemParams<f64>,
        samples: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub integrate: IntegrateConfig<f64>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

fn usage(kind: ErrorKind, msg: impl std::fmt::Display) -> clap::Error {
    Cli::command().error(kind, msg)
}

fn params(model: &Model, allow_zero: bool) -> Result<SystemParams<f64>, clap::Error> {
    let ok = if allow_zero {
        model.tau >= 0.0 && model.tau < 1.0
    } else {
        model.tau > 0.0 && model.tau < 1.0
    };
    if !ok || !model.tau.is_finite() {
        let range = if allow_zero { "[0, 1)" } else { "(0, 1)" };
        return Err(usage(
            ErrorKind::ValueValidation,
            format!("--tau {}: requires tau in {range}", model.tau),
        ));
    }
    if !(model.big_n > 0.0 && model.big_n.is_finite()) {
        return Err(usage(
            ErrorKind::ValueValidation,
            format!("--N {}: requires N > 0", model.big_n),
        ));
    }
    SystemParams::new(model.tau, model.big_n).map_err(|e| usage(ErrorKind::ValueValidation, e))
}

fn integrate_config(tol: &Tolerances) -> Result<IntegrateConfig<f64>, clap::Error> {
    let mut cfg = IntegrateConfig::default();
    let fields = [
        ("--rel-tol", tol.rel_tol, &mut cfg.rel_tol),
        ("--abs-tol", tol.abs_tol, &mut cfg.abs_tol),
        ("--tail-tol", tol.tail_tol, &mut cfg.tail_tol),
        ("--t-max", tol.t_max, &mut cfg.t_max),
    ];
    for (flag, value, slot) in fields {
        if let Some(v) = value {
            if !(v > 0.0 && v.is_finite()) {
                return Err(usage(
                    ErrorKind::ValueValidation,
                    format!("{flag} {v}: must be positive and finite"),
                ));
            }
            *slot = v;
        }
    }
    if let Some(r0) = tol.r0 {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(usage(
                ErrorKind::ValueValidation,
                format!("--r0 {r0}: must be positive and finite"),
            ));
        }
        cfg.r0 = Some(r0);
    }
    Ok(cfg)
}

fn finite(flag: &str, v: f64) -> Result<f64, clap::Error> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(usage(ErrorKind::ValueValidation, format!("{flag}: must be finite")))
    }
}

fn resolve_format(output: &Output, default: Format, allowed: &[Format]) -> Result<Format, clap::Error> {
    let inferred = output
        .out
        .as_ref()
        .and_then(|p| p.extension())
        .and_then(|e| match e.to_str() {
            Some("csv") => Some(Format::Csv),
            Some("json") => Some(Format::Json),
            _ => None,
        })
        .filter(|f| allowed.contains(f));
    let format = output.format.or(inferred).unwrap_or(default);
    if allowed.contains(&format) {
        Ok(format)
    } else {
        Err(usage(
            ErrorKind::InvalidValue,
            format!("--format {format:?}: not available for this command").to_lowercase(),
        ))
    }
}

/// Parses and validates a full argument vector, program name included.
///
/// Errors carry clap's rendering; `--help` and `--version` come back as
/// errors whose `exit_code()` is 0.
pub fn parse_args<I, S>(argv: I) -> Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let default_cfg = IntegrateConfig::default();
    let (command, integrate, output, format) = match cli.command {
        RawCommand::Thresholds { big_n, tau, output } => {
            if !(big_n > 0.0 && big_n.is_finite()) {
                return Err(usage(
                    ErrorKind::ValueValidation,
                    format!("--N {big_n}: requires N > 0"),
                ));
            }
            if let Some(t) = tau {
                params(&Model { tau: t, big_n }, false)?;
            }
            let f = resolve_format(&output, Format::Json, &[Format::Json])?;
            (Command::Thresholds { big_n, tau }, default_cfg, output, f)
        }
        RawCommand::Solve {
            model,
            alpha,
            target,
            alpha_min,
            alpha_max,
            target_tol,
            tol,
            output,
        } => {
            let p = params(&model, true)?;
            let cfg = integrate_config(&tol)?;
            let command = match (alpha, target) {
                (Some(a), None) => Command::Solve {
                    params: p,
                    alpha: finite("--alpha", a)?,
                },
                (None, Some(t)) => {
                    if !(alpha_min < alpha_max) || !alpha_min.is_finite() || !alpha_max.is_finite() {
                        return Err(usage(
                            ErrorKind::ValueValidation,
                            "--alpha-min must be below --alpha-max",
                        ));
                    }
                    if !(target_tol > 0.0) {
                        return Err(usage(ErrorKind::ValueValidation, "--target-tol must be positive"));
                    }
                    Command::SolveTarget {
                        params: p,
                        target: finite("--target", t)?,
                        bracket: (alpha_min, alpha_max),
                        tol: target_tol,
                    }
                }
                _ => {
                    return Err(usage(
                        ErrorKind::MissingRequiredArgument,
                        "solve needs exactly one of --alpha or --target",
                    ))
                }
            };
            let allowed: &[Format] = if matches!(command, Command::Solve { .. }) {
                &[Format::Json, Format::Csv]
            } else {
                &[Format::Json]
            };
            let f = resolve_format(&output, Format::Json, allowed)?;
            (command, cfg, output, f)
        }
        RawCommand::Sweep {
            model,
            alpha_min,
            alpha_max,
            steps,
            tol,
            output,
        } => {
            let p = params(&model, true)?;
            let cfg = integrate_config(&tol)?;
            finite("--alpha-min", alpha_min)?;
            finite("--alpha-max", alpha_max)?;
            if steps == 0 {
                return Err(usage(ErrorKind::ValueValidation, "--steps must be at least 1"));
            }
            let ordered = if steps == 1 {
                alpha_min == alpha_max
            } else {
                alpha_min < alpha_max
            };
            if !ordered {
                return Err(usage(
                    ErrorKind::ValueValidation,
                    "--alpha-min must be below --alpha-max (equal when --steps 1)",
                ));
            }
            let f = resolve_format(&output, Format::Csv, &[Format::Csv, Format::Json])?;
            (
                Command::Sweep {
                    params: p,
                    alpha_min,
                    alpha_max,
                    steps,
                },
                cfg,
                output,
                f,
            )
        }
        RawCommand::Limits {
            model,
            alpha_max,
            tol,
            output,
        } => {
            let p = params(&model, false)?;
            let cfg = integrate_config(&tol)?;
            if !(alpha_max >= 10.0 && alpha_max.is_finite()) {
                return Err(usage(ErrorKind::ValueValidation, "--alpha-max must be at least 10"));
            }
            let f = resolve_format(&output, Format::Json, &[Format::Json])?;
            (Command::Limits { params: p, alpha_max }, cfg, output, f)
        }
        RawCommand::Verify {
            model,
            beta1,
            beta2,
            tol,
            output,
        } => {
            let p = params(&model, false)?;
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(usage(ErrorKind::ValueValidation, "--tol must be positive"));
            }
            let f = resolve_format(&output, Format::Text, &[Format::Text, Format::Json])?;
            (
                Command::Verify {
                    params: p,
                    beta1: finite("--beta1", beta1)?,
                    beta2: finite("--beta2", beta2)?,
                    tol,
                },
                default_cfg,
                output,
                f,
            )
        }
        RawCommand::Normalize {
            k11,
            k12,
            k21,
            k22,
            n1,
            n2,
            beta1,
            beta2,
            output,
        } => {
            let system = GeneralSystem::new(k11, k12, k21, k22, n1, n2)
                .map_err(|e| usage(ErrorKind::ValueValidation, e))?;
            let betas = match (beta1, beta2) {
                (Some(a), Some(b)) => Some((finite("--beta1", a)?, finite("--beta2", b)?)),
                _ => None,
            };
            let f = resolve_format(&output, Format::Json, &[Format::Json])?;
            (Command::Normalize { system, betas }, default_cfg, output, f)
        }
        RawCommand::Curve {
            model,
            samples,
            output,
        } => {
            let p = params(&model, false)?;
            if samples < 2 {
                return Err(usage(ErrorKind::ValueValidation, "--samples must be at least 2"));
            }
            let f = resolve_format(&output, Format::Csv, &[Format::Csv, Format::Json])?;
            (Command::Curve { params: p, samples }, default_cfg, output, f)
        }
    };
    Ok(RunConfig {
        command,
        integrate,
        out: output.out,
        format,
    })
}

/// Reads the thread cap from the environment; `None` when unset.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(e).with_context(|| format!("reading {THREADS_ENV}")),
        Ok(s) => {
            let n: usize = s
                .trim()
                .parse()
                .with_context(|| format!("{THREADS_ENV}={s:?} is not a positive integer"))?;
            anyhow::ensure!(n > 0, "{THREADS_ENV} must be at least 1");
            Ok(Some(n))
        }
    }
}

#[derive(Serialize)]
struct ShotSummary {
    tau: f64,
    #[serde(rename = "N")]
    big_n: f64,
    alpha: f64,
    beta1: f64,
    beta2: f64,
    err1: f64,
    err2: f64,
    converged: bool,
    t_end: f64,
    tail: Option<TailEstimate<f64>>,
    residual: f64,
    conditions: NecessaryConditions<f64>,
    decay: Option<DecayCheck<f64>>,
    accepted_steps: usize,
    rejected_steps: usize,
}

#[derive(Serialize)]
struct TargetSummary {
    tau: f64,
    #[serde(rename = "N")]
    big_n: f64,
    target: f64,
    alpha: f64,
    beta1: f64,
    beta2: f64,
    err1: f64,
    err2: f64,
    iterations: usize,
}

#[derive(Serialize)]
struct CriticalOnly {
    #[serde(rename = "N")]
    big_n: f64,
    #[serde(flatten)]
    couplings: CriticalCouplings<f64>,
}

#[derive(Serialize)]
struct VerifySummary {
    tau: f64,
    #[serde(rename = "N")]
    big_n: f64,
    beta1: f64,
    beta2: f64,
    #[serde(flatten)]
    report: SolvabilityReport<f64>,
    classification: Classification<f64>,
    conditions: NecessaryConditions<f64>,
}

#[derive(Serialize)]
struct NormalizeSummary {
    #[serde(flatten)]
    normalized: Normalized<f64>,
    determinant: f64,
    competitive: bool,
    pohozaev_residual: Option<f64>,
    beta_infinity: Option<BetaInfinity<f64>>,
}

#[derive(Serialize)]
struct CurvePoint {
    beta1: f64,
    beta2: f64,
}

fn json<W: Write, S: Serialize>(mut out: W, value: &S) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn verify_text<W: Write>(mut out: W, s: &VerifySummary) -> io::Result<()> {
    writeln!(out, "tau: {}", s.tau)?;
    writeln!(out, "N: {}", s.big_n)?;
    writeln!(out, "beta1: {}", s.beta1)?;
    writeln!(out, "beta2: {}", s.beta2)?;
    writeln!(out, "solvable: {}", s.report.solvable)?;
    if let Some(f) = s.report.failure {
        writeln!(out, "failure: {}", serde_json::to_value(f).map_err(io::Error::other)?.as_str().unwrap_or("?"))?;
    }
    writeln!(out, "interval: ({}, {})", s.report.beta_minus1, s.report.beta_plus1)?;
    if let Some(phi) = s.report.phi1_plus {
        writeln!(out, "phi1_plus: {phi}")?;
    }
    if let Some(m) = s.report.mismatch {
        writeln!(out, "mismatch: {m}")?;
    }
    if s.report.toda_point {
        writeln!(out, "toda_point: true")?;
    }
    if s.report.near_endpoint {
        writeln!(out, "near_endpoint: true")?;
    }
    let c = &s.conditions;
    for check in [c.tau_range, c.ellipse, c.decay1, c.decay2, c.radial1, c.radial2] {
        let mark = if check.passed { "ok" } else { "FAILED" };
        writeln!(out, "  {mark:6} {} (margin {})", check.name, check.margin)?;
    }
    Ok(())
}

/// Runs a validated configuration, writing the artifact to `--out` or to
/// `stdout`. Returns the exit status.
pub fn run<W: Write>(config: &RunConfig, stdout: W) -> Result<u8> {
    match &config.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            let code = dispatch(config, &mut w)?;
            w.flush().with_context(|| format!("writing {}", path.display()))?;
            Ok(code)
        }
        None => dispatch(config, stdout),
    }
}

fn dispatch<W: Write>(config: &RunConfig, mut out: W) -> Result<u8> {
    let cfg = &config.integrate;
    match &config.command {
        Command::Thresholds { big_n, tau } => {
            match tau {
                Some(t) => json(&mut out, &thresholds(&SystemParams::new(*t, *big_n)?)?)?,
                None => json(
                    &mut out,
                    &CriticalOnly {
                        big_n: *big_n,
                        couplings: critical_couplings(*big_n)?,
                    },
                )?,
            }
            Ok(EXIT_OK)
        }
        Command::Solve { params, alpha } => {
            let tr = integrate(params, *alpha, cfg)?;
            if config.format == Format::Csv {
                tr.write_csv(&mut out)?;
            } else {
                let f = tr.flux;
                let summary = ShotSummary {
                    tau: params.tau(),
                    big_n: params.big_n(),
                    alpha: *alpha,
                    beta1: f.beta1,
                    beta2: f.beta2,
                    err1: f.err1,
                    err2: f.err2,
                    converged: tr.converged,
                    t_end: tr.t_end,
                    tail: tr.tail,
                    residual: liouville_core::algebra::ellipse_residual(f.beta1, f.beta2, params),
                    conditions: necessary_conditions_tol(f.beta1, f.beta2, params, 1e-8),
                    decay: decay_check(&tr).ok(),
                    accepted_steps: tr.stats.accepted,
                    rejected_steps: tr.stats.rejected,
                };
                json(&mut out, &summary)?;
            }
            Ok(if tr.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
        }
        Command::SolveTarget {
            params,
            target,
            bracket,
            tol,
        } => {
            let s = solve_for_target(params, *target, *bracket, *tol, cfg)?;
            let FluxPair {
                beta1,
                beta2,
                err1,
                err2,
            } = s.flux;
            json(
                &mut out,
                &TargetSummary {
                    tau: params.tau(),
                    big_n: params.big_n(),
                    target: *target,
                    alpha: s.alpha,
                    beta1,
                    beta2,
                    err1,
                    err2,
                    iterations: s.iterations,
                },
            )?;
            Ok(if (beta1 - target).abs() <= *tol { EXIT_OK } else { EXIT_NOT_CONVERGED })
        }
        Command::Sweep {
            params,
            alpha_min,
            alpha_max,
            steps,
        } => {
            let grid = linear_grid(*alpha_min, *alpha_max, *steps)?;
            let result = sweep(params, &grid, cfg)?;
            match config.format {
                Format::Json => json(&mut out, &result)?,
                _ => result.write_csv(&mut out)?,
            }
            let all = result.points.iter().all(|p| p.converged);
            Ok(if all { EXIT_OK } else { EXIT_NOT_CONVERGED })
        }
        Command::Limits { params, alpha_max } => {
            let report = estimate_limits(params, *alpha_max, cfg)?;
            json(&mut out, &report)?;
            Ok(if report.reliable { EXIT_OK } else { EXIT_NOT_CONVERGED })
        }
        Command::Verify {
            params,
            beta1,
            beta2,
            tol,
        } => {
            let s = VerifySummary {
                tau: params.tau(),
                big_n: params.big_n(),
                beta1: *beta1,
                beta2: *beta2,
                report: solvable_radial(*beta1, *beta2, params, *tol),
                classification: classify_point(*beta1, *beta2, params, *tol),
                conditions: necessary_conditions_tol(*beta1, *beta2, params, *tol),
            };
            match config.format {
                Format::Json => json(&mut out, &s)?,
                _ => verify_text(&mut out, &s)?,
            }
            Ok(EXIT_OK)
        }
        Command::Normalize { system, betas } => {
            let normalized = normalize_general(system)?;
            let pohozaev_residual = match betas {
                Some((b1, b2)) if system.k12 * system.k21 >= 0.0 => {
                    Some(general_pohozaev_residual(system, *b1, *b2)?)
                }
                _ => None,
            };
            json(
                &mut out,
                &NormalizeSummary {
                    normalized,
                    determinant: system.det(),
                    competitive: system.is_competitive(),
                    pohozaev_residual,
                    beta_infinity: betas.map(|(b1, b2)| beta_infty(system, b1, b2)),
                },
            )?;
            Ok(EXIT_OK)
        }
        Command::Curve { params, samples } => {
            let e = beta_extremes(params)?;
            let n = *samples;
            let mut pts = Vec::with_capacity(n);
            for i in 0..n {
                let b1 = if i + 1 == n {
                    e.over1
                } else {
                    e.under1 + (e.over1 - e.under1) * i as f64 / (n - 1) as f64
                };
                pts.push(CurvePoint {
                    beta1: b1,
                    beta2: phi1(b1, Sign::Plus, params)?,
                });
            }
            if config.format == Format::Json {
                json(&mut out, &pts)?;
            } else {
                writeln!(out, "beta1,beta2")?;
                for p in &pts {
                    writeln!(out, "{:?},{:?}", p.beta1, p.beta2)?;
                }
            }
            Ok(EXIT_OK)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &str) -> Result<RunConfig, clap::Error> {
        parse_args(std::iter::once("liouville").chain(args.split_whitespace()))
    }

    #[test]
    fn parses_solve_with_defaults() {
        let c = parse("solve --tau 0.5 --N 1 --alpha 0").unwrap();
        assert_eq!(
            c.command,
            Command::Solve {
                params: SystemParams::new(0.5, 1.0).unwrap(),
                alpha: 0.0
            }
        );
        assert_eq!(c.integrate, IntegrateConfig::default());
        assert_eq!(c.format, Format::Json);
        assert!(c.out.is_none());
    }

    #[test]
    fn parses_thresholds() {
        let c = parse("thresholds --N 1").unwrap();
        assert_eq!(c.command, Command::Thresholds { big_n: 1.0, tau: None });
    }

    #[test]
    fn rejects_bad_tau() {
        let e = parse("solve --tau 1.2 --N 1 --alpha 0").unwrap_err();
        assert!(e.to_string().contains("(0, 1)") || e.to_string().contains("[0, 1)"));
        let e = parse("verify --tau 0 --N 1 --beta1 8 --beta2 4").unwrap_err();
        assert!(e.to_string().contains("(0, 1)"), "{e}");
        assert!(parse("sweep --tau 0 --N 1 --alpha-min -1 --alpha-max 1 --steps 3").is_ok());
    }

    #[test]
    fn rejects_unknown_and_missing() {
        assert!(parse("solve --tau 0.3 --N 1 --alpha 0 --bogus 1").is_err());
        assert!(parse("solve --tau 0.3 --N 1").is_err());
        assert!(parse("sweep --tau 0.3 --N 1 --alpha-min 1 --alpha-max -1 --steps 3").is_err());
        assert!(parse("sweep --tau 0.3 --N 1 --alpha-min -1 --alpha-max 1 --steps 0").is_err());
        assert!(parse("solve --tau 0.3 --N 1 --alpha 0 --rel-tol -1").is_err());
        assert!(parse("thresholds --N -1").is_err());
    }

    #[test]
    fn format_from_extension_and_flag() {
        let c = parse("sweep --tau 0.3 --N 1 --alpha-min -1 --alpha-max 1 --steps 3 --out s.json").unwrap();
        assert_eq!(c.format, Format::Json);
        let c = parse("sweep --tau 0.3 --N 1 --alpha-min -1 --alpha-max 1 --steps 3").unwrap();
        assert_eq!(c.format, Format::Csv);
        assert!(parse("thresholds --N 1 --format csv").is_err());
    }

    #[test]
    fn tolerance_overrides() {
        let c = parse("solve --tau 0.3 --N 1 --alpha 0 --rel-tol 1e-9 --t-max 40 --r0 1e-3").unwrap();
        assert_eq!(c.integrate.rel_tol, 1e-9);
        assert_eq!(c.integrate.t_max, 40.0);
        assert_eq!(c.integrate.r0, Some(1e-3));
    }

    #[test]
    fn thresholds_json_keys() {
        let c = parse("thresholds --N 1 --tau 0.5").unwrap();
        let mut buf = Vec::new();
        assert_eq!(run(&c, &mut buf).unwrap(), EXIT_OK);
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        for key in [
            "tau0_1", "tau0_2", "tau1_1", "tau1_2", "beta_under_1", "beta_over_1",
            "beta_star_1", "beta_starstar_1", "beta_minus_1", "beta_plus_1", "beta_under_2",
            "beta_over_2", "beta_star_2", "beta_starstar_2", "beta_minus_2", "beta_plus_2",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert!((v["beta_minus_1"].as_f64().unwrap() - 12.0).abs() < 1e-12);
        assert!((v["beta_plus_1"].as_f64().unwrap() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn verify_text_report() {
        let c = parse("verify --tau 0.15 --N 1 --beta1 8.6 --beta2 5.6699").unwrap();
        let mut buf = Vec::new();
        run(&c, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("solvable: true"), "{text}");
    }
}
