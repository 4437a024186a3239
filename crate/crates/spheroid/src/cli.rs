//! Command-line front end: TOML parameters in, JSON summaries on stdout,
//! CSV artifacts under `--out`.
//!
//! Exit codes: `0` success, `1` usage error, `2` validation failure,
//! `3` solver error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Result, SolverError};
use crate::evolution::{default_t_end, evolve};
use crate::model::{validate_assumptions, ModelParams, ValidationReport};
use crate::necrotic::{limit_sweep, linear_closed_form};
use crate::outer::{critical_radius, shoot_shell, Regime};
pub use crate::report::to_json_string;
use crate::root::{bisect, StopRule};
use crate::stationary::{find_stationary, supply_threshold, threshold_lower_bound};
use crate::{SolverConfig, StationaryResult, Transition};

#[derive(Parser)]
#[command(
    name = "spheroid",
    version,
    about = "Radially symmetric two-layer tumor growth solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Parameter file (TOML) or the built-in preset name `linear`
    #[arg(long, value_name = "PATH|linear")]
    config: String,
    /// Directory receiving CSV/JSON artifacts
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// JSON summary on stdout (the default; flag kept for explicit pipelines)
    #[arg(long)]
    json: bool,
    /// Also write CSV artifacts into --out
    #[arg(long, requires = "out")]
    csv: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check the model assumptions and print the report
    Validate(CommonArgs),
    /// Stationary state: regime, radii, and profile
    Stationary(CommonArgs),
    /// Supply threshold for a cored stationary state, with its lower bound
    Threshold(CommonArgs),
    /// Integrate the radius dynamics
    Evolve {
        #[command(flatten)]
        common: CommonArgs,
        /// Initial tumor radius
        #[arg(long = "R0")]
        r0: f64,
        /// Integration horizon (defaults to thirty characteristic times)
        #[arg(long = "t-end")]
        t_end: Option<f64>,
    },
    /// Stationary radii for scaled-down core consumption, with the necrotic reference
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Decreasing comma-separated scale factors for the core consumption
        #[arg(long = "lambda-list", value_delimiter = ',', num_args = 1..)]
        lambda_list: Vec<f64>,
    },
    /// Closed-form agreement suite for the all-linear preset
    OracleCheck(CommonArgs),
}

/// Run the CLI on the given argument vector and return the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.exit_code() == 0 { 0 } else { 1 };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                SolverError::Config(_)
                | SolverError::NonFiniteEvaluation { .. }
                | SolverError::InvalidParams(_) => 2,
                _ => 3,
            }
        }
    }
}

fn load_params(spec: &str) -> Result<ModelParams> {
    if spec == "linear" {
        Ok(ModelParams::linear_preset(0.5, 1.0, 2.0, 3.0, 1.0))
    } else {
        ModelParams::from_path(spec)
    }
}

#[derive(Serialize)]
struct Summary<'a, T: Serialize> {
    command: &'static str,
    config: &'a SolverConfig,
    #[serde(flatten)]
    body: T,
}

fn print_summary<T: Serialize>(command: &'static str, cfg: &SolverConfig, body: T) {
    let summary = Summary {
        command,
        config: cfg,
        body,
    };
    println!("{}", to_json_string(&summary));
}

fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| SolverError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| SolverError::Io(format!("{}: {e}", path.display())))
}

fn dispatch(cli: Cli) -> Result<i32> {
    let cfg = SolverConfig::default();
    match cli.command {
        Command::Validate(common) => {
            let params = load_params(&common.config)?;
            let report = validate_assumptions(&params, 1000)?;
            let passed = report.passed;
            print_summary("validate", &cfg, ValidateBody { report: &report });
            Ok(if passed { 0 } else { 2 })
        }
        Command::Stationary(common) => {
            let params = validated(&common.config, &cfg)?;
            match params {
                Err(code) => Ok(code),
                Ok(params) => {
                    let result = find_stationary(&params, &cfg)?;
                    if common.csv {
                        if let (Some(dir), Some(profile)) =
                            (common.out.as_deref(), result.profile.as_ref())
                        {
                            write_artifact(dir, "profile.csv", &profile.to_csv())?;
                        }
                    }
                    print_summary("stationary", &cfg, StationaryBody { result: &result });
                    Ok(0)
                }
            }
        }
        Command::Threshold(common) => {
            let params = validated(&common.config, &cfg)?;
            match params {
                Err(code) => Ok(code),
                Ok(params) => {
                    let sigma_star = supply_threshold(&params, &cfg)?;
                    let sigma_bar_g = threshold_lower_bound(&params, &cfg)?;
                    print_summary(
                        "threshold",
                        &cfg,
                        ThresholdBody {
                            sigma_star,
                            sigma_bar_g,
                        },
                    );
                    Ok(0)
                }
            }
        }
        Command::Evolve { common, r0, t_end } => {
            let params = validated(&common.config, &cfg)?;
            match params {
                Err(code) => Ok(code),
                Ok(params) => {
                    let t_end = t_end.unwrap_or_else(|| default_t_end(&params));
                    let trajectory = evolve(&params, r0, t_end, &cfg)?;
                    if let Some(dir) = common.out.as_deref() {
                        write_artifact(dir, "trajectory.csv", &trajectory.to_csv())?;
                        write_artifact(
                            dir,
                            "transitions.json",
                            &to_json_string(&trajectory.transitions),
                        )?;
                    }
                    let last = trajectory.final_sample();
                    print_summary(
                        "evolve",
                        &cfg,
                        EvolveBody {
                            r0,
                            t_end,
                            final_t: last.t,
                            final_radius: last.radius,
                            final_core_radius: last.core_radius,
                            final_regime: last.regime,
                            transitions: &trajectory.transitions,
                            converged_to: trajectory.converged_to,
                            n_samples: trajectory.samples.len(),
                        },
                    );
                    Ok(0)
                }
            }
        }
        Command::Sweep {
            common,
            lambda_list,
        } => {
            let params = validated(&common.config, &cfg)?;
            match params {
                Err(code) => Ok(code),
                Ok(params) => {
                    let sweep = limit_sweep(&params, &lambda_list, &cfg)?;
                    if let Some(dir) = common.out.as_deref() {
                        write_artifact(dir, "sweep.csv", &sweep.to_csv())?;
                    }
                    print_summary("sweep", &cfg, SweepBody { sweep: &sweep });
                    Ok(0)
                }
            }
        }
        Command::OracleCheck(common) => {
            let params = validated(&common.config, &cfg)?;
            match params {
                Err(code) => Ok(code),
                Ok(params) => {
                    let checks = oracle_checks(&params, &cfg)?;
                    let passed = checks.iter().all(|c| c.passed);
                    for c in &checks {
                        eprintln!(
                            "{} {:<48} error {:>12.3e}  tol {:>8.0e}",
                            if c.passed { "PASS" } else { "FAIL" },
                            c.name,
                            c.error,
                            c.tol
                        );
                    }
                    print_summary(
                        "oracle-check",
                        &cfg,
                        OracleBody {
                            passed,
                            checks: &checks,
                        },
                    );
                    Ok(if passed { 0 } else { 3 })
                }
            }
        }
    }
}

/// Load and validate parameters; a failing report is printed and mapped to
/// exit code 2.
fn validated(
    config: &str,
    cfg: &SolverConfig,
) -> Result<std::result::Result<ModelParams, i32>> {
    let params = load_params(config)?;
    let report = validate_assumptions(&params, 1000)?;
    if !report.passed {
        print_summary("validate", cfg, ValidateBody { report: &report });
        return Ok(Err(2));
    }
    Ok(Ok(params))
}

#[derive(Serialize)]
struct ValidateBody<'a> {
    report: &'a ValidationReport,
}

#[derive(Serialize)]
struct StationaryBody<'a> {
    result: &'a StationaryResult,
}

#[derive(Serialize)]
struct ThresholdBody {
    sigma_star: f64,
    sigma_bar_g: f64,
}

#[derive(Serialize)]
struct EvolveBody<'a> {
    r0: f64,
    t_end: f64,
    final_t: f64,
    final_radius: f64,
    final_core_radius: Option<f64>,
    final_regime: Regime,
    transitions: &'a [Transition],
    converged_to: Option<f64>,
    n_samples: usize,
}

#[derive(Serialize)]
struct SweepBody<'a> {
    sweep: &'a crate::LimitSweep,
}

#[derive(Serialize)]
struct OracleCheck {
    name: String,
    error: f64,
    tol: f64,
    passed: bool,
}

#[derive(Serialize)]
struct OracleBody<'a> {
    passed: bool,
    checks: &'a [OracleCheck],
}

/// Closed-form agreement rows for the all-linear preset.
fn oracle_checks(params: &ModelParams, cfg: &SolverConfig) -> Result<Vec<OracleCheck>> {
    let oracle = linear_closed_form(params)?;
    let mut checks = Vec::new();
    let mut push = |name: &str, error: f64, tol: f64| {
        checks.push(OracleCheck {
            name: name.to_string(),
            error,
            tol,
            passed: error.abs() <= tol,
        });
    };

    let mut worst_profile: f64 = 0.0;
    let mut worst_flux: f64 = 0.0;
    for rho in [0.5, 1.0, 2.0] {
        let sol = crate::solve_inner(params, rho, cfg)?;
        for (&r, &v) in sol.grid.iter().zip(&sol.values) {
            worst_profile = worst_profile.max((v - oracle.core_value(r, rho)).abs());
        }
        worst_flux = worst_flux.max((sol.flux - oracle.core_flux(rho)).abs());
    }
    push("core profile vs closed form", worst_profile, 1e-6);
    push("core flux vs closed form", worst_flux, 1e-8);

    let r_c = critical_radius(params, cfg)?;
    push(
        "critical radius vs transcendental root",
        r_c - oracle.critical_radius()?,
        1e-6,
    );
    let mut worst_rc: f64 = 0.0;
    for scale in [0.0, 0.5] {
        let scaled = params.with_h_scaled(scale);
        worst_rc = worst_rc.max((critical_radius(&scaled, cfg)? - r_c).abs());
    }
    push("critical radius independent of core consumption", worst_rc, 1e-8);

    let shot = shoot_shell(params, 1.0, cfg)?;
    let rule = StopRule {
        xtol: 5e-14,
        ftol: 0.0,
        max_iter: 300,
    };
    let (oracle_radius, _) = bisect(
        &mut |r: f64| oracle.interface_residual(1.0, r),
        1.0 + 1e-9,
        cfg.r_max_for(1.0, params.sigma_bar, params.sigma_q, params.eval_f(params.sigma_q)),
        rule,
    )?;
    push("shot radius vs interface equation", shot.radius - oracle_radius, 1e-6);

    let probe_radius = 1.5 * r_c;
    let rho = crate::core_radius(params, probe_radius, cfg)?;
    push(
        "core radius inversion vs interface equation",
        rho - oracle.core_radius_of(probe_radius)?,
        1e-6,
    );

    let profile = crate::nutrient_profile(params, probe_radius, cfg)?;
    let mut sup: f64 = 0.0;
    for (&r, &v) in profile.grid.iter().zip(&profile.values) {
        sup = sup.max((v - oracle.value(r, profile.radius)?).abs());
    }
    push("two-layer profile vs closed form", sup, 1e-6);

    let mut worst_f: f64 = 0.0;
    for m in [1.2, 2.0] {
        let radius = m * r_c;
        let general = crate::growth_rate(params, radius, cfg)?;
        worst_f = worst_f.max((general - oracle.growth_rate_at(radius)?).abs());
    }
    push("growth rate vs closed-form quadrature", worst_f, 1e-6);

    let sigma_star = supply_threshold(params, cfg)?;
    if params.sigma_bar > sigma_star {
        let state = find_stationary(params, cfg)?;
        push(
            "stationary radius vs closed form",
            state.radius - oracle.stationary_radius()?,
            1e-5,
        );
        push(
            "stationary core radius vs closed form",
            state.core_radius.unwrap_or(f64::NAN) - oracle.stationary_core_radius()?,
            1e-5,
        );
    }
    Ok(checks)
}
