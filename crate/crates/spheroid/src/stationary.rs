//! Growth functional, stationary radii, and the supply threshold.
//!
//! The normalized volume growth rate is
//!
//! * `F(R) = (1/R^3) [ integral_rho^R g(sigma) r^2 dr - (nu/3) rho^3 ]` for
//!   tumors with a core (`R >= R_c`), and
//! * `F(R) = (1/R^3) integral_0^R g(sigma) r^2 dr` below the critical
//!   radius.
//!
//! `F` is continuous, strictly decreasing, tends to `g(sigmaBar)/3` at `0`
//! and to `-nu/3` at infinity, so stationary radii are bisection roots. The
//! supply threshold `sigma_star` is the unique supply level at which
//! `F(R_c) = 0`; above it the stationary tumor keeps a quiescent core.

use serde::Serialize;

use crate::config::SolverConfig;
use crate::error::{Result, SolverError};
use crate::inner::solve_inner;
use crate::model::ModelParams;
use crate::outer::{
    critical_radius, invert_radius, nutrient_profile, shoot_shell, shoot_shell_with_slope,
    solve_one_layer, NutrientProfile, OuterSolution,
};
use crate::quad::adaptive_simpson;
use crate::root::{bisect, grow_bracket_up, StopRule};

/// Stationary regime classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StationaryRegime {
    /// No tumor survives (`sigmaBar <= sigmaTilde`).
    Trivial,
    /// Stationary radius at or below the critical radius; no core.
    ProliferatingOnly,
    /// Stationary radius above the critical radius with a quiescent core.
    TwoLayer,
}

/// Stationary state returned by [`find_stationary`].
#[derive(Debug, Clone, Serialize)]
pub struct StationaryResult {
    pub regime: StationaryRegime,
    /// Stationary radius `R_s` (`0` for the trivial regime).
    pub radius: f64,
    /// Core radius `rho_s`, present in the two-layer regime.
    pub core_radius: Option<f64>,
    /// Core fraction `rho_s / R_s`, present in the two-layer regime.
    pub core_fraction: Option<f64>,
    /// Growth-rate residual at the reported radius.
    pub f_residual: f64,
    /// Full nutrient profile at the stationary radius (absent for trivial).
    pub profile: Option<NutrientProfile>,
}

/// Shared assembly of `F` from a shell solution and its core radius.
pub(crate) fn growth_rate_from_shell(
    params: &ModelParams,
    shell: &OuterSolution,
    rho: f64,
) -> f64 {
    let integral = shell.integrate_profile(|r, v| params.eval_g(v) * r * r);
    (integral - params.nu * rho * rho * rho / 3.0) / shell.radius.powi(3)
}

/// Two-layer branch of `F` with the critical radius already known.
fn growth_rate_two_layer(
    params: &ModelParams,
    radius: f64,
    r_c: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    let rho = invert_radius(radius, r_c, cfg, |rho| {
        shoot_shell(params, rho, cfg).map(|s| s.radius)
    })?;
    let slope = if rho == 0.0 {
        0.0
    } else {
        solve_inner(params, rho, cfg)?.flux
    };
    let shell = shoot_shell_with_slope(params, rho, slope, cfg)?;
    Ok(growth_rate_from_shell(params, &shell, rho))
}

/// One-layer branch of `F` (radius below critical).
fn growth_rate_one_layer(params: &ModelParams, radius: f64, cfg: &SolverConfig) -> Result<f64> {
    let shot = solve_one_layer(params, radius, cfg)?;
    let integral = shot.integrate_profile(|r, v| params.eval_g(v) * r * r);
    Ok(integral / (radius * radius * radius))
}

/// Growth rate with a precomputed critical radius (dispatching on the
/// branch); used by the dynamics to avoid recomputing `R_c` per step.
pub(crate) fn growth_rate_given_rc(
    params: &ModelParams,
    radius: f64,
    r_c: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    let tie = cfg.event_tol * radius.abs().max(1.0);
    if radius >= r_c - tie {
        growth_rate_two_layer(params, radius, r_c, cfg)
    } else {
        growth_rate_one_layer(params, radius, cfg)
    }
}

/// Normalized volume growth rate `F(R)` for a tumor of radius `R > 0`.
pub fn growth_rate(params: &ModelParams, radius: f64, cfg: &SolverConfig) -> Result<f64> {
    if radius <= 0.0 || !radius.is_finite() {
        return Err(SolverError::InvalidParams(format!(
            "growth rate needs a positive finite radius, got {radius}"
        )));
    }
    let r_c = critical_radius(params, cfg)?;
    growth_rate_given_rc(params, radius, r_c, cfg)
}

/// Find the stationary state of the model.
///
/// `sigmaBar <= sigmaTilde` yields the trivial state. Otherwise `F` is
/// strictly decreasing with `F(0+) = g(sigmaBar)/3 > 0`, so its unique root
/// is bracketed geometrically from the critical radius and bisected.
pub fn find_stationary(params: &ModelParams, cfg: &SolverConfig) -> Result<StationaryResult> {
    if params.sigma_bar <= params.sigma_tilde {
        return Ok(StationaryResult {
            regime: StationaryRegime::Trivial,
            radius: 0.0,
            core_radius: None,
            core_fraction: None,
            f_residual: 0.0,
            profile: None,
        });
    }
    let r_c = critical_radius(params, cfg)?;
    let f_at_rc = growth_rate_two_layer(params, r_c, r_c, cfg)?;

    let rule = StopRule {
        xtol: 1e-12,
        ftol: cfg.root_tol,
        max_iter: cfg.max_iter,
    };
    let fail: std::cell::RefCell<Option<SolverError>> = std::cell::RefCell::new(None);

    if f_at_rc.abs() <= cfg.root_tol {
        // exact threshold: the root sits at the critical radius itself,
        // labeled as the one-layer regime
        let profile = solve_one_layer(params, r_c, cfg).map(|shot| NutrientProfile {
            radius: r_c,
            core_radius: None,
            grid: shot.grid,
            values: shot.values,
            regime: crate::outer::Regime::ProliferatingOnly,
        })?;
        return Ok(StationaryResult {
            regime: StationaryRegime::ProliferatingOnly,
            radius: r_c,
            core_radius: None,
            core_fraction: None,
            f_residual: f_at_rc,
            profile: Some(profile),
        });
    }

    if f_at_rc > 0.0 {
        // two-layer root above the critical radius
        let mut f_of = |r: f64| match growth_rate_two_layer(params, r, r_c, cfg) {
            Ok(v) => v,
            Err(e) => {
                fail.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        };
        let bracket = grow_bracket_up(&mut f_of, r_c, 2.0, cfg.r_cap, "stationary radius");
        if let Some(e) = fail.borrow_mut().take() {
            return Err(e);
        }
        let (lo, hi) = bracket?;
        let root = bisect(&mut f_of, lo, hi, rule);
        if let Some(e) = fail.borrow_mut().take() {
            return Err(e);
        }
        let (radius, f_residual) = root?;
        let rho = invert_radius(radius, r_c, cfg, |rho| {
            shoot_shell(params, rho, cfg).map(|s| s.radius)
        })?;
        let profile = nutrient_profile(params, radius, cfg)?;
        return Ok(StationaryResult {
            regime: StationaryRegime::TwoLayer,
            radius,
            core_radius: Some(rho),
            core_fraction: Some(rho / radius),
            f_residual,
            profile: Some(profile),
        });
    }

    // root below the critical radius: halve until F turns positive
    let mut f_of = |r: f64| match growth_rate_one_layer(params, r, cfg) {
        Ok(v) => v,
        Err(e) => {
            fail.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let mut lo = 0.5 * r_c;
    let mut f_lo = f_of(lo);
    let mut hi = r_c;
    let mut halvings = 0;
    while f_lo <= 0.0 {
        if let Some(e) = fail.borrow_mut().take() {
            return Err(e);
        }
        hi = lo;
        lo *= 0.5;
        f_lo = f_of(lo);
        halvings += 1;
        if halvings > 200 {
            return Err(SolverError::BracketFailure(
                "no positive growth rate above R = 0 (supply at the trivial boundary)".into(),
            ));
        }
    }
    let root = bisect(&mut f_of, lo, hi, rule);
    if let Some(e) = fail.borrow_mut().take() {
        return Err(e);
    }
    let (radius, f_residual) = root?;
    let profile = nutrient_profile(params, radius, cfg)?;
    Ok(StationaryResult {
        regime: StationaryRegime::ProliferatingOnly,
        radius,
        core_radius: None,
        core_fraction: None,
        f_residual,
        profile: Some(profile),
    })
}

/// Growth rate evaluated at the critical radius of a modified supply level.
fn growth_at_critical(params: &ModelParams, sigma_bar: f64, cfg: &SolverConfig) -> Result<f64> {
    let mut probe = params.clone();
    probe.sigma_bar = sigma_bar;
    let shell = shoot_shell_with_slope(&probe, 0.0, 0.0, cfg)?;
    Ok(growth_rate_from_shell(&probe, &shell, 0.0))
}

/// Supply threshold `sigma_star`: the unique supply level whose critical
/// radius is itself stationary. Above it the stationary tumor carries a
/// quiescent core; below it the stationary tumor (if any) has none.
pub fn supply_threshold(params: &ModelParams, cfg: &SolverConfig) -> Result<f64> {
    let fail: std::cell::RefCell<Option<SolverError>> = std::cell::RefCell::new(None);
    let mut f_of = |sigma: f64| match growth_at_critical(params, sigma, cfg) {
        Ok(v) => v,
        Err(e) => {
            fail.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let bracket = grow_bracket_up(
        &mut f_of,
        params.sigma_tilde,
        2.0,
        cfg.sigma_cap,
        "supply threshold",
    );
    if let Some(e) = fail.borrow_mut().take() {
        return Err(e);
    }
    let (lo, hi) = bracket?;
    let rule = StopRule {
        xtol: 1e-10,
        ftol: cfg.root_tol,
        max_iter: cfg.max_iter,
    };
    let root = bisect(&mut f_of, lo, hi, rule);
    if let Some(e) = fail.borrow_mut().take() {
        return Err(e);
    }
    let (sigma_star, _) = root?;
    Ok(sigma_star)
}

/// Lower bound for the supply threshold: the unique root of
/// `G(sigma) = integral_sigmaQ^sigma g(t) (t - sigmaQ)^2 dt`, which always
/// lies above `sigmaTilde`.
pub fn threshold_lower_bound(params: &ModelParams, cfg: &SolverConfig) -> Result<f64> {
    let sq = params.sigma_q;
    let scale = params.eval_g(params.sigma_bar).abs().max(1.0);
    let mut weighted = |sigma: f64| {
        adaptive_simpson(
            |t| params.eval_g(t) * (t - sq) * (t - sq),
            sq,
            sigma,
            1e-14 * scale,
        )
    };
    let (lo, hi) = grow_bracket_up(
        &mut weighted,
        params.sigma_tilde,
        2.0,
        cfg.sigma_cap,
        "threshold lower bound",
    )?;
    let rule = StopRule {
        xtol: 1e-12,
        ftol: 0.0,
        max_iter: cfg.max_iter,
    };
    let (root, _) = bisect(&mut weighted, lo, hi, rule)?;
    Ok(root)
}

/// A-priori bound report for the two-layer stationary geometry.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    /// Whether the estimate's hypothesis holds for these parameters.
    pub hypothesis_holds: bool,
    pub hypothesis_detail: String,
    /// Upper bound for the stationary core fraction.
    pub eta_bound: f64,
    /// Lower bound for the stationary radius.
    pub radius_lower: f64,
    /// Upper bound for the stationary radius.
    pub radius_upper: f64,
    /// Computed stationary radius the bounds are checked against.
    pub stationary_radius: f64,
    /// Computed stationary core fraction.
    pub core_fraction: f64,
    /// All bounds verified against the computed state.
    pub satisfied: bool,
}

fn two_layer_state(params: &ModelParams, cfg: &SolverConfig) -> Result<(f64, f64)> {
    let state = find_stationary(params, cfg)?;
    match (state.regime, state.core_fraction) {
        (StationaryRegime::TwoLayer, Some(eta)) => Ok((state.radius, eta)),
        _ => Err(SolverError::InvalidParams(
            "estimates need a two-layer stationary state (supply above the threshold)".into(),
        )),
    }
}

/// Core-fraction and radius bounds from a balance point `beta` at which the
/// weighted proliferation integral over `[beta, sigmaBar]` vanishes.
///
/// Hypotheses: `integral_beta^sigmaBar g(t)(t-beta)^2 dt = 0` (within a
/// scaled tolerance) and `nu >= 3/(sigmaQ-beta)^3 *
/// integral_beta^sigmaQ |g(t)|(t-beta)^2 dt`. A failing hypothesis is
/// reported, not an error.
pub fn estimate_beta(
    params: &ModelParams,
    beta: f64,
    cfg: &SolverConfig,
) -> Result<EstimateReport> {
    if !(params.sigma0 < beta && beta < params.sigma_q) {
        return Err(SolverError::InvalidParams(format!(
            "beta = {beta} must lie strictly between sigma0 and sigmaQ"
        )));
    }
    let sb = params.sigma_bar;
    let sq = params.sigma_q;
    let g_max = params.eval_g(sb).abs().max(params.eval_g(beta).abs());
    let balance = adaptive_simpson(
        |t| params.eval_g(t) * (t - beta) * (t - beta),
        beta,
        sb,
        1e-14 * g_max.max(1.0),
    );
    let balance_tol = 1e-8 * (sb - beta).powi(3) * g_max;
    let removal_floor = 3.0 / (sq - beta).powi(3)
        * adaptive_simpson(
            |t| params.eval_g(t).abs() * (t - beta) * (t - beta),
            beta,
            sq,
            1e-14 * g_max.max(1.0),
        );
    let balance_ok = balance.abs() <= balance_tol;
    let removal_ok = params.nu >= removal_floor;
    let hypothesis_holds = balance_ok && removal_ok;
    let hypothesis_detail = format!(
        "weighted integral {balance} (tol {balance_tol}); nu {} vs floor {removal_floor}",
        params.nu
    );

    let eta_bound = (sq - beta) / (sb - beta);
    let radius_lower = (6.0 * (sb - sq) / params.eval_f(sb)).sqrt();
    let radius_upper =
        (6.0 * (sb - beta) / (params.eval_f(sq) * (1.0 - eta_bound.powi(3)))).sqrt();

    let (radius, eta) = two_layer_state(params, cfg)?;
    let satisfied = hypothesis_holds
        && eta <= eta_bound
        && radius_lower <= radius
        && radius <= radius_upper;
    Ok(EstimateReport {
        hypothesis_holds,
        hypothesis_detail,
        eta_bound,
        radius_lower,
        radius_upper,
        stationary_radius: radius,
        core_fraction: eta,
        satisfied,
    })
}

/// Core-fraction and radius bounds from a removal-rate condition at a
/// reference level `delta`:
/// `nu >= 3/(sigmaQ-delta)^3 * integral_sigmaQ^sigmaBar g(t)(t-delta)^2 dt`.
pub fn estimate_delta(
    params: &ModelParams,
    delta: f64,
    cfg: &SolverConfig,
) -> Result<EstimateReport> {
    if !(params.sigma0 < delta && delta < params.sigma_q) {
        return Err(SolverError::InvalidParams(format!(
            "delta = {delta} must lie strictly between sigma0 and sigmaQ"
        )));
    }
    let sb = params.sigma_bar;
    let sq = params.sigma_q;
    let g_max = params.eval_g(sb).abs().max(1.0);
    let removal_floor = 3.0 / (sq - delta).powi(3)
        * adaptive_simpson(
            |t| params.eval_g(t) * (t - delta) * (t - delta),
            sq,
            sb,
            1e-14 * g_max,
        );
    let hypothesis_holds = params.nu >= removal_floor;
    let hypothesis_detail = format!("nu {} vs floor {removal_floor}", params.nu);

    let eta_bound = (sq - delta) / (sb - delta);
    let radius_lower = (6.0 * (sb - sq) / params.eval_f(sb)).sqrt();
    let radius_upper =
        (6.0 * (sb - delta) / (params.eval_f(sq) * (1.0 - eta_bound * eta_bound))).sqrt();

    let (radius, eta) = two_layer_state(params, cfg)?;
    let satisfied = hypothesis_holds
        && eta <= eta_bound
        && radius_lower <= radius
        && radius <= radius_upper;
    Ok(EstimateReport {
        hypothesis_holds,
        hypothesis_detail,
        eta_bound,
        radius_lower,
        radius_upper,
        stationary_radius: radius,
        core_fraction: eta,
        satisfied,
    })
}
