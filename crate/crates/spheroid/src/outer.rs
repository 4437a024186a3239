//! Proliferating-shell Cauchy problem, tumor-radius shooting, and full
//! nutrient profiles.
//!
//! The shell solves `v'' + (2/r) v' = f(v)` from the core interface with
//! matched value `sigmaQ` and matched slope (the core flux). The maximal
//! solution blows up, so the surface radius `R(rho)` — where `v` reaches the
//! supply level — always exists and is located by event detection. `R(rho)`
//! is strictly increasing, which makes both the critical radius and the
//! inverse map `R -> rho` well posed.

use serde::Serialize;

use crate::config::SolverConfig;
use crate::error::{Result, SolverError};
use crate::inner::{solve_core_with_boundary, solve_inner, MIN_PROFILE_POINTS};
use crate::model::ModelParams;
use crate::ode::{Integrator, IvpSolution, StopReason};
use crate::quad::{integrate_over_solution, simpson, step_grid};
use crate::root::{bisect, StopRule};

/// Which cell populations a profile or trajectory sample contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    QuiescentOnly,
    ProliferatingOnly,
    TwoLayer,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, fmt: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fmt.write_str(match self {
            Regime::QuiescentOnly => "quiescent-only",
            Regime::ProliferatingOnly => "proliferating-only",
            Regime::TwoLayer => "two-layer",
        })
    }
}

/// Origin expansion descriptor for shoots that start at `r = 0`:
/// `v(r) = v0 + curvature * r^2` up to `cutoff`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct OriginHead {
    pub v0: f64,
    pub curvature: f64,
    pub cutoff: f64,
}

impl OriginHead {
    fn value(&self, r: f64) -> f64 {
        self.v0 + self.curvature * r * r
    }
}

/// Shell profile on `[rho, R]` with the shot surface radius.
#[derive(Debug, Clone)]
pub struct OuterSolution {
    pub rho: f64,
    /// Surface radius where the profile reaches the supply level.
    pub radius: f64,
    /// Strictly increasing radii from `rho` to `radius`.
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Profile slope at the surface.
    pub end_slope: f64,
    pub(crate) ivp: IvpSolution<2>,
    pub(crate) head: Option<OriginHead>,
}

impl OuterSolution {
    /// Integral of `w(r, v(r))` over the full profile span, composite Simpson
    /// per accepted step (plus the analytic origin zone when present).
    pub(crate) fn integrate_profile<W: Fn(f64, f64) -> f64>(&self, w: W) -> f64 {
        let mut acc = 0.0;
        if let Some(head) = &self.head {
            acc += simpson(|r| w(r, head.value(r)), 0.0, head.cutoff, 8);
        }
        acc += integrate_over_solution(&self.ivp, MIN_PROFILE_POINTS, |r, y| w(r, y[0]));
        acc
    }
}

/// Full nutrient profile over `[0, R]` with its regime tag.
#[derive(Debug, Clone, Serialize)]
pub struct NutrientProfile {
    pub radius: f64,
    /// Core interface radius; present only for two-layer profiles.
    pub core_radius: Option<f64>,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub regime: Regime,
}

impl NutrientProfile {
    /// CSV with columns `r,sigma,regime_tag`; the tag marks each sample as
    /// `quiescent` or `proliferating` by its position relative to the core.
    pub fn to_csv(&self) -> String {
        use crate::report::fmt_float;
        let mut out = String::from("r,sigma,regime_tag\n");
        for (&r, &v) in self.grid.iter().zip(&self.values) {
            let tag = match self.regime {
                Regime::QuiescentOnly => "quiescent",
                Regime::ProliferatingOnly => "proliferating",
                Regime::TwoLayer => {
                    if r <= self.core_radius.unwrap_or(0.0) {
                        "quiescent"
                    } else {
                        "proliferating"
                    }
                }
            };
            out.push_str(&format!("{},{},{tag}\n", fmt_float(r), fmt_float(v)));
        }
        out
    }
}

fn require_supply_above_quiescence(params: &ModelParams) -> Result<()> {
    if params.sigma_bar > params.sigma_q {
        Ok(())
    } else {
        Err(SolverError::InvalidParams(format!(
            "shell shoot needs sigmaBar = {} above sigmaQ = {}",
            params.sigma_bar, params.sigma_q
        )))
    }
}

/// Integrate the shell equation from `(rho, v_start, slope)` until the value
/// crosses `target`; `rho = 0` starts from the regularized origin expansion.
fn integrate_shell_until(
    params: &ModelParams,
    rho: f64,
    v_start: f64,
    slope: f64,
    target: f64,
    cfg: &SolverConfig,
) -> Result<(IvpSolution<2>, Option<OriginHead>, f64, [f64; 2])> {
    let f_at_q = params.eval_f(params.sigma_q);
    let r_max = cfg.r_max_for(rho, params.sigma_bar, params.sigma_q, f_at_q);
    let rhs = |r: f64, y: &[f64; 2]| [y[1], params.eval_f(y[0]) - 2.0 * y[1] / r];
    let integ = Integrator::new(cfg.ode_tol);

    let (r0, y0, head) = if rho == 0.0 {
        let cutoff = cfg.origin_cutoff_for(0.0);
        let curvature = params.eval_f(v_start) / 6.0;
        let head = OriginHead {
            v0: v_start,
            curvature,
            cutoff,
        };
        (
            cutoff,
            [head.value(cutoff), 2.0 * curvature * cutoff],
            Some(head),
        )
    } else {
        (rho, [v_start, slope], None)
    };

    let (ivp, reason) =
        integ.integrate_until_crossing(rhs, r0, y0, r_max, 0, target, cfg.event_tol)?;
    match reason {
        StopReason::Crossed { t, y } => Ok((ivp, head, t, y)),
        StopReason::HorizonReached => Err(SolverError::EventNotReached { r_max }),
    }
}

/// Same start, fixed horizon `r_end` (used by the one-layer center shoot).
fn integrate_shell_to(
    params: &ModelParams,
    v_start: f64,
    r_end: f64,
    cfg: &SolverConfig,
) -> Result<(IvpSolution<2>, OriginHead, [f64; 2])> {
    let rhs = |r: f64, y: &[f64; 2]| [y[1], params.eval_f(y[0]) - 2.0 * y[1] / r];
    let integ = Integrator::new(cfg.ode_tol);
    let cutoff = cfg.origin_cutoff_for(0.0).min(r_end);
    let curvature = params.eval_f(v_start) / 6.0;
    let head = OriginHead {
        v0: v_start,
        curvature,
        cutoff,
    };
    let y0 = [head.value(cutoff), 2.0 * curvature * cutoff];
    let ivp = integ.integrate(rhs, cutoff, y0, r_end)?;
    let end = ivp.y_end;
    Ok((ivp, head, end))
}

fn assemble_shell(
    ivp: IvpSolution<2>,
    head: Option<OriginHead>,
    rho: f64,
    radius: f64,
    end_state: [f64; 2],
) -> OuterSolution {
    let mut grid = Vec::new();
    let mut values = Vec::new();
    if let Some(head) = &head {
        for k in 0..8 {
            let r = head.cutoff * k as f64 / 8.0;
            grid.push(r);
            values.push(head.value(r));
        }
    }
    for r in step_grid(&ivp, MIN_PROFILE_POINTS) {
        grid.push(r);
        values.push(ivp.eval(r)[0]);
    }
    OuterSolution {
        rho,
        radius,
        grid,
        values,
        end_slope: end_state[1],
        ivp,
        head,
    }
}

/// Shell shoot with an explicitly prescribed interface slope (the general
/// path uses the core flux; the flux-coefficient family prescribes `K rho`).
pub(crate) fn shoot_shell_with_slope(
    params: &ModelParams,
    rho: f64,
    slope: f64,
    cfg: &SolverConfig,
) -> Result<OuterSolution> {
    require_supply_above_quiescence(params)?;
    let (ivp, head, radius, end) = integrate_shell_until(
        params,
        rho,
        params.sigma_q,
        slope,
        params.sigma_bar,
        cfg,
    )?;
    Ok(assemble_shell(ivp, head, rho, radius, end))
}

/// Shoot the shell problem from core radius `rho`: matched value `sigmaQ`,
/// matched slope from the core solve, integrated until the supply level.
pub fn shoot_shell(params: &ModelParams, rho: f64, cfg: &SolverConfig) -> Result<OuterSolution> {
    require_supply_above_quiescence(params)?;
    let slope = if rho == 0.0 {
        0.0
    } else {
        solve_inner(params, rho, cfg)?.flux
    };
    shoot_shell_with_slope(params, rho, slope, cfg)
}

/// Critical radius: the tumor radius at which a quiescent core first appears
/// (the shell shoot from `rho = 0`). Independent of `h`.
pub fn critical_radius(params: &ModelParams, cfg: &SolverConfig) -> Result<f64> {
    Ok(shoot_shell_with_slope(params, 0.0, 0.0, cfg)?.radius)
}

/// Invert the strictly increasing map `rho -> R(rho)`: the unique core
/// radius whose shell shoot lands on `radius`. Exactly `0` at the critical
/// radius; `OutOfRange` below it.
pub fn core_radius(params: &ModelParams, radius: f64, cfg: &SolverConfig) -> Result<f64> {
    let r_c = critical_radius(params, cfg)?;
    invert_radius(radius, r_c, cfg, |rho| {
        shoot_shell(params, rho, cfg).map(|s| s.radius)
    })
}

/// Shared monotone inversion of `rho -> R(rho)` given the critical radius.
pub(crate) fn invert_radius(
    radius: f64,
    r_c: f64,
    cfg: &SolverConfig,
    mut shot_radius: impl FnMut(f64) -> Result<f64>,
) -> Result<f64> {
    let tol = cfg.event_tol * radius.abs().max(1.0);
    if radius < r_c - tol {
        return Err(SolverError::OutOfRange {
            radius,
            critical: r_c,
        });
    }
    if (radius - r_c).abs() <= tol {
        return Ok(0.0);
    }
    let mut fail: Option<SolverError> = None;
    let mut mismatch = |rho: f64| -> f64 {
        match shot_radius(rho) {
            Ok(r) => r - radius,
            Err(e) => {
                fail.get_or_insert(e);
                f64::NAN
            }
        }
    };
    let rule = StopRule {
        xtol: 1e-13,
        ftol: tol,
        max_iter: cfg.max_iter,
    };
    let result = bisect(&mut mismatch, 0.0, radius, rule);
    if let Some(e) = fail {
        return Err(e);
    }
    let (rho, _) = result?;
    Ok(rho)
}

/// One-layer profile for `R` below the critical radius: shoot on the center
/// value `sigma(0)` in `[sigmaQ, sigmaBar]` until the surface value matches
/// the supply level.
pub(crate) fn solve_one_layer(
    params: &ModelParams,
    radius: f64,
    cfg: &SolverConfig,
) -> Result<OuterSolution> {
    require_supply_above_quiescence(params)?;
    let mut fail: Option<SolverError> = None;
    let mut shot = |center: f64| -> f64 {
        match integrate_shell_to(params, center, radius, cfg) {
            Ok((_, _, end)) => end[0] - params.sigma_bar,
            Err(e) => {
                fail.get_or_insert(e);
                f64::NAN
            }
        }
    };
    // at the critical radius the center pins to sigmaQ; a nonnegative shot
    // there leaves nothing to bisect
    let at_quiescence = shot(params.sigma_q);
    let center = if at_quiescence >= 0.0 {
        params.sigma_q
    } else {
        let rule = StopRule {
            xtol: 1e-15,
            ftol: cfg.bvp_tol,
            max_iter: cfg.max_iter,
        };
        let result = bisect(&mut shot, params.sigma_q, params.sigma_bar, rule);
        if let Some(e) = fail {
            return Err(e);
        }
        result?.0
    };
    let (ivp, head, end) = integrate_shell_to(params, center, radius, cfg)?;
    Ok(assemble_shell(ivp, Some(head), 0.0, radius, end))
}

/// Full nutrient profile for a tumor of radius `R`:
///
/// * `sigmaBar <= sigmaQ` — quiescent-only display profile;
/// * `R >= R_c` — two-layer profile stitched from core and shell with
///   matched value and slope at the interface;
/// * otherwise — one-layer profile via the center-value shoot.
pub fn nutrient_profile(
    params: &ModelParams,
    radius: f64,
    cfg: &SolverConfig,
) -> Result<NutrientProfile> {
    if radius <= 0.0 || !radius.is_finite() {
        return Err(SolverError::InvalidParams(format!(
            "profile radius must be positive and finite, got {radius}"
        )));
    }
    if params.sigma_bar <= params.sigma_q {
        let core = solve_core_with_boundary(params, radius, params.sigma_bar, cfg)?;
        return Ok(NutrientProfile {
            radius,
            core_radius: None,
            grid: core.grid,
            values: core.values,
            regime: Regime::QuiescentOnly,
        });
    }
    let r_c = critical_radius(params, cfg)?;
    let tol = cfg.event_tol * radius.abs().max(1.0);
    if radius >= r_c - tol {
        let rho = invert_radius(radius, r_c, cfg, |rho| {
            shoot_shell(params, rho, cfg).map(|s| s.radius)
        })?;
        let core = solve_inner(params, rho, cfg)?;
        let shell = shoot_shell_with_slope(params, rho, core.flux, cfg)?;
        let mut grid = core.grid;
        let mut values = core.values;
        grid.extend_from_slice(&shell.grid[1..]);
        values.extend_from_slice(&shell.values[1..]);
        Ok(NutrientProfile {
            radius: shell.radius,
            core_radius: Some(rho),
            grid,
            values,
            regime: Regime::TwoLayer,
        })
    } else {
        let shot = solve_one_layer(params, radius, cfg)?;
        Ok(NutrientProfile {
            radius,
            core_radius: None,
            grid: shot.grid,
            values: shot.values,
            regime: Regime::ProliferatingOnly,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::root::{bisect, StopRule};
    use approx::assert_relative_eq;

    fn preset(lambda: f64, sigma_bar: f64) -> ModelParams {
        ModelParams::linear_preset(lambda, 1.0, 2.0, sigma_bar, 1.0)
    }

    const ORACLE_RULE: StopRule = StopRule {
        xtol: 1e-14,
        ftol: 0.0,
        max_iter: 300,
    };

    /// Interface equation of the all-linear model:
    /// `L = sqrt(l) rho coth(sqrt(l) rho) sinh(R - rho) + rho cosh(R - rho) - (sigmaBar/sigmaQ) R`.
    fn interface_equation(rho: f64, radius: f64, lambda: f64, ratio: f64) -> f64 {
        let x = lambda.sqrt() * rho;
        let xcoth = if x == 0.0 { 1.0 } else { x / x.tanh() };
        xcoth * (radius - rho).sinh() + rho * (radius - rho).cosh() - ratio * radius
    }

    #[test]
    fn critical_radius_matches_transcendental_root() {
        let cfg = SolverConfig::default();
        let r_c = critical_radius(&preset(1.0, 2.0), &cfg).unwrap();
        let (oracle, _) = bisect(&mut |r: f64| r.sinh() / r - 2.0, 0.5, 10.0, ORACLE_RULE).unwrap();
        assert_relative_eq!(r_c, oracle, epsilon = 1e-7);
        assert!((r_c - 2.1773).abs() <= 1e-4);
    }

    #[test]
    fn critical_radius_ignores_core_consumption() {
        let cfg = SolverConfig::default();
        let base = critical_radius(&preset(0.0, 2.0), &cfg).unwrap();
        for lambda in [0.5, 1.0] {
            let r_c = critical_radius(&preset(lambda, 2.0), &cfg).unwrap();
            assert!((r_c - base).abs() <= 1e-8);
        }
    }

    #[test]
    fn critical_radius_shrinks_as_supply_approaches_quiescence() {
        let cfg = SolverConfig::default();
        let mut last = f64::INFINITY;
        for sigma_bar in [2.0, 1.5, 1.1, 1.01] {
            let r_c = critical_radius(&preset(1.0, sigma_bar), &cfg).unwrap();
            assert!(r_c < last, "R_c not decreasing at sigmaBar = {sigma_bar}");
            last = r_c;
        }
        assert!(last < 0.3);
    }

    #[test]
    fn critical_radius_grows_with_supply() {
        let cfg = SolverConfig::default();
        let lo = critical_radius(&preset(1.0, 2.0), &cfg).unwrap();
        let hi = critical_radius(&preset(1.0, 3.0), &cfg).unwrap();
        assert!(hi > lo);
    }

    #[test]
    fn shot_radius_matches_interface_equation() {
        let cfg = SolverConfig::default();
        let shell = shoot_shell(&preset(1.0, 2.0), 1.0, &cfg).unwrap();
        let (oracle, _) = bisect(
            &mut |r: f64| interface_equation(1.0, r, 1.0, 2.0),
            1.0 + 1e-6,
            20.0,
            ORACLE_RULE,
        )
        .unwrap();
        assert_relative_eq!(shell.radius, oracle, epsilon = 1e-7);
    }

    #[test]
    fn shot_radius_increases_with_core_radius() {
        let cfg = SolverConfig::default();
        let params = preset(0.5, 2.0);
        let r1 = shoot_shell(&params, 0.3, &cfg).unwrap().radius;
        let r2 = shoot_shell(&params, 0.6, &cfg).unwrap().radius;
        assert!(r1 < r2);
    }

    #[test]
    fn shell_values_run_from_quiescence_to_supply_convexly() {
        let cfg = SolverConfig::default();
        let params = preset(1.0, 2.0);
        let shell = shoot_shell(&params, 1.0, &cfg).unwrap();
        assert!(shell.radius > shell.rho);
        assert_relative_eq!(shell.values[0], params.sigma_q, epsilon = 1e-9);
        assert_relative_eq!(
            *shell.values.last().unwrap(),
            params.sigma_bar,
            epsilon = 1e-8
        );
        assert!(shell.values.windows(2).all(|w| w[1] > w[0] - 1e-12));
        for w in shell.grid.windows(3).zip(shell.values.windows(3)) {
            let (r, v) = w;
            let h0 = r[1] - r[0];
            let h1 = r[2] - r[1];
            if h0 <= 0.0 || h1 <= 0.0 {
                continue;
            }
            let second = 2.0 * ((v[2] - v[1]) / h1 - (v[1] - v[0]) / h0) / (h0 + h1);
            assert!(second >= -1e-6);
        }
        assert!(shell.end_slope > 0.0);
    }

    #[test]
    fn shell_profile_and_slope_decrease_with_core_radius() {
        let cfg = SolverConfig::default();
        let params = preset(0.5, 3.0);
        let narrow = shoot_shell(&params, 0.5, &cfg).unwrap();
        let wide = shoot_shell(&params, 1.0, &cfg).unwrap();
        // compare on radii beyond the larger interface
        for &r in &[1.2, 1.5, 2.0] {
            let vn = narrow.ivp.eval(r)[0];
            let vw = wide.ivp.eval(r)[0];
            let sn = narrow.ivp.eval(r)[1];
            let sw = wide.ivp.eval(r)[1];
            assert!(vn > vw, "value ordering broken at r = {r}");
            assert!(sn > sw, "slope ordering broken at r = {r}");
        }
    }

    #[test]
    fn core_radius_inverts_the_shot() {
        let cfg = SolverConfig::default();
        let params = preset(1.0, 2.0);
        let r_c = critical_radius(&params, &cfg).unwrap();
        assert_eq!(core_radius(&params, r_c, &cfg).unwrap(), 0.0);

        let rho = core_radius(&params, 5.0, &cfg).unwrap();
        let (oracle, _) = bisect(
            &mut |p: f64| interface_equation(p, 5.0, 1.0, 2.0),
            1e-9,
            5.0 - 1e-9,
            ORACLE_RULE,
        )
        .unwrap();
        assert_relative_eq!(rho, oracle, epsilon = 1e-6);

        assert!(matches!(
            core_radius(&params, 0.5 * r_c, &cfg),
            Err(SolverError::OutOfRange { .. })
        ));
    }

    #[test]
    fn core_fraction_increases_toward_one() {
        let cfg = SolverConfig::default();
        let params = preset(1.0, 2.0);
        let r_c = critical_radius(&params, &cfg).unwrap();
        let mut last = 0.0;
        for radius in [1.05 * r_c, 1.5 * r_c, 2.5 * r_c, 5.0 * r_c, 10.0 * r_c] {
            let eta = core_radius(&params, radius, &cfg).unwrap() / radius;
            assert!(eta > last && eta < 1.0, "eta = {eta} at R = {radius}");
            last = eta;
        }
        assert!(last > 0.8);
    }

    #[test]
    fn profile_regimes_cover_all_three_cases() {
        let cfg = SolverConfig::default();
        // supply below quiescence: quiescent-only marker
        let low = ModelParams::linear_preset(0.5, 1.0, 2.0, 0.8, 1.0);
        let profile = nutrient_profile(&low, 1.0, &cfg).unwrap();
        assert_eq!(profile.regime, Regime::QuiescentOnly);
        assert!(profile.values.iter().all(|&v| v <= 0.8 + 1e-9));

        let params = preset(1.0, 2.0);
        let r_c = critical_radius(&params, &cfg).unwrap();
        let two = nutrient_profile(&params, 1.5 * r_c, &cfg).unwrap();
        assert_eq!(two.regime, Regime::TwoLayer);
        assert!(two.core_radius.unwrap() > 0.0);

        let one = nutrient_profile(&params, 0.5 * r_c, &cfg).unwrap();
        assert_eq!(one.regime, Regime::ProliferatingOnly);
        assert!(one.core_radius.is_none());
        assert!(one.values[0] >= params.sigma_q - 1e-9);
    }

    #[test]
    fn branches_coincide_at_the_critical_radius() {
        let cfg = SolverConfig::default();
        let params = preset(1.0, 2.0);
        let r_c = critical_radius(&params, &cfg).unwrap();
        let two = nutrient_profile(&params, r_c, &cfg).unwrap();
        assert_eq!(two.regime, Regime::TwoLayer);
        assert_eq!(two.core_radius, Some(0.0));
        // one-layer shoot at the same radius pins the center at sigmaQ
        let one = solve_one_layer(&params, r_c, &cfg).unwrap();
        assert_relative_eq!(one.values[0], params.sigma_q, epsilon = 1e-6);
        let interp = |grid: &[f64], values: &[f64], r: f64| -> f64 {
            let i = grid.partition_point(|&x| x < r).clamp(1, grid.len() - 1);
            let t = (r - grid[i - 1]) / (grid[i] - grid[i - 1]);
            values[i - 1] + t * (values[i] - values[i - 1])
        };
        let mut sup: f64 = 0.0;
        for k in 1..40 {
            let r = r_c * k as f64 / 40.0;
            let a = interp(&two.grid, &two.values, r);
            let b = interp(&one.grid, &one.values, r);
            sup = sup.max((a - b).abs());
        }
        assert!(sup <= 1e-6, "branch mismatch {sup}");
    }

    #[test]
    fn two_layer_profile_matches_linear_closed_form() {
        let cfg = SolverConfig::default();
        let params = preset(1.0, 2.0);
        let radius = 4.0;
        let profile = nutrient_profile(&params, radius, &cfg).unwrap();
        let rho = profile.core_radius.unwrap();
        let mut sup: f64 = 0.0;
        for (&r, &v) in profile.grid.iter().zip(&profile.values) {
            let exact = if r <= rho {
                if r == 0.0 {
                    rho / rho.sinh()
                } else {
                    rho * r.sinh() / (r * rho.sinh())
                }
            } else {
                (rho / rho.tanh() * (r - rho).sinh() + rho * (r - rho).cosh()) / r
            };
            sup = sup.max((v - exact).abs());
        }
        assert!(sup <= 1e-6, "sup-norm against closed form {sup}");
    }

    #[test]
    fn interface_slopes_match_between_core_and_shell() {
        let cfg = SolverConfig::default();
        let params = preset(1.0, 2.0);
        let core = solve_inner(&params, 1.0, &cfg).unwrap();
        let shell = shoot_shell_with_slope(&params, 1.0, core.flux, &cfg).unwrap();
        // closed-form slope on both sides at the interface
        let exact = 1.0 / 1.0f64.tanh() - 1.0;
        assert!((core.flux - exact).abs() <= 1e-6 * exact + 1e-12);
        assert_eq!(shell.ivp.eval(1.0)[1], core.flux);
    }

    #[test]
    fn shell_satisfies_its_integral_equation() {
        let cfg = SolverConfig::default();
        let params = preset(1.0, 2.0);
        let rho = 0.8;
        let core = solve_inner(&params, rho, &cfg).unwrap();
        let shell = shoot_shell_with_slope(&params, rho, core.flux, &cfg).unwrap();
        let value = |r: f64| shell.ivp.eval(r)[0];
        let inner_int = |alpha: f64| {
            crate::quad::adaptive_simpson(|s| s * s * params.eval_f(value(s)), rho, alpha, 1e-13)
        };
        let span = shell.radius - rho;
        for k in 1..=16 {
            let r = rho + span * k as f64 / 16.0;
            let rhs = params.sigma_q
                + rho * rho * core.flux * (1.0 / rho - 1.0 / r)
                + crate::quad::adaptive_simpson(
                    |alpha| inner_int(alpha) / (alpha * alpha),
                    rho,
                    r,
                    1e-13,
                );
            let lhs = value(r);
            assert!(
                (lhs - rhs).abs() <= 10.0 * cfg.ode_tol.max(1e-11),
                "integral-equation residual {} at r = {r}",
                (lhs - rhs).abs()
            );
        }
    }

    #[test]
    fn rescaled_profile_is_convex_and_decreasing_in_radius() {
        let cfg = SolverConfig::default();
        let params = preset(1.0, 2.0);
        let r_c = critical_radius(&params, &cfg).unwrap();
        let interp = |p: &NutrientProfile, r: f64| -> f64 {
            let i = p.grid.partition_point(|&x| x < r).clamp(1, p.grid.len() - 1);
            let t = (r - p.grid[i - 1]) / (p.grid[i] - p.grid[i - 1]);
            p.values[i - 1] + t * (p.values[i] - p.values[i - 1])
        };
        let small = nutrient_profile(&params, 1.2 * r_c, &cfg).unwrap();
        let large = nutrient_profile(&params, 1.8 * r_c, &cfg).unwrap();
        let eta_large = large.core_radius.unwrap() / large.radius;
        for s in [0.5 * (1.0 + eta_large), 0.9, 0.97] {
            let u_small = interp(&small, s * small.radius);
            let u_large = interp(&large, s * large.radius);
            assert!(
                u_small > u_large,
                "rescaled profile not decreasing in R at s = {s}"
            );
        }
    }

    #[test]
    fn profile_csv_has_header_and_tags() {
        let cfg = SolverConfig::default();
        let params = preset(1.0, 2.0);
        let profile = nutrient_profile(&params, 4.0, &cfg).unwrap();
        let csv = profile.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "r,sigma,regime_tag");
        assert!(csv.contains(",quiescent\n"));
        assert!(csv.contains(",proliferating\n"));
        let rows = csv.lines().count() - 1;
        assert_eq!(rows, profile.grid.len());
    }
}
