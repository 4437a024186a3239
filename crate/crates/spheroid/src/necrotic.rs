//! Flux-coefficient shell family and the vanishing-consumption limit.
//!
//! Replacing the core flux by a prescribed slope `K rho` at the interface
//! turns the shell shoot into a one-parameter family `R(rho, K)` that
//! contains both the general model (`K = flux(rho)/rho`) and the
//! necrotic-core model (`K = 0`, a core that consumes nothing). The family's
//! growth functional `F(R, K)` is strictly decreasing in both arguments,
//! which sandwiches the general stationary radius between necrotic ones and
//! yields the convergence of the stationary state as the core consumption
//! `h` is scaled to zero.
//!
//! For the all-linear model the profiles, the interface equation, and the
//! growth functional all have closed forms; [`LinearClosedForm`] exposes
//! them as an independent reference path (scalar root finds plus direct
//! quadrature, no shooting).

use serde::Serialize;

use crate::config::SolverConfig;
use crate::error::{Result, SolverError};
use crate::model::{ModelParams, RateSpec};
use crate::outer::{critical_radius, invert_radius, shoot_shell_with_slope};
use crate::quad::adaptive_simpson;
use crate::report::fmt_float;
use crate::root::{bisect, grow_bracket_up, StopRule};
use crate::stationary::{find_stationary, growth_rate_from_shell, StationaryRegime};

/// Shell solution with a prescribed interface flux coefficient.
#[derive(Debug, Clone)]
pub struct AuxSolution {
    pub rho: f64,
    /// Flux coefficient `K`; the interface slope is `K * rho`.
    pub flux_coeff: f64,
    pub radius: f64,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub end_slope: f64,
}

fn check_admissible(params: &ModelParams, k: f64) -> Result<()> {
    let limit = params.eval_f(params.sigma_q) / 3.0;
    if k < 0.0 || k >= limit {
        return Err(SolverError::InadmissibleK { k, limit });
    }
    Ok(())
}

/// Shell shoot with interface slope `K rho`. `K = 0` is the necrotic core;
/// `K = flux(rho)/rho` reproduces the general shell shoot exactly.
pub fn shoot_with_flux(
    params: &ModelParams,
    rho: f64,
    k: f64,
    cfg: &SolverConfig,
) -> Result<AuxSolution> {
    check_admissible(params, k)?;
    let shell = shoot_shell_with_slope(params, rho, k * rho, cfg)?;
    Ok(AuxSolution {
        rho,
        flux_coeff: k,
        radius: shell.radius,
        grid: shell.grid,
        values: shell.values,
        end_slope: shell.end_slope,
    })
}

/// Growth functional of the flux-coefficient family at radius `R >= R_c`.
pub fn growth_rate_with_flux(
    params: &ModelParams,
    radius: f64,
    k: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    check_admissible(params, k)?;
    let r_c = critical_radius(params, cfg)?;
    let rho = invert_radius(radius, r_c, cfg, |rho| {
        shoot_shell_with_slope(params, rho, k * rho, cfg).map(|s| s.radius)
    })?;
    let shell = shoot_shell_with_slope(params, rho, k * rho, cfg)?;
    Ok(growth_rate_from_shell(params, &shell, rho))
}

/// Unique root of `F(., K)` above the critical radius. `K = 0` yields the
/// stationary radius of the necrotic-core model.
pub fn stationary_radius_with_flux(
    params: &ModelParams,
    k: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    check_admissible(params, k)?;
    let r_c = critical_radius(params, cfg)?;
    let fail: std::cell::RefCell<Option<SolverError>> = std::cell::RefCell::new(None);
    let mut f_of = |r: f64| match growth_rate_with_flux(params, r, k, cfg) {
        Ok(v) => v,
        Err(e) => {
            fail.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let f_at_rc = f_of(r_c);
    if let Some(e) = fail.borrow_mut().take() {
        return Err(e);
    }
    if f_at_rc <= 0.0 {
        return Err(SolverError::BracketFailure(format!(
            "no cored stationary state: growth rate at the critical radius is {f_at_rc} \
             (supply below the threshold)"
        )));
    }
    let bracket = grow_bracket_up(&mut f_of, r_c, 2.0, cfg.r_cap, "stationary radius");
    if let Some(e) = fail.borrow_mut().take() {
        return Err(e);
    }
    let (lo, hi) = bracket?;
    let rule = StopRule {
        xtol: 1e-12,
        ftol: cfg.root_tol,
        max_iter: cfg.max_iter,
    };
    let root = bisect(&mut f_of, lo, hi, rule);
    if let Some(e) = fail.borrow_mut().take() {
        return Err(e);
    }
    Ok(root?.0)
}

/// One entry of a vanishing-consumption sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    /// Scale factor applied to the base core-consumption rate.
    pub lambda: f64,
    /// Stationary radius of the scaled model.
    pub radius: f64,
    /// Stationary core radius of the scaled model.
    pub core_radius: f64,
    /// Distance to the necrotic stationary radius.
    pub gap_radius: f64,
    /// Distance to the necrotic stationary core radius.
    pub gap_core: f64,
}

/// Vanishing-consumption sweep toward the necrotic reference.
#[derive(Debug, Clone, Serialize)]
pub struct LimitSweep {
    pub entries: Vec<SweepEntry>,
    /// Necrotic stationary radius (flux coefficient zero).
    pub necrotic_radius: f64,
    /// Necrotic stationary core radius.
    pub necrotic_core_radius: f64,
    /// Radii strictly increase (and core radii approach) as the scale drops.
    pub strictly_ordered: bool,
}

impl LimitSweep {
    /// CSV with columns `lambda,R_s,rho_s,gap_R,gap_rho`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,R_s,rho_s,gap_R,gap_rho\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_float(e.lambda),
                fmt_float(e.radius),
                fmt_float(e.core_radius),
                fmt_float(e.gap_radius),
                fmt_float(e.gap_core)
            ));
        }
        out
    }
}

/// Stationary states for the family `h -> lambda * h` over a decreasing
/// sequence of scales, along with the necrotic reference they approach.
pub fn limit_sweep(
    params_base: &ModelParams,
    lambdas: &[f64],
    cfg: &SolverConfig,
) -> Result<LimitSweep> {
    if lambdas.is_empty() {
        return Err(SolverError::InvalidParams(
            "sweep needs at least one scale factor".into(),
        ));
    }
    if lambdas.iter().any(|&l| l <= 0.0) || lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(SolverError::InvalidParams(
            "scale factors must be positive and strictly decreasing".into(),
        ));
    }
    let necrotic_radius = stationary_radius_with_flux(params_base, 0.0, cfg)?;
    let r_c = critical_radius(params_base, cfg)?;
    let necrotic_core_radius = invert_radius(necrotic_radius, r_c, cfg, |rho| {
        shoot_shell_with_slope(params_base, rho, 0.0, cfg).map(|s| s.radius)
    })?;

    let mut entries: Vec<SweepEntry> = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let scaled = params_base.with_h_scaled(lambda);
        let state = find_stationary(&scaled, cfg)?;
        let (radius, core_radius) = match (state.regime, state.core_radius) {
            (StationaryRegime::TwoLayer, Some(rho)) => (state.radius, rho),
            _ => {
                return Err(SolverError::BracketFailure(format!(
                    "sweep entry lambda = {lambda} has no two-layer stationary state"
                )))
            }
        };
        entries.push(SweepEntry {
            lambda,
            radius,
            core_radius,
            gap_radius: (necrotic_radius - radius).abs(),
            gap_core: (necrotic_core_radius - core_radius).abs(),
        });
    }
    let strictly_ordered = entries
        .windows(2)
        .all(|w| w[1].radius > w[0].radius)
        && entries.iter().all(|e| e.radius < necrotic_radius)
        && entries.windows(2).all(|w| w[1].gap_core <= w[0].gap_core);
    Ok(LimitSweep {
        entries,
        necrotic_radius,
        necrotic_core_radius,
        strictly_ordered,
    })
}

/// Closed forms for the all-linear model (`f = sigma`, `h = lambda sigma`
/// with `0 <= lambda <= 1`, `g = mu (sigma - sigmaTilde)`, `sigma0 = 0`).
///
/// Everything here reduces to scalar root finds on explicit transcendental
/// equations plus direct quadrature of explicit profiles; no shooting, so
/// the general solvers can be checked against it.
#[derive(Debug, Clone)]
pub struct LinearClosedForm {
    pub lambda: f64,
    pub mu: f64,
    pub sigma_q: f64,
    pub sigma_tilde: f64,
    pub sigma_bar: f64,
    pub nu: f64,
}

/// Build the closed-form reference, rejecting parameters outside the
/// all-linear preset.
pub fn linear_closed_form(params: &ModelParams) -> Result<LinearClosedForm> {
    let err = |msg: &str| Err(SolverError::PresetMismatch(msg.into()));
    if params.sigma0 != 0.0 {
        return err("sigma0 must be 0");
    }
    let lambda = match params.h {
        RateSpec::Linear { slope, zero_at } if zero_at == 0.0 && (0.0..=1.0).contains(&slope) => {
            slope
        }
        _ => return err("h must be linear through the origin with slope in [0, 1]"),
    };
    match params.f {
        RateSpec::Linear { slope, zero_at } if slope == 1.0 && zero_at == 0.0 => {}
        _ => return err("f must be the identity rate"),
    }
    let mu = match params.g {
        RateSpec::Linear { slope, zero_at } if zero_at == params.sigma_tilde && slope > 0.0 => {
            slope
        }
        _ => return err("g must be linear with its zero at sigmaTilde"),
    };
    Ok(LinearClosedForm {
        lambda,
        mu,
        sigma_q: params.sigma_q,
        sigma_tilde: params.sigma_tilde,
        sigma_bar: params.sigma_bar,
        nu: params.nu,
    })
}

/// `x coth x`, continued through `x = 0` by its analytic limit.
fn x_coth_x(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 + x2 / 3.0 - x2 * x2 / 45.0
    } else {
        x / x.tanh()
    }
}

const ORACLE_RULE: StopRule = StopRule {
    xtol: 5e-14,
    ftol: 0.0,
    max_iter: 300,
};

impl LinearClosedForm {
    /// Core profile value at `r` for interface radius `rho`.
    pub fn core_value(&self, r: f64, rho: f64) -> f64 {
        if self.lambda == 0.0 {
            return self.sigma_q;
        }
        let a = self.lambda.sqrt();
        if r == 0.0 {
            rho * self.sigma_q * a / (a * rho).sinh()
        } else {
            rho * self.sigma_q * (a * r).sinh() / (r * (a * rho).sinh())
        }
    }

    /// Interface flux of the core profile.
    pub fn core_flux(&self, rho: f64) -> f64 {
        if self.lambda == 0.0 || rho == 0.0 {
            return 0.0;
        }
        self.sigma_q * (x_coth_x(self.lambda.sqrt() * rho) - 1.0) / rho
    }

    /// Shell profile value at `r >= rho`.
    pub fn shell_value(&self, r: f64, rho: f64) -> f64 {
        if rho == 0.0 {
            return if r == 0.0 {
                self.sigma_q
            } else {
                self.sigma_q * r.sinh() / r
            };
        }
        let xc = x_coth_x(self.lambda.sqrt() * rho);
        self.sigma_q * (xc * (r - rho).sinh() + rho * (r - rho).cosh()) / r
    }

    /// Interface equation whose root in `rho` links the two free boundaries:
    /// `L = x coth x * sinh(R - rho) + rho cosh(R - rho) - (sigmaBar/sigmaQ) R`
    /// with `x = sqrt(lambda) rho`.
    pub fn interface_residual(&self, rho: f64, radius: f64) -> f64 {
        let xc = x_coth_x(self.lambda.sqrt() * rho);
        xc * (radius - rho).sinh() + rho * (radius - rho).cosh()
            - self.sigma_bar / self.sigma_q * radius
    }

    /// Critical radius: root of `sinh(R)/R = sigmaBar/sigmaQ`.
    pub fn critical_radius(&self) -> Result<f64> {
        let ratio = self.sigma_bar / self.sigma_q;
        if ratio <= 1.0 {
            return Err(SolverError::InvalidParams(
                "critical radius needs sigmaBar above sigmaQ".into(),
            ));
        }
        let mut f = |r: f64| r.sinh() / r - ratio;
        let (lo, hi) = grow_bracket_up(&mut f, 0.25, 2.0, 1e3, "closed-form critical radius")?;
        Ok(bisect(&mut f, lo.min(0.25), hi, ORACLE_RULE)?.0)
    }

    /// Core radius for a tumor of radius `R >= R_c` (root of the interface
    /// equation, which is strictly decreasing in `rho`).
    pub fn core_radius_of(&self, radius: f64) -> Result<f64> {
        let r_c = self.critical_radius()?;
        if radius < r_c * (1.0 - 1e-12) {
            return Err(SolverError::OutOfRange {
                radius,
                critical: r_c,
            });
        }
        if radius <= r_c {
            return Ok(0.0);
        }
        let mut f = |rho: f64| self.interface_residual(rho, radius);
        Ok(bisect(&mut f, 0.0, radius, ORACLE_RULE)?.0)
    }

    /// One-layer profile value for `R` below the critical radius.
    pub fn one_layer_value(&self, r: f64, radius: f64) -> f64 {
        if r == 0.0 {
            self.sigma_bar * radius / radius.sinh()
        } else {
            self.sigma_bar * radius * r.sinh() / (r * radius.sinh())
        }
    }

    /// Full profile value at `r` for a tumor of radius `R` (two-branch above
    /// the critical radius, one-layer below).
    pub fn value(&self, r: f64, radius: f64) -> Result<f64> {
        let r_c = self.critical_radius()?;
        if radius >= r_c {
            let rho = self.core_radius_of(radius)?;
            Ok(if r <= rho {
                self.core_value(r, rho)
            } else {
                self.shell_value(r, rho)
            })
        } else {
            Ok(self.one_layer_value(r, radius))
        }
    }

    /// Growth functional by direct quadrature of the closed-form profile.
    pub fn growth_rate_at(&self, radius: f64) -> Result<f64> {
        let r_c = self.critical_radius()?;
        let g = |v: f64| self.mu * (v - self.sigma_tilde);
        if radius >= r_c {
            let rho = self.core_radius_of(radius)?;
            let shell = adaptive_simpson(
                |r| g(self.shell_value(r, rho)) * r * r,
                rho,
                radius,
                1e-13,
            );
            Ok((shell - self.nu * rho * rho * rho / 3.0) / radius.powi(3))
        } else {
            let whole = adaptive_simpson(
                |r| g(self.one_layer_value(r, radius)) * r * r,
                0.0,
                radius,
                1e-13,
            );
            Ok(whole / radius.powi(3))
        }
    }

    /// Stationary radius above the critical one (unique root of the
    /// closed-form growth functional).
    pub fn stationary_radius(&self) -> Result<f64> {
        let r_c = self.critical_radius()?;
        let fail: std::cell::RefCell<Option<SolverError>> = std::cell::RefCell::new(None);
        let mut f = |r: f64| match self.growth_rate_at(r) {
            Ok(v) => v,
            Err(e) => {
                fail.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        };
        let f_c = f(r_c);
        if let Some(e) = fail.borrow_mut().take() {
            return Err(e);
        }
        if f_c <= 0.0 {
            return Err(SolverError::BracketFailure(
                "closed-form growth rate is nonpositive at the critical radius".into(),
            ));
        }
        let bracket = grow_bracket_up(&mut f, r_c, 2.0, 1e3, "closed-form stationary radius");
        if let Some(e) = fail.borrow_mut().take() {
            return Err(e);
        }
        let (lo, hi) = bracket?;
        let root = bisect(&mut f, lo, hi, ORACLE_RULE);
        if let Some(e) = fail.borrow_mut().take() {
            return Err(e);
        }
        Ok(root?.0)
    }

    /// Stationary core radius.
    pub fn stationary_core_radius(&self) -> Result<f64> {
        self.core_radius_of(self.stationary_radius()?)
    }
}
