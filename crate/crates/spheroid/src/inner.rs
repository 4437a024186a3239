//! Quiescent-core boundary value problem.
//!
//! Solves `v'' + (2/r) v' = h(v)` on `[0, rho]` with `v'(0) = 0` and
//! `v(rho) = sigmaQ` by shooting on the unknown center value `v(0)`: the map
//! `v(0) -> v(rho)` is strictly increasing, so bisection converges. The
//! interface flux `v'(rho)` is returned as a quadrature of `s^2 h(v)` over
//! the profile, which is the quantity the shell problem consumes.

use crate::config::SolverConfig;
use crate::error::{Result, SolverError};
use crate::model::ModelParams;
use crate::ode::{Integrator, IvpSolution};
use crate::quad::{integrate_over_solution, simpson, step_grid};
use crate::root::{bisect, StopRule};

/// Number of subintervals every stored profile is densified to (at least).
pub(crate) const MIN_PROFILE_POINTS: usize = 256;

/// Core nutrient profile on `[0, rho]` with its interface flux.
#[derive(Debug, Clone)]
pub struct InnerSolution {
    pub rho: f64,
    /// Strictly increasing radii from `0` to `rho`.
    pub grid: Vec<f64>,
    /// Nutrient values along `grid`.
    pub values: Vec<f64>,
    /// Interface flux `v'(rho)`, computed as `(1/rho^2) * integral of s^2 h(v)`.
    pub flux: f64,
    /// Center value `v(0)`.
    pub center_value: f64,
}

/// Interface flux of the core profile; `0` at `rho = 0` and for vanishing `h`.
pub fn flux(params: &ModelParams, rho: f64, cfg: &SolverConfig) -> Result<f64> {
    solve_inner(params, rho, cfg).map(|s| s.flux)
}

/// Solve the core problem for a given interface radius `rho >= 0`.
pub fn solve_inner(params: &ModelParams, rho: f64, cfg: &SolverConfig) -> Result<InnerSolution> {
    solve_core_with_boundary(params, rho, params.sigma_q, cfg)
}

/// Core problem with an arbitrary boundary value (the quiescent-only display
/// profile pins `sigmaBar` instead of `sigmaQ` at the outer edge).
pub(crate) fn solve_core_with_boundary(
    params: &ModelParams,
    rho: f64,
    boundary: f64,
    cfg: &SolverConfig,
) -> Result<InnerSolution> {
    if boundary <= params.sigma0 {
        return Err(SolverError::InvalidParams(format!(
            "core boundary value {} must exceed sigma0 = {}",
            boundary, params.sigma0
        )));
    }
    if rho < 0.0 || !rho.is_finite() {
        return Err(SolverError::InvalidParams(format!(
            "core radius must be finite and nonnegative, got {rho}"
        )));
    }
    if rho == 0.0 {
        return Ok(InnerSolution {
            rho,
            grid: vec![0.0],
            values: vec![boundary],
            flux: 0.0,
            center_value: boundary,
        });
    }
    if params.h_is_zero() {
        let grid = uniform_grid(rho);
        let values = vec![boundary; grid.len()];
        return Ok(InnerSolution {
            rho,
            grid,
            values,
            flux: 0.0,
            center_value: boundary,
        });
    }

    let cutoff = cfg.origin_cutoff_for(rho).min(rho);
    let span = boundary - params.sigma0;

    let shoot = |v0: f64| -> Result<Option<IvpSolution<2>>> {
        if cutoff >= rho {
            return Ok(None);
        }
        let (v_c, w_c) = taylor_state(params, v0, cutoff);
        let integ = Integrator::new(cfg.ode_tol);
        let rhs = |r: f64, y: &[f64; 2]| [y[1], params.eval_h(y[0]) - 2.0 * y[1] / r];
        integ.integrate(rhs, cutoff, [v_c, w_c], rho).map(Some)
    };
    let boundary_value = |v0: f64| -> Result<f64> {
        Ok(match shoot(v0)? {
            Some(sol) => sol.y_end[0],
            None => taylor_state(params, v0, rho).0,
        })
    };

    // Shoot on tau = ln(v0 - sigma0): for large cores the center value sits
    // exponentially close to sigma0 and a linear bracket cannot resolve it.
    let tau_hi = span.ln();
    let v0_of = |tau: f64| {
        if tau >= tau_hi {
            boundary
        } else {
            params.sigma0 + tau.exp()
        }
    };
    let fail: std::cell::RefCell<Option<SolverError>> = std::cell::RefCell::new(None);
    let mut shot = |tau: f64| -> f64 {
        match boundary_value(v0_of(tau)) {
            Ok(v) => v - boundary,
            Err(e) => {
                fail.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };

    let mut tau_lo = (1e-12 * span).ln();
    let mut found_bracket = shot(tau_lo) < 0.0;
    while !found_bracket && tau_lo > f64::MIN_POSITIVE.ln() {
        tau_lo -= 6.0 * std::f64::consts::LN_10;
        found_bracket = shot(tau_lo) < 0.0;
    }
    if let Some(e) = fail.borrow_mut().take() {
        return Err(e);
    }
    if !found_bracket {
        return Err(SolverError::NoConvergence {
            max_iter: cfg.max_iter,
            context: format!("no center-value bracket for rho = {rho}"),
        });
    }

    let rule = StopRule {
        xtol: 1e-15,
        ftol: cfg.bvp_tol,
        max_iter: cfg.max_iter,
    };
    let (tau, residual) = bisect(&mut shot, tau_lo, tau_hi, rule)?;
    if let Some(e) = fail.borrow_mut().take() {
        return Err(e);
    }
    if residual.abs() > 10.0 * cfg.bvp_tol.max(1e-12) {
        return Err(SolverError::NoConvergence {
            max_iter: cfg.max_iter,
            context: format!("boundary residual {residual} at rho = {rho}"),
        });
    }
    let v0 = v0_of(tau);

    // Final pass at the converged center value, keeping the dense steps.
    let sol = shoot(v0)?;
    let (grid, values) = assemble_profile(params, v0, cutoff, rho, sol.as_ref());

    // Flux quadrature: analytic-expansion zone below the cutoff, composite
    // Simpson over the integrator's accepted steps beyond it.
    let mut integral = simpson(
        |s| s * s * params.eval_h(taylor_state(params, v0, s).0),
        0.0,
        cutoff.min(rho),
        8,
    );
    if let Some(sol) = &sol {
        integral += integrate_over_solution(sol, MIN_PROFILE_POINTS, |s, y| {
            s * s * params.eval_h(y[0])
        });
    }
    let flux = integral / (rho * rho);

    Ok(InnerSolution {
        rho,
        grid,
        values,
        flux,
        center_value: v0,
    })
}

/// Second-order expansion around the regular origin: `v(r) = v0 + h(v0) r^2 / 6`.
fn taylor_state(params: &ModelParams, v0: f64, r: f64) -> (f64, f64) {
    let h0 = params.eval_h(v0);
    (v0 + h0 * r * r / 6.0, h0 * r / 3.0)
}

fn uniform_grid(rho: f64) -> Vec<f64> {
    (0..=MIN_PROFILE_POINTS)
        .map(|k| rho * k as f64 / MIN_PROFILE_POINTS as f64)
        .collect()
}

fn assemble_profile(
    params: &ModelParams,
    v0: f64,
    cutoff: f64,
    rho: f64,
    sol: Option<&IvpSolution<2>>,
) -> (Vec<f64>, Vec<f64>) {
    let mut grid = Vec::new();
    let mut values = Vec::new();
    match sol {
        None => {
            // the whole core sits inside the expansion zone
            for r in uniform_grid(rho) {
                grid.push(r);
                values.push(taylor_state(params, v0, r).0);
            }
        }
        Some(sol) => {
            for k in 0..8 {
                let r = cutoff * k as f64 / 8.0;
                grid.push(r);
                values.push(taylor_state(params, v0, r).0);
            }
            for r in step_grid(sol, MIN_PROFILE_POINTS) {
                grid.push(r);
                values.push(sol.eval(r)[0]);
            }
        }
    }
    (grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params_with_lambda(lambda: f64) -> ModelParams {
        ModelParams::linear_preset(lambda, 1.0, 2.0, 3.0, 1.0)
    }

    /// Closed form of the core profile for h = lambda * sigma:
    /// `rho * sigmaQ * sinh(sqrt(lambda) r) / (r * sinh(sqrt(lambda) rho))`.
    fn closed_profile(lambda: f64, rho: f64, r: f64) -> f64 {
        let a = lambda.sqrt();
        if r == 0.0 {
            rho * a / (a * rho).sinh()
        } else {
            rho * (a * r).sinh() / (r * (a * rho).sinh())
        }
    }

    fn closed_flux(lambda: f64, rho: f64) -> f64 {
        let x = lambda.sqrt() * rho;
        (x / x.tanh() - 1.0) / rho
    }

    #[test]
    fn zero_core_radius_is_degenerate() {
        let cfg = SolverConfig::default();
        let sol = solve_inner(&params_with_lambda(1.0), 0.0, &cfg).unwrap();
        assert_eq!(sol.flux, 0.0);
        assert_eq!(sol.values, vec![1.0]);
        assert_eq!(flux(&params_with_lambda(0.5), 0.0, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn vanishing_h_gives_flat_profile() {
        let cfg = SolverConfig::default();
        let sol = solve_inner(&params_with_lambda(0.0), 2.0, &cfg).unwrap();
        assert_eq!(sol.flux, 0.0);
        assert!(sol.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn matches_closed_form_at_unit_radius() {
        let cfg = SolverConfig::default();
        let sol = solve_inner(&params_with_lambda(1.0), 1.0, &cfg).unwrap();
        // center 1/sinh(1), flux coth(1) - 1
        assert_relative_eq!(sol.center_value, 1.0 / 1.0f64.sinh(), epsilon = 1e-8);
        assert_relative_eq!(sol.flux, 1.0 / 1.0f64.tanh() - 1.0, epsilon = 1e-9);
        let max_err = sol
            .grid
            .iter()
            .zip(&sol.values)
            .map(|(&r, &v)| (v - closed_profile(1.0, 1.0, r)).abs())
            .fold(0.0, f64::max);
        assert!(max_err <= 1e-6, "sup-norm error {max_err}");
    }

    #[test]
    fn flux_at_half_radius_respects_the_consumption_bound() {
        let cfg = SolverConfig::default();
        let params = params_with_lambda(1.0);
        let value = flux(&params, 0.5, &cfg).unwrap();
        assert_relative_eq!(value, closed_flux(1.0, 0.5), epsilon = 1e-9);
        let bound = params.eval_h(params.sigma_q) * 0.5 / 3.0;
        assert!(0.0 < value && value < bound);
    }

    #[test]
    fn flux_grows_with_core_radius_and_profile_drops() {
        let cfg = SolverConfig::default();
        let params = params_with_lambda(0.5);
        let mut last = 0.0;
        for rho in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let value = flux(&params, rho, &cfg).unwrap();
            assert!(value > last, "flux not increasing at rho = {rho}");
            last = value;
        }
        let narrow = solve_inner(&params, 1.0, &cfg).unwrap();
        let wide = solve_inner(&params, 2.0, &cfg).unwrap();
        for &(r, v) in narrow
            .grid
            .iter()
            .zip(&narrow.values)
            .map(|(&r, &v)| (r, v))
            .collect::<Vec<_>>()
            .iter()
            .step_by(16)
        {
            let v_wide = wide
                .grid
                .iter()
                .zip(&wide.values)
                .min_by(|a, b| {
                    (a.0 - r).abs().partial_cmp(&(b.0 - r).abs()).unwrap()
                })
                .map(|(_, &v)| v)
                .unwrap();
            // wider cores depress the profile pointwise
            assert!(v_wide < v + 1e-9, "at r = {r}: {v_wide} !< {v}");
        }
    }

    #[test]
    fn profile_is_increasing_convex_and_bounded() {
        let cfg = SolverConfig::default();
        let params = params_with_lambda(1.0);
        let sol = solve_inner(&params, 2.0, &cfg).unwrap();
        assert!(sol
            .values
            .windows(2)
            .all(|w| w[1] > w[0] - 1e-12));
        assert!(sol
            .values
            .iter()
            .all(|&v| v > params.sigma0 && v <= params.sigma_q + 1e-9));
        assert_relative_eq!(*sol.values.last().unwrap(), params.sigma_q, epsilon = 1e-8);
        // discrete convexity on interior triples
        for w in sol.grid.windows(3).zip(sol.values.windows(3)) {
            let (r, v) = w;
            let h0 = r[1] - r[0];
            let h1 = r[2] - r[1];
            if h0 <= 0.0 || h1 <= 0.0 {
                continue;
            }
            let second = 2.0 * ((v[2] - v[1]) / h1 - (v[1] - v[0]) / h0) / (h0 + h1);
            assert!(second >= -1e-6, "second difference {second} at r = {}", r[1]);
        }
    }

    #[test]
    fn flux_matches_end_slope() {
        let cfg = SolverConfig::default();
        let params = params_with_lambda(0.25);
        let sol = solve_inner(&params, 1.5, &cfg).unwrap();
        // one-sided second-order estimate from the (uniformly spaced) tail
        let n = sol.grid.len();
        let h = sol.grid[n - 1] - sol.grid[n - 2];
        assert_relative_eq!(h, sol.grid[n - 2] - sol.grid[n - 3], max_relative = 1e-9);
        let slope =
            (3.0 * sol.values[n - 1] - 4.0 * sol.values[n - 2] + sol.values[n - 3]) / (2.0 * h);
        assert_relative_eq!(sol.flux, slope, max_relative = 1e-4);
    }

    #[test]
    fn deep_core_still_brackets() {
        // center value sits far below 1e-12 * span here
        let cfg = SolverConfig::default();
        let params = params_with_lambda(1.0);
        let sol = solve_inner(&params, 45.0, &cfg).unwrap();
        assert!(sol.center_value > params.sigma0);
        assert!(sol.center_value < 1e-12);
        assert_relative_eq!(sol.flux, closed_flux(1.0, 45.0), max_relative = 1e-7);
    }

    #[test]
    fn residual_of_returned_profile_is_small() {
        let cfg = SolverConfig {
            ode_tol: 1e-11,
            bvp_tol: 3e-6,
            ..SolverConfig::default()
        };
        let params = params_with_lambda(0.5);
        let sol = solve_inner(&params, 1.0, &cfg).unwrap();
        // uniform interior triples only: near the origin the 2/r term
        // amplifies any slope estimate, and across step boundaries the
        // spacing jumps
        let mut worst: f64 = 0.0;
        for w in sol.grid.windows(3).zip(sol.values.windows(3)) {
            let (r, v) = w;
            let h0 = r[1] - r[0];
            let h1 = r[2] - r[1];
            if r[0] < 0.1 || (h1 - h0).abs() > 1e-9 * (h0 + h1) {
                continue;
            }
            let second = (v[2] - 2.0 * v[1] + v[0]) / (h0 * h0);
            let first = (v[2] - v[0]) / (2.0 * h0);
            let res = second + 2.0 * first / r[1] - params.eval_h(v[1]);
            worst = worst.max(res.abs());
        }
        assert!(worst <= 10.0 * cfg.bvp_tol, "max residual {worst}");
    }

    #[test]
    fn rejects_collapsed_thresholds() {
        let cfg = SolverConfig::default();
        let mut params = params_with_lambda(1.0);
        params.sigma_q = params.sigma0;
        assert!(matches!(
            solve_inner(&params, 1.0, &cfg),
            Err(SolverError::InvalidParams(_))
        ));
    }
}
