//! Radius dynamics `dR/dt = R F(R)` and regime transitions.
//!
//! For supply at or below the quiescence threshold the volume balance
//! reduces to pure removal and the radius decays as `R0 exp(-nu t / 3)`
//! exactly; that branch is analytic, no integration. Otherwise the scalar
//! autonomous equation is integrated adaptively, each right-hand-side
//! evaluation triggering a full nested solve (core problem, shell shoot,
//! quadrature). Crossings of the critical radius are label changes, not
//! dynamical events: they are located on the dense output for reporting and
//! never restart the integrator.

use serde::Serialize;

use crate::config::SolverConfig;
use crate::error::{Result, SolverError};
use crate::model::ModelParams;
use crate::ode::Integrator;
use crate::outer::{critical_radius, invert_radius, shoot_shell, Regime};
use crate::report::fmt_float;
use crate::stationary::{find_stationary, growth_rate_given_rc};

/// One trajectory sample.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub radius: f64,
    /// Core radius, present exactly when the radius exceeds the critical one.
    pub core_radius: Option<f64>,
    pub regime: Regime,
}

/// A detected crossing of the critical radius.
#[derive(Debug, Clone, Serialize)]
pub struct Transition {
    pub t: f64,
    pub from: Regime,
    pub to: Regime,
}

/// Time evolution of the tumor radius.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub transitions: Vec<Transition>,
    /// Stationary radius, set when the final sample lies within the
    /// convergence tolerance of it.
    pub converged_to: Option<f64>,
}

impl Trajectory {
    pub fn final_sample(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectories are never empty")
    }

    /// CSV with columns `t,R,rho,regime` (empty `rho` when absent).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,R,rho,regime\n");
        for s in &self.samples {
            let rho = s.core_radius.map(fmt_float).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{rho},{}\n",
                fmt_float(s.t),
                fmt_float(s.radius),
                s.regime
            ));
        }
        out
    }
}

/// Default horizon: thirty characteristic times of the slower of the two
/// envelope rates.
pub fn default_t_end(params: &ModelParams) -> f64 {
    let decay = params.nu / 3.0;
    let growth = (params.eval_g(params.sigma_bar) / 3.0).abs();
    30.0 / decay.max(growth).max(1e-6)
}

/// Integrate the radius dynamics from `r0` up to `t_end`.
pub fn evolve(
    params: &ModelParams,
    r0: f64,
    t_end: f64,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    if r0 <= 0.0 || !r0.is_finite() {
        return Err(SolverError::InvalidParams(format!(
            "initial radius must be positive and finite, got {r0}"
        )));
    }
    if t_end <= 0.0 || !t_end.is_finite() {
        return Err(SolverError::InvalidParams(format!(
            "horizon must be positive and finite, got {t_end}"
        )));
    }
    if params.sigma_bar <= params.sigma_q {
        return Ok(quiescent_decay(params, r0, t_end, cfg));
    }

    let r_c = critical_radius(params, cfg)?;
    let stationary = find_stationary(params, cfg)?;

    // Noise floor of one growth-rate evaluation, estimated by re-evaluating
    // with perturbed integration tolerances; the trajectory tolerance is
    // kept an order of magnitude above it.
    let f_probe = growth_rate_given_rc(params, r0, r_c, cfg)?;
    let mut perturbed = cfg.clone();
    perturbed.ode_tol *= 1.7;
    perturbed.event_tol *= 1.3;
    let f_perturbed = growth_rate_given_rc(params, r0, r_c, &perturbed)?;
    let noise_floor = (f_probe - f_perturbed).abs().max(1e-14);
    let tol = cfg.ode_tol.max(10.0 * noise_floor);

    let fail: std::cell::RefCell<Option<SolverError>> = std::cell::RefCell::new(None);
    let rhs = |_t: f64, y: &[f64; 1]| -> [f64; 1] {
        let r = y[0];
        if r <= 1e-8 {
            // growth rate limit at vanishing radius
            return [r * params.eval_g(params.sigma_bar) / 3.0];
        }
        match growth_rate_given_rc(params, r, r_c, cfg) {
            Ok(f) => [r * f],
            Err(e) => {
                fail.borrow_mut().get_or_insert(e);
                [f64::NAN]
            }
        }
    };

    let integ = Integrator {
        rtol: tol,
        atol: tol * r0.max(1.0),
        max_steps: 200_000,
    };
    let ivp = integ.integrate(rhs, 0.0, [r0], t_end);
    if let Some(e) = fail.borrow_mut().take() {
        return Err(e);
    }
    let ivp = ivp?;

    let mut samples = Vec::with_capacity(ivp.steps.len() + 1);
    let mut push_sample = |t: f64, radius: f64| -> Result<()> {
        let (core, regime) = if radius > r_c {
            let rho = invert_radius(radius, r_c, cfg, |rho| {
                shoot_shell(params, rho, cfg).map(|s| s.radius)
            })?;
            (Some(rho), Regime::TwoLayer)
        } else {
            (None, Regime::ProliferatingOnly)
        };
        samples.push(TrajectorySample {
            t,
            radius,
            core_radius: core,
            regime,
        });
        Ok(())
    };
    push_sample(0.0, r0)?;
    for step in &ivp.steps {
        let t = step.t1.min(ivp.t_end);
        push_sample(t, step.eval(t)[0])?;
    }

    // locate label changes on the dense output
    let mut transitions = Vec::new();
    for (pair, step) in samples.windows(2).zip(&ivp.steps) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.regime != b.regime {
            let t_cross = refine_label_crossing(step, r_c, cfg.event_tol);
            transitions.push(Transition {
                t: t_cross,
                from: a.regime,
                to: b.regime,
            });
        }
    }

    let final_radius = samples.last().expect("at least the initial sample").radius;
    let converged_to =
        ((final_radius - stationary.radius).abs() <= cfg.conv_tol).then_some(stationary.radius);

    Ok(Trajectory {
        samples,
        transitions,
        converged_to,
    })
}

/// Exact exponential decay branch for supply at or below quiescence.
fn quiescent_decay(params: &ModelParams, r0: f64, t_end: f64, cfg: &SolverConfig) -> Trajectory {
    let n = 200;
    let samples: Vec<TrajectorySample> = (0..=n)
        .map(|k| {
            let t = t_end * k as f64 / n as f64;
            TrajectorySample {
                t,
                radius: r0 * (-params.nu * t / 3.0).exp(),
                core_radius: None,
                regime: Regime::QuiescentOnly,
            }
        })
        .collect();
    let final_radius = samples.last().expect("n >= 1").radius;
    let converged_to = (final_radius.abs() <= cfg.conv_tol).then_some(0.0);
    Trajectory {
        samples,
        transitions: Vec::new(),
        converged_to,
    }
}

fn refine_label_crossing(
    step: &crate::ode::DenseStep<1>,
    r_c: f64,
    tol: f64,
) -> f64 {
    let g = |t: f64| step.eval(t)[0] - r_c;
    let mut lo = step.t0;
    let mut hi = step.t1;
    let glo = g(lo);
    for _ in 0..200 {
        if (hi - lo).abs() <= tol * hi.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid).signum() == glo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Time at which the tumor switches between the one- and two-layer states.
///
/// * supply strictly between quiescence and the threshold, initial radius
///   above critical: the core vanishes at a unique finite time;
/// * supply above the threshold, initial radius below critical: the core
///   forms at a unique finite time;
/// * any other combination: no crossing (`None`).
pub fn transition_time(
    params: &ModelParams,
    r0: f64,
    cfg: &SolverConfig,
) -> Result<Option<f64>> {
    if params.sigma_bar <= params.sigma_q {
        return Err(SolverError::InvalidParams(
            "transition detection needs supply above the quiescence threshold".into(),
        ));
    }
    let r_c = critical_radius(params, cfg)?;
    let f_at_rc = growth_rate_given_rc(params, r_c, r_c, cfg)?;

    let expected_downward = f_at_rc < 0.0 && r0 > r_c;
    let expected_upward = f_at_rc > 0.0 && r0 < r_c;
    if !expected_downward && !expected_upward {
        return Ok(None);
    }
    // while the radius stays on the initial side of critical, |F| >= |F(R_c)|,
    // so the crossing happens within log(r0/r_c)/|F(R_c)| either way
    let bound = (r0 / r_c).ln().abs() / f_at_rc.abs();
    let horizon = 1.2 * bound + 1.0;
    let trajectory = evolve(params, r0, horizon, cfg)?;
    Ok(trajectory.transitions.first().map(|tr| tr.t))
}
