use serde::{Deserialize, Serialize};

/// Tolerances and caps shared by every solver operation.
///
/// All tolerances must be positive. `r_max` is an optional override for the
/// integration cap of the shell shoot; when `None` each shoot derives
/// `rho + 20 (sigma_bar - sigmaQ) / max(f(sigmaQ), tiny) + 10`, a generous
/// cap under the guaranteed blow-up of the shell solution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Relative/absolute tolerance of the adaptive integrator.
    pub ode_tol: f64,
    /// Residual tolerance for the quiescent-core boundary value problem.
    pub bvp_tol: f64,
    /// Refinement tolerance for boundary-crossing and transition events.
    pub event_tol: f64,
    /// Tolerance on the growth functional at a reported stationary radius.
    pub root_tol: f64,
    /// Trajectory-to-stationary convergence tolerance.
    pub conv_tol: f64,
    /// Radius below which the regularized near-origin expansion is used.
    pub origin_cutoff: f64,
    /// Optional integration cap for the shell shoot; `None` uses the heuristic.
    pub r_max: Option<f64>,
    /// Largest radius probed while bracketing stationary radii.
    pub r_cap: f64,
    /// Largest supply level probed while bracketing the threshold.
    pub sigma_cap: f64,
    /// Iteration cap for the bisection loops.
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            ode_tol: 1e-10,
            bvp_tol: 1e-9,
            event_tol: 1e-10,
            root_tol: 1e-9,
            conv_tol: 1e-6,
            origin_cutoff: 1e-6,
            r_max: None,
            r_cap: 1e3,
            sigma_cap: 1e6,
            max_iter: 200,
        }
    }
}

impl SolverConfig {
    /// Effective near-origin cutoff for a core of radius `rho`.
    pub(crate) fn origin_cutoff_for(&self, rho: f64) -> f64 {
        self.origin_cutoff.max(1e-3 * rho)
    }

    /// Integration cap for a shell shoot starting at `rho`.
    pub(crate) fn r_max_for(&self, rho: f64, sigma_bar: f64, sigma_q: f64, f_at_q: f64) -> f64 {
        self.r_max
            .unwrap_or_else(|| rho + 20.0 * (sigma_bar - sigma_q) / f_at_q.max(1e-12) + 10.0)
    }
}
