//! Model parameters, rate functions, and assumption validation.
//!
//! A model is five scalar constants plus three strictly increasing rates:
//! `f` (nutrient consumption by proliferating cells), `h` (consumption by
//! quiescent cells), and `g` (net proliferation). The solvers assume
//!
//! * `f` and `h` vanish at `sigma0` and increase from there, with
//!   `f(sigmaQ) >= h(sigmaQ)`;
//! * `g` increases and has its unique zero at `sigmaTilde`;
//! * `0 <= sigma0 < sigmaQ < sigmaTilde` and `g(sigmaQ) + nu >= 0`.
//!
//! `h` identically zero is accepted as a degenerate "necrotic mode" (the
//! core consumes nothing) and flagged in the validation report instead of
//! being rejected, since the vanishing-consumption limit needs it.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A scalar rate function of the nutrient concentration.
#[derive(Clone)]
pub enum RateSpec {
    /// `slope * (sigma - zero_at)`.
    Linear { slope: f64, zero_at: f64 },
    /// Monotone piecewise-linear interpolation through `(sigma, value)`
    /// points, extrapolated linearly beyond the end segments.
    Table { points: Vec<(f64, f64)> },
    /// Arbitrary evaluator with its derivative; the derivative is only used
    /// to cross-check monotonicity at validation time.
    Custom {
        evaluator: ScalarFn,
        derivative: ScalarFn,
    },
}

impl std::fmt::Debug for RateSpec {
    fn fmt(&self, fmt: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RateSpec::Linear { slope, zero_at } => fmt
                .debug_struct("Linear")
                .field("slope", slope)
                .field("zero_at", zero_at)
                .finish(),
            RateSpec::Table { points } => {
                fmt.debug_struct("Table").field("points", points).finish()
            }
            RateSpec::Custom { .. } => fmt.write_str("Custom {{ .. }}"),
        }
    }
}

impl RateSpec {
    pub fn linear(slope: f64, zero_at: f64) -> Self {
        RateSpec::Linear { slope, zero_at }
    }

    pub fn custom<F, D>(evaluator: F, derivative: D) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        RateSpec::Custom {
            evaluator: Arc::new(evaluator),
            derivative: Arc::new(derivative),
        }
    }

    /// Evaluate the rate at `sigma`.
    pub fn eval(&self, sigma: f64) -> f64 {
        match self {
            RateSpec::Linear { slope, zero_at } => slope * (sigma - zero_at),
            RateSpec::Table { points } => eval_table(points, sigma),
            RateSpec::Custom { evaluator, .. } => evaluator(sigma),
        }
    }

    /// Derivative of the rate at `sigma`.
    pub fn derivative(&self, sigma: f64) -> f64 {
        match self {
            RateSpec::Linear { slope, .. } => *slope,
            RateSpec::Table { points } => table_slope(points, sigma),
            RateSpec::Custom { derivative, .. } => derivative(sigma),
        }
    }

    /// Same rate scaled by a constant factor (used for vanishing-consumption
    /// sweeps of `h`).
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            RateSpec::Linear { slope, zero_at } => RateSpec::Linear {
                slope: slope * factor,
                zero_at: *zero_at,
            },
            RateSpec::Table { points } => RateSpec::Table {
                points: points.iter().map(|&(s, v)| (s, v * factor)).collect(),
            },
            RateSpec::Custom {
                evaluator,
                derivative,
            } => {
                let e = Arc::clone(evaluator);
                let d = Arc::clone(derivative);
                RateSpec::Custom {
                    evaluator: Arc::new(move |s| factor * e(s)),
                    derivative: Arc::new(move |s| factor * d(s)),
                }
            }
        }
    }

    /// Whether the rate vanishes identically on `[lo, hi]` (exact for
    /// `Linear` and `Table`, sampled for `Custom`).
    pub fn is_identically_zero(&self, lo: f64, hi: f64) -> bool {
        match self {
            RateSpec::Linear { slope, .. } => *slope == 0.0,
            RateSpec::Table { points } => points.iter().all(|&(_, v)| v == 0.0),
            RateSpec::Custom { evaluator, .. } => (0..=64)
                .map(|k| lo + (hi - lo) * k as f64 / 64.0)
                .all(|s| evaluator(s) == 0.0),
        }
    }
}

fn eval_table(points: &[(f64, f64)], sigma: f64) -> f64 {
    let n = points.len();
    if n == 1 {
        return points[0].1;
    }
    let seg = match points.iter().position(|&(s, _)| sigma < s) {
        Some(0) => 0,
        Some(i) => i - 1,
        None => n - 2,
    };
    let (s0, v0) = points[seg];
    let (s1, v1) = points[seg + 1];
    v0 + (v1 - v0) * (sigma - s0) / (s1 - s0)
}

fn table_slope(points: &[(f64, f64)], sigma: f64) -> f64 {
    let n = points.len();
    if n == 1 {
        return 0.0;
    }
    let seg = match points.iter().position(|&(s, _)| sigma < s) {
        Some(0) => 0,
        Some(i) => i - 1,
        None => n - 2,
    };
    let (s0, v0) = points[seg];
    let (s1, v1) = points[seg + 1];
    (v1 - v0) / (s1 - s0)
}

/// All scalar constants of the model plus the three rate functions.
#[derive(Debug, Clone)]
pub struct ModelParams {
    /// Concentration at which consumption vanishes.
    pub sigma0: f64,
    /// Quiescence threshold: cells below it stop proliferating.
    pub sigma_q: f64,
    /// Zero of the proliferation rate `g`.
    pub sigma_tilde: f64,
    /// Supply level held at the tumor surface.
    pub sigma_bar: f64,
    /// Removal rate of quiescent cells.
    pub nu: f64,
    pub f: RateSpec,
    pub h: RateSpec,
    pub g: RateSpec,
}

impl ModelParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        sigma0: f64,
        sigma_q: f64,
        sigma_tilde: f64,
        sigma_bar: f64,
        nu: f64,
        f: RateSpec,
        h: RateSpec,
        g: RateSpec,
    ) -> Self {
        Self {
            sigma0,
            sigma_q,
            sigma_tilde,
            sigma_bar,
            nu,
            f,
            h,
            g,
        }
    }

    /// All-linear preset: `f = sigma`, `h = lambda * sigma`,
    /// `g = mu * (sigma - sigma_tilde)`, with `sigma0 = 0` and `sigmaQ = 1`.
    pub fn linear_preset(lambda: f64, mu: f64, sigma_tilde: f64, sigma_bar: f64, nu: f64) -> Self {
        Self::new(
            0.0,
            1.0,
            sigma_tilde,
            sigma_bar,
            nu,
            RateSpec::linear(1.0, 0.0),
            RateSpec::linear(lambda, 0.0),
            RateSpec::linear(mu, sigma_tilde),
        )
    }

    pub fn eval_f(&self, sigma: f64) -> f64 {
        self.f.eval(sigma)
    }

    pub fn eval_h(&self, sigma: f64) -> f64 {
        self.h.eval(sigma)
    }

    pub fn eval_g(&self, sigma: f64) -> f64 {
        self.g.eval(sigma)
    }

    /// Upper end of the concentration range the solvers may probe: the
    /// supply level plus one full span (shell shoots overshoot the surface
    /// value while the crossing is bracketed).
    pub fn sigma_probe_max(&self) -> f64 {
        self.sigma_bar + (self.sigma_bar - self.sigma0)
    }

    /// Whether the quiescent consumption vanishes identically.
    pub fn h_is_zero(&self) -> bool {
        self.h.is_identically_zero(self.sigma0, self.sigma_probe_max())
    }

    /// Same model with the quiescent consumption scaled by `factor`.
    pub fn with_h_scaled(&self, factor: f64) -> Self {
        let mut params = self.clone();
        params.h = self.h.scaled(factor);
        params
    }

    /// Load from a TOML string (keys `sigma0`, `sigmaQ`, `sigmaTilde`,
    /// `sigmaBar`, `nu`, and rate tables `f`, `h`, `g`).
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile =
            toml::from_str(text).map_err(|e| SolverError::Config(e.to_string()))?;
        file.into_params()
    }

    pub fn from_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            SolverError::Config(format!("{}: {e}", path.as_ref().display()))
        })?;
        Self::from_toml_str(&text)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    sigma0: f64,
    #[serde(rename = "sigmaQ")]
    sigma_q: f64,
    #[serde(rename = "sigmaTilde")]
    sigma_tilde: f64,
    #[serde(rename = "sigmaBar")]
    sigma_bar: f64,
    nu: f64,
    f: RateEntry,
    h: RateEntry,
    g: RateEntry,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RateEntry {
    Linear { slope: f64, zero_at: f64 },
    Table { points: Vec<[f64; 2]> },
}

impl ConfigFile {
    fn into_params(self) -> Result<ModelParams> {
        Ok(ModelParams {
            sigma0: self.sigma0,
            sigma_q: self.sigma_q,
            sigma_tilde: self.sigma_tilde,
            sigma_bar: self.sigma_bar,
            nu: self.nu,
            f: self.f.into_spec("f")?,
            h: self.h.into_spec("h")?,
            g: self.g.into_spec("g")?,
        })
    }
}

impl RateEntry {
    fn into_spec(self, name: &str) -> Result<RateSpec> {
        match self {
            RateEntry::Linear { slope, zero_at } => Ok(RateSpec::Linear { slope, zero_at }),
            RateEntry::Table { points } => {
                if points.len() < 2 {
                    return Err(SolverError::Config(format!(
                        "rate table {name} needs at least two points"
                    )));
                }
                if points.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(SolverError::Config(format!(
                        "rate table {name} must have strictly increasing sigma values"
                    )));
                }
                Ok(RateSpec::Table {
                    points: points.into_iter().map(|[s, v]| (s, v)).collect(),
                })
            }
        }
    }
}

/// One named assumption check with an optional violating sample.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub passed: bool,
    /// Concentration at which the check failed, when applicable.
    pub witness: Option<f64>,
    pub detail: String,
}

/// Outcome of [`validate_assumptions`].
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    /// Set when `h` vanishes identically; accepted, not a failure.
    pub necrotic_mode: bool,
    pub checks: Vec<AssumptionCheck>,
}

/// Check every model assumption on a uniform grid of `n_samples` points over
/// `[sigma0, sigmaBar + span]` and report each clause separately.
///
/// Errors with [`SolverError::NonFiniteEvaluation`] if any rate returns a
/// non-finite value on the grid; a failing clause is reported, not an error.
pub fn validate_assumptions(params: &ModelParams, n_samples: usize) -> Result<ValidationReport> {
    assert!(n_samples >= 2, "need at least two sample points");
    let lo = params.sigma0;
    let hi = params.sigma_probe_max();
    let grid: Vec<f64> = (0..n_samples)
        .map(|k| lo + (hi - lo) * k as f64 / (n_samples - 1) as f64)
        .collect();

    let sample = |rate: &RateSpec| -> Result<Vec<f64>> {
        let mut vals = Vec::with_capacity(grid.len());
        for &s in &grid {
            let v = rate.eval(s);
            if !v.is_finite() {
                return Err(SolverError::NonFiniteEvaluation { sigma: s });
            }
            vals.push(v);
        }
        Ok(vals)
    };
    let f_vals = sample(&params.f)?;
    let h_vals = sample(&params.h)?;
    let g_vals = sample(&params.g)?;
    let necrotic_mode = params.h_is_zero();

    let mut checks = Vec::new();
    let scale = params
        .eval_f(params.sigma_bar)
        .abs()
        .max(params.eval_g(params.sigma_bar).abs())
        .max(1.0);
    let zero_tol = 1e-12 * scale;

    let first_violation = |vals: &[f64]| -> Option<usize> {
        vals.windows(2).position(|w| w[1] <= w[0])
    };

    let mono = |name: &str, vals: &[f64]| -> AssumptionCheck {
        match first_violation(vals) {
            None => AssumptionCheck {
                name: name.to_string(),
                passed: true,
                witness: None,
                detail: String::new(),
            },
            Some(i) => AssumptionCheck {
                name: name.to_string(),
                passed: false,
                witness: Some(grid[i + 1]),
                detail: format!("not increasing between {} and {}", grid[i], grid[i + 1]),
            },
        }
    };

    checks.push(mono("A1: f strictly increasing", &f_vals));
    if necrotic_mode {
        checks.push(AssumptionCheck {
            name: "A1: h strictly increasing".into(),
            passed: true,
            witness: None,
            detail: "h vanishes identically (necrotic mode)".into(),
        });
    } else {
        checks.push(mono("A1: h strictly increasing", &h_vals));
    }

    let f0 = params.eval_f(params.sigma0);
    checks.push(AssumptionCheck {
        name: "A1: f(sigma0) = 0".into(),
        passed: f0.abs() <= zero_tol,
        witness: (f0.abs() > zero_tol).then_some(params.sigma0),
        detail: format!("f(sigma0) = {f0}"),
    });
    let h0 = params.eval_h(params.sigma0);
    checks.push(AssumptionCheck {
        name: "A1: h(sigma0) = 0".into(),
        passed: h0.abs() <= zero_tol,
        witness: (h0.abs() > zero_tol).then_some(params.sigma0),
        detail: format!("h(sigma0) = {h0}"),
    });

    let fq = params.eval_f(params.sigma_q);
    let hq = params.eval_h(params.sigma_q);
    checks.push(AssumptionCheck {
        name: "A1: f(sigmaQ) >= h(sigmaQ)".into(),
        passed: fq >= hq - zero_tol,
        witness: (fq < hq - zero_tol).then_some(params.sigma_q),
        detail: format!("f(sigmaQ) = {fq}, h(sigmaQ) = {hq}"),
    });

    checks.push(mono("A2: g strictly increasing", &g_vals));
    let g_tilde = params.eval_g(params.sigma_tilde);
    checks.push(AssumptionCheck {
        name: "A2: g(sigmaTilde) = 0".into(),
        passed: g_tilde.abs() <= zero_tol,
        witness: (g_tilde.abs() > zero_tol).then_some(params.sigma_tilde),
        detail: format!("g(sigmaTilde) = {g_tilde}"),
    });

    let ordering = 0.0 <= params.sigma0
        && params.sigma0 < params.sigma_q
        && params.sigma_q < params.sigma_tilde;
    checks.push(AssumptionCheck {
        name: "A3: 0 <= sigma0 < sigmaQ < sigmaTilde".into(),
        passed: ordering,
        witness: None,
        detail: format!(
            "sigma0 = {}, sigmaQ = {}, sigmaTilde = {}",
            params.sigma0, params.sigma_q, params.sigma_tilde
        ),
    });

    let gq_nu = params.eval_g(params.sigma_q) + params.nu;
    checks.push(AssumptionCheck {
        name: "A3: g(sigmaQ) + nu >= 0".into(),
        passed: gq_nu >= -zero_tol,
        witness: (gq_nu < -zero_tol).then_some(params.sigma_q),
        detail: format!("g(sigmaQ) + nu = {gq_nu}"),
    });

    checks.push(AssumptionCheck {
        name: "sigmaBar > sigma0".into(),
        passed: params.sigma_bar > params.sigma0,
        witness: None,
        detail: format!("sigmaBar = {}, sigma0 = {}", params.sigma_bar, params.sigma0),
    });

    for (label, rate) in [("f", &params.f), ("h", &params.h), ("g", &params.g)] {
        if let RateSpec::Custom { .. } = rate {
            checks.push(derivative_check(label, rate, &grid, scale));
        }
    }

    let passed = checks.iter().all(|c| c.passed);
    Ok(ValidationReport {
        passed,
        necrotic_mode,
        checks,
    })
}

/// Cross-check a supplied derivative against central finite differences at
/// interior grid points (relative tolerance 1e-4).
fn derivative_check(label: &str, rate: &RateSpec, grid: &[f64], scale: f64) -> AssumptionCheck {
    let span = grid[grid.len() - 1] - grid[0];
    let step = 1e-6 * span.max(1.0);
    let name = format!("{label}' matches finite differences");
    for &s in grid.iter().skip(1).take(grid.len().saturating_sub(2)) {
        let claimed = rate.derivative(s);
        let fd = (rate.eval(s + step) - rate.eval(s - step)) / (2.0 * step);
        let denom = claimed.abs().max(1e-6 * scale);
        if ((claimed - fd) / denom).abs() > 1e-4 {
            return AssumptionCheck {
                name,
                passed: false,
                witness: Some(s),
                detail: format!("claimed {claimed}, finite difference {fd}"),
            };
        }
    }
    AssumptionCheck {
        name,
        passed: true,
        witness: None,
        detail: String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn preset() -> ModelParams {
        // f = sigma, h = 0.5 sigma, g = sigma - 2, sigmaQ = 1, sigmaTilde = 2
        ModelParams::linear_preset(0.5, 1.0, 2.0, 3.0, 1.0)
    }

    #[test]
    fn linear_preset_passes_all_checks() {
        let report = validate_assumptions(&preset(), 1000).unwrap();
        assert!(report.passed, "{report:?}");
        assert!(!report.necrotic_mode);
        assert_eq!(report.checks.len(), 10);
    }

    #[test]
    fn heavier_quiescent_consumption_fails_a1() {
        let mut params = preset();
        params.h = RateSpec::linear(1.5, 0.0);
        let report = validate_assumptions(&params, 100).unwrap();
        assert!(!report.passed);
        let check = report
            .checks
            .iter()
            .find(|c| c.name == "A1: f(sigmaQ) >= h(sigmaQ)")
            .unwrap();
        assert!(!check.passed);
        assert_eq!(check.witness, Some(1.0));
    }

    #[test]
    fn removal_rate_below_proliferation_deficit_fails_a3() {
        let mut params = preset();
        params.nu = 0.5; // g(sigmaQ) + nu = -1 + 0.5 < 0
        let report = validate_assumptions(&params, 100).unwrap();
        assert!(!report.passed);
        let check = report
            .checks
            .iter()
            .find(|c| c.name == "A3: g(sigmaQ) + nu >= 0")
            .unwrap();
        assert!(!check.passed);
        assert_eq!(check.witness, Some(1.0));
    }

    #[test]
    fn vanishing_h_is_flagged_not_rejected() {
        let params = ModelParams::linear_preset(0.0, 1.0, 2.0, 3.0, 1.0);
        let report = validate_assumptions(&params, 100).unwrap();
        assert!(report.passed);
        assert!(report.necrotic_mode);
    }

    #[test]
    fn eval_rate_examples() {
        assert_eq!(RateSpec::linear(1.0, 0.0).eval(1.0), 1.0);
        assert_eq!(RateSpec::linear(1.0, 2.0).eval(2.0), 0.0);
        // h(sigmaQ) equals the norm of h for linear h
        assert_eq!(RateSpec::linear(0.5, 0.0).eval(1.0), 0.5);
    }

    #[test]
    fn rates_vanish_and_change_sign_where_required() {
        let params = preset();
        assert!(params.eval_f(params.sigma0).abs() < 1e-15);
        assert!(params.eval_h(params.sigma0).abs() < 1e-15);
        assert!(params.eval_g(params.sigma_tilde).abs() < 1e-15);
        // g changes sign exactly once on [sigma0, sigmaBar]
        let n = 1000;
        let mut flips = 0;
        let mut prev = params.eval_g(params.sigma0);
        for k in 1..=n {
            let s = params.sigma0 + (params.sigma_bar - params.sigma0) * k as f64 / n as f64;
            let v = params.eval_g(s);
            if v.signum() != prev.signum() && v != 0.0 {
                flips += 1;
            }
            prev = v;
        }
        assert_eq!(flips, 1);
    }

    #[test]
    fn table_rate_interpolates_and_extrapolates() {
        let rate = RateSpec::Table {
            points: vec![(0.0, 0.0), (1.0, 2.0), (3.0, 4.0)],
        };
        assert_relative_eq!(rate.eval(0.5), 1.0);
        assert_relative_eq!(rate.eval(2.0), 3.0);
        assert_relative_eq!(rate.eval(4.0), 5.0); // linear extension
        assert_relative_eq!(rate.eval(-1.0), -2.0);
        assert_relative_eq!(rate.derivative(0.5), 2.0);
        assert_relative_eq!(rate.derivative(2.0), 1.0);
    }

    #[test]
    fn custom_rate_with_wrong_derivative_is_caught() {
        let mut params = preset();
        params.g = RateSpec::custom(|s| s - 2.0, |_s| 3.0);
        let report = validate_assumptions(&params, 100).unwrap();
        assert!(!report.passed);
        assert!(report
            .checks
            .iter()
            .any(|c| c.name == "g' matches finite differences" && !c.passed));
    }

    #[test]
    fn non_finite_rate_is_an_error() {
        let mut params = preset();
        // the 4-point grid over [0, 6] hits the pole at sigma = 2 exactly
        params.f = RateSpec::custom(|s| 1.0 / (s - 2.0), |_| 0.0);
        let err = validate_assumptions(&params, 4);
        assert!(matches!(
            err,
            Err(SolverError::NonFiniteEvaluation { .. })
        ));
    }

    #[test]
    fn toml_config_round_trips() {
        let text = r#"
sigma0 = 0.0
sigmaQ = 1.0
sigmaTilde = 2.0
sigmaBar = 3.0
nu = 1.0

[f]
kind = "linear"
slope = 1.0
zero_at = 0.0

[h]
kind = "table"
points = [[0.0, 0.0], [4.0, 2.0]]

[g]
kind = "linear"
slope = 1.0
zero_at = 2.0
"#;
        let params = ModelParams::from_toml_str(text).unwrap();
        assert_eq!(params.sigma_bar, 3.0);
        assert_relative_eq!(params.eval_h(2.0), 1.0);
        let report = validate_assumptions(&params, 500).unwrap();
        assert!(report.passed);
    }

    #[test]
    fn bad_toml_is_a_config_error() {
        assert!(matches!(
            ModelParams::from_toml_str("sigma0 = 0.0"),
            Err(SolverError::Config(_))
        ));
        let unordered_table = r#"
sigma0 = 0.0
sigmaQ = 1.0
sigmaTilde = 2.0
sigmaBar = 3.0
nu = 1.0
[f]
kind = "table"
points = [[1.0, 1.0], [0.0, 0.0]]
[h]
kind = "linear"
slope = 0.5
zero_at = 0.0
[g]
kind = "linear"
slope = 1.0
zero_at = 2.0
"#;
        assert!(matches!(
            ModelParams::from_toml_str(unordered_table),
            Err(SolverError::Config(_))
        ));
    }

    #[test]
    fn scaled_rates_scale_pointwise() {
        let params = preset();
        let scaled = params.with_h_scaled(0.1);
        assert_relative_eq!(scaled.eval_h(1.0), 0.05);
        assert!(params.with_h_scaled(0.0).h_is_zero());
    }

    #[test]
    fn monotone_on_solver_range() {
        let params = preset();
        let lo = params.sigma0;
        let hi = params.sigma_bar;
        let n = 257;
        for rate in [&params.f, &params.h, &params.g] {
            let vals: Vec<f64> = (0..n)
                .map(|k| rate.eval(lo + (hi - lo) * k as f64 / (n - 1) as f64))
                .collect();
            assert!(vals.windows(2).all(|w| w[1] > w[0]));
        }
    }
}
