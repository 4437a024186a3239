//! Adaptive embedded Runge-Kutta integration with dense output.
//!
//! The pair is Dormand-Prince 5(4) with the classical quartic interpolant,
//! which is what the shooting stages need: accepted steps carry their own
//! interpolation coefficients so boundary crossings can be refined and
//! profiles densified without re-integrating.

use crate::error::{Result, SolverError};

const A21: f64 = 0.2;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const C2: f64 = 0.2;
const C3: f64 = 0.3;
const C4: f64 = 0.8;
const C5: f64 = 8.0 / 9.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One accepted step together with its dense-output coefficients.
#[derive(Debug, Clone)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    cont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    /// Interpolated state at `t`, valid for `t` within `[t0, t1]`.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let h = self.t1 - self.t0;
        let theta = if h == 0.0 { 0.0 } else { (t - self.t0) / h };
        let theta1 = 1.0 - theta;
        let mut y = [0.0; N];
        #[allow(clippy::needless_range_loop)]
        for i in 0..N {
            y[i] = self.cont[0][i]
                + theta
                    * (self.cont[1][i]
                        + theta1
                            * (self.cont[2][i]
                                + theta * (self.cont[3][i] + theta1 * self.cont[4][i])));
        }
        y
    }
}

/// Result of a forward integration: the end state plus every accepted step.
#[derive(Debug, Clone)]
pub struct IvpSolution<const N: usize> {
    pub steps: Vec<DenseStep<N>>,
    pub t_end: f64,
    pub y_end: [f64; N],
}

impl<const N: usize> IvpSolution<N> {
    pub fn t_start(&self) -> f64 {
        self.steps.first().map_or(self.t_end, |s| s.t0)
    }

    /// Interpolated state at `t` within the integrated span.
    pub fn eval(&self, t: f64) -> [f64; N] {
        if self.steps.is_empty() {
            return self.y_end;
        }
        let idx = self
            .steps
            .partition_point(|s| s.t1 < t)
            .min(self.steps.len() - 1);
        self.steps[idx].eval(t)
    }
}

/// Outcome of `integrate_until`: either the horizon was reached or the
/// monitored component crossed its target inside some step.
#[derive(Debug, Clone)]
pub enum StopReason<const N: usize> {
    HorizonReached,
    Crossed { t: f64, y: [f64; N] },
}

/// Dormand-Prince 5(4) driver. Tolerances apply per component, scaled by
/// `atol + rtol * |y|`.
#[derive(Debug, Clone)]
pub struct Integrator {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Integrator {
    pub fn new(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            max_steps: 500_000,
        }
    }

    /// Integrate from `t0` to `t1` (forward only).
    pub fn integrate<const N: usize, F>(
        &self,
        f: F,
        t0: f64,
        y0: [f64; N],
        t1: f64,
    ) -> Result<IvpSolution<N>>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let (sol, reason) = self.drive(f, t0, y0, t1, |_, _| false)?;
        debug_assert!(matches!(reason, StopReason::HorizonReached));
        Ok(sol)
    }

    /// Integrate until component `comp` crosses `target` from below, or until
    /// `t_max`. The crossing is refined on the dense output of the bracketing
    /// step to `refine_tol` (relative to `max(1, t)`).
    #[allow(clippy::too_many_arguments)]
    pub fn integrate_until_crossing<const N: usize, F>(
        &self,
        f: F,
        t0: f64,
        y0: [f64; N],
        t_max: f64,
        comp: usize,
        target: f64,
        refine_tol: f64,
    ) -> Result<(IvpSolution<N>, StopReason<N>)>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        if y0[comp] >= target {
            let sol = IvpSolution {
                steps: Vec::new(),
                t_end: t0,
                y_end: y0,
            };
            return Ok((sol, StopReason::Crossed { t: t0, y: y0 }));
        }
        let (mut sol, _) = self.drive(f, t0, y0, t_max, |_t, y| y[comp] >= target)?;
        if sol.y_end[comp] < target {
            return Ok((sol, StopReason::HorizonReached));
        }
        let step = sol.steps.last().expect("crossing implies a step");
        let t_cross = refine_crossing(step, comp, target, refine_tol);
        let y_cross = step.eval(t_cross);
        sol.t_end = t_cross;
        sol.y_end = y_cross;
        Ok((
            sol,
            StopReason::Crossed {
                t: t_cross,
                y: y_cross,
            },
        ))
    }

    fn drive<const N: usize, F, S>(
        &self,
        f: F,
        t0: f64,
        y0: [f64; N],
        t1: f64,
        stop: S,
    ) -> Result<(IvpSolution<N>, StopReason<N>)>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
        S: Fn(f64, &[f64; N]) -> bool,
    {
        debug_assert!(t1 >= t0, "forward integration only");
        let span = t1 - t0;
        let mut steps: Vec<DenseStep<N>> = Vec::new();
        if span == 0.0 {
            return Ok((
                IvpSolution {
                    steps,
                    t_end: t0,
                    y_end: y0,
                },
                StopReason::HorizonReached,
            ));
        }

        let mut t = t0;
        let mut y = y0;
        let mut k1 = f(t, &y);
        let mut h = initial_step(&f, t, &y, &k1, span, self.rtol, self.atol);
        let mut rejected = false;

        for _ in 0..self.max_steps {
            let h_min = 16.0 * f64::EPSILON * t.abs().max(1.0);
            if h < h_min {
                return Err(SolverError::StepFailure { t, h });
            }
            if t + h > t1 {
                h = t1 - t;
            }

            let mut y2 = [0.0; N];
            for i in 0..N {
                y2[i] = y[i] + h * A21 * k1[i];
            }
            let k2 = f(t + C2 * h, &y2);
            let mut y3 = [0.0; N];
            for i in 0..N {
                y3[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            let k3 = f(t + C3 * h, &y3);
            let mut y4 = [0.0; N];
            for i in 0..N {
                y4[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            let k4 = f(t + C4 * h, &y4);
            let mut y5 = [0.0; N];
            for i in 0..N {
                y5[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            let k5 = f(t + C5 * h, &y5);
            let mut y6 = [0.0; N];
            for i in 0..N {
                y6[i] = y[i]
                    + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            let k6 = f(t + h, &y6);
            let mut y_new = [0.0; N];
            for i in 0..N {
                y_new[i] =
                    y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
            }
            let k7 = f(t + h, &y_new);

            let mut err = 0.0;
            for i in 0..N {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i]);
                let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                err += (e / sc) * (e / sc);
            }
            err = (err / N as f64).sqrt();

            if err <= 1.0 {
                // accepted (NaN errors compare false and fall through to rejection)
                let mut cont = [[0.0; N]; 5];
                for i in 0..N {
                    let dy = y_new[i] - y[i];
                    let bspl = h * k1[i] - dy;
                    cont[0][i] = y[i];
                    cont[1][i] = dy;
                    cont[2][i] = bspl;
                    cont[3][i] = dy - h * k7[i] - bspl;
                    cont[4][i] = h
                        * (D1 * k1[i]
                            + D3 * k3[i]
                            + D4 * k4[i]
                            + D5 * k5[i]
                            + D6 * k6[i]
                            + D7 * k7[i]);
                }
                steps.push(DenseStep {
                    t0: t,
                    t1: t + h,
                    cont,
                });
                t += h;
                y = y_new;
                k1 = k7;

                if stop(t, &y) {
                    return Ok((
                        IvpSolution {
                            steps,
                            t_end: t,
                            y_end: y,
                        },
                        StopReason::Crossed { t, y },
                    ));
                }
                if t >= t1 {
                    return Ok((
                        IvpSolution {
                            steps,
                            t_end: t,
                            y_end: y,
                        },
                        StopReason::HorizonReached,
                    ));
                }
                let mut fac = 0.9 * err.powf(-0.2);
                fac = fac.clamp(0.2, 10.0);
                if rejected {
                    fac = fac.min(1.0);
                }
                rejected = false;
                h *= fac;
            } else {
                let fac = if err.is_finite() {
                    (0.9 * err.powf(-0.2)).clamp(0.1, 1.0).min(0.9)
                } else {
                    0.1
                };
                h *= fac;
                rejected = true;
            }
        }
        Err(SolverError::NoConvergence {
            max_iter: self.max_steps,
            context: format!("integration stalled at t = {t}"),
        })
    }
}

/// Locate `y[comp] = target` inside one accepted step by secant iteration on
/// the dense output, with bisection as the safeguard.
fn refine_crossing<const N: usize>(
    step: &DenseStep<N>,
    comp: usize,
    target: f64,
    tol: f64,
) -> f64 {
    let g = |t: f64| step.eval(t)[comp] - target;
    let mut lo = step.t0;
    let mut hi = step.t1;
    let mut glo = g(lo);
    let mut ghi = g(hi);
    if glo >= 0.0 {
        return lo;
    }
    if ghi <= 0.0 {
        return hi;
    }
    let mut t = hi;
    for _ in 0..128 {
        let width = hi - lo;
        if width <= tol * t.abs().max(1.0) {
            break;
        }
        // secant estimate, clipped away from the bracket edges
        let mut cand = hi - ghi * (hi - lo) / (ghi - glo);
        if !cand.is_finite() || cand <= lo + 0.05 * width || cand >= hi - 0.05 * width {
            cand = 0.5 * (lo + hi);
        }
        let gc = g(cand);
        t = cand;
        if gc == 0.0 {
            return cand;
        }
        if gc < 0.0 {
            lo = cand;
            glo = gc;
        } else {
            hi = cand;
            ghi = gc;
        }
    }
    0.5 * (lo + hi)
}

/// Standard starting-step estimate from the scaled norms of `y0` and `f0`.
fn initial_step<const N: usize, F>(
    f: &F,
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    span: f64,
    rtol: f64,
    atol: f64,
) -> f64
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let sc = |i: usize| atol + rtol * y0[i].abs();
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        d0 += (y0[i] / sc(i)).powi(2);
        d1 += (f0[i] / sc(i)).powi(2);
    }
    d0 = (d0 / N as f64).sqrt();
    d1 = (d1 / N as f64).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    }
    .min(span);

    let mut y1 = [0.0; N];
    for i in 0..N {
        y1[i] = y0[i] + h0 * f0[i];
    }
    let f1 = f(t0 + h0, &y1);
    let mut d2 = 0.0;
    for i in 0..N {
        d2 += ((f1[i] - f0[i]) / sc(i)).powi(2);
    }
    d2 = (d2 / N as f64).sqrt() / h0;

    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dm).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_growth_matches_closed_form() {
        let integ = Integrator::new(1e-12);
        let sol = integ
            .integrate(|_t, y: &[f64; 1]| [y[0]], 0.0, [1.0], 1.0)
            .unwrap();
        assert_relative_eq!(sol.y_end[0], 1.0f64.exp(), max_relative = 1e-10);
    }

    #[test]
    fn harmonic_oscillator_long_run() {
        let integ = Integrator::new(1e-11);
        let t_end = 10.0 * std::f64::consts::PI;
        let sol = integ
            .integrate(|_t, y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], t_end)
            .unwrap();
        assert_relative_eq!(sol.y_end[0], 1.0, max_relative = 1e-8);
        assert!(sol.y_end[1].abs() < 1e-8);
    }

    #[test]
    fn dense_output_tracks_the_solution_between_steps() {
        let integ = Integrator::new(1e-10);
        let sol = integ
            .integrate(|_t, y: &[f64; 1]| [y[0]], 0.0, [1.0], 2.0)
            .unwrap();
        for k in 0..=100 {
            let t = 2.0 * k as f64 / 100.0;
            let y = sol.eval(t)[0];
            assert_relative_eq!(y, t.exp(), max_relative = 1e-8);
        }
    }

    #[test]
    fn crossing_detection_hits_the_exact_level() {
        // y' = y, y(0) = 1 crosses y = e at t = 1.
        let integ = Integrator::new(1e-12);
        let (_, reason) = integ
            .integrate_until_crossing(
                |_t, y: &[f64; 1]| [y[0]],
                0.0,
                [1.0],
                5.0,
                0,
                1.0f64.exp(),
                1e-12,
            )
            .unwrap();
        match reason {
            StopReason::Crossed { t, .. } => assert_relative_eq!(t, 1.0, epsilon = 1e-10),
            StopReason::HorizonReached => panic!("crossing missed"),
        }
    }

    #[test]
    fn crossing_past_horizon_reports_horizon() {
        let integ = Integrator::new(1e-10);
        let (sol, reason) = integ
            .integrate_until_crossing(|_t, y: &[f64; 1]| [y[0]], 0.0, [1.0], 0.5, 0, 10.0, 1e-10)
            .unwrap();
        assert!(matches!(reason, StopReason::HorizonReached));
        assert!(sol.y_end[0] < 10.0);
    }
}
