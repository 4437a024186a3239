//! Composite and adaptive Simpson quadrature.

use crate::ode::IvpSolution;

/// Composite Simpson rule on `[a, b]` with `n` (even) subintervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    assert!(n >= 2 && n.is_multiple_of(2), "simpson needs an even interval count");
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// Adaptive Simpson with the Lyness error criterion; exact for cubics.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        m: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(&f, a, m, b, fa, fm, fb, whole, tol, 48)
}

/// Grid over the accepted steps of `sol`, each step subdivided so the whole
/// span carries at least `min_points` nodes and every step an even number of
/// subintervals (Simpson-ready). Returns strictly increasing radii.
pub fn step_grid<const N: usize>(sol: &IvpSolution<N>, min_points: usize) -> Vec<f64> {
    let t_start = sol.t_start();
    let total = sol.t_end - t_start;
    if sol.steps.is_empty() || total <= 0.0 {
        return vec![t_start];
    }
    let mut grid = Vec::with_capacity(min_points + 4 * sol.steps.len());
    grid.push(t_start);
    for step in &sol.steps {
        let t1 = step.t1.min(sol.t_end);
        let len = t1 - step.t0;
        if len <= 0.0 {
            continue;
        }
        let want = (min_points as f64 * len / total).ceil() as usize;
        let mut k = want.max(4);
        if k % 2 == 1 {
            k += 1;
        }
        for j in 1..=k {
            grid.push(step.t0 + len * j as f64 / k as f64);
        }
    }
    grid
}

/// Composite Simpson of `g(t, y(t))` over the step grid of `sol`.
///
/// Integration runs per accepted step (always an even number of
/// subintervals), so the result inherits the integrator's resolution of any
/// boundary layer.
pub fn integrate_over_solution<const N: usize, G>(
    sol: &IvpSolution<N>,
    min_points: usize,
    g: G,
) -> f64
where
    G: Fn(f64, &[f64; N]) -> f64,
{
    let t_start = sol.t_start();
    let total = sol.t_end - t_start;
    if sol.steps.is_empty() || total <= 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for step in &sol.steps {
        let t1 = step.t1.min(sol.t_end);
        let len = t1 - step.t0;
        if len <= 0.0 {
            continue;
        }
        let want = (min_points as f64 * len / total).ceil() as usize;
        let mut k = want.max(4);
        if k % 2 == 1 {
            k += 1;
        }
        let eval = |t: f64| g(t, &step.eval(t));
        acc += simpson(eval, step.t0, t1, k);
    }
    acc
}
