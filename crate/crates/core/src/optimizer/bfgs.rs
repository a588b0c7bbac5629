//! Damped BFGS with a strong-Wolfe line search.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct BfgsOptions {
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
    /// Sufficient-decrease constant of the Wolfe conditions.
    pub c1: f64,
    /// Curvature constant of the Wolfe conditions.
    pub c2: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            gradient_tolerance: 1e-9,
            max_iterations: 2000,
            c1: 1e-4,
            c2: 0.9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BfgsStatus {
    /// Gradient norm dropped below the tolerance.
    Converged,
    /// Iteration budget exhausted; best point returned.
    MaxIterations,
    /// The line search could not make progress; best point returned.
    LineSearchFailed,
}

#[derive(Clone, Debug)]
pub struct BfgsResult {
    pub x: DVector<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub status: BfgsStatus,
}

/// Minimizes `f` from `x0`.
///
/// Maintains the inverse Hessian approximation `H` and applies the damped
/// update: with `B s` obtained by solving `H q = s`, the secant vector `y`
/// is blended toward `B s` whenever `sᵀy < 0.2 sᵀB s`, which keeps `H`
/// positive definite. The line search targets the strong Wolfe conditions
/// with cubic-interpolation zooming and falls back to plain backtracking.
pub fn bfgs_minimize<F>(
    mut f: F,
    x0: DVector<f64>,
    opts: &BfgsOptions,
) -> Result<BfgsResult>
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
{
    let n = x0.len();
    let mut x = x0;
    let (mut fx, mut g) = f(&x);
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(
            "objective or gradient non-finite at the starting point".into(),
        ));
    }
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut status = BfgsStatus::MaxIterations;
    let mut iterations = 0;

    for k in 0..opts.max_iterations {
        iterations = k;
        let gnorm = g.norm();
        if gnorm <= opts.gradient_tolerance {
            status = BfgsStatus::Converged;
            break;
        }

        let mut d = -(&h * &g);
        if g.dot(&d) >= 0.0 {
            // Lost positive definiteness to round-off: restart from steepest descent.
            h = DMatrix::identity(n, n);
            d = -g.clone();
        }

        let ls = line_search(&mut f, &x, fx, &g, &d, opts);
        let Some((alpha, f_new, g_new)) = ls else {
            status = BfgsStatus::LineSearchFailed;
            break;
        };

        let s = alpha * &d;
        let y = &g_new - &g;

        if k == 0 {
            // Scale the initial inverse Hessian to the first secant pair.
            let sy = s.dot(&y);
            let yy = y.dot(&y);
            if sy > 0.0 && yy > 0.0 {
                let scale = (sy / yy).clamp(1e-6, 1e6);
                h = DMatrix::identity(n, n) * scale;
            }
        }

        // Damped update.
        let bs = h
            .clone()
            .lu()
            .solve(&s)
            .unwrap_or_else(|| s.clone());
        let s_bs = s.dot(&bs).max(1e-300);
        let sy = s.dot(&y);
        let y_eff = if sy < 0.2 * s_bs {
            let theta = 0.8 * s_bs / (s_bs - sy);
            theta * &y + (1.0 - theta) * &bs
        } else {
            y.clone()
        };
        let sy_eff = s.dot(&y_eff);
        if sy_eff > 1e-14 * s.norm() * y_eff.norm().max(1e-300) {
            let rho = 1.0 / sy_eff;
            let hy = &h * &y_eff;
            let yhy = y_eff.dot(&hy);
            // H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ, expanded.
            let hy_s = &hy * s.transpose();
            h -= rho * (&hy_s + hy_s.transpose());
            h += (rho * rho * yhy + rho) * (&s * s.transpose());
            // Symmetrize against drift.
            h = (&h + h.transpose()) * 0.5;
        }

        x += &s;
        fx = f_new;
        g = g_new;
    }

    if status == BfgsStatus::MaxIterations && g.norm() <= opts.gradient_tolerance {
        status = BfgsStatus::Converged;
    }
    Ok(BfgsResult {
        gradient_norm: g.norm(),
        x,
        value: fx,
        iterations: iterations + 1,
        status,
    })
}

/// Strong-Wolfe line search (bracket + zoom). Returns `(α, f(x+αd), ∇f(x+αd))`.
fn line_search<F>(
    f: &mut F,
    x: &DVector<f64>,
    f0: f64,
    g0: &DVector<f64>,
    d: &DVector<f64>,
    opts: &BfgsOptions,
) -> Option<(f64, f64, DVector<f64>)>
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
{
    let slope0 = g0.dot(d);
    if !(slope0 < 0.0) {
        return None;
    }
    let mut alpha_prev = 0.0;
    let mut f_prev = f0;
    let mut slope_prev = slope0;
    let mut alpha = 1.0;
    let alpha_max = 1e6;

    for i in 0..25 {
        let xt = x + alpha * d;
        let (ft, gt) = f(&xt);
        let slope_t = gt.dot(d);
        let finite = ft.is_finite() && gt.iter().all(|v| v.is_finite());

        if !finite || ft > f0 + opts.c1 * alpha * slope0 || (i > 0 && ft >= f_prev) {
            return zoom(
                f, x, f0, slope0, d, opts, alpha_prev, alpha, f_prev, ft, slope_prev,
            );
        }
        if slope_t.abs() <= -opts.c2 * slope0 {
            return Some((alpha, ft, gt));
        }
        if slope_t >= 0.0 {
            return zoom(f, x, f0, slope0, d, opts, alpha, alpha_prev, ft, f_prev, slope_t);
        }
        alpha_prev = alpha;
        f_prev = ft;
        slope_prev = slope_t;
        alpha = (2.0 * alpha).min(alpha_max);
    }
    backtracking(f, x, f0, slope0, d, opts)
}

#[allow(clippy::too_many_arguments)]
fn zoom<F>(
    f: &mut F,
    x: &DVector<f64>,
    f0: f64,
    slope0: f64,
    d: &DVector<f64>,
    opts: &BfgsOptions,
    mut lo: f64,
    mut hi: f64,
    mut f_lo: f64,
    mut f_hi: f64,
    mut slope_lo: f64,
) -> Option<(f64, f64, DVector<f64>)>
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
{
    for _ in 0..30 {
        if (hi - lo).abs() < 1e-16 * (1.0 + lo.abs()) {
            break;
        }
        // Quadratic interpolation on [lo, hi]; fall back to bisection.
        let mut alpha = {
            let denom = 2.0 * (f_hi - f_lo - slope_lo * (hi - lo));
            if denom.abs() > 1e-300 && f_hi.is_finite() {
                lo - slope_lo * (hi - lo) * (hi - lo) / denom
            } else {
                0.5 * (lo + hi)
            }
        };
        let (a, b) = if lo < hi { (lo, hi) } else { (hi, lo) };
        if !(alpha.is_finite()) || alpha <= a + 0.1 * (b - a) || alpha >= b - 0.1 * (b - a) {
            alpha = 0.5 * (lo + hi);
        }

        let xt = x + alpha * d;
        let (ft, gt) = f(&xt);
        let slope_t = gt.dot(d);
        let finite = ft.is_finite() && gt.iter().all(|v| v.is_finite());

        if !finite || ft > f0 + opts.c1 * alpha * slope0 || ft >= f_lo {
            hi = alpha;
            f_hi = ft;
        } else {
            if slope_t.abs() <= -opts.c2 * slope0 {
                return Some((alpha, ft, gt));
            }
            if slope_t * (hi - lo) >= 0.0 {
                hi = lo;
                f_hi = f_lo;
            }
            lo = alpha;
            f_lo = ft;
            slope_lo = slope_t;
        }
    }
    backtracking(f, x, f0, slope0, d, opts)
}

/// Armijo backtracking rescue; accepts the first sufficient decrease.
fn backtracking<F>(
    f: &mut F,
    x: &DVector<f64>,
    f0: f64,
    slope0: f64,
    d: &DVector<f64>,
    opts: &BfgsOptions,
) -> Option<(f64, f64, DVector<f64>)>
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
{
    let mut alpha = 1.0;
    for _ in 0..60 {
        let xt = x + alpha * d;
        let (ft, gt) = f(&xt);
        if ft.is_finite()
            && gt.iter().all(|v| v.is_finite())
            && ft <= f0 + opts.c1 * alpha * slope0
        {
            return Some((alpha, ft, gt));
        }
        alpha *= 0.5;
        if alpha < 1e-20 {
            break;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn quadratic_bowl() {
        let c = dvector![3.0, -1.0, 0.5];
        let f = |x: &DVector<f64>| {
            let d = x - &c;
            (d.dot(&d), 2.0 * d)
        };
        let res = bfgs_minimize(f, dvector![10.0, 10.0, -4.0], &BfgsOptions::default()).unwrap();
        assert_eq!(res.status, BfgsStatus::Converged);
        assert!((res.x - c).norm() < 1e-8);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &DVector<f64>| {
            let (a, b) = (1.0, 100.0);
            let v = (a - x[0]).powi(2) + b * (x[1] - x[0] * x[0]).powi(2);
            let g = dvector![
                -2.0 * (a - x[0]) - 4.0 * b * (x[1] - x[0] * x[0]) * x[0],
                2.0 * b * (x[1] - x[0] * x[0])
            ];
            (v, g)
        };
        let opts = BfgsOptions {
            gradient_tolerance: 1e-10,
            max_iterations: 500,
            ..Default::default()
        };
        let res = bfgs_minimize(f, dvector![-1.2, 1.0], &opts).unwrap();
        assert!(
            (res.x[0] - 1.0).abs() < 1e-6 && (res.x[1] - 1.0).abs() < 1e-6,
            "reached {:?} after {} iterations",
            res.x,
            res.iterations
        );
    }

    #[test]
    fn constant_function_terminates_immediately() {
        let f = |x: &DVector<f64>| (4.0, DVector::zeros(x.len()));
        let res = bfgs_minimize(f, dvector![1.0, 2.0], &BfgsOptions::default()).unwrap();
        assert_eq!(res.status, BfgsStatus::Converged);
        assert_eq!(res.gradient_norm, 0.0);
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let f = |_: &DVector<f64>| (f64::NAN, dvector![0.0]);
        assert!(bfgs_minimize(f, dvector![0.0], &BfgsOptions::default()).is_err());
    }
}
