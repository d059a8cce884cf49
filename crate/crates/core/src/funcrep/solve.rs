//! Scalar solvers: fixed points, monotone inversion and bracketed roots.

use super::domain::Interval;
use super::field1::{ScalarField1D, TAIL_TOL};
use crate::error::{Error, Result};

const MAX_ITER: usize = 500;

/// Fixed point of `target` by damped fixed-point iteration started at `guess`.
///
/// Iteration stops when the residual `|T(x) - x|` drops below `tol` or stalls at
/// rounding level. A residual that keeps growing means `target` is not a
/// contraction near `guess` and yields `NoConvergence`.
pub fn solve_implicit(target: impl Fn(f64) -> f64, guess: f64, tol: f64) -> Result<f64> {
    try_solve_implicit(|x| Ok(target(x)), guess, tol)
}

/// Fallible variant of [`solve_implicit`].
pub fn try_solve_implicit(
    target: impl Fn(f64) -> Result<f64>,
    guess: f64,
    tol: f64,
) -> Result<f64> {
    let mut x = guess;
    let mut r = target(x)? - x;
    if !r.is_finite() {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual: r,
        });
    }
    let mut damping = 1.0;
    let mut growth = 0;
    let mut stall = 0;
    for it in 1..=MAX_ITER {
        if r.abs() <= tol {
            return Ok(x + r);
        }
        let x_new = x + damping * r;
        let r_new = target(x_new)? - x_new;
        if !r_new.is_finite() {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: r_new,
            });
        }
        let floor = 8.0 * f64::EPSILON * x_new.abs().max(f64::MIN_POSITIVE);
        if r_new.abs() >= r.abs() {
            if r.abs() <= floor {
                return Ok(x);
            }
            stall += 1;
            growth += 1;
            damping *= 0.5;
            if growth > 6 || stall > 12 {
                return Err(Error::NoConvergence {
                    iterations: it,
                    residual: r_new,
                });
            }
            if r_new.abs() > r.abs() {
                continue;
            }
        } else {
            growth = 0;
            damping = (damping * 2.0).min(1.0);
        }
        x = x_new;
        r = r_new;
        if r.abs() <= floor {
            return Ok(x + r);
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITER,
        residual: r,
    })
}

/// Root of a continuous function with a sign change on `[a, b]`, by Newton
/// steps safeguarded with bisection. `f` returns value and derivative.
pub fn bracketed_root(f: impl Fn(f64) -> (f64, f64), a: f64, b: f64, guess: f64) -> Result<f64> {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let flo = f(lo).0;
    let fhi = f(hi).0;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NotFound(format!("no sign change on [{lo}, {hi}]")));
    }
    let increasing = fhi > 0.0;
    let mut x = if guess > lo && guess < hi {
        guess
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..200 {
        let (v, d) = f(x);
        if v == 0.0 {
            return Ok(x);
        }
        if (v > 0.0) == increasing {
            hi = x;
        } else {
            lo = x;
        }
        let newton = x - v / d;
        let next = if d != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 2.0 * f64::EPSILON * x.abs().max(1e-300)
            || hi - lo <= 4.0 * f64::EPSILON * x.abs()
        {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Inverse of `f` restricted to `branch`, as a field on `f(branch)`.
pub fn invert_monotone(f: &ScalarField1D, branch: Interval) -> Result<ScalarField1D> {
    let df = f.derivative();
    let probe = branch.grid(8 * (f.degree() + 1) + 1);
    let slopes: Vec<f64> = probe.iter().map(|&x| df.eval(x)).collect();
    let scale = slopes.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let min_slope = slopes.iter().fold(f64::INFINITY, |m, s| m.min(s.abs()));
    let same_sign = slopes.iter().all(|s| *s > 0.0) || slopes.iter().all(|s| *s < 0.0);
    if !same_sign || min_slope <= 1e-12 * scale || scale == 0.0 {
        return Err(Error::NotMonotone {
            lo: branch.lo,
            hi: branch.hi,
            min_slope,
        });
    }
    let image = Interval::hull(f.eval(branch.lo), f.eval(branch.hi))?;
    ScalarField1D::interpolate_adaptive(
        |y| invert_point(f, y, branch),
        image,
        f.degree().max(8),
        4096,
        TAIL_TOL,
    )
}

/// Solves `f(x) = y` for `x` in `branch`, where `f` is monotone on `branch`.
pub fn invert_point(f: &ScalarField1D, y: f64, branch: Interval) -> Result<f64> {
    let (f_lo, f_hi) = (f.eval(branch.lo), f.eval(branch.hi));
    // Linear guess from the endpoint values.
    let t = ((y - f_lo) / (f_hi - f_lo)).clamp(0.0, 1.0);
    let guess = branch.lo + t * branch.len();
    let slack = 1e-13 * branch.len();
    bracketed_root(
        |x| {
            let (v, d) = f.eval_d(x);
            (v - y, d)
        },
        branch.lo - slack,
        branch.hi + slack,
        guess,
    )
}

/// Zero of `f'` inside `bracket` (the turning point of a unimodal field).
pub fn critical_point(f: &ScalarField1D, bracket: Interval) -> Result<f64> {
    let d1 = f.derivative();
    let d2 = d1.derivative();
    bracketed_root(
        |x| (d1.eval(x), d2.eval(x)),
        bracket.lo,
        bracket.hi,
        bracket.mid(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_fixed_point() {
        let x = solve_implicit(|x| 0.5 * x + 1.0, 0.0, 1e-14).unwrap();
        assert!((x - 2.0).abs() < 1e-14);
    }

    #[test]
    fn cosine_fixed_point() {
        // Oracle: plain iteration to machine precision.
        let mut x: f64 = 0.7;
        for _ in 0..400 {
            x = x.cos();
        }
        let s = solve_implicit(f64::cos, 0.7, 1e-15).unwrap();
        assert!((s - x).abs() < 1e-14);
        assert!((s - 0.7390851332).abs() < 1e-10);
    }

    #[test]
    fn doubling_is_not_a_contraction() {
        assert_eq!(solve_implicit(|x| 2.0 * x, 0.0, 1e-12).unwrap(), 0.0);
        let err = solve_implicit(|x| 2.0 * x, 0.1, 1e-12).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. }));
    }

    #[test]
    fn cube_root_inverse() {
        let dom = Interval::new(0.125, 1.0).unwrap();
        let f = ScalarField1D::interpolate(|x| x * x * x, dom, 3).unwrap();
        let g = invert_monotone(&f, Interval::new(0.5, 1.0).unwrap()).unwrap();
        assert!((g.eval(0.729) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn quadratic_branch_inverse() {
        let f = ScalarField1D::interpolate(|x| 1.0 - 1.4 * x * x, Interval::unit(), 2).unwrap();
        let g = invert_monotone(&f, Interval::new(0.01, 1.0).unwrap()).unwrap();
        // Oracle: scalar Newton on 1 - 1.4 x^2 = 0.5.
        let mut x: f64 = 0.5;
        for _ in 0..50 {
            x -= (1.0 - 1.4 * x * x - 0.5) / (-2.8 * x);
        }
        assert!((g.eval(0.5) - x).abs() < 1e-12);
        assert!((x - (5.0f64 / 14.0).sqrt()).abs() < 1e-15);
        for y in g.probe_grid() {
            assert!((f.eval(g.eval(y)) - y).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_inverse() {
        let f = ScalarField1D::identity(Interval::unit());
        let g = invert_monotone(&f, Interval::unit()).unwrap();
        for y in g.probe_grid() {
            assert!((g.eval(y) - y).abs() < 1e-14);
        }
    }

    #[test]
    fn fold_is_not_monotone() {
        let f = ScalarField1D::interpolate(|x| 1.0 - 1.4 * x * x, Interval::unit(), 2).unwrap();
        let err = invert_monotone(&f, Interval::new(-0.5, 0.5).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NotMonotone { .. }));
    }

    #[test]
    fn critical_point_of_shifted_parabola() {
        let f = ScalarField1D::interpolate(|x| 1.0 - (x - 0.2) * (x - 0.2), Interval::unit(), 2)
            .unwrap();
        let c = critical_point(&f, Interval::new(-0.5, 0.6).unwrap()).unwrap();
        assert!((c - 0.2).abs() < 1e-15);
    }
}
