//! Scalar root finding and one-dimensional minimization.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimError {
    #[error("no sign change found while expanding the bracket up to |x| = {limit}")]
    NoBracket { limit: f64 },
    #[error("root finder did not converge after {iterations} iterations (bracket [{lo}, {hi}])")]
    NotConverged { iterations: usize, lo: f64, hi: f64 },
    #[error("objective is not finite at x = {x}")]
    NonFinite { x: f64 },
}

/// Expands `[start - step, start + step]` geometrically until `f` changes sign.
///
/// Returns a bracket `(lo, hi)` with `f(lo) <= 0 <= f(hi)` or the reverse.
pub fn expand_bracket<T, F>(mut f: F, start: T, step: T, limit: T) -> Result<(T, T), OptimError>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let f0 = f(start);
    if f0 == T::zero() {
        return Ok((start, start));
    }
    let mut width = step;
    while width <= limit * T::lit(2.0) {
        let w = width.min(limit);
        for cand in [start + w, start - w] {
            let fc = f(cand);
            if fc.is_nan() {
                continue;
            }
            if fc.signum() != f0.signum() || fc == T::zero() {
                return Ok(if cand > start { (start, cand) } else { (cand, start) });
            }
        }
        if w >= limit {
            break;
        }
        width = width * T::lit(2.0);
    }
    Err(OptimError::NoBracket { limit: limit.as_f64() })
}

/// Newton's method safeguarded by bisection on a sign-change bracket.
///
/// `fdf` returns the function value and its derivative.
pub fn newton_bisect<T, F>(mut fdf: F, lo: T, hi: T, xtol: T, max_iter: usize) -> Result<T, OptimError>
where
    T: Scalar,
    F: FnMut(T) -> (T, T),
{
    let (flo, _) = fdf(lo);
    let (fhi, _) = fdf(hi);
    if flo == T::zero() {
        return Ok(lo);
    }
    if fhi == T::zero() {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(OptimError::NoBracket { limit: hi.abs().max(lo.abs()).as_f64() });
    }
    // orient so that f(neg) < 0 < f(pos)
    let (mut neg, mut pos) = if flo < T::zero() { (lo, hi) } else { (hi, lo) };
    let half = T::lit(0.5);
    let mut x = half * (lo + hi);
    for _ in 0..max_iter {
        let (fx, dfx) = fdf(x);
        if !fx.is_finite() {
            return Err(OptimError::NonFinite { x: x.as_f64() });
        }
        if fx == T::zero() {
            return Ok(x);
        }
        if fx < T::zero() {
            neg = x;
        } else {
            pos = x;
        }
        let (a, b) = if neg < pos { (neg, pos) } else { (pos, neg) };
        let mut next = x - fx / dfx;
        if !next.is_finite() || next <= a || next >= b {
            next = half * (a + b);
        }
        let step = (next - x).abs();
        x = next;
        if step <= xtol || (b - a) <= xtol {
            return Ok(x);
        }
    }
    Err(OptimError::NotConverged {
        iterations: max_iter,
        lo: neg.min(pos).as_f64(),
        hi: neg.max(pos).as_f64(),
    })
}

/// Plain bisection for a nondecreasing function: finds `x` in `[lo, hi]`
/// with `f(x) ≈ target`.
pub fn bisect_monotone<T, F>(mut f: F, target: T, lo: T, hi: T, xtol: T, max_iter: usize) -> Result<T, OptimError>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let (mut a, mut b) = (lo, hi);
    let half = T::lit(0.5);
    for _ in 0..max_iter {
        let m = half * (a + b);
        if b - a <= xtol {
            return Ok(m);
        }
        let fm = f(m);
        if fm.is_nan() {
            return Err(OptimError::NonFinite { x: m.as_f64() });
        }
        if fm < target {
            a = m;
        } else {
            b = m;
        }
    }
    if b - a <= xtol * T::lit(4.0) {
        return Ok(half * (a + b));
    }
    Err(OptimError::NotConverged { iterations: max_iter, lo: a.as_f64(), hi: b.as_f64() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum<T> {
    pub x: T,
    pub fx: T,
    pub evaluations: usize,
}

/// Brent's minimization on `[a, b]` (golden section with parabolic steps).
pub fn brent_minimize<T, F>(mut f: F, a: T, b: T, tol: T, max_iter: usize) -> Minimum<T>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let golden = T::lit(0.381_966_011_250_105_1);
    let eps = T::epsilon().sqrt();
    let half = T::lit(0.5);
    let (mut a, mut b) = if a < b { (a, b) } else { (b, a) };
    let mut x = a + golden * (b - a);
    let mut w = x;
    let mut v = x;
    let guard = |y: T| if y.is_nan() { T::infinity() } else { y };
    let mut fx = guard(f(x));
    let mut fw = fx;
    let mut fv = fx;
    let mut d = T::zero();
    let mut e = T::zero();
    let mut evals = 1;
    for _ in 0..max_iter {
        let xm = half * (a + b);
        let tol1 = eps * x.abs() + tol / T::lit(3.0);
        let tol2 = T::lit(2.0) * tol1;
        if (x - xm).abs() <= tol2 - half * (b - a) {
            break;
        }
        let mut use_golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = T::lit(2.0) * (q - r);
            if q > T::zero() {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() < (half * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if xm >= x { tol1 } else { -tol1 };
                }
                use_golden = false;
            }
        }
        if use_golden {
            e = if x >= xm { a - x } else { b - x };
            d = golden * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > T::zero() {
            x + tol1
        } else {
            x - tol1
        };
        let fu = guard(f(u));
        evals += 1;
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Minimum { x, fx, evaluations: evals }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_parabola_minimum() {
        let m = brent_minimize(|x: f64| (x - 1.234).powi(2) + 3.0, -10.0, 10.0, 1e-10, 200);
        assert!((m.x - 1.234).abs() < 1e-7);
        assert!((m.fx - 3.0).abs() < 1e-12);
    }

    #[test]
    fn brent_on_monotone_objective_ends_at_the_edge() {
        let m = brent_minimize(|x: f64| x, 0.0, 1.0, 1e-10, 200);
        assert!(m.x < 1e-6);
    }

    #[test]
    fn newton_bisect_solves_cubic() {
        let root = newton_bisect(|x: f64| (x * x * x - 2.0, 3.0 * x * x), 0.0, 3.0, 1e-15, 100).unwrap();
        assert!((root - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn bracket_expansion_and_failure() {
        let (lo, hi) = expand_bracket(|x: f64| x - 37.0, 0.0, 1.0, 1e4).unwrap();
        assert!(lo <= 37.0 && hi >= 37.0);
        let err = expand_bracket(|x: f64| x * x + 1.0, 0.0, 1.0, 1e4).unwrap_err();
        assert!(matches!(err, OptimError::NoBracket { .. }));
    }

    #[test]
    fn bisection_inverts_monotone_map() {
        let x = bisect_monotone(|x: f64| x.powi(3), 0.125, 0.0, 1.0, 1e-12, 200).unwrap();
        assert!((x - 0.5).abs() < 1e-11);
    }
}
