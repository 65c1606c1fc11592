//! Extreme-value families through their Pickands dependence function.
//!
//! With `x = -ln u`, `y = -ln v`, `s = x + y`, `t = y / s`:
//! `C = exp(-s A(t))`, `∂C/∂u = C/u (A - t A')` and
//! `c = C/(uv) [(A - t A')(A + (1-t) A') + t(1-t) A'' / s]`.

use super::Family;
use crate::quad::{integrate, QuadConfig};
use crate::scalar::Scalar;
use crate::special::{norm_cdf, norm_pdf};

/// `(A, A', t(1-t)A'')` at `t`, with `tb = 1 - t` supplied separately so
/// that neither end loses precision.
pub(crate) fn parts<T: Scalar>(family: Family, theta: T, t: T, tb: T) -> (T, T, T) {
    let one = T::one();
    match family {
        Family::Gumbel => {
            let g = t.powf(theta) + tb.powf(theta);
            let inv = one / theta;
            let pt = t.powf(theta - one);
            let pb = tb.powf(theta - one);
            let d = pt - pb;
            let a = g.powf(inv);
            let g1 = g.powf(inv - one);
            let w = (theta - one) * (g1 * (tb * pt + t * pb) - t * tb * g.powf(inv - T::lit(2.0)) * d * d);
            (a, g1 * d, w)
        }
        Family::Galambos => {
            let k = (t.powf(theta) + tb.powf(theta)).powf(-one / theta);
            let (a, b) = (t * k, tb * k);
            let (a1, b1) = (a.powf(one + theta), b.powf(one + theta));
            let two = T::lit(2.0);
            let w = (one + theta) / k * (a.powf(theta + two) + b.powf(theta + two) - (a1 - b1) * (a1 - b1));
            (one - t * tb * k, a1 - b1, w)
        }
        Family::HuslerReiss => {
            let lam = theta;
            let half = T::lit(0.5) * lam;
            let l = t.ln() - tb.ln();
            let a = one / lam + half * l;
            let b = one / lam - half * l;
            let (pa, pb) = (norm_cdf(a), norm_cdf(b));
            (t * pa + tb * pb, pa - pb, half * (norm_pdf(a) + norm_pdf(b)))
        }
        Family::Tawn => {
            let two = T::lit(2.0);
            (one - theta * t * tb, theta * (two * t - one), two * theta * t * tb)
        }
        _ => unreachable!("not an extreme-value family"),
    }
}

pub(crate) fn pickands<T: Scalar>(family: Family, theta: T, t: T) -> T {
    if t <= T::zero() || t >= T::one() {
        return T::one();
    }
    parts(family, theta, t, T::one() - t).0
}

/// Shared coordinates for an interior point.
struct Coords<T> {
    s: T,
    t: T,
    tb: T,
}

fn coords<T: Scalar>(u: T, v: T) -> Coords<T> {
    let x = -u.ln();
    let y = -v.ln();
    let s = x + y;
    Coords { s, t: y / s, tb: x / s }
}

pub(crate) fn cdf<T: Scalar>(family: Family, theta: T, u: T, v: T) -> T {
    let c = coords(u, v);
    let (a, _, _) = parts(family, theta, c.t, c.tb);
    (-c.s * a).exp()
}

pub(crate) fn h<T: Scalar>(family: Family, theta: T, u: T, v: T) -> T {
    let c = coords(u, v);
    let (a, d1, _) = parts(family, theta, c.t, c.tb);
    let val = (-c.s * a).exp() / u * (a - c.t * d1);
    val.max(T::zero()).min(T::one())
}

pub(crate) fn ln_density<T: Scalar>(family: Family, theta: T, u: T, v: T) -> T {
    let c = coords(u, v);
    let (a, d1, w) = parts(family, theta, c.t, c.tb);
    let bracket = (a - c.t * d1) * (a + c.tb * d1) + w / c.s;
    -c.s * a - u.ln() - v.ln() + bracket.ln()
}

/// `τ = ∫₀¹ t(1-t) A''(t) / A(t) dt`.
pub(crate) fn kendall_tau<T: Scalar>(family: Family, theta: T) -> Option<T> {
    let f = |t: T| {
        let (a, _, w) = parts(family, theta, t, T::one() - t);
        w / a
    };
    integrate(f, T::zero(), T::one(), &QuadConfig::default()).ok().map(|r| r.value)
}
