//! Clayton and Frank.

use crate::scalar::Scalar;

/// `ln(u^{-θ} + v^{-θ} - 1)`, accurate near `u = v = 1` and for tiny arguments.
fn clayton_ln_sum<T: Scalar>(theta: T, u: T, v: T) -> T {
    let a = -theta * u.ln();
    let b = -theta * v.ln();
    let m = a.max(b);
    if m < T::one() {
        (a.exp_m1() + b.exp_m1()).ln_1p()
    } else {
        m + ((a - m).exp() + (b - m).exp() - (-m).exp()).ln()
    }
}

pub(crate) fn clayton_cdf<T: Scalar>(theta: T, u: T, v: T) -> T {
    (-clayton_ln_sum(theta, u, v) / theta).exp()
}

pub(crate) fn clayton_h<T: Scalar>(theta: T, u: T, v: T) -> T {
    let one = T::one();
    let l = -(theta + one) * u.ln() - (one / theta + one) * clayton_ln_sum(theta, u, v);
    l.exp().min(one)
}

pub(crate) fn clayton_ln_density<T: Scalar>(theta: T, u: T, v: T) -> T {
    let one = T::one();
    (one + theta).ln() - (theta + one) * (u.ln() + v.ln())
        - (T::lit(2.0) + one / theta) * clayton_ln_sum(theta, u, v)
}

/// Solves `h(u, v) = w` for `v`.
pub(crate) fn clayton_h_inverse<T: Scalar>(theta: T, u: T, w: T) -> T {
    let one = T::one();
    // v^{-θ} = (w^{-θ/(1+θ)} - 1) u^{-θ} + 1
    let k = (-theta / (one + theta) * w.ln()).exp_m1();
    let lv = (k * (-theta * u.ln()).exp()).ln_1p();
    (-lv / theta).exp()
}

pub(crate) fn frank_cdf<T: Scalar>(theta: T, u: T, v: T) -> T {
    let em = (-theta).exp_m1();
    let a = (-theta * u).exp_m1();
    let b = (-theta * v).exp_m1();
    -(a * b / em).ln_1p() / theta
}

pub(crate) fn frank_h<T: Scalar>(theta: T, u: T, v: T) -> T {
    let em = (-theta).exp_m1();
    let a = (-theta * u).exp_m1();
    let b = (-theta * v).exp_m1();
    ((-theta * u).exp() * b / (em + a * b)).max(T::zero()).min(T::one())
}

pub(crate) fn frank_ln_density<T: Scalar>(theta: T, u: T, v: T) -> T {
    let em = (-theta).exp_m1();
    let a = (-theta * u).exp_m1();
    let b = (-theta * v).exp_m1();
    let den = em + a * b;
    theta.ln() + (-em).ln() - theta * (u + v) - T::lit(2.0) * den.abs().ln()
}

pub(crate) fn frank_h_inverse<T: Scalar>(theta: T, u: T, w: T) -> T {
    let em = (-theta).exp_m1();
    let a = (-theta * u).exp_m1();
    let b = w * em / ((-theta * u).exp() - w * a);
    (-b.ln_1p() / theta).max(T::zero()).min(T::one())
}

/// `1 - 4/θ (1 - D₁(θ))` with the first Debye function by Gauss–Legendre.
pub(crate) fn frank_tau<T: Scalar>(theta: T) -> T {
    let half = T::lit(0.5) * theta;
    let d1: T = crate::quad::gl20()
        .iter()
        .map(|&(x, w)| {
            let s = half * (T::lit(x) + T::one());
            let f = if s > T::zero() { s / s.exp_m1() } else { T::one() };
            T::lit(w) * f
        })
        .sum::<T>()
        * half
        / theta;
    T::one() - T::lit(4.0) / theta * (T::one() - d1)
}
