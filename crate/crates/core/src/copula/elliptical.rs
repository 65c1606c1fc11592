//! Gaussian and Student-t copulas.

use crate::quad::{integrate, QuadConfig, QuadError};
use crate::scalar::Scalar;
use crate::special::{bvn_cdf, norm_cdf, norm_quantile, t_cdf, t_pdf, t_quantile};

pub(crate) fn gaussian_cdf<T: Scalar>(rho: T, u: T, v: T) -> T {
    bvn_cdf(norm_quantile(u), norm_quantile(v), rho)
}

pub(crate) fn gaussian_h<T: Scalar>(rho: T, u: T, v: T) -> T {
    let (x, y) = (norm_quantile(u), norm_quantile(v));
    norm_cdf((y - rho * x) / (T::one() - rho * rho).sqrt())
}

pub(crate) fn gaussian_h_inverse<T: Scalar>(rho: T, u: T, w: T) -> T {
    let x = norm_quantile(u);
    norm_cdf(rho * x + (T::one() - rho * rho).sqrt() * norm_quantile(w))
}

pub(crate) fn gaussian_ln_density<T: Scalar>(rho: T, u: T, v: T) -> T {
    let (x, y) = (norm_quantile(u), norm_quantile(v));
    let one_m = T::one() - rho * rho;
    let half = T::lit(0.5);
    -half * one_m.ln() - (rho * rho * (x * x + y * y) - T::lit(2.0) * rho * x * y) / (T::lit(2.0) * one_m)
}

/// Scale of `Y | X = x` for the bivariate t, relative to a `t_{ν+1}`.
fn t_cond_scale<T: Scalar>(rho: T, nu: T, x: T) -> T {
    ((nu + x * x) * (T::one() - rho * rho) / (nu + T::one())).sqrt()
}

pub(crate) fn t_h<T: Scalar>(rho: T, nu: T, u: T, v: T) -> T {
    let (x, y) = (t_quantile(u, nu), t_quantile(v, nu));
    t_cdf((y - rho * x) / t_cond_scale(rho, nu, x), nu + T::one())
}

pub(crate) fn t_h_inverse<T: Scalar>(rho: T, nu: T, u: T, w: T) -> T {
    let x = t_quantile(u, nu);
    t_cdf(rho * x + t_cond_scale(rho, nu, x) * t_quantile(w, nu + T::one()), nu)
}

pub(crate) fn t_ln_density<T: Scalar>(rho: T, nu: T, u: T, v: T) -> T {
    t_ln_density_at(rho, nu, t_quantile(u, nu), t_quantile(v, nu))
}

/// Log-density at t quantiles `x = T_ν⁻¹(u)`, `y = T_ν⁻¹(v)`.
pub(crate) fn t_ln_density_at<T: Scalar>(rho: T, nu: T, x: T, y: T) -> T {
    let half = T::lit(0.5);
    let one = T::one();
    let two = T::lit(2.0);
    let one_m = one - rho * rho;
    let q = (x * x - two * rho * x * y + y * y) / (nu * one_m);
    ((nu + two) * half).ln_gamma() + (nu * half).ln_gamma() - two * ((nu + one) * half).ln_gamma()
        - half * one_m.ln()
        - (nu + two) * half * q.ln_1p()
        + (nu + one) * half * ((x * x / nu).ln_1p() + (y * y / nu).ln_1p())
}

/// `C(u, v) = ∫_{-∞}^{x} t_ν(s) T_{ν+1}((y - ρs) / scale(s)) ds`.
pub(crate) fn t_cdf_copula<T: Scalar>(rho: T, nu: T, u: T, v: T) -> T {
    let (x, y) = (t_quantile(u, nu), t_quantile(v, nu));
    let nu1 = nu + T::one();
    let f = |s: T| t_pdf(s, nu) * t_cdf((y - rho * s) / t_cond_scale(rho, nu, s), nu1);
    let cfg = QuadConfig { abs_tol: 1e-14, rel_tol: 1e-12, max_intervals: 2000 };
    let value = match integrate(f, T::neg_infinity(), x, &cfg) {
        Ok(r) => r.value,
        Err(QuadError::NotConverged { value, error, .. }) => {
            log::warn!("t copula cdf at ({u}, {v}): quadrature error estimate {error:e}");
            T::lit(value)
        }
        Err(QuadError::NonFinite { .. }) => T::nan(),
    };
    // Fréchet bounds absorb rounding at the edges
    value.max((u + v - T::one()).max(T::zero())).min(u.min(v))
}
