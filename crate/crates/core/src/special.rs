//! Univariate normal and Student-t distribution functions plus the
//! bivariate normal orthant probability.

use crate::quad::gl20;
use crate::scalar::Scalar;

#[inline]
pub fn norm_pdf<T: Scalar>(x: T) -> T {
    (-(x * x) / T::lit(2.0)).exp() / (T::TAU()).sqrt()
}

/// Standard normal CDF, accurate in both tails.
#[inline]
pub fn norm_cdf<T: Scalar>(x: T) -> T {
    T::lit(0.5) * (-x / T::SQRT_2()).erfc()
}

/// Standard normal survival function `1 - Φ(x)`.
#[inline]
pub fn norm_sf<T: Scalar>(x: T) -> T {
    norm_cdf(-x)
}

// Acklam's rational approximation, refined below by Halley steps.
const ACK_A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const ACK_B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const ACK_C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const ACK_D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];

fn acklam_lower(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p <= 0.5);
    if p < 0.02425 {
        let q = (-2.0 * p.ln()).sqrt();
        (((((ACK_C[0] * q + ACK_C[1]) * q + ACK_C[2]) * q + ACK_C[3]) * q + ACK_C[4]) * q + ACK_C[5])
            / ((((ACK_D[0] * q + ACK_D[1]) * q + ACK_D[2]) * q + ACK_D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((ACK_A[0] * r + ACK_A[1]) * r + ACK_A[2]) * r + ACK_A[3]) * r + ACK_A[4]) * r + ACK_A[5])
            * q
            / (((((ACK_B[0] * r + ACK_B[1]) * r + ACK_B[2]) * r + ACK_B[3]) * r + ACK_B[4]) * r
                + 1.0)
    }
}

/// Standard normal quantile. Returns `∓∞` at `p = 0, 1` and NaN outside.
pub fn norm_quantile<T: Scalar>(p: T) -> T {
    if p.is_nan() || p < T::zero() || p > T::one() {
        return T::nan();
    }
    if p == T::zero() {
        return T::neg_infinity();
    }
    if p == T::one() {
        return T::infinity();
    }
    let half = T::lit(0.5);
    if p > half {
        // 1 - p is exact here (Sterbenz)
        return -norm_quantile(T::one() - p);
    }
    let mut x = T::lit(acklam_lower(p.as_f64()));
    if !x.is_finite() {
        return x;
    }
    for _ in 0..2 {
        let e = norm_cdf(x) - p;
        let u = e * T::TAU().sqrt() * (x * x / T::lit(2.0)).exp();
        if !u.is_finite() {
            break;
        }
        x = x - u / (T::one() + x * u / T::lit(2.0));
    }
    x
}

/// Density of Student's t with `nu` degrees of freedom.
pub fn t_pdf<T: Scalar>(x: T, nu: T) -> T {
    let half = T::lit(0.5);
    let ln = ((nu + T::one()) * half).ln_gamma()
        - (nu * half).ln_gamma()
        - half * (nu * T::PI()).ln()
        - (nu + T::one()) * half * (x * x / nu).ln_1p();
    ln.exp()
}

/// CDF of Student's t with `nu` degrees of freedom.
pub fn t_cdf<T: Scalar>(x: T, nu: T) -> T {
    if x.is_nan() {
        return x;
    }
    if x.is_infinite() {
        return if x > T::zero() { T::one() } else { T::zero() };
    }
    if nu > T::lit(1e8) {
        return norm_cdf(x);
    }
    let half = T::lit(0.5);
    let z = nu / (nu + x * x);
    let tail = half * T::beta_reg(nu * half, half, z);
    if x < T::zero() {
        tail
    } else {
        T::one() - tail
    }
}

/// Quantile of Student's t by safeguarded Newton iteration.
pub fn t_quantile<T: Scalar>(p: T, nu: T) -> T {
    if p.is_nan() || p < T::zero() || p > T::one() {
        return T::nan();
    }
    if p == T::zero() {
        return T::neg_infinity();
    }
    if p == T::one() {
        return T::infinity();
    }
    let half = T::lit(0.5);
    if p == half {
        return T::zero();
    }
    if p > half {
        return -t_quantile(T::one() - p, nu);
    }
    if nu > T::lit(1e8) {
        return norm_quantile(p);
    }
    // Lower tail only from here: the root is negative.
    let f = |x: T| t_cdf(x, nu) - p;
    let mut hi = T::zero();
    let mut lo = norm_quantile(p).min(-T::one());
    while f(lo) > T::zero() {
        hi = lo;
        lo = lo * T::lit(2.0);
        if !lo.is_finite() {
            return T::neg_infinity();
        }
    }
    let mut x = if nu >= T::lit(2.0) {
        norm_quantile(p).max(lo).min(hi)
    } else {
        half * (lo + hi)
    };
    let tol = T::tol(1e-15);
    for _ in 0..200 {
        let fx = f(x);
        if fx == T::zero() {
            return x;
        }
        if fx > T::zero() {
            hi = x;
        } else {
            lo = x;
        }
        let d = t_pdf(x, nu);
        let mut next = x - fx / d;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = half * (lo + hi);
        }
        if (next - x).abs() <= tol * (T::one() + x.abs()) {
            return next;
        }
        x = next;
        if (hi - lo).abs() <= tol * (T::one() + x.abs()) {
            return x;
        }
    }
    x
}

/// `P(X > h, Y > k)` for a standard bivariate normal with correlation `r`.
///
/// Drezner–Wesolowsky with Genz's refinements, using a 20-point
/// Gauss–Legendre rule in every correlation regime.
pub fn bvn_upper<T: Scalar>(h: T, k: T, r: T) -> T {
    let zero = T::zero();
    let one = T::one();
    let two = T::lit(2.0);
    if h == T::infinity() || k == T::infinity() {
        return zero;
    }
    if h == T::neg_infinity() {
        return if k == T::neg_infinity() { one } else { norm_cdf(-k) };
    }
    if k == T::neg_infinity() {
        return norm_cdf(-h);
    }
    if r == zero {
        return norm_cdf(-h) * norm_cdf(-k);
    }
    let tp = T::TAU();
    let rule = gl20();
    let mut k = k;
    let mut hk = h * k;
    let mut bvn = zero;
    if r.abs() < T::lit(0.925) {
        let hs = (h * h + k * k) / two;
        let asr = r.asin() / two;
        for &(x, w) in rule {
            let (x, w) = (T::lit(x), T::lit(w));
            let sn = (asr * (one + x)).sin();
            bvn = bvn + w * ((sn * hk - hs) / (one - sn * sn)).exp();
        }
        // full-rule sum equals the half-rule sum over 1 - x and 1 + x
        bvn = bvn * asr / tp + norm_cdf(-h) * norm_cdf(-k);
    } else {
        if r < zero {
            k = -k;
            hk = -hk;
        }
        if r.abs() < one {
            let as_ = (one - r) * (one + r);
            let mut a = as_.sqrt();
            let bs = (h - k) * (h - k);
            let c = (T::lit(4.0) - hk) / T::lit(8.0);
            let d = (T::lit(12.0) - hk) / T::lit(80.0);
            let asr = -(bs / as_ + hk) / two;
            if asr > T::lit(-100.0) {
                bvn = a
                    * asr.exp()
                    * (one - c * (bs - as_) * (one - d * bs) / T::lit(3.0) + c * d * as_ * as_);
            }
            if hk > T::lit(-100.0) {
                let b = bs.sqrt();
                let sp = tp.sqrt() * norm_cdf(-b / a);
                bvn = bvn
                    - (-hk / two).exp() * sp * b * (one - c * bs * (one - d * bs) / T::lit(3.0));
            }
            a = a / two;
            let mut acc = zero;
            for &(x, w) in rule {
                let (x, w) = (T::lit(x), T::lit(w));
                let xs = (a * (one + x)) * (a * (one + x));
                let asr = -(bs / xs + hk) / two;
                if asr > T::lit(-100.0) {
                    let sp = one + c * xs * (one + T::lit(5.0) * d * xs);
                    let rs = (one - xs).sqrt();
                    let ep = (-(hk / two) * xs / ((one + rs) * (one + rs))).exp() / rs;
                    acc = acc + w * asr.exp() * (sp - ep);
                }
            }
            bvn = (a * acc - bvn) / tp;
        }
        if r > zero {
            bvn = bvn + norm_cdf(-h.max(k));
        } else if h >= k {
            bvn = -bvn;
        } else {
            let l = if h < zero {
                norm_cdf(k) - norm_cdf(h)
            } else {
                norm_cdf(-h) - norm_cdf(-k)
            };
            bvn = l - bvn;
        }
    }
    bvn.max(zero).min(one)
}

/// `P(X ≤ x, Y ≤ y)` for a standard bivariate normal with correlation `r`.
#[inline]
pub fn bvn_cdf<T: Scalar>(x: T, y: T, r: T) -> T {
    bvn_upper(-x, -y, r)
}
