//! Bivariate copulas: distribution, density, conditional distribution,
//! sampling and survival transforms.

mod archimedean;
mod elliptical;
mod ev;

use std::fmt;

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optim::{bisect_monotone, OptimError};
use crate::rng::seeded;
use crate::scalar::Scalar;
use crate::special::{norm_cdf, t_cdf};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CopulaError {
    #[error("{family}: {reason}")]
    InvalidParams { family: Family, reason: String },
    #[error("{family} density is not defined at the boundary point ({u}, {v})")]
    Boundary { family: Family, u: f64, v: f64 },
    #[error("{0} copula has no density")]
    Singular(Family),
    #[error("{0} is not an extreme-value copula")]
    NotExtremeValue(Family),
    #[error("{family} is only available in two dimensions, got {d}")]
    Dimension { family: Family, d: usize },
    #[error("conditional inversion failed at u = {u}, w = {w}: {source}")]
    Inversion {
        u: f64,
        w: f64,
        #[source]
        source: OptimError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gaussian,
    StudentT,
    Clayton,
    Frank,
    Gumbel,
    Galambos,
    HuslerReiss,
    Tawn,
    Independence,
    Comonotone,
    /// The lower Fréchet bound.
    Countermonotone,
}

impl Family {
    /// The seven parametric families compared in model selection.
    pub const SELECTION: [Family; 7] = [
        Family::Gaussian,
        Family::Clayton,
        Family::Gumbel,
        Family::Frank,
        Family::Tawn,
        Family::Galambos,
        Family::HuslerReiss,
    ];

    pub const ALL: [Family; 11] = [
        Family::Gaussian,
        Family::StudentT,
        Family::Clayton,
        Family::Frank,
        Family::Gumbel,
        Family::Galambos,
        Family::HuslerReiss,
        Family::Tawn,
        Family::Independence,
        Family::Comonotone,
        Family::Countermonotone,
    ];

    pub fn n_params(self) -> usize {
        match self {
            Family::StudentT => 2,
            Family::Independence | Family::Comonotone | Family::Countermonotone => 0,
            _ => 1,
        }
    }

    pub fn is_extreme_value(self) -> bool {
        matches!(self, Family::Gumbel | Family::Galambos | Family::HuslerReiss | Family::Tawn)
    }

    /// Human-readable name used in report headers.
    pub fn label(self) -> &'static str {
        match self {
            Family::Gaussian => "Normal",
            Family::StudentT => "Student",
            Family::Clayton => "Clayton",
            Family::Frank => "Frank",
            Family::Gumbel => "Gumbel",
            Family::Galambos => "Galambos",
            Family::HuslerReiss => "Husler-Reiss",
            Family::Tawn => "Tawn",
            Family::Independence => "Independence",
            Family::Comonotone => "Comonotone",
            Family::Countermonotone => "Countermonotone",
        }
    }

    /// The tag used in JSON and on the command line.
    pub fn tag(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::StudentT => "student_t",
            Family::Clayton => "clayton",
            Family::Frank => "frank",
            Family::Gumbel => "gumbel",
            Family::Galambos => "galambos",
            Family::HuslerReiss => "husler_reiss",
            Family::Tawn => "tawn",
            Family::Independence => "independence",
            Family::Comonotone => "comonotone",
            Family::Countermonotone => "countermonotone",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        let alias = match key.as_str() {
            "normal" | "normale" => "gaussian",
            "t" | "student" => "student_t",
            other => other,
        };
        Family::ALL
            .into_iter()
            .find(|f| f.tag() == alias)
            .ok_or_else(|| format!("unknown copula family '{s}'"))
    }
}

/// Anything that can evaluate a bivariate distribution on the unit square.
pub trait BivariateCdf<T> {
    fn cdf(&self, u: T, v: T) -> T;
}

/// A copula family and its parameter vector.
///
/// Parameters: gaussian `[ρ]`, student_t `[ρ, ν]`, clayton/frank/gumbel/galambos `[θ]`,
/// husler_reiss `[λ]`, tawn `[θ]`; the bounds and independence copulas take none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", try_from = "RawCopula<T>")]
pub struct CopulaModel<T> {
    family: Family,
    params: Vec<T>,
}

#[derive(Deserialize)]
#[serde(bound = "T: Scalar")]
struct RawCopula<T> {
    family: Family,
    #[serde(default)]
    params: Vec<T>,
}

impl<T: Scalar> TryFrom<RawCopula<T>> for CopulaModel<T> {
    type Error = CopulaError;
    fn try_from(raw: RawCopula<T>) -> Result<Self, Self::Error> {
        CopulaModel::new(raw.family, raw.params)
    }
}

fn invalid(family: Family, reason: impl Into<String>) -> CopulaError {
    CopulaError::InvalidParams { family, reason: reason.into() }
}

impl<T: Scalar> CopulaModel<T> {
    pub fn new(family: Family, params: Vec<T>) -> Result<Self, CopulaError> {
        if params.len() != family.n_params() {
            return Err(invalid(family, format!("expected {} parameter(s), got {}", family.n_params(), params.len())));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(invalid(family, "parameters must be finite"));
        }
        let one = T::one();
        let zero = T::zero();
        let ok = match family {
            Family::Gaussian => params[0].abs() < one,
            Family::StudentT => params[0].abs() < one && params[1] > zero,
            Family::Clayton | Family::Frank | Family::Galambos | Family::HuslerReiss => params[0] > zero,
            Family::Gumbel => params[0] >= one,
            Family::Tawn => params[0] >= zero && params[0] <= one,
            Family::Independence | Family::Comonotone | Family::Countermonotone => true,
        };
        if !ok {
            let range = match family {
                Family::Gaussian => "rho must lie in (-1, 1)",
                Family::StudentT => "rho must lie in (-1, 1) and nu must be positive",
                Family::Gumbel => "theta must be at least 1",
                Family::Tawn => "theta must lie in [0, 1]",
                Family::HuslerReiss => "lambda must be positive",
                _ => "theta must be positive",
            };
            return Err(invalid(family, format!("{range}, got {:?}", params)));
        }
        Ok(CopulaModel { family, params })
    }

    pub fn gaussian(rho: T) -> Result<Self, CopulaError> {
        Self::new(Family::Gaussian, vec![rho])
    }

    pub fn student_t(rho: T, nu: T) -> Result<Self, CopulaError> {
        Self::new(Family::StudentT, vec![rho, nu])
    }

    /// One-parameter families.
    pub fn with_theta(family: Family, theta: T) -> Result<Self, CopulaError> {
        Self::new(family, vec![theta])
    }

    pub fn independence() -> Self {
        CopulaModel { family: Family::Independence, params: Vec::new() }
    }

    pub fn comonotone() -> Self {
        CopulaModel { family: Family::Comonotone, params: Vec::new() }
    }

    pub fn countermonotone() -> Self {
        CopulaModel { family: Family::Countermonotone, params: Vec::new() }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    fn p(&self) -> T {
        self.params[0]
    }

    /// Gumbel at θ = 1 and Tawn at θ = 0 are exactly the independence copula.
    fn is_independent(&self) -> bool {
        match self.family {
            Family::Independence => true,
            Family::Gumbel => self.p() == T::one(),
            Family::Tawn => self.p() == T::zero(),
            _ => false,
        }
    }

    /// `C(u, v)`; arguments are clamped to `[0, 1]`.
    pub fn cdf(&self, u: T, v: T) -> T {
        let (zero, one) = (T::zero(), T::one());
        let u = u.max(zero).min(one);
        let v = v.max(zero).min(one);
        if u == zero || v == zero {
            return zero;
        }
        if u == one {
            return v;
        }
        if v == one {
            return u;
        }
        match self.family {
            Family::Comonotone => return u.min(v),
            Family::Countermonotone => return (u - (one - v)).max(zero),
            _ => {}
        }
        if self.is_independent() {
            return u * v;
        }
        let c = match self.family {
            Family::Gaussian => elliptical::gaussian_cdf(self.p(), u, v),
            Family::StudentT => elliptical::t_cdf_copula(self.p(), self.params[1], u, v),
            Family::Clayton => archimedean::clayton_cdf(self.p(), u, v),
            Family::Frank => archimedean::frank_cdf(self.p(), u, v),
            f => ev::cdf(f, self.p(), u, v),
        };
        c.max(zero).min(one)
    }

    /// `∂²C/∂u∂v` on the open unit square.
    pub fn density(&self, u: T, v: T) -> Result<T, CopulaError> {
        self.ln_density(u, v).map(T::exp)
    }

    pub fn ln_density(&self, u: T, v: T) -> Result<T, CopulaError> {
        let (zero, one) = (T::zero(), T::one());
        if matches!(self.family, Family::Comonotone | Family::Countermonotone) {
            return Err(CopulaError::Singular(self.family));
        }
        if !(u > zero && u < one && v > zero && v < one) {
            return Err(CopulaError::Boundary { family: self.family, u: u.as_f64(), v: v.as_f64() });
        }
        if self.is_independent() {
            return Ok(zero);
        }
        Ok(match self.family {
            Family::Gaussian => elliptical::gaussian_ln_density(self.p(), u, v),
            Family::StudentT => elliptical::t_ln_density(self.p(), self.params[1], u, v),
            Family::Clayton => archimedean::clayton_ln_density(self.p(), u, v),
            Family::Frank => archimedean::frank_ln_density(self.p(), u, v),
            f => ev::ln_density(f, self.p(), u, v),
        })
    }

    /// Conditional distribution `h(u, v) = ∂C(u, v)/∂u = P(V ≤ v | U = u)`.
    pub fn h_function(&self, u: T, v: T) -> T {
        let (zero, one) = (T::zero(), T::one());
        match self.family {
            Family::Comonotone => return if v >= u { one } else { zero },
            Family::Countermonotone => return if v >= one - u { one } else { zero },
            _ => {}
        }
        if v <= zero {
            return zero;
        }
        if v >= one {
            return one;
        }
        if self.is_independent() {
            return v;
        }
        let u = u.max(T::min_positive_value()).min(one - T::epsilon());
        match self.family {
            Family::Gaussian => elliptical::gaussian_h(self.p(), u, v),
            Family::StudentT => elliptical::t_h(self.p(), self.params[1], u, v),
            Family::Clayton => archimedean::clayton_h(self.p(), u, v),
            Family::Frank => archimedean::frank_h(self.p(), u, v),
            f => ev::h(f, self.p(), u, v),
        }
    }

    /// Solves `h(u, v) = w` for `v`: closed form where one exists, bisection otherwise.
    pub fn h_inverse(&self, u: T, w: T) -> Result<T, CopulaError> {
        let (zero, one) = (T::zero(), T::one());
        let w = w.max(zero).min(one);
        match self.family {
            Family::Comonotone => return Ok(u),
            Family::Countermonotone => return Ok(one - u),
            _ if self.is_independent() => return Ok(w),
            _ => {}
        }
        if w == zero || w == one {
            return Ok(w);
        }
        let v = match self.family {
            Family::Gaussian => elliptical::gaussian_h_inverse(self.p(), u, w),
            Family::StudentT => elliptical::t_h_inverse(self.p(), self.params[1], u, w),
            Family::Clayton => archimedean::clayton_h_inverse(self.p(), u, w),
            Family::Frank => archimedean::frank_h_inverse(self.p(), u, w),
            _ => bisect_monotone(|v| self.h_function(u, v), w, zero, one, T::tol(1e-10), 200)
                .map_err(|source| CopulaError::Inversion { u: u.as_f64(), w: w.as_f64(), source })?,
        };
        Ok(v)
    }

    /// Pickands dependence function `A(t)` of an extreme-value family.
    pub fn pickands(&self, t: T) -> Result<T, CopulaError> {
        if !self.family.is_extreme_value() {
            return Err(CopulaError::NotExtremeValue(self.family));
        }
        Ok(ev::pickands(self.family, self.p(), t))
    }

    /// Draws one pair `(U, V)`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(T, T), CopulaError> {
        let unif = |rng: &mut R| T::lit(open_unit(rng));
        let one = T::one();
        if self.is_independent() {
            return Ok((unif(rng), unif(rng)));
        }
        match self.family {
            Family::Comonotone => {
                let u = unif(rng);
                Ok((u, u))
            }
            Family::Countermonotone => {
                let u = unif(rng);
                Ok((u, one - u))
            }
            Family::Gaussian => {
                let rho = self.p();
                let z1 = T::lit(rng.sample::<f64, _>(StandardNormal));
                let z2 = T::lit(rng.sample::<f64, _>(StandardNormal));
                let y = rho * z1 + (one - rho * rho).sqrt() * z2;
                Ok((norm_cdf(z1), norm_cdf(y)))
            }
            Family::StudentT => {
                let (rho, nu) = (self.p(), self.params[1]);
                let z1 = T::lit(rng.sample::<f64, _>(StandardNormal));
                let z2 = T::lit(rng.sample::<f64, _>(StandardNormal));
                let chi = ChiSquared::new(nu.as_f64()).expect("validated nu");
                let w = T::lit(chi.sample(rng));
                let scale = (w / nu).sqrt();
                let x = z1 / scale;
                let y = (rho * z1 + (one - rho * rho).sqrt() * z2) / scale;
                Ok((t_cdf(x, nu), t_cdf(y, nu)))
            }
            Family::Clayton => {
                // gamma frailty
                let theta = self.p();
                let g = Gamma::new(1.0 / theta.as_f64(), 1.0).expect("validated theta");
                let frailty = T::lit(g.sample(rng));
                let e1 = T::lit(rng.sample::<f64, _>(Exp1));
                let e2 = T::lit(rng.sample::<f64, _>(Exp1));
                let f = |e: T| (-(e / frailty).ln_1p() / theta).exp();
                Ok((f(e1), f(e2)))
            }
            Family::Gumbel => {
                // positive stable frailty with Laplace transform exp(-t^{1/θ})
                let alpha = one / self.p();
                let s = T::lit(positive_stable(alpha.as_f64(), rng));
                let e1 = T::lit(rng.sample::<f64, _>(Exp1));
                let e2 = T::lit(rng.sample::<f64, _>(Exp1));
                let f = |e: T| (-(e / s).powf(alpha)).exp();
                Ok((f(e1), f(e2)))
            }
            _ => {
                let u = unif(rng);
                let w = unif(rng);
                Ok((u, self.h_inverse(u, w)?))
            }
        }
    }

    /// `n` i.i.d. pairs, reproducible for a fixed seed.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<(T, T)>, CopulaError> {
        let mut rng = seeded(seed);
        (0..n).map(|_| self.draw(&mut rng)).collect()
    }

    /// `C(u_1, …, u_d)`. Coordinates equal to one are dropped first, so the
    /// bivariate families answer any query with at most two free coordinates.
    pub fn cdf_nd(&self, u: &[T]) -> Result<T, CopulaError> {
        let (zero, one) = (T::zero(), T::one());
        let clamped: Vec<T> = u.iter().map(|x| x.max(zero).min(one)).collect();
        if clamped.contains(&zero) {
            return Ok(zero);
        }
        let free: Vec<T> = clamped.into_iter().filter(|&x| x < one).collect();
        match (self.family, free.len()) {
            (_, 0) => Ok(one),
            (_, 1) => Ok(free[0]),
            (_, 2) => Ok(self.cdf(free[0], free[1])),
            (Family::Independence, _) => Ok(free.iter().fold(one, |a, &b| a * b)),
            (Family::Comonotone, _) => Ok(free.iter().fold(one, |a, &b| a.min(b))),
            (f, d) => Err(CopulaError::Dimension { family: f, d }),
        }
    }

    /// Survival copula `C̄(u) = Σ_{M ⊆ N} (-1)^{|M|} C(w^M)` where
    /// `w^M_i = 1 - u_i` for `i ∈ M` and `1` otherwise.
    pub fn survival_cdf(&self, u: &[T]) -> Result<T, CopulaError> {
        let d = u.len();
        if d >= usize::BITS as usize {
            return Err(CopulaError::Dimension { family: self.family, d });
        }
        let mut total = T::zero();
        let mut point = vec![T::one(); d];
        for mask in 0usize..(1 << d) {
            for (i, x) in point.iter_mut().enumerate() {
                *x = if mask & (1 << i) != 0 { T::one() - u[i] } else { T::one() };
            }
            let c = self.cdf_nd(&point)?;
            if mask.count_ones() % 2 == 0 {
                total = total + c;
            } else {
                total = total - c;
            }
        }
        Ok(total.max(T::zero()).min(T::one()))
    }

    /// Closed-form Kendall's tau where the family has one.
    pub fn kendall_tau(&self) -> Option<T> {
        let one = T::one();
        match self.family {
            Family::Independence => Some(T::zero()),
            Family::Comonotone => Some(one),
            Family::Countermonotone => Some(-one),
            Family::Gaussian | Family::StudentT => Some(T::lit(2.0) / T::PI() * self.p().asin()),
            Family::Clayton => Some(self.p() / (self.p() + T::lit(2.0))),
            Family::Gumbel => Some(one - one / self.p()),
            Family::Frank => Some(archimedean::frank_tau(self.p())),
            Family::Tawn => {
                // τ = 8 tan⁻¹√(θ/(4-θ)) / √(θ(4-θ)) - 2, with τ(0) = 0
                let th = self.p();
                if th == T::zero() {
                    return Some(T::zero());
                }
                let four = T::lit(4.0);
                Some(T::lit(8.0) * (th / (four - th)).sqrt().atan() / (th * (four - th)).sqrt() - T::lit(2.0))
            }
            Family::Galambos | Family::HuslerReiss => ev::kendall_tau(self.family, self.p()),
        }
    }
}

/// Student-t copula log-density from precomputed `t_ν` quantiles, so that
/// fits over ρ at fixed ν invert each margin once.
pub fn student_t_ln_density_at<T: Scalar>(rho: T, nu: T, x: T, y: T) -> T {
    elliptical::t_ln_density_at(rho, nu, x, y)
}

/// Sample Kendall's tau in `O(n log n)` (Knight's merge-sort count).
///
/// Assumes no ties, as for continuous samples.
pub fn sample_kendall_tau<T: Scalar>(pairs: &[(T, T)]) -> T {
    let n = pairs.len();
    if n < 2 {
        return T::nan();
    }
    let mut sorted: Vec<(T, T)> = pairs.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.partial_cmp(&b.1).unwrap()));
    let mut ys: Vec<T> = sorted.into_iter().map(|p| p.1).collect();
    let mut buf = ys.clone();
    let discordant = count_inversions(&mut ys, &mut buf);
    let total = (n as f64) * (n as f64 - 1.0) / 2.0;
    T::lit((total - 2.0 * discordant as f64) / total)
}

fn count_inversions<T: Scalar>(xs: &mut [T], buf: &mut [T]) -> u64 {
    let n = xs.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = {
        let (l, r) = xs.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        count_inversions(l, bl) + count_inversions(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if xs[j] < xs[i] {
            buf[k] = xs[j];
            inv += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = xs[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&xs[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&xs[j..n]);
    xs.copy_from_slice(&buf[..n]);
    inv
}

impl<T: Scalar> BivariateCdf<T> for CopulaModel<T> {
    fn cdf(&self, u: T, v: T) -> T {
        CopulaModel::cdf(self, u, v)
    }
}

impl<T: Scalar> fmt::Display for CopulaModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.family)?;
        if !self.params.is_empty() {
            let ps: Vec<String> = self.params.iter().map(|p| p.to_string()).collect();
            write!(f, "({})", ps.join(", "))?;
        }
        Ok(())
    }
}

/// Uniform on the open interval (0, 1).
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Positive stable variate with Laplace transform `exp(-t^α)`, `0 < α ≤ 1`
/// (Kanter's representation).
fn positive_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    if alpha >= 1.0 {
        return 1.0;
    }
    let theta = std::f64::consts::PI * open_unit(rng);
    let w: f64 = rng.sample(Exp1);
    let a = (alpha * theta).sin() / theta.sin().powf(1.0 / alpha);
    let b = (((1.0 - alpha) * theta).sin() / w).powf((1.0 - alpha) / alpha);
    a * b
}
