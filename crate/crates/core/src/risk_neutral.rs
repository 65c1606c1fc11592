//! Exponential-affine discount factor, risk-neutral mixtures and relative
//! option prices.
//!
//! Prices are relative to the spot: a call struck at `K` on an asset at `S`
//! is quoted as `C / S` with relative strike `κ = K / S`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mixture::{Component, GaussianMixture, MixtureError};
use crate::optim::{expand_bracket, newton_bisect, OptimError};
use crate::scalar::{log_sum_exp, Scalar};
use crate::special::{norm_cdf, norm_pdf};

/// Largest |α| searched when bracketing the discount-factor root.
pub const ALPHA_LIMIT: f64 = 1e4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiskNeutralError {
    #[error("no discount factor: no sign change for |alpha| <= {limit}")]
    NoSolution { limit: f64 },
    #[error("discount factor solve failed: {0}")]
    Solver(#[from] OptimError),
    #[error("pricing identities violated after calibration (bond {bond:e}, underlying {underlying:e})")]
    Residual { bond: f64, underlying: f64 },
    #[error("risk-neutral weights overflow at alpha = {alpha}")]
    Overflow { alpha: f64 },
    #[error(transparent)]
    Mixture(#[from] MixtureError),
    #[error("put-call parity gives a negative put ({put:e}); call and strike are inconsistent")]
    ParityViolation { put: f64 },
    #[error("invalid quote: {0}")]
    InvalidQuote(&'static str),
}

/// Discount factor `M = exp(αX + β)` and the per-period rate it prices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SdfParams<T> {
    pub alpha: T,
    pub beta: T,
    pub r: T,
}

impl<T: Scalar> SdfParams<T> {
    /// `E[M]` under the physical mixture.
    pub fn bond_price(&self, m: &GaussianMixture<T>) -> T {
        (self.beta + m.ln_mgf(self.alpha)).exp()
    }

    /// `E[M e^X]`, the discounted relative price of the underlying.
    pub fn underlying_price(&self, m: &GaussianMixture<T>) -> T {
        (self.beta + m.ln_mgf(self.alpha + T::one())).exp()
    }

    /// `(E[M] - e^{-r}, E[M e^X] - 1)`.
    pub fn residuals(&self, m: &GaussianMixture<T>) -> (T, T) {
        (self.bond_price(m) - (-self.r).exp(), self.underlying_price(m) - T::one())
    }
}

/// Mean of the exponentially tilted mixture, i.e. the derivative of `ln mgf` at `s`.
fn tilted_mean<T: Scalar>(m: &GaussianMixture<T>, s: T) -> T {
    let w = tilted_weights(m, s);
    m.components()
        .iter()
        .zip(&w)
        .map(|(c, &v)| v * (c.mu + s * c.sigma * c.sigma))
        .sum()
}

fn tilted_weights<T: Scalar>(m: &GaussianMixture<T>, s: T) -> Vec<T> {
    let half = T::lit(0.5);
    let logs: Vec<T> = m
        .components()
        .iter()
        .map(|c| c.p.ln() + c.mu * s + half * s * s * c.sigma * c.sigma)
        .collect();
    let lse = log_sum_exp(&logs);
    logs.iter().map(|&l| (l - lse).exp()).collect()
}

/// Solves the bond and underlying pricing identities for `(α, β)`.
///
/// `g(α) = ln mgf(α+1) - ln mgf(α) - r` is increasing (the cumulant
/// generating function is convex), so its root is unique when it exists.
pub fn calibrate_sdf<T: Scalar>(m: &GaussianMixture<T>, r: T) -> Result<SdfParams<T>, RiskNeutralError> {
    let one = T::one();
    let g = |a: T| m.ln_mgf(a + one) - m.ln_mgf(a) - r;
    let limit = T::lit(ALPHA_LIMIT);
    let (lo, hi) = expand_bracket(g, T::zero(), one, limit).map_err(|e| match e {
        OptimError::NoBracket { limit } => RiskNeutralError::NoSolution { limit },
        other => RiskNeutralError::Solver(other),
    })?;
    let alpha = if lo == hi {
        lo
    } else {
        let xtol = T::epsilon() * T::lit(4.0) * (one + lo.abs().max(hi.abs()));
        newton_bisect(|a| (g(a), tilted_mean(m, a + one) - tilted_mean(m, a)), lo, hi, xtol, 200)?
    };
    let sdf = SdfParams { alpha, beta: -r - m.ln_mgf(alpha), r };
    let (bond, underlying) = sdf.residuals(m);
    let tol = T::tol(1e-12) * (one + alpha.abs());
    if !(bond.abs() <= tol && underlying.abs() <= tol) {
        return Err(RiskNeutralError::Residual { bond: bond.as_f64(), underlying: underlying.as_f64() });
    }
    Ok(sdf)
}

/// The risk-neutral law of a one-period log-return: again a Gaussian mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RiskNeutralMixture<T> {
    pub weights: Vec<T>,
    /// `μ_i + α σ_i²`.
    pub means: Vec<T>,
    pub sds: Vec<T>,
    /// `exp(μ_i + α σ_i² - r + σ_i²/2)`.
    pub gammas: Vec<T>,
    pub alpha: T,
    pub r: T,
}

/// Tilts `m` by `e^{αx}`: weights `v_i ∝ p_i exp(μ_i α + α² σ_i² / 2)`.
pub fn risk_neutralize<T: Scalar>(m: &GaussianMixture<T>, alpha: T, r: T) -> Result<RiskNeutralMixture<T>, RiskNeutralError> {
    if !alpha.is_finite() || !r.is_finite() {
        return Err(RiskNeutralError::Overflow { alpha: alpha.as_f64() });
    }
    let weights = tilted_weights(m, alpha);
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(RiskNeutralError::Overflow { alpha: alpha.as_f64() });
    }
    let half = T::lit(0.5);
    let cs = m.components();
    let means: Vec<T> = cs.iter().map(|c| c.mu + alpha * c.sigma * c.sigma).collect();
    let sds: Vec<T> = cs.iter().map(|c| c.sigma).collect();
    let gammas: Vec<T> = means
        .iter()
        .zip(&sds)
        .map(|(&mu, &s)| (mu - r + half * s * s).exp())
        .collect();
    if gammas.iter().any(|g| !g.is_finite()) {
        return Err(RiskNeutralError::Overflow { alpha: alpha.as_f64() });
    }
    Ok(RiskNeutralMixture { weights, means, sds, gammas, alpha, r })
}

impl<T: Scalar> RiskNeutralMixture<T> {
    /// Risk-neutral law of a physical mixture priced by `sdf`.
    pub fn from_sdf(m: &GaussianMixture<T>, sdf: &SdfParams<T>) -> Result<Self, RiskNeutralError> {
        risk_neutralize(m, sdf.alpha, sdf.r)
    }

    /// The same law as a plain mixture (for quantiles and sampling).
    pub fn to_mixture(&self) -> Result<GaussianMixture<T>, MixtureError> {
        let comps = self
            .weights
            .iter()
            .zip(&self.means)
            .zip(&self.sds)
            // a tilt can push a weight below the smallest positive float
            .filter(|((w, _), _)| **w > T::zero())
            .map(|((&p, &mu), &s)| Component::new(p, mu, s))
            .collect();
        GaussianMixture::new(comps)
    }

    pub fn pdf(&self, x: T) -> T {
        self.iter().map(|(v, mu, s)| v * norm_pdf((x - mu) / s) / s).sum()
    }

    pub fn cdf(&self, x: T) -> T {
        rn_cdf(self, x)
    }

    /// `E*[e^X]`; equals `e^r` when the discount factor was calibrated.
    pub fn expected_growth(&self) -> T {
        let lse: Vec<T> = self
            .iter()
            .map(|(v, mu, s)| v.ln() + mu + T::lit(0.5) * s * s)
            .collect();
        log_sum_exp(&lse).exp()
    }

    /// `Σ v_i γ_i c_bs(σ_i², κ/γ_i)` over one period.
    pub fn call(&self, kappa: T) -> T {
        self.weights
            .iter()
            .zip(&self.gammas)
            .zip(&self.sds)
            .map(|((&v, &g), &s)| v * g * bs_call(s * s, kappa / g, self.r, T::one()))
            .sum()
    }

    /// Put from the call by parity, without the sign check.
    pub fn put(&self, kappa: T) -> T {
        self.call(kappa) + kappa * (-self.r).exp() - T::one()
    }

    fn iter(&self) -> impl Iterator<Item = (T, T, T)> + '_ {
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.sds)
            .map(|((&v, &mu), &s)| (v, mu, s))
    }
}

/// `F*(x) = Σ v_i Φ((x - μ_i - α σ_i²) / σ_i)`.
pub fn rn_cdf<T: Scalar>(q: &RiskNeutralMixture<T>, x: T) -> T {
    q.iter().map(|(v, mu, s)| v * norm_cdf((x - mu) / s)).sum()
}

/// Black–Scholes inputs in relative form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BlackScholesQuote<T> {
    pub sigma2: T,
    pub kappa: T,
    pub r: T,
    pub tau: T,
    pub d1: T,
    pub d2: T,
}

impl<T: Scalar> BlackScholesQuote<T> {
    pub fn new(sigma2: T, kappa: T, r: T, tau: T) -> Result<Self, RiskNeutralError> {
        if !(sigma2 > T::zero()) || !sigma2.is_finite() {
            return Err(RiskNeutralError::InvalidQuote("variance must be positive"));
        }
        if !(kappa > T::zero()) {
            return Err(RiskNeutralError::InvalidQuote("relative strike must be positive"));
        }
        if !(tau > T::zero()) || !tau.is_finite() {
            return Err(RiskNeutralError::InvalidQuote("time to expiry must be positive"));
        }
        if !r.is_finite() {
            return Err(RiskNeutralError::InvalidQuote("rate must be finite"));
        }
        let vol = (sigma2 * tau).sqrt();
        let d1 = ((r + T::lit(0.5) * sigma2) * tau - kappa.ln()) / vol;
        Ok(BlackScholesQuote { sigma2, kappa, r, tau, d1, d2: d1 - vol })
    }
}

/// `c = N(d₁) - κ e^{-rτ} N(d₂)`.
pub fn bs_call_relative<T: Scalar>(q: &BlackScholesQuote<T>) -> T {
    let disc = q.kappa * (-q.r * q.tau).exp();
    let intrinsic = (T::one() - disc).max(T::zero());
    if q.d1.is_nan() {
        // σ√τ underflowed to zero
        return intrinsic;
    }
    let c = norm_cdf(q.d1) - disc * norm_cdf(q.d2);
    c.max(intrinsic).min(T::one())
}

fn bs_call<T: Scalar>(sigma2: T, kappa: T, r: T, tau: T) -> T {
    match BlackScholesQuote::new(sigma2, kappa, r, tau) {
        Ok(q) => bs_call_relative(&q),
        // κ/γ overflowing to +inf: the call is worthless
        Err(_) if kappa.is_infinite() => T::zero(),
        Err(_) => T::nan(),
    }
}

/// One-period relative call under the risk-neutral law of `m` priced by `sdf`.
pub fn mixture_call_relative<T: Scalar>(m: &GaussianMixture<T>, sdf: &SdfParams<T>, kappa: T) -> Result<T, RiskNeutralError> {
    if !(kappa > T::zero()) {
        return Err(RiskNeutralError::InvalidQuote("relative strike must be positive"));
    }
    Ok(RiskNeutralMixture::from_sdf(m, sdf)?.call(kappa))
}

/// Relative put `p = c + κ e^{-rτ} - 1`.
pub fn put_from_parity<T: Scalar>(call: T, kappa: T, r: T, tau: T) -> Result<T, RiskNeutralError> {
    let put = call + kappa * (-r * tau).exp() - T::one();
    if !put.is_finite() {
        return Err(RiskNeutralError::InvalidQuote("inputs must be finite"));
    }
    if put < -T::tol(1e-12) {
        return Err(RiskNeutralError::ParityViolation { put: put.as_f64() });
    }
    Ok(put)
}

/// Relative call `c = p - κ e^{-rτ} + 1`, the inverse of [`put_from_parity`].
pub fn call_from_parity<T: Scalar>(put: T, kappa: T, r: T, tau: T) -> T {
    put - kappa * (-r * tau).exp() + T::one()
}
