//! Finite Gaussian mixtures: evaluation, moments, simulation and EM fitting.

mod em;

pub use em::{fit_em, EmConfig, EmInit, FitDiagnostics};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optim::{newton_bisect, OptimError};
use crate::rng::seeded;
use crate::scalar::{log_sum_exp, Scalar};
use crate::special::{norm_cdf, norm_pdf};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MixtureError {
    #[error("mixture has no components")]
    Empty,
    #[error("component {index}: weight {p} outside (0, 1]")]
    InvalidWeight { index: usize, p: f64 },
    #[error("weights sum to {sum}, expected 1")]
    WeightsDoNotSum { sum: f64 },
    #[error("component {index}: sigma {sigma} must be positive and finite")]
    InvalidSigma { index: usize, sigma: f64 },
    #[error("component {index}: mean {mu} is not finite")]
    InvalidMean { index: usize, mu: f64 },
    #[error("probability {p} outside (0, 1)")]
    ProbabilityOutOfRange { p: f64 },
    #[error("moment generating function overflows at s = {s}")]
    Overflow { s: f64 },
    #[error("quantile search failed at p = {p}: {source}")]
    Quantile {
        p: f64,
        #[source]
        source: OptimError,
    },
    #[error("need at least {min} observations, got {n}")]
    TooFewObservations { n: usize, min: usize },
    #[error("invalid EM configuration: {0}")]
    InvalidConfig(String),
    #[error("all {restarts} EM restarts collapsed to a degenerate component")]
    AllRestartsFailed { restarts: usize },
}

/// One weighted Gaussian component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Component<T> {
    pub p: T,
    pub mu: T,
    pub sigma: T,
}

impl<T: Scalar> Component<T> {
    pub fn new(p: T, mu: T, sigma: T) -> Self {
        Component { p, mu, sigma }
    }
}

/// `f(x) = Σ p_i n(x; μ_i, σ_i²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", try_from = "RawMixture<T>")]
pub struct GaussianMixture<T> {
    components: Vec<Component<T>>,
}

#[derive(Deserialize)]
#[serde(bound = "T: Scalar")]
struct RawMixture<T> {
    components: Vec<Component<T>>,
}

impl<T: Scalar> TryFrom<RawMixture<T>> for GaussianMixture<T> {
    type Error = MixtureError;
    fn try_from(raw: RawMixture<T>) -> Result<Self, Self::Error> {
        GaussianMixture::new(raw.components)
    }
}

/// Mean, standard deviation, skewness and raw kurtosis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Moments<T> {
    pub mean: T,
    pub sd: T,
    pub skewness: T,
    pub kurtosis: T,
}

impl<T: Scalar> GaussianMixture<T> {
    pub fn new(components: Vec<Component<T>>) -> Result<Self, MixtureError> {
        if components.is_empty() {
            return Err(MixtureError::Empty);
        }
        for (index, c) in components.iter().enumerate() {
            if !(c.p > T::zero() && c.p <= T::one()) {
                return Err(MixtureError::InvalidWeight { index, p: c.p.as_f64() });
            }
            if !(c.sigma > T::zero()) || !c.sigma.is_finite() {
                return Err(MixtureError::InvalidSigma { index, sigma: c.sigma.as_f64() });
            }
            if !c.mu.is_finite() {
                return Err(MixtureError::InvalidMean { index, mu: c.mu.as_f64() });
            }
        }
        let sum: T = components.iter().map(|c| c.p).sum();
        if (sum - T::one()).abs() > T::tol(1e-12) {
            return Err(MixtureError::WeightsDoNotSum { sum: sum.as_f64() });
        }
        Ok(GaussianMixture { components })
    }

    /// Two-regime mixture from weight of the first regime.
    pub fn two(p1: T, mu1: T, sigma1: T, mu2: T, sigma2: T) -> Result<Self, MixtureError> {
        Self::new(vec![Component::new(p1, mu1, sigma1), Component::new(T::one() - p1, mu2, sigma2)])
    }

    pub fn normal(mu: T, sigma: T) -> Result<Self, MixtureError> {
        Self::new(vec![Component::new(T::one(), mu, sigma)])
    }

    pub fn components(&self) -> &[Component<T>] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Components reordered by ascending σ.
    pub fn sorted_by_sigma(mut self) -> Self {
        self.components
            .sort_by(|a, b| a.sigma.partial_cmp(&b.sigma).unwrap_or(std::cmp::Ordering::Equal));
        self
    }

    pub fn pdf(&self, x: T) -> T {
        self.components
            .iter()
            .map(|c| c.p * norm_pdf((x - c.mu) / c.sigma) / c.sigma)
            .sum()
    }

    pub fn ln_pdf(&self, x: T) -> T {
        let terms: Vec<T> = self
            .components
            .iter()
            .map(|c| {
                let z = (x - c.mu) / c.sigma;
                c.p.ln() - c.sigma.ln() - T::lit(0.5) * (z * z + T::TAU().ln())
            })
            .collect();
        log_sum_exp(&terms)
    }

    pub fn cdf(&self, x: T) -> T {
        self.components
            .iter()
            .map(|c| c.p * norm_cdf((x - c.mu) / c.sigma))
            .sum::<T>()
            .min(T::one())
    }

    /// `1 - cdf(x)` without cancellation in the upper tail.
    pub fn sf(&self, x: T) -> T {
        self.components
            .iter()
            .map(|c| c.p * norm_cdf((c.mu - x) / c.sigma))
            .sum::<T>()
            .min(T::one())
    }

    pub fn mean(&self) -> T {
        self.components.iter().map(|c| c.p * c.mu).sum()
    }

    pub fn max_sigma(&self) -> T {
        self.components.iter().map(|c| c.sigma).fold(T::zero(), T::max)
    }

    /// Inverse CDF by Newton iteration safeguarded with bisection.
    pub fn quantile(&self, p: T) -> Result<T, MixtureError> {
        if !(p > T::zero() && p < T::one()) {
            return Err(MixtureError::ProbabilityOutOfRange { p: p.as_f64() });
        }
        let half = T::lit(0.5);
        // Work on whichever tail keeps the target representable.
        let upper = p > half;
        let target = if upper { T::one() - p } else { p };
        let f = |x: T| {
            if upper {
                (target - self.sf(x), self.pdf(x))
            } else {
                (self.cdf(x) - target, self.pdf(x))
            }
        };
        let center = self.mean();
        let step = self.max_sigma();
        let mut lo = center - step;
        let mut hi = center + step;
        let mut width = step;
        while f(lo).0 > T::zero() {
            width = width * T::lit(2.0);
            lo = center - width;
        }
        width = step;
        while f(hi).0 < T::zero() {
            width = width * T::lit(2.0);
            hi = center + width;
        }
        let xtol = T::epsilon() * T::lit(4.0) * (T::one() + center.abs().max(hi.abs()).max(lo.abs()));
        newton_bisect(f, lo, hi, xtol, 200).map_err(|source| MixtureError::Quantile { p: p.as_f64(), source })
    }

    /// `ln Σ p_i exp(μ_i s + s² σ_i² / 2)`, always finite for finite `s`.
    pub fn ln_mgf(&self, s: T) -> T {
        let terms: Vec<T> = self
            .components
            .iter()
            .map(|c| c.p.ln() + c.mu * s + s * s * c.sigma * c.sigma / T::lit(2.0))
            .collect();
        log_sum_exp(&terms)
    }

    pub fn mgf(&self, s: T) -> Result<T, MixtureError> {
        let v = self.ln_mgf(s).exp();
        if v.is_finite() {
            Ok(v)
        } else {
            Err(MixtureError::Overflow { s: s.as_f64() })
        }
    }

    /// Closed-form central moments about the mixture mean.
    pub fn moments(&self) -> Moments<T> {
        let mean = self.mean();
        let (three, six) = (T::lit(3.0), T::lit(6.0));
        let (mut m2, mut m3, mut m4) = (T::zero(), T::zero(), T::zero());
        for c in &self.components {
            let d = c.mu - mean;
            let s2 = c.sigma * c.sigma;
            m2 = m2 + c.p * (d * d + s2);
            m3 = m3 + c.p * (d * d * d + three * d * s2);
            m4 = m4 + c.p * (d * d * d * d + six * d * d * s2 + three * s2 * s2);
        }
        Moments {
            mean,
            sd: m2.sqrt(),
            skewness: m3 / m2.powf(T::lit(1.5)),
            kurtosis: m4 / (m2 * m2),
        }
    }

    /// Draws one value: pick a component by weight, then a Gaussian draw.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = self.components.last().expect("non-empty");
        for c in &self.components {
            acc += c.p.as_f64();
            if u < acc {
                chosen = c;
                break;
            }
        }
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        chosen.mu + chosen.sigma * T::lit(z)
    }

    /// `n` i.i.d. draws, reproducible for a fixed seed.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<T> {
        let mut rng = seeded(seed);
        (0..n).map(|_| self.draw(&mut rng)).collect()
    }

    pub fn log_likelihood(&self, data: &[T]) -> T {
        data.iter().map(|&x| self.ln_pdf(x)).sum()
    }
}
