//! Bivariate rainbow options: spread, call on max, call on min and digital.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::copula::{CopulaError, CopulaModel};
use crate::mixture::{GaussianMixture, MixtureError};
use crate::quad::{integrate, QuadConfig, QuadError};
use crate::report::sig6;
use crate::risk_neutral::RiskNeutralMixture;
use crate::rng::stream;
use crate::scalar::Scalar;

/// Smallest Monte Carlo sample accepted.
pub const MIN_SAMPLES: usize = 100;
/// Paths per random stream.
pub const SHARD_SIZE: usize = 4096;
/// Upper integration limit sits at this risk-neutral quantile level.
const TAIL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum PricingError {
    #[error("invalid market model: {0}")]
    Model(String),
    #[error("invalid option: {0}")]
    Spec(String),
    #[error("need at least {min} samples, got {n}")]
    TooFewSamples { n: usize, min: usize },
    #[error("quantile of asset {asset} at u = {u}: {source}")]
    Quantile { asset: usize, u: f64, source: MixtureError },
    #[error("{kind} has no {method} pricer")]
    Unsupported { kind: OptionKind, method: Method },
    #[error(transparent)]
    Copula(#[from] CopulaError),
    #[error(transparent)]
    Mixture(#[from] MixtureError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Asset<T> {
    pub spot: T,
    pub rn: RiskNeutralMixture<T>,
}

/// One or two assets joined by a copula, priced over `tau` periods at rate `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MarketModel<T> {
    pub assets: Vec<Asset<T>>,
    pub copula: CopulaModel<T>,
    pub r: T,
    pub tau: T,
}

impl<T: Scalar> MarketModel<T> {
    pub fn new(assets: Vec<Asset<T>>, copula: CopulaModel<T>, r: T) -> Result<Self, PricingError> {
        let m = MarketModel { assets, copula, r, tau: T::one() };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), PricingError> {
        if !(1..=2).contains(&self.assets.len()) {
            return Err(PricingError::Model(format!("one or two assets supported, got {}", self.assets.len())));
        }
        if self.tau != T::one() {
            return Err(PricingError::Model("only one-period maturities are supported".into()));
        }
        if !self.r.is_finite() {
            return Err(PricingError::Model("rate must be finite".into()));
        }
        for (i, a) in self.assets.iter().enumerate() {
            if !(a.spot > T::zero() && a.spot.is_finite()) {
                return Err(PricingError::Model(format!("spot of asset {i} must be positive, got {}", a.spot)));
            }
            if (a.rn.r - self.r).abs() > T::tol(1e-12) {
                return Err(PricingError::Model(format!("asset {i} was risk-neutralised at r = {}, model uses {}", a.rn.r, self.r)));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.assets.len()
    }

    pub fn discount(&self) -> T {
        (-self.r * self.tau).exp()
    }

    /// `F*_i` at the log-return that takes asset `i` to level `x`.
    fn cdf_at_level(&self, i: usize, x: T) -> T {
        let a = &self.assets[i];
        if x <= T::zero() {
            return T::zero();
        }
        a.rn.cdf((x / a.spot).ln())
    }

    fn upper_level(&self) -> Result<T, PricingError> {
        let mut hi = T::zero();
        for a in &self.assets {
            let q = a.rn.to_mixture()?.quantile(T::one() - T::lit(TAIL))?;
            hi = hi.max(a.spot * q.exp());
        }
        Ok(hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptionKind {
    Spread,
    CallMax,
    CallMin,
    Digital,
}

impl OptionKind {
    pub const ALL: [OptionKind; 4] = [OptionKind::CallMax, OptionKind::CallMin, OptionKind::Digital, OptionKind::Spread];

    pub fn tag(self) -> &'static str {
        match self {
            OptionKind::Spread => "spread",
            OptionKind::CallMax => "call_max",
            OptionKind::CallMin => "call_min",
            OptionKind::Digital => "digital",
        }
    }
}

impl std::fmt::Display for OptionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for OptionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "spread" => Ok(OptionKind::Spread),
            "call_max" | "max" => Ok(OptionKind::CallMax),
            "call_min" | "min" => Ok(OptionKind::CallMin),
            "digital" => Ok(OptionKind::Digital),
            other => Err(format!("unknown option kind `{other}`")),
        }
    }
}

/// Payoffs: spread `(S₂ - S₁ - K)⁺`, `(max S - K)⁺`, `(min S - K)⁺`, digital `1{S₁ > K₁, S₂ > K₂}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct OptionSpec<T> {
    pub kind: OptionKind,
    pub strikes: Vec<T>,
}

impl<T: Scalar> OptionSpec<T> {
    pub fn new(kind: OptionKind, strikes: Vec<T>) -> Result<Self, PricingError> {
        if strikes.is_empty() || strikes.iter().any(|k| !(*k > T::zero() && k.is_finite())) {
            return Err(PricingError::Spec(format!("strikes must be positive and finite, got {strikes:?}")));
        }
        if kind != OptionKind::Digital && strikes.len() != 1 {
            return Err(PricingError::Spec(format!("{kind} takes one strike, got {}", strikes.len())));
        }
        Ok(OptionSpec { kind, strikes })
    }

    pub fn spread(k: T) -> Result<Self, PricingError> {
        Self::new(OptionKind::Spread, vec![k])
    }

    pub fn call_max(k: T) -> Result<Self, PricingError> {
        Self::new(OptionKind::CallMax, vec![k])
    }

    pub fn call_min(k: T) -> Result<Self, PricingError> {
        Self::new(OptionKind::CallMin, vec![k])
    }

    pub fn digital(ks: Vec<T>) -> Result<Self, PricingError> {
        Self::new(OptionKind::Digital, ks)
    }

    fn check_against(&self, m: &MarketModel<T>) -> Result<(), PricingError> {
        let d = m.dim();
        match self.kind {
            OptionKind::Digital if self.strikes.len() != d => {
                Err(PricingError::Spec(format!("digital needs one strike per asset ({d}), got {}", self.strikes.len())))
            }
            OptionKind::Spread if d != 2 => Err(PricingError::Spec("spread needs two assets".into())),
            _ => Ok(()),
        }
    }

    /// Payoff at terminal levels `s`.
    pub fn payoff(&self, s: &[T]) -> T {
        let zero = T::zero();
        let k = self.strikes[0];
        match self.kind {
            OptionKind::Spread => (s[1] - s[0] - k).max(zero),
            OptionKind::CallMax => (s.iter().copied().fold(T::neg_infinity(), T::max) - k).max(zero),
            OptionKind::CallMin => (s.iter().copied().fold(T::infinity(), T::min) - k).max(zero),
            OptionKind::Digital => {
                if s.iter().zip(&self.strikes).all(|(x, k)| x > k) {
                    T::one()
                } else {
                    zero
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mc,
    Quadrature,
    ClosedForm,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Mc => "mc",
            Method::Quadrature => "quadrature",
            Method::ClosedForm => "closed_form",
        })
    }
}

/// Stream `j` of the seed simulates paths `[j·size, min((j+1)·size, n))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardPlan {
    pub shard_size: usize,
    pub shards: usize,
}

impl ShardPlan {
    pub fn for_samples(n: usize) -> Self {
        ShardPlan { shard_size: SHARD_SIZE, shards: n.div_ceil(SHARD_SIZE) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PricingResult<T> {
    pub price: T,
    pub std_error: T,
    pub n: usize,
    pub seed: Option<u64>,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shards: Option<ShardPlan>,
}

/// Simulated terminal levels, row-major with `dim` columns.
#[derive(Debug, Clone)]
pub struct Scenarios<T> {
    levels: Vec<T>,
    dim: usize,
    discount: T,
    seed: u64,
    plan: ShardPlan,
}

/// Draws `n` joint terminal levels `S_i e^{x_i}`, `x_i = F*_i⁻¹(u_i)`.
pub fn simulate<T: Scalar>(m: &MarketModel<T>, n: usize, seed: u64) -> Result<Scenarios<T>, PricingError> {
    m.validate()?;
    if n < MIN_SAMPLES {
        return Err(PricingError::TooFewSamples { n, min: MIN_SAMPLES });
    }
    let margins: Vec<GaussianMixture<T>> = m.assets.iter().map(|a| a.rn.to_mixture()).collect::<Result<_, _>>()?;
    let d = m.dim();
    let plan = ShardPlan::for_samples(n);
    let shards: Vec<Vec<T>> = (0..plan.shards)
        .into_par_iter()
        .map(|j| -> Result<Vec<T>, PricingError> {
            let mut rng = stream(seed, j as u64);
            let len = plan.shard_size.min(n - j * plan.shard_size);
            let mut out = Vec::with_capacity(len * d);
            for _ in 0..len {
                let u = if d == 1 {
                    let (u, _) = CopulaModel::<T>::independence().draw(&mut rng)?;
                    [u, T::zero()]
                } else {
                    let (u, v) = m.copula.draw(&mut rng)?;
                    [u, v]
                };
                for (i, (mix, a)) in margins.iter().zip(&m.assets).enumerate() {
                    let x = mix.quantile(u[i]).map_err(|source| PricingError::Quantile { asset: i, u: u[i].as_f64(), source })?;
                    out.push(a.spot * x.exp());
                }
            }
            Ok(out)
        })
        .collect::<Result<_, _>>()?;
    Ok(Scenarios { levels: shards.concat(), dim: d, discount: m.discount(), seed, plan })
}

impl<T: Scalar> Scenarios<T> {
    pub fn len(&self) -> usize {
        self.levels.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn paths(&self) -> impl Iterator<Item = &[T]> {
        self.levels.chunks_exact(self.dim)
    }

    /// Discounted sample mean of `f` over the paths with its standard error.
    pub fn discounted_mean(&self, f: impl Fn(&[T]) -> T) -> PricingResult<T> {
        let n = self.len();
        let nn = T::from_usize(n).expect("count");
        // two passes in path order keep the result independent of threading
        let mean = self.paths().map(&f).fold(T::zero(), |a, x| a + x) / nn;
        let ss = self.paths().map(|p| (f(p) - mean).powi(2)).fold(T::zero(), |a, x| a + x);
        let sd = (ss / (nn - T::one())).sqrt();
        PricingResult {
            price: self.discount * mean,
            std_error: self.discount * sd / nn.sqrt(),
            n,
            seed: Some(self.seed),
            method: Method::Mc,
            shards: Some(self.plan),
        }
    }

    pub fn price(&self, o: &OptionSpec<T>) -> Result<PricingResult<T>, PricingError> {
        if o.kind == OptionKind::Spread && self.dim != 2 {
            return Err(PricingError::Spec("spread needs two assets".into()));
        }
        if o.kind == OptionKind::Digital && o.strikes.len() != self.dim {
            return Err(PricingError::Spec("digital needs one strike per asset".into()));
        }
        Ok(self.discounted_mean(|s| o.payoff(s)))
    }
}

/// Discounted Monte Carlo mean of the payoff over `n` copula draws.
pub fn price_mc<T: Scalar>(m: &MarketModel<T>, o: &OptionSpec<T>, n: usize, seed: u64) -> Result<PricingResult<T>, PricingError> {
    o.check_against(m)?;
    simulate(m, n, seed)?.price(o)
}

fn deterministic<T: Scalar>(price: T, method: Method) -> PricingResult<T> {
    PricingResult { price, std_error: T::zero(), n: 0, seed: None, method, shards: None }
}

/// One-dimensional integral of the exceedance probability over `[K, X_max]`.
pub fn price_quadrature<T: Scalar>(m: &MarketModel<T>, o: &OptionSpec<T>) -> Result<PricingResult<T>, PricingError> {
    m.validate()?;
    o.check_against(m)?;
    if m.dim() != 2 {
        return Err(PricingError::Model("quadrature pricing needs two assets".into()));
    }
    let k = o.strikes[0];
    let c = &m.copula;
    let f = |i: usize, x: T| m.cdf_at_level(i, x);
    let integrand = |x: T| -> T {
        match o.kind {
            OptionKind::Spread => {
                let f1 = f(0, x - k);
                f1 - c.cdf(f1, f(1, x))
            }
            OptionKind::CallMax => T::one() - c.cdf(f(0, x), f(1, x)),
            OptionKind::CallMin => c.survival_cdf(&[T::one() - f(0, x), T::one() - f(1, x)]).unwrap_or(T::nan()),
            OptionKind::Digital => unreachable!(),
        }
    };
    if o.kind == OptionKind::Digital {
        return Err(PricingError::Unsupported { kind: o.kind, method: Method::Quadrature });
    }
    let hi = m.upper_level()?;
    if hi <= k {
        return Ok(deterministic(T::zero(), Method::Quadrature));
    }
    // kinks of the integrand at the spots help the subdivision
    let mut cuts = vec![k];
    for a in &m.assets {
        for level in [a.spot, a.spot + k] {
            if level > k && level < hi {
                cuts.push(level);
            }
        }
    }
    cuts.push(hi);
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    cuts.dedup();
    let abs_tol = 1e-9_f64.max(T::epsilon().as_f64() * 64.0 * hi.as_f64());
    let cfg = QuadConfig { abs_tol, rel_tol: 1e-12, max_intervals: 2000 };
    let mut total = T::zero();
    for w in cuts.windows(2) {
        total = total + integrate(integrand, w[0], w[1], &cfg)?.value;
    }
    Ok(deterministic(m.discount() * total.max(T::zero()), Method::Quadrature))
}

/// `e^{-rτ} C̄(1 - F*₁(ln k₁), 1 - F*₂(ln k₂))` with `k_i = K_i / S_i`.
pub fn price_digital_closed<T: Scalar>(m: &MarketModel<T>, o: &OptionSpec<T>) -> Result<PricingResult<T>, PricingError> {
    m.validate()?;
    o.check_against(m)?;
    if o.kind != OptionKind::Digital {
        return Err(PricingError::Unsupported { kind: o.kind, method: Method::ClosedForm });
    }
    let tails: Vec<T> = o.strikes.iter().enumerate().map(|(i, &k)| T::one() - m.cdf_at_level(i, k)).collect();
    let joint = if m.dim() == 1 { tails[0] } else { m.copula.survival_cdf(&tails)? };
    Ok(deterministic(m.discount() * joint, Method::ClosedForm))
}

/// The deterministic reference: closed form for the digital, quadrature otherwise.
pub fn price_reference<T: Scalar>(m: &MarketModel<T>, o: &OptionSpec<T>) -> Result<PricingResult<T>, PricingError> {
    match o.kind {
        OptionKind::Digital => price_digital_closed(m, o),
        _ => price_quadrature(m, o),
    }
}

/// Moneyness rows by copula columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PriceTable<T> {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<PriceRow<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PriceRow<T> {
    pub label: String,
    pub cells: Vec<Option<T>>,
}

impl<T: Scalar> PriceTable<T> {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.label);
            for c in &r.cells {
                out.push(',');
                out.push_str(&c.map_or("NA".to_string(), |x| sig6(x.as_f64())));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests;
