//! Rainbow option pricing with Gaussian-mixture margins and copula dependence.

pub mod copula;
mod error;
pub mod fitgof;
pub mod market_data;
pub mod mixture;
pub mod optim;
pub mod pricing;
pub mod quad;
pub mod report;
pub mod reproduce;
pub mod risk_neutral;
pub mod rng;
pub mod scalar;
pub mod special;

pub use error::Error;
pub use scalar::Scalar;

pub type GaussianMixture64 = mixture::GaussianMixture<f64>;
pub type GaussianMixture32 = mixture::GaussianMixture<f32>;
pub type RiskNeutralMixture64 = risk_neutral::RiskNeutralMixture<f64>;
pub type RiskNeutralMixture32 = risk_neutral::RiskNeutralMixture<f32>;
pub type CopulaModel64 = copula::CopulaModel<f64>;
pub type CopulaModel32 = copula::CopulaModel<f32>;
pub type MarketModel64 = pricing::MarketModel<f64>;
pub type MarketModel32 = pricing::MarketModel<f32>;
