use thiserror::Error;

use crate::copula::CopulaError;
use crate::fitgof::FitError;
use crate::market_data::MarketDataError;
use crate::mixture::MixtureError;
use crate::pricing::PricingError;
use crate::risk_neutral::RiskNeutralError;

/// Any failure from the library, tagged by the module that raised it.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    MarketData(#[from] MarketDataError),
    #[error(transparent)]
    Mixture(#[from] MixtureError),
    #[error(transparent)]
    RiskNeutral(#[from] RiskNeutralError),
    #[error(transparent)]
    Copula(#[from] CopulaError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Pricing(#[from] PricingError),
}

impl Error {
    pub fn module(&self) -> &'static str {
        match self {
            Error::MarketData(_) => "market_data",
            Error::Mixture(_) => "mixture",
            Error::RiskNeutral(_) => "risk_neutral",
            Error::Copula(_) => "copula",
            Error::Fit(_) => "fitgof",
            Error::Pricing(_) => "pricing",
        }
    }
}
