use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] rainbow::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl CliError {
    pub fn module(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.module(),
            _ => "cli",
        }
    }

    pub fn record(&self) -> ErrorRecord {
        ErrorRecord { error: self.to_string(), module: self.module() }
    }
}

/// What a failed run prints instead of a report.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub error: String,
    pub module: &'static str,
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

macro_rules! core_from {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Core(e.into())
            }
        })*
    };
}

core_from!(
    rainbow::market_data::MarketDataError,
    rainbow::mixture::MixtureError,
    rainbow::risk_neutral::RiskNeutralError,
    rainbow::copula::CopulaError,
    rainbow::fitgof::FitError,
    rainbow::pricing::PricingError
);
