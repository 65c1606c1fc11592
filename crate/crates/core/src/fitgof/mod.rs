//! Copula estimation, Cramér–von Mises goodness of fit and model selection.

mod fit;
mod gof;
mod select;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::copula::{CopulaError, Family};
use crate::mixture::MixtureError;
use crate::scalar::Scalar;

pub use fit::{fit_copula, fit_ifm, CopulaFit, IfmResult, MIN_IFM_LEN};
pub use gof::{bootstrap_pvalue, cvm_statistic, empirical_at_points, EmpiricalCopula, GofReport, MIN_BOOTSTRAP};
pub use select::{select_copula, FamilyOutcome, FamilySummary, MarginMethod, Rankings, SelectionConfig, SelectionReport};

#[derive(Debug, Error)]
pub enum FitError {
    #[error("need at least {min} observations, got {n}")]
    TooFew { n: usize, min: usize },
    #[error("column {column} is constant")]
    ConstantColumn { column: usize },
    #[error("ragged input: column {column} has {len} rows, expected {expected}")]
    Ragged { column: usize, len: usize, expected: usize },
    #[error("expected {expected} columns, got {got}")]
    Columns { expected: usize, got: usize },
    #[error("pseudo-observation {value} in column {column} is outside (0, 1)")]
    OutOfUnit { column: usize, value: f64 },
    #[error("{0} cannot be estimated by maximum likelihood")]
    NotEstimable(Family),
    #[error("log-likelihood of {family} is not finite at the optimum")]
    NonFinite { family: Family },
    #[error("bootstrap needs at least {min} replicates, got {b}")]
    TooFewReplicates { b: usize, min: usize },
    #[error("{failed} of {b} bootstrap replicates failed")]
    BootstrapFailures { failed: usize, b: usize },
    #[error("model selection needs at least two families, got {0}")]
    TooFewFamilies(usize),
    #[error(transparent)]
    Copula(#[from] CopulaError),
    #[error(transparent)]
    Mixture(#[from] MixtureError),
}

/// Points in the unit cube, one column per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoObservations<T> {
    columns: Vec<Vec<T>>,
}

impl<T: Scalar> PseudoObservations<T> {
    /// Wraps values already in `(0, 1)`, e.g. fitted margins evaluated at the data.
    pub fn new(columns: Vec<Vec<T>>) -> Result<Self, FitError> {
        let n = check_shape(&columns)?;
        if n < 1 {
            return Err(FitError::TooFew { n, min: 1 });
        }
        for (j, col) in columns.iter().enumerate() {
            if let Some(&bad) = col.iter().find(|&&x| !(x > T::zero() && x < T::one())) {
                return Err(FitError::OutOfUnit { column: j, value: bad.as_f64() });
            }
        }
        Ok(PseudoObservations { columns })
    }

    pub fn from_pairs(pairs: &[(T, T)]) -> Result<Self, FitError> {
        Self::new(vec![pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect()])
    }

    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[T] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<T>] {
        &self.columns
    }

    /// First two coordinates as pairs.
    pub fn pairs(&self) -> Vec<(T, T)> {
        self.columns[0].iter().copied().zip(self.columns[1].iter().copied()).collect()
    }

    fn require_bivariate(&self) -> Result<(), FitError> {
        if self.dim() != 2 {
            return Err(FitError::Columns { expected: 2, got: self.dim() });
        }
        Ok(())
    }
}

fn check_shape<T>(columns: &[Vec<T>]) -> Result<usize, FitError> {
    let n = columns.first().map_or(0, Vec::len);
    for (j, c) in columns.iter().enumerate() {
        if c.len() != n {
            return Err(FitError::Ragged { column: j, len: c.len(), expected: n });
        }
    }
    Ok(n)
}

/// Rank transform `U_ij = rank(X_ij) / (n + 1)`, ties sharing their average rank.
pub fn pseudo_observations<T: Scalar>(columns: &[Vec<T>]) -> Result<PseudoObservations<T>, FitError> {
    let n = check_shape(columns)?;
    if columns.is_empty() {
        return Err(FitError::Columns { expected: 1, got: 0 });
    }
    if n < 2 {
        return Err(FitError::TooFew { n, min: 2 });
    }
    let denom = T::from_usize(n + 1).expect("count");
    let mut out = Vec::with_capacity(columns.len());
    for (j, col) in columns.iter().enumerate() {
        if col.iter().any(|x| x.is_nan()) {
            return Err(FitError::OutOfUnit { column: j, value: f64::NAN });
        }
        let ranks = average_ranks(col);
        if ranks.iter().all(|&r| r == ranks[0]) {
            return Err(FitError::ConstantColumn { column: j });
        }
        out.push(ranks.into_iter().map(|r| T::lit(r) / denom).collect());
    }
    Ok(PseudoObservations { columns: out })
}

/// 1-based ranks, ties averaged.
fn average_ranks<T: Scalar>(xs: &[T]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("no NaN"));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// `(AIC, BIC) = (2m - 2 lnL, m ln n - 2 lnL)`.
pub fn information_criteria<T: Scalar>(loglik: T, m: usize, n: usize) -> (T, T) {
    let two = T::lit(2.0);
    let m = T::from_usize(m).expect("count");
    let n = T::from_usize(n).expect("count");
    (two * m - two * loglik, m * n.ln() - two * loglik)
}
